use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use core::fmt;

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{Amount, WEI_PER_ETHER};

/// Stable function identifiers used as gas-schedule keys and in traces.
pub mod fns {
    pub const DEPLOY_SWITCH: &str = "deploy C_sw";
    pub const NEW_SERVICE: &str = "newService";
    pub const DEPLOY_SUPPLEMENTARY: &str = "deploySupplementary";
    pub const REPORT_PREMATURE: &str = "reportPremature";
    pub const RECIPIENT_RECEIPT: &str = "recipientReceipt";
    pub const REVEAL_IDENTITY: &str = "revealIdentity";
    pub const REVEAL_PRIVKEY: &str = "revealPrivkey";
    pub const REPORT_ABSENT: &str = "reportAbsent";
    pub const REPORT_FAKE: &str = "reportFake";
    pub const INFORM_AGENT: &str = "informAgent";

    pub const DEPLOY_AGENT: &str = "deploy C_agent";
    pub const NEW_MAILMAN: &str = "newMailman";
    pub const PROVE_RELATIONSHIP: &str = "proveRelationship";
    pub const WITHDRAW: &str = "withdraw";

    pub const DEPLOY_STRAWMAN: &str = "deploy C_strawman";
    pub const STRAWMAN_NEW_SERVICE: &str = "strawman.newService";
    /// Added to `strawman.newService` once per listed mailman.
    pub const STRAWMAN_PER_MAILMAN: &str = "strawman.newService.perMailman";
    pub const STRAWMAN_REPORT_PREMATURE: &str = "strawman.reportPremature";
    pub const REVEAL_SHARE: &str = "revealShare";
    pub const REVEAL_RECEIPT: &str = "revealReceipt";
}

/// Measured costs of the deployed protocol contracts.
pub const MEASURED_GAS: [(&str, u64); 10] = [
    (fns::DEPLOY_SWITCH, 616_666),
    (fns::NEW_SERVICE, 83_121),
    (fns::DEPLOY_SUPPLEMENTARY, 2_425_356),
    (fns::REPORT_PREMATURE, 65_317),
    (fns::RECIPIENT_RECEIPT, 54_291),
    (fns::REVEAL_IDENTITY, 72_678),
    (fns::REVEAL_PRIVKEY, 90_689),
    (fns::REPORT_ABSENT, 65_343),
    (fns::REPORT_FAKE, 1_280_723),
    (fns::INFORM_AGENT, 57_042),
];

/// Estimates for functions without a measured cost. They only influence
/// balances, never the lightweight/heavyweight cost comparison.
pub const ESTIMATED_GAS: [(&str, u64); 10] = [
    (fns::DEPLOY_AGENT, 3_000_000),
    (fns::NEW_MAILMAN, 150_000),
    (fns::PROVE_RELATIONSHIP, 60_000),
    (fns::WITHDRAW, 35_000),
    (fns::DEPLOY_STRAWMAN, 1_500_000),
    (fns::STRAWMAN_NEW_SERVICE, 83_121),
    (fns::STRAWMAN_PER_MAILMAN, 45_000),
    (fns::STRAWMAN_REPORT_PREMATURE, 65_317),
    (fns::REVEAL_SHARE, 50_000),
    (fns::REVEAL_RECEIPT, 54_291),
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GasError {
    #[error("no gas entry for function `{0}`")]
    UnknownFunction(String),
    #[error("gas entry `{0}` must be positive")]
    NonPositive(String),
    #[error("conversion rate must be positive")]
    BadRate,
}

/// An exact USD amount. Rounded only for display.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Usd(pub Ratio<u128>);

impl Usd {
    pub fn zero() -> Self {
        Usd(Ratio::zero())
    }

    /// Whole cents, rounding half up.
    pub fn cents(&self) -> u128 {
        let scaled = self.0 * Ratio::from_integer(100u128);
        (scaled + Ratio::new(1, 2)).floor().to_integer()
    }

    pub fn to_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// Exact value as `numer/denom`.
    pub fn exact_string(&self) -> String {
        alloc::format!("{}/{}", self.0.numer(), self.0.denom())
    }
}

impl core::ops::Add for Usd {
    type Output = Usd;
    fn add(self, rhs: Usd) -> Usd {
        Usd(self.0 + rhs.0)
    }
}

impl core::iter::Sum for Usd {
    fn sum<I: Iterator<Item = Usd>>(iter: I) -> Usd {
        iter.fold(Usd::zero(), |a, b| a + b)
    }
}

impl fmt::Display for Usd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.cents();
        write!(f, "${}.{:02}", c / 100, c % 100)
    }
}

impl Serialize for Usd {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.exact_string())
    }
}

impl<'de> Deserialize<'de> for Usd {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_ratio(&s).map(Usd).ok_or_else(|| serde::de::Error::custom("expected `numer/denom`"))
    }
}

/// Parses `"a/b"`, `"a"` or a plain decimal such as `"1.67e-8"` into an exact ratio.
pub fn parse_ratio(s: &str) -> Option<Ratio<u128>> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: u128 = n.trim().parse().ok()?;
        let d: u128 = d.trim().parse().ok()?;
        return (d != 0).then(|| Ratio::new(n, d));
    }
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits: String = [int, frac].concat();
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let value: u128 = digits.parse().ok()?;
    let exp = exp - frac.len() as i32;
    let pow = 10u128.checked_pow(exp.unsigned_abs())?;
    Some(if exp >= 0 { Ratio::from_integer(value.checked_mul(pow)?) } else { Ratio::new(value, pow) })
}

/// Flat per-function gas costs plus conversion rates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GasSchedule {
    entries: BTreeMap<String, u64>,
    gas_to_ether: Ratio<u128>,
    ether_to_usd: Ratio<u128>,
}

impl Default for GasSchedule {
    fn default() -> Self {
        let entries = MEASURED_GAS.iter().chain(ESTIMATED_GAS.iter()).map(|(k, v)| (k.to_string(), *v)).collect();
        Self { entries, gas_to_ether: Ratio::new(167, 10_000_000_000), ether_to_usd: Ratio::from_integer(175) }
    }
}

impl GasSchedule {
    /// Default schedule with some entries and rates replaced.
    pub fn with_overrides(
        overrides: impl IntoIterator<Item = (String, u64)>,
        gas_to_ether: Option<Ratio<u128>>,
        ether_to_usd: Option<Ratio<u128>>,
    ) -> Result<Self, GasError> {
        let mut s = Self::default();
        for (k, v) in overrides {
            if v == 0 {
                return Err(GasError::NonPositive(k));
            }
            s.entries.insert(k, v);
        }
        if let Some(r) = gas_to_ether {
            if r.is_zero() {
                return Err(GasError::BadRate);
            }
            s.gas_to_ether = r;
        }
        if let Some(r) = ether_to_usd {
            if r.is_zero() {
                return Err(GasError::BadRate);
            }
            s.ether_to_usd = r;
        }
        Ok(s)
    }

    pub fn gas(&self, function: &str) -> Result<u64, GasError> {
        self.entries.get(function).copied().ok_or_else(|| GasError::UnknownFunction(function.to_string()))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn gas_to_ether(&self) -> Ratio<u128> {
        self.gas_to_ether
    }

    pub fn ether_to_usd(&self) -> Ratio<u128> {
        self.ether_to_usd
    }

    /// Per-identity reveal cost `c_id`.
    pub fn c_id(&self) -> u64 {
        self.entries[fns::REVEAL_IDENTITY]
    }

    /// Per-mailman private-key reveal cost `c_pk`.
    pub fn c_pk(&self) -> u64 {
        self.entries[fns::REVEAL_PRIVKEY]
    }

    /// Fee in wei, rounded down.
    pub fn fee_wei(&self, gas: u64) -> Amount {
        let wei = Ratio::from_integer(gas as u128) * self.gas_to_ether * Ratio::from_integer(WEI_PER_ETHER);
        wei.floor().to_integer()
    }

    pub fn usd(&self, gas: u64) -> Usd {
        Usd(Ratio::from_integer(gas as u128) * self.gas_to_ether * self.ether_to_usd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measured_defaults() {
        let g = GasSchedule::default();
        assert_eq!(g.gas(fns::DEPLOY_SWITCH).unwrap(), 616_666);
        assert_eq!(g.gas(fns::REPORT_FAKE).unwrap(), 1_280_723);
        assert_eq!(g.c_id(), 72_678);
        assert_eq!(g.c_pk(), 90_689);
        assert!(g.gas("nope").is_err());
        assert!(g.entries().all(|(_, v)| v > 0));
    }

    #[test]
    fn fee_and_usd() {
        let g = GasSchedule::default();
        // 16.7 gwei per gas
        assert_eq!(g.fee_wei(1), 16_700_000_000);
        // 54291 * 1.67e-8 * 175 = 0.15866...
        let u = g.usd(54_291);
        assert_eq!(u.0, Ratio::new(54_291u128 * 167 * 175, 10_000_000_000));
        assert_eq!(u.cents(), 16);
        assert_eq!(alloc::format!("{u}"), "$0.16");
    }

    #[test]
    fn cents_round_half_up() {
        assert_eq!(Usd(Ratio::new(5, 1000)).cents(), 1);
        assert_eq!(Usd(Ratio::new(4999, 1_000_000)).cents(), 0);
        assert_eq!(Usd(Ratio::new(1234, 100)).to_string(), "$12.34");
    }

    #[test]
    fn ratio_parsing() {
        assert_eq!(parse_ratio("1.67e-8"), Some(Ratio::new(167, 10_000_000_000)));
        assert_eq!(parse_ratio("175"), Some(Ratio::from_integer(175)));
        assert_eq!(parse_ratio("3/4"), Some(Ratio::new(3, 4)));
        assert_eq!(parse_ratio("0.5"), Some(Ratio::new(1, 2)));
        assert_eq!(parse_ratio("2E3"), Some(Ratio::from_integer(2000)));
        assert_eq!(parse_ratio("x"), None);
        assert_eq!(parse_ratio("1/0"), None);
        assert_eq!(parse_ratio("-1"), None);
    }

    #[test]
    fn overrides_validate() {
        assert!(GasSchedule::with_overrides([("newService".into(), 0)], None, None).is_err());
        assert!(GasSchedule::with_overrides([], Some(Ratio::from_integer(0)), None).is_err());
        let g = GasSchedule::with_overrides([("newService".into(), 5)], None, None).unwrap();
        assert_eq!(g.gas(fns::NEW_SERVICE).unwrap(), 5);
    }
}
