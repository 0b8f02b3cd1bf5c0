//! Gas schedule override files.
//!
//! ```toml
//! gas_to_ether = "1.67e-8"
//! ether_to_usd = "175"
//!
//! [gas]
//! revealPrivkey = 90689
//! "deploy C_sw" = 616666
//! ```
//!
//! Entries not listed keep their default cost.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::Deserialize;

use tids_core::ledger::{parse_ratio, GasSchedule};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GasFile {
    gas_to_ether: Option<String>,
    ether_to_usd: Option<String>,
    #[serde(default)]
    gas: BTreeMap<String, u64>,
}

pub fn parse_gas_schedule(src: &str) -> anyhow::Result<GasSchedule> {
    let file: GasFile = toml::from_str(src)?;
    let defaults = GasSchedule::default();
    for name in file.gas.keys() {
        if defaults.gas(name).is_err() {
            return Err(anyhow!("unknown function `{name}`"));
        }
    }
    let rate = |s: &Option<String>, what: &str| {
        s.as_deref().map(|s| parse_ratio(s).ok_or_else(|| anyhow!("{what} `{s}` is not a number"))).transpose()
    };
    let gas_to_ether = rate(&file.gas_to_ether, "gas_to_ether")?;
    let ether_to_usd = rate(&file.ether_to_usd, "ether_to_usd")?;
    Ok(GasSchedule::with_overrides(file.gas, gas_to_ether, ether_to_usd)?)
}

pub fn load_gas_schedule(path: &Path) -> anyhow::Result<GasSchedule> {
    let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_gas_schedule(&src).with_context(|| format!("gas schedule {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tids_core::ledger::fns;

    #[test]
    fn overrides_keep_other_entries() {
        let s = parse_gas_schedule("ether_to_usd = \"350\"\n[gas]\nrevealPrivkey = 100000\n").unwrap();
        assert_eq!(s.c_pk(), 100_000);
        assert_eq!(s.gas(fns::NEW_SERVICE).unwrap(), 83_121);
        assert_eq!(s.usd(1_000_000).to_f64(), 2.0 * GasSchedule::default().usd(1_000_000).to_f64());
    }

    #[test]
    fn rejects_unknown_and_zero() {
        assert!(parse_gas_schedule("[gas]\nfrobnicate = 1\n").is_err());
        assert!(parse_gas_schedule("[gas]\nnewService = 0\n").is_err());
        assert!(parse_gas_schedule("gas_to_ether = \"0\"\n").is_err());
    }
}
