//! Scenario configuration files.
//!
//! A config is a TOML document. Every key is optional; missing keys take the
//! defaults of [`Scenario::default`]. Errors carry the line of the offending
//! key.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use tids_core::actors::{Mode, Policy, Scenario};
use tids_core::adversary::{BriberyParams, TargetOrder};
use tids_core::contracts::LayerAssignment;
use tids_core::ledger::{parse_ratio, Amount, Epoch, GasSchedule, TimeFrame, WEI_PER_ETHER};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub file: String,
    /// 1-based line, when the error can be pinned to one.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.file, line, self.message),
            None => write!(f, "{}: {}", self.file, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// An ether amount written as a decimal string (`"1.5"`), a fraction
/// (`"3/2"`) or a plain TOML number.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ether(pub Amount);

impl<'de> Deserialize<'de> for Ether {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Float(f64),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Int(v) => v.to_string(),
            Raw::Float(v) => format!("{v}"),
            Raw::Text(s) => s,
        };
        parse_ether(&text).map(Ether).map_err(serde::de::Error::custom)
    }
}

/// Parses an ether amount into wei. Fractions of a wei are rejected.
pub fn parse_ether(text: &str) -> Result<Amount, String> {
    let ratio = parse_ratio(text).ok_or_else(|| format!("`{text}` is not a non-negative number"))?;
    let wei = ratio.numer().checked_mul(WEI_PER_ETHER).ok_or_else(|| format!("`{text}` ether overflows"))?;
    if wei % ratio.denom() != 0 {
        return Err(format!("`{text}` ether is not a whole number of wei"));
    }
    Ok(wei / ratio.denom())
}

/// Formats wei as ether without trailing zeros.
pub fn format_ether(wei: Amount) -> String {
    let (int, frac) = (wei / WEI_PER_ETHER, wei % WEI_PER_ETHER);
    if frac == 0 {
        return int.to_string();
    }
    let frac = format!("{frac:018}");
    format!("{int}.{}", frac.trim_end_matches('0'))
}

/// Adversary funds when the config sets no budget: a million ether.
pub const DEFAULT_BUDGET: Amount = 1_000_000 * WEI_PER_ETHER;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PolicyName {
    Honest,
    Premature,
    Absent,
    Fake,
    Briberable,
    Refuses,
    FalseReporter,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MailmanEntry {
    index: Spanned<u32>,
    policy: Spanned<PolicyName>,
    from: Option<Spanned<u8>>,
    threshold: Option<Spanned<Ether>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum OrderName {
    Cheapest,
    Shuffled,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdversary {
    bribe_per_key: Option<Spanned<Ether>>,
    budget: Option<Spanned<Ether>>,
    side_channel: Option<bool>,
    order: Option<OrderName>,
    /// Makes every mailman without an explicit policy sell above this price.
    briberable_threshold: Option<Spanned<Ether>>,
    /// Innocent mailmen in Sybil sweeps; defaults to the pool size.
    sybil_v: Option<Spanned<u32>>,
    /// Adversarial registrations for a single Sybil run.
    sybil_x: Option<Spanned<u32>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    mode: Option<Mode>,
    pool_size: Option<Spanned<u32>>,
    l: Option<Spanned<u32>>,
    t: Option<Spanned<u32>>,
    n: Option<Spanned<u32>>,
    assignment: Option<LayerAssignment>,
    deposit: Option<Spanned<Ether>>,
    remuneration: Option<Spanned<Ether>>,
    availability: Option<Spanned<f64>>,
    drop_prob: Option<Spanned<f64>>,
    metadata_visible: Option<bool>,
    epoch_ticks: Option<Spanned<u32>>,
    timeframe: Option<Spanned<[u32; 2]>>,
    info: Option<String>,
    selection: Option<Spanned<Vec<u32>>>,
    recipient_offline_light: Option<bool>,
    tamper_first_delivery: Option<bool>,
    #[serde(default)]
    mailman: Vec<MailmanEntry>,
    #[serde(default)]
    adversary: RawAdversary,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdversaryConfig {
    pub bribery: BriberyParams,
    pub sybil_v: Option<u32>,
    pub sybil_x: Option<u32>,
}

/// A validated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub adversary: AdversaryConfig,
    pub output_dir: Option<PathBuf>,
}

struct Ctx<'a> {
    file: &'a str,
    src: &'a str,
}

impl Ctx<'_> {
    fn line_of(&self, offset: usize) -> usize {
        self.src[..offset.min(self.src.len())].bytes().filter(|b| *b == b'\n').count() + 1
    }

    fn at(&self, span: Range<usize>, message: impl Into<String>) -> ConfigError {
        ConfigError { file: self.file.into(), line: Some(self.line_of(span.start)), message: message.into() }
    }

    fn plain(&self, message: impl Into<String>) -> ConfigError {
        ConfigError { file: self.file.into(), line: None, message: message.into() }
    }
}

fn value<T: Clone>(s: &Option<Spanned<T>>, default: T) -> T {
    s.as_ref().map(|s| s.get_ref().clone()).unwrap_or(default)
}

/// Span of an optional key, falling back to the start of the file.
fn span<T>(s: &Option<Spanned<T>>) -> Range<usize> {
    s.as_ref().map(|s| s.span()).unwrap_or(0..0)
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let file = path.display().to_string();
        let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
            file: file.clone(),
            line: None,
            message: format!("cannot read: {e}"),
        })?;
        Self::parse(&file, &src)
    }

    /// Parses and validates `src`; `file` only labels error messages.
    pub fn parse(file: &str, src: &str) -> Result<Self, ConfigError> {
        let cx = Ctx { file, src };
        let raw: RawConfig = toml::from_str(src).map_err(|e| match e.span() {
            Some(s) => cx.at(s, e.message()),
            None => cx.plain(e.message()),
        })?;
        Self::build(&cx, raw)
    }

    fn build(cx: &Ctx<'_>, raw: RawConfig) -> Result<Self, ConfigError> {
        let base = Scenario::default();
        let mode = raw.mode.unwrap_or(base.mode);
        let assignment = raw.assignment.unwrap_or(base.assignment);
        let (l, t, n) = (value(&raw.l, base.l), value(&raw.t, base.t), value(&raw.n, base.n));

        if l == 0 {
            return Err(cx.at(span(&raw.l), "l must be at least 1"));
        }
        if n == 0 {
            return Err(cx.at(span(&raw.n), "n must be at least 1"));
        }
        if t == 0 || t > n {
            let at = if raw.t.is_some() { span(&raw.t) } else { span(&raw.n) };
            return Err(cx.at(at, format!("t = {t} must satisfy 1 <= t <= n = {n}")));
        }
        if mode == Mode::Silent && assignment == LayerAssignment::Cyclic && l > n {
            return Err(cx.at(span(&raw.l), format!("cyclic layering needs l = {l} <= n = {n}")));
        }
        let recruits = match mode {
            Mode::Silent => assignment.recruits(n, l),
            Mode::Strawman => n,
        };
        let pool_size = value(&raw.pool_size, base.pool_size.max(recruits));
        if pool_size < recruits {
            return Err(
                cx.at(span(&raw.pool_size), format!("pool_size = {pool_size} cannot supply {recruits} recruits"))
            );
        }
        let unit = |s: &Option<Spanned<f64>>, what: &str, default: f64| {
            let v = value(s, default);
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(cx.at(span(s), format!("{what} = {v} must lie in [0, 1]")))
            }
        };
        let availability = unit(&raw.availability, "availability", base.availability)?;
        let drop_prob = unit(&raw.drop_prob, "drop_prob", base.drop_prob)?;
        let positive = |s: &Option<Spanned<Ether>>, what: &str, default: Amount| {
            let v = s.as_ref().map(|s| s.get_ref().0).unwrap_or(default);
            if v > 0 {
                Ok(v)
            } else {
                Err(cx.at(span(s), format!("{what} must be positive")))
            }
        };
        let deposit = positive(&raw.deposit, "deposit", base.deposit)?;
        let remuneration = positive(&raw.remuneration, "remuneration", base.remuneration)?;
        let epoch_ticks = value(&raw.epoch_ticks, base.epoch_ticks);
        if epoch_ticks == 0 {
            return Err(cx.at(span(&raw.epoch_ticks), "epoch_ticks must be positive"));
        }
        let timeframe =
            raw.timeframe.as_ref().map(|s| TimeFrame::new(s.get_ref()[0], s.get_ref()[1])).unwrap_or(base.timeframe);
        if timeframe == TimeFrame::new(0, 0) {
            return Err(cx.at(span(&raw.timeframe), "timeframe must lie after [0, 0]"));
        }

        let mut policies = BTreeMap::new();
        for entry in &raw.mailman {
            let idx = *entry.index.get_ref();
            if idx >= pool_size {
                return Err(cx.at(entry.index.span(), format!("mailman {idx} is outside the pool of {pool_size}")));
            }
            let from = match &entry.from {
                Some(f) => match Epoch::new(*f.get_ref()) {
                    Some(e) if (Epoch::LIGHTWEIGHT..=Epoch::HEAVYWEIGHT).contains(&e) => e,
                    _ => return Err(cx.at(f.span(), "from must be epoch 1, 2 or 3")),
                },
                None => Epoch::LIGHTWEIGHT,
            };
            let name = *entry.policy.get_ref();
            if entry.from.is_some() && !matches!(name, PolicyName::Absent | PolicyName::Fake) {
                return Err(cx.at(entry.policy.span(), "only absent and fake policies take `from`"));
            }
            let policy = match name {
                PolicyName::Honest => Policy::Honest,
                PolicyName::Premature => Policy::Premature,
                PolicyName::Absent => Policy::Absent { from },
                PolicyName::Fake => Policy::Fake { from },
                PolicyName::Refuses => Policy::Refuses,
                PolicyName::FalseReporter => Policy::FalseReporter,
                PolicyName::Briberable => match &entry.threshold {
                    Some(th) => Policy::Briberable { threshold: th.get_ref().0 },
                    None => return Err(cx.at(entry.policy.span(), "briberable needs a `threshold`")),
                },
            };
            if entry.threshold.is_some() && name != PolicyName::Briberable {
                return Err(cx.at(entry.policy.span(), "only the briberable policy takes `threshold`"));
            }
            if policies.insert(idx, policy).is_some() {
                return Err(cx.at(entry.index.span(), format!("mailman {idx} is listed twice")));
            }
        }
        if let Some(th) = &raw.adversary.briberable_threshold {
            for idx in 0..pool_size {
                policies.entry(idx).or_insert(Policy::Briberable { threshold: th.get_ref().0 });
            }
        }

        let selection = match &raw.selection {
            Some(s) => {
                let sel = s.get_ref().clone();
                if sel.len() != recruits as usize {
                    return Err(cx.at(s.span(), format!("selection lists {} positions, need {recruits}", sel.len())));
                }
                let mut seen = std::collections::BTreeSet::new();
                if let Some(bad) = sel.iter().find(|i| **i >= pool_size || !seen.insert(**i)) {
                    return Err(cx.at(s.span(), format!("selection entry {bad} is out of range or repeated")));
                }
                Some(sel)
            }
            None => None,
        };

        let adv = &raw.adversary;
        let bribe_per_key = adv.bribe_per_key.as_ref().map(|b| b.get_ref().0).unwrap_or(deposit + deposit / 100);
        let budget = adv.budget.as_ref().map(|b| b.get_ref().0).unwrap_or(DEFAULT_BUDGET);
        if bribe_per_key == 0 {
            return Err(cx.at(span(&adv.bribe_per_key), "bribe_per_key must be positive"));
        }
        if let Some(v) = &adv.sybil_v {
            if *v.get_ref() == 0 {
                return Err(cx.at(v.span(), "sybil_v must be positive"));
            }
        }
        let seed = raw.seed.unwrap_or(base.seed);
        let order = match adv.order.unwrap_or(OrderName::Cheapest) {
            OrderName::Cheapest => TargetOrder::Cheapest,
            OrderName::Shuffled => TargetOrder::Shuffled { seed },
        };

        let scenario = Scenario {
            seed,
            mode,
            pool_size,
            l,
            t,
            n,
            assignment,
            deposit,
            remuneration,
            availability,
            policies,
            drop_prob,
            metadata_visible: raw.metadata_visible.unwrap_or(base.metadata_visible),
            epoch_ticks,
            timeframe,
            info: raw.info.map(String::into_bytes).unwrap_or(base.info),
            selection,
            recipient_offline_light: raw.recipient_offline_light.unwrap_or(false),
            tamper_first_delivery: raw.tamper_first_delivery.unwrap_or(false),
            gas: GasSchedule::default(),
        };
        // Anything the checks above missed still surfaces, without a line.
        scenario.validate().map_err(|e| cx.plain(e.to_string()))?;

        Ok(ScenarioConfig {
            scenario,
            adversary: AdversaryConfig {
                bribery: BriberyParams { bribe_per_key, side_channel: adv.side_channel.unwrap_or(true), budget, order },
                sybil_v: adv.sybil_v.as_ref().map(|v| *v.get_ref()),
                sybil_x: adv.sybil_x.as_ref().map(|v| *v.get_ref()),
            },
            output_dir: raw.output.dir,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(src: &str) -> ConfigError {
        ScenarioConfig::parse("c.toml", src).unwrap_err()
    }

    #[test]
    fn empty_config_is_the_default_scenario() {
        let c = ScenarioConfig::parse("c.toml", "").unwrap();
        assert_eq!(c.scenario, Scenario::default());
        assert_eq!(c.adversary.bribery.bribe_per_key, WEI_PER_ETHER + WEI_PER_ETHER / 100);
    }

    #[test]
    fn t_above_n_points_at_t() {
        let e = err("seed = 1\nn = 5\nt = 6\n");
        assert_eq!(e.line, Some(3));
        assert!(e.to_string().starts_with("c.toml:3: t = 6"), "{e}");
    }

    #[test]
    fn syntax_and_unknown_keys_carry_lines() {
        assert_eq!(err("l = 3\nbogus = 1\n").line, Some(2));
        assert_eq!(err("l = 3\nn = \"ten\"\n").line, Some(2));
        assert_eq!(err("[[mailman]]\nindex = 1\npolicy = \"sleepy\"\n").line, Some(3));
    }

    #[test]
    fn policies_and_amounts() {
        let src = r#"
deposit = "0.5"
remuneration = 2
[[mailman]]
index = 4
policy = "absent"
from = 3
[[mailman]]
index = 7
policy = "briberable"
threshold = "3/4"
"#;
        let c = ScenarioConfig::parse("c.toml", src).unwrap();
        assert_eq!(c.scenario.deposit, WEI_PER_ETHER / 2);
        assert_eq!(c.scenario.remuneration, 2 * WEI_PER_ETHER);
        assert_eq!(c.scenario.policies[&4], Policy::Absent { from: Epoch::HEAVYWEIGHT });
        assert_eq!(c.scenario.policies[&7], Policy::Briberable { threshold: 3 * WEI_PER_ETHER / 4 });
    }

    #[test]
    fn bad_policy_fields() {
        assert_eq!(err("[[mailman]]\nindex = 1\npolicy = \"absent\"\nfrom = 5\n").line, Some(4));
        assert_eq!(err("[[mailman]]\nindex = 1\npolicy = \"briberable\"\n").line, Some(3));
        assert_eq!(err("pool_size = 12\n[[mailman]]\nindex = 12\npolicy = \"fake\"\n").line, Some(3));
        let dup = "[[mailman]]\nindex = 1\npolicy = \"fake\"\n[[mailman]]\nindex = 1\npolicy = \"premature\"\n";
        assert_eq!(err(dup).line, Some(5));
    }

    #[test]
    fn ether_round_trip() {
        for s in ["0", "1", "1.5", "0.000000000000000001", "3/8", "1e-3"] {
            let wei = parse_ether(s).unwrap();
            assert_eq!(parse_ether(&format_ether(wei)).unwrap(), wei, "{s}");
        }
        assert!(parse_ether("1e-19").is_err());
        assert!(parse_ether("-1").is_err());
    }
}
