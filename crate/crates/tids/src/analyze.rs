//! Closed-form reports.

use std::fmt::Write as _;

use anyhow::anyhow;
use clap::{Subcommand, ValueEnum};

use tids_core::analysis::{
    availability, bribery_cost, bribery_cost_for, cost_analytic, optimal_sybil_count, optimal_sybil_fraction,
    sybil_expected_deposit_min, sybil_min_deposit, AvailabilityParams, CostMode,
};
use tids_core::contracts::LayerAssignment;
use tids_core::ledger::GasSchedule;

use crate::config::{format_ether, parse_ether};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(alias = "light")]
    Lightweight,
    #[value(alias = "heavy")]
    Heavyweight,
    Strawman,
}

impl From<ModeArg> for CostMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Lightweight => CostMode::Lightweight,
            ModeArg::Heavyweight => CostMode::Heavyweight,
            ModeArg::Strawman => CostMode::Strawman,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AssignmentArg {
    Cyclic,
    Disjoint,
}

impl From<AssignmentArg> for LayerAssignment {
    fn from(a: AssignmentArg) -> Self {
        match a {
            AssignmentArg::Cyclic => LayerAssignment::Cyclic,
            AssignmentArg::Disjoint => LayerAssignment::Disjoint,
        }
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Analysis {
    /// Probability that at least t of n shares survive.
    Availability { l: u32, t: u32, n: u32, a_t: f64 },
    /// Gas and USD of one service with n mailmen.
    Cost { mode: ModeArg, n: u32 },
    /// Optimal Sybil fraction and the deposit it puts at stake.
    Sybil {
        l: u32,
        v: u32,
        d: f64,
        /// With --n, also report the minimum expected deposit per t captured shares.
        #[arg(long)]
        t: Option<u32>,
        #[arg(long)]
        n: Option<u32>,
    },
    /// Cheapest bribery that recovers the key, in ether.
    Bribery {
        t: u32,
        l: u32,
        d: String,
        /// Also price a concrete layout with this many shares.
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, value_enum, default_value = "cyclic")]
        assignment: AssignmentArg,
    },
}

pub fn analyze(what: &Analysis, gas: &GasSchedule) -> anyhow::Result<String> {
    let mut s = String::new();
    match *what {
        Analysis::Availability { l, t, n, a_t } => {
            let a = availability(l, t, n, a_t)?;
            let p = AvailabilityParams { l, t, n, a_t };
            let _ = writeln!(s, "availability {a:.6}");
            let _ = writeln!(s, "exact        {a:?}");
            let _ = writeln!(s, "share loss   {:?}", p.loss());
            let nines = if a >= 1.0 { f64::INFINITY } else { -(1.0 - a).log10() };
            let _ = writeln!(s, "nines        {nines:.2}");
        }
        Analysis::Cost { mode, n } => {
            let c = cost_analytic(mode.into(), n, gas)?;
            let _ = writeln!(s, "{:?}, n = {n}", c.mode);
            for line in &c.lines {
                let _ = writeln!(
                    s,
                    "  {:<24} {:>3} x {:>10} gas  {:>8}",
                    line.function,
                    line.calls,
                    line.gas,
                    line.usd.to_string()
                );
            }
            let _ = writeln!(s, "total        {} gas  {}", c.service_gas, c.service_usd);
            let _ = writeln!(s, "exact USD    {:.6}", c.service_usd.to_f64());
            let _ = writeln!(
                s,
                "formula      {} + {} n gas  =  {:.4} + {:.4} n USD",
                c.fixed_gas,
                c.per_mailman_gas,
                c.fixed_usd.to_f64(),
                c.per_mailman_usd.to_f64()
            );
        }
        Analysis::Sybil { l, v, d, t, n } => {
            if d.is_nan() || d <= 0.0 {
                return Err(anyhow!("d must be positive"));
            }
            let p = optimal_sybil_fraction(l)?;
            let _ = writeln!(s, "p_M*         {p:.6}  ({}/{l})", l - 1);
            let _ = writeln!(s, "x*           {}", optimal_sybil_count(l, v)?);
            let _ = writeln!(s, "min deposit  {:?}", sybil_min_deposit(l, v as f64, d));
            match (t, n) {
                (Some(t), Some(n)) => {
                    let m = sybil_expected_deposit_min(l, v as f64, d, t, n)?;
                    let _ = writeln!(s, "min expected deposit per t captured shares  {m:?}");
                }
                (None, None) => {}
                _ => return Err(anyhow!("--t and --n go together")),
            }
        }
        Analysis::Bribery { t, l, ref d, n, assignment } => {
            let d = parse_ether(d).map_err(|e| anyhow!(e))?;
            if t == 0 || l == 0 || d == 0 {
                return Err(anyhow!("t, l and d must be positive"));
            }
            let _ = writeln!(s, "t*l*d        {}", format_ether(bribery_cost(t, l, d)));
            if let Some(n) = n {
                let a: LayerAssignment = assignment.into();
                if t > n || (a == LayerAssignment::Cyclic && l > n) {
                    return Err(anyhow!("layout needs t <= n and, for cyclic, l <= n"));
                }
                let _ = writeln!(
                    s,
                    "{:<12} {}",
                    format!("{assignment:?}").to_lowercase(),
                    format_ether(bribery_cost_for(a, t, l, n, d))
                );
            }
        }
    }
    Ok(s)
}
