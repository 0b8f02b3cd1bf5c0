//! Parameter sweeps. Points run in parallel and rows come back in axis order.

use anyhow::{anyhow, bail, Context};
use clap::ValueEnum;
use rayon::prelude::*;

use tids_core::actors::{run_scenario, Mode, Policy, Scenario};
use tids_core::adversary::{run_bribery, sybil_sweep, BriberyParams, SybilSweep};
use tids_core::analysis::{
    availability, availability_mc, bribery_cost, bribery_cost_for, cost_analytic, cost_report, optimal_sybil_fraction,
    sybil_expected_deposit, sybil_min_deposit, CostMode,
};
use tids_core::contracts::LayerAssignment;
use tids_core::ledger::{Amount, WEI_PER_ETHER};

use crate::config::{parse_ether, ScenarioConfig};
use crate::table::{Cell, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    /// Shares per service; compares simulated and closed-form gas.
    N,
    /// Mailman availability; closed form, Monte Carlo and full runs.
    #[value(name = "A_T", alias = "a_t")]
    AT,
    /// Layers per onion; availability, bribery and Sybil bounds.
    L,
    /// Adversarial registrations; Sybil capture statistics.
    X,
    /// Bribe per key, in ether; full bribery runs.
    Bribe,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::N => "n",
            Axis::AT => "a_t",
            Axis::L => "l",
            Axis::X => "x",
            Axis::Bribe => "bribe",
        }
    }

    pub fn integral(self) -> bool {
        matches!(self, Axis::N | Axis::L | Axis::X)
    }
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub axis: Axis,
    pub points: Vec<String>,
    /// Monte Carlo trials per point.
    pub trials: u32,
    /// Full simulations per point where the axis supports them.
    pub sim_trials: u32,
}

/// Expands `start:end[:step]` (inclusive) or a comma list. Points keep
/// their written form so ether amounts stay exact.
pub fn parse_range(range: &str, integral: bool) -> anyhow::Result<Vec<String>> {
    let range = range.trim();
    let points: Vec<String> = if range.contains(':') {
        let parts: Vec<&str> = range.split(':').collect();
        let num = |s: &str| s.trim().parse::<f64>().with_context(|| format!("`{s}` in range `{range}`"));
        let (start, end, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1.0),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => bail!("range `{range}` must be start:end or start:end:step"),
        };
        if step.is_nan() || step <= 0.0 || end < start {
            bail!("range `{range}` needs start <= end and a positive step");
        }
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            bail!("range `{range}` has {count} points");
        }
        (0..count)
            .map(|i| {
                let v = start + i as f64 * step;
                // Twelve significant decimals hide accumulated step error.
                let v = (v * 1e12).round() / 1e12;
                format!("{v}")
            })
            .collect()
    } else {
        range.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    };
    if points.is_empty() {
        bail!("range `{range}` is empty");
    }
    if integral {
        for p in &points {
            p.parse::<u32>().map_err(|_| anyhow!("`{p}` is not a non-negative integer"))?;
        }
    }
    Ok(points)
}

fn ether_f64(wei: Amount) -> f64 {
    wei as f64 / WEI_PER_ETHER as f64
}

/// The configured scenario with every mailman honest and always present.
fn honest(sc: &Scenario) -> Scenario {
    Scenario {
        policies: Default::default(),
        availability: 1.0,
        drop_prob: 0.0,
        recipient_offline_light: false,
        tamper_first_delivery: false,
        selection: None,
        ..sc.clone()
    }
}

fn fit_pool(mut sc: Scenario) -> Scenario {
    sc.pool_size = sc.pool_size.max(sc.recruits());
    sc
}

type RowFn<'a> = dyn Fn(&str) -> anyhow::Result<Vec<Cell>> + Sync + 'a;

pub fn sweep(cfg: &ScenarioConfig, opts: &SweepOptions) -> anyhow::Result<Table> {
    if opts.trials == 0 && matches!(opts.axis, Axis::AT | Axis::L | Axis::X) {
        bail!("--trials must be positive for the {} axis", opts.axis.name());
    }
    let (columns, row): (Vec<&'static str>, Box<RowFn>) = match opts.axis {
        Axis::N => (
            vec![
                "n",
                "light_gas",
                "light_gas_analytic",
                "light_usd",
                "heavy_gas",
                "heavy_gas_analytic",
                "heavy_usd",
                "strawman_gas",
                "strawman_gas_analytic",
                "strawman_usd",
            ],
            Box::new(|p| cost_row(cfg, p.parse()?)),
        ),
        Axis::AT => (
            vec!["a_t", "availability", "availability_mc", "availability_sim", "sim_runs"],
            Box::new(|p| availability_row(cfg, p.parse()?, opts)),
        ),
        Axis::L => (
            vec![
                "l",
                "availability",
                "availability_mc",
                "bribery_cost_disjoint",
                "bribery_cost_layout",
                "bribery_spent_sim",
                "bribery_key_recovered",
                "sybil_fraction",
                "sybil_min_deposit",
            ],
            Box::new(|p| layer_row(cfg, p.parse()?, opts)),
        ),
        Axis::X => (
            vec![
                "x",
                "p_m",
                "capture_rate",
                "capture_se",
                "capture_analytic",
                "success_rate",
                "expected_deposit",
                "expected_deposit_analytic",
                "staked",
            ],
            Box::new(|p| sybil_row(cfg, p.parse()?, opts)),
        ),
        Axis::Bribe => (
            vec![
                "bribe",
                "keys_bought",
                "shares_obtained",
                "key_recovered",
                "spent",
                "wasted",
                "bound_disjoint",
                "bound_layout",
            ],
            Box::new(|p| bribe_row(cfg, p)),
        ),
    };
    let rows: Vec<Vec<Cell>> = opts
        .points
        .par_iter()
        .map(|p| row(p).with_context(|| format!("{} = {p}", opts.axis.name())))
        .collect::<anyhow::Result<_>>()?;
    let mut table = Table::new(columns);
    for r in rows {
        table.push(r);
    }
    Ok(table)
}

fn cost_row(cfg: &ScenarioConfig, n: u32) -> anyhow::Result<Vec<Cell>> {
    let sc = &cfg.scenario;
    if sc.t > n {
        bail!("t = {} exceeds n", sc.t);
    }
    let light = fit_pool(Scenario { n, mode: Mode::Silent, ..honest(sc) });
    let heavy = Scenario { recipient_offline_light: true, ..light.clone() };
    let straw = fit_pool(Scenario { n, mode: Mode::Strawman, ..honest(sc) });
    let mut row = vec![Cell::from(n)];
    for (s, mode) in [(light, CostMode::Lightweight), (heavy, CostMode::Heavyweight), (straw, CostMode::Strawman)] {
        s.validate()?;
        let trace = run_scenario(&s)?;
        let sim = cost_report(&trace, &s.gas)?;
        if sim.mode != mode {
            bail!("expected a {mode:?} run, got {:?}", sim.mode);
        }
        let analytic = cost_analytic(mode, n, &s.gas)?;
        row.extend([sim.service_gas.into(), analytic.service_gas.into(), sim.service_usd.to_f64().into()]);
    }
    Ok(row)
}

fn availability_row(cfg: &ScenarioConfig, a_t: f64, opts: &SweepOptions) -> anyhow::Result<Vec<Cell>> {
    let sc = &cfg.scenario;
    let analytic = availability(sc.l, sc.t, sc.n, a_t)?;
    let mc = availability_mc(sc.l, sc.t, sc.n, a_t, opts.trials, sc.seed)?;
    let sim = if opts.sim_trials > 0 {
        let delivered = (0..opts.sim_trials)
            .into_par_iter()
            .map(|i| {
                let s = Scenario { availability: a_t, seed: sc.seed.wrapping_add(i as u64), ..sc.clone() };
                run_scenario(&s).map(|t| t.status.is_delivered() as u32)
            })
            .collect::<Result<Vec<_>, _>>()?
            .iter()
            .sum::<u32>();
        Cell::from(delivered as f64 / opts.sim_trials as f64)
    } else {
        Cell::from(f64::NAN)
    };
    Ok(vec![a_t.into(), analytic.into(), mc.into(), sim, opts.sim_trials.into()])
}

fn all_briberable(sc: &Scenario, threshold: Amount) -> Scenario {
    let policies = (0..sc.pool_size).map(|i| (i, Policy::Briberable { threshold })).collect();
    Scenario { policies, ..sc.clone() }
}

fn layer_row(cfg: &ScenarioConfig, l: u32, opts: &SweepOptions) -> anyhow::Result<Vec<Cell>> {
    let sc = &cfg.scenario;
    let d = sc.deposit;
    let a = availability(l, sc.t, sc.n, sc.availability)?;
    let mc = availability_mc(l, sc.t, sc.n, sc.availability, opts.trials, sc.seed)?;
    let disjoint = bribery_cost(sc.t, l, d);
    let layout = if sc.assignment == LayerAssignment::Cyclic && l > sc.n {
        Cell::from(f64::NAN)
    } else {
        Cell::from(ether_f64(bribery_cost_for(sc.assignment, sc.t, l, sc.n, d)))
    };
    let base = fit_pool(Scenario { l, assignment: LayerAssignment::Disjoint, ..honest(sc) });
    let attack = run_bribery(
        &all_briberable(&base, d),
        &BriberyParams { bribe_per_key: d + d / 100, side_channel: true, ..cfg.adversary.bribery },
    )?;
    let v = cfg.adversary.sybil_v.unwrap_or(sc.pool_size) as f64;
    Ok(vec![
        l.into(),
        a.into(),
        mc.into(),
        ether_f64(disjoint).into(),
        layout,
        ether_f64(attack.total_spent).into(),
        attack.key_recovered.into(),
        optimal_sybil_fraction(l).unwrap_or(f64::NAN).into(),
        sybil_min_deposit(l, v, ether_f64(d)).into(),
    ])
}

fn sybil_row(cfg: &ScenarioConfig, x: u32, opts: &SweepOptions) -> anyhow::Result<Vec<Cell>> {
    let sc = &cfg.scenario;
    let v = cfg.adversary.sybil_v.unwrap_or(sc.pool_size);
    let d = ether_f64(sc.deposit);
    // Every point regenerates the same uniforms, so rows match a single
    // sequential sweep over all x.
    let point = sybil_sweep(&SybilSweep {
        v,
        l: sc.l,
        t: sc.t,
        n: sc.n,
        assignment: sc.assignment,
        d,
        xs: vec![x],
        trials: opts.trials,
        seed: sc.seed,
    })[0];
    let analytic = if point.p_m > 0.0 && point.p_m < 1.0 {
        sybil_expected_deposit(sc.l, v as f64, d, sc.t, sc.n, point.p_m)?
    } else {
        f64::INFINITY
    };
    Ok(vec![
        x.into(),
        point.p_m.into(),
        point.capture_rate.into(),
        point.capture_se.into(),
        point.p_m.powi(sc.l as i32).into(),
        point.success_rate.into(),
        point.empirical_cost.into(),
        analytic.into(),
        (x as f64 * d).into(),
    ])
}

fn bribe_row(cfg: &ScenarioConfig, point: &str) -> anyhow::Result<Vec<Cell>> {
    let sc = &cfg.scenario;
    let bribe = parse_ether(point).map_err(|e| anyhow!(e))?;
    let params = BriberyParams { bribe_per_key: bribe, ..cfg.adversary.bribery };
    let out = run_bribery(sc, &params)?;
    Ok(vec![
        point.into(),
        out.keys_bought.into(),
        out.shares_obtained.into(),
        out.key_recovered.into(),
        ether_f64(out.total_spent).into(),
        ether_f64(out.wasted).into(),
        ether_f64(bribery_cost(sc.t, sc.l, sc.deposit)).into(),
        ether_f64(bribery_cost_for(sc.assignment, sc.t, sc.l, sc.n, sc.deposit)).into(),
    ])
}

/// Row with the smallest value in `column`, ignoring NaN.
pub fn argmin(table: &Table, column: &str) -> Option<usize> {
    let c = table.column(column)?;
    table
        .rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| match r[c] {
            Cell::Float(v) if !v.is_nan() => Some((i, v)),
            _ => None,
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}
