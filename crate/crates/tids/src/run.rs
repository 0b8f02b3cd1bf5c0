//! Single scenario runs: trace records and the human summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use clap::ValueEnum;
use serde::Serialize;

use tids_core::actors::{run_scenario, Misbehavior, Mode, ScenarioTrace, SlashRecord};
use tids_core::adversary::{run_bribery, run_sybil, AttackOutcome};
use tids_core::analysis::{cost_report, CostBreakdown};
use tids_core::contracts::ServiceStatus;
use tids_core::ledger::{Amount, Epoch};
use tids_core::Address;

use crate::config::{format_ether, ScenarioConfig};
use crate::table::{Cell, Format, Table};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Attack {
    #[default]
    None,
    Bribery,
    Sybil,
}

pub struct RunOutput {
    pub trace: ScenarioTrace,
    pub cost: CostBreakdown,
    pub attack: Option<AttackOutcome>,
}

pub fn execute(cfg: &ScenarioConfig, attack: Attack) -> anyhow::Result<RunOutput> {
    let sc = &cfg.scenario;
    let (trace, attack) = match attack {
        Attack::None => (run_scenario(sc)?, None),
        Attack::Bribery => {
            let out = run_bribery(sc, &cfg.adversary.bribery)?;
            (out.trace.clone(), Some(out))
        }
        Attack::Sybil => {
            let x = cfg.adversary.sybil_x.unwrap_or((sc.l - 1) * sc.pool_size);
            let out = run_sybil(sc, x)?;
            (out.trace.clone(), Some(out))
        }
    };
    let cost = cost_report(&trace, &sc.gas)?;
    Ok(RunOutput { trace, cost, attack })
}

pub fn status_name(s: ServiceStatus) -> &'static str {
    match s {
        ServiceStatus::Pending => "pending",
        ServiceStatus::DeliveredLight => "delivered_light",
        ServiceStatus::DeliveredHeavy => "delivered_heavy",
        ServiceStatus::Failed => "failed",
    }
}

fn path_string(path: &[Epoch]) -> String {
    path.iter().map(|e| e.index().to_string()).collect::<Vec<_>>().join(" -> ")
}

pub fn summary(out: &RunOutput) -> String {
    let t = &out.trace;
    let c = &out.cost;
    let mut s = String::new();
    let mode = match t.mode {
        Mode::Silent => "silent",
        Mode::Strawman => "strawman",
    };
    let delivered = match &t.delivered_info {
        Some(info) if *info == t.expected_info => "yes, plaintext matches",
        Some(_) => "yes, plaintext DIFFERS",
        None => "no",
    };
    let _ = writeln!(s, "seed          {}", t.seed);
    let _ = writeln!(s, "mode          {mode}  [l,t,n] = [{},{},{}]", t.l, t.t, t.n);
    let _ = writeln!(s, "status        {}", status_name(t.status));
    let _ = writeln!(s, "epoch path    {}", path_string(&t.epoch_path));
    let _ = writeln!(s, "delivered     {delivered}");
    let _ = writeln!(s, "recruits      {} (refusals {}, resends {})", t.selection.len(), t.refusals, t.resends);
    let _ = writeln!(s, "service cost  {:?}", c.mode);
    for line in &c.lines {
        let _ = writeln!(
            s,
            "  {:<32} {:>3} x {:>10} gas  {:>8}",
            line.function,
            line.calls,
            line.gas,
            line.usd.to_string()
        );
    }
    let _ = writeln!(s, "total gas     {}", c.service_gas);
    let _ = writeln!(s, "total USD     {}  (exact {})", c.service_usd, c.service_usd.exact_string());
    let _ = writeln!(s, "registration  {} gas", c.registration_gas);
    let _ = writeln!(s, "settlement    {} gas", c.settlement_gas);
    let _ = writeln!(s, "fees paid     {} ether", format_ether(c.total_fee_wei));
    let _ = writeln!(s, "remuneration  {} ether", format_ether(t.remuneration_paid()));
    if t.slashes.is_empty() {
        let _ = writeln!(s, "slashes       none");
    }
    for sl in &t.slashes {
        let _ = writeln!(s, "slash         {} {:?} {} ether", sl.mailman, sl.reason, format_ether(sl.amount));
    }
    for m in &t.misbehaviors {
        let epoch = m.epoch.map(|e| format!(" in epoch {}", e.index())).unwrap_or_default();
        let _ = writeln!(s, "deviation     {} {:?}{epoch}", m.mailman, m.kind);
    }
    if let Some(a) = &out.attack {
        let _ = writeln!(
            s,
            "attack        {} shares, key recovered: {}, spent {} ether, forfeited {} ether, keys bought {}",
            a.shares_obtained,
            a.key_recovered,
            format_ether(a.total_spent),
            format_ether(a.deposits_forfeited),
            a.keys_bought
        );
    }
    let _ = writeln!(s, "value         {}", if t.conserved() { "conserved" } else { "NOT CONSERVED" });
    let _ = writeln!(s, "trace hash    {}", t.trace_hash());
    s
}

#[derive(Serialize)]
struct Record<'a, T: Serialize> {
    record: &'static str,
    data: &'a T,
}

#[derive(Serialize)]
struct Outcome<'a> {
    status: &'static str,
    epoch_path: &'a [Epoch],
    selection: &'a [Address],
    delivered: bool,
    misbehaviors: &'a [Misbehavior],
    slashes: &'a [SlashRecord],
    balance_deltas: BTreeMap<Address, i128>,
    cost: &'a CostBreakdown,
    minted: Amount,
    gas_sink: Amount,
    burned: Amount,
    onchain_digest: String,
    trace_hash: String,
}

fn receipts_table(t: &ScenarioTrace) -> Table {
    let mut tab = Table::new(vec![
        "seq",
        "phase",
        "epoch",
        "function",
        "caller",
        "target",
        "value_wei",
        "gas_used",
        "fee_wei",
        "usd",
        "success",
        "revert",
    ]);
    for r in &t.receipts {
        tab.push(vec![
            r.seq.into(),
            r.phase.to_string().into(),
            r.epoch.map(|e| Cell::from(e.index() as u32)).unwrap_or_else(|| "".into()),
            r.function.as_str().into(),
            r.caller.to_string().into(),
            r.target.to_string().into(),
            r.value.into(),
            r.gas_used.into(),
            r.fee_wei.into(),
            r.usd_cost.exact_string().into(),
            r.success.into(),
            r.revert.clone().unwrap_or_default().into(),
        ]);
    }
    tab
}

/// Full trace: JSON lines with one record per transaction and message
/// followed by the outcome, or CSV with one row per transaction.
pub fn trace_records(out: &RunOutput, format: Format) -> anyhow::Result<String> {
    let t = &out.trace;
    if format == Format::Csv {
        return Ok(receipts_table(t).to_string(Format::Csv));
    }
    let mut s = String::new();
    for r in &t.receipts {
        s.push_str(&serde_json::to_string(&Record { record: "tx", data: r })?);
        s.push('\n');
    }
    for m in &t.messages {
        s.push_str(&serde_json::to_string(&Record { record: "msg", data: m })?);
        s.push('\n');
    }
    let deltas = t.final_balances.keys().chain(t.initial_balances.keys()).map(|a| (*a, t.balance_delta(a))).collect();
    let outcome = Outcome {
        status: status_name(t.status),
        epoch_path: &t.epoch_path,
        selection: &t.selection,
        delivered: t.delivered_info.as_deref() == Some(t.expected_info.as_slice()),
        misbehaviors: &t.misbehaviors,
        slashes: &t.slashes,
        balance_deltas: deltas,
        cost: &out.cost,
        minted: t.minted,
        gas_sink: t.gas_sink,
        burned: t.burned,
        onchain_digest: t.onchain_digest.to_string(),
        trace_hash: t.trace_hash().to_string(),
    };
    s.push_str(&serde_json::to_string(&Record { record: "outcome", data: &outcome })?);
    s.push('\n');
    Ok(s)
}
