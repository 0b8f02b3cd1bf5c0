use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::actors::{Mode, ScenarioTrace};
use crate::contracts::ServiceStatus;
use crate::ledger::{fns, Amount, GasSchedule, Phase, Usd};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    Lightweight,
    Heavyweight,
    Strawman,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CostLine {
    pub function: String,
    pub calls: u32,
    pub gas: u64,
    pub usd: Usd,
}

/// Gas and USD of one service, from setup to final delivery. Registration
/// and settlement are tallied separately.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CostBreakdown {
    pub mode: CostMode,
    pub n: u32,
    pub lines: Vec<CostLine>,
    pub service_gas: u64,
    pub service_usd: Usd,
    /// Part of `service_gas` that does not depend on `n`.
    pub fixed_gas: u64,
    pub per_mailman_gas: u64,
    pub fixed_usd: Usd,
    pub per_mailman_usd: Usd,
    pub registration_gas: u64,
    pub settlement_gas: u64,
    /// Every fee paid in the run, in wei; equals the ledger's gas sink.
    pub total_fee_wei: Amount,
}

fn mode_of(trace: &ScenarioTrace) -> CostMode {
    match trace.mode {
        Mode::Strawman => CostMode::Strawman,
        Mode::Silent if trace.status == ServiceStatus::DeliveredLight => CostMode::Lightweight,
        Mode::Silent => {
            let switched = trace.receipts.iter().any(|r| r.function == fns::DEPLOY_SUPPLEMENTARY && r.success);
            if switched {
                CostMode::Heavyweight
            } else {
                CostMode::Lightweight
            }
        }
    }
}

/// Splits `service` gas into fixed and per-mailman parts for `mode`.
fn split(mode: CostMode, n: u32, service: u64, s: &GasSchedule) -> Result<(u64, u64), AnalysisError> {
    let g = |f: &str| s.gas(f).map_err(|_| AnalysisError::UnknownFunction(f.to_string()));
    let per = match mode {
        CostMode::Lightweight => 0,
        CostMode::Heavyweight => s.c_id() + s.c_pk(),
        CostMode::Strawman => g(fns::STRAWMAN_PER_MAILMAN)? + g(fns::REVEAL_SHARE)?,
    };
    Ok((service.saturating_sub(per * n as u64), per))
}

/// Cost report of a simulated run. Every receipt is priced from its
/// recorded gas; functions unknown to `schedule` are rejected.
pub fn cost_report(trace: &ScenarioTrace, schedule: &GasSchedule) -> Result<CostBreakdown, AnalysisError> {
    let mut lines: BTreeMap<&str, (u32, u64)> = BTreeMap::new();
    let (mut service, mut registration, mut settlement, mut fees) = (0u64, 0u64, 0u64, 0 as Amount);
    for r in &trace.receipts {
        let base = r.function.as_str();
        if schedule.gas(base).is_err() {
            return Err(AnalysisError::UnknownFunction(r.function.clone()));
        }
        fees += r.fee_wei;
        match r.phase {
            Phase::Registration => registration += r.gas_used,
            Phase::Settlement => settlement += r.gas_used,
            Phase::Send | Phase::Pend | Phase::Deliver => {
                service += r.gas_used;
                let e = lines.entry(base).or_default();
                e.0 += 1;
                e.1 += r.gas_used;
            }
        }
    }
    let mode = mode_of(trace);
    let (fixed, per) = split(mode, trace.n, service, schedule)?;
    Ok(CostBreakdown {
        mode,
        n: trace.n,
        lines: lines
            .into_iter()
            .map(|(f, (calls, gas))| CostLine { function: f.to_string(), calls, gas, usd: schedule.usd(gas) })
            .collect(),
        service_gas: service,
        service_usd: schedule.usd(service),
        fixed_gas: fixed,
        per_mailman_gas: per,
        fixed_usd: schedule.usd(fixed),
        per_mailman_usd: schedule.usd(per),
        registration_gas: registration,
        settlement_gas: settlement,
        total_fee_wei: fees,
    })
}

/// Closed-form cost of one service with `n` mailmen when everyone behaves.
///
/// Lightweight: `C_sw + newService + recipientReceipt`, flat in `n`.
/// Heavyweight: the same plus `deploySupplementary`, then `c_id` and `c_pk`
/// per mailman. Strawman: the listing and one share reveal per mailman.
pub fn cost_analytic(mode: CostMode, n: u32, schedule: &GasSchedule) -> Result<CostBreakdown, AnalysisError> {
    let g = |f: &str| schedule.gas(f).map_err(|_| AnalysisError::UnknownFunction(f.to_string()));
    let calls: Vec<(&str, u32, u64)> = match mode {
        CostMode::Lightweight => alloc::vec![
            (fns::DEPLOY_SWITCH, 1, g(fns::DEPLOY_SWITCH)?),
            (fns::NEW_SERVICE, 1, g(fns::NEW_SERVICE)?),
            (fns::RECIPIENT_RECEIPT, 1, g(fns::RECIPIENT_RECEIPT)?),
        ],
        CostMode::Heavyweight => alloc::vec![
            (fns::DEPLOY_SWITCH, 1, g(fns::DEPLOY_SWITCH)?),
            (fns::NEW_SERVICE, 1, g(fns::NEW_SERVICE)?),
            (fns::DEPLOY_SUPPLEMENTARY, 1, g(fns::DEPLOY_SUPPLEMENTARY)?),
            (fns::REVEAL_IDENTITY, 1, schedule.c_id() * n as u64),
            (fns::REVEAL_PRIVKEY, n, schedule.c_pk() * n as u64),
            (fns::RECIPIENT_RECEIPT, 1, g(fns::RECIPIENT_RECEIPT)?),
        ],
        CostMode::Strawman => alloc::vec![
            (fns::STRAWMAN_NEW_SERVICE, 1, g(fns::STRAWMAN_NEW_SERVICE)? + g(fns::STRAWMAN_PER_MAILMAN)? * n as u64),
            (fns::REVEAL_SHARE, n, g(fns::REVEAL_SHARE)? * n as u64),
            (fns::REVEAL_RECEIPT, 1, g(fns::REVEAL_RECEIPT)?),
        ],
    };
    let service: u64 = calls.iter().map(|c| c.2).sum();
    let (fixed, per) = split(mode, n, service, schedule)?;
    Ok(CostBreakdown {
        mode,
        n,
        lines: calls
            .into_iter()
            .map(|(f, calls, gas)| CostLine { function: f.to_string(), calls, gas, usd: schedule.usd(gas) })
            .collect(),
        service_gas: service,
        service_usd: schedule.usd(service),
        fixed_gas: fixed,
        per_mailman_gas: per,
        fixed_usd: schedule.usd(fixed),
        per_mailman_usd: schedule.usd(per),
        registration_gas: 0,
        settlement_gas: 0,
        total_fee_wei: schedule.fee_wei(service),
    })
}
