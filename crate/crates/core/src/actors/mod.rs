//! Sender, mailman and recipient behaviour, and the driver that steps them
//! through setup, silent recruitment and the delivery epochs.

mod sim;
mod strawman;
pub mod wire;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use sim::{peel_all, Job, MailmanActor, RecipientState, SenderState, Simulation};

use crate::channels::{ChannelError, ChannelMsg};
use crate::contracts::{Event, LayerAssignment, ServiceStatus, SlashReason};
use crate::crypto::{hash256, Address, CryptoError, Digest256};
use crate::ledger::{Amount, Epoch, GasSchedule, LedgerError, TimeFrame, TxReceipt, WEI_PER_ETHER};

/// How a mailman behaves during a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    #[default]
    Honest,
    /// Discloses its time-frame key while the service is still pending.
    Premature,
    /// Withholds its key at every reveal obligation from epoch `from` on.
    Absent { from: Epoch },
    /// Reveals a wrong key from epoch `from` on.
    Fake { from: Epoch },
    /// Follows the protocol but sells its key for more than `threshold`.
    Briberable { threshold: Amount },
    /// Declines every recruitment request.
    Refuses,
    /// Files a bogus premature-disclosure report.
    FalseReporter,
}

impl Policy {
    /// Follows the protocol during delivery.
    pub fn compliant(self) -> bool {
        matches!(self, Policy::Honest | Policy::Briberable { .. })
    }

    fn withholds(self, epoch: Epoch) -> bool {
        matches!(self, Policy::Absent { from } if epoch >= from)
    }

    fn fakes(self, epoch: Epoch) -> bool {
        matches!(self, Policy::Fake { from } if epoch >= from)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Silent recruitment with dual-mode delivery.
    #[default]
    Silent,
    /// Baseline that lists every mailman on chain at setup.
    Strawman,
}

/// Everything needed to reproduce one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub mode: Mode,
    pub pool_size: u32,
    pub l: u32,
    pub t: u32,
    pub n: u32,
    pub assignment: LayerAssignment,
    /// Minimum (and posted) deposit `d`.
    pub deposit: Amount,
    pub remuneration: Amount,
    /// Per-obligation mailman availability `A_T`.
    pub availability: f64,
    /// Policies by pool position; absent entries are honest.
    pub policies: BTreeMap<u32, Policy>,
    /// Per-message loss probability on the off-chain bus.
    pub drop_prob: f64,
    /// Whether an observer sees from/to/size of private messages.
    pub metadata_visible: bool,
    pub epoch_ticks: u32,
    pub timeframe: TimeFrame,
    pub info: Vec<u8>,
    /// Pool positions to recruit instead of a random draw.
    pub selection: Option<Vec<u32>>,
    /// Drops every epoch-1 message to the recipient, forcing heavyweight mode.
    pub recipient_offline_light: bool,
    /// The sender's first delivery to the recipient carries a bad signature.
    pub tamper_first_delivery: bool,
    #[serde(skip)]
    pub gas: GasSchedule,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 0,
            mode: Mode::Silent,
            pool_size: 30,
            l: 3,
            t: 4,
            n: 10,
            assignment: LayerAssignment::Cyclic,
            deposit: WEI_PER_ETHER,
            remuneration: WEI_PER_ETHER,
            availability: 1.0,
            policies: BTreeMap::new(),
            drop_prob: 0.0,
            metadata_visible: true,
            epoch_ticks: 1,
            timeframe: TimeFrame::new(1, 0),
            info: b"the vault code is 4711".to_vec(),
            selection: None,
            recipient_offline_light: false,
            tamper_first_delivery: false,
            gas: GasSchedule::default(),
        }
    }
}

impl Scenario {
    /// Mailmen taking part in one service.
    pub fn recruits(&self) -> u32 {
        match self.mode {
            Mode::Silent => self.assignment.recruits(self.n, self.l),
            Mode::Strawman => self.n,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.into()));
        if self.l == 0 {
            return bad("l must be at least 1");
        }
        if self.t == 0 || self.t > self.n {
            return bad("t must satisfy 1 <= t <= n");
        }
        if self.mode == Mode::Silent && self.assignment == LayerAssignment::Cyclic && self.l > self.n {
            return bad("cyclic layering needs l <= n");
        }
        if self.pool_size < self.recruits() {
            return Err(ScenarioError::PoolTooSmall { need: self.recruits(), have: self.pool_size });
        }
        if !(0.0..=1.0).contains(&self.availability) {
            return bad("availability must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return bad("drop probability must lie in [0, 1]");
        }
        if self.deposit == 0 || self.remuneration == 0 {
            return bad("deposit and remuneration must be positive");
        }
        if self.epoch_ticks == 0 {
            return bad("epoch ticks must be positive");
        }
        if self.timeframe == TimeFrame::new(0, 0) {
            return bad("time-frame must lie after the start [0,0]");
        }
        for (idx, p) in &self.policies {
            if *idx >= self.pool_size {
                return Err(ScenarioError::UnknownMailman(*idx));
            }
            if let Policy::Absent { from } | Policy::Fake { from } = p {
                if !(Epoch::LIGHTWEIGHT..=Epoch::HEAVYWEIGHT).contains(from) {
                    return bad("absent/fake faults start in epoch 1, 2 or 3");
                }
            }
        }
        if let Some(sel) = &self.selection {
            if sel.len() != self.recruits() as usize {
                return bad("selection length must equal the number of recruits");
            }
            let mut seen = alloc::collections::BTreeSet::new();
            if sel.iter().any(|i| *i >= self.pool_size || !seen.insert(*i)) {
                return bad("selection must list distinct pool positions");
            }
        }
        Ok(())
    }

    pub fn policy(&self, pool_index: u32) -> Policy {
        self.policies.get(&pool_index).copied().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("pool of {have} mailmen cannot supply {need} recruits")]
    PoolTooSmall { need: u32, have: u32 },
    #[error("no mailman at pool position {0}")]
    UnknownMailman(u32),
    #[error("every candidate refused recruitment")]
    PoolExhausted,
    #[error("transaction {function} reverted: {reason}")]
    Reverted { function: String, reason: String },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MisbehaviorKind {
    Premature,
    Absent,
    Fake,
    FalseReport,
    Refused,
    /// Honest mailman unavailable at an obligation.
    Lapse,
}

impl MisbehaviorKind {
    /// Whether this deviation can justify a slash for `reason`.
    pub fn justifies(self, reason: SlashReason) -> bool {
        matches!(
            (self, reason),
            (MisbehaviorKind::Premature, SlashReason::Premature)
                | (MisbehaviorKind::Absent | MisbehaviorKind::Lapse, SlashReason::Absent)
                | (MisbehaviorKind::Fake, SlashReason::Fake)
                | (MisbehaviorKind::FalseReport, SlashReason::FalseReport)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Misbehavior {
    pub mailman: Address,
    pub kind: MisbehaviorKind,
    pub epoch: Option<Epoch>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlashRecord {
    pub mailman: Address,
    pub reason: SlashReason,
    pub amount: Amount,
}

/// Complete record of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTrace {
    pub seed: u64,
    pub mode: Mode,
    pub l: u32,
    pub t: u32,
    pub n: u32,
    pub pool: Vec<Address>,
    pub sender: Address,
    pub recipient: Address,
    /// Agent (or strawman) contract.
    pub contract: Address,
    pub switch: Option<Address>,
    /// Recruited mailmen in index order.
    pub selection: Vec<Address>,
    pub receipts: Vec<TxReceipt>,
    pub messages: Vec<ChannelMsg>,
    pub metadata_visible: bool,
    pub epoch_path: Vec<Epoch>,
    pub status: ServiceStatus,
    pub misbehaviors: Vec<Misbehavior>,
    pub slashes: Vec<SlashRecord>,
    pub initial_balances: BTreeMap<Address, Amount>,
    pub final_balances: BTreeMap<Address, Amount>,
    pub minted: Amount,
    pub gas_sink: Amount,
    pub burned: Amount,
    /// Digest of the on-chain bytes before settlement.
    pub onchain_digest: Digest256,
    #[serde(skip)]
    pub onchain_bytes: Vec<u8>,
    /// What the recipient decrypted, if anything.
    pub delivered_info: Option<Vec<u8>>,
    pub expected_info: Vec<u8>,
    pub refusals: u32,
    pub resends: u32,
}

impl ScenarioTrace {
    /// Digest over the full trace.
    pub fn trace_hash(&self) -> Digest256 {
        hash256(&postcard::to_allocvec(self).expect("trace encodes"))
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.receipts.iter().flat_map(|r| r.emitted.iter())
    }

    /// Total remuneration paid out to mailmen.
    pub fn remuneration_paid(&self) -> Amount {
        self.events()
            .map(|e| match e {
                Event::RemunerationPaid { amount, .. } => *amount,
                _ => 0,
            })
            .sum()
    }

    pub fn balance_delta(&self, who: &Address) -> i128 {
        self.final_balances.get(who).copied().unwrap_or(0) as i128
            - self.initial_balances.get(who).copied().unwrap_or(0) as i128
    }

    /// Total value is conserved: balances + gas + burned equal what was minted.
    pub fn conserved(&self) -> bool {
        let held: Amount = self.final_balances.values().sum();
        held + self.gas_sink + self.burned == self.minted
    }
}

/// Runs one scenario end to end.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioTrace, ScenarioError> {
    match scenario.mode {
        Mode::Silent => {
            let mut sim = Simulation::new(scenario.clone())?;
            sim.sender_setup()?;
            sim.silent_recruitment()?;
            sim.run_delivery()?;
            Ok(sim.finish())
        }
        Mode::Strawman => strawman::run_strawman(scenario),
    }
}

pub use strawman::run_strawman;

#[cfg(test)]
mod tests;
