//! On-chain state machines: the agent registry, per-service switch and
//! supplementary contracts, and the naive strawman contract used as a
//! baseline.

mod abi;
mod agent;
mod strawman;
mod sup;
mod switch;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use abi::Call;
pub use agent::{AgentContract, MailmanRecord, MailmanStatus, ServiceRecord, ServiceSpec, ServiceStatus};
pub use strawman::{share_commitment, StrawmanContract, StrawmanService};
pub use sup::{PrematureReport, SlashOrder, SupContract, Verdict};
pub use switch::SwitchContract;

use crate::crypto::{hash256, recover_signer, Address, Digest256, Signature};
use crate::ledger::{fns, Amount, Clock, Epoch, LedgerError, World};

/// How the `l` layers of each onion are drawn from the recruited mailmen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerAssignment {
    /// `n` recruits; share `i` is wrapped by positions `i..i+l-1 (mod n)`.
    #[default]
    Cyclic,
    /// `n*l` recruits; every recruit holds exactly one layer of one share.
    Disjoint,
}

impl LayerAssignment {
    pub fn recruits(self, n: u32, l: u32) -> u32 {
        match self {
            LayerAssignment::Cyclic => n,
            LayerAssignment::Disjoint => n * l,
        }
    }

    /// Zero-based recruit positions holding the layers of share `i`
    /// (zero-based), innermost first.
    pub fn holders(self, i: u32, n: u32, l: u32) -> impl Iterator<Item = u32> {
        (0..l).map(move |k| match self {
            LayerAssignment::Cyclic => (i + k) % n,
            LayerAssignment::Disjoint => i * l + k,
        })
    }

    fn tag(self) -> u8 {
        match self {
            LayerAssignment::Cyclic => 0,
            LayerAssignment::Disjoint => 1,
        }
    }
}

/// Deployable contract code. `to_bytes` is what `vrs_sup` signs over.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractCode {
    Agent { min_deposit: Amount },
    Switch { agent: Address },
    Supplementary { agent: Address, switch: Address },
    Strawman { min_deposit: Amount },
}

impl ContractCode {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(41);
        match self {
            ContractCode::Agent { min_deposit } => {
                out.push(1);
                out.extend_from_slice(&min_deposit.to_be_bytes());
            }
            ContractCode::Switch { agent } => {
                out.push(2);
                out.extend_from_slice(agent.as_bytes());
            }
            ContractCode::Supplementary { agent, switch } => {
                out.push(3);
                out.extend_from_slice(agent.as_bytes());
                out.extend_from_slice(switch.as_bytes());
            }
            ContractCode::Strawman { min_deposit } => {
                out.push(4);
                out.extend_from_slice(&min_deposit.to_be_bytes());
            }
        }
        out
    }

    /// Gas-schedule key for direct deployment by an EOA.
    pub fn deploy_function(&self) -> Option<&'static str> {
        match self {
            ContractCode::Agent { .. } => Some(fns::DEPLOY_AGENT),
            ContractCode::Switch { .. } => Some(fns::DEPLOY_SWITCH),
            ContractCode::Strawman { .. } => Some(fns::DEPLOY_STRAWMAN),
            ContractCode::Supplementary { .. } => None,
        }
    }

    pub(crate) fn instantiate(&self, creator: &Address) -> ContractState {
        match self {
            ContractCode::Agent { min_deposit } => ContractState::Agent(AgentContract::new(*min_deposit)),
            ContractCode::Switch { agent } => ContractState::Switch(SwitchContract::new(*agent, *creator)),
            ContractCode::Supplementary { agent, switch } => {
                ContractState::Supplementary(SupContract::new(*agent, *switch, *creator))
            }
            ContractCode::Strawman { min_deposit } => ContractState::Strawman(StrawmanContract::new(*min_deposit)),
        }
    }
}

/// Digest a mailman signs to accept recruitment: `hash(switch, index)`.
pub fn mailman_digest(switch: &Address, index: u32) -> Digest256 {
    let mut buf = [0u8; 24];
    buf[..20].copy_from_slice(switch.as_bytes());
    buf[20..].copy_from_slice(&index.to_be_bytes());
    hash256(&buf)
}

/// Digest the sender countersigns: `hash(switch, index, vrs_m)`.
pub fn sender_digest(switch: &Address, index: u32, vrs_m: &Signature) -> Digest256 {
    let mut buf = [0u8; 24 + Signature::LEN];
    buf[..20].copy_from_slice(switch.as_bytes());
    buf[20..24].copy_from_slice(&index.to_be_bytes());
    buf[24..].copy_from_slice(vrs_m.as_bytes());
    hash256(&buf)
}

/// Digest behind `vrs_sup`: `hash(switch, sup_code)`.
pub fn sup_code_digest(switch: &Address, code: &ContractCode) -> Digest256 {
    let mut buf = Vec::with_capacity(20 + 41);
    buf.extend_from_slice(switch.as_bytes());
    buf.extend_from_slice(&code.to_bytes());
    hash256(&buf)
}

/// The signed record binding a recruited mailman to a service.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agreement {
    pub index: u32,
    pub vrs_m: Signature,
    pub vrs_s: Signature,
}

impl Agreement {
    pub const ENCODED_LEN: usize = 4 + 2 * Signature::LEN;

    /// Checks both signatures; returns `(mailman, sender)`.
    pub fn signers(&self, switch: &Address) -> Result<(Address, Address), Revert> {
        let m = recover_signer(&mailman_digest(switch, self.index), &self.vrs_m).map_err(|_| Revert::BadSignature)?;
        let s = recover_signer(&sender_digest(switch, self.index, &self.vrs_m), &self.vrs_s)
            .map_err(|_| Revert::BadSignature)?;
        Ok((m, s))
    }

    pub fn encode(&self) -> [u8; Self::ENCODED_LEN] {
        let mut out = [0u8; Self::ENCODED_LEN];
        out[..4].copy_from_slice(&self.index.to_be_bytes());
        out[4..4 + Signature::LEN].copy_from_slice(self.vrs_m.as_bytes());
        out[4 + Signature::LEN..].copy_from_slice(self.vrs_s.as_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != Self::ENCODED_LEN {
            return None;
        }
        let index = u32::from_be_bytes(bytes[..4].try_into().ok()?);
        let vrs_m = Signature(bytes[4..4 + Signature::LEN].try_into().ok()?);
        let vrs_s = Signature(bytes[4 + Signature::LEN..].try_into().ok()?);
        Some(Self { index, vrs_m, vrs_s })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlashReason {
    Premature,
    Absent,
    Fake,
    FalseReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CreditReason {
    ReportReward,
    ModeSwitchRefund,
    Informer,
    SenderCompensation,
}

/// Contract log entries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    MailmanRegistered { mailman: Address, deposit: Amount },
    ServiceCreated { switch: Address },
    SupplementaryDeployed { switch: Address, sup: Address, reporter: Address },
    PrematureReported { index: u32, reporter: Address },
    IdentityRevealed { index: u32, mailman: Address },
    PrivkeyRevealed { index: u32, mailman: Address, matches: bool },
    AbsentReported { index: u32, reporter: Address },
    FakeReported { index: u32, reporter: Address },
    AgentInformed { switch: Address },
    Slashed { mailman: Address, reason: SlashReason, amount: Amount },
    Credited { to: Address, amount: Amount, reason: CreditReason },
    Burned { amount: Amount },
    StatusChanged { service: Address, status: ServiceStatus },
    RelationshipProven { switch: Address, index: u32, mailman: Address },
    RemunerationPaid { to: Address, amount: Amount },
    Withdrawn { to: Address, amount: Amount },
    StrawmanServiceCreated { id: u64, mailmen: Vec<Address> },
    ShareRevealed { id: u64, mailman: Address },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Revert {
    #[error("{function} not allowed in {epoch:?}")]
    WrongEpoch { function: &'static str, epoch: Option<Epoch> },
    #[error("{0} does not implement {1}")]
    UnsupportedCall(&'static str, &'static str),
    #[error("caller is not a registered mailman")]
    NotMailman,
    #[error("mailman already registered")]
    AlreadyRegistered,
    #[error("deposit {got} below minimum {min}")]
    DepositTooLow { min: Amount, got: Amount },
    #[error("time-frame is not in the future")]
    PastTimeframe,
    #[error("invalid service parameters: {0}")]
    InvalidParams(&'static str),
    #[error("remuneration not escrowed")]
    UnescrowedRemuneration,
    #[error("unknown service")]
    UnknownService,
    #[error("service already exists")]
    DuplicateService,
    #[error("signature verification failed")]
    BadSignature,
    #[error("signer mismatch")]
    WrongSigner,
    #[error("supplementary contract already deployed")]
    AlreadyDeployed,
    #[error("unexpected contract code")]
    WrongCode,
    #[error("caller is not the recipient")]
    NotRecipient,
    #[error("receipt does not match commitment")]
    WrongReceipt,
    #[error("service is not pending")]
    NotPending,
    #[error("duplicate report")]
    DuplicateReport,
    #[error("duplicate index {0}")]
    DuplicateIndex(u32),
    #[error("mailman {0} already bound to this service")]
    DuplicateIdentity(Address),
    #[error("index {0} out of range")]
    IndexOutOfRange(u32),
    #[error("no identity revealed for index {0}")]
    UnknownIndex(u32),
    #[error("caller does not hold index {0}")]
    NotIndexHolder(u32),
    #[error("private key already revealed")]
    AlreadyRevealed,
    #[error("accusation contradicted by on-chain state")]
    AccusationContradicted,
    #[error("agent already informed")]
    AlreadyInformed,
    #[error("nothing to withdraw")]
    NothingToWithdraw,
    #[error("service not delivered in lightweight mode")]
    NotLightDelivered,
    #[error("ledger: {0}")]
    Ledger(#[from] LedgerError),
}

/// Execution environment of one call.
#[derive(Clone, Copy, Debug)]
pub struct CallContext {
    pub caller: Address,
    pub value: Amount,
    /// Fee the caller paid for this transaction.
    pub fee: Amount,
    pub clock: Clock,
}

impl CallContext {
    pub(crate) fn require_epoch(&self, function: &'static str, allowed: &[Epoch]) -> Result<(), Revert> {
        match self.clock.epoch {
            Some(e) if allowed.contains(&e) => Ok(()),
            epoch => Err(Revert::WrongEpoch { function, epoch }),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub events: Vec<Event>,
    pub created: Option<Address>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractState {
    Agent(AgentContract),
    Switch(SwitchContract),
    Supplementary(SupContract),
    Strawman(StrawmanContract),
}

impl ContractState {
    pub fn kind(&self) -> &'static str {
        match self {
            ContractState::Agent(_) => "C_agent",
            ContractState::Switch(_) => "C_sw",
            ContractState::Supplementary(_) => "C_sup",
            ContractState::Strawman(_) => "C_strawman",
        }
    }

    /// Canonical storage encoding.
    pub fn storage_bytes(&self) -> Vec<u8> {
        postcard::to_allocvec(self).expect("storage encodes")
    }

    pub fn as_agent(&self) -> Option<&AgentContract> {
        match self {
            ContractState::Agent(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_switch(&self) -> Option<&SwitchContract> {
        match self {
            ContractState::Switch(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_sup(&self) -> Option<&SupContract> {
        match self {
            ContractState::Supplementary(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_strawman(&self) -> Option<&StrawmanContract> {
        match self {
            ContractState::Strawman(s) => Some(s),
            _ => None,
        }
    }
}

/// Runs `call` against the contract at `target`. The caller's value has
/// already been moved to `target`; the ledger rolls back on `Err`.
pub fn execute(world: &mut World, ctx: &CallContext, target: &Address, call: &Call) -> Result<Outcome, Revert> {
    let mut state = world.take_contract(target).ok_or(Revert::UnknownService)?;
    let kind = state.kind();
    let res = match &mut state {
        ContractState::Agent(c) => c.dispatch(world, ctx, target, call),
        ContractState::Switch(c) => c.dispatch(world, ctx, target, call),
        ContractState::Supplementary(c) => c.dispatch(world, ctx, target, call),
        ContractState::Strawman(c) => c.dispatch(world, ctx, target, call),
    };
    world.put_contract(*target, state);
    res.map_err(|e| match e {
        Revert::UnsupportedCall(_, f) => Revert::UnsupportedCall(kind, f),
        e => e,
    })
}

pub(crate) fn agent_of<'w>(world: &'w World, agent: &Address) -> Result<&'w AgentContract, Revert> {
    world.contract(agent).and_then(ContractState::as_agent).ok_or(Revert::UnknownService)
}

pub(crate) fn unsupported(call: &Call) -> Revert {
    Revert::UnsupportedCall("contract", call.function_id())
}

#[cfg(test)]
mod tests;
