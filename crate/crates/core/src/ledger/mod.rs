//! Deterministic single-chain ledger with flat per-function gas.

mod gas;
mod receipt;
mod time;

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

pub use gas::{fns, parse_ratio, GasError, GasSchedule, Usd, ESTIMATED_GAS, MEASURED_GAS};
pub use receipt::{Calldata, Phase, TxReceipt};
pub use time::{is_valid_epoch_path, Clock, Epoch, TimeFrame};

use crate::contracts::{self, Call, CallContext, ContractCode, ContractState};
use crate::crypto::{hash256, keypair_gen, Address, KeyPair};

/// Currency in wei.
pub type Amount = u128;

pub const WEI_PER_ETHER: Amount = 1_000_000_000_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccountKind {
    Eoa,
    Contract,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub address: Address,
    pub kind: AccountKind,
    pub balance: Amount,
    pub nonce: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("unknown account {0}")]
    UnknownAccount(Address),
    #[error("{0} is not an externally owned account")]
    NotEoa(Address),
    #[error("no contract at {0}")]
    UnknownTarget(Address),
    #[error("insufficient balance at {address}: need {need}, have {have}")]
    InsufficientBalance { address: Address, need: Amount, have: Amount },
    #[error("time regression from {from} to {to}")]
    TimeRegression { from: TimeFrame, to: TimeFrame },
    #[error("illegal epoch transition {from:?} -> {to}")]
    IllegalTransition { from: Option<Epoch>, to: Epoch },
    #[error("minting {0} wei overflows the supply")]
    SupplyOverflow(Amount),
    #[error("contract kind can only be created by another contract")]
    NotDeployable,
    #[error(transparent)]
    Gas(#[from] GasError),
}

/// Contract-address derivation: low 20 bytes of `keccak(creator || nonce)`.
pub fn predict_address(creator: &Address, nonce: u64) -> Address {
    let mut buf = [0u8; 28];
    buf[..20].copy_from_slice(creator.as_bytes());
    buf[20..].copy_from_slice(&nonce.to_be_bytes());
    let h = hash256(&buf);
    let mut out = [0u8; 20];
    out.copy_from_slice(&h.as_bytes()[12..]);
    Address(out)
}

/// Accounts, contract storage and burned funds. Snapshotted per transaction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct World {
    accounts: BTreeMap<Address, Account>,
    contracts: BTreeMap<Address, ContractState>,
    burned: Amount,
}

impl World {
    pub fn account(&self, addr: &Address) -> Option<&Account> {
        self.accounts.get(addr)
    }

    pub fn balance(&self, addr: &Address) -> Amount {
        self.accounts.get(addr).map_or(0, |a| a.balance)
    }

    pub fn accounts(&self) -> impl Iterator<Item = &Account> {
        self.accounts.values()
    }

    pub fn contract(&self, addr: &Address) -> Option<&ContractState> {
        self.contracts.get(addr)
    }

    pub fn contract_mut(&mut self, addr: &Address) -> Option<&mut ContractState> {
        self.contracts.get_mut(addr)
    }

    pub fn contracts(&self) -> impl Iterator<Item = (&Address, &ContractState)> {
        self.contracts.iter()
    }

    pub(crate) fn take_contract(&mut self, addr: &Address) -> Option<ContractState> {
        self.contracts.remove(addr)
    }

    pub(crate) fn put_contract(&mut self, addr: Address, state: ContractState) {
        self.contracts.insert(addr, state);
    }

    pub fn burned(&self) -> Amount {
        self.burned
    }

    pub fn transfer(&mut self, from: &Address, to: &Address, amount: Amount) -> Result<(), LedgerError> {
        if amount == 0 {
            return Ok(());
        }
        if !self.accounts.contains_key(to) {
            return Err(LedgerError::UnknownAccount(*to));
        }
        self.debit(from, amount)?;
        self.accounts.get_mut(to).expect("checked").balance += amount;
        Ok(())
    }

    pub fn burn(&mut self, from: &Address, amount: Amount) -> Result<(), LedgerError> {
        self.debit(from, amount)?;
        self.burned += amount;
        Ok(())
    }

    fn debit(&mut self, from: &Address, amount: Amount) -> Result<(), LedgerError> {
        let acct = self.accounts.get_mut(from).ok_or(LedgerError::UnknownAccount(*from))?;
        if acct.balance < amount {
            return Err(LedgerError::InsufficientBalance { address: *from, need: amount, have: acct.balance });
        }
        acct.balance -= amount;
        Ok(())
    }

    /// Creates a contract account at `predict_address(creator, nonce)` and
    /// bumps the creator's nonce.
    pub(crate) fn create_contract(&mut self, creator: &Address, state: ContractState) -> Result<Address, LedgerError> {
        let acct = self.accounts.get_mut(creator).ok_or(LedgerError::UnknownAccount(*creator))?;
        let addr = predict_address(creator, acct.nonce);
        acct.nonce += 1;
        self.accounts.insert(addr, Account { address: addr, kind: AccountKind::Contract, balance: 0, nonce: 0 });
        self.contracts.insert(addr, state);
        Ok(addr)
    }

    fn bump_nonce(&mut self, addr: &Address) {
        if let Some(a) = self.accounts.get_mut(addr) {
            a.nonce += 1;
        }
    }
}

/// The simulated chain. Single writer; every mutation goes through here.
#[derive(Clone, Debug)]
pub struct Ledger {
    world: World,
    schedule: GasSchedule,
    clock: Clock,
    epoch_ticks: u32,
    gas_sink: Amount,
    minted: Amount,
    receipts: Vec<TxReceipt>,
    epoch_path: Vec<Epoch>,
    phase: Phase,
}

impl Default for Ledger {
    fn default() -> Self {
        Self::new(GasSchedule::default())
    }
}

impl Ledger {
    pub fn new(schedule: GasSchedule) -> Self {
        Self {
            world: World::default(),
            schedule,
            clock: Clock { frame: TimeFrame::new(0, 0), epoch: None, tick: 0 },
            epoch_ticks: 1,
            gas_sink: 0,
            minted: 0,
            receipts: Vec::new(),
            epoch_path: Vec::new(),
            phase: Phase::Registration,
        }
    }

    /// Sets how many ticks a timed epoch (3, 4, 5) lasts before it expires.
    pub fn with_epoch_ticks(mut self, ticks: u32) -> Self {
        self.epoch_ticks = ticks.max(1);
        self
    }

    pub fn schedule(&self) -> &GasSchedule {
        &self.schedule
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn receipts(&self) -> &[TxReceipt] {
        &self.receipts
    }

    pub fn epoch_path(&self) -> &[Epoch] {
        &self.epoch_path
    }

    pub fn gas_sink(&self) -> Amount {
        self.gas_sink
    }

    pub fn minted(&self) -> Amount {
        self.minted
    }

    /// Balances + gas sink + burned. Equals `minted()` at all times.
    pub fn total_value(&self) -> Amount {
        self.world.accounts.values().map(|a| a.balance).sum::<Amount>() + self.gas_sink + self.world.burned
    }

    pub fn balance(&self, addr: &Address) -> Amount {
        self.world.balance(addr)
    }

    pub fn nonce(&self, addr: &Address) -> Option<u64> {
        self.world.account(addr).map(|a| a.nonce)
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn create_eoa<R: RngCore + CryptoRng>(&mut self, rng: &mut R) -> KeyPair {
        loop {
            let kp = keypair_gen(rng);
            if let alloc::collections::btree_map::Entry::Vacant(slot) = self.world.accounts.entry(kp.address) {
                slot.insert(Account { address: kp.address, kind: AccountKind::Eoa, balance: 0, nonce: 0 });
                return kp;
            }
        }
    }

    pub fn fund(&mut self, addr: &Address, amount: Amount) -> Result<(), LedgerError> {
        let acct = self.world.accounts.get_mut(addr).ok_or(LedgerError::UnknownAccount(*addr))?;
        let minted = self.minted.checked_add(amount).ok_or(LedgerError::SupplyOverflow(amount))?;
        acct.balance += amount;
        self.minted = minted;
        Ok(())
    }

    /// Zero-gas value movement between EOAs, used for off-chain escrow deals.
    pub fn escrow_transfer(&mut self, from: &Address, to: &Address, amount: Amount) -> Result<(), LedgerError> {
        self.require_eoa(from)?;
        self.world.transfer(from, to, amount)
    }

    fn require_eoa(&self, addr: &Address) -> Result<(), LedgerError> {
        match self.world.account(addr) {
            None => Err(LedgerError::UnknownAccount(*addr)),
            Some(a) if a.kind != AccountKind::Eoa => Err(LedgerError::NotEoa(*addr)),
            Some(_) => Ok(()),
        }
    }

    fn charge(&mut self, caller: &Address, gas: u64) -> Result<Amount, LedgerError> {
        let fee = self.schedule.fee_wei(gas);
        self.world.debit(caller, fee)?;
        self.gas_sink += fee;
        Ok(fee)
    }

    pub fn deploy_contract(&mut self, creator: &Address, code: &ContractCode) -> Result<Address, LedgerError> {
        self.require_eoa(creator)?;
        let function = code.deploy_function().ok_or(LedgerError::NotDeployable)?;
        let gas = self.schedule.gas(function)?;
        let fee = self.charge(creator, gas)?;
        let addr = self.world.create_contract(creator, code.instantiate(creator))?;
        self.push_receipt(TxReceipt {
            seq: 0,
            caller: *creator,
            target: addr,
            function: function.to_string(),
            args: Calldata(code.to_bytes()),
            value: 0,
            gas_used: gas,
            fee_wei: fee,
            usd_cost: self.schedule.usd(gas),
            success: true,
            revert: None,
            emitted: Vec::new(),
            frame: self.clock.frame,
            epoch: self.clock.epoch,
            phase: self.phase,
            created: Some(addr),
        });
        Ok(addr)
    }

    /// Applies `call` atomically. Gas is charged even when the contract
    /// reverts; a revert rolls back everything else.
    pub fn submit_tx(&mut self, caller: &Address, target: &Address, call: &Call) -> Result<TxReceipt, LedgerError> {
        self.require_eoa(caller)?;
        if self.world.contract(target).is_none() {
            return Err(LedgerError::UnknownTarget(*target));
        }
        let function = call.function_id();
        let gas = call.gas(&self.schedule)?;
        let fee = self.charge(caller, gas)?;
        self.world.bump_nonce(caller);

        let snapshot = self.world.clone();
        let ctx = CallContext { caller: *caller, value: call.value(), fee, clock: self.clock };
        let outcome = self
            .world
            .transfer(caller, target, ctx.value)
            .map_err(contracts::Revert::from)
            .and_then(|_| contracts::execute(&mut self.world, &ctx, target, call));
        let (success, revert, emitted, created) = match outcome {
            Ok(out) => (true, None, out.events, out.created),
            Err(r) => {
                self.world = snapshot;
                (false, Some(r.to_string()), Vec::new(), None)
            }
        };
        self.push_receipt(TxReceipt {
            seq: 0,
            caller: *caller,
            target: *target,
            function: function.to_string(),
            args: Calldata(call.encode_args()),
            value: ctx.value,
            gas_used: gas,
            fee_wei: fee,
            usd_cost: self.schedule.usd(gas),
            success,
            revert,
            emitted,
            frame: self.clock.frame,
            epoch: self.clock.epoch,
            phase: self.phase,
            created,
        });
        Ok(self.receipts.last().expect("pushed").clone())
    }

    fn push_receipt(&mut self, mut r: TxReceipt) {
        r.seq = self.receipts.len() as u64;
        self.receipts.push(r);
    }

    pub fn now(&self) -> Clock {
        self.clock
    }

    pub fn current_time(&self) -> TimeFrame {
        self.clock.frame
    }

    pub fn current_epoch(&self) -> Option<Epoch> {
        self.clock.epoch
    }

    pub fn advance_time(&mut self, to: TimeFrame) -> Result<(), LedgerError> {
        if to < self.clock.frame {
            return Err(LedgerError::TimeRegression { from: self.clock.frame, to });
        }
        if to > self.clock.frame {
            self.clock.frame = to;
            self.clock.tick = 0;
        }
        Ok(())
    }

    /// Moves the running service to `to`; only edges of the epoch graph (or
    /// entering epoch 0 from no epoch) are accepted.
    pub fn enter_epoch(&mut self, to: Epoch) -> Result<(), LedgerError> {
        let ok = match self.clock.epoch {
            None => to == Epoch::PREMATURE_REPORTING,
            Some(from) => from.can_step_to(to),
        };
        if !ok {
            return Err(LedgerError::IllegalTransition { from: self.clock.epoch, to });
        }
        self.clock.epoch = Some(to);
        self.clock.tick = 0;
        self.epoch_path.push(to);
        Ok(())
    }

    /// One clock tick. Epochs 3, 4 and 5 expire after `epoch_ticks` ticks;
    /// returns the epoch entered on expiry.
    pub fn tick(&mut self) -> Option<Epoch> {
        self.clock.tick += 1;
        let next = self.clock.epoch.and_then(Epoch::timeout_successor)?;
        if self.clock.tick >= self.epoch_ticks {
            self.enter_epoch(next).expect("timeout successor is a graph edge");
            Some(next)
        } else {
            None
        }
    }

    /// Canonical bytes of everything written on chain so far, without gas
    /// payer identities or fees: every receipt's (target, function, args,
    /// value, outcome) followed by the storage of each contract.
    pub fn onchain_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for r in &self.receipts {
            out.extend_from_slice(r.target.as_bytes());
            out.extend_from_slice(&(r.function.len() as u32).to_be_bytes());
            out.extend_from_slice(r.function.as_bytes());
            out.extend_from_slice(&(r.args.0.len() as u32).to_be_bytes());
            out.extend_from_slice(&r.args.0);
            out.extend_from_slice(&r.value.to_be_bytes());
            out.push(r.success as u8);
        }
        for (addr, state) in &self.world.contracts {
            out.extend_from_slice(addr.as_bytes());
            let bytes = state.storage_bytes();
            out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
            out.extend_from_slice(&bytes);
        }
        out
    }
}

#[cfg(test)]
mod tests;
