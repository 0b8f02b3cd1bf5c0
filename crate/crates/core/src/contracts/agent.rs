use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    unsupported, Agreement, Call, CallContext, CreditReason, Event, LayerAssignment, Outcome, Revert, Verdict,
};
use crate::crypto::{hash256, Address, Digest256, PublicKey, SecretKey256};
use crate::ledger::{fns, predict_address, Amount, Epoch, TimeFrame, World};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MailmanStatus {
    Active,
    Withdrawn,
    Slashed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MailmanRecord {
    pub address: Address,
    pub whisper_pub: PublicKey,
    pub timeframe_pubkeys: BTreeMap<TimeFrame, PublicKey>,
    pub deposit: Amount,
    pub status: MailmanStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceStatus {
    Pending,
    DeliveredLight,
    DeliveredHeavy,
    Failed,
}

impl ServiceStatus {
    pub fn is_delivered(self) -> bool {
        matches!(self, ServiceStatus::DeliveredLight | ServiceStatus::DeliveredHeavy)
    }
}

/// Public parameters of one delivery. Carries no mailman identities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceSpec {
    pub timeframe: TimeFrame,
    pub l: u32,
    pub t: u32,
    pub n: u32,
    pub assignment: LayerAssignment,
    pub switch_addr: Address,
    pub sup_addr: Address,
    pub recipient: Address,
    pub receipt_commitment: Digest256,
    pub remuneration: Amount,
}

impl ServiceSpec {
    pub fn recruits(&self) -> u32 {
        self.assignment.recruits(self.n, self.l)
    }

    pub fn validate(&self) -> Result<(), Revert> {
        if self.l == 0 {
            return Err(Revert::InvalidParams("l must be at least 1"));
        }
        if self.t == 0 || self.t > self.n {
            return Err(Revert::InvalidParams("need 1 <= t <= n"));
        }
        if self.assignment == LayerAssignment::Cyclic && self.l > self.n {
            return Err(Revert::InvalidParams("cyclic layering needs l <= n"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceRecord {
    pub spec: ServiceSpec,
    pub sender: Address,
    pub status: ServiceStatus,
    pub verdict: Option<Verdict>,
    /// Lightweight-mode relationships proven at settlement.
    pub proven: BTreeMap<u32, Address>,
    pub paid: BTreeSet<Address>,
    pub sender_settled: bool,
}

impl ServiceRecord {
    /// Per-mailman remuneration share and the set of mailmen entitled to it.
    fn payees(&self, world: &World) -> (Amount, BTreeSet<Address>) {
        let r = self.spec.remuneration;
        match self.status {
            ServiceStatus::DeliveredLight => {
                (r / self.spec.recruits() as Amount, self.proven.values().copied().collect())
            }
            ServiceStatus::DeliveredHeavy => {
                let eligible: BTreeSet<Address> = match &self.verdict {
                    Some(v) => {
                        let slashed = v.slashed();
                        v.identities.values().filter(|a| !slashed.contains(a)).copied().collect()
                    }
                    // nothing to adjudicate: read the revealed identities directly
                    None => world
                        .contract(&self.spec.switch_addr)
                        .and_then(|c| c.as_switch())
                        .and_then(|s| s.sup)
                        .and_then(|sup| world.contract(&sup))
                        .and_then(|c| c.as_sup())
                        .map(|sup| sup.identities.values().copied().collect())
                        .unwrap_or_default(),
                };
                let share = if eligible.is_empty() { 0 } else { r / eligible.len() as Amount };
                (share, eligible)
            }
            _ => (0, BTreeSet::new()),
        }
    }

    /// Remuneration that no mailman can ever claim.
    fn sender_refund(&self, world: &World) -> Amount {
        let r = self.spec.remuneration;
        match self.status {
            ServiceStatus::DeliveredLight => r - (r / self.spec.recruits() as Amount) * self.spec.recruits() as Amount,
            ServiceStatus::DeliveredHeavy => {
                let (share, eligible) = self.payees(world);
                r - share * eligible.len() as Amount
            }
            ServiceStatus::Failed => r,
            ServiceStatus::Pending => 0,
        }
    }
}

/// Registry of mailmen and services; escrows deposits and remuneration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentContract {
    pub min_deposit: Amount,
    pub mailmen: BTreeMap<Address, MailmanRecord>,
    pub services: BTreeMap<Address, ServiceRecord>,
    pub credits: BTreeMap<Address, Amount>,
}

impl AgentContract {
    pub fn new(min_deposit: Amount) -> Self {
        Self { min_deposit, mailmen: BTreeMap::new(), services: BTreeMap::new(), credits: BTreeMap::new() }
    }

    pub fn mailman(&self, addr: &Address) -> Option<&MailmanRecord> {
        self.mailmen.get(addr)
    }

    pub fn service(&self, switch: &Address) -> Option<&ServiceRecord> {
        self.services.get(switch)
    }

    /// Registered timeframe key of `mailman` for the service's time-frame.
    pub fn timeframe_pubkey(&self, mailman: &Address, tf: &TimeFrame) -> Option<&PublicKey> {
        self.mailmen.get(mailman)?.timeframe_pubkeys.get(tf)
    }

    pub(crate) fn dispatch(
        &mut self,
        world: &mut World,
        ctx: &CallContext,
        me: &Address,
        call: &Call,
    ) -> Result<Outcome, Revert> {
        let events = match call {
            Call::NewMailman { whisper_pub, timeframe_pubkeys, .. } => {
                self.new_mailman(ctx, *whisper_pub, timeframe_pubkeys)?
            }
            Call::NewService { timeframe, l, t, n, assignment, switch, sup, recipient, receipt_commitment, .. } => {
                let spec = ServiceSpec {
                    timeframe: *timeframe,
                    l: *l,
                    t: *t,
                    n: *n,
                    assignment: *assignment,
                    switch_addr: *switch,
                    sup_addr: *sup,
                    recipient: *recipient,
                    receipt_commitment: *receipt_commitment,
                    remuneration: ctx.value,
                };
                self.new_service(world, ctx, me, spec)?
            }
            Call::RecipientReceipt { receipt, sender, switch } => {
                self.recipient_receipt(world, ctx, receipt, sender, switch)?
            }
            Call::ProveRelationship { switch, agreement } => self.prove_relationship(ctx, switch, agreement)?,
            Call::Withdraw => self.withdraw(world, ctx, me)?,
            _ => return Err(unsupported(call)),
        };
        Ok(Outcome { events, created: None })
    }

    fn new_mailman(
        &mut self,
        ctx: &CallContext,
        whisper_pub: PublicKey,
        timeframe_pubkeys: &[(TimeFrame, PublicKey)],
    ) -> Result<Vec<Event>, Revert> {
        if self.mailmen.contains_key(&ctx.caller) {
            return Err(Revert::AlreadyRegistered);
        }
        if ctx.value < self.min_deposit {
            return Err(Revert::DepositTooLow { min: self.min_deposit, got: ctx.value });
        }
        self.mailmen.insert(
            ctx.caller,
            MailmanRecord {
                address: ctx.caller,
                whisper_pub,
                timeframe_pubkeys: timeframe_pubkeys.iter().copied().collect(),
                deposit: ctx.value,
                status: MailmanStatus::Active,
            },
        );
        Ok(alloc::vec![Event::MailmanRegistered { mailman: ctx.caller, deposit: ctx.value }])
    }

    fn new_service(
        &mut self,
        world: &World,
        ctx: &CallContext,
        me: &Address,
        spec: ServiceSpec,
    ) -> Result<Vec<Event>, Revert> {
        if spec.timeframe <= ctx.clock.frame {
            return Err(Revert::PastTimeframe);
        }
        spec.validate()?;
        if spec.remuneration == 0 {
            return Err(Revert::UnescrowedRemuneration);
        }
        let switch = world
            .contract(&spec.switch_addr)
            .and_then(|c| c.as_switch())
            .ok_or(Revert::InvalidParams("switch contract"))?;
        if switch.agent != *me || switch.owner != ctx.caller {
            return Err(Revert::InvalidParams("switch contract"));
        }
        if spec.sup_addr != predict_address(&spec.switch_addr, 0) {
            return Err(Revert::InvalidParams("supplementary address"));
        }
        if self.services.contains_key(&spec.switch_addr) {
            return Err(Revert::DuplicateService);
        }
        let switch_addr = spec.switch_addr;
        self.services.insert(
            switch_addr,
            ServiceRecord {
                spec,
                sender: ctx.caller,
                status: ServiceStatus::Pending,
                verdict: None,
                proven: BTreeMap::new(),
                paid: BTreeSet::new(),
                sender_settled: false,
            },
        );
        Ok(alloc::vec![Event::ServiceCreated { switch: switch_addr }])
    }

    fn recipient_receipt(
        &mut self,
        world: &World,
        ctx: &CallContext,
        receipt: &SecretKey256,
        sender: &Address,
        switch: &Address,
    ) -> Result<Vec<Event>, Revert> {
        ctx.require_epoch(fns::RECIPIENT_RECEIPT, &[Epoch::LIGHTWEIGHT, Epoch::SECOND_RECEIPT])?;
        let rec = self.services.get_mut(switch).ok_or(Revert::UnknownService)?;
        if ctx.caller != rec.spec.recipient {
            return Err(Revert::NotRecipient);
        }
        if *sender != rec.sender {
            return Err(Revert::InvalidParams("sender address"));
        }
        if hash256(receipt.as_bytes()) != rec.spec.receipt_commitment {
            return Err(Revert::WrongReceipt);
        }
        if rec.status != ServiceStatus::Pending {
            return Err(Revert::NotPending);
        }
        let status = if ctx.clock.epoch == Some(Epoch::LIGHTWEIGHT) {
            ServiceStatus::DeliveredLight
        } else {
            let heavy = world.contract(switch).and_then(|c| c.as_switch()).is_some_and(|s| s.sup.is_some());
            if !heavy {
                return Err(Revert::InvalidParams("no supplementary contract"));
            }
            ServiceStatus::DeliveredHeavy
        };
        rec.status = status;
        Ok(alloc::vec![Event::StatusChanged { service: *switch, status }])
    }

    fn prove_relationship(
        &mut self,
        ctx: &CallContext,
        switch: &Address,
        agreement: &Agreement,
    ) -> Result<Vec<Event>, Revert> {
        ctx.require_epoch(fns::PROVE_RELATIONSHIP, &[Epoch::SETTLEMENT])?;
        let mut events = self.finalize(ctx.clock.epoch);
        if !self.mailmen.contains_key(&ctx.caller) {
            return Err(Revert::NotMailman);
        }
        let rec = self.services.get_mut(switch).ok_or(Revert::UnknownService)?;
        if rec.status != ServiceStatus::DeliveredLight {
            return Err(Revert::NotLightDelivered);
        }
        if agreement.index == 0 || agreement.index > rec.spec.recruits() {
            return Err(Revert::IndexOutOfRange(agreement.index));
        }
        let (mailman, sender) = agreement.signers(switch)?;
        if mailman != ctx.caller || sender != rec.sender {
            return Err(Revert::WrongSigner);
        }
        if rec.proven.contains_key(&agreement.index) {
            return Err(Revert::DuplicateIndex(agreement.index));
        }
        if rec.proven.values().any(|a| *a == mailman) {
            return Err(Revert::DuplicateIdentity(mailman));
        }
        rec.proven.insert(agreement.index, mailman);
        events.push(Event::RelationshipProven { switch: *switch, index: agreement.index, mailman });
        Ok(events)
    }

    /// Services still pending once settlement starts have failed.
    fn finalize(&mut self, epoch: Option<Epoch>) -> Vec<Event> {
        let mut events = Vec::new();
        if epoch != Some(Epoch::SETTLEMENT) {
            return events;
        }
        for (switch, rec) in self.services.iter_mut() {
            if rec.status == ServiceStatus::Pending {
                rec.status = ServiceStatus::Failed;
                events.push(Event::StatusChanged { service: *switch, status: ServiceStatus::Failed });
            }
        }
        events
    }

    /// Marks everything owed to `who` as paid and returns the total.
    fn settle(&mut self, world: &World, epoch: Option<Epoch>, who: &Address) -> (Amount, Vec<Event>) {
        let mut events = self.finalize(epoch);
        let mut total = self.credits.remove(who).unwrap_or(0);
        if let Some(m) = self.mailmen.get_mut(who) {
            if m.status == MailmanStatus::Active {
                total += m.deposit;
                m.status = MailmanStatus::Withdrawn;
            }
        }
        for rec in self.services.values_mut() {
            if rec.status == ServiceStatus::Pending {
                continue;
            }
            let (share, payees) = rec.payees(world);
            if payees.contains(who) && rec.paid.insert(*who) && share > 0 {
                total += share;
                events.push(Event::RemunerationPaid { to: *who, amount: share });
            }
            if rec.sender == *who && !rec.sender_settled {
                rec.sender_settled = true;
                total += rec.sender_refund(world);
            }
        }
        (total, events)
    }

    /// What a `withdraw` by `who` would pay out at `epoch`.
    pub fn owed(&self, world: &World, epoch: Option<Epoch>, who: &Address) -> Amount {
        self.clone().settle(world, epoch, who).0
    }

    fn withdraw(&mut self, world: &mut World, ctx: &CallContext, me: &Address) -> Result<Vec<Event>, Revert> {
        if !matches!(ctx.clock.epoch, None | Some(Epoch::SETTLEMENT)) {
            return Err(Revert::WrongEpoch { function: fns::WITHDRAW, epoch: ctx.clock.epoch });
        }
        let (total, mut events) = self.settle(world, ctx.clock.epoch, &ctx.caller);
        if total == 0 {
            return Err(Revert::NothingToWithdraw);
        }
        world.transfer(me, &ctx.caller, total)?;
        events.push(Event::Withdrawn { to: ctx.caller, amount: total });
        Ok(events)
    }

    /// Applies the slashing verdict of a supplementary contract.
    pub(crate) fn apply_verdict(
        &mut self,
        world: &mut World,
        me: &Address,
        switch: &Address,
        verdict: Verdict,
    ) -> Result<Vec<Event>, Revert> {
        let mut events = Vec::new();
        let slashed = verdict.slashed();
        let mut pool: Amount = 0;
        let mut done = BTreeSet::new();
        for order in &verdict.orders {
            if !done.insert(order.accused) {
                continue;
            }
            let amount = match self.mailmen.get_mut(&order.accused) {
                Some(m) => {
                    let amount = if m.status == MailmanStatus::Active { m.deposit } else { 0 };
                    m.status = MailmanStatus::Slashed;
                    amount
                }
                None => 0,
            };
            pool += amount;
            events.push(Event::Slashed { mailman: order.accused, reason: order.reason, amount });
            if let Some(reporter) = order.reporter.filter(|r| !slashed.contains(r)) {
                let reward = amount / 2;
                if reward > 0 {
                    *self.credits.entry(reporter).or_default() += reward;
                    pool -= reward;
                    events.push(Event::Credited { to: reporter, amount: reward, reason: CreditReason::ReportReward });
                }
            }
        }
        for (payer, cost) in &verdict.mode_switch_costs {
            if slashed.contains(payer) || pool == 0 {
                continue;
            }
            let refund = (*cost).min(pool);
            pool -= refund;
            *self.credits.entry(*payer).or_default() += refund;
            events.push(Event::Credited { to: *payer, amount: refund, reason: CreditReason::ModeSwitchRefund });
        }
        if pool > 0 {
            world.burn(me, pool)?;
            events.push(Event::Burned { amount: pool });
        }
        let rec = self.services.get_mut(switch).ok_or(Revert::UnknownService)?;
        rec.verdict = Some(verdict);
        Ok(events)
    }
}
