use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    unsupported, Call, CallContext, CreditReason, Event, MailmanRecord, MailmanStatus, Outcome, Revert, ServiceStatus,
    SlashReason,
};
use crate::crypto::{hash256, Address, Digest256, KeyShare, PublicKey, SecretKey256};
use crate::ledger::{fns, Amount, Epoch, TimeFrame, World};

/// Commitment stored on chain for a strawman share.
pub fn share_commitment(share: &KeyShare) -> Digest256 {
    hash256(&share.encode())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrawmanService {
    pub sender: Address,
    pub timeframe: TimeFrame,
    pub t: u32,
    pub n: u32,
    pub recipient: Address,
    /// Public list of (mailman, hash(share)).
    pub mailmen: Vec<(Address, Digest256)>,
    pub receipt_commitment: Digest256,
    pub remuneration: Amount,
    pub revealed: BTreeMap<Address, KeyShare>,
    pub slashed: BTreeSet<Address>,
    pub status: ServiceStatus,
    pub paid: BTreeSet<Address>,
    pub sender_settled: bool,
}

impl StrawmanService {
    fn payees(&self) -> BTreeSet<Address> {
        if self.status != ServiceStatus::DeliveredLight {
            return BTreeSet::new();
        }
        self.revealed.keys().filter(|a| !self.slashed.contains(a)).copied().collect()
    }

    fn share(&self) -> Amount {
        self.remuneration / self.n as Amount
    }
}

/// Baseline contract that publishes every relationship at setup.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrawmanContract {
    pub min_deposit: Amount,
    pub mailmen: BTreeMap<Address, MailmanRecord>,
    pub services: BTreeMap<u64, StrawmanService>,
    pub next_id: u64,
    pub credits: BTreeMap<Address, Amount>,
}

impl StrawmanContract {
    pub fn new(min_deposit: Amount) -> Self {
        Self { min_deposit, mailmen: BTreeMap::new(), services: BTreeMap::new(), next_id: 0, credits: BTreeMap::new() }
    }

    pub(crate) fn dispatch(
        &mut self,
        world: &mut World,
        ctx: &CallContext,
        me: &Address,
        call: &Call,
    ) -> Result<Outcome, Revert> {
        let events = match call {
            Call::NewMailman { whisper_pub, .. } => self.new_mailman(ctx, *whisper_pub)?,
            Call::StrawmanNewService { timeframe, t, n, recipient, mailmen, receipt_commitment, .. } => {
                self.new_service(ctx, *timeframe, *t, *n, *recipient, mailmen, *receipt_commitment)?
            }
            Call::StrawmanReportPremature { service, share } => self.report_premature(ctx, *service, share)?,
            Call::RevealShare { service, share } => self.reveal_share(ctx, *service, share)?,
            Call::RevealReceipt { service, receipt } => self.reveal_receipt(ctx, *service, receipt)?,
            Call::Withdraw => self.withdraw(world, ctx, me)?,
            _ => return Err(unsupported(call)),
        };
        Ok(Outcome { events, created: None })
    }

    fn new_mailman(&mut self, ctx: &CallContext, whisper_pub: PublicKey) -> Result<Vec<Event>, Revert> {
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
                timeframe_pubkeys: BTreeMap::new(),
                deposit: ctx.value,
                status: MailmanStatus::Active,
            },
        );
        Ok(alloc::vec![Event::MailmanRegistered { mailman: ctx.caller, deposit: ctx.value }])
    }

    #[allow(clippy::too_many_arguments)]
    fn new_service(
        &mut self,
        ctx: &CallContext,
        timeframe: TimeFrame,
        t: u32,
        n: u32,
        recipient: Address,
        mailmen: &[(Address, Digest256)],
        receipt_commitment: Digest256,
    ) -> Result<Vec<Event>, Revert> {
        if timeframe <= ctx.clock.frame {
            return Err(Revert::PastTimeframe);
        }
        if t == 0 || t > n || mailmen.len() != n as usize {
            return Err(Revert::InvalidParams("need 1 <= t <= n and n listed mailmen"));
        }
        if ctx.value == 0 {
            return Err(Revert::UnescrowedRemuneration);
        }
        let mut seen = BTreeSet::new();
        for (m, _) in mailmen {
            if !self.mailmen.contains_key(m) {
                return Err(Revert::NotMailman);
            }
            if !seen.insert(*m) {
                return Err(Revert::DuplicateIdentity(*m));
            }
        }
        let id = self.next_id;
        self.next_id += 1;
        self.services.insert(
            id,
            StrawmanService {
                sender: ctx.caller,
                timeframe,
                t,
                n,
                recipient,
                mailmen: mailmen.to_vec(),
                receipt_commitment,
                remuneration: ctx.value,
                revealed: BTreeMap::new(),
                slashed: BTreeSet::new(),
                status: ServiceStatus::Pending,
                paid: BTreeSet::new(),
                sender_settled: false,
            },
        );
        Ok(alloc::vec![Event::StrawmanServiceCreated { id, mailmen: mailmen.iter().map(|(m, _)| *m).collect() }])
    }

    /// A leaked share is matched against the public commitments; the
    /// holder's deposit goes half to the informer and half to the sender.
    fn report_premature(&mut self, ctx: &CallContext, id: u64, share: &KeyShare) -> Result<Vec<Event>, Revert> {
        ctx.require_epoch(fns::STRAWMAN_REPORT_PREMATURE, &[Epoch::PREMATURE_REPORTING])?;
        if !self.mailmen.contains_key(&ctx.caller) {
            return Err(Revert::NotMailman);
        }
        let svc = self.services.get_mut(&id).ok_or(Revert::UnknownService)?;
        let c = share_commitment(share);
        let accused =
            svc.mailmen.iter().find(|(_, h)| *h == c).map(|(m, _)| *m).ok_or(Revert::AccusationContradicted)?;
        if accused == ctx.caller {
            return Err(Revert::AccusationContradicted);
        }
        if !svc.slashed.insert(accused) {
            return Err(Revert::DuplicateReport);
        }
        let rec = self.mailmen.get_mut(&accused).ok_or(Revert::NotMailman)?;
        let amount = if rec.status == MailmanStatus::Active { rec.deposit } else { 0 };
        rec.status = MailmanStatus::Slashed;
        let informer = amount / 2;
        let sender = svc.sender;
        *self.credits.entry(ctx.caller).or_default() += informer;
        *self.credits.entry(sender).or_default() += amount - informer;
        Ok(alloc::vec![
            Event::Slashed { mailman: accused, reason: SlashReason::Premature, amount },
            Event::Credited { to: ctx.caller, amount: informer, reason: CreditReason::Informer },
            Event::Credited { to: sender, amount: amount - informer, reason: CreditReason::SenderCompensation },
        ])
    }

    fn reveal_share(&mut self, ctx: &CallContext, id: u64, share: &KeyShare) -> Result<Vec<Event>, Revert> {
        ctx.require_epoch(fns::REVEAL_SHARE, &[Epoch::LIGHTWEIGHT])?;
        let svc = self.services.get_mut(&id).ok_or(Revert::UnknownService)?;
        let (_, c) = svc.mailmen.iter().find(|(m, _)| *m == ctx.caller).ok_or(Revert::NotMailman)?;
        if *c != share_commitment(share) {
            return Err(Revert::InvalidParams("share does not match commitment"));
        }
        if svc.revealed.insert(ctx.caller, *share).is_some() {
            return Err(Revert::AlreadyRevealed);
        }
        Ok(alloc::vec![Event::ShareRevealed { id, mailman: ctx.caller }])
    }

    fn reveal_receipt(&mut self, ctx: &CallContext, id: u64, receipt: &SecretKey256) -> Result<Vec<Event>, Revert> {
        ctx.require_epoch(fns::REVEAL_RECEIPT, &[Epoch::LIGHTWEIGHT])?;
        let svc = self.services.get_mut(&id).ok_or(Revert::UnknownService)?;
        if ctx.caller != svc.recipient {
            return Err(Revert::NotRecipient);
        }
        if hash256(receipt.as_bytes()) != svc.receipt_commitment {
            return Err(Revert::WrongReceipt);
        }
        if svc.status != ServiceStatus::Pending {
            return Err(Revert::NotPending);
        }
        svc.status = ServiceStatus::DeliveredLight;
        Ok(alloc::vec![Event::StatusChanged { service: Address(id_address(id)), status: svc.status }])
    }

    fn settle(&mut self, epoch: Option<Epoch>, who: &Address) -> (Amount, Vec<Event>) {
        let mut events = Vec::new();
        let mut total = self.credits.remove(who).unwrap_or(0);
        if let Some(m) = self.mailmen.get_mut(who) {
            if m.status == MailmanStatus::Active {
                total += m.deposit;
                m.status = MailmanStatus::Withdrawn;
            }
        }
        for (id, svc) in self.services.iter_mut() {
            if svc.status == ServiceStatus::Pending && epoch == Some(Epoch::SETTLEMENT) {
                svc.status = ServiceStatus::Failed;
                events.push(Event::StatusChanged { service: Address(id_address(*id)), status: svc.status });
            }
            if svc.status == ServiceStatus::Pending {
                continue;
            }
            let payees = svc.payees();
            if payees.contains(who) && svc.paid.insert(*who) && svc.share() > 0 {
                total += svc.share();
                events.push(Event::RemunerationPaid { to: *who, amount: svc.share() });
            }
            if svc.sender == *who && !svc.sender_settled {
                svc.sender_settled = true;
                total += svc.remuneration - svc.share() * payees.len() as Amount;
            }
        }
        (total, events)
    }

    pub fn owed(&self, epoch: Option<Epoch>, who: &Address) -> Amount {
        self.clone().settle(epoch, who).0
    }

    fn withdraw(&mut self, world: &mut World, ctx: &CallContext, me: &Address) -> Result<Vec<Event>, Revert> {
        if !matches!(ctx.clock.epoch, None | Some(Epoch::SETTLEMENT)) {
            return Err(Revert::WrongEpoch { function: fns::WITHDRAW, epoch: ctx.clock.epoch });
        }
        let (total, mut events) = self.settle(ctx.clock.epoch, &ctx.caller);
        if total == 0 {
            return Err(Revert::NothingToWithdraw);
        }
        world.transfer(me, &ctx.caller, total)?;
        events.push(Event::Withdrawn { to: ctx.caller, amount: total });
        Ok(events)
    }
}

/// Strawman services are numbered; events refer to them by this pseudo
/// address.
pub fn id_address(id: u64) -> [u8; 20] {
    let mut out = [0u8; 20];
    out[12..].copy_from_slice(&id.to_be_bytes());
    out
}
