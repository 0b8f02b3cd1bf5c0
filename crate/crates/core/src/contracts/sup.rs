use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{agent_of, unsupported, Agreement, Call, CallContext, ContractState, Event, Outcome, Revert, SlashReason};
use crate::crypto::{pubkey_of, Address, PrivateKey};
use crate::ledger::{fns, Amount, Epoch, World};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrematureReport {
    pub reporter: Address,
    pub privkey: PrivateKey,
}

/// One deposit confiscation decided at the end of epoch 4.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlashOrder {
    pub accused: Address,
    pub reason: SlashReason,
    /// Rewarded with half of the confiscated deposit.
    pub reporter: Option<Address>,
}

/// What the supplementary contract forwards to the agent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub identities: BTreeMap<u32, Address>,
    pub orders: Vec<SlashOrder>,
    /// Fees paid for heavyweight-mode transactions, refunded from the
    /// confiscated deposits in this order.
    pub mode_switch_costs: Vec<(Address, Amount)>,
}

impl Verdict {
    pub fn slashed(&self) -> BTreeSet<Address> {
        self.orders.iter().map(|o| o.accused).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupContract {
    pub agent: Address,
    pub switch: Address,
    pub deployed_by: Address,
    pub premature_reports: BTreeMap<u32, PrematureReport>,
    pub identities: BTreeMap<u32, Address>,
    pub privkeys: BTreeMap<u32, (PrivateKey, bool)>,
    pub absent_reports: BTreeMap<u32, Address>,
    pub fake_reports: BTreeMap<u32, Address>,
    pub mode_switch_costs: Vec<(Address, Amount)>,
    pub informed: bool,
}

impl SupContract {
    pub fn new(agent: Address, switch: Address, deployed_by: Address) -> Self {
        Self {
            agent,
            switch,
            deployed_by,
            premature_reports: BTreeMap::new(),
            identities: BTreeMap::new(),
            privkeys: BTreeMap::new(),
            absent_reports: BTreeMap::new(),
            fake_reports: BTreeMap::new(),
            mode_switch_costs: Vec::new(),
            informed: false,
        }
    }

    pub(crate) fn dispatch(
        &mut self,
        world: &mut World,
        ctx: &CallContext,
        _me: &Address,
        call: &Call,
    ) -> Result<Outcome, Revert> {
        let events = match call {
            Call::ReportPremature { index, privkey } => self.report_premature(world, ctx, *index, privkey)?,
            Call::RevealIdentity { agreements } => self.reveal_identity(world, ctx, agreements)?,
            Call::RevealPrivkey { index, privkey } => self.reveal_privkey(world, ctx, *index, privkey)?,
            Call::ReportAbsent { index } => self.report_absent(world, ctx, *index)?,
            Call::ReportFake { index } => self.report_fake(world, ctx, *index)?,
            Call::InformAgent => self.inform_agent(world, ctx)?,
            _ => return Err(unsupported(call)),
        };
        if !matches!(call, Call::InformAgent) {
            self.mode_switch_costs.push((ctx.caller, ctx.fee));
        }
        Ok(Outcome { events, created: None })
    }

    fn recruits(&self, world: &World) -> Result<u32, Revert> {
        let agent = agent_of(world, &self.agent)?;
        Ok(agent.service(&self.switch).ok_or(Revert::UnknownService)?.spec.recruits())
    }

    fn require_mailman(&self, world: &World, who: &Address) -> Result<(), Revert> {
        agent_of(world, &self.agent)?.mailman(who).map(|_| ()).ok_or(Revert::NotMailman)
    }

    /// Whether `privkey` is the registered key of `mailman` for this
    /// service's time-frame.
    fn key_matches(&self, world: &World, mailman: &Address, privkey: &PrivateKey) -> Result<bool, Revert> {
        let agent = agent_of(world, &self.agent)?;
        let tf = agent.service(&self.switch).ok_or(Revert::UnknownService)?.spec.timeframe;
        let registered = agent.timeframe_pubkey(mailman, &tf);
        Ok(matches!((registered, pubkey_of(privkey)), (Some(r), Ok(p)) if *r == p))
    }

    fn report_premature(
        &mut self,
        world: &World,
        ctx: &CallContext,
        index: u32,
        privkey: &PrivateKey,
    ) -> Result<Vec<Event>, Revert> {
        ctx.require_epoch(fns::REPORT_PREMATURE, &[Epoch::PREMATURE_REPORTING])?;
        self.require_mailman(world, &ctx.caller)?;
        if index == 0 || index > self.recruits(world)? {
            return Err(Revert::IndexOutOfRange(index));
        }
        if self.premature_reports.contains_key(&index) {
            return Err(Revert::DuplicateReport);
        }
        self.premature_reports.insert(index, PrematureReport { reporter: ctx.caller, privkey: *privkey });
        Ok(alloc::vec![Event::PrematureReported { index, reporter: ctx.caller }])
    }

    fn reveal_identity(
        &mut self,
        world: &World,
        ctx: &CallContext,
        agreements: &[Agreement],
    ) -> Result<Vec<Event>, Revert> {
        ctx.require_epoch(fns::REVEAL_IDENTITY, &[Epoch::SWITCHING])?;
        if agreements.is_empty() {
            return Err(Revert::InvalidParams("empty identity list"));
        }
        let agent = agent_of(world, &self.agent)?;
        let rec = agent.service(&self.switch).ok_or(Revert::UnknownService)?;
        let recruits = rec.spec.recruits();
        let mut events = Vec::with_capacity(agreements.len());
        for a in agreements {
            if a.index == 0 || a.index > recruits {
                return Err(Revert::IndexOutOfRange(a.index));
            }
            let (mailman, sender) = a.signers(&self.switch)?;
            if sender != rec.sender {
                return Err(Revert::WrongSigner);
            }
            if agent.mailman(&mailman).is_none() {
                return Err(Revert::NotMailman);
            }
            if self.identities.contains_key(&a.index) {
                return Err(Revert::DuplicateIndex(a.index));
            }
            if self.identities.values().any(|m| *m == mailman) {
                return Err(Revert::DuplicateIdentity(mailman));
            }
            self.identities.insert(a.index, mailman);
            events.push(Event::IdentityRevealed { index: a.index, mailman });
        }
        Ok(events)
    }

    fn reveal_privkey(
        &mut self,
        world: &World,
        ctx: &CallContext,
        index: u32,
        privkey: &PrivateKey,
    ) -> Result<Vec<Event>, Revert> {
        ctx.require_epoch(fns::REVEAL_PRIVKEY, &[Epoch::HEAVYWEIGHT])?;
        let holder = *self.identities.get(&index).ok_or(Revert::UnknownIndex(index))?;
        if holder != ctx.caller {
            return Err(Revert::NotIndexHolder(index));
        }
        if self.privkeys.contains_key(&index) {
            return Err(Revert::AlreadyRevealed);
        }
        let matches = self.key_matches(world, &holder, privkey)?;
        self.privkeys.insert(index, (*privkey, matches));
        Ok(alloc::vec![Event::PrivkeyRevealed { index, mailman: holder, matches }])
    }

    fn report_absent(&mut self, world: &World, ctx: &CallContext, index: u32) -> Result<Vec<Event>, Revert> {
        ctx.require_epoch(fns::REPORT_ABSENT, &[Epoch::ABSENT_FAKE_REPORTING])?;
        self.require_mailman(world, &ctx.caller)?;
        let accused = *self.identities.get(&index).ok_or(Revert::UnknownIndex(index))?;
        if self.privkeys.contains_key(&index) || accused == ctx.caller {
            return Err(Revert::AccusationContradicted);
        }
        if self.absent_reports.contains_key(&index) {
            return Err(Revert::DuplicateReport);
        }
        self.absent_reports.insert(index, ctx.caller);
        Ok(alloc::vec![Event::AbsentReported { index, reporter: ctx.caller }])
    }

    fn report_fake(&mut self, world: &World, ctx: &CallContext, index: u32) -> Result<Vec<Event>, Revert> {
        ctx.require_epoch(fns::REPORT_FAKE, &[Epoch::ABSENT_FAKE_REPORTING])?;
        self.require_mailman(world, &ctx.caller)?;
        let accused = *self.identities.get(&index).ok_or(Revert::UnknownIndex(index))?;
        match self.privkeys.get(&index) {
            Some((_, false)) if accused != ctx.caller => {}
            _ => return Err(Revert::AccusationContradicted),
        }
        if self.fake_reports.contains_key(&index) {
            return Err(Revert::DuplicateReport);
        }
        self.fake_reports.insert(index, ctx.caller);
        Ok(alloc::vec![Event::FakeReported { index, reporter: ctx.caller }])
    }

    /// Adjudicates every report and hands the result to the agent.
    pub fn verdict(&self, world: &World) -> Result<Verdict, Revert> {
        let mut orders = Vec::new();
        for (index, rep) in &self.premature_reports {
            let accused = self.identities.get(index);
            let valid = match accused {
                Some(a) => self.key_matches(world, a, &rep.privkey)?,
                None => false,
            };
            orders.push(match (valid, accused) {
                (true, Some(a)) => {
                    SlashOrder { accused: *a, reason: SlashReason::Premature, reporter: Some(rep.reporter) }
                }
                _ => SlashOrder { accused: rep.reporter, reason: SlashReason::FalseReport, reporter: None },
            });
        }
        for (index, reporter) in &self.absent_reports {
            orders.push(SlashOrder {
                accused: self.identities[index],
                reason: SlashReason::Absent,
                reporter: Some(*reporter),
            });
        }
        for (index, reporter) in &self.fake_reports {
            orders.push(SlashOrder {
                accused: self.identities[index],
                reason: SlashReason::Fake,
                reporter: Some(*reporter),
            });
        }
        Ok(Verdict { identities: self.identities.clone(), orders, mode_switch_costs: self.mode_switch_costs.clone() })
    }

    fn inform_agent(&mut self, world: &mut World, ctx: &CallContext) -> Result<Vec<Event>, Revert> {
        ctx.require_epoch(fns::INFORM_AGENT, &[Epoch::ABSENT_FAKE_REPORTING])?;
        if self.informed {
            return Err(Revert::AlreadyInformed);
        }
        self.informed = true;
        let mut verdict = self.verdict(world)?;
        verdict.mode_switch_costs.push((ctx.caller, ctx.fee));
        let mut agent_state = world.take_contract(&self.agent).ok_or(Revert::UnknownService)?;
        let res = match &mut agent_state {
            ContractState::Agent(a) => a.apply_verdict(world, &self.agent, &self.switch, verdict),
            _ => Err(Revert::UnknownService),
        };
        world.put_contract(self.agent, agent_state);
        let mut events = alloc::vec![Event::AgentInformed { switch: self.switch }];
        events.extend(res?);
        Ok(events)
    }
}
