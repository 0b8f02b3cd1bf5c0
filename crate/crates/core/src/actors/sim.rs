use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::wire::{self, Leak, Sealed, Wire, LEAK, ONIONS, REVEAL};
use super::{Misbehavior, MisbehaviorKind, Mode, Policy, Scenario, ScenarioError, ScenarioTrace, SlashRecord};
use crate::channels::{ChannelMsg, MessageBus};
use crate::contracts::{
    mailman_digest, sender_digest, sup_code_digest, AgentContract, Agreement, Call, ContractCode, Event, ServiceStatus,
    SupContract, SwitchContract,
};
use crate::crypto::{
    hash256, keypair_gen, onion_peel, onion_wrap, recover_signer, sign, ss_restore, ss_split, sym_decrypt, sym_encrypt,
    Address, Hasher, KeyPair, KeyShare, LayerKey, Onion, PrivateKey, SecretKey256, Signature,
};
use crate::ledger::{predict_address, Amount, Epoch, Ledger, Phase, TxReceipt, WEI_PER_ETHER};
use crate::rng::SimRng;

/// Work a recruited mailman carries for the service.
#[derive(Clone, Debug)]
pub struct Job {
    pub index: u32,
    pub switch: Address,
    pub sup_code: ContractCode,
    pub vrs_sup: Signature,
    pub vrs_m: Signature,
    pub vrs_s: Option<Signature>,
    pub bundle: Option<(Vec<u8>, Signature)>,
}

#[derive(Clone, Debug)]
pub struct MailmanActor {
    pub pool_index: u32,
    pub account: KeyPair,
    pub whisper: KeyPair,
    pub timeframe_key: KeyPair,
    pub policy: Policy,
    /// Availability at the reveal obligations of epochs 1, 2 and 3.
    pub available: [bool; 3],
    pub job: Option<Job>,
    pub onions: Vec<Onion>,
    pub public_keys: Vec<PrivateKey>,
    pub leaks: Vec<Leak>,
}

impl MailmanActor {
    pub fn address(&self) -> Address {
        self.account.address
    }

    fn available_in(&self, epoch: Epoch) -> bool {
        match epoch.index() {
            1..=3 => self.available[epoch.index() as usize - 1],
            _ => true,
        }
    }

    /// Follows the protocol and is reachable in `epoch`.
    fn dutiful(&self, epoch: Epoch) -> bool {
        self.policy.compliant() && self.available_in(epoch)
    }
}

#[derive(Clone, Debug)]
pub struct SenderState {
    pub keypair: KeyPair,
    pub switch: Address,
    pub sup_addr: Address,
    pub sup_code: ContractCode,
    pub vrs_sup: Signature,
    pub key: SecretKey256,
    pub receipt: SecretKey256,
    /// Pool positions in index order (index `i+1` is `selected[i]`).
    pub selected: Vec<u32>,
    pub refused: BTreeSet<u32>,
    pub agreements: Vec<Agreement>,
    pub shares: Vec<KeyShare>,
    pub onions: Vec<Onion>,
    pub delivery: Option<Wire>,
}

#[derive(Clone, Debug)]
pub struct RecipientState {
    pub account: KeyPair,
    pub whisper: KeyPair,
    pub sender: Option<Address>,
    pub switch: Option<Address>,
    pub ciphertext: Option<Vec<u8>>,
    pub onions: Vec<Onion>,
    pub privkeys: Vec<PrivateKey>,
    pub key: Option<SecretKey256>,
    pub sealed: Option<Sealed>,
    pub submitted: bool,
}

/// Peels every onion as far as `keys` allow; returns the recovered shares.
pub fn peel_all(onions: &[Onion], keys: &[PrivateKey]) -> BTreeMap<u32, KeyShare> {
    let mut shares = BTreeMap::new();
    for onion in onions {
        let mut cur = onion.clone();
        'layers: while cur.layers_remaining > 0 {
            for k in keys {
                if let Ok(next) = onion_peel(&cur, k) {
                    cur = next;
                    continue 'layers;
                }
            }
            break;
        }
        if cur.layers_remaining == 0 {
            if let Ok(share) = cur.share() {
                shares.insert(share.index, share);
            }
        }
    }
    shares
}

fn dedup_keys(keys: &mut Vec<PrivateKey>) {
    let mut seen = BTreeSet::new();
    keys.retain(|k| seen.insert(*k.as_bytes()));
}

/// Digest the sender signs for the recipient: the ciphertext plus every onion.
pub(crate) fn delivery_digest(ciphertext: &[u8], onions: &[Onion]) -> crate::crypto::Digest256 {
    let mut h = Hasher::new().chain(ciphertext);
    for o in onions {
        h.update(hash256(&o.to_wire()).as_bytes());
    }
    h.finish()
}

const MAX_HANDSHAKE_ROUNDS: u32 = 64;

/// One simulated world: ledger, message bus and every actor.
pub struct Simulation {
    pub scenario: Scenario,
    pub ledger: Ledger,
    pub bus: MessageBus,
    pub admin: KeyPair,
    /// Agent contract, or the strawman contract in strawman mode.
    pub contract: Address,
    pub mailmen: Vec<MailmanActor>,
    pub sender_account: KeyPair,
    pub sender: Option<SenderState>,
    pub recipient: RecipientState,
    pub misbehaviors: Vec<Misbehavior>,
    pub initial_balances: BTreeMap<Address, Amount>,
    pub onchain_snapshot: Option<Vec<u8>>,
    pub refusals: u32,
    pub resends: u32,
    /// Pool positions recruited, in index order.
    pub recruited: Vec<u32>,
    pub(crate) rng_select: SimRng,
    pub(crate) rng_sender: SimRng,
    pub(crate) rng_deviation: SimRng,
}

impl Simulation {
    /// Registration phase: contract deployment, funded pool, sender and recipient.
    pub fn new(scenario: Scenario) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let seed = scenario.seed;
        let mut keys = SimRng::from_label(seed, "registration");
        let mut avail = SimRng::from_label(seed, "availability");
        let mut ledger = Ledger::new(scenario.gas.clone()).with_epoch_ticks(scenario.epoch_ticks);
        let mut bus = MessageBus::new(
            scenario.drop_prob,
            SimRng::from_label(seed, "faults"),
            SimRng::from_label(seed, "channel"),
        );

        let admin = ledger.create_eoa(&mut keys);
        ledger.fund(&admin.address, 10 * WEI_PER_ETHER)?;
        let code = match scenario.mode {
            Mode::Silent => ContractCode::Agent { min_deposit: scenario.deposit },
            Mode::Strawman => ContractCode::Strawman { min_deposit: scenario.deposit },
        };
        let contract = ledger.deploy_contract(&admin.address, &code)?;

        let mut mailmen = Vec::with_capacity(scenario.pool_size as usize);
        for i in 0..scenario.pool_size {
            let account = ledger.create_eoa(&mut keys);
            let whisper = keypair_gen(&mut keys);
            let timeframe_key = keypair_gen(&mut keys);
            let available = [
                avail.bernoulli(scenario.availability),
                avail.bernoulli(scenario.availability),
                avail.bernoulli(scenario.availability),
            ];
            mailmen.push(MailmanActor {
                pool_index: i,
                account,
                whisper,
                timeframe_key,
                policy: scenario.policy(i),
                available,
                job: None,
                onions: Vec::new(),
                public_keys: Vec::new(),
                leaks: Vec::new(),
            });
        }
        let sender_account = ledger.create_eoa(&mut keys);
        let rec_account = ledger.create_eoa(&mut keys);
        let rec_whisper = keypair_gen(&mut keys);

        for m in &mailmen {
            ledger.fund(&m.address(), scenario.deposit + 2 * WEI_PER_ETHER)?;
        }
        ledger.fund(&sender_account.address, scenario.remuneration + 2 * WEI_PER_ETHER)?;
        ledger.fund(&rec_account.address, WEI_PER_ETHER)?;
        let initial_balances = ledger.world().accounts().map(|a| (a.address, a.balance)).collect();

        for m in &mailmen {
            let call = Call::NewMailman {
                whisper_pub: m.whisper.pubkey,
                timeframe_pubkeys: alloc::vec![(scenario.timeframe, m.timeframe_key.pubkey)],
                deposit: scenario.deposit,
            };
            let r = ledger.submit_tx(&m.address(), &contract, &call)?;
            expect_success(&r)?;
            bus.register_whisper(m.address(), m.whisper.pubkey);
            for topic in [ONIONS, REVEAL, LEAK] {
                bus.subscribe(m.address(), topic);
            }
        }
        bus.register_whisper(sender_account.address, sender_account.pubkey);
        bus.register_whisper(rec_account.address, rec_whisper.pubkey);
        bus.subscribe(rec_account.address, ONIONS);
        bus.subscribe(rec_account.address, REVEAL);

        Ok(Self {
            ledger,
            bus,
            admin,
            contract,
            mailmen,
            sender_account,
            sender: None,
            recipient: RecipientState {
                account: rec_account,
                whisper: rec_whisper,
                sender: None,
                switch: None,
                ciphertext: None,
                onions: Vec::new(),
                privkeys: Vec::new(),
                key: None,
                sealed: None,
                submitted: false,
            },
            misbehaviors: Vec::new(),
            initial_balances,
            onchain_snapshot: None,
            refusals: 0,
            resends: 0,
            recruited: Vec::new(),
            rng_select: SimRng::from_label(seed, "selection"),
            rng_sender: SimRng::from_label(seed, "sender"),
            rng_deviation: SimRng::from_label(seed, "deviation"),
            scenario,
        })
    }

    pub fn agent(&self) -> &AgentContract {
        self.ledger.world().contract(&self.contract).and_then(|c| c.as_agent()).expect("agent deployed")
    }

    fn switch_state(&self) -> Option<&SwitchContract> {
        let s = self.sender.as_ref()?;
        self.ledger.world().contract(&s.switch)?.as_switch()
    }

    pub fn sup_state(&self) -> Option<&SupContract> {
        let sup = self.switch_state()?.sup?;
        self.ledger.world().contract(&sup)?.as_sup()
    }

    pub fn service_status(&self) -> ServiceStatus {
        let Some(s) = &self.sender else { return ServiceStatus::Pending };
        self.agent().service(&s.switch).map_or(ServiceStatus::Pending, |r| r.status)
    }

    fn note(&mut self, m: usize, kind: MisbehaviorKind, epoch: Option<Epoch>) {
        let mailman = self.mailmen[m].address();
        self.misbehaviors.push(Misbehavior { mailman, kind, epoch });
    }

    fn submit(&mut self, who: Address, target: Address, call: &Call) -> Result<TxReceipt, ScenarioError> {
        Ok(self.ledger.submit_tx(&who, &target, call)?)
    }

    /// Draws a pool position not yet selected or refused.
    fn draw_candidate(&mut self, taken: &BTreeSet<u32>) -> Option<u32> {
        let free: Vec<u32> = (0..self.scenario.pool_size).filter(|i| !taken.contains(i)).collect();
        if free.is_empty() {
            return None;
        }
        Some(free[self.rng_select.below(free.len() as u64) as usize])
    }

    /// Uniform selection without replacement (partial Fisher-Yates).
    pub(crate) fn initial_selection(&mut self) -> Vec<u32> {
        let k = self.scenario.recruits() as usize;
        if let Some(sel) = &self.scenario.selection {
            return sel.clone();
        }
        let mut pool: Vec<u32> = (0..self.scenario.pool_size).collect();
        for i in 0..k {
            let j = i + self.rng_select.below((pool.len() - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }

    /// Deploys the switch, predicts the supplementary address, draws the
    /// recruits and registers the service on chain.
    pub fn sender_setup(&mut self) -> Result<(), ScenarioError> {
        self.ledger.set_phase(Phase::Send);
        let s = self.sender_account.clone();
        let switch = self.ledger.deploy_contract(&s.address, &ContractCode::Switch { agent: self.contract })?;
        let sup_addr = predict_address(&switch, 0);
        let sup_code = ContractCode::Supplementary { agent: self.contract, switch };
        let vrs_sup = sign(&s.privkey, &sup_code_digest(&switch, &sup_code))?;
        let key = SecretKey256::random(&mut self.rng_sender);
        let receipt = SecretKey256::random(&mut self.rng_sender);
        let sc = &self.scenario;
        let call = Call::NewService {
            timeframe: sc.timeframe,
            l: sc.l,
            t: sc.t,
            n: sc.n,
            assignment: sc.assignment,
            switch,
            sup: sup_addr,
            recipient: self.recipient.account.address,
            receipt_commitment: hash256(receipt.as_bytes()),
            remuneration: sc.remuneration,
        };
        let r = self.submit(s.address, self.contract, &call)?;
        expect_success(&r)?;
        let selected = self.initial_selection();
        self.sender = Some(SenderState {
            keypair: s,
            switch,
            sup_addr,
            sup_code,
            vrs_sup,
            key,
            receipt,
            selected,
            refused: BTreeSet::new(),
            agreements: Vec::new(),
            shares: Vec::new(),
            onions: Vec::new(),
            delivery: None,
        });
        Ok(())
    }

    fn pos_of(&self, addr: &Address) -> Option<usize> {
        self.mailmen.iter().position(|m| m.address() == *addr)
    }

    /// Mailman side of the first handshake leg.
    fn answer_invite(
        &self,
        m: usize,
        index: u32,
        switch: Address,
        sup_code: &ContractCode,
        vrs_sup: &Signature,
    ) -> Option<Wire> {
        let me = &self.mailmen[m];
        let agent = self.agent();
        let service = agent.service(&switch)?;
        let sound = *sup_code == (ContractCode::Supplementary { agent: self.contract, switch })
            && recover_signer(&sup_code_digest(&switch, sup_code), vrs_sup).ok() == Some(service.sender)
            && service.status == ServiceStatus::Pending
            && index >= 1
            && index <= service.spec.recruits()
            && agent.timeframe_pubkey(&me.address(), &service.spec.timeframe) == Some(&me.timeframe_key.pubkey);
        if !sound || me.policy == Policy::Refuses {
            return Some(Wire::Refuse { index });
        }
        let vrs_m = sign(&me.account.privkey, &mailman_digest(&switch, index)).ok()?;
        Some(Wire::Accept { index, vrs_m })
    }

    /// The three-way handshake with every recruit, then shares, onions and
    /// the signed bundles.
    pub fn silent_recruitment(&mut self) -> Result<(), ScenarioError> {
        let mut st = self.sender.take().expect("sender_setup first");
        let sender_addr = st.keypair.address;
        let mut pending: Vec<u32> = (1..=st.selected.len() as u32).collect();
        let mut accepted: BTreeMap<u32, Signature> = BTreeMap::new();
        let mut rounds = 0;

        while !pending.is_empty() {
            for index in &pending {
                let to = self.mailmen[st.selected[*index as usize - 1] as usize].address();
                let msg = Wire::Invite {
                    index: *index,
                    switch: st.switch,
                    sup_code: st.sup_code.clone(),
                    vrs_sup: st.vrs_sup,
                };
                self.bus.send_private(sender_addr, to, &wire::encode(&msg))?;
            }
            self.bus.deliver();
            for index in &pending {
                let m = st.selected[*index as usize - 1] as usize;
                let addr = self.mailmen[m].address();
                for msg in self.bus.recv(&addr) {
                    let Some(Wire::Invite { index, switch, sup_code, vrs_sup }) =
                        open_wire(&msg, &self.mailmen[m].whisper.privkey)
                    else {
                        continue;
                    };
                    if let Some(reply) = self.answer_invite(m, index, switch, &sup_code, &vrs_sup) {
                        if matches!(reply, Wire::Accept { .. }) {
                            self.mailmen[m].job = Some(Job {
                                index,
                                switch,
                                sup_code,
                                vrs_sup,
                                vrs_m: match &reply {
                                    Wire::Accept { vrs_m, .. } => *vrs_m,
                                    _ => unreachable!(),
                                },
                                vrs_s: None,
                                bundle: None,
                            });
                        }
                        self.bus.send_private(addr, sender_addr, &wire::encode(&reply))?;
                    }
                }
            }
            self.bus.deliver();
            let mut retry = Vec::new();
            let mut answered = BTreeSet::new();
            for msg in self.bus.recv(&sender_addr) {
                let Some(from) = self.pos_of(&msg.from) else { continue };
                match open_wire(&msg, &st.keypair.privkey) {
                    Some(Wire::Accept { index, vrs_m })
                        if st.selected.get((index as usize).wrapping_sub(1)) == Some(&(from as u32))
                            && recover_signer(&mailman_digest(&st.switch, index), &vrs_m).ok() == Some(msg.from) =>
                    {
                        answered.insert(index);
                        accepted.insert(index, vrs_m);
                    }
                    Some(Wire::Accept { index, .. }) | Some(Wire::Refuse { index })
                        if st.selected.get((index as usize).wrapping_sub(1)) == Some(&(from as u32)) =>
                    {
                        answered.insert(index);
                        retry.push(index);
                        self.refusals += 1;
                        if self.mailmen[from].policy == Policy::Refuses {
                            self.note(from, MisbehaviorKind::Refused, None);
                        }
                    }
                    _ => {}
                }
            }
            // lost messages: ask the same candidate again
            retry.extend(pending.iter().filter(|i| !answered.contains(i)));
            for index in &retry {
                if !answered.contains(index) {
                    continue;
                }
                let slot = *index as usize - 1;
                st.refused.insert(st.selected[slot]);
                let mut taken: BTreeSet<u32> = st.selected.iter().copied().collect();
                taken.extend(st.refused.iter().copied());
                st.selected[slot] = self.draw_candidate(&taken).ok_or(ScenarioError::PoolExhausted)?;
            }
            retry.sort_unstable();
            retry.dedup();
            pending = retry;
            rounds += 1;
            if rounds > MAX_HANDSHAKE_ROUNDS {
                return Err(ScenarioError::PoolExhausted);
            }
        }
        self.recruited = st.selected.clone();

        // third leg
        for (index, vrs_m) in &accepted {
            let vrs_s = sign(&st.keypair.privkey, &sender_digest(&st.switch, *index, vrs_m))?;
            st.agreements.push(Agreement { index: *index, vrs_m: *vrs_m, vrs_s });
            let m = st.selected[*index as usize - 1] as usize;
            self.mailmen[m].job.as_mut().expect("accepted").vrs_s = Some(vrs_s);
            let to = self.mailmen[m].address();
            self.bus.send_private(sender_addr, to, &wire::encode(&Wire::Countersign { index: *index, vrs_s }))?;
        }

        // shares and onions
        let sc = &self.scenario;
        st.shares = ss_split(&st.key, sc.t as usize, sc.n as usize, &mut self.rng_sender)?;
        for (i, share) in st.shares.iter().enumerate() {
            let layers: Vec<LayerKey> = sc
                .assignment
                .holders(i as u32, sc.n, sc.l)
                .map(|pos| {
                    let m = &self.mailmen[st.selected[pos as usize] as usize];
                    LayerKey { holder: m.address(), pubkey: m.timeframe_key.pubkey }
                })
                .collect();
            st.onions.push(onion_wrap(share, &layers, &mut self.rng_sender)?);
        }
        for o in &st.onions {
            self.bus.broadcast(sender_addr, ONIONS, o.to_wire());
        }

        // identity bundle for the mailmen, sealed info for the recipient
        let bundle = sym_encrypt(&st.key, &wire::encode(&st.agreements), &mut self.rng_sender);
        let vrs_sm = sign(&st.keypair.privkey, &hash256(&bundle))?;
        for pos in st.selected.clone() {
            let to = self.mailmen[pos as usize].address();
            let msg = Wire::IdentityBundle { ciphertext: bundle.clone(), vrs_sm };
            self.bus.send_private(sender_addr, to, &wire::encode(&msg))?;
        }
        let sealed = Sealed { info: sc.info.clone(), receipt: st.receipt };
        let ciphertext = sym_encrypt(&st.key, &wire::encode(&sealed), &mut self.rng_sender);
        let vrs_st = sign(&st.keypair.privkey, &delivery_digest(&ciphertext, &st.onions))?;
        let delivery = Wire::Delivery { sender: sender_addr, switch: st.switch, ciphertext, vrs_st };
        let first = if sc.tamper_first_delivery {
            let Wire::Delivery { sender, switch, ciphertext, mut vrs_st } = delivery.clone() else { unreachable!() };
            vrs_st.0[3] ^= 0x40;
            Wire::Delivery { sender, switch, ciphertext, vrs_st }
        } else {
            delivery.clone()
        };
        st.delivery = Some(delivery);
        self.bus.send_private(sender_addr, self.recipient.account.address, &wire::encode(&first))?;
        self.bus.deliver();
        self.sender = Some(st);

        self.mailmen_receive();
        self.recipient_receive();
        // the recipient asks for a resend until the bundle verifies
        for _ in 0..3 {
            if self.recipient.ciphertext.is_some() {
                break;
            }
            self.bus.deliver();
            let st = self.sender.as_ref().expect("set");
            let sender_addr = st.keypair.address;
            let delivery = st.delivery.clone().expect("set");
            let asked = self
                .bus
                .recv(&sender_addr)
                .iter()
                .any(|m| open_wire(m, &st.keypair.privkey) == Some(Wire::ResendRequest));
            if asked {
                self.resends += 1;
                self.bus.send_private(sender_addr, self.recipient.account.address, &wire::encode(&delivery))?;
            }
            self.bus.deliver();
            self.recipient_receive();
        }
        Ok(())
    }

    /// Mailmen drain their inboxes: countersignatures, bundles, onions,
    /// public keys and leaks.
    fn mailmen_receive(&mut self) {
        let sender = self.sender.as_ref().map(|s| s.keypair.address);
        for m in 0..self.mailmen.len() {
            let addr = self.mailmen[m].address();
            let msgs = self.bus.recv(&addr);
            let me = &mut self.mailmen[m];
            for msg in msgs {
                match msg.topic {
                    ONIONS if me.job.is_some() => {
                        if let Ok(o) = Onion::from_wire(&msg.payload) {
                            me.onions.push(o);
                        }
                    }
                    REVEAL => {
                        if let Ok(k) = <[u8; 32]>::try_from(msg.payload.as_slice()).map(PrivateKey) {
                            me.public_keys.push(k);
                        }
                    }
                    LEAK => {
                        if let Some(leak) = wire::decode::<Leak>(&msg.payload) {
                            me.leaks.push(leak);
                        }
                    }
                    _ if msg.is_private() => match open_wire(&msg, &me.whisper.privkey) {
                        Some(Wire::Countersign { index, vrs_s }) => {
                            if let Some(job) = me.job.as_mut().filter(|j| j.index == index) {
                                let ok = recover_signer(&sender_digest(&job.switch, index, &job.vrs_m), &vrs_s).ok();
                                if ok.is_some() && ok == sender {
                                    job.vrs_s = Some(vrs_s);
                                }
                            }
                        }
                        Some(Wire::IdentityBundle { ciphertext, vrs_sm }) => {
                            if let Some(job) = me.job.as_mut() {
                                if recover_signer(&hash256(&ciphertext), &vrs_sm).ok() == sender {
                                    job.bundle = Some((ciphertext, vrs_sm));
                                }
                            }
                        }
                        _ => {}
                    },
                    _ => {}
                }
            }
        }
    }

    fn recipient_receive(&mut self) {
        let addr = self.recipient.account.address;
        let msgs = self.bus.recv(&addr);
        let mut resend = false;
        for msg in msgs {
            match msg.topic {
                ONIONS => {
                    if let Ok(o) = Onion::from_wire(&msg.payload) {
                        self.recipient.onions.push(o);
                    }
                }
                REVEAL => {
                    if let Ok(k) = <[u8; 32]>::try_from(msg.payload.as_slice()).map(PrivateKey) {
                        self.recipient.privkeys.push(k);
                    }
                }
                _ if msg.is_private() => match open_wire(&msg, &self.recipient.whisper.privkey) {
                    Some(Wire::Delivery { sender, switch, ciphertext, vrs_st }) => {
                        let digest = delivery_digest(&ciphertext, &self.recipient.onions);
                        if recover_signer(&digest, &vrs_st).ok() == Some(sender) {
                            self.recipient.sender = Some(sender);
                            self.recipient.switch = Some(switch);
                            self.recipient.ciphertext = Some(ciphertext);
                        } else {
                            resend = true;
                        }
                    }
                    Some(Wire::LightReveal { privkey }) => self.recipient.privkeys.push(privkey),
                    _ => {}
                },
                _ => {}
            }
        }
        if resend {
            if let Some(sender) = self.sender.as_ref().map(|s| s.keypair.address) {
                let _ = self.bus.send_private(addr, sender, &wire::encode(&Wire::ResendRequest));
            }
        }
    }

    /// Tries to restore the key from everything the recipient holds.
    fn recipient_try_restore(&mut self) {
        if self.recipient.sealed.is_some() {
            return;
        }
        let Some(ct) = self.recipient.ciphertext.clone() else { return };
        dedup_keys(&mut self.recipient.privkeys);
        let shares = peel_all(&self.recipient.onions, &self.recipient.privkeys);
        if shares.len() < self.scenario.t as usize {
            return;
        }
        let shares: Vec<KeyShare> = shares.into_values().collect();
        let Ok(key) = ss_restore(&shares, self.scenario.t as usize) else { return };
        if let Some(sealed) = sym_decrypt(&key, &ct).ok().and_then(|pt| wire::decode::<Sealed>(&pt)) {
            self.recipient.key = Some(key);
            self.recipient.sealed = Some(sealed);
        }
    }

    fn recipient_submit(&mut self) -> Result<(), ScenarioError> {
        if self.recipient.submitted {
            return Ok(());
        }
        let (Some(sealed), Some(sender), Some(switch)) =
            (self.recipient.sealed.clone(), self.recipient.sender, self.recipient.switch)
        else {
            return Ok(());
        };
        let call = Call::RecipientReceipt { receipt: sealed.receipt, sender, switch };
        let r = self.submit(self.recipient.account.address, self.contract, &call)?;
        self.recipient.submitted = r.success;
        Ok(())
    }

    /// Recruits in index order as pool positions.
    fn recruits(&self) -> Vec<usize> {
        self.sender.as_ref().map(|s| s.selected.iter().map(|p| *p as usize).collect()).unwrap_or_default()
    }

    fn random_key(&mut self) -> PrivateKey {
        PrivateKey(self.rng_deviation.bytes32())
    }

    /// The key a recruit reveals at an obligation in `epoch`, or `None`
    /// when it stays silent. Logs deviations.
    pub(crate) fn reveal_for(&mut self, m: usize, epoch: Epoch) -> Option<PrivateKey> {
        let policy = self.mailmen[m].policy;
        if policy.withholds(epoch) {
            self.note(m, MisbehaviorKind::Absent, Some(epoch));
            return None;
        }
        if !self.mailmen[m].available_in(epoch) {
            self.note(m, MisbehaviorKind::Lapse, Some(epoch));
            return None;
        }
        if policy.fakes(epoch) {
            self.note(m, MisbehaviorKind::Fake, Some(epoch));
            return Some(self.random_key());
        }
        Some(self.mailmen[m].timeframe_key.privkey)
    }

    fn sup_deployed(&self) -> bool {
        self.switch_state().is_some_and(|s| s.sup.is_some())
    }

    fn deploy_sup(&mut self, m: usize) -> Result<bool, ScenarioError> {
        if self.sup_deployed() {
            return Ok(true);
        }
        let Some(job) = self.mailmen[m].job.clone() else { return Ok(false) };
        let call = Call::DeploySupplementary { switch: job.switch, code: job.sup_code, vrs_sup: job.vrs_sup };
        let r = self.submit(self.mailmen[m].address(), job.switch, &call)?;
        Ok(r.success)
    }

    fn sup_addr(&self) -> Address {
        self.sender.as_ref().expect("setup").sup_addr
    }

    fn step_epoch(&mut self, to: Epoch) -> Result<(), ScenarioError> {
        self.ledger.enter_epoch(to)?;
        Ok(())
    }

    /// Ticks until the current timed epoch expires.
    fn expire_epoch(&mut self) {
        while self.ledger.tick().is_none() {}
    }

    /// Pending phase: premature disclosures and reports.
    fn epoch0(&mut self) -> Result<(), ScenarioError> {
        self.ledger.set_phase(Phase::Pend);
        self.step_epoch(Epoch::PREMATURE_REPORTING)?;
        let recruits = self.recruits();
        for &m in &recruits {
            if self.mailmen[m].policy == Policy::Premature {
                let job = self.mailmen[m].job.as_ref().expect("recruit");
                let leak = Leak { index: job.index, privkey: self.mailmen[m].timeframe_key.privkey };
                let from = self.mailmen[m].address();
                self.bus.broadcast(from, LEAK, wire::encode(&leak));
                self.note(m, MisbehaviorKind::Premature, Some(Epoch::PREMATURE_REPORTING));
            }
        }
        self.bus.deliver();
        self.mailmen_receive();

        let sup = self.sup_addr();
        for &m in &recruits {
            if self.mailmen[m].policy == Policy::FalseReporter && self.deploy_sup(m)? {
                let own = self.mailmen[m].job.as_ref().expect("recruit").index;
                let index = own % self.scenario.recruits() + 1;
                let privkey = self.random_key();
                let r = self.submit(self.mailmen[m].address(), sup, &Call::ReportPremature { index, privkey })?;
                if r.success {
                    self.note(m, MisbehaviorKind::FalseReport, Some(Epoch::PREMATURE_REPORTING));
                }
            }
        }

        let Some(reporter) = recruits.iter().copied().find(|&m| self.mailmen[m].policy.compliant()) else {
            return Ok(());
        };
        let tf = self.scenario.timeframe;
        let leaks: Vec<Leak> = self.mailmen[reporter]
            .leaks
            .iter()
            .filter(|leak| {
                let Ok(pk) = crate::crypto::pubkey_of(&leak.privkey) else { return false };
                self.agent().mailmen.values().any(|r| r.timeframe_pubkeys.get(&tf) == Some(&pk))
            })
            .cloned()
            .collect();
        for leak in leaks {
            let reported = self.sup_state().is_some_and(|s| s.premature_reports.contains_key(&leak.index));
            if reported || !self.deploy_sup(reporter)? {
                continue;
            }
            let call = Call::ReportPremature { index: leak.index, privkey: leak.privkey };
            self.submit(self.mailmen[reporter].address(), sup, &call)?;
        }
        Ok(())
    }

    /// Epoch 1: private reveals to the recipient. Returns whether the
    /// service was delivered.
    fn epoch1(&mut self) -> Result<bool, ScenarioError> {
        self.step_epoch(Epoch::LIGHTWEIGHT)?;
        let to = self.recipient.account.address;
        if self.scenario.recipient_offline_light {
            self.bus.add_fault(crate::channels::Fault::DropTo(to));
        }
        for m in self.recruits() {
            if let Some(privkey) = self.reveal_for(m, Epoch::LIGHTWEIGHT) {
                let from = self.mailmen[m].address();
                self.bus.send_private(from, to, &wire::encode(&Wire::LightReveal { privkey }))?;
            }
        }
        self.bus.deliver();
        self.bus.clear_faults();
        self.recipient_receive();
        self.recipient_try_restore();
        self.recipient_submit()?;
        Ok(self.recipient.submitted)
    }

    /// Epoch 2: deploy the supplementary contract if needed, publish keys,
    /// recover the identity list and reveal it. Returns whether identities
    /// reached the chain.
    fn epoch2(&mut self) -> Result<bool, ScenarioError> {
        self.step_epoch(Epoch::SWITCHING)?;
        let recruits = self.recruits();
        let dutiful: Vec<usize> =
            recruits.iter().copied().filter(|&m| self.mailmen[m].dutiful(Epoch::SWITCHING)).collect();
        let mut deployed = self.sup_deployed();
        for &m in &dutiful {
            if deployed {
                break;
            }
            deployed = self.deploy_sup(m)?;
        }
        if !deployed {
            return Ok(false);
        }
        for &m in &recruits {
            if let Some(privkey) = self.reveal_for(m, Epoch::SWITCHING) {
                let from = self.mailmen[m].address();
                self.bus.broadcast(from, REVEAL, privkey.as_bytes().to_vec());
            }
        }
        self.bus.deliver();
        self.mailmen_receive();
        self.recipient_receive();

        let t = self.scenario.t as usize;
        let sup = self.sup_addr();
        for &m in &dutiful {
            let me = &mut self.mailmen[m];
            let Some((bundle, _)) = me.job.as_ref().and_then(|j| j.bundle.clone()) else { continue };
            let mut keys = me.public_keys.clone();
            keys.push(me.timeframe_key.privkey);
            dedup_keys(&mut keys);
            let shares: Vec<KeyShare> = peel_all(&me.onions, &keys).into_values().collect();
            if shares.len() < t {
                continue;
            }
            let Ok(key) = ss_restore(&shares, t) else { continue };
            let Some(agreements) = sym_decrypt(&key, &bundle).ok().and_then(|pt| wire::decode::<Vec<Agreement>>(&pt))
            else {
                continue;
            };
            let r = self.submit(self.mailmen[m].address(), sup, &Call::RevealIdentity { agreements })?;
            if r.success {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Epoch 3: on-chain private-key reveals.
    fn epoch3(&mut self) -> Result<(), ScenarioError> {
        self.step_epoch(Epoch::HEAVYWEIGHT)?;
        let sup = self.sup_addr();
        let identities = self.sup_state().map(|s| s.identities.clone()).unwrap_or_default();
        for (index, addr) in identities {
            let Some(m) = self.pos_of(&addr) else { continue };
            if let Some(privkey) = self.reveal_for(m, Epoch::HEAVYWEIGHT) {
                self.submit(addr, sup, &Call::RevealPrivkey { index, privkey })?;
            }
        }
        self.expire_epoch();
        Ok(())
    }

    /// Epoch 4: absent/fake reports and, if anything needs adjudication,
    /// the verdict forwarded to the agent.
    fn epoch4(&mut self) -> Result<(), ScenarioError> {
        let sup_addr = self.sup_addr();
        let Some(sup) = self.sup_state().cloned() else { return Ok(()) };
        let reporter = self.recruits().into_iter().find(|&m| {
            let me = &self.mailmen[m];
            me.dutiful(Epoch::HEAVYWEIGHT) && sup.identities.values().any(|a| *a == me.address())
        });
        if let Some(r) = reporter {
            let who = self.mailmen[r].address();
            for (index, addr) in &sup.identities {
                if *addr == who {
                    continue;
                }
                match sup.privkeys.get(index) {
                    None => {
                        self.submit(who, sup_addr, &Call::ReportAbsent { index: *index })?;
                    }
                    Some((_, false)) => {
                        self.submit(who, sup_addr, &Call::ReportFake { index: *index })?;
                    }
                    _ => {}
                }
            }
            let s = self.sup_state().expect("deployed");
            let anything =
                !(s.premature_reports.is_empty() && s.absent_reports.is_empty() && s.fake_reports.is_empty());
            if anything {
                self.submit(who, sup_addr, &Call::InformAgent)?;
            }
        }
        self.expire_epoch();
        Ok(())
    }

    /// Epoch 5: second chance for the recipient, using every key published
    /// so far, on chain included.
    fn epoch5(&mut self) -> Result<(), ScenarioError> {
        if let Some(sup) = self.sup_state() {
            let onchain: Vec<PrivateKey> = sup.privkeys.values().map(|(k, _)| *k).collect();
            self.recipient.privkeys.extend(onchain);
        }
        self.recipient_try_restore();
        self.recipient_submit()?;
        self.expire_epoch();
        Ok(())
    }

    /// Drives epochs 0 through 6, including settlement withdrawals.
    pub fn run_delivery(&mut self) -> Result<(), ScenarioError> {
        self.epoch0()?;
        self.ledger.advance_time(self.scenario.timeframe)?;
        self.ledger.set_phase(Phase::Deliver);
        let delivered_light = if self.sup_deployed() { false } else { self.epoch1()? };
        if delivered_light {
            self.step_epoch(Epoch::SETTLEMENT)?;
        } else if self.epoch2()? {
            self.epoch3()?;
            self.epoch4()?;
            self.epoch5()?;
        } else {
            self.recipient_try_restore();
            self.step_epoch(Epoch::SETTLEMENT)?;
        }
        self.settle()
    }

    /// Epoch 6: relationship proofs and withdrawals by everyone owed money.
    pub fn settle(&mut self) -> Result<(), ScenarioError> {
        self.onchain_snapshot = Some(self.ledger.onchain_bytes());
        self.ledger.set_phase(Phase::Settlement);
        let st = self.sender.as_ref().expect("setup");
        let switch = st.switch;
        let sender = st.keypair.address;
        if self.service_status() == ServiceStatus::DeliveredLight {
            for m in self.recruits() {
                let Some(job) = self.mailmen[m].job.clone() else { continue };
                let Some(vrs_s) = job.vrs_s else { continue };
                let agreement = Agreement { index: job.index, vrs_m: job.vrs_m, vrs_s };
                self.submit(self.mailmen[m].address(), self.contract, &Call::ProveRelationship { switch, agreement })?;
            }
        }
        let mut claimants: Vec<Address> = self.mailmen.iter().map(|m| m.address()).collect();
        claimants.push(sender);
        for who in claimants {
            let epoch = self.ledger.current_epoch();
            if self.agent().owed(self.ledger.world(), epoch, &who) > 0 {
                self.submit(who, self.contract, &Call::Withdraw)?;
            }
        }
        Ok(())
    }

    /// Packs up the run.
    pub fn finish(self) -> ScenarioTrace {
        let slashes = self
            .ledger
            .receipts()
            .iter()
            .flat_map(|r| r.emitted.iter())
            .filter_map(|e| match e {
                Event::Slashed { mailman, reason, amount } => {
                    Some(SlashRecord { mailman: *mailman, reason: *reason, amount: *amount })
                }
                _ => None,
            })
            .collect();
        let status = match self.scenario.mode {
            Mode::Silent => self.service_status(),
            Mode::Strawman => self
                .ledger
                .world()
                .contract(&self.contract)
                .and_then(|c| c.as_strawman())
                .and_then(|c| c.services.values().next())
                .map_or(ServiceStatus::Pending, |s| s.status),
        };
        let onchain_bytes = self.onchain_snapshot.clone().unwrap_or_else(|| self.ledger.onchain_bytes());
        let selection = self.recruited.iter().map(|p| self.mailmen[*p as usize].address()).collect();
        ScenarioTrace {
            seed: self.scenario.seed,
            mode: self.scenario.mode,
            l: self.scenario.l,
            t: self.scenario.t,
            n: self.scenario.n,
            pool: self.mailmen.iter().map(|m| m.address()).collect(),
            sender: self.sender_account.address,
            recipient: self.recipient.account.address,
            contract: self.contract,
            switch: self.sender.as_ref().filter(|_| self.scenario.mode == Mode::Silent).map(|s| s.switch),
            selection,
            receipts: self.ledger.receipts().to_vec(),
            messages: self.bus.log().to_vec(),
            metadata_visible: self.scenario.metadata_visible,
            epoch_path: self.ledger.epoch_path().to_vec(),
            status,
            misbehaviors: self.misbehaviors,
            slashes,
            initial_balances: self.initial_balances,
            final_balances: self.ledger.world().accounts().map(|a| (a.address, a.balance)).collect(),
            minted: self.ledger.minted(),
            gas_sink: self.ledger.gas_sink(),
            burned: self.ledger.world().burned(),
            onchain_digest: hash256(&onchain_bytes),
            onchain_bytes,
            delivered_info: self.recipient.sealed.map(|s| s.info),
            expected_info: self.scenario.info,
            refusals: self.refusals,
            resends: self.resends,
        }
    }
}

pub(crate) fn open_wire(msg: &ChannelMsg, whisper: &PrivateKey) -> Option<Wire> {
    let pt = msg.open(whisper).ok()?;
    wire::decode(&pt)
}

pub(crate) fn expect_success(r: &TxReceipt) -> Result<(), ScenarioError> {
    if r.success {
        Ok(())
    } else {
        Err(ScenarioError::Reverted { function: r.function.clone(), reason: r.revert.clone().unwrap_or_default() })
    }
}
