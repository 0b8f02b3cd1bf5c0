//! Attack harness: bribery, Sybil flooding, fault injection and what an
//! outside observer gets to see.

mod sybil;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use sybil::{sybil_sweep, SybilPoint, SybilSweep};

use crate::actors::wire::{self, Wire, ONIONS};
use crate::actors::{peel_all, Policy, Scenario, ScenarioError, ScenarioTrace, Simulation};
use crate::channels::Topic;
use crate::contracts::{Event, LayerAssignment};
use crate::crypto::{keypair_gen, ss_restore, Address, KeyShare, Onion, PrivateKey};
use crate::ledger::{Amount, Epoch, Phase};
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    Premature,
    Absent,
    Fake,
}

/// Overrides the policy of pool position `mailman`. Absent and fake faults
/// start at `from` (epoch 1, 2 or 3) and persist.
pub fn inject_fault(scenario: &mut Scenario, mailman: u32, kind: FaultKind, from: Epoch) -> Result<(), ScenarioError> {
    if mailman >= scenario.pool_size {
        return Err(ScenarioError::UnknownMailman(mailman));
    }
    let policy = match kind {
        FaultKind::Premature => Policy::Premature,
        FaultKind::Absent => Policy::Absent { from },
        FaultKind::Fake => Policy::Fake { from },
    };
    scenario.policies.insert(mailman, policy);
    scenario.validate()
}

/// Attack parameters. `v` innocent mailmen, `x` adversarial ones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackParams {
    pub v: u32,
    pub x: u32,
    pub d: Amount,
    pub budget: Amount,
    pub bribe_per_key: Amount,
}

impl AttackParams {
    pub fn p_m(&self) -> f64 {
        if self.x + self.v == 0 {
            return 0.0;
        }
        self.x as f64 / (self.x + self.v) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub shares_obtained: u32,
    pub key_recovered: bool,
    pub total_spent: Amount,
    pub deposits_forfeited: Amount,
    pub keys_bought: u32,
    /// Bribes paid to mailmen holding no layer of this service.
    pub wasted: Amount,
    pub trace: ScenarioTrace,
}

/// Order in which the adversary works through shares.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetOrder {
    /// The t shares with the fewest distinct holders.
    #[default]
    Cheapest,
    /// Shares in a seeded random order.
    Shuffled { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BriberyParams {
    pub bribe_per_key: Amount,
    /// The adversary learned which mailmen were recruited for which layers.
    pub side_channel: bool,
    pub budget: Amount,
    pub order: TargetOrder,
}

/// Recruit positions (zero-based, selection order) holding the layers of
/// each share.
fn holder_sets(assignment: LayerAssignment, n: u32, l: u32) -> Vec<BTreeSet<u32>> {
    (0..n).map(|i| assignment.holders(i, n, l).collect()).collect()
}

/// The `t` shares whose holder union is smallest. Exhaustive for small `n`,
/// otherwise consecutive windows (optimal for both built-in layouts).
pub fn cheapest_shares(assignment: LayerAssignment, t: u32, n: u32, l: u32) -> Vec<u32> {
    let sets = holder_sets(assignment, n, l);
    let cost = |pick: &[u32]| pick.iter().flat_map(|i| sets[*i as usize].iter()).collect::<BTreeSet<_>>().len();
    let mut best: Vec<u32> = (0..t).collect();
    let mut best_cost = cost(&best);
    if n <= 16 {
        for mask in 0u32..(1 << n) {
            if mask.count_ones() != t {
                continue;
            }
            let pick: Vec<u32> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let c = cost(&pick);
            if c < best_cost {
                best = pick;
                best_cost = c;
            }
        }
    } else {
        for start in 0..n {
            let pick: Vec<u32> = (0..t).map(|k| (start + k) % n).collect();
            let c = cost(&pick);
            if c < best_cost {
                best = pick;
                best_cost = c;
            }
        }
    }
    best
}

struct Adversary {
    addr: Address,
    whisper: PrivateKey,
    onions: Vec<Onion>,
    keys: Vec<PrivateKey>,
}

impl Adversary {
    /// Extra EOA plus whisper identity, listening to onion broadcasts.
    fn join(sim: &mut Simulation, budget: Amount) -> Result<Self, ScenarioError> {
        let mut rng = SimRng::from_label(sim.scenario.seed, "adversary");
        let account = sim.ledger.create_eoa(&mut rng);
        let whisper = keypair_gen(&mut rng);
        sim.ledger.fund(&account.address, budget)?;
        sim.initial_balances.insert(account.address, budget);
        sim.bus.register_whisper(account.address, whisper.pubkey);
        sim.bus.subscribe(account.address, ONIONS);
        Ok(Self { addr: account.address, whisper: whisper.privkey, onions: Vec::new(), keys: Vec::new() })
    }

    fn listen(&mut self, sim: &mut Simulation) {
        for msg in sim.bus.recv(&self.addr) {
            if msg.topic == ONIONS {
                if let Ok(o) = Onion::from_wire(&msg.payload) {
                    self.onions.push(o);
                }
            } else if let Some(Wire::SoldKey { privkey }) =
                msg.open(&self.whisper).ok().and_then(|pt| wire::decode::<Wire>(&pt))
            {
                self.keys.push(privkey);
            }
        }
    }

    fn shares(&self) -> BTreeMap<u32, KeyShare> {
        peel_all(&self.onions, &self.keys)
    }
}

/// Runs recruitment, lets the adversary buy time-frame keys during the
/// pending phase, then completes delivery.
///
/// A mailman sells iff its policy is `Briberable { threshold }` and the
/// offer strictly exceeds the threshold. Payment goes through escrow and
/// the key arrives on a private channel.
pub fn run_bribery(scenario: &Scenario, params: &BriberyParams) -> Result<AttackOutcome, ScenarioError> {
    let mut sim = Simulation::new(scenario.clone())?;
    let mut adv = Adversary::join(&mut sim, params.budget)?;
    sim.sender_setup()?;
    sim.silent_recruitment()?;
    adv.listen(&mut sim);

    let sc = sim.scenario.clone();
    let recruits = sim.recruited.clone();
    let targets: Vec<usize> = if params.side_channel {
        let shares = match params.order {
            TargetOrder::Cheapest => {
                let mut s = cheapest_shares(sc.assignment, sc.t, sc.n, sc.l);
                let rest: Vec<u32> = (0..sc.n).filter(|i| !s.contains(i)).collect();
                s.extend(rest);
                s
            }
            TargetOrder::Shuffled { seed } => shuffled(sc.n as usize, seed).into_iter().map(|i| i as u32).collect(),
        };
        let mut seen = BTreeSet::new();
        shares
            .iter()
            .flat_map(|i| sc.assignment.holders(*i, sc.n, sc.l))
            .map(|pos| recruits[pos as usize] as usize)
            .filter(|m| seen.insert(*m))
            .collect()
    } else {
        let seed = match params.order {
            TargetOrder::Shuffled { seed } => seed,
            TargetOrder::Cheapest => sc.seed,
        };
        shuffled(sim.mailmen.len(), seed ^ 0x5eed)
    };

    sim.ledger.set_phase(Phase::Pend);
    let recruit_set: BTreeSet<usize> = recruits.iter().map(|p| *p as usize).collect();
    let (mut spent, mut forfeited, mut wasted, mut bought) = (0, 0, 0, 0u32);
    for m in targets {
        if adv.shares().len() >= sc.t as usize {
            break;
        }
        if spent + params.bribe_per_key > params.budget {
            break;
        }
        let Policy::Briberable { threshold } = sim.mailmen[m].policy else { continue };
        if params.bribe_per_key <= threshold {
            continue;
        }
        let seller = sim.mailmen[m].address();
        sim.ledger.escrow_transfer(&adv.addr, &seller, params.bribe_per_key)?;
        let privkey = sim.mailmen[m].timeframe_key.privkey;
        sim.bus.send_private(seller, adv.addr, &wire::encode(&Wire::SoldKey { privkey }))?;
        sim.bus.deliver();
        adv.listen(&mut sim);
        spent += params.bribe_per_key;
        forfeited += sc.deposit;
        bought += 1;
        if !recruit_set.contains(&m) {
            wasted += params.bribe_per_key;
        }
    }

    let shares = adv.shares();
    let restored = if shares.len() >= sc.t as usize {
        let v: Vec<KeyShare> = shares.values().copied().collect();
        ss_restore(&v, sc.t as usize).ok()
    } else {
        None
    };
    let key_recovered = restored.is_some() && restored == sim.sender.as_ref().map(|s| s.key);
    sim.run_delivery()?;
    Ok(AttackOutcome {
        shares_obtained: shares.len() as u32,
        key_recovered,
        total_spent: spent,
        deposits_forfeited: forfeited,
        keys_bought: bought,
        wasted,
        trace: sim.finish(),
    })
}

fn shuffled(len: usize, seed: u64) -> Vec<usize> {
    let mut rng = SimRng::from_label(seed, "targets");
    let mut v: Vec<usize> = (0..len).collect();
    for i in (1..len).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        v.swap(i, j);
    }
    v
}

/// Full simulation of a Sybil flood: `scenario.pool_size` innocent mailmen
/// plus `x` adversarial registrations (the last `x` pool positions). The
/// adversary captures a share iff it holds every layer key of its onion.
pub fn run_sybil(scenario: &Scenario, x: u32) -> Result<AttackOutcome, ScenarioError> {
    let v = scenario.pool_size;
    let sc = Scenario { pool_size: v + x, ..scenario.clone() };
    let mut sim = Simulation::new(sc)?;
    let mut adv = Adversary::join(&mut sim, 0)?;
    sim.sender_setup()?;
    sim.silent_recruitment()?;
    adv.listen(&mut sim);
    adv.keys = sim.mailmen[v as usize..].iter().map(|m| m.timeframe_key.privkey).collect();
    let shares = adv.shares();
    let t = sim.scenario.t as usize;
    let key_recovered = shares.len() >= t && {
        let v: Vec<KeyShare> = shares.values().copied().collect();
        ss_restore(&v, t).ok() == sim.sender.as_ref().map(|s| s.key)
    };
    let deposit = sim.scenario.deposit;
    sim.run_delivery()?;
    Ok(AttackOutcome {
        shares_obtained: shares.len() as u32,
        key_recovered,
        total_spent: x as Amount * deposit,
        deposits_forfeited: 0,
        keys_bought: 0,
        wasted: 0,
        trace: sim.finish(),
    })
}

/// Metadata of one private message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageMeta {
    pub from: Address,
    pub to: Address,
    pub size: usize,
}

/// Everything an outside observer sees of a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    /// Chain state and calldata before settlement, fee payers excluded.
    pub onchain: Vec<u8>,
    /// Transactions before settlement, with their senders.
    pub calls: Vec<(Address, Vec<u8>, Vec<Event>)>,
    pub broadcasts: Vec<(Address, Topic, Vec<u8>)>,
    /// Empty when metadata is hidden.
    pub private: Vec<MessageMeta>,
}

impl Observation {
    /// Message-count and size profile, with identities stripped.
    pub fn profile(&self) -> (Vec<(Topic, usize)>, Vec<usize>) {
        (self.broadcasts.iter().map(|(_, t, p)| (*t, p.len())).collect(), self.private.iter().map(|m| m.size).collect())
    }
}

pub fn adversary_view(trace: &ScenarioTrace) -> Observation {
    let calls = trace
        .receipts
        .iter()
        .filter(|r| r.phase != Phase::Settlement)
        .map(|r| (r.caller, r.args.0.clone(), r.emitted.clone()))
        .collect();
    let mut broadcasts = Vec::new();
    let mut private = Vec::new();
    for m in trace.messages.iter().filter(|m| m.delivered) {
        match m.to {
            None => broadcasts.push((m.from, m.topic, m.payload.clone())),
            Some(to) if trace.metadata_visible => private.push(MessageMeta { from: m.from, to, size: m.payload.len() }),
            Some(_) => {}
        }
    }
    Observation { onchain: trace.onchain_bytes.clone(), calls, broadcasts, private }
}

/// Recruited mailmen whose link to the service can be read off the chain:
/// they sent a service transaction, or their address appears in its
/// calldata or events.
pub fn bindings(view: &Observation, trace: &ScenarioTrace) -> BTreeSet<Address> {
    let registration = trace.receipts.iter().filter(|r| r.phase == Phase::Registration).count();
    let mut out = BTreeSet::new();
    for (i, (caller, args, events)) in view.calls.iter().enumerate() {
        if i < registration {
            continue;
        }
        let ev = postcard::to_allocvec(events).unwrap_or_default();
        for m in &trace.selection {
            let named = |b: &[u8]| b.windows(20).any(|w| w == m.as_bytes());
            if caller == m || named(args) || named(&ev) {
                out.insert(*m);
            }
        }
    }
    out
}
