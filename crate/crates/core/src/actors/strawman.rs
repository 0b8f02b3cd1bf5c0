//! Baseline run: every mailman named on chain at setup, shares revealed
//! on chain in epoch 1.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::sim::{delivery_digest, expect_success, open_wire, Simulation};
use super::wire::{self, Sealed, Wire, LEAK};
use super::{MisbehaviorKind, Policy, Scenario, ScenarioError, ScenarioTrace};
use crate::contracts::{share_commitment, Call, ServiceStatus, StrawmanContract};
use crate::crypto::{hash256, sign, ss_restore, ss_split, sym_decrypt, sym_encrypt, KeyShare, SecretKey256};
use crate::ledger::{Epoch, Phase};

fn contract(sim: &Simulation) -> &StrawmanContract {
    sim.ledger.world().contract(&sim.contract).and_then(|c| c.as_strawman()).expect("strawman deployed")
}

/// Runs one strawman scenario end to end.
pub fn run_strawman(scenario: &Scenario) -> Result<ScenarioTrace, ScenarioError> {
    let mut sim = Simulation::new(scenario.clone())?;
    let sc = sim.scenario.clone();
    let sender = sim.sender_account.clone();
    let rec = sim.recipient.account.address;

    sim.ledger.set_phase(Phase::Send);
    let selected = sim.initial_selection();
    sim.recruited = selected.clone();
    let key = SecretKey256::random(&mut sim.rng_sender);
    let receipt = SecretKey256::random(&mut sim.rng_sender);
    let shares = ss_split(&key, sc.t as usize, sc.n as usize, &mut sim.rng_sender)?;
    let mut held: BTreeMap<usize, KeyShare> = BTreeMap::new();
    for (pos, share) in selected.iter().zip(&shares) {
        held.insert(*pos as usize, *share);
        let to = sim.mailmen[*pos as usize].address();
        sim.bus.send_private(sender.address, to, &wire::encode(&Wire::StrawShare { service: 0, share: *share }))?;
    }
    let listing = selected
        .iter()
        .zip(&shares)
        .map(|(pos, share)| (sim.mailmen[*pos as usize].address(), share_commitment(share)))
        .collect();
    let call = Call::StrawmanNewService {
        timeframe: sc.timeframe,
        t: sc.t,
        n: sc.n,
        recipient: rec,
        mailmen: listing,
        receipt_commitment: hash256(receipt.as_bytes()),
        remuneration: sc.remuneration,
    };
    let r = sim.ledger.submit_tx(&sender.address, &sim.contract, &call)?;
    expect_success(&r)?;
    let id = contract(&sim).next_id - 1;

    let sealed = Sealed { info: sc.info.clone(), receipt };
    let ciphertext = sym_encrypt(&key, &wire::encode(&sealed), &mut sim.rng_sender);
    let vrs_st = sign(&sender.privkey, &delivery_digest(&ciphertext, &[]))?;
    let delivery = Wire::Delivery { sender: sender.address, switch: sim.contract, ciphertext, vrs_st };
    sim.bus.send_private(sender.address, rec, &wire::encode(&delivery))?;
    sim.bus.deliver();
    for m in &selected {
        let addr = sim.mailmen[*m as usize].address();
        sim.bus.recv(&addr);
    }
    let rec_whisper = sim.recipient.whisper.privkey;
    for msg in sim.bus.recv(&rec) {
        if let Some(Wire::Delivery { ciphertext, .. }) = open_wire(&msg, &rec_whisper) {
            sim.recipient.ciphertext = Some(ciphertext);
        }
    }

    // epoch 0: leaks and reports
    sim.ledger.set_phase(Phase::Pend);
    sim.ledger.enter_epoch(Epoch::PREMATURE_REPORTING)?;
    for (&m, share) in &held {
        if sim.mailmen[m].policy == Policy::Premature {
            let from = sim.mailmen[m].address();
            sim.bus.broadcast(from, LEAK, wire::encode(share));
            let mailman = from;
            sim.misbehaviors.push(super::Misbehavior {
                mailman,
                kind: MisbehaviorKind::Premature,
                epoch: Some(Epoch::PREMATURE_REPORTING),
            });
        }
    }
    sim.bus.deliver();
    let reporter = held.keys().copied().find(|&m| sim.mailmen[m].policy.compliant());
    for m in 0..sim.mailmen.len() {
        let addr = sim.mailmen[m].address();
        let msgs = sim.bus.recv(&addr);
        if Some(m) != reporter {
            continue;
        }
        for msg in msgs.iter().filter(|msg| msg.topic == LEAK) {
            if let Some(share) = wire::decode::<KeyShare>(&msg.payload) {
                let call = Call::StrawmanReportPremature { service: id, share };
                sim.ledger.submit_tx(&addr, &sim.contract, &call)?;
            }
        }
    }

    // epoch 1: shares on chain, then the receipt
    sim.ledger.advance_time(sc.timeframe)?;
    sim.ledger.set_phase(Phase::Deliver);
    sim.ledger.enter_epoch(Epoch::LIGHTWEIGHT)?;
    for (&m, share) in &held {
        let Some(k) = sim.reveal_for(m, Epoch::LIGHTWEIGHT) else { continue };
        let mut share = *share;
        if k != sim.mailmen[m].timeframe_key.privkey {
            share.value[0] ^= 0x01;
        }
        let addr = sim.mailmen[m].address();
        sim.ledger.submit_tx(&addr, &sim.contract, &Call::RevealShare { service: id, share })?;
    }
    let public: Vec<KeyShare> = contract(&sim).services[&id].revealed.values().copied().collect();
    if public.len() >= sc.t as usize {
        if let (Ok(key), Some(ct)) = (ss_restore(&public, sc.t as usize), sim.recipient.ciphertext.clone()) {
            if let Some(sealed) = sym_decrypt(&key, &ct).ok().and_then(|pt| wire::decode::<Sealed>(&pt)) {
                let call = Call::RevealReceipt { service: id, receipt: sealed.receipt };
                sim.ledger.submit_tx(&rec, &sim.contract, &call)?;
                sim.recipient.key = Some(key);
                sim.recipient.sealed = Some(sealed);
            }
        }
    }

    sim.ledger.enter_epoch(Epoch::SETTLEMENT)?;
    sim.onchain_snapshot = Some(sim.ledger.onchain_bytes());
    sim.ledger.set_phase(Phase::Settlement);
    let mut claimants: Vec<_> = sim.mailmen.iter().map(|m| m.address()).collect();
    claimants.push(sender.address);
    for who in claimants {
        if contract(&sim).owed(sim.ledger.current_epoch(), &who) > 0 {
            sim.ledger.submit_tx(&who, &sim.contract, &Call::Withdraw)?;
        }
    }
    debug_assert!(contract(&sim).services[&id].status != ServiceStatus::Pending);
    Ok(sim.finish())
}
