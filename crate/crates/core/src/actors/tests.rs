use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::*;
use crate::contracts::ServiceStatus;
use crate::ledger::fns;

fn functions(trace: &ScenarioTrace) -> Vec<&str> {
    trace
        .receipts
        .iter()
        .filter(|r| r.phase != crate::ledger::Phase::Registration)
        .map(|r| r.function.as_str())
        .collect()
}

fn base() -> Scenario {
    Scenario { seed: 7, pool_size: 16, l: 2, t: 3, n: 5, ..Scenario::default() }
}

#[test]
fn honest_run_is_lightweight() {
    let tr = run_scenario(&base()).unwrap();
    assert_eq!(tr.status, ServiceStatus::DeliveredLight);
    assert_eq!(tr.delivered_info.as_deref(), Some(tr.expected_info.as_slice()));
    let sent: Vec<&str> = tr
        .receipts
        .iter()
        .filter(|r| {
            matches!(r.phase, crate::ledger::Phase::Send | crate::ledger::Phase::Pend | crate::ledger::Phase::Deliver)
        })
        .map(|r| r.function.as_str())
        .collect();
    assert_eq!(sent, [fns::DEPLOY_SWITCH, fns::NEW_SERVICE, fns::RECIPIENT_RECEIPT]);
    assert!(tr.receipts.iter().all(|r| r.success));
    assert!(tr.conserved());
    assert!(tr.slashes.is_empty());
    assert_eq!(tr.remuneration_paid(), base().remuneration / 5 * 5);
}

#[test]
fn offline_recipient_forces_heavyweight() {
    let sc = Scenario { recipient_offline_light: true, ..base() };
    let tr = run_scenario(&sc).unwrap();
    assert_eq!(tr.status, ServiceStatus::DeliveredHeavy);
    assert_eq!(tr.epoch_path.iter().map(|e| e.index()).collect::<Vec<_>>(), [0, 1, 2, 3, 4, 5, 6]);
    let f = functions(&tr);
    assert!(f.contains(&fns::DEPLOY_SUPPLEMENTARY) && f.contains(&fns::REVEAL_IDENTITY));
    assert_eq!(f.iter().filter(|x| **x == fns::REVEAL_PRIVKEY).count(), 5);
    assert!(!f.contains(&fns::INFORM_AGENT));
    assert!(tr.conserved());
    assert_eq!(tr.delivered_info.as_deref(), Some(tr.expected_info.as_slice()));
}

#[test]
fn premature_leak_is_slashed() {
    let mut sc = base();
    sc.selection = Some((0..5).collect());
    sc.policies.insert(2, Policy::Premature);
    let tr = run_scenario(&sc).unwrap();
    let leaker = tr.pool[2];
    assert_eq!(tr.slashes.len(), 1);
    assert_eq!(tr.slashes[0].mailman, leaker);
    assert_eq!(tr.slashes[0].reason, crate::contracts::SlashReason::Premature);
    assert!(tr.balance_delta(&leaker) < -(sc.deposit as i128) / 2);
    assert!(tr.conserved());
}

#[test]
fn too_many_absent_fails_and_refunds() {
    let mut sc = base();
    sc.selection = Some((0..5).collect());
    for i in 0..3 {
        sc.policies.insert(i, Policy::Absent { from: Epoch::LIGHTWEIGHT });
    }
    let tr = run_scenario(&sc).unwrap();
    assert_eq!(tr.status, ServiceStatus::Failed);
    assert!(tr.delivered_info.is_none());
    assert!(tr.conserved());
    // the sender gets the remuneration back
    let spent: Amount = tr.receipts.iter().filter(|r| r.caller == tr.sender).map(|r| r.fee_wei).sum();
    assert_eq!(tr.balance_delta(&tr.sender), -(spent as i128));
}

#[test]
fn absent_in_heavy_mode_is_slashed() {
    let mut sc = Scenario { recipient_offline_light: true, ..base() };
    sc.selection = Some((0..5).collect());
    sc.policies.insert(4, Policy::Absent { from: Epoch::HEAVYWEIGHT });
    let tr = run_scenario(&sc).unwrap();
    assert_eq!(tr.status, ServiceStatus::DeliveredHeavy);
    assert_eq!(tr.slashes.len(), 1);
    assert_eq!(tr.slashes[0].mailman, tr.pool[4]);
    assert!(functions(&tr).contains(&fns::INFORM_AGENT));
    assert!(tr.conserved());
}

#[test]
fn refusals_trigger_reselection() {
    let mut sc = base();
    sc.policies.insert(0, Policy::Refuses);
    sc.policies.insert(1, Policy::Refuses);
    sc.selection = Some((0..5).collect());
    let tr = run_scenario(&sc).unwrap();
    assert_eq!(tr.refusals, 2);
    assert!(!tr.selection.contains(&tr.pool[0]) && !tr.selection.contains(&tr.pool[1]));
    assert_eq!(tr.status, ServiceStatus::DeliveredLight);
}

#[test]
fn tampered_delivery_is_resent() {
    let tr = run_scenario(&Scenario { tamper_first_delivery: true, ..base() }).unwrap();
    assert_eq!(tr.resends, 1);
    assert_eq!(tr.status, ServiceStatus::DeliveredLight);
}

#[test]
fn false_reporter_pays() {
    let mut sc = base();
    sc.selection = Some((0..5).collect());
    sc.policies.insert(1, Policy::FalseReporter);
    let tr = run_scenario(&sc).unwrap();
    assert!(tr.slashes.iter().any(|s| s.mailman == tr.pool[1]));
    assert!(tr.conserved());
}

#[test]
fn runs_are_deterministic() {
    let sc = Scenario { availability: 0.8, ..base() };
    let a = run_scenario(&sc).unwrap();
    let b = run_scenario(&sc).unwrap();
    assert_eq!(a.trace_hash(), b.trace_hash());
    let c = run_scenario(&Scenario { seed: 8, ..sc }).unwrap();
    assert_ne!(a.trace_hash(), c.trace_hash());
}

#[test]
fn recruits_are_distinct() {
    for seed in 0..10 {
        let tr = run_scenario(&Scenario { seed, ..base() }).unwrap();
        let set: BTreeSet<_> = tr.selection.iter().collect();
        assert_eq!(set.len(), 5);
    }
}

#[test]
fn strawman_lists_mailmen_on_chain() {
    let tr = run_scenario(&Scenario { mode: Mode::Strawman, ..base() }).unwrap();
    assert_eq!(tr.status, ServiceStatus::DeliveredLight);
    let f = functions(&tr);
    assert!(f.contains(&fns::STRAWMAN_NEW_SERVICE));
    assert_eq!(f.iter().filter(|x| **x == fns::REVEAL_SHARE).count(), 5);
    assert!(tr.conserved());
    for m in &tr.selection {
        assert!(tr.onchain_bytes.windows(20).any(|w| w == m.as_bytes()));
    }
}

#[test]
fn strawman_premature_is_slashed() {
    let mut sc = Scenario { mode: Mode::Strawman, ..base() };
    sc.selection = Some((0..5).collect());
    sc.policies.insert(3, Policy::Premature);
    let tr = run_scenario(&sc).unwrap();
    assert_eq!(tr.slashes.len(), 1);
    assert!(tr.conserved());
}

/// Pairs each deviation with the same run where the deviant behaves.
#[test]
fn deviating_never_pays() {
    let mut rng = crate::rng::SimRng::from_label(1, "rationality");
    let mut strict = 0;
    for seed in 0..40u64 {
        let n = 3 + rng.below(4) as u32;
        let t = 1 + rng.below(n as u64) as u32;
        let l = 1 + rng.below(2) as u32;
        let mut sc = Scenario { seed, pool_size: n + 4, l, t, n, ..Scenario::default() };
        sc.selection = Some((0..n).collect());
        let who = rng.below(n as u64) as u32;
        let from = Epoch::new(1 + rng.below(3) as u8).unwrap();
        let policy = [Policy::Premature, Policy::Absent { from }, Policy::Fake { from }, Policy::FalseReporter]
            [rng.below(4) as usize];
        let honest = run_scenario(&sc).unwrap();
        sc.policies.insert(who, policy);
        let deviant = run_scenario(&sc).unwrap();
        let addr = honest.pool[who as usize];
        let (h, d) = (honest.balance_delta(&addr), deviant.balance_delta(&addr));
        assert!(d <= h, "seed {seed} {policy:?}: deviant {d} > honest {h}");
        if deviant.slashes.iter().any(|s| s.mailman == addr) {
            assert!(d < h);
            strict += 1;
        }
    }
    assert!(strict > 0);
}
