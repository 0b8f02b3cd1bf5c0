use super::*;
use crate::contracts::{Call, ContractCode};
use crate::crypto::PublicKey;
use crate::rng::SimRng;

const ETH: Amount = WEI_PER_ETHER;

fn funded(ledger: &mut Ledger, rng: &mut SimRng, amount: Amount) -> KeyPair {
    let kp = ledger.create_eoa(rng);
    ledger.fund(&kp.address, amount).unwrap();
    kp
}

fn register(pubkey: PublicKey) -> Call {
    Call::NewMailman { whisper_pub: pubkey, timeframe_pubkeys: Vec::new(), deposit: ETH }
}

#[test]
fn create_and_fund() {
    let mut rng = SimRng::new(1);
    let mut l = Ledger::default();
    let a = l.create_eoa(&mut rng);
    assert_eq!(l.balance(&a.address), 0);
    l.fund(&a.address, 100).unwrap();
    assert_eq!(l.balance(&a.address), 100);
    assert_eq!(l.fund(&Address([9; 20]), 1), Err(LedgerError::UnknownAccount(Address([9; 20]))));
    assert_eq!(l.fund(&a.address, Amount::MAX), Err(LedgerError::SupplyOverflow(Amount::MAX)));
    assert_eq!(l.total_value(), l.minted());
}

#[test]
fn eoa_addresses_distinct() {
    let mut rng = SimRng::new(2);
    let mut l = Ledger::default();
    let mut seen = alloc::collections::BTreeSet::new();
    for _ in 0..1000 {
        assert!(seen.insert(l.create_eoa(&mut rng).address));
    }
}

#[test]
fn deploy_address_is_predictable() {
    let mut rng = SimRng::new(3);
    let mut l = Ledger::default();
    let s = funded(&mut l, &mut rng, ETH);
    let agent = Address([1; 20]);
    for nonce in 0..3 {
        let predicted = predict_address(&s.address, nonce);
        let got = l.deploy_contract(&s.address, &ContractCode::Switch { agent }).unwrap();
        assert_eq!(got, predicted);
    }
    let r = &l.receipts()[0];
    assert_eq!((r.function.as_str(), r.gas_used), (fns::DEPLOY_SWITCH, 616_666));
    assert_eq!(l.balance(&s.address), ETH - 3 * l.schedule().fee_wei(616_666));
    assert_eq!(l.gas_sink(), 3 * l.schedule().fee_wei(616_666));
    assert_eq!(l.total_value(), l.minted());
}

#[test]
fn supplementary_cannot_be_deployed_directly() {
    let mut rng = SimRng::new(3);
    let mut l = Ledger::default();
    let s = funded(&mut l, &mut rng, ETH);
    let code = ContractCode::Supplementary { agent: Address::ZERO, switch: Address::ZERO };
    assert_eq!(l.deploy_contract(&s.address, &code), Err(LedgerError::NotDeployable));
}

#[test]
fn unfunded_caller_changes_nothing() {
    let mut rng = SimRng::new(4);
    let mut l = Ledger::default();
    let owner = funded(&mut l, &mut rng, 10 * ETH);
    let agent = l.deploy_contract(&owner.address, &ContractCode::Agent { min_deposit: ETH }).unwrap();
    let poor = l.create_eoa(&mut rng);
    let before = (l.world().clone(), l.receipts().len(), l.gas_sink());
    let err = l.submit_tx(&poor.address, &agent, &register(poor.pubkey)).unwrap_err();
    assert!(matches!(err, LedgerError::InsufficientBalance { .. }));
    assert_eq!((l.world().clone(), l.receipts().len(), l.gas_sink()), before);
    assert!(matches!(
        l.submit_tx(&owner.address, &Address([7; 20]), &Call::Withdraw),
        Err(LedgerError::UnknownTarget(_))
    ));
}

#[test]
fn revert_charges_gas_and_rolls_back() {
    let mut rng = SimRng::new(5);
    let mut l = Ledger::default();
    let owner = funded(&mut l, &mut rng, 10 * ETH);
    let agent = l.deploy_contract(&owner.address, &ContractCode::Agent { min_deposit: ETH }).unwrap();
    let m = funded(&mut l, &mut rng, 3 * ETH);
    let fee = l.schedule().fee_wei(150_000);
    let ok = l.submit_tx(&m.address, &agent, &register(m.pubkey)).unwrap();
    assert!(ok.success);
    assert_eq!(l.balance(&agent), ETH);
    assert_eq!(l.balance(&m.address), 2 * ETH - fee);
    let dup = l.submit_tx(&m.address, &agent, &register(m.pubkey)).unwrap();
    assert!(!dup.success);
    assert!(dup.revert.as_deref().unwrap().contains("already registered"));
    assert_eq!(l.balance(&agent), ETH);
    assert_eq!(l.balance(&m.address), 2 * ETH - 2 * fee);
    assert_eq!(l.total_value(), l.minted());
    assert_eq!(l.receipts().iter().map(|r| r.seq).collect::<Vec<_>>(), [0, 1, 2]);
}

#[test]
fn receipt_usd_matches_rates() {
    let mut rng = SimRng::new(6);
    let mut l = Ledger::default();
    let owner = funded(&mut l, &mut rng, 10 * ETH);
    let agent = l.deploy_contract(&owner.address, &ContractCode::Agent { min_deposit: ETH }).unwrap();
    let r = l
        .submit_tx(
            &owner.address,
            &agent,
            &Call::RecipientReceipt {
                receipt: crate::crypto::SecretKey256([0; 32]),
                sender: Address::ZERO,
                switch: Address::ZERO,
            },
        )
        .unwrap();
    assert!(!r.success);
    assert_eq!(r.gas_used, 54_291);
    assert_eq!(r.usd_cost.to_string(), "$0.16");
    let s = l.schedule();
    assert_eq!(r.usd_cost.0, num_rational::Ratio::from_integer(54_291u128) * s.gas_to_ether() * s.ether_to_usd());
}

#[test]
fn clock_rules() {
    let mut l = Ledger::default().with_epoch_ticks(2);
    l.advance_time(TimeFrame::new(1, 0)).unwrap();
    l.advance_time(TimeFrame::new(1, 0)).unwrap();
    assert_eq!(l.current_time(), TimeFrame::new(1, 0));
    assert!(matches!(l.advance_time(TimeFrame::new(0, 5)), Err(LedgerError::TimeRegression { .. })));

    assert!(l.enter_epoch(Epoch::LIGHTWEIGHT).is_err());
    l.enter_epoch(Epoch::PREMATURE_REPORTING).unwrap();
    assert!(l.enter_epoch(Epoch::HEAVYWEIGHT).is_err());
    l.enter_epoch(Epoch::SWITCHING).unwrap();
    assert_eq!(l.tick(), None);
    l.enter_epoch(Epoch::HEAVYWEIGHT).unwrap();
    assert_eq!(l.tick(), None);
    assert_eq!(l.tick(), Some(Epoch::ABSENT_FAKE_REPORTING));
    l.tick();
    assert_eq!(l.tick(), Some(Epoch::SECOND_RECEIPT));
    l.tick();
    assert_eq!(l.tick(), Some(Epoch::SETTLEMENT));
    assert_eq!(l.tick(), None);
    assert!(is_valid_epoch_path(l.epoch_path()));
}

#[test]
fn escrow_transfer_is_free() {
    let mut rng = SimRng::new(8);
    let mut l = Ledger::default();
    let a = funded(&mut l, &mut rng, 5);
    let b = l.create_eoa(&mut rng);
    l.escrow_transfer(&a.address, &b.address, 3).unwrap();
    assert_eq!((l.balance(&a.address), l.balance(&b.address), l.gas_sink()), (2, 3, 0));
    assert!(l.escrow_transfer(&a.address, &b.address, 3).is_err());
    assert!(l.receipts().is_empty());
}
