use alloc::vec::Vec;

use super::*;
use crate::crypto::{hash256, sign, KeyPair, PrivateKey, SecretKey256};
use crate::ledger::{predict_address, Epoch, Ledger, TimeFrame, TxReceipt, WEI_PER_ETHER};
use crate::rng::SimRng;

const ETH: Amount = WEI_PER_ETHER;
const TF: TimeFrame = TimeFrame::new(3, 1);

struct Mailman {
    kp: KeyPair,
    tf: KeyPair,
}

struct Fx {
    ledger: Ledger,
    rng: SimRng,
    agent: Address,
    sender: KeyPair,
    recipient: KeyPair,
    mailmen: Vec<Mailman>,
    switch: Address,
    receipt: SecretKey256,
}

impl Fx {
    fn new(pool: usize, l: u32, t: u32, n: u32) -> Self {
        let mut rng = SimRng::new(11);
        let mut ledger = Ledger::default();
        let admin = ledger.create_eoa(&mut rng);
        ledger.fund(&admin.address, 10 * ETH).unwrap();
        let agent = ledger.deploy_contract(&admin.address, &ContractCode::Agent { min_deposit: ETH }).unwrap();
        let mut mailmen = Vec::new();
        for _ in 0..pool {
            let kp = ledger.create_eoa(&mut rng);
            ledger.fund(&kp.address, 5 * ETH).unwrap();
            let tf = crate::crypto::keypair_gen(&mut rng);
            let r = ledger
                .submit_tx(
                    &kp.address,
                    &agent,
                    &Call::NewMailman {
                        whisper_pub: kp.pubkey,
                        timeframe_pubkeys: alloc::vec![(TF, tf.pubkey)],
                        deposit: ETH,
                    },
                )
                .unwrap();
            assert!(r.success);
            mailmen.push(Mailman { kp, tf });
        }
        let sender = ledger.create_eoa(&mut rng);
        ledger.fund(&sender.address, 10 * ETH).unwrap();
        let recipient = ledger.create_eoa(&mut rng);
        ledger.fund(&recipient.address, ETH).unwrap();
        let switch = ledger.deploy_contract(&sender.address, &ContractCode::Switch { agent }).unwrap();
        let receipt = SecretKey256::random(&mut rng);
        let mut fx = Fx { ledger, rng, agent, sender, recipient, mailmen, switch, receipt };
        let r = fx.new_service(l, t, n);
        assert!(r.success, "{:?}", r.revert);
        fx
    }

    fn new_service(&mut self, l: u32, t: u32, n: u32) -> TxReceipt {
        let call = Call::NewService {
            timeframe: TF,
            l,
            t,
            n,
            assignment: LayerAssignment::Cyclic,
            switch: self.switch,
            sup: predict_address(&self.switch, 0),
            recipient: self.recipient.address,
            receipt_commitment: hash256(self.receipt.as_bytes()),
            remuneration: ETH,
        };
        self.ledger.submit_tx(&self.sender.address, &self.agent, &call).unwrap()
    }

    fn agreement(&self, index: u32, m: usize) -> Agreement {
        let vrs_m = sign(&self.mailmen[m].kp.privkey, &mailman_digest(&self.switch, index)).unwrap();
        let vrs_s = sign(&self.sender.privkey, &sender_digest(&self.switch, index, &vrs_m)).unwrap();
        Agreement { index, vrs_m, vrs_s }
    }

    fn sup_code(&self) -> ContractCode {
        ContractCode::Supplementary { agent: self.agent, switch: self.switch }
    }

    fn deploy_sup(&mut self, by: usize) -> TxReceipt {
        let code = self.sup_code();
        let vrs_sup = sign(&self.sender.privkey, &sup_code_digest(&self.switch, &code)).unwrap();
        let call = Call::DeploySupplementary { switch: self.switch, code, vrs_sup };
        self.ledger.submit_tx(&self.mailmen[by].kp.address.clone(), &self.switch.clone(), &call).unwrap()
    }

    fn sup(&self) -> Address {
        predict_address(&self.switch, 0)
    }

    fn call_sup(&mut self, m: usize, call: Call) -> TxReceipt {
        let who = self.mailmen[m].kp.address;
        let sup = self.sup();
        self.ledger.submit_tx(&who, &sup, &call).unwrap()
    }

    fn call_agent(&mut self, who: Address, call: Call) -> TxReceipt {
        let agent = self.agent;
        self.ledger.submit_tx(&who, &agent, &call).unwrap()
    }

    fn epochs(&mut self, ks: &[u8]) {
        self.ledger.advance_time(TF).unwrap();
        for k in ks {
            self.ledger.enter_epoch(Epoch::new(*k).unwrap()).unwrap();
        }
    }

    fn agent_state(&self) -> &AgentContract {
        self.ledger.world().contract(&self.agent).unwrap().as_agent().unwrap()
    }

    fn status(&self) -> ServiceStatus {
        self.agent_state().service(&self.switch).unwrap().status
    }

    fn mailman_status(&self, m: usize) -> MailmanStatus {
        self.agent_state().mailman(&self.mailmen[m].kp.address).unwrap().status
    }

    fn withdraw(&mut self, who: Address) -> (TxReceipt, Amount) {
        let before = self.ledger.balance(&who);
        let r = self.call_agent(who, Call::Withdraw);
        let after = self.ledger.balance(&who);
        let got = after + r.fee_wei - before;
        (r, got)
    }

    fn receipt_call(&self) -> Call {
        Call::RecipientReceipt { receipt: self.receipt, sender: self.sender.address, switch: self.switch }
    }

    /// Heavyweight path up to epoch 4 with every mailman revealing.
    fn heavy_to_epoch4(&mut self, n: usize, skip_reveal: &[usize], fake: &[usize]) {
        self.epochs(&[0, 2]);
        assert!(self.deploy_sup(0).success);
        let agreements = (0..n).map(|i| self.agreement(i as u32 + 1, i)).collect();
        assert!(self.call_sup(0, Call::RevealIdentity { agreements }).success);
        self.ledger.enter_epoch(Epoch::HEAVYWEIGHT).unwrap();
        for i in 0..n {
            if skip_reveal.contains(&i) {
                continue;
            }
            let privkey = if fake.contains(&i) { PrivateKey([7; 32]) } else { self.mailmen[i].tf.privkey };
            assert!(self.call_sup(i, Call::RevealPrivkey { index: i as u32 + 1, privkey }).success);
        }
        self.ledger.enter_epoch(Epoch::ABSENT_FAKE_REPORTING).unwrap();
    }
}

fn assert_conserved(fx: &Fx) {
    assert_eq!(fx.ledger.total_value(), fx.ledger.minted());
}

#[test]
fn registration_escrows_deposit() {
    let mut fx = Fx::new(2, 1, 1, 1);
    let kp = fx.ledger.create_eoa(&mut fx.rng);
    fx.ledger.fund(&kp.address, 3 * ETH).unwrap();
    let escrow = fx.ledger.balance(&fx.agent);
    let call = Call::NewMailman { whisper_pub: kp.pubkey, timeframe_pubkeys: Vec::new(), deposit: ETH };
    let r = fx.call_agent(kp.address, call.clone());
    assert!(r.success);
    assert_eq!(fx.ledger.balance(&fx.agent), escrow + ETH);
    assert_eq!(fx.ledger.balance(&kp.address), 2 * ETH - r.fee_wei);
    assert!(!fx.call_agent(kp.address, call).success);
    let low = fx.ledger.create_eoa(&mut fx.rng);
    fx.ledger.fund(&low.address, ETH).unwrap();
    let r = fx.call_agent(
        low.address,
        Call::NewMailman { whisper_pub: low.pubkey, timeframe_pubkeys: Vec::new(), deposit: ETH / 2 },
    );
    assert_eq!(r.revert.as_deref(), Some("deposit 500000000000000000 below minimum 1000000000000000000"));
    assert!(fx.agent_state().mailman(&kp.address).is_some());
    assert_conserved(&fx);
}

#[test]
fn service_record_names_no_mailman() {
    let fx = Fx::new(12, 3, 4, 10);
    let r = fx.ledger.receipts().iter().find(|r| r.function == "newService").unwrap();
    assert_eq!(r.gas_used, 83_121);
    let rec = fx.agent_state().service(&fx.switch).unwrap();
    assert_eq!((rec.spec.l, rec.spec.t, rec.spec.n), (3, 4, 10));
    let bytes = postcard::to_allocvec(rec).unwrap();
    for m in &fx.mailmen {
        assert!(!bytes.windows(20).any(|w| w == m.kp.address.as_bytes()));
    }
    assert_eq!(fx.ledger.balance(&fx.agent), 13 * ETH);
}

#[test]
fn service_parameter_errors() {
    let mut fx = Fx::new(4, 1, 1, 1);
    fx.switch = fx.ledger.deploy_contract(&fx.sender.address, &ContractCode::Switch { agent: fx.agent }).unwrap();
    assert_eq!(fx.new_service(1, 5, 4).revert.as_deref(), Some("invalid service parameters: need 1 <= t <= n"));
    assert!(fx.new_service(0, 1, 4).revert.is_some());
    assert!(fx.new_service(5, 1, 4).revert.is_some());
    fx.ledger.advance_time(TimeFrame::new(3, 1)).unwrap();
    assert_eq!(fx.new_service(1, 1, 4).revert.as_deref(), Some("time-frame is not in the future"));
}

#[test]
fn supplementary_deployment() {
    let mut fx = Fx::new(4, 1, 2, 3);
    fx.epochs(&[0, 1]);
    assert!(fx.deploy_sup(0).revert.unwrap().contains("not allowed"));
    fx.ledger.enter_epoch(Epoch::SWITCHING).unwrap();

    let code = fx.sup_code();
    let forged = sign(&fx.mailmen[1].kp.privkey, &sup_code_digest(&fx.switch, &code)).unwrap();
    let call = Call::DeploySupplementary { switch: fx.switch, code, vrs_sup: forged };
    let r = fx.ledger.submit_tx(&fx.mailmen[1].kp.address, &fx.switch, &call).unwrap();
    assert_eq!(r.revert.as_deref(), Some("signature verification failed"));

    let r = fx.deploy_sup(0);
    assert!(r.success);
    assert_eq!(r.gas_used, 2_425_356);
    assert_eq!(r.created, Some(fx.agent_state().service(&fx.switch).unwrap().spec.sup_addr));
    let sup = fx.ledger.world().contract(&fx.sup()).unwrap().as_sup().unwrap();
    assert_eq!(sup.deployed_by, fx.mailmen[0].kp.address);

    let before = fx.ledger.balance(&fx.mailmen[1].kp.address);
    let again = fx.deploy_sup(1);
    assert_eq!(again.revert.as_deref(), Some("supplementary contract already deployed"));
    assert_eq!(fx.ledger.balance(&fx.mailmen[1].kp.address), before - again.fee_wei);
    assert_conserved(&fx);
}

#[test]
fn reveal_identity_checks_every_signature() {
    let mut fx = Fx::new(10, 3, 4, 10);
    fx.epochs(&[0, 2]);
    assert!(fx.deploy_sup(0).success);
    let mut agreements: Vec<_> = (0..10).map(|i| fx.agreement(i as u32 + 1, i)).collect();
    let good = agreements.clone();
    agreements[6].vrs_s.0[5] ^= 1;
    let r = fx.call_sup(0, Call::RevealIdentity { agreements });
    assert!(!r.success);
    assert!(fx.ledger.world().contract(&fx.sup()).unwrap().as_sup().unwrap().identities.is_empty());

    let r = fx.call_sup(0, Call::RevealIdentity { agreements: good[..4].to_vec() });
    assert_eq!(r.gas_used, 4 * 72_678);
    let r = fx.call_sup(1, Call::RevealIdentity { agreements: good[4..].to_vec() });
    assert_eq!(r.gas_used, 6 * 72_678);
    let sup = fx.ledger.world().contract(&fx.sup()).unwrap().as_sup().unwrap();
    assert_eq!(sup.identities.len(), 10);
    assert_eq!(sup.identities[&7], fx.mailmen[6].kp.address);

    let dup = fx.call_sup(1, Call::RevealIdentity { agreements: good[..1].to_vec() });
    assert_eq!(dup.revert.as_deref(), Some("duplicate index 1"));
}

#[test]
fn agreement_from_other_sender_rejected() {
    let mut fx = Fx::new(3, 1, 1, 3);
    fx.epochs(&[0, 2]);
    assert!(fx.deploy_sup(0).success);
    let mut a = fx.agreement(1, 0);
    a.vrs_s = sign(&fx.recipient.privkey, &sender_digest(&fx.switch, 1, &a.vrs_m)).unwrap();
    let r = fx.call_sup(0, Call::RevealIdentity { agreements: alloc::vec![a] });
    assert_eq!(r.revert.as_deref(), Some("signer mismatch"));
}

#[test]
fn reveal_privkey_gating_and_matching() {
    let mut fx = Fx::new(3, 1, 2, 3);
    fx.epochs(&[0, 2]);
    assert!(fx.deploy_sup(0).success);
    let agreements = (0..3).map(|i| fx.agreement(i as u32 + 1, i)).collect();
    assert!(fx.call_sup(0, Call::RevealIdentity { agreements }).success);
    let pk = fx.mailmen[0].tf.privkey;
    assert!(!fx.call_sup(0, Call::RevealPrivkey { index: 1, privkey: pk }).success);
    fx.ledger.enter_epoch(Epoch::HEAVYWEIGHT).unwrap();
    assert_eq!(
        fx.call_sup(1, Call::RevealPrivkey { index: 1, privkey: pk }).revert.as_deref(),
        Some("caller does not hold index 1")
    );
    let r = fx.call_sup(0, Call::RevealPrivkey { index: 1, privkey: pk });
    assert!(r.success);
    assert_eq!(r.gas_used, 90_689);
    assert_eq!(r.emitted, [Event::PrivkeyRevealed { index: 1, mailman: fx.mailmen[0].kp.address, matches: true }]);
    let r = fx.call_sup(1, Call::RevealPrivkey { index: 2, privkey: PrivateKey([3; 32]) });
    assert!(matches!(r.emitted[0], Event::PrivkeyRevealed { matches: false, .. }));
    assert!(!fx.call_sup(0, Call::RevealPrivkey { index: 1, privkey: pk }).success);
}

#[test]
fn absent_and_fake_reports_slash() {
    let mut fx = Fx::new(4, 1, 2, 4);
    fx.heavy_to_epoch4(4, &[2], &[3]);
    assert_eq!(
        fx.call_sup(0, Call::ReportAbsent { index: 2 }).revert.as_deref(),
        Some("accusation contradicted by on-chain state")
    );
    assert!(!fx.call_sup(0, Call::ReportFake { index: 1 }).success);
    let r = fx.call_sup(0, Call::ReportAbsent { index: 3 });
    assert!(r.success);
    assert_eq!(r.gas_used, 65_343);
    let r = fx.call_sup(1, Call::ReportFake { index: 4 });
    assert!(r.success);
    assert_eq!(r.gas_used, 1_280_723);
    assert!(!fx.call_sup(1, Call::ReportAbsent { index: 3 }).success);
    let r = fx.call_sup(0, Call::InformAgent);
    assert!(r.success, "{:?}", r.revert);
    assert_eq!(r.gas_used, 57_042);
    assert!(!fx.call_sup(0, Call::InformAgent).success);

    let slashed: Vec<_> = r
        .emitted
        .iter()
        .filter_map(|e| match e {
            Event::Slashed { mailman, reason, .. } => Some((*mailman, *reason)),
            _ => None,
        })
        .collect();
    assert_eq!(
        slashed,
        [(fx.mailmen[2].kp.address, SlashReason::Absent), (fx.mailmen[3].kp.address, SlashReason::Fake)]
    );
    assert_eq!(fx.mailman_status(2), MailmanStatus::Slashed);
    assert_eq!(fx.mailman_status(0), MailmanStatus::Active);
    assert_conserved(&fx);
}

#[test]
fn premature_true_report_rewards_reporter() {
    let mut fx = Fx::new(3, 1, 2, 3);
    fx.epochs(&[0]);
    assert!(fx.deploy_sup(1).success);
    let leaked = fx.mailmen[0].tf.privkey;
    let r = fx.call_sup(1, Call::ReportPremature { index: 1, privkey: leaked });
    assert_eq!(r.gas_used, 65_317);
    assert!(r.success);
    assert_eq!(
        fx.call_sup(2, Call::ReportPremature { index: 1, privkey: leaked }).revert.as_deref(),
        Some("duplicate report")
    );
    fx.ledger.enter_epoch(Epoch::SWITCHING).unwrap();
    let agreements = (0..3).map(|i| fx.agreement(i as u32 + 1, i)).collect();
    assert!(fx.call_sup(1, Call::RevealIdentity { agreements }).success);
    fx.ledger.enter_epoch(Epoch::HEAVYWEIGHT).unwrap();
    for i in 0..3 {
        let privkey = fx.mailmen[i].tf.privkey;
        assert!(fx.call_sup(i, Call::RevealPrivkey { index: i as u32 + 1, privkey }).success);
    }
    fx.ledger.enter_epoch(Epoch::ABSENT_FAKE_REPORTING).unwrap();
    let inform = fx.call_sup(1, Call::InformAgent);
    assert!(inform.emitted.contains(&Event::Slashed {
        mailman: fx.mailmen[0].kp.address,
        reason: SlashReason::Premature,
        amount: ETH
    }));
    assert!(inform.emitted.contains(&Event::Credited {
        to: fx.mailmen[1].kp.address,
        amount: ETH / 2,
        reason: CreditReason::ReportReward
    }));
    fx.ledger.enter_epoch(Epoch::SECOND_RECEIPT).unwrap();
    assert!(fx.call_agent(fx.recipient.address, fx.receipt_call()).success);
    assert_eq!(fx.status(), ServiceStatus::DeliveredHeavy);
    fx.ledger.enter_epoch(Epoch::SETTLEMENT).unwrap();

    // Reporter: deposit, reward, refund of every heavyweight fee it paid,
    // and half the remuneration (two unslashed identities).
    let reporter = fx.mailmen[1].kp.address;
    let fees: Amount =
        fx.ledger.receipts().iter().filter(|r| r.caller == reporter && r.target != fx.agent).map(|r| r.fee_wei).sum();
    let (r, got) = fx.withdraw(reporter);
    assert!(r.success);
    assert_eq!(got, ETH + ETH / 2 + fees + ETH / 2);
    let (r, _) = fx.withdraw(fx.mailmen[0].kp.address);
    assert_eq!(r.revert.as_deref(), Some("nothing to withdraw"));
    assert_conserved(&fx);
}

#[test]
fn premature_false_report_slashes_reporter() {
    let mut fx = Fx::new(3, 1, 2, 3);
    fx.epochs(&[0]);
    assert!(fx.deploy_sup(1).success);
    assert!(fx.call_sup(1, Call::ReportPremature { index: 1, privkey: PrivateKey([9; 32]) }).success);
    assert!(!fx.call_sup(1, Call::ReportPremature { index: 4, privkey: PrivateKey([9; 32]) }).success);
    fx.ledger.enter_epoch(Epoch::SWITCHING).unwrap();
    let agreements = (0..3).map(|i| fx.agreement(i as u32 + 1, i)).collect();
    assert!(fx.call_sup(0, Call::RevealIdentity { agreements }).success);
    fx.ledger.enter_epoch(Epoch::HEAVYWEIGHT).unwrap();
    for i in 0..3 {
        let privkey = fx.mailmen[i].tf.privkey;
        assert!(fx.call_sup(i, Call::RevealPrivkey { index: i as u32 + 1, privkey }).success);
    }
    fx.ledger.enter_epoch(Epoch::ABSENT_FAKE_REPORTING).unwrap();
    let inform = fx.call_sup(0, Call::InformAgent);
    let slashed: Vec<_> = inform.emitted.iter().filter(|e| matches!(e, Event::Slashed { .. })).collect();
    assert_eq!(
        slashed,
        [&Event::Slashed { mailman: fx.mailmen[1].kp.address, reason: SlashReason::FalseReport, amount: ETH }]
    );
    assert_eq!(fx.mailman_status(0), MailmanStatus::Active);
    assert_conserved(&fx);
}

#[test]
fn lightweight_receipt_and_settlement() {
    let mut fx = Fx::new(3, 1, 2, 3);
    fx.epochs(&[0, 1]);
    let mut wrong = fx.receipt_call();
    if let Call::RecipientReceipt { receipt, .. } = &mut wrong {
        receipt.0[0] ^= 1;
    }
    assert_eq!(fx.call_agent(fx.recipient.address, wrong).revert.as_deref(), Some("receipt does not match commitment"));
    assert_eq!(
        fx.call_agent(fx.sender.address, fx.receipt_call()).revert.as_deref(),
        Some("caller is not the recipient")
    );
    let r = fx.call_agent(fx.recipient.address, fx.receipt_call());
    assert!(r.success);
    assert_eq!(r.gas_used, 54_291);
    assert_eq!(fx.status(), ServiceStatus::DeliveredLight);
    assert!(!fx.call_agent(fx.recipient.address, fx.receipt_call()).success);
    let a = fx.agreement(1, 0);
    assert!(
        !fx.call_agent(fx.mailmen[0].kp.address, Call::ProveRelationship { switch: fx.switch, agreement: a.clone() })
            .success
    );
    fx.ledger.enter_epoch(Epoch::SETTLEMENT).unwrap();

    assert_eq!(
        fx.call_agent(fx.mailmen[1].kp.address, Call::ProveRelationship { switch: fx.switch, agreement: a.clone() })
            .revert
            .as_deref(),
        Some("signer mismatch")
    );
    for i in 0..3 {
        let agreement = fx.agreement(i as u32 + 1, i);
        assert!(
            fx.call_agent(fx.mailmen[i].kp.address, Call::ProveRelationship { switch: fx.switch, agreement }).success
        );
        let (r, got) = fx.withdraw(fx.mailmen[i].kp.address);
        assert!(r.success);
        assert_eq!(got, ETH + ETH / 3);
        assert!(!fx.withdraw(fx.mailmen[i].kp.address).0.success);
    }
    let (_, refund) = fx.withdraw(fx.sender.address);
    assert_eq!(refund, ETH - 3 * (ETH / 3));
    assert_conserved(&fx);
}

#[test]
fn failed_service_refunds_everyone() {
    let mut fx = Fx::new(3, 1, 2, 3);
    fx.epochs(&[0, 1, 2, 6]);
    for i in 0..3 {
        let (r, got) = fx.withdraw(fx.mailmen[i].kp.address);
        assert!(r.success);
        assert_eq!(got, ETH);
    }
    assert_eq!(fx.status(), ServiceStatus::Failed);
    let (_, refund) = fx.withdraw(fx.sender.address);
    assert_eq!(refund, ETH);
    assert_eq!(fx.ledger.balance(&fx.agent), 0);
    assert_conserved(&fx);
}

#[test]
fn out_of_epoch_calls_revert() {
    let mut fx = Fx::new(3, 1, 2, 3);
    fx.epochs(&[0]);
    assert!(!fx.call_agent(fx.recipient.address, fx.receipt_call()).success);
    assert!(!fx.withdraw(fx.mailmen[0].kp.address).0.success);
    assert!(fx.deploy_sup(0).success);
    for call in [
        Call::RevealIdentity { agreements: alloc::vec![fx.agreement(1, 0)] },
        Call::RevealPrivkey { index: 1, privkey: fx.mailmen[0].tf.privkey },
        Call::ReportAbsent { index: 1 },
        Call::ReportFake { index: 1 },
        Call::InformAgent,
    ] {
        let r = fx.call_sup(1, call);
        assert!(r.revert.unwrap().contains("not allowed"));
    }
}

#[test]
fn abi_encoding_is_stable() {
    let a = Agreement { index: 3, vrs_m: crate::crypto::Signature([1; 65]), vrs_s: crate::crypto::Signature([2; 65]) };
    assert_eq!(Agreement::decode(&a.encode()), Some(a.clone()));
    let call = Call::ProveRelationship { switch: Address([5; 20]), agreement: a };
    let bytes = call.encode_args();
    assert_eq!(bytes.len(), 20 + Agreement::ENCODED_LEN);
    assert_eq!(&bytes[20..24], &[0, 0, 0, 3]);
    assert_eq!(Call::ReportAbsent { index: 258 }.encode_args(), [0, 0, 1, 2]);
    assert!(Call::Withdraw.encode_args().is_empty());
}

#[test]
fn layer_assignment_holders() {
    let c: Vec<u32> = LayerAssignment::Cyclic.holders(8, 10, 3).collect();
    assert_eq!(c, [8, 9, 0]);
    let d: Vec<u32> = LayerAssignment::Disjoint.holders(2, 10, 3).collect();
    assert_eq!(d, [6, 7, 8]);
    assert_eq!(LayerAssignment::Disjoint.recruits(10, 3), 30);
}

#[test]
fn storage_has_no_key_material() {
    let fx = Fx::new(2, 1, 1, 2);
    let bytes = fx.ledger.onchain_bytes();
    assert!(!bytes.windows(32).any(|w| w == fx.receipt.as_bytes()));
    let _ = hash256(&bytes);
}
