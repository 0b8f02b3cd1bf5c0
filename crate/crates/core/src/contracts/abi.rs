use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Agreement, LayerAssignment};
use crate::crypto::{Address, Digest256, KeyShare, PrivateKey, PublicKey, SecretKey256, Signature};
use crate::ledger::{fns, Amount, GasError, GasSchedule, TimeFrame};

use super::ContractCode;

/// Every externally callable contract function. `function_id` and
/// `encode_args` form the stable ABI recorded in traces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Call {
    NewMailman {
        whisper_pub: PublicKey,
        timeframe_pubkeys: Vec<(TimeFrame, PublicKey)>,
        deposit: Amount,
    },
    NewService {
        timeframe: TimeFrame,
        l: u32,
        t: u32,
        n: u32,
        assignment: LayerAssignment,
        switch: Address,
        sup: Address,
        recipient: Address,
        receipt_commitment: Digest256,
        remuneration: Amount,
    },
    RecipientReceipt {
        receipt: SecretKey256,
        sender: Address,
        switch: Address,
    },
    ProveRelationship {
        switch: Address,
        agreement: Agreement,
    },
    Withdraw,
    DeploySupplementary {
        switch: Address,
        code: ContractCode,
        vrs_sup: Signature,
    },
    ReportPremature {
        index: u32,
        privkey: PrivateKey,
    },
    RevealIdentity {
        agreements: Vec<Agreement>,
    },
    RevealPrivkey {
        index: u32,
        privkey: PrivateKey,
    },
    ReportAbsent {
        index: u32,
    },
    ReportFake {
        index: u32,
    },
    InformAgent,
    StrawmanNewService {
        timeframe: TimeFrame,
        t: u32,
        n: u32,
        recipient: Address,
        mailmen: Vec<(Address, Digest256)>,
        receipt_commitment: Digest256,
        remuneration: Amount,
    },
    StrawmanReportPremature {
        service: u64,
        share: KeyShare,
    },
    RevealShare {
        service: u64,
        share: KeyShare,
    },
    RevealReceipt {
        service: u64,
        receipt: SecretKey256,
    },
}

struct Enc(Vec<u8>);

impl Enc {
    fn u32(&mut self, v: u32) -> &mut Self {
        self.0.extend_from_slice(&v.to_be_bytes());
        self
    }
    fn u64(&mut self, v: u64) -> &mut Self {
        self.0.extend_from_slice(&v.to_be_bytes());
        self
    }
    fn u128(&mut self, v: Amount) -> &mut Self {
        self.0.extend_from_slice(&v.to_be_bytes());
        self
    }
    fn raw(&mut self, b: &[u8]) -> &mut Self {
        self.0.extend_from_slice(b);
        self
    }
    fn var(&mut self, b: &[u8]) -> &mut Self {
        self.u32(b.len() as u32).raw(b)
    }
    fn frame(&mut self, tf: TimeFrame) -> &mut Self {
        self.raw(&tf.to_bytes())
    }
}

impl Call {
    pub fn function_id(&self) -> &'static str {
        match self {
            Call::NewMailman { .. } => fns::NEW_MAILMAN,
            Call::NewService { .. } => fns::NEW_SERVICE,
            Call::RecipientReceipt { .. } => fns::RECIPIENT_RECEIPT,
            Call::ProveRelationship { .. } => fns::PROVE_RELATIONSHIP,
            Call::Withdraw => fns::WITHDRAW,
            Call::DeploySupplementary { .. } => fns::DEPLOY_SUPPLEMENTARY,
            Call::ReportPremature { .. } => fns::REPORT_PREMATURE,
            Call::RevealIdentity { .. } => fns::REVEAL_IDENTITY,
            Call::RevealPrivkey { .. } => fns::REVEAL_PRIVKEY,
            Call::ReportAbsent { .. } => fns::REPORT_ABSENT,
            Call::ReportFake { .. } => fns::REPORT_FAKE,
            Call::InformAgent => fns::INFORM_AGENT,
            Call::StrawmanNewService { .. } => fns::STRAWMAN_NEW_SERVICE,
            Call::StrawmanReportPremature { .. } => fns::STRAWMAN_REPORT_PREMATURE,
            Call::RevealShare { .. } => fns::REVEAL_SHARE,
            Call::RevealReceipt { .. } => fns::REVEAL_RECEIPT,
        }
    }

    /// Currency attached to the call.
    pub fn value(&self) -> Amount {
        match self {
            Call::NewMailman { deposit, .. } => *deposit,
            Call::NewService { remuneration, .. } | Call::StrawmanNewService { remuneration, .. } => *remuneration,
            _ => 0,
        }
    }

    /// Scheduled gas. `revealIdentity` is charged per identity and the
    /// strawman setup per listed mailman.
    pub fn gas(&self, schedule: &GasSchedule) -> Result<u64, GasError> {
        let base = schedule.gas(self.function_id())?;
        Ok(match self {
            Call::RevealIdentity { agreements } => base * agreements.len().max(1) as u64,
            Call::StrawmanNewService { mailmen, .. } => {
                base + schedule.gas(fns::STRAWMAN_PER_MAILMAN)? * mailmen.len() as u64
            }
            _ => base,
        })
    }

    /// Packed big-endian argument encoding. Variable-length fields carry a
    /// u32 length prefix.
    pub fn encode_args(&self) -> Vec<u8> {
        let mut e = Enc(Vec::new());
        match self {
            Call::NewMailman { whisper_pub, timeframe_pubkeys, deposit } => {
                e.raw(whisper_pub.as_bytes()).u32(timeframe_pubkeys.len() as u32);
                for (tf, pk) in timeframe_pubkeys {
                    e.frame(*tf).raw(pk.as_bytes());
                }
                e.u128(*deposit);
            }
            Call::NewService {
                timeframe,
                l,
                t,
                n,
                assignment,
                switch,
                sup,
                recipient,
                receipt_commitment,
                remuneration,
            } => {
                e.frame(*timeframe)
                    .u32(*l)
                    .u32(*t)
                    .u32(*n)
                    .raw(&[assignment.tag()])
                    .raw(switch.as_bytes())
                    .raw(sup.as_bytes())
                    .raw(recipient.as_bytes())
                    .raw(receipt_commitment.as_bytes())
                    .u128(*remuneration);
            }
            Call::RecipientReceipt { receipt, sender, switch } => {
                e.raw(receipt.as_bytes()).raw(sender.as_bytes()).raw(switch.as_bytes());
            }
            Call::ProveRelationship { switch, agreement } => {
                e.raw(switch.as_bytes()).raw(&agreement.encode());
            }
            Call::Withdraw | Call::InformAgent => {}
            Call::DeploySupplementary { switch, code, vrs_sup } => {
                e.raw(switch.as_bytes()).var(&code.to_bytes()).raw(vrs_sup.as_bytes());
            }
            Call::ReportPremature { index, privkey } | Call::RevealPrivkey { index, privkey } => {
                e.u32(*index).raw(privkey.as_bytes());
            }
            Call::RevealIdentity { agreements } => {
                e.u32(agreements.len() as u32);
                for a in agreements {
                    e.raw(&a.encode());
                }
            }
            Call::ReportAbsent { index } | Call::ReportFake { index } => {
                e.u32(*index);
            }
            Call::StrawmanNewService { timeframe, t, n, recipient, mailmen, receipt_commitment, remuneration } => {
                e.frame(*timeframe).u32(*t).u32(*n).raw(recipient.as_bytes()).u32(mailmen.len() as u32);
                for (m, h) in mailmen {
                    e.raw(m.as_bytes()).raw(h.as_bytes());
                }
                e.raw(receipt_commitment.as_bytes()).u128(*remuneration);
            }
            Call::StrawmanReportPremature { service, share } | Call::RevealShare { service, share } => {
                e.u64(*service).raw(&share.encode());
            }
            Call::RevealReceipt { service, receipt } => {
                e.u64(*service).raw(receipt.as_bytes());
            }
        }
        e.0
    }
}
