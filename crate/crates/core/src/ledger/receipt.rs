use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::gas::Usd;
use super::{Amount, Epoch, TimeFrame};
use crate::contracts::Event;
use crate::crypto::Address;

/// Protocol phase a transaction belongs to, used to bucket costs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Registration,
    Send,
    Pend,
    Deliver,
    Settlement,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Registration => "registration",
            Phase::Send => "send",
            Phase::Pend => "pend",
            Phase::Deliver => "deliver",
            Phase::Settlement => "settlement",
        };
        f.write_str(s)
    }
}

/// Packed call arguments, hex encoded in human-readable formats.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Calldata(pub Vec<u8>);

impl Serialize for Calldata {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if s.is_human_readable() {
            s.serialize_str(&alloc::format!("0x{}", hex::encode(&self.0)))
        } else {
            s.serialize_bytes(&self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Calldata {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        if d.is_human_readable() {
            let s = String::deserialize(d)?;
            let s = s.strip_prefix("0x").unwrap_or(&s);
            hex::decode(s).map(Calldata).map_err(serde::de::Error::custom)
        } else {
            Vec::<u8>::deserialize(d).map(Calldata)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxReceipt {
    pub seq: u64,
    pub caller: Address,
    pub target: Address,
    pub function: String,
    pub args: Calldata,
    pub value: Amount,
    pub gas_used: u64,
    pub fee_wei: Amount,
    pub usd_cost: Usd,
    pub success: bool,
    pub revert: Option<String>,
    pub emitted: Vec<Event>,
    pub frame: TimeFrame,
    pub epoch: Option<Epoch>,
    pub phase: Phase,
    /// Contract created by this transaction, if any.
    pub created: Option<Address>,
}
