//! Off-chain payloads, postcard encoded.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channels::Topic;
use crate::contracts::ContractCode;
use crate::crypto::{Address, KeyShare, PrivateKey, SecretKey256, Signature};

pub const ONIONS: Topic = *b"onio";
pub const REVEAL: Topic = *b"revl";
pub const LEAK: Topic = *b"leak";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Wire {
    /// Handshake leg 1, sender to mailman.
    Invite {
        index: u32,
        switch: Address,
        sup_code: ContractCode,
        vrs_sup: Signature,
    },
    /// Handshake leg 2.
    Accept {
        index: u32,
        vrs_m: crate::crypto::Signature,
    },
    Refuse {
        index: u32,
    },
    /// Handshake leg 3.
    Countersign {
        index: u32,
        vrs_s: Signature,
    },
    /// `List(E(key, [index, vrs_s, vrs_m]))` signed by the sender.
    IdentityBundle {
        ciphertext: Vec<u8>,
        vrs_sm: Signature,
    },
    /// `E(key, [info, receipt])` for the recipient, signed together with the onions.
    Delivery {
        sender: Address,
        switch: Address,
        ciphertext: Vec<u8>,
        vrs_st: Signature,
    },
    ResendRequest,
    /// Epoch-1 reveal, addressed to the recipient only.
    LightReveal {
        privkey: PrivateKey,
    },
    /// Strawman setup: the plain share.
    StrawShare {
        service: u64,
        share: KeyShare,
    },
    /// Sold time-frame key.
    SoldKey {
        privkey: PrivateKey,
    },
}

/// Payload of a `LEAK` broadcast.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leak {
    pub index: u32,
    pub privkey: PrivateKey,
}

/// Plaintext behind the recipient's ciphertext.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sealed {
    pub info: Vec<u8>,
    pub receipt: SecretKey256,
}

pub fn encode<T: Serialize>(v: &T) -> Vec<u8> {
    postcard::to_allocvec(v).expect("in-memory encoding")
}

pub fn decode<'a, T: Deserialize<'a>>(b: &'a [u8]) -> Option<T> {
    postcard::from_bytes(b).ok()
}
