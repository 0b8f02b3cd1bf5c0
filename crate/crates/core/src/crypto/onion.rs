//! Onion-wrapped shares.
//!
//! A share wrapped with the layer list `[k_1, ..., k_l]` is encrypted under
//! `k_1` first and `k_l` last, so the outermost layer belongs to the last key
//! and peeling runs `k_l, ..., k_1`. Every layer is authenticated: a peel
//! with any other key fails instead of yielding garbage.

use alloc::vec::Vec;
use rand_core::CryptoRngCore;
use serde::{Deserialize, Serialize};

use super::{open, seal, Address, CryptoError, KeyShare, PrivateKey, PublicKey};

/// One wrapping layer: the time-frame public key and the mailman holding it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerKey {
    pub holder: Address,
    pub pubkey: PublicKey,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Onion {
    pub layers_remaining: u32,
    pub payload: Vec<u8>,
    /// Holders of the remaining layers, outermost last. Known to the sender
    /// only; never part of the wire form.
    #[serde(skip)]
    pub layer_addrs: Vec<Address>,
}

impl Onion {
    /// Wire form: `layers_remaining (u32 BE) || payload`.
    pub fn to_wire(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + self.payload.len());
        out.extend_from_slice(&self.layers_remaining.to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_wire(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() < 4 {
            return Err(CryptoError::Malformed);
        }
        Ok(Self {
            layers_remaining: u32::from_be_bytes(bytes[..4].try_into().unwrap()),
            payload: bytes[4..].to_vec(),
            layer_addrs: Vec::new(),
        })
    }

    /// The inner share once every layer is peeled.
    pub fn share(&self) -> Result<KeyShare, CryptoError> {
        if self.layers_remaining != 0 {
            return Err(CryptoError::InvalidParameters("onion still has layers"));
        }
        KeyShare::decode(&self.payload)
    }
}

pub fn onion_wrap(share: &KeyShare, layers: &[LayerKey], rng: &mut impl CryptoRngCore) -> Result<Onion, CryptoError> {
    if layers.is_empty() {
        return Err(CryptoError::InvalidParameters("onion needs at least one layer"));
    }
    let mut payload = share.encode().to_vec();
    for layer in layers {
        payload = seal(&layer.pubkey, &payload, rng);
    }
    Ok(Onion { layers_remaining: layers.len() as u32, payload, layer_addrs: layers.iter().map(|k| k.holder).collect() })
}

pub fn onion_peel(onion: &Onion, privkey: &PrivateKey) -> Result<Onion, CryptoError> {
    if onion.layers_remaining == 0 {
        return Err(CryptoError::OnionExhausted);
    }
    let payload = open(privkey, &onion.payload)?;
    let mut layer_addrs = onion.layer_addrs.clone();
    layer_addrs.pop();
    Ok(Onion { layers_remaining: onion.layers_remaining - 1, payload, layer_addrs })
}
