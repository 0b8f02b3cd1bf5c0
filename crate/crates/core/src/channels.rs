//! In-process whisper-style messaging: topic broadcast plus private
//! messages sealed to a registered whisper key. Nothing here touches the
//! ledger, so off-chain traffic never costs gas.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::crypto::{open, seal, Address, CryptoError, PrivateKey, PublicKey};
use crate::rng::SimRng;

pub type Topic = [u8; 4];

/// Topic used for private messages.
pub const PRIVATE: Topic = *b"priv";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChannelError {
    #[error("no whisper key registered for {0}")]
    UnknownWhisperKey(Address),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelMsg {
    pub seq: u64,
    pub tick: u64,
    pub from: Address,
    /// `None` for broadcasts.
    pub to: Option<Address>,
    pub topic: Topic,
    /// Ciphertext for private messages, plaintext for broadcasts.
    #[serde(with = "hex_payload")]
    pub payload: Vec<u8>,
    pub delivered: bool,
}

impl ChannelMsg {
    pub fn is_private(&self) -> bool {
        self.to.is_some()
    }

    /// Opens a private payload with the recipient's whisper key.
    pub fn open(&self, whisper: &PrivateKey) -> Result<Vec<u8>, ChannelError> {
        Ok(open(whisper, &self.payload)?)
    }
}

mod hex_payload {
    use alloc::string::String;
    use alloc::vec::Vec;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        if s.is_human_readable() {
            s.serialize_str(&hex::encode(v))
        } else {
            s.serialize_bytes(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        if d.is_human_readable() {
            let s = String::deserialize(d)?;
            hex::decode(s).map_err(serde::de::Error::custom)
        } else {
            Vec::<u8>::deserialize(d)
        }
    }
}

/// Targeted delivery faults.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    DropFrom(Address),
    DropTo(Address),
}

#[derive(Clone, Debug)]
pub struct MessageBus {
    whisper_keys: BTreeMap<Address, PublicKey>,
    subscriptions: BTreeMap<Address, BTreeSet<Topic>>,
    log: Vec<ChannelMsg>,
    queued: Vec<usize>,
    inboxes: BTreeMap<Address, Vec<usize>>,
    faults: BTreeSet<Fault>,
    drop_prob: f64,
    fault_rng: SimRng,
    crypto_rng: SimRng,
    tick: u64,
}

impl MessageBus {
    pub fn new(drop_prob: f64, fault_rng: SimRng, crypto_rng: SimRng) -> Self {
        Self {
            whisper_keys: BTreeMap::new(),
            subscriptions: BTreeMap::new(),
            log: Vec::new(),
            queued: Vec::new(),
            inboxes: BTreeMap::new(),
            faults: BTreeSet::new(),
            drop_prob,
            fault_rng,
            crypto_rng,
            tick: 0,
        }
    }

    pub fn register_whisper(&mut self, owner: Address, key: PublicKey) {
        self.whisper_keys.insert(owner, key);
    }

    pub fn subscribe(&mut self, owner: Address, topic: Topic) {
        self.subscriptions.entry(owner).or_default().insert(topic);
    }

    pub fn add_fault(&mut self, fault: Fault) {
        self.faults.insert(fault);
    }

    pub fn clear_faults(&mut self) {
        self.faults.clear();
    }

    fn dropped(&mut self, from: &Address, to: Option<&Address>) -> bool {
        // the Bernoulli draw happens for every message so that adding a
        // targeted fault never shifts later draws
        let random = self.drop_prob > 0.0 && self.fault_rng.bernoulli(self.drop_prob);
        random
            || self.faults.contains(&Fault::DropFrom(*from))
            || to.is_some_and(|t| self.faults.contains(&Fault::DropTo(*t)))
    }

    fn enqueue(&mut self, from: Address, to: Option<Address>, topic: Topic, payload: Vec<u8>) {
        let delivered = !self.dropped(&from, to.as_ref());
        let seq = self.log.len() as u64;
        self.log.push(ChannelMsg { seq, tick: self.tick, from, to, topic, payload, delivered });
        if delivered {
            self.queued.push(seq as usize);
        }
    }

    /// Seals `plaintext` to `to`'s whisper key and queues it.
    pub fn send_private(&mut self, from: Address, to: Address, plaintext: &[u8]) -> Result<(), ChannelError> {
        let key = self.whisper_keys.get(&to).ok_or(ChannelError::UnknownWhisperKey(to))?;
        let payload = seal(key, plaintext, &mut self.crypto_rng);
        self.enqueue(from, Some(to), PRIVATE, payload);
        Ok(())
    }

    pub fn broadcast(&mut self, from: Address, topic: Topic, payload: Vec<u8>) {
        self.enqueue(from, None, topic, payload);
    }

    /// Tick boundary: moves queued messages into inboxes ordered by
    /// (sender, sequence number).
    pub fn deliver(&mut self) {
        let mut batch = core::mem::take(&mut self.queued);
        batch.sort_by_key(|&i| (self.log[i].from, self.log[i].seq));
        for i in batch {
            let msg = &self.log[i];
            match msg.to {
                Some(to) => self.inboxes.entry(to).or_default().push(i),
                None => {
                    for (owner, topics) in &self.subscriptions {
                        if topics.contains(&msg.topic) {
                            self.inboxes.entry(*owner).or_default().push(i);
                        }
                    }
                }
            }
        }
        self.tick += 1;
    }

    /// Drains `owner`'s inbox.
    pub fn recv(&mut self, owner: &Address) -> Vec<ChannelMsg> {
        self.inboxes.remove(owner).unwrap_or_default().into_iter().map(|i| self.log[i].clone()).collect()
    }

    pub fn log(&self) -> &[ChannelMsg] {
        &self.log
    }

    pub fn into_log(self) -> Vec<ChannelMsg> {
        self.log
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::keypair_gen;

    fn bus(p: f64) -> MessageBus {
        MessageBus::new(p, SimRng::from_label(1, "faults"), SimRng::from_label(1, "crypto"))
    }

    #[test]
    fn private_round_trip() {
        let mut rng = SimRng::new(1);
        let (a, b, c) = (keypair_gen(&mut rng), keypair_gen(&mut rng), keypair_gen(&mut rng));
        let mut bus = bus(0.0);
        bus.register_whisper(b.address, b.pubkey);
        bus.send_private(a.address, b.address, b"hello").unwrap();
        assert_eq!(bus.send_private(a.address, c.address, b"x"), Err(ChannelError::UnknownWhisperKey(c.address)));
        assert!(bus.recv(&b.address).is_empty());
        bus.deliver();
        let got = bus.recv(&b.address);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].open(&b.privkey).unwrap(), b"hello");
        assert!(got[0].open(&a.privkey).is_err());
        assert!(bus.recv(&b.address).is_empty());
    }

    #[test]
    fn broadcast_reaches_subscribers_only() {
        let mut rng = SimRng::new(2);
        let (a, b, c) = (keypair_gen(&mut rng), keypair_gen(&mut rng), keypair_gen(&mut rng));
        let mut bus = bus(0.0);
        bus.subscribe(b.address, *b"onio");
        bus.subscribe(c.address, *b"othr");
        bus.broadcast(a.address, *b"onio", alloc::vec![1, 2, 3]);
        bus.deliver();
        assert_eq!(bus.recv(&b.address)[0].payload, [1, 2, 3]);
        assert!(bus.recv(&c.address).is_empty());
    }

    #[test]
    fn delivery_order_by_sender_then_seq() {
        let mut rng = SimRng::new(3);
        let mut ks: Vec<_> = (0..3).map(|_| keypair_gen(&mut rng)).collect();
        ks.sort_by_key(|k| k.address);
        let sink = keypair_gen(&mut rng);
        let mut bus = bus(0.0);
        bus.subscribe(sink.address, *b"t000");
        for (i, k) in ks.iter().enumerate().rev() {
            bus.broadcast(k.address, *b"t000", alloc::vec![i as u8, 0]);
            bus.broadcast(k.address, *b"t000", alloc::vec![i as u8, 1]);
        }
        bus.deliver();
        let got: Vec<_> = bus.recv(&sink.address).into_iter().map(|m| m.payload).collect();
        assert_eq!(got, [[0, 0], [0, 1], [1, 0], [1, 1], [2, 0], [2, 1]]);
    }

    #[test]
    fn faults_drop_messages() {
        let mut rng = SimRng::new(4);
        let (a, b) = (keypair_gen(&mut rng), keypair_gen(&mut rng));
        let mut bus = bus(0.0);
        bus.register_whisper(b.address, b.pubkey);
        bus.add_fault(Fault::DropTo(b.address));
        bus.send_private(a.address, b.address, b"lost").unwrap();
        bus.deliver();
        assert!(bus.recv(&b.address).is_empty());
        assert!(!bus.log()[0].delivered);

        let mut lossy = self::bus(0.5);
        lossy.register_whisper(b.address, b.pubkey);
        for _ in 0..400 {
            lossy.send_private(a.address, b.address, b"m").unwrap();
        }
        lossy.deliver();
        let n = lossy.recv(&b.address).len();
        assert!((140..260).contains(&n), "{n}");
    }
}
