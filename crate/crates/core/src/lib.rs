//! Deterministic simulation kernel for timed information delivery over smart
//! contracts.
//!
//! A sender splits a decryption key into Shamir shares, wraps every share in
//! `l` layers of public-key encryption under per-time-frame keys registered by
//! mailmen, and recruits those mailmen off-chain with a signed three-way
//! handshake so that no recruitment relationship is visible on chain before
//! the delivery time-frame. Delivery runs a dual-mode epoch machine: a cheap
//! lightweight path whose on-chain cost does not depend on the number of
//! mailmen, and a heavyweight path, entered by deploying a supplementary
//! contract, that enforces reveals and slashes deposits on chain.
//!
//! Everything here is `no_std` + `alloc`. IO, configuration files and the
//! command line live in the companion `tids` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod actors;
pub mod adversary;
pub mod analysis;
pub mod channels;
pub mod contracts;
pub mod crypto;
pub mod ledger;
pub mod rng;

pub use crypto::{Address, Digest256};
pub use ledger::{Amount, Epoch, TimeFrame};
