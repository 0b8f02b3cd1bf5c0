//! Cryptographic primitives: Keccak-256, recoverable ECDSA signatures with
//! 20-byte addresses, authenticated symmetric and public-key encryption,
//! Shamir threshold sharing and onion wrapping of shares.

mod ecies;
pub mod field;
mod hash;
mod keys;
pub mod onion;
pub mod shamir;
mod symmetric;

pub use ecies::{open, seal, SEAL_OVERHEAD};
pub use hash::{hash256, Digest256, Hasher};
pub use keys::{keypair_gen, pubkey_of, recover_signer, sign, Address, KeyPair, PrivateKey, PublicKey, Signature};
pub use onion::{onion_peel, onion_wrap, LayerKey, Onion};
pub use shamir::{ss_restore, ss_split, KeyShare};
pub use symmetric::{sym_decrypt, sym_encrypt, SecretKey256};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("signature verification failed")]
    VerificationFailed,
    #[error("authentication failed")]
    Authentication,
    #[error("invalid parameters: {0}")]
    InvalidParameters(&'static str),
    #[error("insufficient shares: have {have}, need {need}")]
    InsufficientShares { have: usize, need: usize },
    #[error("duplicate share index {0}")]
    DuplicateIndex(u32),
    #[error("invalid key material")]
    InvalidKey,
    #[error("malformed encoding")]
    Malformed,
    #[error("onion has no layers left")]
    OnionExhausted,
}

/// Fixed-size byte newtype rendered as `0x`-prefixed hex in serde formats.
macro_rules! hex_bytes {
    ($(#[$m:meta])* $name:ident, $len:expr) => {
        $(#[$m])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub [u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn to_hex(&self) -> alloc::string::String {
                let mut s = alloc::string::String::from("0x");
                s.push_str(&hex::encode(self.0));
                s
            }

            pub fn from_hex(s: &str) -> Result<Self, $crate::crypto::CryptoError> {
                let s = s.strip_prefix("0x").unwrap_or(s);
                let mut out = [0u8; $len];
                hex::decode_to_slice(s, &mut out)
                    .map_err(|_| $crate::crypto::CryptoError::Malformed)?;
                Ok(Self(out))
            }
        }

        impl core::fmt::Debug for $name {
            fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
                write!(f, "{}({})", stringify!($name), self.to_hex())
            }
        }

        impl core::fmt::Display for $name {
            fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
                f.write_str(&self.to_hex())
            }
        }

        impl serde::Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                if s.is_human_readable() {
                    s.serialize_str(&self.to_hex())
                } else {
                    s.serialize_bytes(&self.0)
                }
            }
        }

        impl<'de> serde::Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                struct V;
                impl<'de> serde::de::Visitor<'de> for V {
                    type Value = $name;
                    fn expecting(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
                        write!(f, "{} bytes", $len)
                    }
                    fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<$name, E> {
                        $name::from_hex(v).map_err(|_| E::custom("bad hex"))
                    }
                    fn visit_bytes<E: serde::de::Error>(self, v: &[u8]) -> Result<$name, E> {
                        let arr: [u8; $len] = v.try_into().map_err(|_| E::custom("bad length"))?;
                        Ok($name(arr))
                    }
                }
                if d.is_human_readable() {
                    d.deserialize_str(V)
                } else {
                    d.deserialize_bytes(V)
                }
            }
        }
    };
}
pub(crate) use hex_bytes;
