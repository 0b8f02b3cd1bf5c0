//! Prime fields for Shamir sharing.

use core::fmt::Debug;

use k256::elliptic_curve::ff::{Field, PrimeField as _};
use k256::Scalar;
use rand_core::CryptoRngCore;

pub trait PrimeField: Copy + Eq + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(v: u64) -> Self;
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;
    /// `None` for zero.
    fn invert(self) -> Option<Self>;
    fn random(rng: &mut impl CryptoRngCore) -> Self;
    /// Number of elements, saturated to `u64::MAX` for large fields.
    fn order_u64() -> u64;
}

/// The secp256k1 group order field, `q = 2^256 - 432420386565659656852420866394968145599`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Fq(pub(crate) Scalar);

impl Fq {
    pub fn to_bytes(self) -> [u8; 32] {
        self.0.to_repr().into()
    }

    /// `None` when `bytes >= q`.
    pub fn from_canonical_bytes(bytes: [u8; 32]) -> Option<Self> {
        Option::from(Scalar::from_repr(bytes.into())).map(Fq)
    }
}

impl PrimeField for Fq {
    fn zero() -> Self {
        Fq(Scalar::ZERO)
    }
    fn one() -> Self {
        Fq(Scalar::ONE)
    }
    fn from_u64(v: u64) -> Self {
        Fq(Scalar::from(v))
    }
    fn add(self, rhs: Self) -> Self {
        Fq(self.0 + rhs.0)
    }
    fn sub(self, rhs: Self) -> Self {
        Fq(self.0 - rhs.0)
    }
    fn mul(self, rhs: Self) -> Self {
        Fq(self.0 * rhs.0)
    }
    fn invert(self) -> Option<Self> {
        Option::from(self.0.invert()).map(Fq)
    }
    fn random(rng: &mut impl CryptoRngCore) -> Self {
        Fq(Scalar::random(rng))
    }
    fn order_u64() -> u64 {
        u64::MAX
    }
}

/// `Z/pZ` for a small prime `p` (below 2^32). Used for hand-checkable oracles.
#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord)]
pub struct SmallField<const P: u64>(pub u64);

impl<const P: u64> SmallField<P> {
    pub fn new(v: u64) -> Self {
        Self(v % P)
    }

    fn pow(self, mut e: u64) -> Self {
        let mut base = self.0;
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % P;
            }
            base = base * base % P;
            e >>= 1;
        }
        Self(acc)
    }
}

impl<const P: u64> PrimeField for SmallField<P> {
    fn zero() -> Self {
        Self(0)
    }
    fn one() -> Self {
        Self(1 % P)
    }
    fn from_u64(v: u64) -> Self {
        Self(v % P)
    }
    fn add(self, rhs: Self) -> Self {
        Self((self.0 + rhs.0) % P)
    }
    fn sub(self, rhs: Self) -> Self {
        Self((self.0 + P - rhs.0) % P)
    }
    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0 % P)
    }
    fn invert(self) -> Option<Self> {
        // Fermat: a^(p-2)
        (self.0 != 0).then(|| self.pow(P - 2))
    }
    fn random(rng: &mut impl CryptoRngCore) -> Self {
        let zone = u64::MAX - u64::MAX % P;
        loop {
            let v = rng.next_u64();
            if v < zone {
                return Self(v % P);
            }
        }
    }
    fn order_u64() -> u64 {
        P
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type F257 = SmallField<257>;

    #[test]
    fn small_field_inverse_is_exhaustively_correct() {
        for a in 1..257 {
            let x = F257::new(a);
            assert_eq!(x.mul(x.invert().unwrap()), F257::one());
        }
        assert!(F257::zero().invert().is_none());
    }

    #[test]
    fn fq_canonical_bytes_round_trip() {
        let x = Fq::from_u64(123456789);
        assert_eq!(Fq::from_canonical_bytes(x.to_bytes()), Some(x));
        assert!(Fq::from_canonical_bytes([0xff; 32]).is_none());
    }
}
