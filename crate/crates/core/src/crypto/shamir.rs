//! Shamir `(t, n)` threshold sharing over a prime field.
//!
//! Shares are evaluations of a random degree `t - 1` polynomial whose
//! constant term is the secret, at the points `x = 1..=n`. Restoration is
//! Lagrange interpolation at zero over exactly `t` shares.

use alloc::vec::Vec;
use k256::elliptic_curve::bigint::{Encoding, U256};
use k256::elliptic_curve::Curve;
use k256::Secp256k1;
use rand_core::CryptoRngCore;
use serde::{Deserialize, Serialize};

use super::field::{Fq, PrimeField};
use super::{CryptoError, SecretKey256};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Share<F> {
    pub index: u32,
    pub value: F,
}

fn check_params<F: PrimeField>(t: usize, n: usize) -> Result<(), CryptoError> {
    if t == 0 || t > n {
        return Err(CryptoError::InvalidParameters("threshold must satisfy 1 <= t <= n"));
    }
    if n as u64 >= F::order_u64() || n > u32::MAX as usize {
        return Err(CryptoError::InvalidParameters("share count must be below the field size"));
    }
    Ok(())
}

/// Evaluate `secret + c_1 x + ... + c_{t-1} x^{t-1}` at `x = 1..=n`.
pub fn split_with_coefficients<F: PrimeField>(
    secret: F,
    coefficients: &[F],
    n: usize,
) -> Result<Vec<Share<F>>, CryptoError> {
    check_params::<F>(coefficients.len() + 1, n)?;
    Ok((1..=n as u32)
        .map(|index| {
            let x = F::from_u64(index as u64);
            // Horner from the top coefficient down to the secret.
            let value = coefficients.iter().rev().fold(F::zero(), |acc, c| acc.mul(x).add(*c)).mul(x).add(secret);
            Share { index, value }
        })
        .collect())
}

pub fn split<F: PrimeField>(
    secret: F,
    t: usize,
    n: usize,
    rng: &mut impl CryptoRngCore,
) -> Result<Vec<Share<F>>, CryptoError> {
    check_params::<F>(t, n)?;
    let coefficients: Vec<F> = (1..t).map(|_| F::random(rng)).collect();
    split_with_coefficients(secret, &coefficients, n)
}

/// Lagrange interpolation at zero over all given shares. Performs no
/// threshold check; with fewer than `t` shares the result is unrelated to
/// the secret.
pub fn interpolate_at_zero<F: PrimeField>(shares: &[Share<F>]) -> Result<F, CryptoError> {
    check_distinct(shares.iter().map(|s| s.index))?;
    let mut acc = F::zero();
    for (j, sj) in shares.iter().enumerate() {
        let xj = F::from_u64(sj.index as u64);
        let mut num = F::one();
        let mut den = F::one();
        for (m, sm) in shares.iter().enumerate() {
            if m == j {
                continue;
            }
            let xm = F::from_u64(sm.index as u64);
            num = num.mul(xm);
            den = den.mul(xm.sub(xj));
        }
        let inv = den.invert().ok_or(CryptoError::InvalidParameters("zero share index"))?;
        acc = acc.add(sj.value.mul(num).mul(inv));
    }
    Ok(acc)
}

pub fn restore<F: PrimeField>(shares: &[Share<F>], t: usize) -> Result<F, CryptoError> {
    if t == 0 {
        return Err(CryptoError::InvalidParameters("threshold must be positive"));
    }
    check_distinct(shares.iter().map(|s| s.index))?;
    if shares.len() < t {
        return Err(CryptoError::InsufficientShares { have: shares.len(), need: t });
    }
    if shares.iter().any(|s| s.index == 0) {
        return Err(CryptoError::InvalidParameters("share index 0 is reserved"));
    }
    interpolate_at_zero(&shares[..t])
}

fn check_distinct(indices: impl Iterator<Item = u32>) -> Result<(), CryptoError> {
    let mut seen = alloc::collections::BTreeSet::new();
    for i in indices {
        if !seen.insert(i) {
            return Err(CryptoError::DuplicateIndex(i));
        }
    }
    Ok(())
}

/// A share of a 256-bit key over the secp256k1 order field. `carry` records
/// whether the key was `>= q` before reduction, so the exact 256-bit value
/// comes back on restore.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyShare {
    pub index: u32,
    pub value: [u8; 32],
    pub carry: bool,
}

impl KeyShare {
    pub const ENCODED_LEN: usize = 4 + 32 + 1;

    pub fn encode(&self) -> [u8; Self::ENCODED_LEN] {
        let mut out = [0u8; Self::ENCODED_LEN];
        out[..4].copy_from_slice(&self.index.to_be_bytes());
        out[4..36].copy_from_slice(&self.value);
        out[36] = self.carry as u8;
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != Self::ENCODED_LEN || bytes[36] > 1 {
            return Err(CryptoError::Malformed);
        }
        let mut value = [0u8; 32];
        value.copy_from_slice(&bytes[4..36]);
        Fq::from_canonical_bytes(value).ok_or(CryptoError::Malformed)?;
        Ok(Self { index: u32::from_be_bytes(bytes[..4].try_into().unwrap()), value, carry: bytes[36] == 1 })
    }

    fn field_share(&self) -> Result<Share<Fq>, CryptoError> {
        let value = Fq::from_canonical_bytes(self.value).ok_or(CryptoError::Malformed)?;
        Ok(Share { index: self.index, value })
    }
}

fn reduce_key(key: &SecretKey256) -> (Fq, bool) {
    match Fq::from_canonical_bytes(key.0) {
        Some(f) => (f, false),
        None => {
            let reduced = U256::from_be_bytes(key.0).wrapping_sub(&Secp256k1::ORDER);
            let f =
                Fq::from_canonical_bytes(reduced.to_be_bytes()).expect("key - q is below q for every 256-bit key >= q");
            (f, true)
        }
    }
}

pub fn ss_split(
    key: &SecretKey256,
    t: usize,
    n: usize,
    rng: &mut impl CryptoRngCore,
) -> Result<Vec<KeyShare>, CryptoError> {
    let (secret, carry) = reduce_key(key);
    Ok(split(secret, t, n, rng)?
        .into_iter()
        .map(|s| KeyShare { index: s.index, value: s.value.to_bytes(), carry })
        .collect())
}

pub fn ss_restore(shares: &[KeyShare], t: usize) -> Result<SecretKey256, CryptoError> {
    let field: Vec<Share<Fq>> = shares.iter().map(KeyShare::field_share).collect::<Result<_, _>>()?;
    let secret = restore(&field, t)?;
    let carry = shares[..t].iter().filter(|s| s.carry).count() * 2 > t;
    let mut bytes = secret.to_bytes();
    if carry {
        bytes = U256::from_be_bytes(bytes).wrapping_add(&Secp256k1::ORDER).to_be_bytes();
    }
    Ok(SecretKey256(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::field::SmallField;
    use crate::rng::SimRng;

    type F257 = SmallField<257>;

    /// Brute-force oracle: evaluate the polynomial term by term with plain
    /// integer arithmetic mod 257.
    fn eval_mod_257(coeffs_low_to_high: &[u64], x: u64) -> u64 {
        let mut acc = 0u64;
        let mut xp = 1u64;
        for c in coeffs_low_to_high {
            acc = (acc + c * xp) % 257;
            xp = xp * x % 257;
        }
        acc
    }

    #[test]
    fn pinned_small_field_split_matches_hand_evaluation() {
        // key = 42, t = 2, n = 3, f(x) = 42 + 17x
        let shares = split_with_coefficients(F257::new(42), &[F257::new(17)], 3).unwrap();
        let expect: Vec<u64> = (1..=3).map(|x| eval_mod_257(&[42, 17], x)).collect();
        assert_eq!(expect, [59, 76, 93]);
        assert_eq!(shares.iter().map(|s| s.value.0).collect::<Vec<_>>(), expect);
        // Lagrange by hand on shares 2 and 3: f(0) = 76*3/(3-2) + 93*2/(2-3)
        let by_hand = (76 * 3 + (257 - 93 * 2)) % 257;
        assert_eq!(by_hand, 42);
        assert_eq!(restore(&shares[1..], 2).unwrap(), F257::new(42));
    }

    #[test]
    fn degree_zero_polynomial_copies_the_key() {
        let mut rng = SimRng::new(1);
        let key = SecretKey256([7u8; 32]);
        let shares = ss_split(&key, 1, 3, &mut rng).unwrap();
        assert!(shares.iter().all(|s| s.value == key.0));
        assert_eq!(ss_restore(&shares[2..], 1).unwrap(), key);
    }

    #[test]
    fn every_subset_restores_on_the_small_field() {
        let mut rng = SimRng::new(2);
        for n in 1..=6usize {
            for t in 1..=n {
                let secret = F257::random(&mut rng);
                let shares = split(secret, t, n, &mut rng).unwrap();
                for mask in 1u32..(1 << n) {
                    let subset: Vec<_> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| shares[i]).collect();
                    if subset.len() >= t {
                        assert_eq!(restore(&subset, t).unwrap(), secret, "t={t} n={n} mask={mask:b}");
                    } else {
                        assert_eq!(
                            restore(&subset, t),
                            Err(CryptoError::InsufficientShares { have: subset.len(), need: t })
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn four_of_five_never_reveal_a_five_threshold_secret() {
        let mut rng = SimRng::new(3);
        let key = SecretKey256::random(&mut rng);
        let shares = ss_split(&key, 5, 5, &mut rng).unwrap();
        let (secret, _) = reduce_key(&key);
        for skip in 0..5 {
            let four: Vec<Share<Fq>> =
                shares.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, s)| s.field_share().unwrap()).collect();
            assert_ne!(interpolate_at_zero(&four).unwrap(), secret);
            assert!(matches!(restore(&four, 5), Err(CryptoError::InsufficientShares { .. })));
        }
    }

    #[test]
    fn keys_above_the_field_order_round_trip_exactly() {
        let mut rng = SimRng::new(4);
        let key = SecretKey256([0xff; 32]);
        let shares = ss_split(&key, 3, 5, &mut rng).unwrap();
        assert!(shares[0].carry);
        assert_eq!(ss_restore(&shares[1..4], 3).unwrap(), key);
    }

    #[test]
    fn parameter_and_index_errors() {
        let mut rng = SimRng::new(5);
        let key = SecretKey256([1; 32]);
        assert!(matches!(ss_split(&key, 5, 4, &mut rng), Err(CryptoError::InvalidParameters(_))));
        assert!(matches!(ss_split(&key, 0, 4, &mut rng), Err(CryptoError::InvalidParameters(_))));
        assert!(matches!(split(F257::one(), 2, 257, &mut rng), Err(CryptoError::InvalidParameters(_))));
        let s = ss_split(&key, 2, 3, &mut rng).unwrap();
        assert_eq!(ss_restore(&[s[0], s[0]], 2), Err(CryptoError::DuplicateIndex(1)));
        assert_eq!(KeyShare::decode(&s[1].encode()).unwrap(), s[1]);
    }
}
