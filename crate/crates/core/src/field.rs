//! Modular integer arithmetic over `Z_p` and `Z_{p-1}`.
//!
//! Exponents of every matrix power action live in `Z_{p-1}`: for a base `a`
//! coprime to `p`, Fermat gives `a^e = a^(e mod (p-1)) (mod p)`.

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Number of random Miller-Rabin rounds for moduli beyond the deterministic
/// base set. Each round errs with probability at most 1/4, so 32 rounds keep
/// the error below 2^-64.
const MILLER_RABIN_ROUNDS: usize = 32;

/// These bases are a deterministic primality test for every n < 3.3 * 10^24.
const SMALL_PRIME_BASES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// The prime modulus shared by both parties, plus the derived exponent modulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldParams {
    p: BigUint,
    exp_modulus: BigUint,
}

impl FieldParams {
    pub fn new(p: BigUint) -> Result<Self> {
        if p < BigUint::from(3u32) {
            return Err(Error::param(format!("modulus {p} must be at least 3")));
        }
        if !is_probable_prime(&p) {
            return Err(Error::param(format!("modulus {p} is not prime")));
        }
        let exp_modulus = &p - 1u32;
        Ok(Self { p, exp_modulus })
    }

    pub fn from_u64(p: u64) -> Result<Self> {
        Self::new(BigUint::from(p))
    }

    /// The prime `p`.
    pub fn p(&self) -> &BigUint {
        &self.p
    }

    /// `p - 1`, the modulus of every exponent matrix.
    pub fn exp_modulus(&self) -> &BigUint {
        &self.exp_modulus
    }
}

/// `base^exp mod m` by left-to-right square-and-multiply.
///
/// `0^0` is 1; the base is reduced modulo `m` first.
pub fn mod_pow(base: &BigUint, exp: &BigUint, m: &BigUint) -> Result<BigUint> {
    if *m < BigUint::from(2u32) {
        return Err(Error::param(format!("modulus {m} must be at least 2")));
    }
    let base = base % m;
    let mut acc = BigUint::one();
    for i in (0..exp.bits()).rev() {
        acc = &acc * &acc % m;
        if exp.bit(i) {
            acc = acc * &base % m;
        }
    }
    Ok(acc)
}

/// Single-word square-and-multiply. `m` must be at least 1.
pub(crate) fn mod_pow_u64(base: u64, mut exp: u64, m: u64) -> u64 {
    let m128 = m as u128;
    let mut b = (base % m) as u128;
    let mut acc: u128 = 1 % m128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

pub(crate) fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Modular inverse modulo a prime, via Fermat.
pub(crate) fn inverse_mod_prime(a: &BigUint, p: &BigUint) -> Option<BigUint> {
    if (a % p).is_zero() {
        return None;
    }
    mod_pow(a, &(p - 2u32), p).ok()
}

/// Miller-Rabin primality test with error probability below 2^-64.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &q in &SMALL_PRIME_BASES {
        let q = BigUint::from(q);
        if *n == q {
            return true;
        }
        if (n % &q).is_zero() {
            return false;
        }
    }

    let n_minus_one = n - 1u32;
    let shift = n_minus_one.trailing_zeros().unwrap_or(0);
    let odd = &n_minus_one >> shift;

    let is_witness = |a: &BigUint| -> bool {
        let mut x = a.modpow(&odd, n);
        if x.is_one() || x == n_minus_one {
            return false;
        }
        for _ in 1..shift {
            x = &x * &x % n;
            if x == n_minus_one {
                return false;
            }
        }
        true
    };

    if SMALL_PRIME_BASES
        .iter()
        .any(|&a| is_witness(&BigUint::from(a)))
    {
        return false;
    }
    // Below ~3.3e24 the fixed bases are already conclusive.
    if n.bits() <= 81 {
        return true;
    }

    // Bases are derived from n itself so the answer is reproducible.
    let mut seed = [0u8; 32];
    for (dst, src) in seed.iter_mut().zip(n.to_bytes_le()) {
        *dst = src;
    }
    let mut rng = ChaCha20Rng::from_seed(seed);
    let upper = n - 1u32;
    (0..MILLER_RABIN_ROUNDS).all(|_| !is_witness(&rng.gen_biguint_range(&two, &upper)))
}

/// A uniformly random prime with exactly `bits` bits (top bit set).
pub fn random_prime<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> Result<BigUint> {
    if bits < 2 {
        return Err(Error::param("a prime needs at least 2 bits"));
    }
    loop {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        if bits > 2 {
            candidate.set_bit(0, true);
        }
        if candidate >= BigUint::from(3u32) && is_probable_prime(&candidate) {
            return Ok(candidate);
        }
    }
}

/// Uniform integer in `[low, high)`.
pub(crate) fn uniform_range<R: Rng + ?Sized>(rng: &mut R, low: &BigUint, high: &BigUint) -> BigUint {
    match (low.to_u64(), high.to_u64()) {
        (Some(lo), Some(hi)) => BigUint::from(rng.gen_range(lo..hi)),
        _ => rng.gen_biguint_range(low, high),
    }
}

/// Reduce a signed integer into `[0, m)`.
pub fn reduce_signed(value: i64, m: &BigUint) -> BigUint {
    let magnitude = BigUint::from(value.unsigned_abs()) % m;
    if value >= 0 || magnitude.is_zero() {
        magnitude
    } else {
        m - magnitude
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn mod_pow_examples() {
        assert_eq!(mod_pow(&big(5), &big(0), &big(7)).unwrap(), big(1));
        assert_eq!(mod_pow(&big(3), &big(4), &big(7)).unwrap(), big(4));
        assert_eq!(mod_pow(&big(44664), &big(1), &big(65537)).unwrap(), big(44664));
    }

    #[test]
    fn mod_pow_zero_base() {
        assert_eq!(mod_pow(&big(0), &big(0), &big(7)).unwrap(), big(1));
        assert_eq!(mod_pow(&big(0), &big(5), &big(7)).unwrap(), big(0));
        assert_eq!(mod_pow_u64(0, 0, 7), 1);
        assert_eq!(mod_pow_u64(0, 3, 7), 0);
    }

    #[test]
    fn mod_pow_rejects_tiny_modulus() {
        assert!(matches!(
            mod_pow(&big(0), &big(1), &big(1)),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn primality() {
        let primes = [2u64, 3, 7, 997, 4973, 65537, 18446744073709551557];
        for p in primes {
            assert!(is_probable_prime(&big(p)), "{p}");
        }
        let composites = [0u64, 1, 4, 65535, 3215031751, 18446744073709551615];
        for c in composites {
            assert!(!is_probable_prime(&big(c)), "{c}");
        }
        // 2^89 - 1 and 2^127 - 1 are Mersenne primes; 2^101 - 1 is not.
        let mersenne = |e: u32| (BigUint::one() << e) - 1u32;
        assert!(is_probable_prime(&mersenne(89)));
        assert!(is_probable_prime(&mersenne(127)));
        assert!(!is_probable_prime(&mersenne(101)));
    }

    #[test]
    fn field_params_validation() {
        assert!(FieldParams::from_u64(65537).is_ok());
        assert_eq!(FieldParams::from_u64(7).unwrap().exp_modulus(), &big(6));
        assert!(FieldParams::from_u64(2).is_err());
        assert!(FieldParams::from_u64(65536).is_err());
    }

    #[test]
    fn random_prime_has_requested_width() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let p = random_prime(64, &mut rng).unwrap();
        assert_eq!(p.bits(), 64);
        assert!(is_probable_prime(&p));
    }

    #[test]
    fn signed_reduction() {
        assert_eq!(reduce_signed(-1, &big(6)), big(5));
        assert_eq!(reduce_signed(-12, &big(6)), big(0));
        assert_eq!(reduce_signed(13, &big(6)), big(1));
    }

    proptest! {
        #[test]
        fn square_and_multiply_matches_library(b in any::<u64>(), e in any::<u64>(), m in 2u64..) {
            let expected = big(b).modpow(&big(e), &big(m));
            prop_assert_eq!(mod_pow(&big(b), &big(e), &big(m)).unwrap(), expected.clone());
            prop_assert_eq!(big(mod_pow_u64(b, e, m)), expected);
        }

        #[test]
        fn fermat_exponent_reduction(a in 1u64..7, e in any::<u64>()) {
            let p = big(7);
            prop_assert_eq!(
                mod_pow(&big(a), &big(e), &p).unwrap(),
                mod_pow(&big(a), &big(e % 6), &p).unwrap()
            );
        }

        #[test]
        fn fermat_exponent_reduction_65537(a in 1u64..65537, e in any::<u64>()) {
            let p = big(65537);
            prop_assert_eq!(
                mod_pow(&big(a), &big(e), &p).unwrap(),
                mod_pow(&big(a), &big(e % 65536), &p).unwrap()
            );
        }
    }
}
