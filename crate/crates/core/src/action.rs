//! The matrix power function actions.
//!
//! Each action raises entries of a value matrix over `Z_p` to exponents drawn
//! from exponent matrices over `Z_{p-1}` and multiplies the powers together.
//! When `p` fits in a machine word the products run on `u128` intermediates;
//! otherwise they fall back to arbitrary precision. Both paths are exact.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::field::{mod_pow, mod_pow_u64, mul_mod_u64};
use crate::matrix::Matrix;

/// Checks that `exponents` is an exponent matrix for the value matrix `base`.
fn check_exponent_ring(exponents: &Matrix, base: &Matrix) -> Result<()> {
    if exponents.modulus() + 1u32 != *base.modulus() {
        return Err(Error::param(format!(
            "exponent matrix modulus {} does not match value modulus {} - 1",
            exponents.modulus(),
            base.modulus()
        )));
    }
    Ok(())
}

fn check_bound(bound: usize, limit: usize) -> Result<()> {
    if bound == 0 || bound > limit {
        return Err(Error::param(format!("index bound {bound} outside 1..={limit}")));
    }
    Ok(())
}

fn words(m: &Matrix) -> Option<Vec<u64>> {
    m.entries().iter().map(ToPrimitive::to_u64).collect()
}

/// Left action: `c_ij = prod_{k<bound} w_kj ^ x_ik (mod p)`.
pub fn mpf_left(x: &Matrix, w: &Matrix, bound: usize) -> Result<Matrix> {
    check_exponent_ring(x, w)?;
    check_bound(bound, x.cols().min(w.rows()))?;
    let p = w.modulus();
    let mut entries = Vec::with_capacity(x.rows() * w.cols());
    for i in 0..x.rows() {
        for j in 0..w.cols() {
            let mut acc = BigUint::one();
            for k in 0..bound {
                acc = acc * mod_pow(w.get(k, j), x.get(i, k), p)? % p;
            }
            entries.push(acc);
        }
    }
    Matrix::new(x.rows(), w.cols(), entries, p.clone())
}

/// Right action: `d_ij = prod_{l<bound} w_il ^ y_lj (mod p)`.
pub fn mpf_right(w: &Matrix, y: &Matrix, bound: usize) -> Result<Matrix> {
    check_exponent_ring(y, w)?;
    check_bound(bound, y.rows().min(w.cols()))?;
    let p = w.modulus();
    let mut entries = Vec::with_capacity(w.rows() * y.cols());
    for i in 0..w.rows() {
        for j in 0..y.cols() {
            let mut acc = BigUint::one();
            for l in 0..bound {
                acc = acc * mod_pow(w.get(i, l), y.get(l, j), p)? % p;
            }
            entries.push(acc);
        }
    }
    Matrix::new(w.rows(), y.cols(), entries, p.clone())
}

/// Double-sided action with an exponent scale:
/// `q_ij = prod_{k<bound} prod_{l<bound} w_kl ^ (sigma * x_ik * y_lj mod (p-1)) (mod p)`.
///
/// The output has `x.rows()` rows and `y.cols()` columns.
pub(crate) fn double_action(
    x: &Matrix,
    w: &Matrix,
    y: &Matrix,
    sigma: &BigUint,
    bound: usize,
) -> Result<Matrix> {
    check_exponent_ring(x, w)?;
    check_exponent_ring(y, w)?;
    check_bound(bound, x.cols().min(y.rows()).min(w.rows()).min(w.cols()))?;
    let p = w.modulus();
    let q = x.modulus();
    let (rows, cols) = (x.rows(), y.cols());

    if let (Some(p64), Some(q64), Some(s64), Some(xw), Some(ww), Some(yw)) = (
        p.to_u64(),
        q.to_u64(),
        (sigma % q).to_u64(),
        words(x),
        words(w),
        words(y),
    ) {
        let (xc, wc, yc) = (x.cols(), w.cols(), y.cols());
        let mut out = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            let scaled: Vec<u64> = (0..bound).map(|k| mul_mod_u64(s64, xw[i * xc + k], q64)).collect();
            for j in 0..cols {
                let mut acc: u64 = 1 % p64;
                for (k, &sx) in scaled.iter().enumerate() {
                    for l in 0..bound {
                        let e = mul_mod_u64(sx, yw[l * yc + j], q64);
                        acc = mul_mod_u64(acc, mod_pow_u64(ww[k * wc + l], e, p64), p64);
                    }
                }
                out.push(BigUint::from(acc));
            }
        }
        return Ok(Matrix::from_parts_unchecked(rows, cols, out, p.clone()));
    }

    let sigma = sigma % q;
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let scaled: Vec<BigUint> = (0..bound).map(|k| &sigma * x.get(i, k) % q).collect();
        for j in 0..cols {
            let mut acc = BigUint::one();
            for (k, sx) in scaled.iter().enumerate() {
                for l in 0..bound {
                    let e = sx * y.get(l, j) % q;
                    acc = acc * mod_pow(w.get(k, l), &e, p)? % p;
                }
            }
            out.push(acc);
        }
    }
    Ok(Matrix::from_parts_unchecked(rows, cols, out, p.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn left_examples() {
        let (p, q) = (big(7), big(6));
        let w = Matrix::from_rows(&[[2u64, 3], [4, 5]], &p).unwrap();
        let zero = Matrix::zeros(2, 2, &q).unwrap();
        assert_eq!(
            mpf_left(&zero, &w, 2).unwrap(),
            Matrix::from_rows(&[[1u64, 1], [1, 1]], &p).unwrap()
        );
        let id = Matrix::identity(2, &q).unwrap();
        assert_eq!(mpf_left(&id, &w, 2).unwrap(), w);
        // c_11 = 2*4 = 1, c_12 = 3*5 = 1, c_21 = 2^2 = 4, c_22 = 3^2 = 2 (mod 7)
        let x = Matrix::from_rows(&[[1u64, 1], [2, 0]], &q).unwrap();
        assert_eq!(
            mpf_left(&x, &w, 2).unwrap(),
            Matrix::from_rows(&[[1u64, 1], [4, 2]], &p).unwrap()
        );
    }

    #[test]
    fn right_examples() {
        let (p, q) = (big(7), big(6));
        let w = Matrix::from_rows(&[[2u64, 3], [4, 5]], &p).unwrap();
        let zero = Matrix::zeros(2, 2, &q).unwrap();
        assert_eq!(
            mpf_right(&w, &zero, 2).unwrap(),
            Matrix::from_rows(&[[1u64, 1], [1, 1]], &p).unwrap()
        );
        let id = Matrix::identity(2, &q).unwrap();
        assert_eq!(mpf_right(&w, &id, 2).unwrap(), w);
    }

    #[test]
    fn ring_mismatch_is_rejected() {
        let p = big(7);
        let w = Matrix::from_rows(&[[2u64, 3], [4, 5]], &p).unwrap();
        let wrong = Matrix::identity(2, &p).unwrap();
        assert!(matches!(mpf_left(&wrong, &w, 2), Err(Error::Parameter(_))));
        let q = big(6);
        let id = Matrix::identity(2, &q).unwrap();
        assert!(matches!(mpf_left(&id, &w, 3), Err(Error::Parameter(_))));
        assert!(matches!(double_action(&id, &w, &id, &big(1), 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn word_and_bignum_paths_agree() {
        // p = 2^61 - 1 fits a word; the same integers checked through mod_pow directly
        let p = (BigUint::one() << 61u32) - 1u32;
        let q = &p - 1u32;
        let w = Matrix::from_entries_reduced(2, 2, [big(3), big(1 << 40), big(99991), big(7)], &p).unwrap();
        let x = Matrix::from_entries_reduced(2, 2, [big(u64::MAX), big(12), big(5), big(1 << 59)], &q).unwrap();
        let y = Matrix::from_entries_reduced(2, 2, [big(17), big(1 << 50), big(3), big(8)], &q).unwrap();
        let fast = double_action(&x, &w, &y, &big(5), 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = BigUint::one();
                for k in 0..2 {
                    for l in 0..2 {
                        let e = big(5) * x.get(i, k) * y.get(l, j) % &q;
                        acc = acc * w.get(k, l).modpow(&e, &p) % &p;
                    }
                }
                assert_eq!(fast.get(i, j), &acc);
            }
        }
    }
}
