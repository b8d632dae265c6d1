//! Dense integer matrices whose entries live in a fixed residue ring.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::field::inverse_mod_prime;

/// Row-major matrix over `Z_modulus`.
///
/// Value matrices (bases, tokens, keys) carry `p`; exponent matrices carry
/// `p - 1`.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigUint>,
    modulus: BigUint,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigUint>, modulus: BigUint) -> Result<Self> {
        if modulus < BigUint::from(2u32) {
            return Err(Error::param(format!("matrix modulus {modulus} must be at least 2")));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::param("matrix dimensions must be positive"));
        }
        if entries.len() != rows * cols {
            return Err(Error::param(format!(
                "{} entries do not fill a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|e| **e >= modulus) {
            return Err(Error::param(format!("entry {bad} is not reduced modulo {modulus}")));
        }
        Ok(Self {
            rows,
            cols,
            entries,
            modulus,
        })
    }

    /// Builds a matrix from small row literals.
    pub fn from_rows<R: AsRef<[u64]>>(rows: &[R], modulus: &BigUint) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(Error::param("ragged row lengths"));
        }
        let entries = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied().map(BigUint::from))
            .collect();
        Self::new(rows.len(), cols, entries, modulus.clone())
    }

    /// Reduces arbitrary entries modulo `modulus` instead of rejecting them.
    pub fn from_entries_reduced(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = BigUint>,
        modulus: &BigUint,
    ) -> Result<Self> {
        let entries = entries.into_iter().map(|e| e % modulus).collect();
        Self::new(rows, cols, entries, modulus.clone())
    }

    pub fn identity(n: usize, modulus: &BigUint) -> Result<Self> {
        let entries = (0..n * n)
            .map(|idx| {
                if idx / n == idx % n {
                    BigUint::one()
                } else {
                    BigUint::zero()
                }
            })
            .collect();
        Self::new(n, n, entries, modulus.clone())
    }

    pub fn zeros(rows: usize, cols: usize, modulus: &BigUint) -> Result<Self> {
        Self::new(rows, cols, vec![BigUint::zero(); rows * cols], modulus.clone())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> &[BigUint] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<BigUint> {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> &BigUint {
        &self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[BigUint] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    pub fn contains_zero(&self) -> bool {
        self.entries.iter().any(Zero::is_zero)
    }

    pub fn transpose(&self) -> Matrix {
        let entries = (0..self.cols)
            .flat_map(|j| (0..self.rows).map(move |i| (i, j)))
            .map(|(i, j)| self.get(i, j).clone())
            .collect();
        Matrix {
            rows: self.cols,
            cols: self.rows,
            entries,
            modulus: self.modulus.clone(),
        }
    }

    /// The same integers reinterpreted (and reduced) in another ring.
    pub fn with_modulus(&self, modulus: &BigUint) -> Result<Matrix> {
        Self::from_entries_reduced(self.rows, self.cols, self.entries.iter().cloned(), modulus)
    }

    /// Entries as `u64`, or `None` if any entry is wider.
    pub fn to_u64_rows(&self) -> Option<Vec<Vec<u64>>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(ToPrimitive::to_u64).collect())
            .collect()
    }

    pub(crate) fn from_parts_unchecked(
        rows: usize,
        cols: usize,
        entries: Vec<BigUint>,
        modulus: BigUint,
    ) -> Matrix {
        debug_assert_eq!(entries.len(), rows * cols);
        Matrix {
            rows,
            cols,
            entries,
            modulus,
        }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix[{}x{} mod {}]", self.rows, self.cols, self.modulus)?;
        f.debug_list()
            .entries((0..self.rows).map(|i| {
                self.row(i)
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(" ")
            }))
            .finish()
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(ToString::to_string).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

fn check_modulus(m: &BigUint) -> Result<()> {
    if *m < BigUint::from(2u32) {
        Err(Error::param(format!("modulus {m} must be at least 2")))
    } else {
        Ok(())
    }
}

/// `(s * M) mod m`, entry-wise.
pub fn mat_scalar_mul_mod(s: &BigUint, matrix: &Matrix, m: &BigUint) -> Result<Matrix> {
    check_modulus(m)?;
    let s = s % m;
    let entries = matrix.entries.iter().map(|e| &s * e % m).collect();
    Ok(Matrix::from_parts_unchecked(matrix.rows, matrix.cols, entries, m.clone()))
}

/// Ordinary matrix product reduced modulo `m`.
pub fn mat_mul_mod(a: &Matrix, b: &Matrix, m: &BigUint) -> Result<Matrix> {
    check_modulus(m)?;
    if a.cols != b.rows {
        return Err(Error::param(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut entries = Vec::with_capacity(a.rows * b.cols);
    for i in 0..a.rows {
        for j in 0..b.cols {
            let sum: BigUint = (0..a.cols).map(|k| a.get(i, k) * b.get(k, j)).sum();
            entries.push(sum % m);
        }
    }
    Ok(Matrix::from_parts_unchecked(a.rows, b.cols, entries, m.clone()))
}

/// `M^e mod m` by square-and-multiply; `e = 0` gives the identity.
pub fn mat_pow_mod(matrix: &Matrix, e: &BigUint, m: &BigUint) -> Result<Matrix> {
    check_modulus(m)?;
    if !matrix.is_square() {
        return Err(Error::param(format!(
            "matrix power needs a square matrix, got {}x{}",
            matrix.rows, matrix.cols
        )));
    }
    let base = matrix.with_modulus(m)?;
    let mut acc = Matrix::identity(matrix.rows, m)?;
    for i in (0..e.bits()).rev() {
        acc = mat_mul_mod(&acc, &acc, m)?;
        if e.bit(i) {
            acc = mat_mul_mod(&acc, &base, m)?;
        }
    }
    Ok(acc)
}

/// Rank over `Z_p` together with every pair of identical rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankProfile {
    pub rank: usize,
    pub duplicate_row_pairs: Vec<(usize, usize)>,
}

/// Gaussian elimination over the prime field `Z_p`.
///
/// Entries are reduced modulo `p` first, so exponent matrices can be probed too.
pub fn rank_mod_p(matrix: &Matrix, p: &BigUint) -> Result<RankProfile> {
    check_modulus(p)?;
    let mut rows: Vec<Vec<BigUint>> = (0..matrix.rows)
        .map(|i| matrix.row(i).iter().map(|e| e % p).collect())
        .collect();

    let mut rank = 0;
    for col in 0..matrix.cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = inverse_mod_prime(&rows[rank][col], p)
            .ok_or_else(|| Error::param(format!("{p} is not prime")))?;
        let pivot_row: Vec<BigUint> = rows[rank].iter().map(|e| e * &inv % p).collect();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == rank || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (dst, src) in row.iter_mut().zip(&pivot_row) {
                let sub = &factor * src % p;
                *dst = (&*dst + p - sub) % p;
            }
        }
        rows[rank] = pivot_row;
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }

    let mut duplicate_row_pairs = Vec::new();
    for i in 0..matrix.rows {
        for j in i + 1..matrix.rows {
            if matrix.row(i) == matrix.row(j) {
                duplicate_row_pairs.push((i, j));
            }
        }
    }
    Ok(RankProfile {
        rank,
        duplicate_row_pairs,
    })
}

/// `true` when `matrix^k != matrix` for every probe exponent `k >= 2`.
///
/// This is a cheap smoke check that the multiplicative period of a base is
/// not trivially short; it is not a proof of long order.
pub fn passes_order_probe(matrix: &Matrix, m: &BigUint, probes: &[u64]) -> Result<bool> {
    for &k in probes.iter().filter(|&&k| k >= 2) {
        if mat_pow_mod(matrix, &BigUint::from(k), m)? == matrix.with_modulus(m)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `gcd(m, entries of matrix^dim mod m)` when it exceeds one.
///
/// A square matrix is nilpotent modulo a prime `r` exactly when its
/// `dim`-th power vanishes modulo `r`, so the prime factors of the result are
/// the primes dividing `m` modulo which `matrix` is nilpotent. High powers of
/// such a matrix are divisible by the full `r`-part of `m`.
pub fn nilpotent_factor(matrix: &Matrix, m: &BigUint) -> Result<Option<BigUint>> {
    if !matrix.is_square() {
        return Err(Error::param("nilpotency is only defined for square matrices"));
    }
    let power = mat_pow_mod(matrix, &BigUint::from(matrix.rows()), m)?;
    let g = power.entries().iter().fold(m.clone(), |g, e| g.gcd(e));
    Ok((!g.is_one()).then_some(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn construction_checks_invariants() {
        let m = big(7);
        assert!(Matrix::from_rows(&[[1u64, 2], [3, 4]], &m).is_ok());
        assert!(Matrix::from_rows(&[[1u64, 7]], &m).is_err());
        assert!(Matrix::new(2, 2, vec![big(1); 3], m.clone()).is_err());
        assert!(Matrix::from_rows(&[vec![1u64, 2], vec![3]], &m).is_err());
    }

    #[test]
    fn scalar_identity() {
        let m = big(65536);
        let x = Matrix::from_rows(&[[25454u64, 62439], [6392, 43055]], &m).unwrap();
        assert_eq!(mat_scalar_mul_mod(&big(1), &x, &m).unwrap(), x);
    }

    #[test]
    fn product_examples() {
        let m = big(5);
        let a = Matrix::from_rows(&[[1u64, 2], [3, 4]], &m).unwrap();
        let b = Matrix::from_rows(&[[0u64, 1], [1, 0]], &m).unwrap();
        let expected = Matrix::from_rows(&[[2u64, 1], [4, 3]], &m).unwrap();
        assert_eq!(mat_mul_mod(&a, &b, &m).unwrap(), expected);

        let id = Matrix::identity(2, &m).unwrap();
        assert_eq!(mat_mul_mod(&id, &b, &m).unwrap(), b);
        let z = Matrix::zeros(2, 2, &m).unwrap();
        assert_eq!(mat_mul_mod(&z, &b, &m).unwrap(), z);
    }

    #[test]
    fn product_dimension_mismatch() {
        let m = big(5);
        let a = Matrix::zeros(2, 3, &m).unwrap();
        assert!(matches!(mat_mul_mod(&a, &a, &m), Err(Error::Parameter(_))));
    }

    #[test]
    fn power_edge_cases() {
        let m = big(11);
        let a = Matrix::from_rows(&[[3u64, 5], [7, 2]], &m).unwrap();
        assert_eq!(mat_pow_mod(&a, &big(0), &m).unwrap(), Matrix::identity(2, &m).unwrap());
        assert_eq!(mat_pow_mod(&a, &big(1), &m).unwrap(), a);
        let cube = mat_mul_mod(&mat_mul_mod(&a, &a, &m).unwrap(), &a, &m).unwrap();
        assert_eq!(mat_pow_mod(&a, &big(3), &m).unwrap(), cube);
        assert!(mat_pow_mod(&Matrix::zeros(2, 3, &m).unwrap(), &big(2), &m).is_err());
    }

    #[test]
    fn rank_examples() {
        let p = big(7);
        let id = Matrix::identity(3, &p).unwrap();
        let profile = rank_mod_p(&id, &p).unwrap();
        assert_eq!(profile.rank, 3);
        assert!(profile.duplicate_row_pairs.is_empty());

        let dep = Matrix::from_rows(&[[1u64, 2], [2, 4]], &p).unwrap();
        assert_eq!(rank_mod_p(&dep, &p).unwrap().rank, 1);

        let dup = Matrix::from_rows(&[[1u64, 2, 3], [4, 5, 6], [1, 2, 3]], &p).unwrap();
        let profile = rank_mod_p(&dup, &p).unwrap();
        assert_eq!(profile.rank, 2);
        assert_eq!(profile.duplicate_row_pairs, vec![(0, 2)]);

        let wide = Matrix::from_rows(&[[1u64, 0, 0, 1]], &p).unwrap();
        assert_eq!(rank_mod_p(&wide, &p).unwrap().rank, 1);
    }

    fn arb_square(n: usize, m: u64) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(0..m, n * n)
            .prop_map(move |v| Matrix::from_entries_reduced(n, n, v.into_iter().map(BigUint::from), &BigUint::from(m)).unwrap())
    }

    #[test]
    fn nilpotent_factor_detection() {
        let q = big(65536);
        // strictly upper triangular mod 2 after reduction
        let n = Matrix::from_rows(&[[2u64, 3, 5], [4, 6, 7], [8, 10, 12]], &q).unwrap();
        assert_eq!(nilpotent_factor(&n, &q).unwrap(), Some(big(2)));
        assert!(mat_pow_mod(&n, &big(48), &q).unwrap().entries().iter().all(Zero::is_zero));
        let ok = Matrix::from_rows(&[[1u64, 2], [1, 2]], &q).unwrap();
        assert_eq!(nilpotent_factor(&ok, &q).unwrap(), None);
        // nilpotent mod 3 only
        let q = big(12);
        let m = Matrix::from_rows(&[[3u64, 1], [0, 3]], &q).unwrap();
        assert_eq!(nilpotent_factor(&m, &q).unwrap(), Some(big(3)));
    }

    proptest! {
        #[test]
        fn powers_of_one_base_commute(a in arb_square(3, 65536), x in 0u64..5000, y in 0u64..5000) {
            let m = big(65536);
            let ax = mat_pow_mod(&a, &big(x), &m).unwrap();
            let ay = mat_pow_mod(&a, &big(y), &m).unwrap();
            prop_assert_eq!(mat_mul_mod(&ax, &ay, &m).unwrap(), mat_mul_mod(&ay, &ax, &m).unwrap());
            prop_assert_eq!(mat_mul_mod(&ax, &ay, &m).unwrap(), mat_pow_mod(&a, &big(x + y), &m).unwrap());
        }

        #[test]
        fn powers_keep_duplicate_rows(a in arb_square(4, 65536), e in 1u64..3000) {
            let m = big(65536);
            // copy row 0 onto row 2
            let mut entries = a.entries().to_vec();
            for j in 0..4 {
                entries[2 * 4 + j] = entries[j].clone();
            }
            let base = Matrix::new(4, 4, entries, m.clone()).unwrap();
            let powered = mat_pow_mod(&base, &big(e), &m).unwrap();
            let profile = rank_mod_p(&powered, &big(65537)).unwrap();
            prop_assert!(profile.duplicate_row_pairs.contains(&(0, 2)));
        }

        #[test]
        fn transpose_of_product(a in arb_square(3, 97), b in arb_square(3, 97)) {
            let m = big(97);
            let lhs = mat_mul_mod(&a, &b, &m).unwrap().transpose();
            let rhs = mat_mul_mod(&b.transpose(), &a.transpose(), &m).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn rank_bounded_by_dims(a in arb_square(4, 7)) {
            prop_assert!(rank_mod_p(&a, &big(7)).unwrap().rank <= 4);
        }
    }
}
