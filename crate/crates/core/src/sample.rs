//! Random matrix samplers for the three matrix classes the protocols use.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::field::uniform_range;
use crate::matrix::Matrix;

/// How the extra dependent row of a rank-deficient sample is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DependentRow {
    /// An exact copy of one sampled row.
    #[default]
    Duplicate,
    /// `a * r1 + b * r2 (mod modulus)` for two sampled rows and random
    /// non-zero `a`, `b`; redrawn until every entry is non-zero.
    Combination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// Entries uniform in `[0, modulus)`.
    General,
    /// Entries uniform in `[1, modulus)`.
    UnitEntries,
    /// `rows - 1` unit-entry rows plus one dependent row at a random position.
    RankDeficient(DependentRow),
}

pub fn sample_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    modulus: &BigUint,
    rng: &mut R,
    mode: SampleMode,
) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::param("matrix dimensions must be positive"));
    }
    if *modulus < BigUint::from(2u32) {
        return Err(Error::param("sampling modulus must be at least 2"));
    }
    let zero = BigUint::zero();
    let one = BigUint::one();
    match mode {
        SampleMode::General => {
            let entries = (0..rows * cols)
                .map(|_| uniform_range(rng, &zero, modulus))
                .collect();
            Matrix::new(rows, cols, entries, modulus.clone())
        }
        SampleMode::UnitEntries => {
            let entries = (0..rows * cols)
                .map(|_| uniform_range(rng, &one, modulus))
                .collect();
            Matrix::new(rows, cols, entries, modulus.clone())
        }
        SampleMode::RankDeficient(kind) => {
            if rows < 2 {
                return Err(Error::param("a rank-deficient sample needs at least 2 rows"));
            }
            let independent = sample_matrix(rows - 1, cols, modulus, rng, SampleMode::UnitEntries)?;
            let dependent: Vec<BigUint> = match kind {
                DependentRow::Duplicate => {
                    let src = rng.gen_range(0..rows - 1);
                    independent.row(src).to_vec()
                }
                DependentRow::Combination => combination_row(&independent, modulus, rng)?,
            };
            let position = rng.gen_range(0..rows);
            let mut entries = Vec::with_capacity(rows * cols);
            for i in 0..rows {
                match i.cmp(&position) {
                    std::cmp::Ordering::Less => entries.extend_from_slice(independent.row(i)),
                    std::cmp::Ordering::Equal => entries.extend_from_slice(&dependent),
                    std::cmp::Ordering::Greater => entries.extend_from_slice(independent.row(i - 1)),
                }
            }
            Matrix::new(rows, cols, entries, modulus.clone())
        }
    }
}

const COMBINATION_ATTEMPTS: usize = 256;

fn combination_row<R: Rng + ?Sized>(
    independent: &Matrix,
    modulus: &BigUint,
    rng: &mut R,
) -> Result<Vec<BigUint>> {
    let n = independent.rows();
    let one = BigUint::one();
    for _ in 0..COMBINATION_ATTEMPTS {
        let (first, second) = if n == 1 {
            (0, 0)
        } else {
            let a = rng.gen_range(0..n);
            let b = (a + rng.gen_range(1..n)) % n;
            (a, b)
        };
        let ca = uniform_range(rng, &one, modulus);
        let cb = uniform_range(rng, &one, modulus);
        let row: Vec<BigUint> = independent
            .row(first)
            .iter()
            .zip(independent.row(second))
            .map(|(x, y)| (&ca * x + &cb * y) % modulus)
            .collect();
        if row.iter().all(|e| !e.is_zero()) {
            return Ok(row);
        }
    }
    Err(Error::param(
        "could not form a zero-free linear combination row; modulus too small",
    ))
}
