//! Key agreement over rectangular matrices.
//!
//! Both parties share a prime `p` and three `m x n` matrices (`m > n`):
//! `base`, `x` and `y`. Each party picks two secret scalars, scales `x` and
//! `y` by them modulo `p - 1`, and publishes the double-sided power action of
//! the scaled matrices on `base`. Applying the same action to the peer's token
//! yields the shared key, because scalar multiples of one matrix commute in
//! the exponent.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use rand::Rng;

use crate::action::double_action;
use crate::error::{Error, Result};
use crate::field::{uniform_range, FieldParams};
use crate::matrix::{mat_scalar_mul_mod, Matrix};
use crate::sample::{sample_matrix, SampleMode};
use crate::token::Token;

/// Draws before [`rmpf_keygen`] gives up on a setup.
pub const MAX_KEYGEN_ATTEMPTS: u32 = 64;

/// Dimension floor below which a setup is considered desk-scale only.
pub const RECOMMENDED_MIN_DIM: usize = 100;
/// Bit length of the smallest recommended prime.
pub const RECOMMENDED_MIN_PRIME_BITS: u64 = 64;

/// Public parameters shared by both parties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RmpfSetup {
    params: FieldParams,
    base: Matrix,
    x: Matrix,
    y: Matrix,
}

impl RmpfSetup {
    pub fn new(params: FieldParams, base: Matrix, x: Matrix, y: Matrix) -> Result<Self> {
        let (m, n) = (base.rows(), base.cols());
        if m <= n {
            return Err(Error::param(format!("rows ({m}) must exceed cols ({n})")));
        }
        for (name, mat) in [("base", &base), ("x", &x), ("y", &y)] {
            if (mat.rows(), mat.cols()) != (m, n) {
                return Err(Error::param(format!(
                    "{name} is {}x{}, expected {m}x{n}",
                    mat.rows(),
                    mat.cols()
                )));
            }
            if mat.modulus() != params.p() {
                return Err(Error::param(format!("{name} is not reduced modulo p")));
            }
            if mat.contains_zero() {
                return Err(Error::param(format!("{name} has a zero entry")));
            }
        }
        Ok(Self { params, base, x, y })
    }

    /// Samples `base`, `x` and `y` with entries in `[1, p-1]`.
    pub fn generate<R: Rng + ?Sized>(
        params: FieldParams,
        rows: usize,
        cols: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if rows <= cols {
            return Err(Error::param(format!("rows ({rows}) must exceed cols ({cols})")));
        }
        let p = params.p().clone();
        let mut draw = || sample_matrix(rows, cols, &p, rng, SampleMode::UnitEntries);
        let (base, x, y) = (draw()?, draw()?, draw()?);
        Self::new(params, base, x, y)
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    pub fn rows(&self) -> usize {
        self.base.rows()
    }

    pub fn cols(&self) -> usize {
        self.base.cols()
    }

    pub fn base(&self) -> &Matrix {
        &self.base
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }

    /// The product index bound used by every action: the column count.
    pub fn index_bound(&self) -> usize {
        self.cols()
    }

    /// Human-readable notes for parameters below the recommended real-life floor.
    pub fn floor_warnings(&self) -> Vec<String> {
        floor_warnings(self.params.p(), self.cols())
    }
}

pub(crate) fn floor_warnings(p: &BigUint, dim: usize) -> Vec<String> {
    let mut out = Vec::new();
    if p.bits() < RECOMMENDED_MIN_PRIME_BITS {
        out.push(format!(
            "prime has {} bits; at least {RECOMMENDED_MIN_PRIME_BITS} are recommended",
            p.bits()
        ));
    }
    if dim < RECOMMENDED_MIN_DIM {
        out.push(format!(
            "matrix dimension {dim} is below the recommended rank of {RECOMMENDED_MIN_DIM}"
        ));
    }
    out
}

/// One party's secret scalars and the exponent matrices derived from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RmpfPrivate {
    pub lambda: BigUint,
    pub omega: BigUint,
    /// `lambda * x mod (p-1)`
    pub a: Matrix,
    /// `omega * y mod (p-1)`
    pub b: Matrix,
}

impl RmpfPrivate {
    pub fn from_scalars(setup: &RmpfSetup, lambda: BigUint, omega: BigUint) -> Result<Self> {
        let q = setup.params.exp_modulus();
        let a = mat_scalar_mul_mod(&lambda, &setup.x, q)?;
        let b = mat_scalar_mul_mod(&omega, &setup.y, q)?;
        Ok(Self { lambda, omega, a, b })
    }
}

/// Double-sided action on equally shaped `m x n` matrices.
///
/// Only the leading `bound x bound` block of `w` is raised to powers.
pub fn mpf_double(xe: &Matrix, w: &Matrix, ye: &Matrix, bound: usize) -> Result<Matrix> {
    let shape = (w.rows(), w.cols());
    if (xe.rows(), xe.cols()) != shape || (ye.rows(), ye.cols()) != shape {
        return Err(Error::param(format!(
            "shape mismatch: {}x{}, {}x{}, {}x{}",
            xe.rows(),
            xe.cols(),
            w.rows(),
            w.cols(),
            ye.rows(),
            ye.cols()
        )));
    }
    double_action(xe, w, ye, &BigUint::one(), bound)
}

/// Derives the private matrices for the given scalars and the matching token.
///
/// Returns [`Error::RestartRequired`] if the token has a zero entry.
pub fn rmpf_keygen_with(
    setup: &RmpfSetup,
    lambda: BigUint,
    omega: BigUint,
) -> Result<(RmpfPrivate, Token)> {
    let private = RmpfPrivate::from_scalars(setup, lambda, omega)?;
    let token = Token::new(mpf_double(&private.a, &setup.base, &private.b, setup.index_bound())?);
    token.ensure_zero_free()?;
    Ok((private, token))
}

/// Uniform over the units of `Z_q` in `[1, q-1]`.
///
/// A scalar sharing a factor with `q = p - 1` wipes that factor out of every
/// exponent; when `q` is a large prime power (as for `p = 65537`) a few such
/// factors from both parties are enough to collapse the key to all ones.
fn draw_unit<R: Rng + ?Sized>(rng: &mut R, q: &BigUint) -> BigUint {
    let low = BigUint::one();
    loop {
        let v = uniform_range(rng, &low, q);
        if v.gcd(q).is_one() {
            return v;
        }
    }
}

/// Draws `lambda`, `omega` uniformly from the units in `[1, p-2]` and builds
/// the token, redrawing whenever the token contains a zero.
pub fn rmpf_keygen<R: Rng + ?Sized>(setup: &RmpfSetup, rng: &mut R) -> Result<(RmpfPrivate, Token)> {
    let q = setup.params.exp_modulus();
    for _ in 0..MAX_KEYGEN_ATTEMPTS {
        let lambda = draw_unit(rng, q);
        let omega = draw_unit(rng, q);
        match rmpf_keygen_with(setup, lambda, omega) {
            Err(Error::RestartRequired) => continue,
            other => return other,
        }
    }
    Err(Error::DegenerateSetup(MAX_KEYGEN_ATTEMPTS))
}

/// The shared key: the same action applied to the peer's token.
pub fn rmpf_derive_key(private: &RmpfPrivate, peer: &Token, setup: &RmpfSetup) -> Result<Matrix> {
    let t = peer.matrix();
    if (t.rows(), t.cols()) != (setup.rows(), setup.cols()) || t.modulus() != setup.params.p() {
        return Err(Error::protocol(format!(
            "peer token is {}x{} mod {}, expected {}x{} mod {}",
            t.rows(),
            t.cols(),
            t.modulus(),
            setup.rows(),
            setup.cols(),
            setup.params.p()
        )));
    }
    peer.ensure_zero_free()?;
    mpf_double(&private.a, t, &private.b, setup.index_bound())
}
