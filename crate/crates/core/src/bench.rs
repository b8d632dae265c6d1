//! Timing sweep for the rank-deficient double action.
//!
//! Each trial draws fresh round exponents, builds `L` and `R` outside the
//! timed region, and times exactly one double action `rdmpf(L, W, R)`.

use std::fmt::Write as _;
use std::time::Instant;

use num_bigint::BigUint;
use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{random_prime, uniform_range, FieldParams};
use crate::matrix::mat_pow_mod;
use crate::rdmpf::{rdmpf, RdmpfSetup};

pub const MIN_TRIALS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchPoint {
    pub dim: usize,
    pub p: u64,
    pub exp_max: u64,
}

impl BenchPoint {
    pub const fn new(dim: usize, p: u64, exp_max: u64) -> Self {
        Self { dim, p, exp_max }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub point: BenchPoint,
    pub rounds: usize,
    pub trials: usize,
    pub mean_seconds: f64,
}

/// Baseline first, then one parameter raised at a time.
pub fn table1_grid() -> Vec<BenchPoint> {
    vec![
        BenchPoint::new(5, 997, 1000),
        BenchPoint::new(25, 997, 1000),
        BenchPoint::new(5, 4973, 1000),
        BenchPoint::new(5, 997, 5000),
    ]
}

/// Mean wall time of one double action per grid point.
///
/// Setups are sampled from `rng`. Each point gets one discarded warm-up
/// evaluation, then trials run round-robin across the grid so slow drift in
/// machine speed spreads over every point alike.
pub fn bench_rdmpf<R: Rng + ?Sized>(grid: &[BenchPoint], trials: usize, rng: &mut R) -> Result<Vec<BenchRecord>> {
    if trials < MIN_TRIALS {
        return Err(Error::param(format!("at least {MIN_TRIALS} trials are required, got {trials}")));
    }
    let setups = grid
        .iter()
        .map(|pt| {
            let params = FieldParams::from_u64(pt.p)?;
            RdmpfSetup::generate(params, pt.dim, BigUint::from(pt.exp_max), 1, rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let one = BigUint::from(1u32);
    let run = |setup: &RdmpfSetup, rng: &mut R| -> Result<f64> {
        let q = setup.params().exp_modulus();
        let rl = uniform_range(rng, &one, setup.exp_max());
        let rr = uniform_range(rng, &one, setup.exp_max());
        let left = mat_pow_mod(setup.base_xu(), &rl, q)?;
        let right = mat_pow_mod(setup.base_yv(), &rr, q)?;
        let start = Instant::now();
        let out = rdmpf(&left, setup.w(), &right, setup.sigma())?;
        let elapsed = start.elapsed().as_secs_f64();
        std::hint::black_box(out);
        Ok(elapsed)
    };
    for setup in &setups {
        run(setup, rng)?;
    }
    let mut totals = vec![0.0; setups.len()];
    for _ in 0..trials {
        for (setup, total) in setups.iter().zip(&mut totals) {
            *total += run(setup, rng)?;
        }
    }
    Ok(grid
        .iter()
        .zip(totals)
        .map(|(&point, total)| BenchRecord {
            point,
            rounds: 1,
            trials,
            mean_seconds: total / trials as f64,
        })
        .collect())
}

/// Mean time of each record divided by the baseline's.
pub fn ratios(records: &[BenchRecord], baseline: BenchPoint) -> Result<Vec<f64>> {
    let base = records
        .iter()
        .find(|r| r.point == baseline)
        .ok_or_else(|| Error::param(format!("baseline {baseline:?} is not in the results")))?;
    Ok(records.iter().map(|r| r.mean_seconds / base.mean_seconds).collect())
}

/// CSV rows and a plain-text table for the same records.
pub fn bench_report(records: &[BenchRecord], baseline: BenchPoint) -> Result<(String, String)> {
    let ratios = ratios(records, baseline)?;
    let mut csv = String::from("dim,p,expMax,trials,mean_s,ratio_vs_baseline\n");
    let mut text = String::from("timed region: one double action with fresh exponent matrices\n");
    let _ = writeln!(text, "{:>5} {:>8} {:>8} {:>7} {:>14} {:>8}", "dim", "p", "expMax", "trials", "mean_s", "ratio");
    for (r, ratio) in records.iter().zip(ratios) {
        let BenchPoint { dim, p, exp_max } = r.point;
        let _ = writeln!(csv, "{dim},{p},{exp_max},{},{:.9e},{ratio:.4}", r.trials, r.mean_seconds);
        let _ = writeln!(
            text,
            "{dim:>5} {p:>8} {exp_max:>8} {:>7} {:>14.6e} {ratio:>8.3}",
            r.trials, r.mean_seconds
        );
    }
    Ok((csv, text))
}

/// A random bench point with a prime of `bits` bits, for ad-hoc sweeps.
pub fn random_point<R: Rng + ?Sized>(dim: usize, bits: u64, exp_max: u64, rng: &mut R) -> Result<BenchPoint> {
    let p = random_prime(bits, rng)?;
    let p = u64::try_from(&p).map_err(|_| Error::param("bench primes must fit in 64 bits"))?;
    Ok(BenchPoint::new(dim, p, exp_max))
}
