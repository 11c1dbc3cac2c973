//! Branch counting against branch measure for repeated trials.
//!
//! All sums are exact big-rational arithmetic with one rounding step at the
//! end; tail masses at N in the hundreds underflow naive double sums.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::tree::BranchTree;
use crate::error::{HistoriesError, Result};

/// Slack applied to window endpoints when testing `K/N` membership, so that
/// endpoints computed in floating point (e.g. `0.9 - 0.05`) still include the
/// frequency they name.
pub const WINDOW_SLACK: f64 = 1e-12;

/// Relative frequency window `[lo, hi]` for one outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyQuery {
    target: usize,
    lo: f64,
    hi: f64,
}

impl FrequencyQuery {
    pub fn new(target: usize, lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(HistoriesError::Validation(format!(
                "frequency window [{lo}, {hi}] is not an interval"
            )));
        }
        Ok(FrequencyQuery { target, lo, hi })
    }

    pub fn everything(target: usize) -> Self {
        FrequencyQuery { target, lo: 0.0, hi: 1.0 }
    }

    /// `[center - halfwidth, center + halfwidth]`
    pub fn around(target: usize, center: f64, halfwidth: f64) -> Result<Self> {
        Self::new(target, center - halfwidth, center + halfwidth)
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, k: u64, n: u64) -> bool {
        let f = k as f64 / n as f64;
        f >= self.lo - WINDOW_SLACK && f <= self.hi + WINDOW_SLACK
    }
}

/// N! / ((N−K)! K!), exactly.
pub fn branch_count(n: u64, k: u64) -> Result<BigUint> {
    if k > n {
        return Err(HistoriesError::Validation(format!(
            "branch_count: K = {k} exceeds N = {n}"
        )));
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    Ok(acc)
}

/// Fraction of the 2^N yes/no histories whose frequency lies in the window.
/// There is deliberately no weight parameter: counting ignores p.
pub fn count_fraction_exact(n: u64, query: &FrequencyQuery) -> BigRational {
    let mut hits = BigUint::zero();
    let mut coeff = BigUint::one();
    for k in 0..=n {
        if query.contains(k, n) {
            hits += &coeff;
        }
        // C(n, k+1) = C(n, k) (n - k) / (k + 1)
        coeff = coeff * (n - k) / (k + 1);
    }
    let total = BigUint::one() << (n as usize);
    BigRational::new(BigInt::from(hits), BigInt::from(total))
}

pub fn count_fraction(n: u64, query: &FrequencyQuery) -> f64 {
    rational_to_f64(&count_fraction_exact(n, query))
}

fn target_probability(tree: &BranchTree, query: &FrequencyQuery) -> Result<BigRational> {
    let weights = tree.uniform_weights().ok_or_else(|| {
        HistoriesError::Unsupported("measure_fraction needs identical weights at every level".into())
    })?;
    let p = *weights.get(query.target()).ok_or(HistoriesError::IndexOutOfRange {
        position: 0,
        index: query.target(),
        outcomes: tree.branching(),
    })?;
    BigRational::from_float(p)
        .ok_or_else(|| HistoriesError::Validation(format!("weight {p} is not finite")))
}

fn binomial_mass(n: u64, p: &BigRational, select: impl Fn(u64) -> bool) -> BigRational {
    // p = a/d, 1 - p = b/d; sum integer numerators over the common denominator d^n
    let d = p.denom().clone();
    let a = p.numer().clone();
    let b = &d - &a;
    let mut b_pow = Vec::with_capacity(n as usize + 1);
    let mut acc = BigInt::one();
    for _ in 0..=n {
        b_pow.push(acc.clone());
        acc *= &b;
    }
    let mut total = BigInt::zero();
    let mut a_pow = BigInt::one();
    let mut coeff = BigInt::one();
    for k in 0..=n {
        if select(k) {
            total += &coeff * &a_pow * &b_pow[(n - k) as usize];
        }
        a_pow *= &a;
        coeff = coeff * (n - k) / (k + 1);
    }
    BigRational::new(total, num_traits::pow(d, n as usize))
}

/// Σ_{K/N in window} C(N,K) p^K (1−p)^(N−K) for the query's target outcome.
pub fn measure_fraction_exact(tree: &BranchTree, query: &FrequencyQuery) -> Result<BigRational> {
    let p = target_probability(tree, query)?;
    let n = tree.depth() as u64;
    Ok(binomial_mass(n, &p, |k| query.contains(k, n)))
}

pub fn measure_fraction(tree: &BranchTree, query: &FrequencyQuery) -> Result<f64> {
    Ok(rational_to_f64(&measure_fraction_exact(tree, query)?))
}

/// Measure of frequencies *outside* the window, summed directly rather than as
/// `1 - inside` so small tails keep full relative precision.
pub fn measure_outside_exact(tree: &BranchTree, query: &FrequencyQuery) -> Result<BigRational> {
    let p = target_probability(tree, query)?;
    let n = tree.depth() as u64;
    Ok(binomial_mass(n, &p, |k| !query.contains(k, n)))
}

pub fn measure_outside(tree: &BranchTree, query: &FrequencyQuery) -> Result<f64> {
    Ok(rational_to_f64(&measure_outside_exact(tree, query)?))
}

/// Correctly rounded conversion.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
