#![allow(dead_code)]

use histories_core::history::{decoherence_matrix, enumerate_histories, Budget};
use histories_core::operator::{Operator, ProjectiveDecomposition, C64};
use histories_core::probability::{conditional_probability, retrodictive_chance, rho_mix};
use histories_core::{History, HistorySpace};
use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

// ---------- exact oracles ----------

/// The exact rational value of a finite double, from its bit pattern.
pub fn exact(x: f64) -> BigRational {
    assert!(x.is_finite());
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    let m = BigInt::from(sign) * BigInt::from(mantissa);
    if e >= 0 {
        BigRational::from_integer(m << e as usize)
    } else {
        BigRational::new(m, BigInt::one() << (-e) as usize)
    }
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// The decimal a literal like `0.85` was written as, recovered from its
/// shortest round-trip form.
pub fn decimal(x: f64) -> BigRational {
    let text = format!("{x:?}");
    let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
    let digits: BigInt = format!("{int}{frac}").parse().unwrap();
    BigRational::new(digits, num_traits::pow(BigInt::from(10), frac.len()))
}

/// Distribution of the number of successes in `n` trials of success weight `p`,
/// built by repeated convolution on integer numerators over the denominator d^n.
pub fn binomial_distribution(n: usize, p: &BigRational) -> (Vec<BigInt>, BigInt) {
    let a = p.numer().clone();
    let d = p.denom().clone();
    let b = &d - &a;
    let mut dist = vec![BigInt::one()];
    for _ in 0..n {
        let mut next = vec![BigInt::zero(); dist.len() + 1];
        for (k, w) in dist.iter().enumerate() {
            next[k] += w * &b;
            next[k + 1] += w * &a;
        }
        dist = next;
    }
    (dist, num_traits::pow(d, n))
}

/// Exact mass of success counts K with lo ≤ K/n ≤ hi.
pub fn binomial_window(n: usize, p: &BigRational, lo: &BigRational, hi: &BigRational) -> BigRational {
    let nn = BigRational::from_integer(BigInt::from(n));
    let (dist, denom) = binomial_distribution(n, p);
    let inside = dist
        .into_iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = BigRational::from_integer(BigInt::from(*k)) / &nn;
            &f >= lo && &f <= hi
        })
        .fold(BigInt::zero(), |acc, (_, w)| acc + w);
    BigRational::new(inside, denom)
}

/// Row `n` of Pascal's triangle.
pub fn pascal_row(n: usize) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for _ in 0..n {
        let mut next = vec![BigUint::zero(); row.len() + 1];
        for (k, v) in row.iter().enumerate() {
            next[k] += v;
            next[k + 1] += v;
        }
        row = next;
    }
    row
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("finite")
}

// ---------- dense oracle ----------

/// Tr(C_h ρ C_h†) multiplied out by hand from the stored projectors.
pub fn dense_measure(space: &HistorySpace, h: &History) -> f64 {
    let c = dense_class_operator(space, h);
    (&c * space.rho().matrix() * c.adjoint()).trace().re
}

pub fn dense_class_operator(space: &HistorySpace, h: &History) -> DMatrix<C64> {
    let mut acc = DMatrix::<C64>::identity(space.dim(), space.dim());
    for (k, &o) in h.outcomes().iter().enumerate() {
        let p = space.decomposition(h.start() + k).unwrap().projectors()[o].matrix();
        acc = p * acc;
    }
    acc
}

// ---------- random spaces ----------

fn complex_matrix(rows: usize, cols: usize, vals: &[f64]) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |i, j| {
        let k = 2 * (i * cols + j);
        C64::new(vals[k % vals.len()], vals[(k + 1) % vals.len()])
    })
}

/// Piece sizes of a random instance.
#[derive(Clone, Debug)]
pub struct SpaceShape {
    pub dim: usize,
    pub pieces: Vec<usize>,
    pub rank: usize,
    pub present: usize,
}

pub fn build_space(shape: &SpaceShape, vals: &[f64]) -> HistorySpace {
    let d = shape.dim;
    let mut offset = 0;
    let mut take = |n: usize| {
        let out: Vec<f64> = (0..n).map(|k| vals[(offset + k) % vals.len()]).collect();
        offset += n;
        out
    };
    let decompositions: Vec<ProjectiveDecomposition> = shape
        .pieces
        .iter()
        .map(|&m| {
            let mut raw = complex_matrix(d, d, &take(2 * d * d));
            for i in 0..d {
                raw[(i, i)] += C64::new(2.0, 0.0);
            }
            let q = raw.qr().q();
            let projectors: Vec<Operator> = (0..m)
                .map(|g| {
                    let mut p = DMatrix::<C64>::zeros(d, d);
                    for i in (g..d).step_by(m) {
                        let col = q.column(i);
                        p += col * col.adjoint();
                    }
                    Operator::new(p).unwrap()
                })
                .collect();
            let labels = (0..m).map(|g| g.to_string()).collect();
            ProjectiveDecomposition::new(projectors, labels, 1e-9).unwrap()
        })
        .collect();
    let a = complex_matrix(d, shape.rank, &take(2 * d * shape.rank));
    let mut rho = &a * a.adjoint();
    let tr = rho.trace();
    rho /= tr;
    let times = (0..shape.pieces.len() as i64).collect();
    HistorySpace::new(times, shape.present, decompositions, Operator::new(rho).unwrap()).unwrap()
}

pub fn arb_space() -> impl Strategy<Value = (SpaceShape, HistorySpace)> {
    (2usize..=16, 1usize..=3)
        .prop_flat_map(|(dim, n)| {
            (
                Just(dim),
                prop::collection::vec(2usize..=3.min(dim), n),
                1usize..=dim,
                0usize..n,
                prop::collection::vec(-1.0f64..1.0, 2 * dim * dim * (n + 1)),
            )
        })
        .prop_map(|(dim, pieces, rank, present, vals)| {
            let shape = SpaceShape {
                dim,
                pieces,
                rank,
                present,
            };
            let space = build_space(&shape, &vals);
            (shape, space)
        })
}

// ---------- invariants ----------

macro_rules! close {
    ($a:expr, $b:expr, $tol:expr, $what:expr) => {{
        let (a, b) = ($a, $b);
        prop_assert!((a - b).abs() <= $tol, "{}: {} vs {} (diff {:e})", $what, a, b, (a - b).abs());
    }};
}

pub const TOL: f64 = 1e-10;

/// The core invariant suite: Hermiticity of D, normalization, conditional
/// normalization, chain rule, agreement of the two evaluation routes,
/// ρ_mix validity and retrodictive normalization.
pub fn check_invariants(space: &HistorySpace) -> Result<(), TestCaseError> {
    let (hs, d) = decoherence_matrix(space, &Budget::default()).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let n = hs.len();
    let mut diag_sum = 0.0;
    let mut total = C64::new(0.0, 0.0);
    for i in 0..n {
        diag_sum += d[(i, i)].re;
        prop_assert!(d[(i, i)].im.abs() <= TOL);
        prop_assert!(d[(i, i)].re >= -TOL);
        for j in 0..n {
            total += d[(i, j)];
            let skew = (d[(i, j)] - d[(j, i)].conj()).norm();
            prop_assert!(skew <= TOL, "D not Hermitian at ({i},{j}): {skew:e}");
        }
    }
    close!(diag_sum, 1.0, TOL, "Σ D(α,α)");
    close!(total.re, 1.0, TOL, "Σ D(α,β)");

    // the vector route against the dense one
    for (i, h) in hs.iter().enumerate().take(8) {
        close!(d[(i, i)].re, dense_measure(space, h), TOL, "route agreement");
    }

    let present = space.present();
    let m0 = space.decomposition(present).unwrap().len();
    let futures: Vec<History> = enumerate_histories(space, space.future_range()).unwrap().collect();
    let pasts: Vec<History> = enumerate_histories(space, space.past_range()).unwrap().collect();
    for a0 in 0..m0 {
        let g = History::event(present, a0);
        let mu = space.segment_measure(&g).unwrap();
        if mu > 1e-6 {
            let s: f64 = futures
                .iter()
                .map(|f| conditional_probability(space, f, &g).unwrap())
                .sum();
            close!(s, 1.0, TOL, "future conditional normalization");
            // chain rule P(f2 | g f1) P(f1 | g) = P(f1 f2 | g)
            if let Some(f) = futures.iter().find(|f| f.len() >= 2) {
                let f1 = History::new(f.start(), f.outcomes()[..1].to_vec());
                let f2 = History::new(f.start() + 1, f.outcomes()[1..].to_vec());
                let gf1 = g.join(&f1).unwrap();
                if space.segment_measure(&gf1).unwrap() > 1e-6 {
                    let lhs = conditional_probability(space, &f2, &gf1).unwrap()
                        * conditional_probability(space, &f1, &g).unwrap();
                    let rhs = conditional_probability(space, f, &g).unwrap();
                    close!(lhs, rhs, TOL, "chain rule");
                }
            }
        }
        let chance: f64 = pasts.iter().map(|p| space.segment_measure(&p.join(&g).unwrap()).unwrap()).sum();
        if chance > 1e-6 {
            let s: f64 = pasts.iter().map(|p| retrodictive_chance(space, p, a0).unwrap()).sum();
            close!(s, 1.0, TOL, "retrodictive normalization");
        }
    }

    let mix = rho_mix(space).map_err(|e| TestCaseError::fail(e.to_string()))?;
    close!(mix.trace().re, 1.0, TOL, "Tr ρ_mix");
    let min_eig = mix.hermitian_eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
    prop_assert!(min_eig >= -TOL, "ρ_mix eigenvalue {min_eig}");
    Ok(())
}
