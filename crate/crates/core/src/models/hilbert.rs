//! Hilbert-space realizations of branching scenarios.

use std::f64::consts::FRAC_PI_4;

use nalgebra::{DMatrix, DVector};

use super::tree::BranchTree;
use crate::error::{HistoriesError, Result};
use crate::history::{History, HistorySpace};
use crate::operator::{c, Operator, ProjectiveDecomposition, C64, DEFAULT_ALG_TOL};

/// Largest Hilbert dimension the tree realizations will build.
pub const MAX_HILBERT_DIM: usize = 1 << 10;

/// Diagonal of the universal state of [`partial_decoherence_model`] in the
/// basis |00⟩, |01⟩, |10⟩, |11⟩: the second qubit is a noisy record of the first.
pub const PARTIAL_DECOHERENCE_WEIGHTS: [f64; 4] = [0.4, 0.1, 0.1, 0.4];

fn real_ket(entries: &[f64]) -> DVector<C64> {
    DVector::from_iterator(entries.len(), entries.iter().map(|&x| c(x, 0.0)))
}

fn kron_vec(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    a.kronecker(b)
}

/// One qudit per trial. Trial k's qudit is prepared in Σ_i √w_{k,i} |i⟩ and
/// time `k` measures it in the standard basis. The result is exactly
/// decoherent and each full-history measure is the tree's path measure.
pub fn hilbert_tree_model(tree: &BranchTree, present: usize) -> Result<HistorySpace> {
    let m = tree.branching();
    let n = tree.depth();
    let dim = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if dim > MAX_HILBERT_DIM as u128 {
        return Err(HistoriesError::Budget(format!(
            "tree with {n} levels of {m} outcomes needs dimension {dim} > {MAX_HILBERT_DIM}"
        )));
    }
    if present >= n {
        return Err(HistoriesError::Validation(format!(
            "present position {present} outside {n} trials"
        )));
    }
    let mut psi = real_ket(&[1.0]);
    for k in 0..n {
        let amplitudes: Vec<f64> = tree.level(k).expect("level").iter().map(|w| w.sqrt()).collect();
        psi = kron_vec(&psi, &real_ket(&amplitudes));
    }
    let norm = psi.norm();
    psi.unscale_mut(norm);
    let local = ProjectiveDecomposition::computational(m);
    let decompositions = (0..n)
        .map(|k| local.embed(m.pow(k as u32), m.pow((n - k - 1) as u32)))
        .collect::<Result<Vec<_>>>()?;
    let times = (0..n as i64).map(|k| k - present as i64).collect();
    HistorySpace::from_pure_state(times, present, decompositions, psi)
}

/// N independent qubits in √p|0⟩ + √(1−p)|1⟩, measured one per time, with
/// the first trial as the present.
pub fn hilbert_bernoulli_model(n: usize, p: f64) -> Result<HistorySpace> {
    hilbert_bernoulli_model_with_present(n, p, 0)
}

pub fn hilbert_bernoulli_model_with_present(n: usize, p: f64, present: usize) -> Result<HistorySpace> {
    if !(0.0..=1.0).contains(&p) {
        return Err(HistoriesError::Validation(format!("p = {p} outside [0, 1]")));
    }
    hilbert_tree_model(&BranchTree::bernoulli(n, p)?, present)
}

fn rotated_qubit_basis(theta: f64) -> Result<ProjectiveDecomposition> {
    let (s, co) = theta.sin_cos();
    ProjectiveDecomposition::from_basis(
        &[real_ket(&[co, s]), real_ket(&[-s, co])],
        vec!["e0".into(), "e1".into()],
        DEFAULT_ALG_TOL,
    )
}

/// Two qubits A, B over times −2, −1, 0, 1 with ρ = diag(0.4, 0.1, 0.1, 0.4).
///
/// * t₋₂: A in the basis rotated by θ = δ·π/4 from the standard basis
/// * t₋₁: B in the same rotated basis
/// * t₀ (present): A in the standard basis
/// * t₁: B in the standard basis
///
/// δ = 0 makes every projector diagonal, hence exactly decoherent. The
/// normalized off-diagonal maximum and the minimalist/fatalist gap for the
/// reference query both grow monotonically with δ on [0, 1].
pub fn partial_decoherence_model(delta: f64) -> Result<HistorySpace> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(HistoriesError::Validation(format!("delta = {delta} outside [0, 1]")));
    }
    let rotated = rotated_qubit_basis(delta * FRAC_PI_4)?;
    let z = ProjectiveDecomposition::computational(2);
    let decompositions = vec![
        rotated.embed(1, 2)?,
        rotated.embed(2, 1)?,
        z.embed(1, 2)?,
        z.embed(2, 1)?,
    ];
    let diag = DVector::from_iterator(4, PARTIAL_DECOHERENCE_WEIGHTS.iter().map(|&w| c(w, 0.0)));
    let rho = Operator::new(DMatrix::from_diagonal(&diag))?;
    HistorySpace::new(vec![-2, -1, 0, 1], 2, decompositions, rho)
}

/// (future segment, present outcome) used for the δ sweep: A = 0 now, B = 0 next.
pub fn partial_decoherence_reference_query() -> (History, usize) {
    (History::event(3, 0), 0)
}

/// ρ = |0⟩⟨0|, x basis at t₁, standard basis at t₂ (the present).
/// The x-basis past interferes: D((+,0), (−,0)) = 1/4.
pub fn interference_qubit_model() -> HistorySpace {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = ProjectiveDecomposition::from_basis(
        &[real_ket(&[s, s]), real_ket(&[s, -s])],
        vec!["+".into(), "-".into()],
        DEFAULT_ALG_TOL,
    )
    .expect("x basis");
    HistorySpace::from_pure_state(
        vec![1, 2],
        1,
        vec![x, ProjectiveDecomposition::computational(2)],
        real_ket(&[1.0, 0.0]),
    )
    .expect("valid space")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::{decoherence_report, enumerate_histories};
    use crate::probability::absolute_measure;

    #[test]
    fn single_trial_measure() {
        let space = hilbert_bernoulli_model(1, 0.3).unwrap();
        let m = absolute_measure(&space, &History::new(0, vec![0])).unwrap();
        assert!((m - 0.3).abs() < 1e-15);
    }

    #[test]
    fn three_fair_trials_are_uniform() {
        let space = hilbert_bernoulli_model(3, 0.5).unwrap();
        assert_eq!(space.dim(), 8);
        for h in enumerate_histories(&space, space.full_range()).unwrap() {
            assert!((absolute_measure(&space, &h).unwrap() - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_budget() {
        assert!(hilbert_bernoulli_model(11, 0.5).unwrap_err().is_resource());
        assert!(hilbert_bernoulli_model(10, 0.5).is_ok());
    }

    #[test]
    fn delta_out_of_range() {
        assert!(partial_decoherence_model(1.5).is_err());
        assert!(partial_decoherence_model(-0.1).is_err());
    }

    #[test]
    fn delta_zero_is_exactly_decoherent() {
        let report = decoherence_report(&partial_decoherence_model(0.0).unwrap(), 1e-10).unwrap();
        assert!(report.passes);
        assert_eq!(report.max_offdiag, 0.0);
    }

    #[test]
    fn delta_one_fails_decoherence() {
        let report = decoherence_report(&partial_decoherence_model(1.0).unwrap(), 1e-8).unwrap();
        assert!(!report.passes);
        // numpy cross-check of this construction: 0.0375 raw, 0.6 normalized
        assert!((report.max_offdiag - 0.0375).abs() < 1e-12);
        assert!((report.max_normalized_offdiag - 0.6).abs() < 1e-12);
    }
}
