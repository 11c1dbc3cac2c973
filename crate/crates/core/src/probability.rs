//! Probability assignments over a history space.
//!
//! Every quantity is a ratio of segment measures `μ(h) = Tr(C_h ρ C_h†)`.
//! Conditioning on a segment of measure at or below the space's τ_alg is an
//! error, never a silent 0 or NaN.
//!
//! The minimalist conditions on the present event alone. The fatalist
//! conditions on the present *and* a definite past, then averages over pasts
//! weighted by their retrodictive chance. Under exact decoherence the two
//! agree; otherwise they need not, and [`compare_views`] reports the gap.

use nalgebra::DMatrix;

use crate::error::{HistoriesError, Result};
use crate::history::{
    branches_over, decoherence_report, full_branches, Branch, Budget, DecoherenceReport, History, HistorySpace,
    DEFAULT_DECOHERENCE_TOL,
};
use crate::operator::{clamp_probability, Operator, C64};

/// D(h, h) for a full history.
pub fn absolute_measure(space: &HistorySpace, h: &History) -> Result<f64> {
    space.check_history(h)?;
    if !space.is_full(h) {
        return Err(HistoriesError::Contract(format!(
            "absolute_measure needs a full history, got segment {h}; use conditional_probability"
        )));
    }
    clamp_probability(space.segment_measure(h)?, space.tol(), "absolute measure")
}

/// Absolute measure of every full history, in enumeration order.
pub fn absolute_measures(space: &HistorySpace, budget: &Budget) -> Result<Vec<(History, f64)>> {
    full_branches(space, budget)?
        .into_iter()
        .map(|(h, b)| Ok((h, clamp_probability(b.measure(), space.tol(), "absolute measure")?)))
        .collect()
}

fn require_positive(space: &HistorySpace, h: &History, measure: f64) -> Result<()> {
    if measure <= space.tol() {
        return Err(HistoriesError::ZeroMeasureCondition {
            segment: space.describe(h),
            measure,
        });
    }
    Ok(())
}

fn check_present(space: &HistorySpace, present_outcome: usize) -> Result<History> {
    let event = History::event(space.present(), present_outcome);
    space.check_history(&event)?;
    Ok(event)
}

fn check_future(space: &HistorySpace, future: &History) -> Result<()> {
    space.check_history(future)?;
    if !future.is_empty() && future.start() != space.present() + 1 {
        return Err(HistoriesError::Contract(format!(
            "future segment {future} must start right after the present (position {})",
            space.present() + 1
        )));
    }
    Ok(())
}

fn check_past(space: &HistorySpace, past: &History) -> Result<()> {
    space.check_history(past)?;
    if past.range() != space.past_range() && !(past.is_empty() && space.past_range().is_empty()) {
        return Err(HistoriesError::Contract(format!(
            "past segment {past} must cover positions {}..{}",
            space.past_range().start,
            space.past_range().end
        )));
    }
    Ok(())
}

/// μ(target ∪ given) / μ(given). The two segments must overlap or touch;
/// disagreeing on a shared time gives 0.
pub fn conditional_probability(space: &HistorySpace, target: &History, given: &History) -> Result<f64> {
    space.check_history(target)?;
    space.check_history(given)?;
    let union = target.merge(given)?;
    let denominator = space.segment_measure(given)?;
    require_positive(space, given, denominator)?;
    let numerator = match union {
        Some(u) => space.segment_measure(&u)?,
        None => 0.0,
    };
    clamp_probability(numerator / denominator, space.tol(), "conditional probability")
}

/// Tr(C_f P ρ P C_f†) / Tr(P ρ P) for the present outcome `present_outcome`.
pub fn minimalist_future(space: &HistorySpace, future: &History, present_outcome: usize) -> Result<f64> {
    check_future(space, future)?;
    let present = check_present(space, present_outcome)?;
    conditional_probability(space, future, &present)
}

/// Per-past pieces shared by the fatalist quantities.
struct PastTerm {
    past: History,
    /// μ(α_p α₀)
    with_present: f64,
    branch: Branch,
}

fn past_terms(space: &HistorySpace, present_outcome: usize) -> Result<Vec<PastTerm>> {
    let present = check_present(space, present_outcome)?;
    branches_over(space, space.past_range())?
        .into_iter()
        .map(|(past, branch)| {
            let branch = branch.extend(space, &present)?;
            Ok(PastTerm {
                past,
                with_present: branch.measure(),
                branch,
            })
        })
        .collect()
}

/// Chance(α₀) = Σ_p Tr(P C_p ρ C_p† P), summed in enumeration order.
pub fn chance_of_present(space: &HistorySpace, present_outcome: usize) -> Result<f64> {
    Ok(past_terms(space, present_outcome)?
        .iter()
        .map(|t| t.with_present)
        .sum())
}

fn chance_denominator(space: &HistorySpace, present_outcome: usize, terms: &[PastTerm]) -> Result<f64> {
    let chance: f64 = terms.iter().map(|t| t.with_present).sum();
    if chance <= space.tol() {
        return Err(HistoriesError::ZeroMeasureCondition {
            segment: format!(
                "all pasts ending in {}",
                space.describe(&History::event(space.present(), present_outcome))
            ),
            measure: chance,
        });
    }
    Ok(chance)
}

/// Chance(α_p / α₀) = μ(α_p α₀) / Chance(α₀).
pub fn retrodictive_chance(space: &HistorySpace, past: &History, present_outcome: usize) -> Result<f64> {
    check_past(space, past)?;
    let terms = past_terms(space, present_outcome)?;
    let chance = chance_denominator(space, present_outcome, &terms)?;
    let joint = terms
        .iter()
        .find(|t| &t.past == past || (t.past.is_empty() && past.is_empty()))
        .map(|t| t.with_present)
        .unwrap_or(0.0);
    clamp_probability(joint / chance, space.tol(), "retrodictive chance")
}

/// Σ_p Prob(α_f / α₀ α_p) · Chance(α_p / α₀), evaluated term by term.
///
/// Pasts whose joint measure with the present is at or below τ_alg carry zero
/// weight and are skipped before their (undefined) conditional is formed.
pub fn fatalist_future(space: &HistorySpace, future: &History, present_outcome: usize) -> Result<f64> {
    check_future(space, future)?;
    let present = check_present(space, present_outcome)?;
    require_positive(space, &present, space.segment_measure(&present)?)?;
    let terms = past_terms(space, present_outcome)?;
    let chance = chance_denominator(space, present_outcome, &terms)?;
    let mut total = 0.0;
    for term in &terms {
        if term.with_present <= space.tol() {
            continue;
        }
        let joint = term.branch.extend(space, future)?.measure();
        let conditional = joint / term.with_present;
        let weight = term.with_present / chance;
        total += conditional * weight;
    }
    clamp_probability(total, space.tol(), "fatalist future probability")
}

/// ρ_mix = Σ_p C_p ρ C_p†, flagged as a density after validation.
pub fn rho_mix(space: &HistorySpace) -> Result<Operator> {
    let dim = space.dim();
    let mut acc = DMatrix::<C64>::zeros(dim, dim);
    for (_, branch) in branches_over(space, space.past_range())? {
        for u in branch.vectors() {
            acc += u * u.adjoint();
        }
    }
    Operator::new(acc)?.into_density(space.tol())
}

/// Conditional future probability computed in a substitute universal state.
pub fn future_expectation_in_state(
    space: &HistorySpace,
    state: &Operator,
    future: &History,
    present_outcome: usize,
) -> Result<f64> {
    minimalist_future(&space.with_state(state.clone())?, future, present_outcome)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViewComparison {
    pub minimalist: f64,
    pub fatalist: f64,
    /// |minimalist − fatalist|, unrounded.
    pub gap: f64,
    pub max_offdiag: f64,
    pub max_normalized_offdiag: f64,
    pub decoherence_passes: bool,
}

pub fn compare_views(space: &HistorySpace, future: &History, present_outcome: usize) -> Result<ViewComparison> {
    compare_views_with_tolerance(space, future, present_outcome, DEFAULT_DECOHERENCE_TOL)
}

pub fn compare_views_with_tolerance(
    space: &HistorySpace,
    future: &History,
    present_outcome: usize,
    eps_dec: f64,
) -> Result<ViewComparison> {
    let minimalist = minimalist_future(space, future, present_outcome)?;
    let fatalist = fatalist_future(space, future, present_outcome)?;
    let DecoherenceReport {
        max_offdiag,
        max_normalized_offdiag,
        passes,
        ..
    } = decoherence_report(space, eps_dec)?;
    Ok(ViewComparison {
        minimalist,
        fatalist,
        gap: (minimalist - fatalist).abs(),
        max_offdiag,
        max_normalized_offdiag,
        decoherence_passes: passes,
    })
}
