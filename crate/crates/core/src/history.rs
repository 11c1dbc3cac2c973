//! History spaces, class operators and the decoherence functional.
//!
//! Ordering convention: a class operator is the time-ordered product with the
//! **latest** projector leftmost, `C = P_{t_f} ⋯ P_{t_0} ⋯ P_{t_{-p}}`.
//! Reversing the order silently conjugates every decoherence-functional
//! value, so all code here goes through [`class_operator`] or
//! [`Branch::extend`], which apply projectors earliest first.
//!
//! Decompositions are stored per time in the Heisenberg picture. Schrödinger
//! dynamics can be folded in with [`ProjectiveDecomposition::evolve`].
//!
//! Two routes evaluate `D(a, b) = Tr(C_a ρ C_b†)`:
//! [`decoherence_functional`] multiplies the dense matrices directly, while
//! [`Branch`] works on the vectors `C_a √w_k |v_k⟩` obtained from the spectral
//! decomposition of ρ. The report and the probability engine use the vector
//! route; the tests check one against the other.

use std::fmt;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{HistoriesError, Result};
use crate::operator::{
    trace_of_product, Operator, ProjectiveDecomposition, C64, DEFAULT_ALG_TOL,
};

/// Default tolerance on the normalized off-diagonal decoherence functional.
pub const DEFAULT_DECOHERENCE_TOL: f64 = 1e-8;

/// Enumerations above this many histories log a warning.
pub const HISTORY_WARN_THRESHOLD: u128 = 1_000_000;

/// A half-open range `start..end` of positions in a space's time grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TimeRange {
    pub start: usize,
    pub end: usize,
}

impl TimeRange {
    pub fn new(start: usize, end: usize) -> Self {
        TimeRange { start, end }
    }

    pub fn empty_at(position: usize) -> Self {
        TimeRange::new(position, position)
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn positions(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

/// One outcome index per time over a contiguous range of the grid.
///
/// A history covering the whole grid is a *full* history; anything shorter is
/// a segment (past, present event, future, or any contiguous stretch).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct History {
    start: usize,
    outcomes: Vec<usize>,
}

impl History {
    pub fn new(start: usize, outcomes: Vec<usize>) -> Self {
        History { start, outcomes }
    }

    pub fn empty(position: usize) -> Self {
        History::new(position, Vec::new())
    }

    /// A single event at one grid position.
    pub fn event(position: usize, outcome: usize) -> Self {
        History::new(position, vec![outcome])
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.start + self.outcomes.len()
    }

    pub fn range(&self) -> TimeRange {
        TimeRange::new(self.start, self.end())
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Outcome at grid position `position`, if covered.
    pub fn outcome_at(&self, position: usize) -> Option<usize> {
        position
            .checked_sub(self.start)
            .and_then(|k| self.outcomes.get(k).copied())
    }

    /// Conjunction of two segments whose ranges overlap or touch.
    /// `None` when they disagree on a shared time.
    pub fn merge(&self, other: &History) -> Result<Option<History>> {
        if other.is_empty() {
            return Ok(Some(self.clone()));
        }
        if self.is_empty() {
            return Ok(Some(other.clone()));
        }
        let start = self.start.min(other.start);
        let end = self.end().max(other.end());
        if self.end().min(other.end()) < self.start.max(other.start) {
            return Err(HistoriesError::Contract(format!(
                "segments {self} and {other} leave a gap"
            )));
        }
        let mut outcomes = Vec::with_capacity(end - start);
        for position in start..end {
            let o = match (self.outcome_at(position), other.outcome_at(position)) {
                (Some(a), Some(b)) if a != b => return Ok(None),
                (Some(a), _) | (None, Some(a)) => a,
                (None, None) => unreachable!("position inside the union"),
            };
            outcomes.push(o);
        }
        Ok(Some(History::new(start, outcomes)))
    }

    /// Joins two segments into one; empty segments join with anything.
    /// Non-empty segments must be adjacent (in either order).
    pub fn join(&self, other: &History) -> Result<History> {
        if other.is_empty() {
            return Ok(self.clone());
        }
        if self.is_empty() {
            return Ok(other.clone());
        }
        let (earlier, later) = if self.start <= other.start {
            (self, other)
        } else {
            (other, self)
        };
        if earlier.end() != later.start {
            return Err(HistoriesError::Contract(format!(
                "segments {earlier} and {later} are not adjacent"
            )));
        }
        let mut outcomes = earlier.outcomes.clone();
        outcomes.extend_from_slice(&later.outcomes);
        Ok(History::new(earlier.start, outcomes))
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}[", self.start)?;
        for (k, o) in self.outcomes.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{o}")?;
        }
        f.write_str("]")
    }
}

#[derive(Clone, Debug)]
enum ProjectorAction {
    Diagonal(Vec<C64>),
    Dense,
}

impl ProjectorAction {
    fn of(p: &Operator) -> Self {
        let m = p.matrix();
        let n = m.nrows();
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == C64::new(0.0, 0.0)));
        if diagonal {
            ProjectorAction::Diagonal((0..n).map(|i| m[(i, i)]).collect())
        } else {
            ProjectorAction::Dense
        }
    }
}

/// Time grid, one projective decomposition per time, and the universal state.
#[derive(Clone, Debug)]
pub struct HistorySpace {
    times: Vec<i64>,
    present: usize,
    decompositions: Vec<ProjectiveDecomposition>,
    actions: Vec<Vec<ProjectorAction>>,
    rho: Operator,
    // ρ = Σ_k |u_k⟩⟨u_k| with u_k = √w_k v_k
    components: Vec<DVector<C64>>,
    tol: f64,
}

impl HistorySpace {
    /// `present` is the grid position of t₀. Times must be strictly increasing.
    pub fn new(
        times: Vec<i64>,
        present: usize,
        decompositions: Vec<ProjectiveDecomposition>,
        rho: Operator,
    ) -> Result<Self> {
        Self::new_with_tolerance(times, present, decompositions, rho, DEFAULT_ALG_TOL)
    }

    pub fn new_with_tolerance(
        times: Vec<i64>,
        present: usize,
        decompositions: Vec<ProjectiveDecomposition>,
        rho: Operator,
        tol: f64,
    ) -> Result<Self> {
        let rho = rho.into_density(tol)?;
        let floor = f64::EPSILON * rho.dim() as f64;
        let components = crate::operator::hermitian_eigenpairs(rho.matrix(), floor)
            .into_iter()
            .map(|(w, v)| v.scale(w.sqrt()))
            .collect();
        Self::assemble(times, present, decompositions, rho, components, tol)
    }

    /// Space whose universal state is the pure state |ψ⟩⟨ψ|.
    pub fn from_pure_state(
        times: Vec<i64>,
        present: usize,
        decompositions: Vec<ProjectiveDecomposition>,
        psi: DVector<C64>,
    ) -> Result<Self> {
        let rho = Operator::pure_state(&psi, DEFAULT_ALG_TOL)?;
        Self::assemble(times, present, decompositions, rho, vec![psi], DEFAULT_ALG_TOL)
    }

    fn assemble(
        times: Vec<i64>,
        present: usize,
        decompositions: Vec<ProjectiveDecomposition>,
        rho: Operator,
        components: Vec<DVector<C64>>,
        tol: f64,
    ) -> Result<Self> {
        if times.is_empty() {
            return Err(HistoriesError::Validation("time grid is empty".into()));
        }
        if times.len() != decompositions.len() {
            return Err(HistoriesError::dimension(
                format!("{} decompositions", times.len()),
                format!("{} decompositions", decompositions.len()),
            ));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HistoriesError::Validation(
                "time indices must be strictly increasing".into(),
            ));
        }
        if present >= times.len() {
            return Err(HistoriesError::Validation(format!(
                "present position {present} outside grid of {} times",
                times.len()
            )));
        }
        for (k, d) in decompositions.iter().enumerate() {
            if d.dim() != rho.dim() {
                return Err(HistoriesError::dimension(
                    format!("dimension {} at every time", rho.dim()),
                    format!("dimension {} at position {k}", d.dim()),
                ));
            }
        }
        let actions = decompositions
            .iter()
            .map(|d| d.projectors().iter().map(ProjectorAction::of).collect())
            .collect();
        Ok(HistorySpace {
            times,
            present,
            decompositions,
            actions,
            rho,
            components,
            tol,
        })
    }

    /// Same grid and decompositions with a different universal state.
    pub fn with_state(&self, rho: Operator) -> Result<Self> {
        Self::new_with_tolerance(
            self.times.clone(),
            self.present,
            self.decompositions.clone(),
            rho,
            self.tol,
        )
    }

    /// Same space with a different position designated as the present.
    pub fn with_present(&self, present: usize) -> Result<Self> {
        if present >= self.times.len() {
            return Err(HistoriesError::Validation(format!(
                "present position {present} outside grid of {} times",
                self.times.len()
            )));
        }
        let mut out = self.clone();
        out.present = present;
        Ok(out)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[i64] {
        &self.times
    }

    /// Grid position of the present time t₀.
    pub fn present(&self) -> usize {
        self.present
    }

    pub fn rho(&self) -> &Operator {
        &self.rho
    }

    pub fn decomposition(&self, position: usize) -> Option<&ProjectiveDecomposition> {
        self.decompositions.get(position)
    }

    pub fn decompositions(&self) -> &[ProjectiveDecomposition] {
        &self.decompositions
    }

    pub fn full_range(&self) -> TimeRange {
        TimeRange::new(0, self.times.len())
    }

    pub fn past_range(&self) -> TimeRange {
        TimeRange::new(0, self.present)
    }

    pub fn present_range(&self) -> TimeRange {
        TimeRange::new(self.present, self.present + 1)
    }

    pub fn future_range(&self) -> TimeRange {
        TimeRange::new(self.present + 1, self.times.len())
    }

    pub fn check_range(&self, range: TimeRange) -> Result<()> {
        if range.start > range.end || range.end > self.times.len() {
            return Err(HistoriesError::RangeOutsideGrid {
                start: range.start,
                end: range.end,
                len: self.times.len(),
            });
        }
        Ok(())
    }

    pub fn check_history(&self, h: &History) -> Result<()> {
        self.check_range(h.range())?;
        for (k, &o) in h.outcomes().iter().enumerate() {
            let position = h.start() + k;
            let outcomes = self.decompositions[position].len();
            if o >= outcomes {
                return Err(HistoriesError::IndexOutOfRange {
                    position,
                    index: o,
                    outcomes,
                });
            }
        }
        Ok(())
    }

    pub fn is_full(&self, h: &History) -> bool {
        h.range() == self.full_range()
    }

    /// Number of histories over `range` (product of decomposition sizes).
    pub fn history_count(&self, range: TimeRange) -> Result<u128> {
        self.check_range(range)?;
        range.positions().try_fold(1u128, |acc, k| {
            acc.checked_mul(self.decompositions[k].len() as u128)
                .ok_or_else(|| HistoriesError::Budget("history count overflows".into()))
        })
    }

    /// Human-readable form using time and outcome labels, e.g. `t-1=0;t0=+`.
    pub fn describe(&self, h: &History) -> String {
        if h.is_empty() {
            return "()".to_string();
        }
        h.outcomes()
            .iter()
            .enumerate()
            .map(|(k, &o)| {
                let pos = h.start() + k;
                let time = self.times.get(pos).copied().unwrap_or_default();
                let label = self
                    .decompositions
                    .get(pos)
                    .and_then(|d| d.label(o))
                    .map(str::to_string)
                    .unwrap_or_else(|| o.to_string());
                format!("t{time}={label}")
            })
            .collect::<Vec<_>>()
            .join(";")
    }

    fn apply_projector(&self, position: usize, outcome: usize, v: &DVector<C64>) -> DVector<C64> {
        match &self.actions[position][outcome] {
            ProjectorAction::Diagonal(d) => {
                DVector::from_iterator(v.len(), v.iter().zip(d).map(|(x, p)| x * p))
            }
            ProjectorAction::Dense => self.decompositions[position].projectors()[outcome].apply(v),
        }
    }

    /// The branch of the universal state along `h` (only projectors of `h` applied).
    pub fn branch(&self, h: &History) -> Result<Branch> {
        self.check_history(h)?;
        Branch::root(self, h.start()).extend(self, h)
    }

    /// D(h, h) = Tr(C_h ρ C_h†) for any segment.
    pub fn segment_measure(&self, h: &History) -> Result<f64> {
        Ok(self.branch(h)?.measure())
    }
}

/// `C_h √w_k |v_k⟩` for each spectral component of ρ.
#[derive(Clone, Debug)]
pub struct Branch {
    end: usize,
    components: Vec<DVector<C64>>,
}

impl Branch {
    /// The unprojected state, positioned to accept a segment starting at `position`.
    pub fn root(space: &HistorySpace, position: usize) -> Branch {
        Branch {
            end: position,
            components: space.components.clone(),
        }
    }

    /// Applies the projectors of `segment`, which must start where this branch ends.
    pub fn extend(&self, space: &HistorySpace, segment: &History) -> Result<Branch> {
        if segment.is_empty() {
            return Ok(self.clone());
        }
        if segment.start() != self.end {
            return Err(HistoriesError::Contract(format!(
                "segment {segment} does not continue a branch ending at position {}",
                self.end
            )));
        }
        space.check_history(segment)?;
        let mut components = self.components.clone();
        for (k, &o) in segment.outcomes().iter().enumerate() {
            let position = segment.start() + k;
            for v in components.iter_mut() {
                *v = space.apply_projector(position, o, v);
            }
        }
        Ok(Branch {
            end: segment.end(),
            components,
        })
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn vectors(&self) -> &[DVector<C64>] {
        &self.components
    }

    /// Tr(C ρ C†)
    pub fn measure(&self) -> f64 {
        self.components.iter().map(|v| v.norm_squared()).sum()
    }

    /// Tr(C_self ρ C_other†)
    pub fn overlap(&self, other: &Branch) -> C64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| b.dotc(a))
            .sum()
    }

    fn apply_event(&self, space: &HistorySpace, position: usize, outcome: usize) -> Branch {
        Branch {
            end: position + 1,
            components: self
                .components
                .iter()
                .map(|v| space.apply_projector(position, outcome, v))
                .collect(),
        }
    }
}

/// C_h: ordered product with the latest projector leftmost.
/// A single-time history gives its projector; an empty one the identity.
pub fn class_operator(space: &HistorySpace, h: &History) -> Result<Operator> {
    space.check_history(h)?;
    let dim = space.dim();
    let mut acc = DMatrix::<C64>::identity(dim, dim);
    for (k, &o) in h.outcomes().iter().enumerate() {
        let p = &space.decompositions[h.start() + k].projectors()[o];
        acc = p.matrix() * acc;
    }
    Operator::new(acc)
}

/// Lazy lexicographic enumeration; the earliest time varies slowest.
#[derive(Clone, Debug)]
pub struct HistoryIter {
    start: usize,
    sizes: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for HistoryIter {
    type Item = History;

    fn next(&mut self) -> Option<History> {
        let current = self.next.take()?;
        let mut following = current.clone();
        let mut k = following.len();
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            following[k] += 1;
            if following[k] < self.sizes[k] {
                self.next = Some(following);
                break;
            }
            following[k] = 0;
        }
        Some(History::new(self.start, current))
    }
}

pub fn enumerate_histories(space: &HistorySpace, range: TimeRange) -> Result<HistoryIter> {
    space.check_range(range)?;
    let count = space.history_count(range)?;
    if count > HISTORY_WARN_THRESHOLD {
        warn!("enumerating {count} histories over positions {}..{}", range.start, range.end);
    }
    let sizes: Vec<usize> = range.positions().map(|k| space.decompositions[k].len()).collect();
    Ok(HistoryIter {
        start: range.start,
        next: Some(vec![0; sizes.len()]),
        sizes,
    })
}

/// Branches of every history over `range`, in enumeration order, sharing prefixes.
pub(crate) fn branches_over(space: &HistorySpace, range: TimeRange) -> Result<Vec<(History, Branch)>> {
    space.check_range(range)?;
    let count = space.history_count(range)?;
    if count > HISTORY_WARN_THRESHOLD {
        warn!("materializing {count} branches over positions {}..{}", range.start, range.end);
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut prefix = Vec::with_capacity(range.len());
    descend(space, range, Branch::root(space, range.start), &mut prefix, &mut out);
    Ok(out)
}

fn descend(
    space: &HistorySpace,
    range: TimeRange,
    branch: Branch,
    prefix: &mut Vec<usize>,
    out: &mut Vec<(History, Branch)>,
) {
    let position = range.start + prefix.len();
    if position == range.end {
        out.push((History::new(range.start, prefix.clone()), branch));
        return;
    }
    for o in 0..space.decompositions[position].len() {
        prefix.push(o);
        let next = branch.apply_event(space, position, o);
        descend(space, range, next, prefix, out);
        prefix.pop();
    }
}

/// D(a, b) = Tr(C_a ρ C_b†), evaluated with dense matrices.
pub fn decoherence_functional(space: &HistorySpace, a: &History, b: &History) -> Result<C64> {
    if a.range() != b.range() {
        return Err(HistoriesError::Contract(format!(
            "histories {a} and {b} cover different time ranges"
        )));
    }
    let ca = class_operator(space, a)?;
    let cb = class_operator(space, b)?;
    let left = ca.matrix() * space.rho.matrix();
    Ok(trace_of_product(&left, &cb.matrix().adjoint()))
}

/// The full decoherence matrix over complete histories, row/column order as
/// [`enumerate_histories`].
pub fn decoherence_matrix(space: &HistorySpace, budget: &Budget) -> Result<(Vec<History>, DMatrix<C64>)> {
    let branches = full_branches(space, budget)?;
    let n = branches.len();
    let mut d = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = branches[i].1.overlap(&branches[j].1);
            d[(i, j)] = v;
            d[(j, i)] = v.conj();
        }
    }
    Ok((branches.into_iter().map(|(h, _)| h).collect(), d))
}

/// Memory ceiling for materialized branch vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_bytes: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_bytes: 1 << 30 }
    }
}

impl Budget {
    /// Fails with a budget error when the full histories of `space` would not fit.
    pub fn check(&self, space: &HistorySpace) -> Result<()> {
        self.admit(space.history_count(space.full_range())?, space)
    }

    fn admit(&self, histories: u128, space: &HistorySpace) -> Result<()> {
        let per = (space.components.len() * space.dim() * std::mem::size_of::<C64>()) as u128;
        let bytes = histories.saturating_mul(per);
        if bytes > self.max_bytes {
            return Err(HistoriesError::Budget(format!(
                "{histories} histories need {bytes} bytes of branch vectors, budget is {}",
                self.max_bytes
            )));
        }
        Ok(())
    }
}

pub(crate) fn full_branches(space: &HistorySpace, budget: &Budget) -> Result<Vec<(History, Branch)>> {
    let range = space.full_range();
    budget.admit(space.history_count(range)?, space)?;
    branches_over(space, range)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecoherenceReport {
    pub n_histories: usize,
    /// Largest |D(α, α′)| over distinct pairs.
    pub max_offdiag: f64,
    /// Largest |D(α, α′)| / √(D(α, α) D(α′, α′)) over pairs with both diagonals above τ_alg.
    pub max_normalized_offdiag: f64,
    pub tolerance: f64,
    pub passes: bool,
    /// Pair attaining `max_normalized_offdiag` (or `max_offdiag` when no pair qualifies).
    pub offender: Option<(History, History)>,
}

#[derive(Clone, Copy, Debug)]
struct PairScore {
    raw: f64,
    raw_pair: (usize, usize),
    normalized: f64,
    normalized_pair: Option<(usize, usize)>,
}

impl PairScore {
    fn none() -> Self {
        PairScore {
            raw: 0.0,
            raw_pair: (usize::MAX, usize::MAX),
            normalized: 0.0,
            normalized_pair: None,
        }
    }

    // Ties go to the lexicographically smaller pair so the reduction is order-independent.
    fn merge(self, other: PairScore) -> PairScore {
        let better = |a: f64, pa: (usize, usize), b: f64, pb: (usize, usize)| {
            b > a || (b == a && pb < pa)
        };
        let (raw, raw_pair) = if better(self.raw, self.raw_pair, other.raw, other.raw_pair) {
            (other.raw, other.raw_pair)
        } else {
            (self.raw, self.raw_pair)
        };
        let (normalized, normalized_pair) = match (self.normalized_pair, other.normalized_pair) {
            (None, _) => (other.normalized, other.normalized_pair),
            (_, None) => (self.normalized, self.normalized_pair),
            (Some(pa), Some(pb)) => {
                if better(self.normalized, pa, other.normalized, pb) {
                    (other.normalized, Some(pb))
                } else {
                    (self.normalized, Some(pa))
                }
            }
        };
        PairScore {
            raw,
            raw_pair,
            normalized,
            normalized_pair,
        }
    }
}

pub fn decoherence_report(space: &HistorySpace, eps_dec: f64) -> Result<DecoherenceReport> {
    decoherence_report_with_budget(space, eps_dec, &Budget::default())
}

/// Scans every unordered pair of distinct full histories once.
pub fn decoherence_report_with_budget(
    space: &HistorySpace,
    eps_dec: f64,
    budget: &Budget,
) -> Result<DecoherenceReport> {
    let branches = full_branches(space, budget)?;
    let diagonals: Vec<f64> = branches.iter().map(|(_, b)| b.measure()).collect();
    let tol = space.tol;
    let n = branches.len();
    let score = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = PairScore::none();
            for j in (i + 1)..n {
                let value = branches[i].1.overlap(&branches[j].1).norm();
                let mut s = PairScore {
                    raw: value,
                    raw_pair: (i, j),
                    normalized: 0.0,
                    normalized_pair: None,
                };
                if diagonals[i] > tol && diagonals[j] > tol {
                    s.normalized = value / (diagonals[i] * diagonals[j]).sqrt();
                    s.normalized_pair = Some((i, j));
                }
                row = row.merge(s);
            }
            row
        })
        .reduce(PairScore::none, PairScore::merge);

    let offender_idx = score
        .normalized_pair
        .or(if n > 1 { Some(score.raw_pair) } else { None });
    let offender = offender_idx.map(|(i, j)| (branches[i].0.clone(), branches[j].0.clone()));
    Ok(DecoherenceReport {
        n_histories: n,
        max_offdiag: score.raw,
        max_normalized_offdiag: score.normalized,
        tolerance: eps_dec,
        passes: score.normalized <= eps_dec,
        offender,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::c;
    use approx::assert_abs_diff_eq;

    fn ket(entries: &[f64]) -> DVector<C64> {
        DVector::from_iterator(entries.len(), entries.iter().map(|&x| c(x, 0.0)))
    }

    fn x_basis() -> ProjectiveDecomposition {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ProjectiveDecomposition::from_basis(
            &[ket(&[s, s]), ket(&[s, -s])],
            vec!["+".into(), "-".into()],
            DEFAULT_ALG_TOL,
        )
        .unwrap()
    }

    /// ρ = |0⟩⟨0|, x-basis at t₁, z-basis at t₂ (present).
    fn x_then_z() -> HistorySpace {
        HistorySpace::from_pure_state(
            vec![1, 2],
            1,
            vec![x_basis(), ProjectiveDecomposition::computational(2)],
            ket(&[1.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn single_factor_and_empty_products() {
        let space = x_then_z();
        let c = class_operator(&space, &History::event(1, 0)).unwrap();
        let p0 = space.decomposition(1).unwrap().projector(0).unwrap();
        assert_eq!(c.max_diff(p0).unwrap(), 0.0);
        let empty = class_operator(&space, &History::empty(1)).unwrap();
        assert_eq!(empty.max_diff(&Operator::identity(2)).unwrap(), 0.0);
    }

    #[test]
    fn two_time_product_is_latest_leftmost() {
        // |0⟩⟨0| · |+⟩⟨+| = (1/√2) |0⟩⟨+| = [[1/2, 1/2], [0, 0]]
        let space = x_then_z();
        let c = class_operator(&space, &History::new(0, vec![0, 0])).unwrap();
        let expected = Operator::from_real_rows(&[&[0.5, 0.5], &[0.0, 0.0]]).unwrap();
        assert!(c.max_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn out_of_range_index_rejected() {
        let space = x_then_z();
        assert!(matches!(
            class_operator(&space, &History::new(0, vec![2, 0])),
            Err(HistoriesError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            class_operator(&space, &History::new(1, vec![0, 0])),
            Err(HistoriesError::RangeOutsideGrid { .. })
        ));
    }

    #[test]
    fn enumeration_order_and_counts() {
        let three = HistorySpace::new(
            vec![0, 1, 2],
            0,
            vec![ProjectiveDecomposition::computational(2); 3],
            Operator::maximally_mixed(2),
        )
        .unwrap();
        assert_eq!(enumerate_histories(&three, three.full_range()).unwrap().count(), 8);
        let empty: Vec<_> = enumerate_histories(&three, TimeRange::empty_at(1)).unwrap().collect();
        assert_eq!(empty, vec![History::empty(1)]);

        let mixed_sizes = HistorySpace::new(
            vec![0, 1],
            0,
            vec![
                ProjectiveDecomposition::computational(3).embed(2, 1).unwrap(),
                ProjectiveDecomposition::computational(2).embed(1, 3).unwrap(),
            ],
            Operator::maximally_mixed(6),
        );
        // sizes (3, 2) at positions 0, 1 in this construction
        let space = mixed_sizes.unwrap();
        let all: Vec<Vec<usize>> = enumerate_histories(&space, space.full_range())
            .unwrap()
            .map(|h| h.outcomes().to_vec())
            .collect();
        assert_eq!(
            all,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1], vec![2, 0], vec![2, 1]]
        );
    }

    #[test]
    fn range_outside_grid_rejected() {
        let space = x_then_z();
        assert!(enumerate_histories(&space, TimeRange::new(1, 3)).is_err());
    }

    #[test]
    fn distinct_single_time_outcomes_do_not_interfere() {
        let space = x_then_z();
        let d = decoherence_functional(&space, &History::event(0, 0), &History::event(0, 1)).unwrap();
        assert_eq!(d.norm(), 0.0);
    }

    #[test]
    fn x_then_z_interference_value() {
        let space = x_then_z();
        let d = decoherence_functional(&space, &History::new(0, vec![0, 0]), &History::new(0, vec![1, 0]))
            .unwrap();
        assert_abs_diff_eq!(d.re, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(d.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_equals_segment_measure() {
        let space = x_then_z();
        for h in enumerate_histories(&space, space.full_range()).unwrap() {
            let d = decoherence_functional(&space, &h, &h).unwrap();
            assert!(d.im.abs() < 1e-15);
            assert_abs_diff_eq!(d.re, space.segment_measure(&h).unwrap(), epsilon = 1e-15);
        }
    }

    #[test]
    fn mismatched_ranges_rejected() {
        let space = x_then_z();
        let r = decoherence_functional(&space, &History::event(0, 0), &History::event(1, 0));
        assert!(matches!(r, Err(HistoriesError::Contract(_))));
    }

    #[test]
    fn report_on_x_then_z_fails() {
        let report = decoherence_report(&x_then_z(), DEFAULT_DECOHERENCE_TOL).unwrap();
        assert_eq!(report.n_histories, 4);
        assert!(!report.passes);
        assert_abs_diff_eq!(report.max_offdiag, 0.25, epsilon = 1e-15);
        assert!(report.offender.is_some());
    }

    #[test]
    fn single_time_report_passes() {
        let space = HistorySpace::from_pure_state(
            vec![0],
            0,
            vec![x_basis()],
            ket(&[1.0, 0.0]),
        )
        .unwrap();
        let report = decoherence_report(&space, DEFAULT_DECOHERENCE_TOL).unwrap();
        assert!(report.passes);
        assert_eq!(report.max_offdiag, 0.0);
    }

    #[test]
    fn budget_exceeded_is_explicit() {
        let tiny = Budget { max_bytes: 16 };
        let r = decoherence_report_with_budget(&x_then_z(), 1e-8, &tiny);
        assert!(r.unwrap_err().is_resource());
    }

    #[test]
    fn join_requires_adjacency() {
        let a = History::new(0, vec![1]);
        let b = History::new(1, vec![0, 1]);
        assert_eq!(b.join(&a).unwrap(), History::new(0, vec![1, 0, 1]));
        assert!(a.join(&History::event(2, 0)).is_err());
        assert_eq!(a.join(&History::empty(5)).unwrap(), a);
    }

    #[test]
    fn merge_overlapping_segments() {
        let a = History::new(0, vec![1, 0]);
        let b = History::new(1, vec![0, 1]);
        assert_eq!(a.merge(&b).unwrap(), Some(History::new(0, vec![1, 0, 1])));
        assert_eq!(a.merge(&History::event(1, 1)).unwrap(), None);
        assert!(a.merge(&History::event(3, 0)).is_err());
    }

    #[test]
    fn matrix_route_matches_report_route() {
        let space = x_then_z();
        let (hs, d) = decoherence_matrix(&space, &Budget::default()).unwrap();
        for (i, a) in hs.iter().enumerate() {
            for (j, b) in hs.iter().enumerate() {
                let direct = decoherence_functional(&space, a, b).unwrap();
                assert!((direct - d[(i, j)]).norm() < 1e-15);
            }
        }
    }
}
