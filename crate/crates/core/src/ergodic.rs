//! Time-average measures of regions along trajectories of discrete maps on
//! the unit interval or unit square (both with wraparound).
//!
//! Everything here is finite-T. Nothing extrapolates to the infinite-time
//! limit; the returned values always carry the step count that produced them.

use std::fmt;
use std::sync::Arc;

use crate::error::{HistoriesError, Result};

/// Fractional part of the golden ratio, (√5 − 1)/2.
pub const GOLDEN_ROTATION: f64 = 0.618_033_988_749_894_8;

type StepFn = dyn Fn(&mut [f64]) + Send + Sync;

/// A map x ↦ U(x) on `[0, 1)^dim` together with an initial point.
#[derive(Clone)]
pub struct DiscreteMap {
    name: String,
    dim: usize,
    step: Arc<StepFn>,
    x0: Vec<f64>,
}

impl fmt::Debug for DiscreteMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteMap")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("x0", &self.x0)
            .finish()
    }
}

fn check_point(dim: usize, x: &[f64]) -> Result<()> {
    if x.len() != dim {
        return Err(HistoriesError::dimension(dim, x.len()));
    }
    if x.iter().any(|v| !(0.0..1.0).contains(v)) {
        return Err(HistoriesError::Validation(format!(
            "initial point {x:?} outside the unit box"
        )));
    }
    Ok(())
}

fn wrap(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl DiscreteMap {
    /// A user-supplied step. Outputs are wrapped back into the unit box.
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        x0: Vec<f64>,
        step: impl Fn(&mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(HistoriesError::Unsupported(format!(
                "state space dimension {dim}; only the unit interval and square are supported"
            )));
        }
        check_point(dim, &x0)?;
        Ok(DiscreteMap {
            name: name.into(),
            dim,
            step: Arc::new(step),
            x0,
        })
    }

    /// x ↦ x + α (mod 1), componentwise.
    pub fn rotation(alpha: Vec<f64>, x0: Vec<f64>) -> Result<Self> {
        let dim = alpha.len();
        DiscreteMap::custom("rotation", dim, x0, move |x| {
            for (xi, a) in x.iter_mut().zip(&alpha) {
                *xi += a;
            }
        })
    }

    pub fn golden_rotation(x0: f64) -> Result<Self> {
        DiscreteMap::rotation(vec![GOLDEN_ROTATION], vec![x0])
    }

    pub fn identity(dim: usize, x0: Vec<f64>) -> Result<Self> {
        DiscreteMap::custom("identity", dim, x0, |_| {})
    }

    pub fn with_x0(&self, x0: Vec<f64>) -> Result<Self> {
        check_point(self.dim, &x0)?;
        Ok(DiscreteMap {
            x0,
            ..self.clone()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// U^0(x₀), U^1(x₀), ... without end.
    pub fn trajectory(&self) -> Trajectory<'_> {
        Trajectory {
            map: self,
            current: self.x0.clone(),
        }
    }
}

pub struct Trajectory<'a> {
    map: &'a DiscreteMap,
    current: Vec<f64>,
}

impl Iterator for Trajectory<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let out = self.current.clone();
        (self.map.step)(&mut self.current);
        for v in self.current.iter_mut() {
            *v = wrap(*v);
        }
        Some(out)
    }
}

/// Half-open axis-aligned box `[lo, hi)` in the unit box.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(HistoriesError::dimension(lo.len(), hi.len()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(0.0..=1.0).contains(l) || !(0.0..=1.0).contains(h) || l > h) {
            return Err(HistoriesError::Validation(format!(
                "box [{lo:?}, {hi:?}) is not inside the unit box"
            )));
        }
        Ok(AxisBox { lo, hi })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *l <= *v && *v < *h)
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }
}

/// A finite union of pairwise disjoint boxes; `χ_A` is [`Region::indicator`].
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    dim: usize,
    boxes: Vec<AxisBox>,
}

fn boxes_overlap(a: &AxisBox, b: &AxisBox) -> bool {
    a.lo.iter()
        .zip(&a.hi)
        .zip(b.lo.iter().zip(&b.hi))
        .all(|((al, ah), (bl, bh))| al < bh && bl < ah)
}

impl Region {
    pub fn new(boxes: Vec<AxisBox>) -> Result<Self> {
        let dim = boxes
            .first()
            .map(|b| b.lo.len())
            .ok_or_else(|| HistoriesError::Validation("region needs at least one box".into()))?;
        if boxes.iter().any(|b| b.lo.len() != dim) {
            return Err(HistoriesError::Validation("boxes of mixed dimension".into()));
        }
        for i in 0..boxes.len() {
            for j in (i + 1)..boxes.len() {
                if boxes_overlap(&boxes[i], &boxes[j]) {
                    return Err(HistoriesError::Validation(format!(
                        "boxes {i} and {j} of the region overlap"
                    )));
                }
            }
        }
        Ok(Region { dim, boxes })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Region::new(vec![AxisBox::new(vec![lo], vec![hi])?])
    }

    pub fn whole(dim: usize) -> Self {
        Region {
            dim,
            boxes: vec![AxisBox {
                lo: vec![0.0; dim],
                hi: vec![1.0; dim],
            }],
        }
    }

    /// Union with a region disjoint from this one.
    pub fn union(&self, other: &Region) -> Result<Region> {
        let mut boxes = self.boxes.clone();
        boxes.extend(other.boxes.iter().cloned());
        Region::new(boxes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indicator(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }

    /// Lebesgue measure of the region.
    pub fn volume(&self) -> f64 {
        self.boxes.iter().map(AxisBox::volume).sum()
    }
}

/// Count of visits to a region over the first `steps` points of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimeAverage {
    pub hits: u64,
    pub steps: u64,
}

impl TimeAverage {
    pub fn value(&self) -> f64 {
        self.hits as f64 / self.steps as f64
    }
}

fn check_steps(steps: u64) -> Result<()> {
    if steps == 0 {
        return Err(HistoriesError::Validation("step count must be at least 1".into()));
    }
    Ok(())
}

/// (1/T) Σ_{t<T} χ_A(U^t(x₀)).
pub fn time_average_measure(map: &DiscreteMap, region: &Region, steps: u64) -> Result<TimeAverage> {
    check_steps(steps)?;
    if region.dim() != map.dim() {
        return Err(HistoriesError::dimension(map.dim(), region.dim()));
    }
    let hits = map
        .trajectory()
        .take(steps as usize)
        .filter(|x| region.indicator(x))
        .count() as u64;
    Ok(TimeAverage { hits, steps })
}

/// Running estimate at each requested checkpoint, from a single trajectory.
pub fn time_average_series(
    map: &DiscreteMap,
    region: &Region,
    checkpoints: &[u64],
) -> Result<Vec<TimeAverage>> {
    if region.dim() != map.dim() {
        return Err(HistoriesError::dimension(map.dim(), region.dim()));
    }
    let mut sorted = checkpoints.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if let Some(&first) = sorted.first() {
        check_steps(first)?;
    }
    let mut out = Vec::with_capacity(sorted.len());
    let mut hits = 0u64;
    let mut next = sorted.iter().peekable();
    for (t, x) in map.trajectory().enumerate() {
        let Some(&&target) = next.peek() else { break };
        if region.indicator(&x) {
            hits += 1;
        }
        if t as u64 + 1 == target {
            out.push(TimeAverage { hits, steps: target });
            next.next();
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalDensity {
    pub bins_per_axis: usize,
    pub steps: u64,
    /// Fraction of time in each cell, row-major over axes.
    pub masses: Vec<f64>,
    /// mass / cell volume
    pub densities: Vec<f64>,
}

/// Histogram of a trajectory over `bins_per_axis^dim` equal cells.
pub fn empirical_density(map: &DiscreteMap, bins_per_axis: usize, steps: u64) -> Result<EmpiricalDensity> {
    check_steps(steps)?;
    if bins_per_axis == 0 {
        return Err(HistoriesError::Validation("need at least one bin".into()));
    }
    let cells = bins_per_axis.pow(map.dim() as u32);
    let mut counts = vec![0u64; cells];
    for x in map.trajectory().take(steps as usize) {
        let idx = x.iter().fold(0usize, |acc, v| {
            let b = ((v * bins_per_axis as f64) as usize).min(bins_per_axis - 1);
            acc * bins_per_axis + b
        });
        counts[idx] += 1;
    }
    let masses: Vec<f64> = counts.iter().map(|&k| k as f64 / steps as f64).collect();
    let densities = masses.iter().map(|m| m * cells as f64).collect();
    Ok(EmpiricalDensity {
        bins_per_axis,
        steps,
        masses,
        densities,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityReport {
    pub estimates: Vec<f64>,
    /// max_{i,j} |estimate_i − estimate_j|
    pub spread: f64,
}

/// Compares time averages started from several initial points.
pub fn x0_sensitivity(
    map: &DiscreteMap,
    region: &Region,
    steps: u64,
    initial_points: &[Vec<f64>],
) -> Result<SensitivityReport> {
    if initial_points.is_empty() {
        return Err(HistoriesError::Validation("need at least one initial point".into()));
    }
    let estimates = initial_points
        .iter()
        .map(|x0| Ok(time_average_measure(&map.with_x0(x0.clone())?, region, steps)?.value()))
        .collect::<Result<Vec<_>>>()?;
    let max = estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = estimates.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SensitivityReport {
        spread: max - min,
        estimates,
    })
}
