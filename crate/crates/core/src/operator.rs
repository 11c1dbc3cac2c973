//! Dense complex operators and the validated quantum objects built on them.
//!
//! An [`Operator`] is always square with finite entries. Stronger properties
//! (projector, density, unitary) are checked once, when an operator is
//! promoted with [`Operator::into_projector`] and friends, and remembered as
//! flags. Arithmetic never re-validates; it produces plain operators unless the
//! property is preserved structurally (tensor products of flagged factors).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{HistoriesError, Result};

pub type C64 = Complex64;

/// Default algebraic tolerance for "approximately equal" checks.
pub const DEFAULT_ALG_TOL: f64 = 1e-10;

/// Largest supported Hilbert dimension.
pub const MAX_DIM: usize = 1 << 10;

const PROJECTOR: u8 = 0b001;
const DENSITY: u8 = 0b010;
const UNITARY: u8 = 0b100;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: DMatrix<C64>,
    flags: u8,
}

impl Operator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        check_square(&matrix)?;
        let dim = matrix.nrows();
        if dim == 0 {
            return Err(HistoriesError::dimension("positive dimension", 0));
        }
        if dim > MAX_DIM {
            return Err(HistoriesError::Budget(format!(
                "dimension {dim} exceeds the supported maximum {MAX_DIM}"
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(HistoriesError::Validation(
                "operator has non-finite entries".into(),
            ));
        }
        Ok(Operator { matrix, flags: 0 })
    }

    /// Builds an operator from `dim * dim` entries in row-major order.
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(HistoriesError::dimension(
                format!("{} entries", dim * dim),
                format!("{} entries", entries.len()),
            ));
        }
        Operator::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(HistoriesError::dimension(dim, row.len()));
            }
            entries.extend(row.iter().map(|&x| c(x, 0.0)));
        }
        Operator::from_row_major(dim, &entries)
    }

    pub fn identity(dim: usize) -> Self {
        Operator {
            matrix: DMatrix::identity(dim, dim),
            flags: PROJECTOR | UNITARY,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Operator {
            matrix: DMatrix::zeros(dim, dim),
            flags: PROJECTOR,
        }
    }

    /// |ket⟩⟨bra|
    pub fn outer(ket: &DVector<C64>, bra: &DVector<C64>) -> Result<Self> {
        if ket.len() != bra.len() {
            return Err(HistoriesError::dimension(ket.len(), bra.len()));
        }
        Operator::new(ket * bra.adjoint())
    }

    /// |ψ⟩⟨ψ| for a state vector normalized within `tol`, flagged as a density.
    pub fn pure_state(psi: &DVector<C64>, tol: f64) -> Result<Self> {
        let norm_sq = psi.norm_squared();
        if (norm_sq - 1.0).abs() > tol {
            return Err(HistoriesError::Validation(format!(
                "state vector has squared norm {norm_sq}, expected 1"
            )));
        }
        let mut op = Operator::outer(psi, psi)?;
        op.flags |= DENSITY;
        Ok(op)
    }

    /// The rank-one projector onto the (normalized) direction of `v`.
    pub fn projector_onto(v: &DVector<C64>) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(HistoriesError::Validation(
                "cannot project onto the zero vector".into(),
            ));
        }
        let u = v.unscale(norm);
        let mut op = Operator::outer(&u, &u)?;
        op.flags |= PROJECTOR;
        Ok(op)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Operator {
            matrix: DMatrix::identity(dim, dim).unscale(dim as f64),
            flags: DENSITY,
        }
    }

    pub fn hadamard() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut op = Operator::from_real_rows(&[&[s, s], &[s, -s]]).expect("2x2");
        op.flags = UNITARY;
        op
    }

    pub fn pauli_x() -> Self {
        let mut op = Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("2x2");
        op.flags = UNITARY;
        op
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    /// Entries in row-major order.
    pub fn row_major(&self) -> Vec<C64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.matrix[(i, j)]);
            }
        }
        out
    }

    pub fn is_flagged_projector(&self) -> bool {
        self.flags & PROJECTOR != 0
    }

    pub fn is_flagged_density(&self) -> bool {
        self.flags & DENSITY != 0
    }

    pub fn is_flagged_unitary(&self) -> bool {
        self.flags & UNITARY != 0
    }

    pub fn into_projector(mut self, tol: f64) -> Result<Self> {
        if !self.is_flagged_projector() {
            let report = validate_projector(&self.matrix, tol)?;
            if !report.is_projector {
                return Err(HistoriesError::Validation(format!(
                    "not a projector: hermiticity violation {:e}, idempotency violation {:e}",
                    report.hermiticity_violation, report.idempotency_violation
                )));
            }
            self.flags |= PROJECTOR;
        }
        Ok(self)
    }

    pub fn into_density(mut self, tol: f64) -> Result<Self> {
        if !self.is_flagged_density() {
            let report = validate_density(&self.matrix, tol)?;
            if !report.is_density {
                return Err(HistoriesError::Validation(format!(
                    "not a density: hermiticity violation {:e}, trace {}, min eigenvalue {:e}",
                    report.hermiticity_violation, report.trace, report.min_eigenvalue
                )));
            }
            self.flags |= DENSITY;
        }
        Ok(self)
    }

    pub fn into_unitary(mut self, tol: f64) -> Result<Self> {
        if !self.is_flagged_unitary() {
            let violation = unitarity_violation(&self.matrix)?;
            if violation > tol {
                return Err(HistoriesError::Validation(format!(
                    "not unitary: max |U†U - I| = {violation:e}"
                )));
            }
            self.flags |= UNITARY;
        }
        Ok(self)
    }

    pub fn adjoint(&self) -> Operator {
        let keep = self.flags & (PROJECTOR | DENSITY | UNITARY);
        Operator {
            matrix: self.matrix.adjoint(),
            flags: keep,
        }
    }

    pub fn mul(&self, rhs: &Operator) -> Result<Operator> {
        self.check_same_dim(rhs)?;
        Ok(Operator {
            matrix: &self.matrix * &rhs.matrix,
            flags: 0,
        })
    }

    pub fn add(&self, rhs: &Operator) -> Result<Operator> {
        self.check_same_dim(rhs)?;
        Ok(Operator {
            matrix: &self.matrix + &rhs.matrix,
            flags: 0,
        })
    }

    pub fn sub(&self, rhs: &Operator) -> Result<Operator> {
        self.check_same_dim(rhs)?;
        Ok(Operator {
            matrix: &self.matrix - &rhs.matrix,
            flags: 0,
        })
    }

    pub fn scale(&self, factor: C64) -> Operator {
        Operator {
            matrix: &self.matrix * factor,
            flags: 0,
        }
    }

    /// A ⊗ B. Projector, density and unitary flags survive when both factors carry them.
    pub fn kron(&self, rhs: &Operator) -> Result<Operator> {
        let dim = self.dim() * rhs.dim();
        if dim > MAX_DIM {
            return Err(HistoriesError::Budget(format!(
                "tensor product dimension {dim} exceeds {MAX_DIM}"
            )));
        }
        Ok(Operator {
            matrix: self.matrix.kronecker(&rhs.matrix),
            flags: self.flags & rhs.flags,
        })
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Tr(self · rhs) without forming the product.
    pub fn trace_product(&self, rhs: &Operator) -> Result<C64> {
        self.check_same_dim(rhs)?;
        Ok(trace_of_product(&self.matrix, &rhs.matrix))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        max_norm(&self.matrix)
    }

    /// Max-norm distance to another operator.
    pub fn max_diff(&self, rhs: &Operator) -> Result<f64> {
        self.check_same_dim(rhs)?;
        Ok(max_norm(&(&self.matrix - &rhs.matrix)))
    }

    /// Eigenvalues of the Hermitian part (A + A†)/2, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        hermitian_spectrum(&self.matrix)
    }

    /// Applies the operator to a vector.
    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.matrix * v
    }

    fn check_same_dim(&self, rhs: &Operator) -> Result<()> {
        if self.dim() != rhs.dim() {
            return Err(HistoriesError::dimension(self.dim(), rhs.dim()));
        }
        Ok(())
    }
}

fn check_square(m: &DMatrix<C64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(HistoriesError::dimension(
            format!("square matrix ({0}x{0})", m.nrows()),
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

pub(crate) fn max_norm(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn trace_of_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn hermiticity_violation(m: &DMatrix<C64>) -> f64 {
    max_norm(&(m - m.adjoint()))
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).unscale(2.0)
}

fn hermitian_spectrum(m: &DMatrix<C64>) -> Vec<f64> {
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Eigenpairs of the Hermitian part of `m`, with eigenvalues above `floor`.
pub(crate) fn hermitian_eigenpairs(m: &DMatrix<C64>, floor: f64) -> Vec<(f64, DVector<C64>)> {
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let mut pairs: Vec<(f64, DVector<C64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > floor)
        .map(|(k, &w)| (w, eig.eigenvectors.column(k).into_owned()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs
}

fn unitarity_violation(m: &DMatrix<C64>) -> Result<f64> {
    check_square(m)?;
    let n = m.nrows();
    Ok(max_norm(&(m.adjoint() * m - DMatrix::<C64>::identity(n, n))))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectorReport {
    pub is_projector: bool,
    /// ‖M − M†‖_max
    pub hermiticity_violation: f64,
    /// ‖M² − M‖_max
    pub idempotency_violation: f64,
}

pub fn validate_projector(m: &DMatrix<C64>, tol: f64) -> Result<ProjectorReport> {
    check_square(m)?;
    let hermiticity_violation = hermiticity_violation(m);
    let idempotency_violation = max_norm(&(m * m - m));
    Ok(ProjectorReport {
        is_projector: hermiticity_violation <= tol && idempotency_violation <= tol,
        hermiticity_violation,
        idempotency_violation,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityReport {
    pub is_density: bool,
    pub hermiticity_violation: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

pub fn validate_density(m: &DMatrix<C64>, tol: f64) -> Result<DensityReport> {
    check_square(m)?;
    let hermiticity_violation = hermiticity_violation(m);
    let tr = m.trace();
    let min_eigenvalue = hermitian_spectrum(m).first().copied().unwrap_or(0.0);
    let is_density = hermiticity_violation <= tol
        && (tr.re - 1.0).abs() <= tol
        && tr.im.abs() <= tol
        && min_eigenvalue >= -tol;
    Ok(DensityReport {
        is_density,
        hermiticity_violation,
        trace: tr.re,
        min_eigenvalue,
    })
}

/// Clamps a probability-valued quantity into [0, 1] when it lies within `tol`
/// of the interval; larger excursions are reported as errors.
pub fn clamp_probability(value: f64, tol: f64, quantity: &str) -> Result<f64> {
    if !value.is_finite() || value < -tol || value > 1.0 + tol {
        return Err(HistoriesError::NumericalIntegrity {
            quantity: quantity.to_string(),
            value,
        });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// U† P U. The result is flagged as a projector when `p` is one.
pub fn heisenberg_projector(p: &Operator, u: &Operator, tol: f64) -> Result<Operator> {
    if p.dim() != u.dim() {
        return Err(HistoriesError::dimension(p.dim(), u.dim()));
    }
    if !u.is_flagged_unitary() {
        let violation = unitarity_violation(u.matrix())?;
        if violation > tol {
            return Err(HistoriesError::Validation(format!(
                "evolution is not unitary: max |U†U - I| = {violation:e}"
            )));
        }
    }
    let conjugated = Operator::new(u.matrix().adjoint() * p.matrix() * u.matrix())?;
    let was_projector =
        p.is_flagged_projector() || validate_projector(p.matrix(), tol)?.is_projector;
    if was_projector {
        conjugated.into_projector(tol)
    } else {
        Ok(conjugated)
    }
}

/// Re Tr(P ρ).
pub fn born_probability(p: &Operator, rho: &Operator, tol: f64) -> Result<f64> {
    if p.dim() != rho.dim() {
        return Err(HistoriesError::dimension(p.dim(), rho.dim()));
    }
    if !p.is_flagged_projector() && !validate_projector(p.matrix(), tol)?.is_projector {
        return Err(HistoriesError::Validation("born_probability: P is not a projector".into()));
    }
    if !rho.is_flagged_density() && !validate_density(rho.matrix(), tol)?.is_density {
        return Err(HistoriesError::Validation(
            "born_probability: rho is not a density".into(),
        ));
    }
    clamp_probability(p.trace_product(rho)?.re, tol, "Tr(P rho)")
}

/// A complete set of mutually orthogonal projectors, one per outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveDecomposition {
    dim: usize,
    projectors: Vec<Operator>,
    labels: Vec<String>,
}

impl ProjectiveDecomposition {
    pub fn new(projectors: Vec<Operator>, labels: Vec<String>, tol: f64) -> Result<Self> {
        let first = projectors
            .first()
            .ok_or_else(|| HistoriesError::Validation("decomposition has no projectors".into()))?;
        let dim = first.dim();
        if labels.len() != projectors.len() {
            return Err(HistoriesError::dimension(
                format!("{} labels", projectors.len()),
                format!("{} labels", labels.len()),
            ));
        }
        let mut checked = Vec::with_capacity(projectors.len());
        for (k, p) in projectors.into_iter().enumerate() {
            if p.dim() != dim {
                return Err(HistoriesError::dimension(dim, p.dim()));
            }
            let p = p.into_projector(tol).map_err(|e| {
                HistoriesError::Validation(format!("projector {k}: {e}"))
            })?;
            checked.push(p);
        }
        for i in 0..checked.len() {
            for j in (i + 1)..checked.len() {
                let overlap = max_norm(&(checked[i].matrix() * checked[j].matrix()));
                if overlap > tol {
                    return Err(HistoriesError::Validation(format!(
                        "projectors {i} and {j} are not orthogonal (max |PiPj| = {overlap:e})"
                    )));
                }
            }
        }
        let mut sum = DMatrix::<C64>::zeros(dim, dim);
        for p in &checked {
            sum += p.matrix();
        }
        let deficit = max_norm(&(sum - DMatrix::<C64>::identity(dim, dim)));
        if deficit > tol {
            return Err(HistoriesError::Validation(format!(
                "projectors do not sum to the identity (max deviation {deficit:e})"
            )));
        }
        Ok(ProjectiveDecomposition {
            dim,
            projectors: checked,
            labels,
        })
    }

    /// Projectors onto the standard basis vectors, labelled "0", "1", ...
    pub fn computational(dim: usize) -> Self {
        let projectors = (0..dim)
            .map(|k| {
                let mut m = DMatrix::<C64>::zeros(dim, dim);
                m[(k, k)] = c(1.0, 0.0);
                Operator {
                    matrix: m,
                    flags: PROJECTOR,
                }
            })
            .collect();
        ProjectiveDecomposition {
            dim,
            projectors,
            labels: (0..dim).map(|k| k.to_string()).collect(),
        }
    }

    /// Rank-one projectors onto the vectors of an orthonormal basis.
    pub fn from_basis(basis: &[DVector<C64>], labels: Vec<String>, tol: f64) -> Result<Self> {
        let projectors = basis
            .iter()
            .map(Operator::projector_onto)
            .collect::<Result<Vec<_>>>()?;
        ProjectiveDecomposition::new(projectors, labels, tol)
    }

    /// Lifts a decomposition of one tensor factor to `I_left ⊗ P ⊗ I_right`.
    /// Orthogonality and completeness carry over from the local decomposition.
    pub fn embed(&self, left_dim: usize, right_dim: usize) -> Result<Self> {
        let left = Operator::identity(left_dim);
        let right = Operator::identity(right_dim);
        let projectors = self
            .projectors
            .iter()
            .map(|p| left.kron(p)?.kron(&right))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProjectiveDecomposition {
            dim: left_dim * self.dim * right_dim,
            projectors,
            labels: self.labels.clone(),
        })
    }

    /// Conjugates every projector by the evolution `u` (U† P U).
    pub fn evolve(&self, u: &Operator, tol: f64) -> Result<Self> {
        let projectors = self
            .projectors
            .iter()
            .map(|p| heisenberg_projector(p, u, tol))
            .collect::<Result<Vec<_>>>()?;
        ProjectiveDecomposition::new(projectors, self.labels.clone(), tol)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projector(&self, outcome: usize) -> Option<&Operator> {
        self.projectors.get(outcome)
    }

    pub fn projectors(&self) -> &[Operator] {
        &self.projectors
    }

    pub fn label(&self, outcome: usize) -> Option<&str> {
        self.labels.get(outcome).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}
