//! Model configuration files (TOML).
//!
//! ```toml
//! model = "custom"          # bernoulli | partial-decoherence | qubit-xz | tree | custom
//! tolerance = 1e-10         # optional algebraic tolerance
//!
//! [bernoulli]
//! n = 4
//! p = 0.5
//! present = 0
//!
//! [partial-decoherence]
//! delta = 0.5
//!
//! [tree]
//! n = 20
//! weights = [0.5, 0.5]
//!
//! [custom]
//! dim = 2
//! present = 1               # grid position of t0
//! times = [1, 2]            # optional; defaults to position - present
//! rho = "zero"              # or { matrix = [[re, im], ...] } / { vector = [[re, im], ...] }
//!
//! [[custom.decomposition]]
//! projectors = [[[0.5, 0.0], [0.5, 0.0], [0.5, 0.0], [0.5, 0.0]],
//!               [[0.5, 0.0], [-0.5, 0.0], [-0.5, 0.0], [0.5, 0.0]]]
//! labels = ["+", "-"]
//!
//! [[custom.decomposition]]
//! basis = "computational"
//! ```
//!
//! Matrices are row-major lists of `[re, im]` pairs. Named states: `zero`,
//! `plus` (uniform superposition), `maximally-mixed`, `basis:K`.
//! A decomposition may carry `unitary = [...]`, in which case each projector
//! is replaced by U†PU.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{HistoriesError, Result};
use crate::history::HistorySpace;
use crate::models::{
    hilbert_bernoulli_model_with_present, hilbert_tree_model, interference_qubit_model,
    partial_decoherence_model, BranchTree,
};
use crate::operator::{c, Operator, ProjectiveDecomposition, C64, DEFAULT_ALG_TOL};

pub type Pair = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ModelConfig {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bernoulli: Option<BernoulliSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial_decoherence: Option<PartialDecoherenceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BernoulliSection {
    pub n: usize,
    pub p: f64,
    #[serde(default)]
    pub present: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialDecoherenceSection {
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSection {
    pub n: usize,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub present: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSection {
    pub dim: usize,
    pub present: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<i64>>,
    pub rho: StateSpec,
    pub decomposition: Vec<DecompositionSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Matrix { matrix: Vec<Pair> },
    Vector { vector: Vec<Pair> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projectors: Option<Vec<Vec<Pair>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<Vec<Pair>>,
}

/// A model resolved from a config file or from command-line flags.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    Bernoulli { n: usize, p: f64, present: usize },
    PartialDecoherence { delta: f64 },
    QubitXz,
    Tree { n: usize, weights: Vec<f64>, present: usize },
    Custom(CustomSection),
}

fn config_err(msg: impl Into<String>) -> HistoriesError {
    HistoriesError::Config(msg.into())
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        let missing = |section: &str| config_err(format!("model \"{}\" needs a [{section}] section", self.model));
        match self.model.as_str() {
            "bernoulli" => {
                let s = self.bernoulli.as_ref().ok_or_else(|| missing("bernoulli"))?;
                Ok(ModelSpec::Bernoulli {
                    n: s.n,
                    p: s.p,
                    present: s.present,
                })
            }
            "partial-decoherence" => {
                let s = self
                    .partial_decoherence
                    .as_ref()
                    .ok_or_else(|| missing("partial-decoherence"))?;
                Ok(ModelSpec::PartialDecoherence { delta: s.delta })
            }
            "qubit-xz" => Ok(ModelSpec::QubitXz),
            "tree" => {
                let s = self.tree.as_ref().ok_or_else(|| missing("tree"))?;
                Ok(ModelSpec::Tree {
                    n: s.n,
                    weights: s.weights.clone(),
                    present: s.present,
                })
            }
            "custom" => Ok(ModelSpec::Custom(
                self.custom.clone().ok_or_else(|| missing("custom"))?,
            )),
            other => Err(config_err(format!("unknown model \"{other}\""))),
        }
    }

    pub fn build_space(&self) -> Result<HistorySpace> {
        let tol = self.tolerance.unwrap_or(DEFAULT_ALG_TOL);
        self.spec()?.build_space(tol)
    }
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Bernoulli { .. } => "bernoulli",
            ModelSpec::PartialDecoherence { .. } => "partial-decoherence",
            ModelSpec::QubitXz => "qubit-xz",
            ModelSpec::Tree { .. } => "tree",
            ModelSpec::Custom(_) => "custom",
        }
    }

    pub fn build_space(&self, tol: f64) -> Result<HistorySpace> {
        let space = match self {
            ModelSpec::Bernoulli { n, p, present } => hilbert_bernoulli_model_with_present(*n, *p, *present)?,
            ModelSpec::PartialDecoherence { delta } => partial_decoherence_model(*delta)?,
            ModelSpec::QubitXz => interference_qubit_model(),
            ModelSpec::Tree { n, weights, present } => {
                hilbert_tree_model(&BranchTree::uniform(*n, weights.clone())?, *present)?
            }
            ModelSpec::Custom(custom) => return custom.build(tol),
        };
        Ok(space.with_tolerance(tol))
    }
}

fn pairs_to_complex(pairs: &[Pair]) -> Vec<C64> {
    pairs.iter().map(|[re, im]| c(*re, *im)).collect()
}

fn matrix_from_pairs(dim: usize, pairs: &[Pair], what: &str) -> Result<Operator> {
    Operator::from_row_major(dim, &pairs_to_complex(pairs))
        .map_err(|e| config_err(format!("{what}: {e}")))
}

/// Row-major `[re, im]` pairs.
pub fn operator_to_pairs(op: &Operator) -> Vec<Pair> {
    op.row_major().into_iter().map(|z| [z.re, z.im]).collect()
}

impl StateSpec {
    pub fn build(&self, dim: usize, tol: f64) -> Result<Operator> {
        match self {
            StateSpec::Named(name) => named_state(name, dim, tol),
            StateSpec::Matrix { matrix } => matrix_from_pairs(dim, matrix, "rho")?.into_density(tol),
            StateSpec::Vector { vector } => {
                if vector.len() != dim {
                    return Err(config_err(format!(
                        "rho vector has {} entries, expected {dim}",
                        vector.len()
                    )));
                }
                let psi = DVector::from_vec(pairs_to_complex(vector));
                Operator::pure_state(&psi, tol)
            }
        }
    }
}

fn named_state(name: &str, dim: usize, tol: f64) -> Result<Operator> {
    let basis = |k: usize| {
        if k >= dim {
            return Err(config_err(format!("basis state {k} outside dimension {dim}")));
        }
        let mut v = DVector::<C64>::zeros(dim);
        v[k] = c(1.0, 0.0);
        Operator::pure_state(&v, tol)
    };
    match name {
        "zero" => basis(0),
        "plus" => {
            let amp = 1.0 / (dim as f64).sqrt();
            Operator::pure_state(&DVector::from_element(dim, c(amp, 0.0)), tol)
        }
        "maximally-mixed" => Ok(Operator::maximally_mixed(dim)),
        other => match other.strip_prefix("basis:") {
            Some(k) => basis(k.parse().map_err(|_| config_err(format!("bad basis index in \"{other}\"")))?),
            None => Err(config_err(format!("unknown named state \"{other}\""))),
        },
    }
}

impl DecompositionSpec {
    pub fn build(&self, dim: usize, tol: f64, position: usize) -> Result<ProjectiveDecomposition> {
        let at = |e: HistoriesError| config_err(format!("decomposition {position}: {e}"));
        let base = match (&self.basis, &self.projectors) {
            (Some(b), None) if b == "computational" => {
                let mut d = ProjectiveDecomposition::computational(dim);
                if let Some(labels) = &self.labels {
                    d = ProjectiveDecomposition::new(d.projectors().to_vec(), labels.clone(), tol).map_err(at)?;
                }
                d
            }
            (Some(b), None) => return Err(config_err(format!("decomposition {position}: unknown basis \"{b}\""))),
            (None, Some(list)) => {
                let projectors = list
                    .iter()
                    .enumerate()
                    .map(|(k, m)| matrix_from_pairs(dim, m, &format!("decomposition {position} projector {k}")))
                    .collect::<Result<Vec<_>>>()?;
                let labels = self
                    .labels
                    .clone()
                    .unwrap_or_else(|| (0..projectors.len()).map(|k| k.to_string()).collect());
                ProjectiveDecomposition::new(projectors, labels, tol).map_err(at)?
            }
            _ => {
                return Err(config_err(format!(
                    "decomposition {position}: give exactly one of `basis` or `projectors`"
                )))
            }
        };
        match &self.unitary {
            Some(u) => {
                let u = matrix_from_pairs(dim, u, &format!("decomposition {position} unitary"))?;
                base.evolve(&u, tol).map_err(at)
            }
            None => Ok(base),
        }
    }

    pub fn from_decomposition(d: &ProjectiveDecomposition) -> Self {
        DecompositionSpec {
            basis: None,
            projectors: Some(d.projectors().iter().map(operator_to_pairs).collect()),
            labels: Some(d.labels().to_vec()),
            unitary: None,
        }
    }
}

impl CustomSection {
    pub fn build(&self, tol: f64) -> Result<HistorySpace> {
        if self.decomposition.is_empty() {
            return Err(config_err("custom model needs at least one [[custom.decomposition]]"));
        }
        let times = self.times.clone().unwrap_or_else(|| {
            (0..self.decomposition.len() as i64)
                .map(|k| k - self.present as i64)
                .collect()
        });
        let decompositions = self
            .decomposition
            .iter()
            .enumerate()
            .map(|(k, d)| d.build(self.dim, tol, k))
            .collect::<Result<Vec<_>>>()?;
        let rho = self.rho.build(self.dim, tol)?;
        HistorySpace::new_with_tolerance(times, self.present, decompositions, rho, tol)
    }

    /// Explicit description of an existing space (every matrix written out).
    pub fn from_space(space: &HistorySpace) -> Self {
        CustomSection {
            dim: space.dim(),
            present: space.present(),
            times: Some(space.times().to_vec()),
            rho: StateSpec::Matrix {
                matrix: operator_to_pairs(space.rho()),
            },
            decomposition: space
                .decompositions()
                .iter()
                .map(DecompositionSpec::from_decomposition)
                .collect(),
        }
    }
}

/// Serializes any space as a `model = "custom"` config.
pub fn space_to_config(space: &HistorySpace) -> ModelConfig {
    ModelConfig {
        model: "custom".into(),
        tolerance: Some(space.tol()),
        bernoulli: None,
        partial_decoherence: None,
        tree: None,
        custom: Some(CustomSection::from_space(space)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::decoherence_report;

    const XZ: &str = r#"
model = "custom"

[custom]
dim = 2
present = 1
times = [1, 2]
rho = "zero"

[[custom.decomposition]]
projectors = [[[0.5, 0.0], [0.5, 0.0], [0.5, 0.0], [0.5, 0.0]],
              [[0.5, 0.0], [-0.5, 0.0], [-0.5, 0.0], [0.5, 0.0]]]
labels = ["+", "-"]

[[custom.decomposition]]
basis = "computational"
"#;

    #[test]
    fn custom_config_builds_interference_space() {
        let space = ModelConfig::parse(XZ).unwrap().build_space().unwrap();
        assert_eq!(space.times(), &[1, 2]);
        let report = decoherence_report(&space, 1e-8).unwrap();
        assert!((report.max_offdiag - 0.25).abs() < 1e-15);
    }

    #[test]
    fn named_builders() {
        let cfg = ModelConfig::parse("model = \"bernoulli\"\n[bernoulli]\nn = 3\np = 0.5\n").unwrap();
        assert_eq!(cfg.build_space().unwrap().dim(), 8);
        let cfg = ModelConfig::parse("model = \"partial-decoherence\"\n[partial-decoherence]\ndelta = 0.5\n").unwrap();
        assert_eq!(cfg.build_space().unwrap().len(), 4);
        let cfg = ModelConfig::parse("model = \"tree\"\n[tree]\nn = 2\nweights = [0.2, 0.3, 0.5]\n").unwrap();
        assert_eq!(cfg.build_space().unwrap().dim(), 9);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(ModelConfig::parse("model = 3"), Err(HistoriesError::Config(_))));
        let cfg = ModelConfig::parse("model = \"bernoulli\"").unwrap();
        assert!(matches!(cfg.build_space(), Err(HistoriesError::Config(_))));
        let cfg = ModelConfig::parse("model = \"nope\"").unwrap();
        assert!(cfg.build_space().is_err());
        assert!(ModelConfig::parse("model = \"custom\"\nunknown = 1").is_err());
    }

    #[test]
    fn invalid_projector_in_config() {
        let bad = XZ.replace("[-0.5, 0.0], [-0.5, 0.0]", "[0.5, 0.0], [0.5, 0.0]");
        let err = ModelConfig::parse(&bad).unwrap().build_space().unwrap_err();
        assert!(matches!(err, HistoriesError::Config(_)));
    }

    #[test]
    fn unitary_is_applied_in_heisenberg_form() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let text = format!(
            "model = \"custom\"\n[custom]\ndim = 2\npresent = 0\nrho = \"zero\"\n\
             [[custom.decomposition]]\nbasis = \"computational\"\n\
             unitary = [[{s}, 0.0], [{s}, 0.0], [{s}, 0.0], [{m}, 0.0]]\n",
            m = -s
        );
        let space = ModelConfig::parse(&text).unwrap().build_space().unwrap();
        let p0 = space.decomposition(0).unwrap().projector(0).unwrap();
        assert!((p0.entry(0, 1).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn export_and_reload_preserves_space() {
        let space = partial_decoherence_model(0.5).unwrap();
        let text = space_to_config(&space).to_toml().unwrap();
        let reloaded = ModelConfig::parse(&text).unwrap().build_space().unwrap();
        assert_eq!(reloaded.times(), space.times());
        assert_eq!(reloaded.rho().max_diff(space.rho()).unwrap(), 0.0);
        let a = decoherence_report(&space, 1e-8).unwrap();
        let b = decoherence_report(&reloaded, 1e-8).unwrap();
        assert!((a.max_normalized_offdiag - b.max_normalized_offdiag).abs() < 1e-14);
    }
}
