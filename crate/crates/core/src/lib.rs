//! Decoherent-histories probability engine.
//!
//! * [`operator`]: dense complex operators, projectors, densities, the Born rule
//! * [`history`]: history spaces, class operators, the decoherence functional
//! * [`probability`]: conditional, minimalist and fatalist probabilities,
//!   retrodictive chance and the past-averaged mixture ρ_mix
//! * [`models`]: branching trees, count-vs-measure statistics, reference spaces
//! * [`ergodic`]: time-average measures along discrete dynamical maps
//! * [`config`] and [`cli`]: model files and the `histories` command line

pub mod cli;
pub mod config;
pub mod ergodic;
pub mod error;
pub mod history;
pub mod models;
pub mod operator;
pub mod output;
pub mod probability;

pub use error::{HistoriesError, Result};
pub use history::{
    class_operator, decoherence_functional, decoherence_matrix, decoherence_report,
    decoherence_report_with_budget, enumerate_histories, Branch, Budget, DecoherenceReport,
    History, HistorySpace, TimeRange, DEFAULT_DECOHERENCE_TOL,
};
pub use operator::{
    born_probability, heisenberg_projector, validate_density, validate_projector, Operator,
    ProjectiveDecomposition, C64, DEFAULT_ALG_TOL,
};
pub use probability::{
    absolute_measure, absolute_measures, chance_of_present, compare_views, compare_views_with_tolerance,
    conditional_probability, fatalist_future, future_expectation_in_state, minimalist_future,
    retrodictive_chance, rho_mix, ViewComparison,
};
