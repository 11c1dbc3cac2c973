//! Reference scenarios: analytic branching trees, their frequency statistics,
//! and Hilbert-space realizations usable by the history engine.

mod frequency;
mod hilbert;
mod tree;

pub use frequency::{
    branch_count, count_fraction, count_fraction_exact, measure_fraction, measure_fraction_exact,
    measure_outside, measure_outside_exact, rational_to_f64, FrequencyQuery, WINDOW_SLACK,
};
pub use hilbert::{
    hilbert_bernoulli_model, hilbert_bernoulli_model_with_present, hilbert_tree_model,
    interference_qubit_model, partial_decoherence_model, partial_decoherence_reference_query,
    MAX_HILBERT_DIM, PARTIAL_DECOHERENCE_WEIGHTS,
};
pub use tree::{tree_history_measure, BranchTree};
