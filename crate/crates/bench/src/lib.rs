//! Fixtures shared by the benchmarks.

use phaseboost::concepts::{random_concept, ConceptSpec, DtVariableRule};
use phaseboost::experiment::make_corrupted_state;
use phaseboost::{Result, StateVector};

/// Phase state of a random size-`size` tree on `n` qubits, mixed with junk so
/// that its best tree fidelity is `opt_lb`.
pub fn corrupted_tree_state(n: usize, size: usize, opt_lb: f64, seed: u64) -> Result<StateVector> {
    let f = random_concept(&ConceptSpec::DecisionTree { n, size, rule: DtVariableRule::Uniform }, seed)?;
    make_corrupted_state(&f, opt_lb, seed.wrapping_add(1))
}

/// One-qubit state whose squared overlap with `|0>` is `f`.
pub fn overlap_partner(f: f64) -> Result<StateVector> {
    StateVector::from_real(1, &[f.sqrt(), (1.0 - f).sqrt()])
}
