//! Agnostic learning of phase states by boosting weak parity learners,
//! simulated on dense statevectors.

// NaN must fail the parameter checks, so several guards use negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod access;
pub mod analysis;
pub mod boosting;
pub mod concepts;
pub mod distributional;
pub mod error;
pub mod experiment;
pub mod learners;
pub mod statevec;
pub mod weaklearn;

pub use access::{CopyLedger, CopySource, OracleMode};
pub use boosting::{agnostic_boost, BoostResult, BoostingConfig, ParityDecomposition, StopReason};
pub use concepts::{BooleanConcept, FourierSpectrum};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, ResultRecord, Task};
pub use statevec::{ParityLabel, ParitySpan, ProjectionReport, StateVector};
pub use weaklearn::{MansourConstants, WeakLearner};
