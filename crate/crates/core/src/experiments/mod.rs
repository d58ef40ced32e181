//! Manufactured-solution experiments, convergence tables and the
//! verification suite.

pub mod errors;
pub mod manufactured;
pub mod study;
pub mod verify;

pub use errors::{coefficient_errors, compute_errors, ErrorReport};
pub use manufactured::{ManufacturedProblem, Quantity};
pub use study::{
    convergence_study, convergence_study_with, order, run_level, ConvergenceTable, LevelResult, StudyConfig,
};
pub use verify::{run_verification_suite, CheckResult, VerificationReport, VerifyConfig};
