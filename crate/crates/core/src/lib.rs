//! Matrix-free randomized trace estimation.
//!
//! Operators are applied only through matvecs. The estimator averages
//! Rayleigh quotients `wᵗAw` over random probe vectors drawn from one of four
//! distributions, and [`bounds`] gives sample sizes `N` that guarantee
//! `Pr(|tr_D^N(A) - tr(A)| <= ε tr(A)) >= 1 - δ`.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod linop;
pub mod sampler;
pub mod specialfn;
pub mod stats;

pub use bounds::{BoundReport, MatrixProperties, TolerancePair};
pub use error::{Error, Result};
pub use estimator::{estimate_trace, RunningEstimate, TraceEstimate};
pub use linop::{exact_trace, generate, matvec, GeneratorFamily, GeneratorSpec, ImplicitOperator};
pub use sampler::{spawn_substream, ProbeDistribution, SeededStream};
pub use stats::{DiagnosticsOptions, MatrixDiagnostics};
