//! Deciding when the quantum Cramér-Rao bound of a pure N-qubit
//! estimation model is attainable with *local* measurements, constructing
//! the optimal measurement when it is, and certifying the construction by
//! an independent classical-Fisher-information computation.
//!
//! The analysis revolves around the commutator `M = [ρ(λ), L_λ]` of the
//! encoded state with its symmetric logarithmic derivative: a measurement
//! saturates the bound iff `E_x M E_x = 0` for every outcome. For product
//! measurements that collapses to a hierarchy of orthogonality conditions
//! `Tr[M ⊗_{j∈α} n^{(j)}·σ^{(j)}] = 0` over qubit subsets α, which this
//! crate checks, solves, and cross-validates:
//!
//! * [`model`] — encodings, state derivatives, QFI, SLD, `M`, and the
//!   metrological generator;
//! * [`hoc`] — the orthogonality hierarchy: residuals, the analytic
//!   three-qubit planar pipeline, a multistart numeric solver, and the
//!   covariance form for unitary encodings;
//! * [`imp`] — iterative matrix partition: structure classification of
//!   `M`, hollowizing axes, and the always-feasible classically
//!   communicating measurement tree;
//! * [`povm`] — measurements, outcome statistics, classical Fisher
//!   information, and the direct saturation check;
//! * [`catalog`] — built-in worked models and their reference
//!   measurements;
//! * [`pipeline`] / [`report`] / [`modelspec`] — the orchestration and
//!   file formats behind the command-line frontend.
//!
//! Conventions: qubit 0 is the most significant bit of every basis index,
//! structural predicates tolerate 1e-10, exact arithmetic identities
//! 1e-12 (see [`tol`]).

pub mod catalog;
pub mod error;
pub mod hoc;
pub mod imp;
pub mod linalg;
pub mod model;
pub mod modelspec;
pub mod pipeline;
pub mod povm;
pub mod report;
pub mod testkit;
pub mod tol;

pub use error::{Error, Result};
pub use hoc::{
    covariance_check, hoc_residual, hoc_solve_numeric, solve_planar_three_qubit, AxisAssignment,
    HocReport, SolveOptions, Verdict,
};
pub use imp::{classify_m, ghz_extract, lmcc_build, structure_measurement, LmccTree, MKind};
pub use linalg::{BlochVector, CMatrix, CVector, StateVector};
pub use model::{Encoding, FdScheme, Generator, MMatrix, Model, Segment};
pub use modelspec::{parse_model_spec, ParsedModel};
pub use pipeline::{analyze, lambda_grid, sweep, PipelineOptions, Report};
pub use povm::{
    cfi, outcome_probabilities, reduce_to_projective, saturation_check, LocalMeasurement,
    LocalPovm, Measurement, PovmOutcome,
};
