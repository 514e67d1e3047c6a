//! Centralized tolerance constants.
//!
//! Two base scales cover the whole crate: structural predicates (is this
//! matrix Hermitian / traceless / unitary?) run at 1e-10, and exact
//! arithmetic identities at 1e-12. Dimensions stay at or below 2^10, so
//! accumulated f64 rounding sits several orders below both.

/// Structural predicates: Hermiticity, tracelessness, unitarity,
/// completeness of a POVM.
pub const STRUCTURAL: f64 = 1e-10;

/// Exact arithmetic identities: norms of states and axes, algebraic
/// round trips such as `bloch_decompose(pauli_axis_op(n)) == n`.
pub const IDENTITY: f64 = 1e-12;

/// A solved axis assignment counts as saturating when the worst
/// orthogonality residual falls below this.
pub const FEASIBILITY: f64 = 1e-9;

/// Above this best residual a multistart search reports numeric
/// infeasibility. This is evidence, not a proof; only an analytic
/// certificate proves that no local measurement exists.
pub const NUMERIC_INFEASIBLE: f64 = 1e-6;

/// `E_x M E_x` saturation residual threshold.
pub const SATURATION: f64 = 1e-9;

/// Outcome probabilities at or below this use the zero-probability
/// limit term of the classical Fisher information.
pub const PROB_FLOOR: f64 = 1e-12;

/// Threshold on `|T_12 v|` that routes the planar three-qubit solver
/// into its eigenvector fallback branch.
pub const DEGENERATE_COUPLING: f64 = 1e-10;
