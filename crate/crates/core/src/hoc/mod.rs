//! Hierarchy of orthogonality conditions: a local measurement with axes
//! `n^{(j)}` saturates the bound iff `Tr[M ⊗_{j∈α} n^{(j)}·σ^{(j)}] = 0`
//! for every non-empty qubit subset α. This module evaluates those traces,
//! extracts the level-1 plane constraints, runs the analytic three-qubit
//! planar pipeline and the multistart numeric search, and provides the
//! covariance form of the conditions for unitary encodings.

mod numeric;
mod planar;

pub use numeric::{hoc_solve_numeric, SolveOptions};
pub use planar::{planar_angles_from_couplings, solve_planar_three_qubit, PlanarBranch, PlanarSolution};

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    self, apply_single_qubit, bloch_decompose, max_abs, partial_trace_to_qubit, pauli_axis_op, re,
    sub_block, unitary_deviation, BlochKind, BlochVector, CMatrix, CVector, StateVector,
};
use crate::model::{Encoding, Generator, MMatrix, Model};
use crate::tol;

/// One unit Bloch axis per qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisAssignment {
    axes: Vec<BlochVector>,
}

impl AxisAssignment {
    pub fn new(axes: Vec<BlochVector>) -> Result<Self> {
        for axis in &axes {
            let norm = axis.norm();
            if (norm - 1.0).abs() > tol::IDENTITY {
                return Err(Error::NonUnitAxis { norm });
            }
        }
        Ok(Self { axes })
    }

    /// Normalizes each axis first; rejects near-zero vectors.
    pub fn normalized(axes: Vec<BlochVector>) -> Result<Self> {
        let mut out = Vec::with_capacity(axes.len());
        for axis in axes {
            let norm = axis.norm();
            if norm < 1e-12 {
                return Err(Error::NonUnitAxis { norm });
            }
            out.push(axis / norm);
        }
        Ok(Self { axes: out })
    }

    /// The same axis on every qubit.
    pub fn uniform(nqubits: usize, axis: BlochVector) -> Result<Self> {
        Self::new(vec![axis; nqubits])
    }

    pub fn all_x(nqubits: usize) -> Self {
        Self::uniform(nqubits, linalg::x_axis()).expect("unit axis")
    }

    pub fn all_z(nqubits: usize) -> Self {
        Self::uniform(nqubits, linalg::z_axis()).expect("unit axis")
    }

    /// Axes `cos(α_j) x̂ + sin(α_j) ŷ` in the X-Y plane.
    pub fn planar(angles: &[f64]) -> Self {
        Self {
            axes: angles
                .iter()
                .map(|a| BlochVector::new(a.cos(), a.sin(), 0.0))
                .collect(),
        }
    }

    pub fn nqubits(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[BlochVector] {
        &self.axes
    }

    pub fn axis(&self, qubit: usize) -> &BlochVector {
        &self.axes[qubit]
    }
}

/// All `2^N` subset traces `Tr[M ⊗_{j∈α} n^{(j)}·σ^{(j)}]`, indexed by a
/// bitmask whose bit `N-1-q` marks qubit `q` (so the mask reads like the
/// qubit string). Entry 0 is `Tr M`.
///
/// Computed by contracting one qubit at a time: each step either traces the
/// leading qubit out or inserts its axis operator first, so the whole
/// family of subsets costs O(4^N) rather than O(8^N).
pub fn subset_traces(m: &MMatrix, axes: &AxisAssignment) -> Result<Vec<Complex64>> {
    let n = m.nqubits();
    if axes.nqubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: axes.nqubits(),
        });
    }
    let ops: Vec<CMatrix> = axes
        .axes()
        .iter()
        .map(pauli_axis_op)
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![Complex64::default(); 1 << n];
    contract_subsets(m.matrix(), 0, n, 0, &ops, &mut out)?;
    Ok(out)
}

fn contract_subsets(
    w: &CMatrix,
    qubit: usize,
    nqubits: usize,
    mask: usize,
    ops: &[CMatrix],
    out: &mut [Complex64],
) -> Result<()> {
    if qubit == nqubits {
        out[mask] = w[(0, 0)];
        return Ok(());
    }
    // blocks with respect to the leading remaining qubit
    let b00 = sub_block(w, 0, 0, 0)?;
    let b01 = sub_block(w, 0, 0, 1)?;
    let b10 = sub_block(w, 0, 1, 0)?;
    let b11 = sub_block(w, 0, 1, 1)?;
    let traced = &b00 + &b11;
    contract_subsets(&traced, qubit + 1, nqubits, mask, ops, out)?;
    // Tr_q[W (n·σ)_q] over the leading qubit: Σ_{b,b'} W_{bb'} (n·σ)_{b'b}
    let s = &ops[qubit];
    let inserted = b00 * s[(0, 0)] + b01 * s[(1, 0)] + b10 * s[(0, 1)] + b11 * s[(1, 1)];
    let bit = 1 << (nqubits - 1 - qubit);
    contract_subsets(&inserted, qubit + 1, nqubits, mask | bit, ops, out)
}

/// Worst orthogonality violation: `max_α |Tr[M A_α]|` over all non-empty
/// subsets. Zero exactly when the axes satisfy the full hierarchy.
pub fn hoc_residual(m: &MMatrix, axes: &AxisAssignment) -> Result<f64> {
    let traces = subset_traces(m, axes)?;
    Ok(traces
        .iter()
        .skip(1)
        .map(|t| t.norm())
        .fold(0.0, f64::max))
}

/// The level-1 constraint vectors `m^{(j)}`, from `Tr_{j̄}(M) = i m^{(j)}·σ`.
/// An axis is admissible at level 1 iff it is orthogonal to `m^{(j)}`;
/// vanishing vectors leave the axis unconstrained. Unnormalized.
pub fn single_qubit_plane_vectors(m: &MMatrix) -> Result<Vec<BlochVector>> {
    let scale = m.max_abs().max(1.0);
    (0..m.nqubits())
        .map(|q| {
            let reduced = partial_trace_to_qubit(m.matrix(), q)?;
            if max_abs(&reduced) < tol::STRUCTURAL * scale {
                return Ok(BlochVector::zeros());
            }
            match bloch_decompose(&reduced)? {
                (BlochKind::AntiHermitian, a) => Ok(a),
                (BlochKind::Hermitian, _) => Err(Error::NotAntiHermitian {
                    deviation: linalg::hermitian_deviation(&reduced),
                }),
            }
        })
        .collect()
}

/// The 2x2 real coupling between the X-Y components of two qubit axes:
/// entries `T_pq = ½⟨{h, P_j Q_k}⟩_λ` for `P, Q ∈ {X, Y}`, where
/// `h = H - ⟨ψ₀|H|ψ₀⟩`. For axes constrained to the X-Y plane the level-2
/// condition reads `⟨α_j|T_jk|α_k⟩ = 0`.
#[derive(Debug, Clone)]
pub struct PairCoupling {
    pub j: usize,
    pub k: usize,
    pub matrix: Matrix2<f64>,
}

/// Builds `T_jk` for a constant-Hamiltonian model. Requires the level-1
/// vectors of both qubits to lie along ẑ (or vanish), which is what makes
/// the X-Y reduction valid.
pub fn pair_coupling(model: &Model, lambda: f64, j: usize, k: usize) -> Result<PairCoupling> {
    let n = model.nqubits();
    for q in [j, k] {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, nqubits: n });
        }
    }
    if j == k {
        return Err(Error::DuplicateQubit(j));
    }
    let hamiltonian = match model.encoding() {
        Encoding::Hamiltonian { hamiltonian, .. } => hamiltonian,
        _ => {
            return Err(Error::Precondition(
                "pair coupling requires a constant-Hamiltonian encoding".into(),
            ))
        }
    };
    let m = model.m_matrix(lambda)?;
    let planes = single_qubit_plane_vectors(&m)?;
    for q in [j, k] {
        if !is_z_aligned(&planes[q]) {
            return Err(Error::Precondition(format!(
                "level-1 vector of qubit {q} is not aligned with ẑ"
            )));
        }
    }

    let psi = model.encoded_state(lambda)?;
    let mean_h = linalg::expectation(hamiltonian, model.probe().amplitudes()).re;
    let h_shift = hamiltonian - CMatrix::identity(model.dim(), model.dim()) * re(mean_h);

    let xy = [linalg::pauli_x(), linalg::pauli_y()];
    let mut t = Matrix2::zeros();
    for (a, p) in xy.iter().enumerate() {
        for (b, q) in xy.iter().enumerate() {
            let pq = linalg::embed_operators(&[(j, p.clone()), (k, q.clone())], n)?;
            // ½⟨{h, A}⟩ = Re⟨h A⟩ for Hermitian h and A.
            t[(a, b)] = linalg::expectation(&(&h_shift * &pq), psi.amplitudes()).re;
        }
    }
    Ok(PairCoupling { j, k, matrix: t })
}

pub(crate) fn is_z_aligned(v: &BlochVector) -> bool {
    let norm = v.norm();
    norm < tol::STRUCTURAL || (v.x.abs().max(v.y.abs()) <= 1e-8 * norm)
}

/// Covariance form of the orthogonality conditions for unitary encodings:
/// `max_α |½⟨{A_α^{(H)}, G}⟩ - ⟨A_α^{(H)}⟩⟨G⟩|` over non-empty α, with
/// `A_α^{(H)} = U†A_αU` evaluated on the probe. Equals one quarter of
/// `hoc_residual` on the corresponding encoded-state `M`.
pub fn covariance_check(
    probe: &StateVector,
    generator: &Generator,
    axes: &AxisAssignment,
    u: &CMatrix,
) -> Result<f64> {
    let n = probe.nqubits();
    if axes.nqubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: axes.nqubits(),
        });
    }
    if u.nrows() != probe.dim() || u.ncols() != probe.dim() {
        return Err(Error::DimensionMismatch {
            expected: probe.dim(),
            got: u.nrows(),
        });
    }
    let deviation = unitary_deviation(u);
    if deviation > tol::STRUCTURAL {
        return Err(Error::NotUnitary { deviation });
    }
    if generator.matrix().nrows() != probe.dim() {
        return Err(Error::DimensionMismatch {
            expected: probe.dim(),
            got: generator.matrix().nrows(),
        });
    }

    let ops: Vec<CMatrix> = axes
        .axes()
        .iter()
        .map(pauli_axis_op)
        .collect::<Result<Vec<_>>>()?;
    let evolved = u * probe.amplitudes();
    let evolved_g = u * (generator.matrix() * probe.amplitudes());
    let mean_g = generator.mean(probe);

    let mut worst = 0.0f64;
    // Depth-first over subsets, reusing partially applied vectors:
    // w = A_α |Uψ₀⟩ for the subset chosen so far.
    let mut stack: Vec<(usize, bool, CVector)> = vec![(0, false, evolved.clone())];
    while let Some((qubit, nonempty, w)) = stack.pop() {
        if qubit == n {
            if nonempty {
                let cov = w.dotc(&evolved_g).re - w.dotc(&evolved).re * mean_g;
                worst = worst.max(cov.abs());
            }
            continue;
        }
        let applied = apply_single_qubit(&ops[qubit], qubit, &w)?;
        stack.push((qubit + 1, nonempty, w));
        stack.push((qubit + 1, true, applied));
    }
    Ok(worst)
}

/// Analytic infeasibility certificate from the pairwise couplings.
///
/// When at least three qubits are forced onto their X-Y planes by nonzero
/// ẑ-aligned level-1 vectors, and every pair coupling among them is a
/// nonzero multiple of the identity, each level-2 condition reduces to
/// `cos(β_j - β_k) = 0`. Three angles cannot be pairwise anti-aligned in
/// that sense, so no local measurement exists.
#[derive(Debug, Clone)]
pub struct PairwiseCertificate {
    /// The planar-constrained qubits involved.
    pub qubits: Vec<usize>,
    /// `(j, k, c)` with `T_jk = c·I`.
    pub couplings: Vec<(usize, usize, f64)>,
}

impl std::fmt::Display for PairwiseCertificate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let qubits: Vec<String> = self.qubits.iter().map(|q| q.to_string()).collect();
        write!(
            f,
            "level-1 conditions force qubits {{{}}} onto their X-Y planes and every pair \
             coupling among them is a nonzero multiple of the identity, so each level-2 \
             condition requires cos(β_j - β_k) = 0 for planar angles β; no assignment of \
             three or more angles satisfies that set of constraints",
            qubits.join(",")
        )
    }
}

/// Searches for the pairwise-cosine obstruction. Returns `Ok(None)` when
/// the structure does not apply (which proves nothing either way).
pub fn planar_pair_certificate(model: &Model, lambda: f64) -> Result<Option<PairwiseCertificate>> {
    if !matches!(model.encoding(), Encoding::Hamiltonian { .. }) {
        return Ok(None);
    }
    let m = model.m_matrix(lambda)?;
    if m.is_negligible() {
        return Ok(None);
    }
    let planes = single_qubit_plane_vectors(&m)?;
    let scale = m.max_abs().max(1.0);
    let forced: Vec<usize> = (0..model.nqubits())
        .filter(|q| planes[*q].norm() > 1e-9 * scale && is_z_aligned(&planes[*q]))
        .collect();
    if forced.len() < 3 {
        return Ok(None);
    }
    let mut couplings = Vec::new();
    for (i, &j) in forced.iter().enumerate() {
        for &k in &forced[i + 1..] {
            let t = match pair_coupling(model, lambda, j, k) {
                Ok(pc) => pc.matrix,
                Err(_) => return Ok(None),
            };
            let c = (t[(0, 0)] + t[(1, 1)]) / 2.0;
            let t_scale = t.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1.0);
            let identity_dev = (t - Matrix2::identity() * c)
                .iter()
                .fold(0.0f64, |acc, x| acc.max(x.abs()));
            if identity_dev > 1e-9 * t_scale || c.abs() <= 1e-6 * t_scale {
                return Ok(None);
            }
            couplings.push((j, k, c));
        }
    }
    Ok(Some(PairwiseCertificate {
        qubits: forced,
        couplings,
    }))
}

/// Confidence attached to a feasibility report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// A saturating axis assignment was found and verified.
    Feasible,
    /// No assignment found; the best residual is small enough that the
    /// search may simply have missed a solution.
    Inconclusive,
    /// The best residual stayed large across all restarts. Evidence of
    /// infeasibility, not a proof — only an analytic certificate proves it.
    NumericInfeasible,
}

/// Outcome of a feasibility solve.
#[derive(Debug, Clone)]
pub struct HocReport {
    pub feasible: bool,
    pub verdict: Verdict,
    /// Saturating axes, present exactly when `feasible`.
    pub axes: Option<AxisAssignment>,
    /// Worst orthogonality residual of the best axes found.
    pub residual: f64,
    /// Analytic infeasibility note, when one applies.
    pub certificate: Option<String>,
    pub restarts_used: usize,
}

impl HocReport {
    pub(crate) fn feasible_with(axes: AxisAssignment, residual: f64, restarts_used: usize) -> Self {
        Self {
            feasible: true,
            verdict: Verdict::Feasible,
            axes: Some(axes),
            residual,
            certificate: None,
            restarts_used,
        }
    }
}
