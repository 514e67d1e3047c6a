//! Iterative matrix partition: recursive local basis changes that keep
//! every diagonal block of a traceless anti-Hermitian matrix traceless.
//!
//! The 2x2 matrix of block traces at a node decides the next measurement
//! axis: any axis orthogonal to its Bloch vector hollowizes both diagonal
//! sub-blocks, and one such axis always exists, so the classically
//! communicating construction never fails. The module also classifies the
//! structure of `M` (zero / diagonal / zero-diagonal) and extracts the
//! two-branch form behind diagonal `M`.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::hoc::AxisAssignment;
use crate::linalg::{
    self, axis_eigenbasis, bloch_decompose, conjugate_single_qubit, max_abs,
    partial_trace_to_qubit, sub_block, BlochKind, BlochVector, CMatrix, StateVector,
};
use crate::model::MMatrix;
use crate::tol;

/// The 2x2 matrix of block traces of a traceless anti-Hermitian operator
/// with respect to one qubit; itself traceless and anti-Hermitian. This is
/// exactly the partial trace onto that qubit.
pub fn block_trace(w: &CMatrix, qubit: usize) -> Result<CMatrix> {
    let deviation = linalg::anti_hermitian_deviation(w);
    if deviation > tol::STRUCTURAL {
        return Err(Error::NotAntiHermitian { deviation });
    }
    let trace = w.trace().norm();
    if trace > tol::STRUCTURAL {
        return Err(Error::NotTraceless { trace });
    }
    partial_trace_to_qubit(w, qubit)
}

/// A deterministic unit vector orthogonal to `a`.
///
/// Fixed rule: `ẑ` when `a = 0`; `normalize(ẑ × a)` when that cross product
/// is nondegenerate; `x̂` otherwise (i.e. when `a ∥ ẑ`).
pub fn orthogonal_axis(a: &BlochVector) -> BlochVector {
    if a.norm() < 1e-14 {
        return linalg::z_axis();
    }
    let cross = linalg::z_axis().cross(a);
    if cross.norm() > 1e-12 {
        cross.normalize()
    } else {
        linalg::x_axis()
    }
}

/// Unit normal of the common plane of the given vectors, when one exists.
///
/// Feasible iff the stacked 3xK matrix has numerical rank ≤ 2 (smallest
/// singular value below 1e-9 of the largest). The representative has a
/// non-negative ẑ component, breaking ties toward non-negative x̂.
pub fn coplanar_normal(vectors: &[BlochVector]) -> Option<BlochVector> {
    let nonzero: Vec<&BlochVector> = vectors.iter().filter(|v| v.norm() > 1e-14).collect();
    if nonzero.is_empty() {
        return Some(linalg::z_axis());
    }
    // Pad to at least three columns so the thin SVD always returns the
    // full 3x3 left basis.
    let cols = nonzero.len().max(3);
    let mat = nalgebra::DMatrix::<f64>::from_fn(3, cols, |r, c| {
        nonzero.get(c).map_or(0.0, |v| v[r])
    });
    let svd = mat.svd(true, false);
    let singulars = &svd.singular_values;
    let mut sorted: Vec<f64> = singulars.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if sorted[2] >= 1e-9 * sorted[0] {
        return None;
    }
    let u = svd.u.expect("left singular vectors requested");
    // Column of the smallest singular value spans the null space.
    let smallest = (0..3)
        .min_by(|&a, &b| singulars[a].total_cmp(&singulars[b]))
        .unwrap();
    let mut normal = Vector3::new(u[(0, smallest)], u[(1, smallest)], u[(2, smallest)]);
    if normal.z < 0.0 || (normal.z == 0.0 && normal.x < 0.0) {
        normal = -normal;
    }
    Some(normal)
}

/// Depth-N binary tree of measurement axes for local measurement with
/// classical communication: the node reached by outcome bits `k₁…k_{d-1}`
/// stores the axis for the qubit measured at step d. Exactly `2^N - 1`
/// axes in heap order (root first).
#[derive(Debug, Clone, PartialEq)]
pub struct LmccTree {
    nqubits: usize,
    order: Vec<usize>,
    axes: Vec<BlochVector>,
}

impl LmccTree {
    /// `axes` in heap order: node for step `d` (0-based) with outcome
    /// prefix `p` sits at index `2^d - 1 + p`.
    pub fn from_axes(nqubits: usize, order: Vec<usize>, axes: Vec<BlochVector>) -> Result<Self> {
        validate_order(&order, nqubits)?;
        let expected = (1usize << nqubits) - 1;
        if axes.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: axes.len(),
            });
        }
        for axis in &axes {
            let norm = axis.norm();
            if (norm - 1.0).abs() > tol::IDENTITY {
                return Err(Error::NonUnitAxis { norm });
            }
        }
        Ok(Self {
            nqubits,
            order,
            axes,
        })
    }

    /// Same axis at every node — an LMCC that never adapts, equivalent to
    /// the uniform local measurement.
    pub fn uniform(nqubits: usize, axis: BlochVector) -> Result<Self> {
        Self::from_axes(
            nqubits,
            (0..nqubits).collect(),
            vec![axis; (1 << nqubits) - 1],
        )
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    /// Measurement order: `order[d]` is the qubit measured at step `d`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn axes(&self) -> &[BlochVector] {
        &self.axes
    }

    /// Axis at step `d` given the earlier outcome bits packed into
    /// `prefix` (first outcome in the highest bit of the prefix).
    pub fn axis_at(&self, depth: usize, prefix: usize) -> &BlochVector {
        &self.axes[(1 << depth) - 1 + prefix]
    }
}

fn validate_order(order: &[usize], nqubits: usize) -> Result<()> {
    if order.len() != nqubits {
        return Err(Error::DimensionMismatch {
            expected: nqubits,
            got: order.len(),
        });
    }
    let mut seen = vec![false; nqubits];
    for &q in order {
        if q >= nqubits {
            return Err(Error::QubitOutOfRange { index: q, nqubits });
        }
        if seen[q] {
            return Err(Error::DuplicateQubit(q));
        }
        seen[q] = true;
    }
    Ok(())
}

/// Result of the LMCC construction: the tree plus the largest leaf-level
/// diagonal entry of the transformed matrix (zero up to roundoff — the
/// construction cannot fail).
#[derive(Debug, Clone)]
pub struct LmccBuild {
    pub tree: LmccTree,
    pub leaf_residual: f64,
}

/// Build a saturating LMCC tree by iterative matrix partition: at each
/// node, hollowize the block-trace Bloch vector of the next qubit, rotate
/// into that eigenbasis, and recurse into both diagonal sub-blocks.
pub fn lmcc_build(m: &MMatrix, order: &[usize]) -> Result<LmccBuild> {
    let n = m.nqubits();
    validate_order(order, n)?;
    let mut axes = vec![BlochVector::zeros(); (1 << n) - 1];
    let mut leaf_residual = 0.0f64;
    partition(m.matrix(), order, 0, 0, &mut axes, &mut leaf_residual)?;
    Ok(LmccBuild {
        tree: LmccTree::from_axes(n, order.to_vec(), axes)?,
        leaf_residual,
    })
}

fn partition(
    w: &CMatrix,
    order: &[usize],
    depth: usize,
    prefix: usize,
    axes: &mut [BlochVector],
    leaf_residual: &mut f64,
) -> Result<()> {
    let remaining = order.len() - depth;
    if remaining == 0 {
        *leaf_residual = leaf_residual.max(w[(0, 0)].norm());
        return Ok(());
    }
    // Local index of the next qubit among the ones still present: every
    // qubit measured earlier has been sliced away, so count survivors
    // with a smaller original index.
    let target = order[depth];
    let local = order[depth..]
        .iter()
        .filter(|&&q| q < target)
        .count();

    let bt = partial_trace_to_qubit(w, local)?;
    let a = if max_abs(&bt) < 1e-13 {
        BlochVector::zeros()
    } else {
        match bloch_decompose(&bt)? {
            (BlochKind::AntiHermitian, a) => a,
            (BlochKind::Hermitian, a) => {
                // Exactly zero block trace decomposes as Hermitian with a
                // vanishing vector; anything else violates the invariant.
                if a.norm() > tol::STRUCTURAL {
                    return Err(Error::NotAntiHermitian {
                        deviation: linalg::anti_hermitian_deviation(&bt),
                    });
                }
                BlochVector::zeros()
            }
        }
    };
    let axis = orthogonal_axis(&a);
    axes[(1 << depth) - 1 + prefix] = axis;

    let basis = axis_eigenbasis(&axis)?;
    let rotated = conjugate_single_qubit(&basis, local, w)?;
    for outcome in 0..2 {
        let block = sub_block(&rotated, local, outcome, outcome)?;
        partition(
            &block,
            order,
            depth + 1,
            (prefix << 1) | outcome,
            axes,
            leaf_residual,
        )?;
    }
    Ok(())
}

/// Structure classes of `M` that admit closed-form measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MKind {
    /// `M` vanishes; every measurement saturates.
    Zero,
    /// All off-diagonal entries vanish; the uniform Hadamard (all-x̂)
    /// measurement saturates, and the encoded state is GHZ-type.
    Diagonal,
    /// All diagonal entries vanish; the computational basis saturates.
    ZeroDiagonal,
    /// No special structure; defer to the orthogonality-condition solvers.
    General,
}

/// Classification record for an `M` matrix.
#[derive(Debug, Clone)]
pub struct MStructure {
    pub kind: MKind,
    /// Filled by [`ghz_extract`] when `kind` is [`MKind::Diagonal`].
    pub ghz: Option<GhzPair>,
}

/// Entry-wise structure test at tolerance 1e-10.
pub fn classify_m(m: &MMatrix) -> MStructure {
    let mat = m.matrix();
    let kind = if max_abs(mat) < tol::STRUCTURAL {
        MKind::Zero
    } else {
        let mut off = 0.0f64;
        let mut diag = 0.0f64;
        for r in 0..mat.nrows() {
            for c in 0..mat.ncols() {
                let v = mat[(r, c)].norm();
                if r == c {
                    diag = diag.max(v);
                } else {
                    off = off.max(v);
                }
            }
        }
        if off < tol::STRUCTURAL {
            MKind::Diagonal
        } else if diag < tol::STRUCTURAL {
            MKind::ZeroDiagonal
        } else {
            MKind::General
        }
    };
    MStructure { kind, ghz: None }
}

/// The two computational basis states behind a diagonal `M`, which carry
/// its `±2ic` entries.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GhzPair {
    /// Basis index with the `+2ic` diagonal entry.
    pub plus_index: usize,
    /// Basis index with the `-2ic` entry.
    pub minus_index: usize,
    /// `2c = √QFI`.
    pub weight: f64,
}

/// Extract the GHZ-type branch pair from a diagonal `M` and verify the
/// two-branch structure behind it: exactly two nonzero diagonal entries
/// `±2ic`, both branches carrying amplitude `1/√2`, and branch bitstrings
/// differing on every qubit. Violations mean the encoded state is not an
/// entangled GHZ-type state and are reported as inconsistencies.
pub fn ghz_extract(m: &MMatrix, state: &StateVector) -> Result<GhzPair> {
    let structure = classify_m(m);
    if structure.kind != MKind::Diagonal {
        return Err(Error::Precondition(format!(
            "ghz extraction requires a diagonal nonzero M, got {:?}",
            structure.kind
        )));
    }
    if state.nqubits() != m.nqubits() {
        return Err(Error::DimensionMismatch {
            expected: m.nqubits(),
            got: state.nqubits(),
        });
    }
    let mat = m.matrix();
    let dim = mat.nrows();
    let mut plus = 0usize;
    let mut minus = 0usize;
    for i in 0..dim {
        if mat[(i, i)].im > mat[(plus, plus)].im {
            plus = i;
        }
        if mat[(i, i)].im < mat[(minus, minus)].im {
            minus = i;
        }
    }
    let weight = mat[(plus, plus)].im;
    let scale = weight.abs().max(1.0);
    if (mat[(plus, plus)].im + mat[(minus, minus)].im).abs() > 1e-8 * scale {
        return Err(Error::Inconsistent(
            "diagonal entries are not an opposite pair".into(),
        ));
    }
    for i in 0..dim {
        if i != plus && i != minus && mat[(i, i)].norm() > 1e-8 * scale {
            return Err(Error::Inconsistent(
                "more than two nonzero diagonal entries".into(),
            ));
        }
    }
    let amp_plus = state.amplitudes()[plus].norm();
    let amp_minus = state.amplitudes()[minus].norm();
    let target = std::f64::consts::FRAC_1_SQRT_2;
    if (amp_plus - target).abs() > 1e-8 || (amp_minus - target).abs() > 1e-8 {
        return Err(Error::Inconsistent(format!(
            "branch amplitudes ({amp_plus:.6}, {amp_minus:.6}) are not 1/√2; \
             the encoded state is not GHZ-type"
        )));
    }
    // GHZ-type means the two branches differ on every qubit.
    if plus ^ minus != dim - 1 {
        return Err(Error::Inconsistent(format!(
            "branch bitstrings {plus:0w$b} and {minus:0w$b} agree on some qubit",
            w = m.nqubits()
        )));
    }
    Ok(GhzPair {
        plus_index: plus,
        minus_index: minus,
        weight,
    })
}

/// Closed-form saturating axes for the structured classes: computational
/// basis for zero or zero-diagonal `M`, the uniform x̂ (Hadamard) basis
/// for diagonal `M`. `None` for general structure.
pub fn structure_measurement(kind: MKind, nqubits: usize) -> Option<AxisAssignment> {
    match kind {
        MKind::Zero | MKind::ZeroDiagonal => Some(AxisAssignment::all_z(nqubits)),
        MKind::Diagonal => Some(AxisAssignment::all_x(nqubits)),
        MKind::General => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hoc::hoc_residual;
    use crate::linalg::{embed_operators, identity2, kron, pauli_z, re, CVector, I};
    use crate::model::{FdScheme, Model};
    use num_complex::Complex64;
    use std::sync::Arc;

    fn ghz_model(n: usize, theta_rate: f64) -> Model {
        let dim = 1usize << n;
        let state = move |l: f64| {
            let mut v = CVector::zeros(dim);
            v[0] = re(1.0 / 2f64.sqrt());
            v[dim - 1] = Complex64::from_polar(1.0 / 2f64.sqrt(), -theta_rate * l);
            Ok(v)
        };
        let deriv = move |l: f64| {
            let mut v = CVector::zeros(dim);
            v[dim - 1] = Complex64::from_polar(1.0 / 2f64.sqrt(), -theta_rate * l)
                * Complex64::new(0.0, -theta_rate);
            Ok(v)
        };
        Model::from_family(n, Arc::new(state), Some(Arc::new(deriv)), FdScheme::default())
            .unwrap()
    }

    #[test]
    fn block_trace_examples() {
        let izz = kron(&pauli_z(), &pauli_z()) * I;
        assert!(max_abs(&block_trace(&izz, 0).unwrap()) < 1e-15);

        let izi = kron(&pauli_z(), &identity2()) * I;
        let bt = block_trace(&izi, 0).unwrap();
        assert!(max_abs(&(&bt - pauli_z() * (I * re(2.0)))) < 1e-15);

        let ghz_m = ghz_model(3, 3.0).m_matrix(0.2).unwrap();
        let bt = block_trace(ghz_m.matrix(), 0).unwrap();
        let (kind, a) = bloch_decompose(&bt).unwrap();
        assert_eq!(kind, BlochKind::AntiHermitian);
        assert!(a.x.abs() < 1e-12 && a.y.abs() < 1e-12 && a.z.abs() > 1.0);
    }

    #[test]
    fn block_trace_rejects_bad_input() {
        let hermitian = kron(&pauli_z(), &identity2());
        assert!(matches!(
            block_trace(&hermitian, 0),
            Err(Error::NotAntiHermitian { .. })
        ));
        let traceful = CMatrix::identity(4, 4) * I;
        assert!(matches!(
            block_trace(&traceful, 0),
            Err(Error::NotTraceless { .. })
        ));
    }

    #[test]
    fn orthogonal_axis_follows_fixed_rule() {
        assert_eq!(orthogonal_axis(&linalg::z_axis()), linalg::x_axis());
        assert!((orthogonal_axis(&linalg::x_axis()) - linalg::y_axis()).norm() < 1e-15);
        assert_eq!(orthogonal_axis(&BlochVector::zeros()), linalg::z_axis());
        let a = BlochVector::new(1.0, 1.0, 1.0) / 3f64.sqrt();
        let n = orthogonal_axis(&a);
        assert!(n.dot(&a).abs() < 1e-15);
        assert!((n.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coplanar_normal_examples() {
        let n = coplanar_normal(&[linalg::x_axis(), linalg::y_axis()]).unwrap();
        assert!((n - linalg::z_axis()).norm() < 1e-12);

        assert!(coplanar_normal(&[linalg::x_axis(), linalg::y_axis(), linalg::z_axis()])
            .is_none());

        let mid = (linalg::x_axis() + linalg::y_axis()).normalize();
        let n = coplanar_normal(&[linalg::x_axis(), mid, linalg::y_axis()]).unwrap();
        assert!((n - linalg::z_axis()).norm() < 1e-9);
    }

    #[test]
    fn classify_and_structure_measurements() {
        let ghz = ghz_model(3, 3.0);
        let m = ghz.m_matrix(0.1).unwrap();
        let s = classify_m(&m);
        assert_eq!(s.kind, MKind::Diagonal);
        let axes = structure_measurement(s.kind, 3).unwrap();
        assert!(hoc_residual(&m, &axes).unwrap() < 1e-10);

        let zero = MMatrix::new(2, CMatrix::zeros(4, 4)).unwrap();
        assert_eq!(classify_m(&zero).kind, MKind::Zero);

        // Hadamard-rotate the diagonal GHZ M into zero-diagonal form.
        let h2 = (linalg::pauli_x() + pauli_z()) / re(2f64.sqrt());
        let hn = embed_operators(&[(0, h2.clone()), (1, h2.clone()), (2, h2.clone())], 3).unwrap();
        let rotated = MMatrix::new(3, hn.adjoint() * m.matrix() * &hn).unwrap();
        assert_eq!(classify_m(&rotated).kind, MKind::ZeroDiagonal);
        let axes = structure_measurement(MKind::ZeroDiagonal, 3).unwrap();
        assert!(hoc_residual(&rotated, &axes).unwrap() < 1e-10);

        let w3 = {
            let mut v = CVector::zeros(8);
            v[0b100] = re(1.0);
            v[0b010] = re(1.0);
            v[0b001] = re(1.0);
            let probe = StateVector::new(3, v / re(3f64.sqrt())).unwrap();
            let h = embed_operators(&[(0, linalg::pauli_x()), (1, linalg::pauli_x())], 3)
                .unwrap()
                + embed_operators(&[(1, linalg::pauli_x()), (2, linalg::pauli_x())], 3).unwrap();
            Model::with_hamiltonian(probe, h, 1.0).unwrap()
        };
        assert_eq!(classify_m(&w3.m_matrix(0.5).unwrap()).kind, MKind::General);
    }

    #[test]
    fn ghz_extract_recovers_branches() {
        let model = ghz_model(3, 3.0);
        let lambda = 0.6;
        let m = model.m_matrix(lambda).unwrap();
        let pair = ghz_extract(&m, &model.encoded_state(lambda).unwrap()).unwrap();
        assert_eq!(
            (pair.plus_index.min(pair.minus_index), pair.plus_index.max(pair.minus_index)),
            (0, 7)
        );
        // weight = 2c = √QFI = ∂θ
        assert!((pair.weight - 3.0).abs() < 1e-9);
    }

    #[test]
    fn ghz_extract_accepts_mixed_bit_pair() {
        // branches |01⟩ and |10⟩ (indices 1 and 2) differ on every qubit
        let state = move |l: f64| {
            let mut v = CVector::zeros(4);
            v[1] = re(1.0 / 2f64.sqrt());
            v[2] = Complex64::from_polar(1.0 / 2f64.sqrt(), -2.0 * l);
            Ok(v)
        };
        let model = Model::from_family(2, Arc::new(state), None, FdScheme::Richardson4).unwrap();
        let m = model.m_matrix(0.3).unwrap();
        let pair = ghz_extract(&m, &model.encoded_state(0.3).unwrap()).unwrap();
        assert_eq!(
            (pair.plus_index.min(pair.minus_index), pair.plus_index.max(pair.minus_index)),
            (1, 2)
        );
    }

    #[test]
    fn ghz_extract_rejects_product_families() {
        // Single-qubit phase rotation on a two-qubit product state gives a
        // diagonal M whose branches agree on qubit 1.
        let state = move |l: f64| {
            let mut v = CVector::zeros(4);
            v[0b00] = re(1.0 / 2f64.sqrt());
            v[0b10] = Complex64::from_polar(1.0 / 2f64.sqrt(), -l);
            Ok(v)
        };
        let model = Model::from_family(2, Arc::new(state), None, FdScheme::Richardson4).unwrap();
        let m = model.m_matrix(0.2).unwrap();
        assert_eq!(classify_m(&m).kind, MKind::Diagonal);
        let err = ghz_extract(&m, &model.encoded_state(0.2).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Inconsistent(_)));
    }

    #[test]
    fn lmcc_build_zero_m_gives_default_axes() {
        let m = MMatrix::new(2, CMatrix::zeros(4, 4)).unwrap();
        let build = lmcc_build(&m, &[0, 1]).unwrap();
        assert_eq!(build.leaf_residual, 0.0);
        for axis in build.tree.axes() {
            assert_eq!(*axis, linalg::z_axis());
        }
    }

    #[test]
    fn lmcc_build_ghz_axes_stay_planar() {
        let m = ghz_model(3, 3.0).m_matrix(0.4).unwrap();
        let build = lmcc_build(&m, &[0, 1, 2]).unwrap();
        assert!(build.leaf_residual < 1e-12);
        for axis in build.tree.axes() {
            assert!(axis.z.abs() < 1e-12);
        }
    }

    #[test]
    fn lmcc_respects_measurement_order() {
        let m = ghz_model(3, 3.0).m_matrix(0.4).unwrap();
        for order in [[2, 0, 1], [1, 2, 0]] {
            let build = lmcc_build(&m, &order).unwrap();
            assert!(build.leaf_residual < 1e-12, "order {order:?}");
        }
    }
}
