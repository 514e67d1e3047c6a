//! Dense complex kernel: Pauli algebra, tensor embedding, partial traces,
//! and Hermitian eigendecomposition for operators on up to ~10 qubits.
//!
//! Bit convention used everywhere in this crate: qubit 0 occupies the most
//! significant bit of a basis index, so `|x_0 x_1 … x_{N-1}⟩` maps to the
//! index `Σ x_q 2^{N-1-q}` and a Pauli string literal like `"ZXI"` reads
//! left to right in qubit order.

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Real 3-vector on (or near) the Bloch sphere. Unit length wherever it is
/// used as a measurement axis; unnormalized values appear only as plane or
/// constraint vectors.
pub type BlochVector = Vector3<f64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn identity2() -> CMatrix {
    CMatrix::identity(2, 2)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// X, Y, Z in that order.
pub fn paulis() -> [CMatrix; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

pub fn x_axis() -> BlochVector {
    Vector3::new(1.0, 0.0, 0.0)
}

pub fn y_axis() -> BlochVector {
    Vector3::new(0.0, 1.0, 0.0)
}

pub fn z_axis() -> BlochVector {
    Vector3::new(0.0, 0.0, 1.0)
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_vec(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn anti_hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m + m.adjoint()))
}

pub fn unitary_deviation(m: &CMatrix) -> f64 {
    let d = m.nrows();
    max_abs(&(m.adjoint() * m - CMatrix::identity(d, d)))
}

pub fn is_hermitian(m: &CMatrix, tolerance: f64) -> bool {
    m.is_square() && hermitian_deviation(m) <= tolerance
}

pub fn is_anti_hermitian(m: &CMatrix, tolerance: f64) -> bool {
    m.is_square() && anti_hermitian_deviation(m) <= tolerance
}

pub fn is_unitary(m: &CMatrix, tolerance: f64) -> bool {
    m.is_square() && unitary_deviation(m) <= tolerance
}

/// Number of qubits for a dimension that is a power of two.
pub fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim >= 2 && dim.is_power_of_two() {
        Ok(dim.trailing_zeros() as usize)
    } else {
        Err(Error::DimensionMismatch {
            expected: dim.next_power_of_two().max(2),
            got: dim,
        })
    }
}

/// Bit position (from the least significant end) of `qubit` in an
/// `nqubits`-qubit basis index.
#[inline]
pub(crate) fn bit_pos(qubit: usize, nqubits: usize) -> usize {
    nqubits - 1 - qubit
}

/// Insert bit `b` at position `pos`, shifting higher bits up.
#[inline]
pub(crate) fn insert_bit(rest: usize, pos: usize, b: usize) -> usize {
    let high = rest >> pos;
    let low = rest & ((1 << pos) - 1);
    (high << (pos + 1)) | (b << pos) | low
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

/// `a b†`.
pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// `n · σ` for a unit Bloch vector: traceless, Hermitian, eigenvalues ±1.
pub fn pauli_axis_op(axis: &BlochVector) -> Result<CMatrix> {
    let norm = axis.norm();
    if (norm - 1.0).abs() > tol::IDENTITY {
        return Err(Error::NonUnitAxis { norm });
    }
    Ok(CMatrix::from_row_slice(
        2,
        2,
        &[
            re(axis.z),
            Complex64::new(axis.x, -axis.y),
            Complex64::new(axis.x, axis.y),
            re(-axis.z),
        ],
    ))
}

/// Tensor product of the given 2x2 factors at their (0-based) qubit
/// positions, identity elsewhere.
pub fn embed_operators(factors: &[(usize, CMatrix)], nqubits: usize) -> Result<CMatrix> {
    let mut slots: Vec<Option<&CMatrix>> = vec![None; nqubits];
    for (q, m) in factors {
        if *q >= nqubits {
            return Err(Error::QubitOutOfRange {
                index: *q,
                nqubits,
            });
        }
        if slots[*q].is_some() {
            return Err(Error::DuplicateQubit(*q));
        }
        if m.nrows() != 2 || m.ncols() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: m.nrows(),
            });
        }
        slots[*q] = Some(m);
    }
    let id = identity2();
    let mut out = CMatrix::identity(1, 1);
    for slot in &slots {
        out = kron(&out, slot.unwrap_or(&id));
    }
    Ok(out)
}

/// Dense matrix of an `I/X/Y/Z` string, most significant qubit first.
pub fn pauli_string_matrix(s: &str) -> Result<CMatrix> {
    let mut out = CMatrix::identity(1, 1);
    for ch in s.chars() {
        let f = match ch {
            'I' | 'i' => identity2(),
            'X' | 'x' => pauli_x(),
            'Y' | 'y' => pauli_y(),
            'Z' | 'z' => pauli_z(),
            other => {
                return Err(Error::Spec(format!(
                    "invalid Pauli letter `{other}` (expected I, X, Y, or Z)"
                )))
            }
        };
        out = kron(&out, &f);
    }
    if s.is_empty() {
        return Err(Error::Spec("empty Pauli string".into()));
    }
    Ok(out)
}

/// Trace over every qubit except `qubit`, leaving a 2x2 operator.
/// `Tr(result) == Tr(op)`.
pub fn partial_trace_to_qubit(op: &CMatrix, qubit: usize) -> Result<CMatrix> {
    let n = qubits_for_dim(op.nrows())?;
    if op.ncols() != op.nrows() {
        return Err(Error::DimensionMismatch {
            expected: op.nrows(),
            got: op.ncols(),
        });
    }
    if qubit >= n {
        return Err(Error::QubitOutOfRange { index: qubit, nqubits: n });
    }
    let pos = bit_pos(qubit, n);
    let half = op.nrows() / 2;
    let mut out = CMatrix::zeros(2, 2);
    for a in 0..2 {
        for b in 0..2 {
            let mut acc = ZERO;
            for rest in 0..half {
                acc += op[(insert_bit(rest, pos, a), insert_bit(rest, pos, b))];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Sub-block of a 2^k-dimensional operator: rows with `qubit` bit = `a`,
/// columns with `qubit` bit = `b`, reindexed on the remaining qubits.
pub fn sub_block(op: &CMatrix, qubit: usize, a: usize, b: usize) -> Result<CMatrix> {
    let n = qubits_for_dim(op.nrows())?;
    if qubit >= n {
        return Err(Error::QubitOutOfRange { index: qubit, nqubits: n });
    }
    let pos = bit_pos(qubit, n);
    let half = op.nrows() / 2;
    let mut out = CMatrix::zeros(half, half);
    for r in 0..half {
        for c in 0..half {
            out[(r, c)] = op[(insert_bit(r, pos, a), insert_bit(c, pos, b))];
        }
    }
    Ok(out)
}

/// Which Pauli sector a traceless 2x2 operator lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlochKind {
    Hermitian,
    AntiHermitian,
}

/// Decompose a traceless 2x2 operator as `a·σ` (Hermitian) or `i a·σ`
/// (anti-Hermitian) with a real vector `a`, possibly unnormalized.
pub fn bloch_decompose(op: &CMatrix) -> Result<(BlochKind, BlochVector)> {
    if op.nrows() != 2 || op.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: op.nrows(),
        });
    }
    let trace = op.trace().norm();
    if trace > tol::STRUCTURAL {
        return Err(Error::NotTraceless { trace });
    }
    let kind = if hermitian_deviation(op) <= tol::STRUCTURAL {
        BlochKind::Hermitian
    } else if anti_hermitian_deviation(op) <= tol::STRUCTURAL {
        BlochKind::AntiHermitian
    } else {
        return Err(Error::NotBlochDecomposable);
    };
    let mut a = Vector3::zeros();
    for (k, sigma) in paulis().iter().enumerate() {
        let t = (op * sigma).trace();
        a[k] = match kind {
            BlochKind::Hermitian => t.re / 2.0,
            BlochKind::AntiHermitian => (t / (2.0 * I)).re,
        };
    }
    Ok((kind, a))
}

/// 2x2 unitary whose columns are the +1 and -1 eigenvectors of `n·σ`,
/// built from closed forms so the result is deterministic.
pub fn axis_eigenbasis(axis: &BlochVector) -> Result<CMatrix> {
    let norm = axis.norm();
    if (norm - 1.0).abs() > tol::IDENTITY {
        return Err(Error::NonUnitAxis { norm });
    }
    let theta = axis.z.clamp(-1.0, 1.0).acos();
    let phi = axis.y.atan2(axis.x);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let eiphi = Complex64::from_polar(1.0, phi);
    Ok(CMatrix::from_row_slice(
        2,
        2,
        &[re(c), -eiphi.conj() * s, eiphi * s, re(c)],
    ))
}

/// Apply a 2x2 operator on one qubit of a 2^n state vector.
pub fn apply_single_qubit(op2: &CMatrix, qubit: usize, v: &CVector) -> Result<CVector> {
    let n = qubits_for_dim(v.len())?;
    if qubit >= n {
        return Err(Error::QubitOutOfRange { index: qubit, nqubits: n });
    }
    let pos = bit_pos(qubit, n);
    let mut out = CVector::zeros(v.len());
    for rest in 0..v.len() / 2 {
        let i0 = insert_bit(rest, pos, 0);
        let i1 = insert_bit(rest, pos, 1);
        out[i0] = op2[(0, 0)] * v[i0] + op2[(0, 1)] * v[i1];
        out[i1] = op2[(1, 0)] * v[i0] + op2[(1, 1)] * v[i1];
    }
    Ok(out)
}

/// `(u ⊗ I)† m (u ⊗ I)` with `u` acting on one qubit, without forming the
/// embedded unitary.
pub fn conjugate_single_qubit(u2: &CMatrix, qubit: usize, m: &CMatrix) -> Result<CMatrix> {
    let n = qubits_for_dim(m.nrows())?;
    if qubit >= n {
        return Err(Error::QubitOutOfRange { index: qubit, nqubits: n });
    }
    let pos = bit_pos(qubit, n);
    let d = m.nrows();
    let half = d / 2;
    // right multiply by (u on qubit)
    let mut t = CMatrix::zeros(d, d);
    for r in 0..d {
        for rest in 0..half {
            let c0 = insert_bit(rest, pos, 0);
            let c1 = insert_bit(rest, pos, 1);
            t[(r, c0)] = m[(r, c0)] * u2[(0, 0)] + m[(r, c1)] * u2[(1, 0)];
            t[(r, c1)] = m[(r, c0)] * u2[(0, 1)] + m[(r, c1)] * u2[(1, 1)];
        }
    }
    // left multiply by (u on qubit)†
    let mut out = CMatrix::zeros(d, d);
    for c in 0..d {
        for rest in 0..half {
            let r0 = insert_bit(rest, pos, 0);
            let r1 = insert_bit(rest, pos, 1);
            out[(r0, c)] = u2[(0, 0)].conj() * t[(r0, c)] + u2[(1, 0)].conj() * t[(r1, c)];
            out[(r1, c)] = u2[(0, 1)].conj() * t[(r0, c)] + u2[(1, 1)].conj() * t[(r1, c)];
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues and a
/// unitary matrix of column eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

pub fn hermitian_eigen(m: &CMatrix) -> Result<HermitianEigen> {
    let deviation = hermitian_deviation(m);
    if deviation > tol::STRUCTURAL {
        return Err(Error::NotHermitian { deviation });
    }
    let se = m.clone().symmetric_eigen();
    Ok(HermitianEigen {
        values: se.eigenvalues,
        vectors: se.eigenvectors,
    })
}

impl HermitianEigen {
    /// Apply `f` to the spectrum: `V f(D) V†`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let d = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..d {
            let fj = f(self.values[j]);
            for i in 0..d {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// `V f(D) V† v` without forming the full matrix.
    pub fn apply_spectrum(&self, f: impl Fn(f64) -> Complex64, v: &CVector) -> CVector {
        let mut coeffs = self.vectors.adjoint() * v;
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c *= f(self.values[j]);
        }
        &self.vectors * coeffs
    }
}

/// `⟨v|op|v⟩`.
pub fn expectation(op: &CMatrix, v: &CVector) -> Complex64 {
    v.dotc(&(op * v))
}

/// Normalized N-qubit pure state. Qubit 0 is the most significant bit of
/// the amplitude index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    nqubits: usize,
    amplitudes: CVector,
}

impl StateVector {
    /// Requires the amplitudes to be normalized within 1e-12.
    pub fn new(nqubits: usize, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != 1 << nqubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << nqubits,
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > tol::IDENTITY {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { nqubits, amplitudes })
    }

    /// Accepts amplitudes whose norm is off by at most `tolerance` and
    /// rescales them to exact unit norm.
    pub fn renormalized(nqubits: usize, amplitudes: CVector, tolerance: f64) -> Result<Self> {
        if amplitudes.len() != 1 << nqubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << nqubits,
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > tolerance || norm == 0.0 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            nqubits,
            amplitudes: amplitudes / re(norm),
        })
    }

    /// Basis state `|index⟩`.
    pub fn basis(nqubits: usize, index: usize) -> Result<Self> {
        let dim = 1 << nqubits;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: index,
            });
        }
        let mut amplitudes = CVector::zeros(dim);
        amplitudes[index] = ONE;
        Ok(Self { nqubits, amplitudes })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> CMatrix {
        outer(&self.amplitudes, &self.amplitudes)
    }
}
