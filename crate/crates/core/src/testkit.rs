//! Deterministic random instances and reference implementations for the
//! test suites: seeded states, Hamiltonians, axes, local rotations, and an
//! independent matrix exponential.

use std::sync::Arc;

use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hoc::AxisAssignment;
use crate::linalg::{
    self, bloch_decompose, kron, max_abs, re, BlochKind, BlochVector, CMatrix, CVector,
    StateVector,
};
use crate::model::{FdScheme, Model};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal via Box-Muller.
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    (-2.0 * u1.ln()).sqrt() * u2.cos()
}

pub fn random_state(nqubits: usize, rng: &mut ChaCha8Rng) -> StateVector {
    let dim = 1usize << nqubits;
    let amps = CVector::from_fn(dim, |_, _| Complex64::new(normal(rng), normal(rng)));
    let norm = amps.norm();
    StateVector::new(nqubits, amps / re(norm)).expect("normalized by construction")
}

pub fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| Complex64::new(normal(rng), normal(rng)));
    (&a + a.adjoint()) / re(2.0)
}

/// Random probe under a random Hermitian coupling at unit time.
pub fn random_hamiltonian_model(nqubits: usize, rng: &mut ChaCha8Rng) -> Model {
    let probe = random_state(nqubits, rng);
    let h = random_hermitian(1 << nqubits, rng);
    Model::with_hamiltonian(probe, h, 1.0).expect("random Hermitian coupling is valid")
}

pub fn random_unit_axis(rng: &mut ChaCha8Rng) -> BlochVector {
    loop {
        let v = BlochVector::new(normal(rng), normal(rng), normal(rng));
        if v.norm() > 1e-6 {
            return v.normalize();
        }
    }
}

pub fn random_axes(nqubits: usize, rng: &mut ChaCha8Rng) -> AxisAssignment {
    AxisAssignment::new((0..nqubits).map(|_| random_unit_axis(rng)).collect())
        .expect("unit axes by construction")
}

/// Haar-ish random SU(2) element from a random rotation axis and angle.
pub fn random_su2(rng: &mut ChaCha8Rng) -> CMatrix {
    let axis = random_unit_axis(rng);
    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let sigma = linalg::pauli_axis_op(&axis).expect("unit axis");
    CMatrix::identity(2, 2) * re(c) - sigma * Complex64::new(0.0, s)
}

/// SO(3) rotation implemented by conjugation with a 2x2 unitary:
/// `u (n·σ) u† = (O n)·σ`.
pub fn su2_to_so3(u: &CMatrix) -> Matrix3<f64> {
    let mut out = Matrix3::zeros();
    for (k, sigma) in linalg::paulis().iter().enumerate() {
        let rotated = u * sigma * u.adjoint();
        let (kind, a) = bloch_decompose(&rotated).expect("conjugated Pauli stays Hermitian");
        assert_eq!(kind, BlochKind::Hermitian);
        out.set_column(k, &a);
    }
    out
}

/// GHZ phase family conjugated by a fixed random local rotation on every
/// qubit: still saturable, with the per-qubit measurement planes rotated
/// by the returned SO(3) images.
pub fn rotated_ghz_model(
    nqubits: usize,
    rng: &mut ChaCha8Rng,
) -> (Model, Vec<Matrix3<f64>>) {
    let dim = 1usize << nqubits;
    let rate = nqubits as f64;
    let locals: Vec<CMatrix> = (0..nqubits).map(|_| random_su2(rng)).collect();
    let rotations = locals.iter().map(su2_to_so3).collect();
    let mut full = CMatrix::identity(1, 1);
    for u in &locals {
        full = kron(&full, u);
    }
    let state_rot = full.clone();
    let state = move |l: f64| -> crate::error::Result<CVector> {
        let mut v = CVector::zeros(dim);
        v[0] = re(1.0 / 2f64.sqrt());
        v[dim - 1] = Complex64::from_polar(1.0 / 2f64.sqrt(), -rate * l);
        Ok(&state_rot * v)
    };
    let deriv_rot = full;
    let derivative = move |l: f64| -> crate::error::Result<CVector> {
        let mut v = CVector::zeros(dim);
        v[dim - 1] =
            Complex64::from_polar(1.0 / 2f64.sqrt(), -rate * l) * Complex64::new(0.0, -rate);
        Ok(&deriv_rot * v)
    };
    let model = Model::from_family(
        nqubits,
        Arc::new(state),
        Some(Arc::new(derivative)),
        FdScheme::default(),
    )
    .expect("rotated family stays normalized");
    (model, rotations)
}

/// Matrix exponential by scaling-and-squaring on a plain Taylor series.
/// Reference implementation for tests; independent of the eigendecomposition
/// path used by the models.
pub fn expm_reference(m: &CMatrix) -> CMatrix {
    let dim = m.nrows();
    assert_eq!(dim, m.ncols(), "square matrix required");
    let norm = max_abs(m) * dim as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / re(2f64.powi(squarings as i32));
    let mut result = CMatrix::identity(dim, dim);
    let mut term = CMatrix::identity(dim, dim);
    for k in 1..=60 {
        term = &term * &scaled / re(k as f64);
        result += &term;
        if max_abs(&term) < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn expm_reference_matches_closed_form() {
        // exp(iθ n·σ) = cos θ + i sin θ n·σ
        let axis = BlochVector::new(0.6, 0.0, 0.8);
        let theta = 1.234;
        let arg = linalg::pauli_axis_op(&axis).unwrap() * Complex64::new(0.0, theta);
        let e = expm_reference(&arg);
        let expected = CMatrix::identity(2, 2) * re(theta.cos())
            + linalg::pauli_axis_op(&axis).unwrap() * Complex64::new(0.0, theta.sin());
        assert!(max_abs(&(e - expected)) < 1e-13);
    }

    #[test]
    fn su2_to_so3_is_a_rotation() {
        let mut r = rng(11);
        for _ in 0..5 {
            let u = random_su2(&mut r);
            let o = su2_to_so3(&u);
            let gram = o.transpose() * o;
            assert!((gram - Matrix3::identity()).norm() < 1e-12);
            assert_abs_diff_eq!(o.determinant(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotated_ghz_keeps_qfi() {
        let mut r = rng(3);
        let (model, _) = rotated_ghz_model(3, &mut r);
        assert_abs_diff_eq!(model.qfi(0.4).unwrap(), 9.0, epsilon = 1e-9);
    }
}
