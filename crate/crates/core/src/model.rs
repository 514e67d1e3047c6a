//! Parameter-estimation models: a probe state plus an encoding, with the
//! derived objects every analysis consumes — encoded states, state
//! derivatives, QFI, the SLD operator, the commutator matrix
//! `M = [ρ(λ), L_λ]`, and the metrological generator `G_λ(t) = iU†∂_λU`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    self, expectation, hermitian_deviation, hermitian_eigen, max_abs, outer, re, CMatrix, CVector,
    HermitianEigen, StateVector, I,
};
use crate::tol;

/// State provider for a generic λ-family: returns raw amplitudes, which the
/// model renormalizes (within 1e-10) before use. Providers must be smooth in
/// λ including the global phase, or finite differencing is meaningless.
pub type FamilyStateFn = dyn Fn(f64) -> Result<CVector> + Send + Sync;

/// Optional analytic derivative provider: `d|ψ(λ)⟩/dλ`, unnormalized.
pub type FamilyDerivFn = dyn Fn(f64) -> Result<CVector> + Send + Sync;

/// Finite-difference scheme used when a family has no analytic derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FdScheme {
    /// Central difference, O(h²), step `h = 1e-6 · max(1, |λ|)`.
    #[default]
    Central2,
    /// Richardson-extrapolated central difference, O(h⁴).
    Richardson4,
}

/// One piecewise-constant segment of a time-dependent drive: the encoding
/// Hamiltonian is `λ·hamiltonian` for `duration` units of time.
#[derive(Debug, Clone)]
pub struct Segment {
    pub hamiltonian: CMatrix,
    pub duration: f64,
}

/// How the parameter enters the state.
#[derive(Clone)]
pub enum Encoding {
    /// `|ψ(λ)⟩ = exp(-i λ t H) |ψ₀⟩`.
    Hamiltonian { hamiltonian: CMatrix, time: f64 },
    /// Piecewise-constant drive `H_λ(s) = λ H_k(s)`, applied in segment
    /// order. `quadrature_steps` controls the composite-midpoint rule used
    /// for the metrological generator (per segment).
    Schedule {
        segments: Vec<Segment>,
        quadrature_steps: usize,
    },
    /// Arbitrary λ-family of states with an optional analytic derivative.
    Family {
        state: Arc<FamilyStateFn>,
        derivative: Option<Arc<FamilyDerivFn>>,
        fd: FdScheme,
    },
}

impl fmt::Debug for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Encoding::Hamiltonian { time, .. } => {
                write!(f, "Hamiltonian {{ time: {time} }}")
            }
            Encoding::Schedule { segments, .. } => {
                write!(f, "Schedule {{ segments: {} }}", segments.len())
            }
            Encoding::Family { derivative, fd, .. } => write!(
                f,
                "Family {{ analytic_derivative: {}, fd: {fd:?} }}",
                derivative.is_some()
            ),
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Caches {
    ham_eig: OnceLock<HermitianEigen>,
    segment_eigs: OnceLock<Vec<HermitianEigen>>,
}

/// A single-parameter pure-state estimation model.
#[derive(Debug, Clone)]
pub struct Model {
    nqubits: usize,
    probe: StateVector,
    encoding: Encoding,
    caches: Caches,
}

impl Model {
    /// Constant-Hamiltonian phase encoding `exp(-iλtH)|ψ₀⟩`.
    pub fn with_hamiltonian(probe: StateVector, hamiltonian: CMatrix, time: f64) -> Result<Self> {
        let dim = probe.dim();
        if hamiltonian.nrows() != dim || hamiltonian.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: hamiltonian.nrows(),
            });
        }
        let deviation = hermitian_deviation(&hamiltonian);
        if deviation > tol::STRUCTURAL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            nqubits: probe.nqubits(),
            probe,
            encoding: Encoding::Hamiltonian { hamiltonian, time },
            caches: Caches::default(),
        })
    }

    /// Piecewise-constant drive. Segment Hamiltonians must be Hermitian and
    /// durations non-negative.
    pub fn with_schedule(
        probe: StateVector,
        segments: Vec<Segment>,
        quadrature_steps: usize,
    ) -> Result<Self> {
        let dim = probe.dim();
        for seg in &segments {
            if seg.hamiltonian.nrows() != dim || seg.hamiltonian.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: seg.hamiltonian.nrows(),
                });
            }
            let deviation = hermitian_deviation(&seg.hamiltonian);
            if deviation > tol::STRUCTURAL {
                return Err(Error::NotHermitian { deviation });
            }
            if seg.duration < 0.0 {
                return Err(Error::Precondition(
                    "segment durations must be non-negative".into(),
                ));
            }
        }
        Ok(Self {
            nqubits: probe.nqubits(),
            probe,
            encoding: Encoding::Schedule {
                segments,
                quadrature_steps: quadrature_steps.max(1),
            },
            caches: Caches::default(),
        })
    }

    /// Generic λ-family. The probe is taken as the family state at λ = 0.
    pub fn from_family(
        nqubits: usize,
        state: Arc<FamilyStateFn>,
        derivative: Option<Arc<FamilyDerivFn>>,
        fd: FdScheme,
    ) -> Result<Self> {
        let probe = family_state(nqubits, &state, 0.0)?;
        Ok(Self {
            nqubits,
            probe,
            encoding: Encoding::Family { state, derivative, fd },
            caches: Caches::default(),
        })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn dim(&self) -> usize {
        1 << self.nqubits
    }

    pub fn probe(&self) -> &StateVector {
        &self.probe
    }

    pub fn encoding(&self) -> &Encoding {
        &self.encoding
    }

    fn ham_eig(&self) -> Result<&HermitianEigen> {
        match &self.encoding {
            Encoding::Hamiltonian { hamiltonian, .. } => {
                if let Some(e) = self.caches.ham_eig.get() {
                    return Ok(e);
                }
                let eig = hermitian_eigen(hamiltonian)?;
                Ok(self.caches.ham_eig.get_or_init(|| eig))
            }
            _ => Err(Error::Precondition("Hamiltonian encoding required".into())),
        }
    }

    fn segment_eigs(&self) -> Result<&Vec<HermitianEigen>> {
        match &self.encoding {
            Encoding::Schedule { segments, .. } => {
                if let Some(e) = self.caches.segment_eigs.get() {
                    return Ok(e);
                }
                let eigs = segments
                    .iter()
                    .map(|s| hermitian_eigen(&s.hamiltonian))
                    .collect::<Result<Vec<_>>>()?;
                Ok(self.caches.segment_eigs.get_or_init(|| eigs))
            }
            _ => Err(Error::Precondition("schedule encoding required".into())),
        }
    }

    /// The encoded state `|ψ(λ)⟩`. Unitary for Hamiltonian and schedule
    /// encodings; family providers are checked for normalization.
    pub fn encoded_state(&self, lambda: f64) -> Result<StateVector> {
        match &self.encoding {
            Encoding::Hamiltonian { time, .. } => {
                let eig = self.ham_eig()?;
                let phase = -lambda * time;
                let amps = eig.apply_spectrum(
                    |e| Complex64::from_polar(1.0, phase * e),
                    self.probe.amplitudes(),
                );
                StateVector::new(self.nqubits, amps)
            }
            Encoding::Schedule { segments, .. } => {
                let eigs = self.segment_eigs()?;
                let mut amps = self.probe.amplitudes().clone();
                for (seg, eig) in segments.iter().zip(eigs) {
                    let phase = -lambda * seg.duration;
                    amps = eig.apply_spectrum(|e| Complex64::from_polar(1.0, phase * e), &amps);
                }
                StateVector::new(self.nqubits, amps)
            }
            Encoding::Family { state, .. } => family_state(self.nqubits, state, lambda),
        }
    }

    /// The full encoding unitary `U_λ`. Only defined for unitary encodings.
    pub fn unitary(&self, lambda: f64) -> Result<CMatrix> {
        match &self.encoding {
            Encoding::Hamiltonian { time, .. } => {
                let eig = self.ham_eig()?;
                let phase = -lambda * time;
                Ok(eig.map_spectrum(|e| Complex64::from_polar(1.0, phase * e)))
            }
            Encoding::Schedule { segments, .. } => {
                let eigs = self.segment_eigs()?;
                let mut u = CMatrix::identity(self.dim(), self.dim());
                for (seg, eig) in segments.iter().zip(eigs) {
                    let phase = -lambda * seg.duration;
                    u = eig.map_spectrum(|e| Complex64::from_polar(1.0, phase * e)) * u;
                }
                Ok(u)
            }
            Encoding::Family { .. } => Err(Error::Precondition(
                "unitary is only defined for Hamiltonian or schedule encodings".into(),
            )),
        }
    }

    /// `d|ψ(λ)⟩/dλ`, unnormalized. Analytic for unitary encodings and for
    /// families with a derivative provider; finite differences otherwise.
    pub fn state_derivative(&self, lambda: f64) -> Result<CVector> {
        match &self.encoding {
            Encoding::Hamiltonian { hamiltonian, time } => {
                let psi = self.encoded_state(lambda)?;
                Ok(hamiltonian * psi.amplitudes() * (-I * re(*time)))
            }
            Encoding::Schedule { .. } => {
                let g = self.metrological_generator(lambda)?;
                let u = self.unitary(lambda)?;
                Ok(u * (g.matrix() * self.probe.amplitudes()) * (-I))
            }
            Encoding::Family { derivative, fd, .. } => {
                if let Some(d) = derivative {
                    let v = d(lambda)?;
                    if v.len() != self.dim() {
                        return Err(Error::DimensionMismatch {
                            expected: self.dim(),
                            got: v.len(),
                        });
                    }
                    return Ok(v);
                }
                let h = 1e-6 * lambda.abs().max(1.0);
                let at = |x: f64| -> Result<CVector> {
                    Ok(self.encoded_state(x)?.into_amplitudes())
                };
                match fd {
                    FdScheme::Central2 => Ok((at(lambda + h)? - at(lambda - h)?) / re(2.0 * h)),
                    FdScheme::Richardson4 => {
                        let d1 = at(lambda + h)? - at(lambda - h)?;
                        let d2 = at(lambda + 2.0 * h)? - at(lambda - 2.0 * h)?;
                        Ok((d1 * re(8.0) - d2) / re(12.0 * h))
                    }
                }
            }
        }
    }

    /// Quantum Fisher information `4(⟨∂ψ|∂ψ⟩ - |⟨ψ|∂ψ⟩|²)`.
    pub fn qfi(&self, lambda: f64) -> Result<f64> {
        let psi = self.encoded_state(lambda)?;
        let dpsi = self.state_derivative(lambda)?;
        let dd = dpsi.dotc(&dpsi).re;
        let pd = psi.amplitudes().dotc(&dpsi).norm_sqr();
        Ok((4.0 * (dd - pd)).max(0.0))
    }

    /// The SLD operator for a pure state: `L = 2(|∂ψ⟩⟨ψ| + |ψ⟩⟨∂ψ|)`.
    pub fn sld(&self, lambda: f64) -> Result<CMatrix> {
        let psi = self.encoded_state(lambda)?;
        let dpsi = self.state_derivative(lambda)?;
        Ok((outer(&dpsi, psi.amplitudes()) + outer(psi.amplitudes(), &dpsi)) * re(2.0))
    }

    /// `M = [ρ(λ), L_λ]`, the object every saturation check interrogates.
    pub fn m_matrix(&self, lambda: f64) -> Result<MMatrix> {
        let psi = self.encoded_state(lambda)?;
        let rho = psi.density();
        let l = self.sld(lambda)?;
        MMatrix::new(self.nqubits, &rho * &l - &l * &rho)
    }

    /// The metrological generator `G_λ(t) = iU†∂_λU`. Exactly `t·H` for the
    /// constant-Hamiltonian case; composite-midpoint quadrature per segment
    /// for schedules.
    pub fn metrological_generator(&self, lambda: f64) -> Result<Generator> {
        match &self.encoding {
            Encoding::Hamiltonian { hamiltonian, time } => {
                Generator::new(hamiltonian * re(*time))
            }
            Encoding::Schedule {
                segments,
                quadrature_steps,
            } => {
                let eigs = self.segment_eigs()?;
                let dim = self.dim();
                let mut g = CMatrix::zeros(dim, dim);
                let mut u_start = CMatrix::identity(dim, dim);
                for (seg, eig) in segments.iter().zip(eigs) {
                    if seg.duration == 0.0 {
                        continue;
                    }
                    let ds = seg.duration / *quadrature_steps as f64;
                    for m in 0..*quadrature_steps {
                        let s_local = (m as f64 + 0.5) * ds;
                        let u_mid = eig
                            .map_spectrum(|e| Complex64::from_polar(1.0, -lambda * s_local * e))
                            * &u_start;
                        g += u_mid.adjoint() * &seg.hamiltonian * u_mid * re(ds);
                    }
                    u_start = eig.map_spectrum(|e| {
                        Complex64::from_polar(1.0, -lambda * seg.duration * e)
                    }) * u_start;
                }
                Generator::new(g)
            }
            Encoding::Family { .. } => Err(Error::Precondition(
                "metrological generator requires a unitary encoding".into(),
            )),
        }
    }
}

fn family_state(nqubits: usize, f: &Arc<FamilyStateFn>, lambda: f64) -> Result<StateVector> {
    let amps = f(lambda)?;
    if amps.len() != 1 << nqubits {
        return Err(Error::DimensionMismatch {
            expected: 1 << nqubits,
            got: amps.len(),
        });
    }
    StateVector::renormalized(nqubits, amps, tol::STRUCTURAL)
}

/// The commutator `M = [ρ(λ), L_λ]`: anti-Hermitian, traceless, rank ≤ 2
/// for pure models, with nonzero eigenvalues `±i√QFI`.
#[derive(Debug, Clone)]
pub struct MMatrix {
    nqubits: usize,
    matrix: CMatrix,
}

impl MMatrix {
    pub fn new(nqubits: usize, matrix: CMatrix) -> Result<Self> {
        let dim = 1usize << nqubits;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        let deviation = linalg::anti_hermitian_deviation(&matrix);
        if deviation > tol::STRUCTURAL {
            return Err(Error::NotAntiHermitian { deviation });
        }
        let trace = matrix.trace().norm();
        if trace > tol::STRUCTURAL {
            return Err(Error::NotTraceless { trace });
        }
        Ok(Self { nqubits, matrix })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// True when `M` vanishes within tolerance; every measurement then
    /// saturates trivially.
    pub fn is_negligible(&self) -> bool {
        self.max_abs() < tol::STRUCTURAL
    }

    /// Eigenvalues of the Hermitian companion `iM`, sorted descending.
    /// For a model-derived `M` these are `+√QFI`, zeros, `-√QFI`.
    pub fn hermitian_companion_eigenvalues(&self) -> Vec<f64> {
        let herm = &self.matrix * I;
        let eig = herm.symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }
}

/// Hermitian metrological generator `G_λ(t)`.
#[derive(Debug, Clone)]
pub struct Generator {
    matrix: CMatrix,
}

impl Generator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let deviation = hermitian_deviation(&matrix);
        if deviation > tol::STRUCTURAL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `⟨G²⟩ - ⟨G⟩²` on a state; the QFI of a unitary encoding is four
    /// times this.
    pub fn variance(&self, state: &StateVector) -> f64 {
        let gv = &self.matrix * state.amplitudes();
        let mean = state.amplitudes().dotc(&gv).re;
        gv.dotc(&gv).re - mean * mean
    }

    /// `⟨G⟩` on a state.
    pub fn mean(&self, state: &StateVector) -> f64 {
        expectation(&self.matrix, state.amplitudes()).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{embed_operators, kron, pauli_x, pauli_z, CVector};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn w3() -> StateVector {
        let mut v = CVector::zeros(8);
        v[0b100] = re(1.0);
        v[0b010] = re(1.0);
        v[0b001] = re(1.0);
        StateVector::new(3, v / re(3f64.sqrt())).unwrap()
    }

    fn w3_xx_model() -> Model {
        let h = embed_operators(&[(0, pauli_x()), (1, pauli_x())], 3).unwrap()
            + embed_operators(&[(1, pauli_x()), (2, pauli_x())], 3).unwrap();
        Model::with_hamiltonian(w3(), h, 1.0).unwrap()
    }

    fn constant_family(nqubits: usize) -> Model {
        let dim = 1usize << nqubits;
        let f = move |_l: f64| {
            let mut v = CVector::zeros(dim);
            v[0] = re(1.0);
            Ok(v)
        };
        Model::from_family(nqubits, Arc::new(f), None, FdScheme::default()).unwrap()
    }

    #[test]
    fn evolve_at_zero_is_identity() {
        let m = w3_xx_model();
        let s = m.encoded_state(0.0).unwrap();
        assert!((s.inner(m.probe()).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evolution_preserves_norm() {
        let m = w3_xx_model();
        for lambda in [-2.0, 0.3, 17.0] {
            let s = m.encoded_state(lambda).unwrap();
            assert_abs_diff_eq!(s.amplitudes().norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_family_is_degenerate() {
        let m = constant_family(2);
        assert!(max_abs_vec_is_zero(&m.state_derivative(0.4).unwrap()));
        assert_abs_diff_eq!(m.qfi(0.4).unwrap(), 0.0, epsilon = 1e-18);
        assert!(max_abs(&m.sld(0.4).unwrap()) < 1e-12);
        assert!(m.m_matrix(0.4).unwrap().is_negligible());
    }

    fn max_abs_vec_is_zero(v: &CVector) -> bool {
        v.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-9
    }

    #[test]
    fn hamiltonian_derivative_matches_finite_difference() {
        let m = w3_xx_model();
        let lambda = 0.3;
        let analytic = m.state_derivative(lambda).unwrap();
        let h = 1e-6;
        let plus = m.encoded_state(lambda + h).unwrap().into_amplitudes();
        let minus = m.encoded_state(lambda - h).unwrap().into_amplitudes();
        let fd = (plus - minus) / re(2.0 * h);
        let diff = analytic - fd;
        assert!(diff.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-7);
    }

    #[test]
    fn sld_satisfies_its_defining_equation() {
        let m = w3_xx_model();
        let lambda = 0.7;
        let l = m.sld(lambda).unwrap();
        let rho = m.encoded_state(lambda).unwrap().density();
        // d rho via central difference
        let h = 1e-6;
        let rp = m.encoded_state(lambda + h).unwrap().density();
        let rm = m.encoded_state(lambda - h).unwrap().density();
        let drho = (rp - rm) / re(2.0 * h);
        let resid = &drho - (&rho * &l + &l * &rho) * re(0.5);
        assert!(max_abs(&resid) < 1e-8);
    }

    #[test]
    fn m_matrix_invariants_hold() {
        let m = w3_xx_model();
        let mm = m.m_matrix(0.4).unwrap();
        let qfi = m.qfi(0.4).unwrap();
        let evs = mm.hermitian_companion_eigenvalues();
        let scale = 1e-8 * qfi.sqrt().max(1.0);
        assert_abs_diff_eq!(evs[0], qfi.sqrt(), epsilon = scale);
        assert_abs_diff_eq!(*evs.last().unwrap(), -qfi.sqrt(), epsilon = scale);
        for v in &evs[1..evs.len() - 1] {
            assert!(v.abs() < scale);
        }
    }

    #[test]
    fn generator_fast_path_and_time_zero() {
        let m = w3_xx_model();
        let g = m.metrological_generator(0.9).unwrap();
        if let Encoding::Hamiltonian { hamiltonian, .. } = m.encoding() {
            assert!(max_abs(&(g.matrix() - hamiltonian)) < 1e-14);
        } else {
            unreachable!();
        }
        let frozen = Model::with_hamiltonian(
            w3(),
            embed_operators(&[(0, pauli_z())], 3).unwrap(),
            0.0,
        )
        .unwrap();
        assert!(max_abs(frozen.metrological_generator(1.3).unwrap().matrix()) < 1e-14);
    }

    #[test]
    fn schedule_with_one_segment_matches_constant_hamiltonian() {
        let h = kron(&pauli_x(), &pauli_z()) + kron(&pauli_z(), &pauli_x());
        let probe = StateVector::basis(2, 1).unwrap();
        let constant = Model::with_hamiltonian(probe.clone(), h.clone(), 0.8).unwrap();
        let schedule = Model::with_schedule(
            probe,
            vec![Segment {
                hamiltonian: h,
                duration: 0.8,
            }],
            64,
        )
        .unwrap();
        let lambda = 0.21;
        let a = constant.encoded_state(lambda).unwrap();
        let b = schedule.encoded_state(lambda).unwrap();
        assert!((a.inner(&b).norm() - 1.0).abs() < 1e-12);
        let qa = constant.qfi(lambda).unwrap();
        let qb = schedule.qfi(lambda).unwrap();
        assert_abs_diff_eq!(qa, qb, epsilon = 1e-6 * qa.max(1.0));
    }

    #[test]
    fn rejects_non_hermitian_hamiltonian() {
        let mut h = kron(&pauli_x(), &pauli_z());
        h[(0, 1)] += re(0.5);
        let err = Model::with_hamiltonian(StateVector::basis(2, 0).unwrap(), h, 1.0);
        assert!(matches!(err, Err(Error::NotHermitian { .. })));
    }
}
