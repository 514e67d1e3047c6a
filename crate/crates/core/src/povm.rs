//! Measurements, outcome statistics, classical Fisher information, and the
//! direct saturation check `E_x M E_x = 0`.
//!
//! Local and classically-communicating measurements expand into rank-1
//! product operators, which are carried around as (possibly weighted)
//! outcome vectors so probabilities and Fisher sums stay O(2^N) per
//! outcome. Explicit operator lists are accepted for testing non-local
//! POVMs against the same checks.

use crate::error::{Error, Result};
use crate::hoc::AxisAssignment;
use crate::imp::LmccTree;
use crate::linalg::{
    axis_eigenbasis, hermitian_eigen, kron_vec, max_abs, outer, re, BlochVector, CMatrix, CVector,
    StateVector,
};
use crate::model::{MMatrix, Model};
use crate::tol;

/// Rank-1 projective local measurement: one axis per qubit, 2^N product
/// projectors `E_x = ⊗_j (I + (-1)^{x_j} n^{(j)}·σ)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMeasurement {
    axes: AxisAssignment,
}

impl LocalMeasurement {
    pub fn new(axes: AxisAssignment) -> Self {
        Self { axes }
    }

    pub fn axes(&self) -> &AxisAssignment {
        &self.axes
    }

    pub fn nqubits(&self) -> usize {
        self.axes.nqubits()
    }
}

/// One outcome of a rank-1 single-qubit POVM: `a (I + n·σ)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmOutcome {
    pub weight: f64,
    pub axis: BlochVector,
}

/// Rank-1 local POVM: an outcome list per qubit. Completeness requires the
/// weights to sum to 2 and the weighted axes to cancel on every qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPovm {
    outcomes: Vec<Vec<PovmOutcome>>,
}

impl LocalPovm {
    pub fn new(outcomes: Vec<Vec<PovmOutcome>>) -> Result<Self> {
        for (q, list) in outcomes.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::InvalidMeasurement(format!(
                    "qubit {q} has no outcomes"
                )));
            }
            let mut weight_sum = 0.0;
            let mut axis_sum = BlochVector::zeros();
            for o in list {
                if o.weight <= 0.0 {
                    return Err(Error::InvalidMeasurement(format!(
                        "qubit {q} has a non-positive outcome weight {}",
                        o.weight
                    )));
                }
                let norm = o.axis.norm();
                if (norm - 1.0).abs() > tol::IDENTITY {
                    return Err(Error::NonUnitAxis { norm });
                }
                weight_sum += o.weight;
                axis_sum += o.axis * o.weight;
            }
            if (weight_sum - 2.0).abs() > tol::STRUCTURAL {
                return Err(Error::InvalidMeasurement(format!(
                    "qubit {q} outcome weights sum to {weight_sum}, expected 2"
                )));
            }
            if axis_sum.norm() > tol::STRUCTURAL {
                return Err(Error::InvalidMeasurement(format!(
                    "qubit {q} weighted axes do not cancel (|Σ a n| = {:.3e})",
                    axis_sum.norm()
                )));
            }
        }
        Ok(Self { outcomes })
    }

    pub fn nqubits(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[Vec<PovmOutcome>] {
        &self.outcomes
    }
}

/// Any measurement the analysis accepts.
#[derive(Debug, Clone)]
pub enum Measurement {
    Local(LocalMeasurement),
    Lmcc(LmccTree),
    Povm(LocalPovm),
    /// Arbitrary PSD operator list; bypasses the locality-specific paths.
    Explicit(Vec<CMatrix>),
}

impl Measurement {
    pub fn local_axes(axes: AxisAssignment) -> Self {
        Measurement::Local(LocalMeasurement::new(axes))
    }

    fn check_nqubits(&self, nqubits: usize) -> Result<()> {
        let got = match self {
            Measurement::Local(m) => m.nqubits(),
            Measurement::Lmcc(t) => t.nqubits(),
            Measurement::Povm(p) => p.nqubits(),
            Measurement::Explicit(ops) => {
                let dim = 1usize << nqubits;
                for op in ops {
                    if op.nrows() != dim || op.ncols() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            got: op.nrows(),
                        });
                    }
                }
                nqubits
            }
        };
        if got != nqubits {
            return Err(Error::DimensionMismatch {
                expected: nqubits,
                got,
            });
        }
        Ok(())
    }

    /// Weighted outcome vectors `w_x` with `E_x = w_x w_x†`, when every
    /// outcome is rank-1 (all variants except `Explicit`).
    pub fn outcome_vectors(&self, nqubits: usize) -> Result<Option<Vec<CVector>>> {
        self.check_nqubits(nqubits)?;
        match self {
            Measurement::Local(m) => {
                let bases: Vec<CMatrix> = m
                    .axes()
                    .axes()
                    .iter()
                    .map(axis_eigenbasis)
                    .collect::<Result<Vec<_>>>()?;
                let mut vecs = Vec::with_capacity(1 << nqubits);
                for x in 0..1usize << nqubits {
                    let mut v = CVector::from_element(1, re(1.0));
                    for (q, basis) in bases.iter().enumerate() {
                        let bit = (x >> (nqubits - 1 - q)) & 1;
                        v = kron_vec(&v, &basis.column(bit).into_owned());
                    }
                    vecs.push(v);
                }
                Ok(Some(vecs))
            }
            Measurement::Lmcc(tree) => {
                let mut vecs = Vec::with_capacity(1 << nqubits);
                for x in 0..1usize << nqubits {
                    // Factor per qubit, chosen by walking the outcome path
                    // in measurement order.
                    let mut factors: Vec<CVector> = vec![CVector::zeros(2); nqubits];
                    let mut prefix = 0usize;
                    for depth in 0..nqubits {
                        let bit = (x >> (nqubits - 1 - depth)) & 1;
                        let axis = tree.axis_at(depth, prefix);
                        let basis = axis_eigenbasis(axis)?;
                        factors[tree.order()[depth]] = basis.column(bit).into_owned();
                        prefix = (prefix << 1) | bit;
                    }
                    let mut v = CVector::from_element(1, re(1.0));
                    for f in &factors {
                        v = kron_vec(&v, f);
                    }
                    vecs.push(v);
                }
                Ok(Some(vecs))
            }
            Measurement::Povm(p) => {
                let mut vecs = vec![CVector::from_element(1, re(1.0))];
                for list in p.outcomes() {
                    let mut next = Vec::with_capacity(vecs.len() * list.len());
                    for v in &vecs {
                        for o in list {
                            let basis = axis_eigenbasis(&o.axis)?;
                            let local = basis.column(0).into_owned() * re(o.weight.sqrt());
                            next.push(kron_vec(v, &local));
                        }
                    }
                    vecs = next;
                }
                Ok(Some(vecs))
            }
            Measurement::Explicit(_) => Ok(None),
        }
    }

    /// Explicit operator list, with positivity (for `Explicit`) and
    /// completeness verified.
    pub fn projectors(&self, nqubits: usize) -> Result<Vec<CMatrix>> {
        self.check_nqubits(nqubits)?;
        let dim = 1usize << nqubits;
        let ops: Vec<CMatrix> = match self.outcome_vectors(nqubits)? {
            Some(vecs) => vecs.iter().map(|v| outer(v, v)).collect(),
            None => match self {
                Measurement::Explicit(ops) => {
                    for op in ops {
                        let eig = hermitian_eigen(op)?;
                        let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
                        if min < -tol::STRUCTURAL {
                            return Err(Error::InvalidMeasurement(format!(
                                "operator has negative eigenvalue {min:.3e}"
                            )));
                        }
                    }
                    ops.clone()
                }
                _ => unreachable!("only explicit measurements lack outcome vectors"),
            },
        };
        let mut sum = CMatrix::zeros(dim, dim);
        for op in &ops {
            sum += op;
        }
        let completeness = max_abs(&(sum - CMatrix::identity(dim, dim)));
        if completeness > tol::STRUCTURAL {
            return Err(Error::InvalidMeasurement(format!(
                "operators do not sum to identity (residual {completeness:.3e})"
            )));
        }
        Ok(ops)
    }
}

/// `p(x|λ) = ⟨ψ|E_x|ψ⟩`, clamped to `[0, 1]` against roundoff.
pub fn outcome_probabilities(state: &StateVector, measurement: &Measurement) -> Result<Vec<f64>> {
    let n = state.nqubits();
    let probs: Vec<f64> = match measurement.outcome_vectors(n)? {
        Some(vecs) => vecs
            .iter()
            .map(|v| v.dotc(state.amplitudes()).norm_sqr())
            .collect(),
        None => measurement
            .projectors(n)?
            .iter()
            .map(|e| state.amplitudes().dotc(&(e * state.amplitudes())).re)
            .collect(),
    };
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > tol::STRUCTURAL {
        return Err(Error::InvalidMeasurement(format!(
            "outcome probabilities sum to {total}"
        )));
    }
    Ok(probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect())
}

/// Classical Fisher information of the outcome distribution.
///
/// Outcomes with `p > 1e-12` contribute `(∂_λ p)²/p` with the derivative
/// computed analytically as `2 Re⟨∂ψ|E_x|ψ⟩`; smaller probabilities
/// contribute their zero-probability limit `Tr[E_x L ρ L]`.
pub fn cfi(model: &Model, measurement: &Measurement, lambda: f64) -> Result<f64> {
    let n = model.nqubits();
    let psi = model.encoded_state(lambda)?;
    let dpsi = model.state_derivative(lambda)?;
    // L|ψ⟩ = 2(|∂ψ⟩ + ⟨∂ψ|ψ⟩|ψ⟩)
    let lpsi = (&dpsi + psi.amplitudes() * dpsi.dotc(psi.amplitudes())) * re(2.0);

    let mut total = 0.0;
    match measurement.outcome_vectors(n)? {
        Some(vecs) => {
            for v in &vecs {
                let amp = v.dotc(psi.amplitudes());
                let p = amp.norm_sqr();
                if p > tol::PROB_FLOOR {
                    let dp = 2.0 * (dpsi.dotc(v) * amp).re;
                    total += dp * dp / p;
                } else {
                    total += v.dotc(&lpsi).norm_sqr();
                }
            }
        }
        None => {
            for e in measurement.projectors(n)? {
                let epsi = &e * psi.amplitudes();
                let p = psi.amplitudes().dotc(&epsi).re;
                if p > tol::PROB_FLOOR {
                    let dp = 2.0 * dpsi.dotc(&epsi).re;
                    total += dp * dp / p;
                } else {
                    total += lpsi.dotc(&(&e * &lpsi)).re;
                }
            }
        }
    }
    Ok(total)
}

/// Result of the saturation test.
#[derive(Debug, Clone, Copy)]
pub struct SaturationReport {
    pub saturated: bool,
    /// `max_x ‖E_x M E_x‖_max`.
    pub residual: f64,
}

/// Direct saturation check: the bound is achieved iff `E_x M E_x = 0` for
/// every outcome.
pub fn saturation_check(m: &MMatrix, measurement: &Measurement) -> Result<SaturationReport> {
    let n = m.nqubits();
    let mut residual = 0.0f64;
    match measurement.outcome_vectors(n)? {
        Some(vecs) => {
            // For rank-1 E = ww†: E M E = ⟨w|M|w⟩ ww†.
            for w in &vecs {
                let t = w.dotc(&(m.matrix() * w));
                let peak = w.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
                residual = residual.max(t.norm() * peak);
            }
        }
        None => {
            for e in measurement.projectors(n)? {
                residual = residual.max(max_abs(&(&e * m.matrix() * &e)));
            }
        }
    }
    Ok(SaturationReport {
        saturated: residual < tol::SATURATION,
        residual,
    })
}

/// Collapse a rank-1 local POVM to the projective measurement built from
/// each qubit's first outcome axis. If the POVM saturates the bound on
/// some `M`, the reduction does too.
pub fn reduce_to_projective(povm: &LocalPovm) -> LocalMeasurement {
    let axes: Vec<BlochVector> = povm.outcomes().iter().map(|list| list[0].axis).collect();
    LocalMeasurement::new(AxisAssignment::new(axes).expect("validated at POVM construction"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hoc::AxisAssignment;
    use crate::linalg::{x_axis, z_axis};
    use crate::model::{FdScheme, Model};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use std::sync::Arc;

    fn ghz_model(n: usize) -> Model {
        let dim = 1usize << n;
        let state = move |l: f64| {
            let mut v = CVector::zeros(dim);
            v[0] = re(1.0 / 2f64.sqrt());
            v[dim - 1] = Complex64::from_polar(1.0 / 2f64.sqrt(), -(n as f64) * l);
            Ok(v)
        };
        let deriv = move |l: f64| {
            let mut v = CVector::zeros(dim);
            v[dim - 1] = Complex64::from_polar(1.0 / 2f64.sqrt(), -(n as f64) * l)
                * Complex64::new(0.0, -(n as f64));
            Ok(v)
        };
        Model::from_family(n, Arc::new(state), Some(Arc::new(deriv)), FdScheme::default())
            .unwrap()
    }

    #[test]
    fn computational_basis_projectors() {
        let meas = Measurement::local_axes(AxisAssignment::all_z(2));
        let ops = meas.projectors(2).unwrap();
        assert_eq!(ops.len(), 4);
        for (i, e) in ops.iter().enumerate() {
            for r in 0..4 {
                for c in 0..4 {
                    let expected = if r == i && c == i { 1.0 } else { 0.0 };
                    assert!((e[(r, c)] - re(expected)).norm() < 1e-12);
                }
            }
        }

        let tree = LmccTree::uniform(2, z_axis()).unwrap();
        let ops2 = Measurement::Lmcc(tree).projectors(2).unwrap();
        for (a, b) in ops.iter().zip(&ops2) {
            assert!(max_abs(&(a - b)) < 1e-12);
        }
    }

    #[test]
    fn hadamard_basis_projectors_are_orthogonal() {
        let meas = Measurement::local_axes(AxisAssignment::all_x(2));
        let vecs = meas.outcome_vectors(2).unwrap().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let g = vecs[i].dotc(&vecs[j]).norm();
                if i == j {
                    assert_abs_diff_eq!(g, 1.0, epsilon = 1e-12);
                } else {
                    assert!(g < 1e-12);
                }
            }
        }
        meas.projectors(2).unwrap();
    }

    #[test]
    fn ghz_probabilities() {
        let model = ghz_model(2);
        let s0 = model.encoded_state(0.0).unwrap();
        let comp = Measurement::local_axes(AxisAssignment::all_z(2));
        let p = outcome_probabilities(&s0, &comp).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[3], 0.5, epsilon = 1e-12);
        assert!(p[1] < 1e-12 && p[2] < 1e-12);

        let lambda = 0.37;
        let sx = model.encoded_state(lambda).unwrap();
        let had = Measurement::local_axes(AxisAssignment::all_x(2));
        let p = outcome_probabilities(&sx, &had).unwrap();
        let theta = 2.0 * lambda;
        // parity pattern (1 ± cos θ)/4
        for (x, expected) in [
            (0usize, (1.0 + theta.cos()) / 4.0),
            (1, (1.0 - theta.cos()) / 4.0),
            (2, (1.0 - theta.cos()) / 4.0),
            (3, (1.0 + theta.cos()) / 4.0),
        ] {
            assert_abs_diff_eq!(p[x], expected, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ghz_cfi_reaches_qfi_in_hadamard_basis() {
        for lambda in [0.0, 0.37] {
            let model = ghz_model(2);
            let had = Measurement::local_axes(AxisAssignment::all_x(2));
            let f = cfi(&model, &had, lambda).unwrap();
            assert_abs_diff_eq!(f, 4.0, epsilon = 1e-10);

            let comp = Measurement::local_axes(AxisAssignment::all_z(2));
            let f0 = cfi(&model, &comp, lambda).unwrap();
            assert!(f0 < 1e-10, "computational basis carries no information");
        }
    }

    #[test]
    fn saturation_check_ghz() {
        let model = ghz_model(3);
        let m = model.m_matrix(0.4).unwrap();
        let had = Measurement::local_axes(AxisAssignment::all_x(3));
        let rep = saturation_check(&m, &had).unwrap();
        assert!(rep.saturated, "residual {}", rep.residual);

        let comp = Measurement::local_axes(AxisAssignment::all_z(3));
        let rep = saturation_check(&m, &comp).unwrap();
        assert!(!rep.saturated);
        assert!(rep.residual > 0.1);

        let zero = MMatrix::new(3, CMatrix::zeros(8, 8)).unwrap();
        assert!(saturation_check(&zero, &comp).unwrap().saturated);
    }

    #[test]
    fn explicit_measurement_round_trip() {
        let meas = Measurement::local_axes(AxisAssignment::all_x(2));
        let explicit = Measurement::Explicit(meas.projectors(2).unwrap());
        let model = ghz_model(2);
        let f = cfi(&model, &explicit, 0.2).unwrap();
        assert_abs_diff_eq!(f, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn povm_construction_validates_sum_rules() {
        let trine = |e: BlochVector, n1: BlochVector| -> Vec<PovmOutcome> {
            let c = (-0.5, 3f64.sqrt() / 2.0);
            vec![
                PovmOutcome { weight: 2.0 / 3.0, axis: n1 },
                PovmOutcome { weight: 2.0 / 3.0, axis: n1 * c.0 + e * c.1 },
                PovmOutcome { weight: 2.0 / 3.0, axis: n1 * c.0 - e * c.1 },
            ]
        };
        let good = LocalPovm::new(vec![
            trine(crate::linalg::y_axis(), x_axis()),
            trine(crate::linalg::y_axis(), x_axis()),
        ]);
        assert!(good.is_ok());
        let povm = good.unwrap();

        // projectors must still be complete
        Measurement::Povm(povm.clone()).projectors(2).unwrap();

        let reduced = reduce_to_projective(&povm);
        assert_eq!(reduced.axes().axes()[0], x_axis());

        let bad = LocalPovm::new(vec![vec![
            PovmOutcome { weight: 1.0, axis: x_axis() },
            PovmOutcome { weight: 1.0, axis: x_axis() },
        ]]);
        assert!(matches!(bad, Err(Error::InvalidMeasurement(_))));

        // an already-projective POVM reduces to itself
        let projective = LocalPovm::new(vec![vec![
            PovmOutcome { weight: 1.0, axis: x_axis() },
            PovmOutcome { weight: 1.0, axis: -x_axis() },
        ]])
        .unwrap();
        assert_eq!(reduce_to_projective(&projective).axes().axes(), &[x_axis()]);
    }

    #[test]
    fn trine_povm_saturates_and_reduces_on_ghz() {
        let model = ghz_model(2);
        let m = model.m_matrix(0.3).unwrap();
        let trine = |n1: BlochVector| -> Vec<PovmOutcome> {
            // stay inside the X-Y plane so every outcome axis saturates
            let e = z_axis().cross(&n1).normalize();
            let c = (-0.5, 3f64.sqrt() / 2.0);
            vec![
                PovmOutcome { weight: 2.0 / 3.0, axis: n1 },
                PovmOutcome { weight: 2.0 / 3.0, axis: n1 * c.0 + e * c.1 },
                PovmOutcome { weight: 2.0 / 3.0, axis: n1 * c.0 - e * c.1 },
            ]
        };
        let povm = LocalPovm::new(vec![trine(x_axis()), trine(x_axis())]).unwrap();
        let rep = saturation_check(&m, &Measurement::Povm(povm.clone())).unwrap();
        assert!(rep.saturated, "povm residual {}", rep.residual);
        let reduced = Measurement::Local(reduce_to_projective(&povm));
        let rep = saturation_check(&m, &reduced).unwrap();
        assert!(rep.saturated, "reduced residual {}", rep.residual);
    }
}
