//! Multistart numeric search for saturating axes.
//!
//! Each qubit whose level-1 vector is nonzero is confined to the plane
//! orthogonal to it (one angle); unconstrained qubits keep the full sphere
//! (two angles). The remaining conditions are smooth in the angles, so a
//! damped Gauss-Newton refinement from seeded random starts either drives
//! the residual vector to machine zero or stalls at a local floor. A large
//! best residual across all restarts is reported as numeric infeasibility,
//! which is evidence only — certificates of emptiness are analytic.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::hoc::{single_qubit_plane_vectors, subset_traces, AxisAssignment, HocReport, Verdict};
use crate::imp::orthogonal_axis;
use crate::linalg::BlochVector;
use crate::model::MMatrix;
use crate::tol;

/// Knobs for [`hoc_solve_numeric`]. Restarts are deterministic in `seed`.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Residual below which an assignment counts as saturating.
    pub feasibility_threshold: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            seed: 0,
            max_iters: 80,
            feasibility_threshold: tol::FEASIBILITY,
        }
    }
}

enum QubitParam {
    /// Axis confined to the plane orthogonal to the level-1 vector:
    /// `cos θ e1 + sin θ e2`.
    Planar { e1: BlochVector, e2: BlochVector },
    /// Full sphere: polar and azimuthal angles.
    Free,
}

impl QubitParam {
    fn arity(&self) -> usize {
        match self {
            QubitParam::Planar { .. } => 1,
            QubitParam::Free => 2,
        }
    }

    fn axis(&self, params: &[f64]) -> BlochVector {
        match self {
            QubitParam::Planar { e1, e2 } => e1 * params[0].cos() + e2 * params[0].sin(),
            QubitParam::Free => {
                let (theta, phi) = (params[0], params[1]);
                BlochVector::new(
                    theta.sin() * phi.cos(),
                    theta.sin() * phi.sin(),
                    theta.cos(),
                )
            }
        }
    }
}

struct Objective<'a> {
    m: &'a MMatrix,
    params: Vec<QubitParam>,
    offsets: Vec<usize>,
    dim: usize,
}

impl<'a> Objective<'a> {
    fn new(m: &'a MMatrix) -> Result<Self> {
        let planes = single_qubit_plane_vectors(m)?;
        let scale = m.max_abs().max(1.0);
        let params: Vec<QubitParam> = planes
            .iter()
            .map(|p| {
                if p.norm() > 1e-9 * scale {
                    let normal = p.normalize();
                    let e1 = orthogonal_axis(&normal);
                    let e2 = normal.cross(&e1);
                    QubitParam::Planar { e1, e2 }
                } else {
                    QubitParam::Free
                }
            })
            .collect();
        let mut offsets = Vec::with_capacity(params.len() + 1);
        let mut acc = 0;
        for p in &params {
            offsets.push(acc);
            acc += p.arity();
        }
        offsets.push(acc);
        Ok(Self {
            m,
            params,
            offsets,
            dim: acc,
        })
    }

    fn axes(&self, x: &DVector<f64>) -> AxisAssignment {
        let axes: Vec<BlochVector> = self
            .params
            .iter()
            .enumerate()
            .map(|(q, p)| p.axis(&x.as_slice()[self.offsets[q]..self.offsets[q + 1]]))
            .collect();
        AxisAssignment::new(axes).expect("parametrized axes are unit by construction")
    }

    /// Imaginary parts of the non-empty subset traces (their real parts
    /// vanish identically for anti-Hermitian `M`).
    fn residuals(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let traces = subset_traces(self.m, &self.axes(x))?;
        Ok(DVector::from_iterator(
            traces.len() - 1,
            traces.iter().skip(1).map(|t| t.im),
        ))
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim);
        let mut i = 0;
        for p in &self.params {
            match p {
                QubitParam::Planar { .. } => {
                    x[i] = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                    i += 1;
                }
                QubitParam::Free => {
                    x[i] = rng.gen_range(-1.0f64..1.0).acos();
                    x[i + 1] = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                    i += 2;
                }
            }
        }
        x
    }
}

/// Damped Gauss-Newton on the residual vector with a central-difference
/// Jacobian. Returns the refined point and its max-abs residual.
fn refine(obj: &Objective, mut x: DVector<f64>, max_iters: usize) -> Result<(DVector<f64>, f64)> {
    const FD_STEP: f64 = 1e-6;
    let mut r = obj.residuals(&x)?;
    let mut best = r.amax();
    let mut mu = 1e-3;
    for _ in 0..max_iters {
        if best < 1e-14 {
            break;
        }
        let mut jac = DMatrix::zeros(r.len(), obj.dim);
        for p in 0..obj.dim {
            let mut xp = x.clone();
            xp[p] += FD_STEP;
            let mut xm = x.clone();
            xm[p] -= FD_STEP;
            let col = (obj.residuals(&xp)? - obj.residuals(&xm)?) / (2.0 * FD_STEP);
            jac.set_column(p, &col);
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut improved = false;
        for _ in 0..25 {
            let mut damped = jtj.clone();
            for d in 0..obj.dim {
                damped[(d, d)] += mu;
            }
            let Some(step) = damped.lu().solve(&(-&jtr)) else {
                mu *= 10.0;
                continue;
            };
            let candidate = &x + &step;
            let rc = obj.residuals(&candidate)?;
            if rc.norm_squared() < r.norm_squared() {
                x = candidate;
                r = rc;
                best = r.amax();
                mu = (mu / 3.0).max(1e-12);
                improved = true;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    Ok((x, best))
}

/// Multistart search for axes satisfying the full hierarchy on `M`.
///
/// Always returns a report. `feasible` means the best residual fell below
/// the feasibility threshold; a best residual above the numeric-infeasible
/// floor yields [`Verdict::NumericInfeasible`] with no claim of proof.
pub fn hoc_solve_numeric(m: &MMatrix, opts: &SolveOptions) -> Result<HocReport> {
    let n = m.nqubits();
    if m.is_negligible() {
        // Every measurement saturates a vanishing M; report the
        // computational basis.
        return Ok(HocReport::feasible_with(AxisAssignment::all_z(n), 0.0, 0));
    }
    let obj = Objective::new(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best_residual = f64::INFINITY;
    let mut best_axes = AxisAssignment::all_z(n);
    let mut restarts_used = 0;
    for _ in 0..opts.restarts.max(1) {
        restarts_used += 1;
        let start = obj.random_start(&mut rng);
        let (x, _) = refine(&obj, start, opts.max_iters)?;
        let axes = obj.axes(&x);
        let residual = crate::hoc::hoc_residual(m, &axes)?;
        if residual < best_residual {
            best_residual = residual;
            best_axes = axes;
        }
        if best_residual < opts.feasibility_threshold * 1e-2 {
            break;
        }
    }
    let feasible = best_residual < opts.feasibility_threshold;
    let verdict = if feasible {
        Verdict::Feasible
    } else if best_residual > tol::NUMERIC_INFEASIBLE {
        Verdict::NumericInfeasible
    } else {
        Verdict::Inconclusive
    };
    Ok(HocReport {
        feasible,
        verdict,
        axes: feasible.then_some(best_axes),
        residual: best_residual,
        certificate: None,
        restarts_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hoc::hoc_residual;
    use crate::linalg::{CMatrix, re, CVector, StateVector};
    use crate::model::{FdScheme, Model};
    use num_complex::Complex64;
    use std::sync::Arc;

    #[test]
    fn zero_m_is_trivially_feasible() {
        let m = MMatrix::new(2, CMatrix::zeros(4, 4)).unwrap();
        let report = hoc_solve_numeric(&m, &SolveOptions::default()).unwrap();
        assert!(report.feasible);
        assert_eq!(report.residual, 0.0);
        assert_eq!(report.restarts_used, 0);
        assert_eq!(report.axes.unwrap(), AxisAssignment::all_z(2));
    }

    #[test]
    fn ghz_four_qubits_solves_in_plane() {
        let n = 4usize;
        let dim = 1usize << n;
        let state = move |l: f64| {
            let mut v = CVector::zeros(dim);
            v[0] = re(1.0 / 2f64.sqrt());
            v[dim - 1] = Complex64::from_polar(1.0 / 2f64.sqrt(), -(n as f64) * l);
            Ok(v)
        };
        let model = Model::from_family(n, Arc::new(state), None, FdScheme::Richardson4).unwrap();
        let m = model.m_matrix(0.3).unwrap();
        let report = hoc_solve_numeric(&m, &SolveOptions::default()).unwrap();
        assert!(report.feasible, "residual {}", report.residual);
        assert!(report.residual < 1e-9);
        let axes = report.axes.unwrap();
        for axis in axes.axes() {
            assert!(axis.z.abs() < 1e-8, "axis left the X-Y plane: {axis:?}");
        }
        assert!(hoc_residual(&m, &axes).unwrap() < 1e-9);
    }

    #[test]
    fn same_seed_reproduces_report() {
        let mut v = CVector::zeros(4);
        v[1] = re(0.6);
        v[2] = re(0.8);
        let probe = StateVector::new(2, v).unwrap();
        let h = crate::linalg::kron(&crate::linalg::pauli_x(), &crate::linalg::pauli_z());
        let model = Model::with_hamiltonian(probe, h, 1.0).unwrap();
        let m = model.m_matrix(0.7).unwrap();
        let opts = SolveOptions {
            seed: 42,
            ..Default::default()
        };
        let a = hoc_solve_numeric(&m, &opts).unwrap();
        let b = hoc_solve_numeric(&m, &opts).unwrap();
        assert_eq!(a.residual, b.residual);
        assert_eq!(a.restarts_used, b.restarts_used);
        assert_eq!(
            a.axes.as_ref().map(|x| x.axes().to_vec()),
            b.axes.as_ref().map(|x| x.axes().to_vec())
        );
    }
}
