//! Analytic three-qubit planar pipeline.
//!
//! When every level-1 vector points along ẑ, all axes live in the X-Y
//! plane and the level-2 conditions become bilinear forms
//! `⟨α_j|T_jk|α_k⟩ = 0` in the planar angles. Eliminating α₁ and α₃
//! leaves a single quadratic `T_xx s² + 2T_xy s + T_yy = 0` in
//! `s = cot α₂` built from `T = -T₂₁ J T₁₃ J T₃₂` with `J = iY`, whose
//! discriminant is `-Det T ≥ 0`, so a real solution always exists.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::hoc::{
    hoc_residual, is_z_aligned, pair_coupling, single_qubit_plane_vectors, subset_traces,
    AxisAssignment, HocReport,
};
use crate::model::Model;
use crate::tol;

/// Which computation produced the planar angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanarBranch {
    /// Generic case: `s = (-T_xy + √(T_xy² - T_xx T_yy)) / T_xx`.
    QuadraticRoot,
    /// `T_xx = 0`: the quadratic degenerates to `2 T_xy s + T_yy = 0`.
    LinearFallback,
    /// `T_12|α₂⟩ = T_32|α₂⟩ = 0`: α₁ and α₃ come from eigenvectors of
    /// `T_13`.
    EigenvectorFallback,
}

#[derive(Debug, Clone)]
pub struct PlanarSolution {
    /// Planar angles (α₁, α₂, α₃); axis j is `cos α_j x̂ + sin α_j ŷ`.
    pub angles: [f64; 3],
    pub branch: PlanarBranch,
}

/// `J = iY = [[0, 1], [-1, 0]]`, the real form of the Pauli-Y insertions.
fn j_mat() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

/// Solve the three-qubit planar system given the couplings `T_12`, `T_13`,
/// and `T_32`. Pure function of the couplings; precondition checks and
/// residual verification live in [`solve_planar_three_qubit`].
pub fn planar_angles_from_couplings(
    t12: &Matrix2<f64>,
    t13: &Matrix2<f64>,
    t32: &Matrix2<f64>,
) -> PlanarSolution {
    let j = j_mat();
    let t21 = t12.transpose();
    let t = -t21 * j * t13 * j * t32;
    let (txx, txy, tyy) = (t[(0, 0)], t[(0, 1)], t[(1, 1)]);

    let disc = (txy * txy - txx * tyy).max(0.0);
    let sq = disc.sqrt();
    let (s, mut branch) = if txx.abs() > 1e-14 {
        // "+" root, evaluated without cancellation on either sign of T_xy.
        let s = if txy <= 0.0 {
            (-txy + sq) / txx
        } else {
            -tyy / (txy + sq)
        };
        (s, PlanarBranch::QuadraticRoot)
    } else if txy.abs() > 1e-14 {
        (-tyy / (2.0 * txy), PlanarBranch::LinearFallback)
    } else {
        // cot α₂ = 0, the continuous limit of the root formula.
        (0.0, PlanarBranch::LinearFallback)
    };

    // cot α₂ = s with α₂ ∈ (0, π), matching the sin α₂ ≠ 0 reduction.
    let alpha2 = 1f64.atan2(s);
    let v2 = Vector2::new(alpha2.cos(), alpha2.sin());

    let w1 = j * (t12 * v2);
    let w3 = j * (t32 * v2);
    if w1.norm() <= tol::DEGENERATE_COUPLING || w3.norm() <= tol::DEGENERATE_COUPLING {
        branch = PlanarBranch::EigenvectorFallback;
        let eig = t13.symmetric_eigen();
        let e1 = eig.eigenvectors.column(0).into_owned();
        let e3 = eig.eigenvectors.column(1).into_owned();
        return PlanarSolution {
            angles: [angle_of(&e1), alpha2, angle_of(&e3)],
            branch,
        };
    }
    PlanarSolution {
        angles: [angle_of(&w1), alpha2, angle_of(&w3)],
        branch,
    }
}

fn angle_of(v: &Vector2<f64>) -> f64 {
    v.y.atan2(v.x)
}

/// Full analytic pipeline for a three-qubit planar model: check the
/// preconditions, build the couplings, solve, and verify the result
/// against the complete hierarchy. Errors mean "this pipeline does not
/// apply here" and callers should fall back to the numeric search.
pub fn solve_planar_three_qubit(model: &Model, lambda: f64) -> Result<HocReport> {
    if model.nqubits() != 3 {
        return Err(Error::Precondition(format!(
            "planar pipeline requires 3 qubits, model has {}",
            model.nqubits()
        )));
    }
    let m = model.m_matrix(lambda)?;
    if m.is_negligible() {
        // Degenerate model: every measurement saturates.
        return Ok(HocReport::feasible_with(AxisAssignment::all_z(3), 0.0, 0));
    }
    let planes = single_qubit_plane_vectors(&m)?;
    for (q, p) in planes.iter().enumerate() {
        if !is_z_aligned(p) {
            return Err(Error::Precondition(format!(
                "level-1 vector of qubit {q} is not aligned with ẑ"
            )));
        }
    }
    // The |α| = 3 condition must vanish identically on the plane; probe it
    // with generic angle triples before trusting the pairwise reduction.
    let scale = m.max_abs();
    for probe_angles in [[0.3, 0.7, 1.1], [1.9, 0.2, 2.6]] {
        let traces = subset_traces(&m, &AxisAssignment::planar(&probe_angles))?;
        if traces[0b111].norm() > 1e-8 * scale.max(1.0) {
            return Err(Error::Precondition(
                "triple condition does not vanish on the X-Y plane".into(),
            ));
        }
    }

    let t12 = pair_coupling(model, lambda, 0, 1)?.matrix;
    let t13 = pair_coupling(model, lambda, 0, 2)?.matrix;
    let t32 = pair_coupling(model, lambda, 2, 1)?.matrix;
    let solution = planar_angles_from_couplings(&t12, &t13, &t32);
    let axes = AxisAssignment::planar(&solution.angles);
    let residual = hoc_residual(&m, &axes)?;
    if residual >= tol::FEASIBILITY {
        return Err(Error::Precondition(format!(
            "planar solution residual {residual:.3e} exceeds the feasibility threshold"
        )));
    }
    Ok(HocReport::feasible_with(axes, residual, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix2;

    #[test]
    fn vanishing_m_short_circuits_to_computational_basis() {
        use std::sync::Arc;
        let constant = |_l: f64| {
            let mut v = crate::linalg::CVector::zeros(8);
            v[3] = crate::linalg::re(1.0);
            Ok(v)
        };
        let model = crate::model::Model::from_family(
            3,
            Arc::new(constant),
            None,
            crate::model::FdScheme::default(),
        )
        .unwrap();
        let report = solve_planar_three_qubit(&model, 0.7).unwrap();
        assert!(report.feasible);
        assert_eq!(report.residual, 0.0);
        assert_eq!(report.axes.unwrap(), AxisAssignment::all_z(3));
    }

    #[test]
    fn degenerate_branch_uses_eigenvectors() {
        // T_12 = T_32 = diag(k, 0) share the null vector ŷ, and the
        // quadratic lands exactly there; α₁/α₃ must then come from the
        // eigenvectors of T_13.
        let k = 0.8;
        let t12 = Matrix2::new(k, 0.0, 0.0, 0.0);
        let t32 = t12;
        let t13 = Matrix2::new(1.0, 1.0, 1.0, 2.0);
        let sol = planar_angles_from_couplings(&t12, &t13, &t32);
        assert_eq!(sol.branch, PlanarBranch::EigenvectorFallback);
        assert!((sol.angles[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);

        let v = |a: f64| Vector2::new(a.cos(), a.sin());
        let (a1, a2, a3) = (sol.angles[0], sol.angles[1], sol.angles[2]);
        assert!((v(a1).transpose() * t12 * v(a2))[(0, 0)].abs() < 1e-12);
        assert!((v(a3).transpose() * t32 * v(a2))[(0, 0)].abs() < 1e-12);
        assert!((v(a1).transpose() * t13 * v(a3))[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn linear_fallback_solves_degenerate_quadratic() {
        // With T_12 = T_32 = I and T_13 = [[a, b], [b, 0]] the eliminated
        // form is T = [[0, -b], [-b, a]]: T_xx = 0 with T_xy ≠ 0.
        let t12 = Matrix2::identity();
        let t32 = Matrix2::identity();
        let t13 = Matrix2::new(0.6, 0.25, 0.25, 0.0);
        let j = j_mat();
        let t: Matrix2<f64> = -t12.transpose() * j * t13 * j * t32;
        assert!(t[(0, 0)].abs() < 1e-15);
        let sol = planar_angles_from_couplings(&t12, &t13, &t32);
        assert_eq!(sol.branch, PlanarBranch::LinearFallback);
        let v = |a: f64| Vector2::new(a.cos(), a.sin());
        let (a1, a2, a3) = (sol.angles[0], sol.angles[1], sol.angles[2]);
        assert!((v(a2).transpose() * t * v(a2))[(0, 0)].abs() < 1e-12);
        assert!((v(a1).transpose() * t12 * v(a2))[(0, 0)].abs() < 1e-12);
        assert!((v(a3).transpose() * t32 * v(a2))[(0, 0)].abs() < 1e-12);
        assert!((v(a1).transpose() * t13 * v(a3))[(0, 0)].abs() < 1e-12);
    }
}
