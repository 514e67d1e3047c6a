//! End-to-end analysis of a model at one parameter value or over a grid:
//! QFI, structure classification of `M`, the best local-measurement
//! construction (structured, planar, or numeric), and the classically
//! communicating tree, all folded into a serializable report.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::hoc::{
    hoc_residual, hoc_solve_numeric, planar_pair_certificate, solve_planar_three_qubit,
    AxisAssignment, SolveOptions, Verdict,
};
use crate::imp::{classify_m, ghz_extract, lmcc_build, structure_measurement, GhzPair, MKind};
use crate::model::Model;
use crate::povm::{cfi, Measurement};
use crate::tol;

/// Pipeline knobs; identical options and seed give byte-identical reports.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub seed: u64,
    pub restarts: usize,
    /// Residual below which an axis assignment counts as saturating.
    pub feasibility_threshold: f64,
    /// Measurement order for the LMCC tree; identity when unset.
    pub lmcc_order: Option<Vec<usize>>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 16,
            feasibility_threshold: tol::FEASIBILITY,
            lmcc_order: None,
        }
    }
}

/// Which construction produced the local-measurement answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LmMethod {
    /// `M = 0`: every measurement saturates.
    TrivialZero,
    /// Closed-form axes from the structure class of `M`.
    Structure,
    /// Analytic three-qubit planar pipeline.
    Planar,
    /// Multistart numeric search.
    Numeric,
}

#[derive(Debug, Clone, Serialize)]
pub struct LmReport {
    pub feasible: bool,
    pub verdict: Verdict,
    pub method: LmMethod,
    /// One unit axis per qubit, present when feasible.
    pub axes: Option<Vec<[f64; 3]>>,
    pub residual: f64,
    pub cfi: Option<f64>,
    pub cfi_over_qfi: Option<f64>,
    pub restarts_used: usize,
    /// Analytic infeasibility certificate, when one applies.
    pub certificate: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LmccReport {
    pub order: Vec<usize>,
    /// Axes in heap order: step d, outcome prefix p at index `2^d - 1 + p`.
    pub axes: Vec<[f64; 3]>,
    pub leaf_residual: f64,
    pub cfi: f64,
    pub cfi_over_qfi: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub lambda: f64,
    pub nqubits: usize,
    pub qfi: f64,
    pub m_structure: MKind,
    /// Branch pair behind a diagonal `M`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ghz: Option<GhzPair>,
    /// Why extraction failed on a diagonal `M`, when it did.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ghz_note: Option<String>,
    pub lm: LmReport,
    pub lmcc: LmccReport,
}

fn axes_to_rows(axes: &AxisAssignment) -> Vec<[f64; 3]> {
    axes.axes().iter().map(|a| [a.x, a.y, a.z]).collect()
}

/// Analyze a model at a single parameter value.
pub fn analyze(model: &Model, lambda: f64, opts: &PipelineOptions) -> Result<Report> {
    let n = model.nqubits();
    let qfi_value = model.qfi(lambda)?;
    let m = model.m_matrix(lambda)?;
    let structure = classify_m(&m);

    let (ghz, ghz_note) = if structure.kind == MKind::Diagonal {
        match ghz_extract(&m, &model.encoded_state(lambda)?) {
            Ok(pair) => (Some(pair), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };

    let threshold = opts.feasibility_threshold;
    let mut method = LmMethod::Numeric;
    let mut report = None;

    if structure.kind == MKind::Zero {
        method = LmMethod::TrivialZero;
        let axes = AxisAssignment::all_z(n);
        let residual = hoc_residual(&m, &axes)?;
        report = Some(crate::hoc::HocReport::feasible_with(axes, residual, 0));
    } else if let Some(axes) = structure_measurement(structure.kind, n) {
        let residual = hoc_residual(&m, &axes)?;
        if residual < threshold {
            method = LmMethod::Structure;
            report = Some(crate::hoc::HocReport::feasible_with(axes, residual, 0));
        }
    }
    if report.is_none() && n == 3 {
        if let Ok(planar) = solve_planar_three_qubit(model, lambda) {
            if planar.residual < threshold || planar.residual == 0.0 {
                method = LmMethod::Planar;
                report = Some(planar);
            }
        }
    }
    let hoc_report = match report {
        Some(r) => r,
        None => {
            method = LmMethod::Numeric;
            hoc_solve_numeric(
                &m,
                &SolveOptions {
                    restarts: opts.restarts,
                    seed: opts.seed,
                    feasibility_threshold: threshold,
                    ..Default::default()
                },
            )?
        }
    };

    let certificate = if hoc_report.feasible {
        None
    } else {
        planar_pair_certificate(model, lambda)?.map(|c| c.to_string())
    };

    let (lm_cfi, lm_ratio) = match &hoc_report.axes {
        Some(axes) => {
            let f = cfi(model, &Measurement::local_axes(axes.clone()), lambda)?;
            (Some(f), ratio(f, qfi_value))
        }
        None => (None, None),
    };

    let lm = LmReport {
        feasible: hoc_report.feasible,
        verdict: hoc_report.verdict,
        method,
        axes: hoc_report.axes.as_ref().map(axes_to_rows),
        residual: hoc_report.residual,
        cfi: lm_cfi,
        cfi_over_qfi: lm_ratio,
        restarts_used: hoc_report.restarts_used,
        certificate,
    };

    let order: Vec<usize> = opts
        .lmcc_order
        .clone()
        .unwrap_or_else(|| (0..n).collect());
    let build = lmcc_build(&m, &order)?;
    let lmcc_cfi = cfi(model, &Measurement::Lmcc(build.tree.clone()), lambda)?;
    let lmcc = LmccReport {
        order,
        axes: build.tree.axes().iter().map(|a| [a.x, a.y, a.z]).collect(),
        leaf_residual: build.leaf_residual,
        cfi: lmcc_cfi,
        cfi_over_qfi: ratio(lmcc_cfi, qfi_value),
    };

    Ok(Report {
        lambda,
        nqubits: n,
        qfi: qfi_value,
        m_structure: structure.kind,
        ghz,
        ghz_note,
        lm,
        lmcc,
    })
}

fn ratio(cfi_value: f64, qfi_value: f64) -> Option<f64> {
    (qfi_value > tol::STRUCTURAL).then(|| cfi_value / qfi_value)
}

/// One grid point of a sweep; failures are recorded per point without
/// aborting the rest of the grid.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Analyze every grid point (in parallel; the output order follows the
/// grid, so reports are deterministic).
pub fn sweep(model: &Model, grid: &[f64], opts: &PipelineOptions) -> Vec<SweepPoint> {
    grid.par_iter()
        .map(|&lambda| match analyze(model, lambda, opts) {
            Ok(report) => SweepPoint {
                lambda,
                report: Some(report),
                error: None,
            },
            Err(e) => SweepPoint {
                lambda,
                report: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

/// Inclusive linspace with `count` points (empty when `count` is 0).
pub fn lambda_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ghz_pipeline_uses_structure_method() {
        let model = catalog::build_model("ghz", 4).unwrap();
        let report = analyze(&model, 0.5, &PipelineOptions::default()).unwrap();
        assert_eq!(report.m_structure, MKind::Diagonal);
        assert_eq!(report.lm.method, LmMethod::Structure);
        assert!(report.lm.feasible);
        assert_abs_diff_eq!(report.qfi, 16.0, epsilon = 1e-10);
        let ratio = report.lm.cfi_over_qfi.unwrap();
        assert_abs_diff_eq!(ratio, 1.0, epsilon = 1e-10);
        let pair = report.ghz.unwrap();
        assert_eq!(
            (pair.plus_index.min(pair.minus_index), pair.plus_index.max(pair.minus_index)),
            (0, 15)
        );
        assert!(report.lmcc.leaf_residual < 1e-9);
        assert_abs_diff_eq!(report.lmcc.cfi_over_qfi.unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn w3_pipeline_uses_planar_method() {
        let model = catalog::build_model("w3_xx", 3).unwrap();
        let report = analyze(&model, 0.4, &PipelineOptions::default()).unwrap();
        assert_eq!(report.m_structure, MKind::General);
        assert_eq!(report.lm.method, LmMethod::Planar);
        assert!(report.lm.feasible);
        assert!(report.lm.residual < 1e-8);
    }

    #[test]
    fn counterexample_pipeline_reports_infeasible_with_certificate() {
        let model = catalog::build_model("w3_xxyy_counter", 3).unwrap();
        let report = analyze(&model, 0.0, &PipelineOptions::default()).unwrap();
        assert!(!report.lm.feasible);
        assert_eq!(report.lm.verdict, Verdict::NumericInfeasible);
        assert!(report.lm.certificate.is_some());
        assert!(report.lm.residual > 1e-3);
        // LMCC still reaches the bound
        assert_abs_diff_eq!(report.lmcc.cfi_over_qfi.unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn degenerate_model_is_trivially_saturable() {
        use std::sync::Arc;
        let f = |_l: f64| {
            let mut v = crate::linalg::CVector::zeros(4);
            v[0] = crate::linalg::re(1.0);
            Ok(v)
        };
        let model =
            Model::from_family(2, Arc::new(f), None, crate::model::FdScheme::default()).unwrap();
        let report = analyze(&model, 0.3, &PipelineOptions::default()).unwrap();
        assert_eq!(report.m_structure, MKind::Zero);
        assert_eq!(report.lm.method, LmMethod::TrivialZero);
        assert!(report.lm.feasible);
        assert_eq!(report.lm.residual, 0.0);
        // CFI/QFI is undefined at zero information
        assert!(report.lm.cfi_over_qfi.is_none());
        assert!(report.qfi < 1e-12);
    }

    #[test]
    fn sweep_preserves_grid_order_and_handles_empty() {
        let model = catalog::build_model("ghz", 4).unwrap();
        let grid = lambda_grid(0.0, 1.0, 3);
        assert_eq!(grid, vec![0.0, 0.5, 1.0]);
        let points = sweep(&model, &grid, &PipelineOptions::default());
        assert_eq!(points.len(), 3);
        for (p, l) in points.iter().zip(&grid) {
            assert_eq!(p.lambda, *l);
            let report = p.report.as_ref().unwrap();
            assert!(report.lm.feasible);
            assert_abs_diff_eq!(report.lm.cfi_over_qfi.unwrap(), 1.0, epsilon = 1e-10);
        }
        assert!(sweep(&model, &[], &PipelineOptions::default()).is_empty());
        assert!(lambda_grid(0.0, 1.0, 0).is_empty());
    }
}
