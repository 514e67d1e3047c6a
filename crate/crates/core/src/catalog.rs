//! Built-in models and reference measurements used by the tests and the
//! CLI: the GHZ phase family, the three-qubit W-state model with the
//! `X₁X₂ + X₂X₃` coupling and its closed-form planar measurement, the
//! sign-adjusted W chain under `Σ(XX + YY)`, and the `XX + YY` three-qubit
//! counterexample with no saturating local measurement.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hoc::AxisAssignment;
use crate::linalg::{self, re, BlochVector, CMatrix, CVector, StateVector};
use crate::model::{FdScheme, Model};
use crate::povm::{LocalMeasurement, Measurement};

/// Where a catalog entry is expected to admit a saturating local
/// measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expected {
    /// Saturable at every λ.
    FeasibleAllLambda,
    /// Saturable at λ = 0 (the only point the reference covers).
    FeasibleAtZero,
    /// Not saturable at λ = 0.
    InfeasibleAtZero,
}

/// A named built-in model.
#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    /// `None` means the qubit count is a free (possibly parity-constrained)
    /// parameter.
    pub fixed_qubits: Option<usize>,
    pub expected: Expected,
}

pub const ENTRIES: &[CatalogEntry] = &[
    CatalogEntry {
        name: "ghz",
        description: "GHZ phase family (|0…0⟩ + e^{-iNλ}|1…1⟩)/√2; any N ≥ 2",
        fixed_qubits: None,
        expected: Expected::FeasibleAllLambda,
    },
    CatalogEntry {
        name: "w3_xx",
        description: "three-qubit W probe under H = X₁X₂ + X₂X₃",
        fixed_qubits: Some(3),
        expected: Expected::FeasibleAllLambda,
    },
    CatalogEntry {
        name: "wtilde_xy",
        description: "sign-adjusted W probe under H = Σ(X_jX_{j+1} + Y_jY_{j+1}); odd N ≥ 3",
        fixed_qubits: None,
        expected: Expected::FeasibleAtZero,
    },
    CatalogEntry {
        name: "w3_xxyy_counter",
        description: "three-qubit W probe under H = X₁X₂ + X₂X₃ + Y₁Y₂ + Y₂Y₃ (no saturating LM at λ = 0)",
        fixed_qubits: Some(3),
        expected: Expected::InfeasibleAtZero,
    },
];

pub fn entry(name: &str) -> Result<&'static CatalogEntry> {
    ENTRIES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownCatalog(name.to_string()))
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz_state(nqubits: usize) -> Result<StateVector> {
    if nqubits < 2 {
        return Err(Error::Precondition("ghz needs at least 2 qubits".into()));
    }
    let dim = 1usize << nqubits;
    let mut v = CVector::zeros(dim);
    v[0] = re(1.0 / 2f64.sqrt());
    v[dim - 1] = re(1.0 / 2f64.sqrt());
    StateVector::new(nqubits, v)
}

/// Equal-weight single-excitation superposition.
pub fn w_state(nqubits: usize) -> Result<StateVector> {
    if nqubits < 2 {
        return Err(Error::Precondition("w state needs at least 2 qubits".into()));
    }
    let dim = 1usize << nqubits;
    let mut v = CVector::zeros(dim);
    for q in 0..nqubits {
        v[1 << (nqubits - 1 - q)] = re(1.0 / (nqubits as f64).sqrt());
    }
    StateVector::new(nqubits, v)
}

/// The alternating sign vector S̃: `S̃(1) = 1`, `S̃(2) = 0`, and
/// `S̃(i) + S̃(i+2) = 1`, recorded here 0-indexed. Odd qubit counts only;
/// this is what makes `⟨H⟩ = 0` on the sign-adjusted W state.
pub fn wtilde_signs(nqubits: usize) -> Result<Vec<u8>> {
    if nqubits < 3 || nqubits.is_multiple_of(2) {
        return Err(Error::Precondition(format!(
            "sign-adjusted W chain needs odd N ≥ 3, got {nqubits}"
        )));
    }
    let mut s = vec![0u8; nqubits];
    s[0] = 1;
    s[1] = 0;
    for i in 0..nqubits - 2 {
        s[i + 2] = 1 - s[i];
    }
    Ok(s)
}

/// W state with branch signs `(-1)^{S̃(i)}`.
pub fn wtilde_state(nqubits: usize) -> Result<StateVector> {
    let signs = wtilde_signs(nqubits)?;
    let dim = 1usize << nqubits;
    let mut v = CVector::zeros(dim);
    for (q, s) in signs.iter().enumerate() {
        let amp = if *s == 1 { -1.0 } else { 1.0 };
        v[1 << (nqubits - 1 - q)] = re(amp / (nqubits as f64).sqrt());
    }
    StateVector::new(nqubits, v)
}

fn nearest_neighbor_chain(nqubits: usize, with_yy: bool) -> Result<CMatrix> {
    let dim = 1usize << nqubits;
    let mut h = CMatrix::zeros(dim, dim);
    for j in 0..nqubits - 1 {
        h += linalg::embed_operators(
            &[(j, linalg::pauli_x()), (j + 1, linalg::pauli_x())],
            nqubits,
        )?;
        if with_yy {
            h += linalg::embed_operators(
                &[(j, linalg::pauli_y()), (j + 1, linalg::pauli_y())],
                nqubits,
            )?;
        }
    }
    Ok(h)
}

fn check_qubits(e: &CatalogEntry, nqubits: usize) -> Result<()> {
    if let Some(fixed) = e.fixed_qubits {
        if nqubits != fixed {
            return Err(Error::Precondition(format!(
                "catalog entry `{}` is fixed at {fixed} qubits, got {nqubits}",
                e.name
            )));
        }
    }
    Ok(())
}

/// Build a catalog model by name.
pub fn build_model(name: &str, nqubits: usize) -> Result<Model> {
    let e = entry(name)?;
    check_qubits(e, nqubits)?;
    match name {
        "ghz" => ghz_family_model(nqubits),
        "w3_xx" => Model::with_hamiltonian(w_state(3)?, nearest_neighbor_chain(3, false)?, 1.0),
        "wtilde_xy" => {
            let probe = wtilde_state(nqubits)?;
            let h = nearest_neighbor_chain(nqubits, true)?;
            let mean = linalg::expectation(&h, probe.amplitudes()).re;
            if mean.abs() > 1e-10 {
                return Err(Error::Inconsistent(format!(
                    "sign-adjusted W chain has ⟨H⟩ = {mean:.3e}, expected 0"
                )));
            }
            Model::with_hamiltonian(probe, h, 1.0)
        }
        "w3_xxyy_counter" => {
            Model::with_hamiltonian(w_state(3)?, nearest_neighbor_chain(3, true)?, 1.0)
        }
        _ => Err(Error::UnknownCatalog(name.to_string())),
    }
}

/// GHZ phase family `(|0…0⟩ + e^{-iNλ}|1…1⟩)/√2` with its analytic
/// derivative.
pub fn ghz_family_model(nqubits: usize) -> Result<Model> {
    if nqubits < 2 {
        return Err(Error::Precondition("ghz needs at least 2 qubits".into()));
    }
    let dim = 1usize << nqubits;
    let rate = nqubits as f64;
    let state = move |l: f64| -> Result<CVector> {
        let mut v = CVector::zeros(dim);
        v[0] = re(1.0 / 2f64.sqrt());
        v[dim - 1] = Complex64::from_polar(1.0 / 2f64.sqrt(), -rate * l);
        Ok(v)
    };
    let derivative = move |l: f64| -> Result<CVector> {
        let mut v = CVector::zeros(dim);
        v[dim - 1] =
            Complex64::from_polar(1.0 / 2f64.sqrt(), -rate * l) * Complex64::new(0.0, -rate);
        Ok(v)
    };
    Model::from_family(
        nqubits,
        Arc::new(state),
        Some(Arc::new(derivative)),
        FdScheme::default(),
    )
}

/// Hamiltonian realization of the same family, `H = -½ Σ Z_j`, for
/// cross-checking the generic-family path.
pub fn ghz_hamiltonian_model(nqubits: usize) -> Result<Model> {
    let probe = ghz_state(nqubits)?;
    let dim = probe.dim();
    let mut h = CMatrix::zeros(dim, dim);
    for q in 0..nqubits {
        h += linalg::embed_operators(&[(q, linalg::pauli_z())], nqubits)?;
    }
    Model::with_hamiltonian(probe, h * re(-0.5), 1.0)
}

/// Closed-form planar angles (α₁, α₂, α₃) of the saturating measurement
/// for the `w3_xx` model, used as the independent reference against the
/// coupling-matrix pipeline.
pub fn w3_reference_angles(lambda: f64) -> [f64; 3] {
    let l = lambda;
    let cot2 = -((2.0 * (41.0 + 23.0 * (4.0 * l).cos())
        * (29.0 * (2.0 * l).cos() + 6.0 * (6.0 * l).cos()).powi(2))
    .sqrt()
        - 107.0 * (4.0 * l).sin()
        + 282.0 * (8.0 * l).sin())
        / (8.0 * (5.0 + 93.0 * (4.0 * l).cos()));
    let alpha2 = 1f64.atan2(cot2);
    let (s2, c2) = alpha2.sin_cos();
    let u = -5.0 * s2 * (2.0 * l).cos() - 2.0 * c2 * (2.0 * l).sin();
    let v = -7.0 * c2 - 6.0 * s2 * (4.0 * l).sin();
    let alpha1 = v.atan2(u);
    [alpha1, alpha2, alpha1]
}

/// The reference measurement a catalog entry is known to saturate with,
/// together with its expectation. Errors for the counterexample, which has
/// none.
pub fn reference_measurement(
    name: &str,
    nqubits: usize,
    lambda: f64,
) -> Result<(Measurement, Expected)> {
    let e = entry(name)?;
    check_qubits(e, nqubits)?;
    let measurement = match name {
        "ghz" => Measurement::local_axes(AxisAssignment::all_x(nqubits)),
        "w3_xx" => {
            let angles = w3_reference_angles(lambda);
            Measurement::local_axes(AxisAssignment::planar(&angles))
        }
        "wtilde_xy" => {
            // x̂ on the chain ends, ẑ in the bulk; valid at λ = 0.
            let mut axes = vec![linalg::z_axis(); nqubits];
            axes[0] = linalg::x_axis();
            axes[nqubits - 1] = linalg::x_axis();
            Measurement::Local(LocalMeasurement::new(AxisAssignment::new(axes)?))
        }
        "w3_xxyy_counter" => {
            return Err(Error::Precondition(
                "the counterexample has no reference measurement".into(),
            ))
        }
        _ => return Err(Error::UnknownCatalog(name.to_string())),
    };
    Ok((measurement, e.expected))
}

/// Probe states addressable by name in model spec files.
pub fn named_probe(name: &str, nqubits: usize) -> Result<StateVector> {
    match name {
        "ghz" => ghz_state(nqubits),
        "w" => w_state(nqubits),
        "wtilde" => wtilde_state(nqubits),
        _ => Err(Error::UnknownCatalog(name.to_string())),
    }
}

/// Per-qubit axes of a local reference measurement, when the entry has one.
pub fn reference_axes(name: &str, nqubits: usize, lambda: f64) -> Result<Vec<BlochVector>> {
    match reference_measurement(name, nqubits, lambda)? {
        (Measurement::Local(local), _) => Ok(local.axes().axes().to_vec()),
        _ => Err(Error::Precondition(format!(
            "catalog entry `{name}` has no local reference measurement"
        ))),
    }
}
