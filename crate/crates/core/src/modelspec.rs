//! JSON model-spec files: a probe (amplitudes or a named state), a
//! Hamiltonian as weighted Pauli strings, and an optional evolution time —
//! or a catalog shorthand naming a built-in model.
//!
//! ```json
//! {"nqubits": 2,
//!  "probe": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
//!  "hamiltonian": [{"coefficient": 1.0, "pauli": "ZI"}],
//!  "time": 1.0}
//! ```
//!
//! or `{"catalog": "w3_xx"}`.

use serde::Deserialize;

use crate::catalog;
use crate::error::{Error, Result};
use crate::linalg::{pauli_string_matrix, re, CMatrix, CVector, StateVector};
use crate::model::Model;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    catalog: Option<String>,
    nqubits: Option<usize>,
    probe: Option<ProbeSpec>,
    hamiltonian: Option<Vec<RawTerm>>,
    time: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ProbeSpec {
    Named(String),
    Amplitudes(Vec<[f64; 2]>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    coefficient: f64,
    pauli: String,
}

/// A parsed model plus non-fatal notes (currently only probe
/// renormalization).
#[derive(Debug, Clone)]
pub struct ParsedModel {
    pub model: Model,
    pub warnings: Vec<String>,
}

/// Probe norms may deviate by at most this before the spec is rejected;
/// anything smaller is silently renormalized with a warning.
const RENORMALIZE_LIMIT: f64 = 1e-6;

/// Parse a JSON model spec.
pub fn parse_model_spec(text: &str) -> Result<ParsedModel> {
    let raw: RawSpec =
        serde_json::from_str(text).map_err(|e| Error::Spec(format!("invalid JSON: {e}")))?;

    if let Some(name) = &raw.catalog {
        if raw.probe.is_some() || raw.hamiltonian.is_some() || raw.time.is_some() {
            return Err(Error::Spec(
                "a catalog shorthand cannot be combined with probe/hamiltonian/time".into(),
            ));
        }
        let entry = catalog::entry(name)?;
        let nqubits = match (raw.nqubits, entry.fixed_qubits) {
            (Some(n), _) => n,
            (None, Some(fixed)) => fixed,
            (None, None) => {
                return Err(Error::Spec(format!(
                    "catalog entry `{name}` needs an explicit nqubits"
                )))
            }
        };
        return Ok(ParsedModel {
            model: catalog::build_model(name, nqubits)?,
            warnings: Vec::new(),
        });
    }

    let probe_spec = raw
        .probe
        .ok_or_else(|| Error::Spec("missing probe".into()))?;
    let terms = raw
        .hamiltonian
        .ok_or_else(|| Error::Spec("missing hamiltonian".into()))?;

    let (probe, mut warnings) = build_probe(probe_spec, raw.nqubits)?;
    let nqubits = probe.nqubits();
    if terms.is_empty() {
        return Err(Error::Spec("hamiltonian has no terms".into()));
    }
    let dim = 1usize << nqubits;
    let mut h = CMatrix::zeros(dim, dim);
    for term in &terms {
        if term.pauli.chars().count() != nqubits {
            return Err(Error::Spec(format!(
                "pauli string `{}` has length {}, expected {nqubits}",
                term.pauli,
                term.pauli.chars().count()
            )));
        }
        h += pauli_string_matrix(&term.pauli)? * re(term.coefficient);
    }
    let time = raw.time.unwrap_or(1.0);
    if !time.is_finite() {
        return Err(Error::Spec("time must be finite".into()));
    }
    let model = Model::with_hamiltonian(probe, h, time)?;
    warnings.shrink_to_fit();
    Ok(ParsedModel { model, warnings })
}

fn build_probe(spec: ProbeSpec, nqubits: Option<usize>) -> Result<(StateVector, Vec<String>)> {
    match spec {
        ProbeSpec::Named(name) => {
            let n = nqubits.ok_or_else(|| {
                Error::Spec("a named probe needs an explicit nqubits".into())
            })?;
            Ok((catalog::named_probe(&name, n)?, Vec::new()))
        }
        ProbeSpec::Amplitudes(pairs) => {
            let len = pairs.len();
            let inferred = len.trailing_zeros() as usize;
            if len < 2 || !len.is_power_of_two() {
                return Err(Error::Spec(format!(
                    "probe has {len} amplitudes, expected a power of two ≥ 2"
                )));
            }
            let n = nqubits.unwrap_or(inferred);
            if len != 1 << n {
                return Err(Error::Spec(format!(
                    "probe has {len} amplitudes but nqubits = {n} needs {}",
                    1usize << n
                )));
            }
            let amps = CVector::from_iterator(
                len,
                pairs.iter().map(|[r, i]| num_complex::Complex64::new(*r, *i)),
            );
            let norm = amps.norm();
            let mut warnings = Vec::new();
            if (norm - 1.0).abs() > crate::tol::IDENTITY {
                if (norm - 1.0).abs() > RENORMALIZE_LIMIT {
                    return Err(Error::Spec(format!(
                        "probe norm {norm} deviates from 1 beyond the renormalization limit"
                    )));
                }
                warnings.push(format!(
                    "probe renormalized: norm was {norm:.12} (deviation {:.3e})",
                    (norm - 1.0).abs()
                ));
            }
            let state = StateVector::renormalized(n, amps, RENORMALIZE_LIMIT)?;
            Ok((state, warnings))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_plain_two_qubit_spec() {
        let text = r#"{
            "nqubits": 2,
            "probe": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
            "hamiltonian": [{"coefficient": 1.0, "pauli": "ZI"}]
        }"#;
        let parsed = parse_model_spec(text).unwrap();
        assert_eq!(parsed.model.nqubits(), 2);
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let text = r#"{
            "nqubits": 2,
            "probe": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
            "hamiltonian": [{"coefficient": 1.0, "pauli": "ZI"}]
        }"#;
        assert!(matches!(parse_model_spec(text), Err(Error::Spec(_))));
    }

    #[test]
    fn catalog_shorthand_matches_builder() {
        let parsed = parse_model_spec(r#"{"catalog": "w3_xx"}"#).unwrap();
        let direct = catalog::build_model("w3_xx", 3).unwrap();
        let lambda = 0.31;
        let a = parsed.model.encoded_state(lambda).unwrap();
        let b = direct.encoded_state(lambda).unwrap();
        assert!((a.inner(&b).norm() - 1.0).abs() < 1e-12);
        assert!(
            (parsed.model.qfi(lambda).unwrap() - direct.qfi(lambda).unwrap()).abs() < 1e-12
        );
    }

    #[test]
    fn near_normalized_probe_warns_and_renormalizes() {
        let eps = 1e-8;
        let text = format!(
            r#"{{
                "probe": [[{}, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
                "hamiltonian": [{{"coefficient": 0.5, "pauli": "XX"}}]
            }}"#,
            1.0 + eps
        );
        let parsed = parse_model_spec(&text).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
        assert!((parsed.model.probe().amplitudes().norm() - 1.0).abs() < 1e-15);

        let text = r#"{
            "probe": [[2.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
            "hamiltonian": [{"coefficient": 0.5, "pauli": "XX"}]
        }"#;
        assert!(parse_model_spec(text).is_err());
    }

    #[test]
    fn named_probe_and_pauli_validation() {
        let parsed = parse_model_spec(
            r#"{"nqubits": 3, "probe": "w",
                "hamiltonian": [{"coefficient": 1.0, "pauli": "XXI"},
                                {"coefficient": 1.0, "pauli": "IXX"}]}"#,
        )
        .unwrap();
        assert_eq!(parsed.model.nqubits(), 3);

        assert!(parse_model_spec(
            r#"{"nqubits": 2, "probe": "ghz",
                "hamiltonian": [{"coefficient": 1.0, "pauli": "Z"}]}"#
        )
        .is_err());
        assert!(parse_model_spec("not json").is_err());
    }
}
