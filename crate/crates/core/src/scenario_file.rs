//! JSON scenario files.
//!
//! Complex numbers are `[re, im]` pairs, matrices are arrays of rows.
//!
//! ```json
//! {
//!   "dim": 2,
//!   "preparation": {"ket": [[1, 0], [0, 0]]},
//!   "bindings": {
//!     "a": {"kraus": [[[[1, 0], [0, 0]], [[0, 0], [0, 0]]]]},
//!     "d": {"effect": [[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]]}
//!   },
//!   "or_policy": "coherent_sum",
//!   "expression": "d & a | s"
//! }
//! ```
//!
//! A `detector_model` binding defines the label's Kraus operator through
//! its detector interaction and also serves the oracle. `merged_models` holds
//! models of atomic alternatives keyed by their rendered form (`"a + b"`).
//! `povms` lists outcome groups checked by [`validate`].

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::causal::OrderPolicy;
use crate::error::{Error, Result};
use crate::evaluator::{Binding, OrPolicy, Scenario};
use crate::expr::{parse, Query};
use crate::linalg::{ComplexMatrix, Ket, Tolerance};
use crate::measurement::{
    kraus_from_detector_model, spectral_report, DensityMatrix, DetectorModel, Effect, KrausOperator,
};

pub type MatrixSpec = Vec<Vec<Complex64>>;
pub type KetSpec = Vec<Complex64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PreparationSpec {
    Ket(KetSpec),
    Density(MatrixSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModelSpec {
    pub pointer_states: BTreeMap<String, KetSpec>,
    pub post_interaction_states: Vec<KetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<MatrixSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BindingSpec {
    Kraus(Vec<MatrixSpec>),
    Effect(MatrixSpec),
    DetectorModel(DetectorModelSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OrPolicySpec {
    CoherentSum,
    Complement { unitary: MatrixSpec },
    Explicit { kraus: MatrixSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OrderPolicySpec {
    Definite(Vec<String>),
    Mixture(f64),
    IndefiniteCoherent([Complex64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmGroupSpec {
    pub outcomes: Vec<String>,
    /// `true`: effects must sum to the identity; `false`: only `Σ E <= I`.
    #[serde(default = "yes")]
    pub complete: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub dim: usize,
    pub preparation: PreparationSpec,
    #[serde(default)]
    pub bindings: BTreeMap<String, BindingSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub merged_models: BTreeMap<String, DetectorModelSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub povms: Vec<PovmGroupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub or_policy: Option<OrPolicySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_policy: Option<OrderPolicySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
    /// Free-form annotations, ignored by the loader.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

/// A scenario file turned into checked objects.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    /// Detector models by label, plus merged models by rendered alternative.
    pub models: BTreeMap<String, DetectorModel>,
    pub povms: Vec<PovmGroupSpec>,
    pub expression: Option<Query>,
    pub file: ScenarioFile,
}

fn matrix(spec: &MatrixSpec) -> Result<ComplexMatrix> {
    ComplexMatrix::from_rows(spec)
}

fn matrix_spec(m: &ComplexMatrix) -> MatrixSpec {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

fn detector_model(spec: &DetectorModelSpec, tol: &Tolerance) -> Result<DetectorModel> {
    let pointers = spec
        .pointer_states
        .iter()
        .map(|(l, k)| Ok((l.clone(), Ket::new(k.clone(), tol)?)))
        .collect::<Result<Vec<_>>>()?;
    let post = spec
        .post_interaction_states
        .iter()
        .map(|k| Ket::new(k.clone(), tol))
        .collect::<Result<Vec<_>>>()?;
    let transition = spec.transition.as_ref().map(matrix).transpose()?;
    DetectorModel::new(pointers, post, transition, tol)
}

pub fn detector_model_spec(m: &DetectorModel) -> DetectorModelSpec {
    DetectorModelSpec {
        pointer_states: m
            .pointer_states()
            .iter()
            .map(|(l, k)| (l.clone(), k.amplitudes().to_vec()))
            .collect(),
        post_interaction_states: m
            .post_interaction_states()
            .iter()
            .map(|k| k.amplitudes().to_vec())
            .collect(),
        transition: m.transition().map(matrix_spec),
    }
}

/// 1-based line of the first `"key":` in `text`.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    let mut from = 0;
    while let Some(pos) = text[from..].find(&needle) {
        let at = from + pos;
        let rest = text[at + needle.len()..].trim_start();
        if rest.starts_with(':') {
            return Some(text[..at].matches('\n').count() + 1);
        }
        from = at + needle.len();
    }
    None
}

struct Anchored<'a> {
    text: &'a str,
}

impl Anchored<'_> {
    fn wrap<T>(&self, keys: &[&str], what: &str, r: Result<T>) -> Result<T> {
        r.map_err(|e| {
            let line = keys.iter().find_map(|k| line_of_key(self.text, k));
            let at = line.map(|l| format!("line {l}: ")).unwrap_or_default();
            Error::ScenarioFile(format!("{at}{what}: {e}"))
        })
    }
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::ScenarioFile(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialise")
    }

    /// Describes an in-memory scenario. Labels with a detector model are
    /// written as `detector_model` bindings; merged models (keys that are not
    /// bound labels) go to `merged_models`.
    pub fn describe(
        sc: &Scenario,
        models: &BTreeMap<String, DetectorModel>,
        povms: &[PovmGroupSpec],
        expression: Option<&Query>,
    ) -> Self {
        let mut bindings = BTreeMap::new();
        let mut merged_models = BTreeMap::new();
        for (label, b) in sc.bindings() {
            let spec = match (models.get(label), b) {
                (Some(m), _) => BindingSpec::DetectorModel(detector_model_spec(m)),
                (None, Binding::Kraus(ks)) => BindingSpec::Kraus(ks.iter().map(|k| matrix_spec(k.mat())).collect()),
                (None, Binding::Effect(e)) => BindingSpec::Effect(matrix_spec(e.mat())),
            };
            bindings.insert(label.clone(), spec);
        }
        for (key, m) in models {
            if !sc.bindings().contains_key(key) {
                merged_models.insert(key.clone(), detector_model_spec(m));
            }
        }
        Self {
            dim: sc.dim(),
            preparation: PreparationSpec::Density(matrix_spec(sc.preparation().mat())),
            bindings,
            merged_models,
            povms: povms.to_vec(),
            or_policy: sc.or_policy().map(|p| match p {
                OrPolicy::CoherentSum => OrPolicySpec::CoherentSum,
                OrPolicy::Complement(u) => OrPolicySpec::Complement {
                    unitary: matrix_spec(u),
                },
                OrPolicy::Explicit(k) => OrPolicySpec::Explicit {
                    kraus: matrix_spec(k.mat()),
                },
            }),
            order_policy: sc.order_policy().map(|p| match p {
                OrderPolicy::Definite(o) => OrderPolicySpec::Definite(o.clone()),
                OrderPolicy::Mixture(l) => OrderPolicySpec::Mixture(*l),
                OrderPolicy::IndefiniteCoherent(w) => OrderPolicySpec::IndefiniteCoherent(*w),
            }),
            expression: expression.map(|q| q.to_string()),
            metadata: None,
        }
    }

    /// Builds the scenario, enforcing every invariant; `text` (the source
    /// JSON, if any) is used to attach line numbers to errors.
    pub fn build(self, text: Option<&str>, tol: &Tolerance) -> Result<LoadedScenario> {
        let a = Anchored {
            text: text.unwrap_or(""),
        };
        let prep = match &self.preparation {
            PreparationSpec::Ket(k) => a.wrap(
                &["ket", "preparation"],
                "preparation",
                Ket::new(k.clone(), tol).map(|k| DensityMatrix::from_ket(&k)),
            ),
            PreparationSpec::Density(m) => a.wrap(
                &["density", "preparation"],
                "preparation",
                matrix(m).and_then(|m| DensityMatrix::new(m, tol)),
            ),
        }?;
        if prep.dim() != self.dim {
            return a.wrap(
                &["preparation"],
                "preparation",
                Err(Error::Dimension(format!(
                    "dimension {} does not match dim = {}",
                    prep.dim(),
                    self.dim
                ))),
            );
        }
        let mut sc = Scenario::new(prep, *tol);
        let mut models = BTreeMap::new();
        for (label, spec) in &self.bindings {
            let what = format!("binding `{label}`");
            let binding = match spec {
                BindingSpec::Kraus(ms) => a.wrap(
                    &[label],
                    &what,
                    ms.iter()
                        .map(|m| KrausOperator::new(label.as_str(), matrix(m)?, tol))
                        .collect::<Result<Vec<_>>>()
                        .map(Binding::Kraus),
                )?,
                BindingSpec::Effect(m) => a.wrap(
                    &[label],
                    &what,
                    matrix(m).and_then(|m| Effect::new(m, tol)).map(Binding::Effect),
                )?,
                BindingSpec::DetectorModel(ms) => {
                    let model = a.wrap(&[label], &what, detector_model(ms, tol))?;
                    let k = a.wrap(&[label], &what, kraus_from_detector_model(&model, label, tol))?;
                    models.insert(label.clone(), model);
                    Binding::Kraus(vec![k])
                }
            };
            a.wrap(&[label], &what, sc.bind(label.as_str(), binding))?;
        }
        for (key, spec) in &self.merged_models {
            let what = format!("merged model `{key}`");
            let model = a.wrap(&[key], &what, detector_model(spec, tol))?;
            models.insert(key.clone(), model);
        }
        if let Some(p) = &self.or_policy {
            let policy = a.wrap(
                &["or_policy"],
                "or_policy",
                match p {
                    OrPolicySpec::CoherentSum => Ok(OrPolicy::CoherentSum),
                    OrPolicySpec::Complement { unitary } => matrix(unitary).and_then(|u| OrPolicy::complement(u, tol)),
                    OrPolicySpec::Explicit { kraus } => matrix(kraus)
                        .and_then(|k| KrausOperator::new("explicit", k, tol))
                        .map(OrPolicy::Explicit),
                },
            )?;
            sc.set_or_policy(Some(policy));
        }
        if let Some(p) = &self.order_policy {
            let policy = a.wrap(
                &["order_policy"],
                "order_policy",
                match p {
                    OrderPolicySpec::Definite(o) => Ok(OrderPolicy::Definite(o.clone())),
                    OrderPolicySpec::Mixture(l) => OrderPolicy::mixture(*l),
                    OrderPolicySpec::IndefiniteCoherent(w) => OrderPolicy::indefinite(*w, tol),
                },
            )?;
            sc.set_order_policy(Some(policy));
        }
        for g in &self.povms {
            for l in &g.outcomes {
                if !sc.bindings().contains_key(l) {
                    return a.wrap(&["povms"], "povms", Err(Error::UnboundLabel(l.clone())));
                }
            }
        }
        let expression = match &self.expression {
            Some(e) => Some(a.wrap(&["expression"], "expression", parse(e))?),
            None => None,
        };
        Ok(LoadedScenario {
            scenario: sc,
            models,
            povms: self.povms.clone(),
            expression,
            file: self,
        })
    }
}

pub fn load_str(text: &str, tol: &Tolerance) -> Result<LoadedScenario> {
    ScenarioFile::from_json(text)?.build(Some(text), tol)
}

pub fn load_path(path: &Path, tol: &Tolerance) -> Result<LoadedScenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ScenarioFile(format!("{}: {e}", path.display())))?;
    load_str(&text, tol).map_err(|e| match e {
        Error::ScenarioFile(m) => Error::ScenarioFile(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BindingReport {
    pub label: String,
    pub kind: &'static str,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub outcomes: Vec<String>,
    pub complete: bool,
    /// `max |Σ E - I|`.
    pub completeness_deviation: f64,
    /// Smallest eigenvalue of `I - Σ E`; negative means the group overfills.
    pub complement_min_eigenvalue: f64,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub bindings: Vec<BindingReport>,
    pub groups: Vec<GroupReport>,
    pub valid: bool,
}

/// Checks every binding's effect and each declared outcome group.
pub fn validate(loaded: &LoadedScenario) -> Result<ValidationReport> {
    let sc = &loaded.scenario;
    let tol = sc.tol();
    let mut bindings = Vec::new();
    for (label, b) in sc.bindings() {
        let kind = match b {
            Binding::Kraus(_) => "kraus",
            Binding::Effect(_) => "effect",
        };
        let r = spectral_report(&sc.effect_mat(label)?, tol)?;
        bindings.push(BindingReport {
            label: label.clone(),
            kind,
            min_eigenvalue: r.min_eigenvalue,
            max_eigenvalue: r.max_eigenvalue,
        });
    }
    let id = ComplexMatrix::identity(sc.dim());
    let mut groups = Vec::new();
    for g in &loaded.povms {
        let mut sum = ComplexMatrix::zeros(sc.dim(), sc.dim());
        for l in &g.outcomes {
            sum = sum.add(&sc.effect_mat(l)?)?;
        }
        let completeness_deviation = sum.max_abs_diff(&id)?;
        let complement_min_eigenvalue = id.sub(&sum)?.hermitian_eigenvalues()?[0];
        let mut diagnostics = Vec::new();
        let names = g.outcomes.join(" + ");
        if complement_min_eigenvalue < -tol.eps_psd {
            diagnostics.push(format!(
                "PSD violation: I - ({names}) has eigenvalue {complement_min_eigenvalue:.12e}; the effects exceed the identity"
            ));
        }
        if g.complete && completeness_deviation > tol.eps_prob {
            diagnostics.push(format!(
                "completeness violation: max |({names}) - I| = {completeness_deviation:.12e}"
            ));
        }
        groups.push(GroupReport {
            outcomes: g.outcomes.clone(),
            complete: g.complete,
            completeness_deviation,
            complement_min_eigenvalue,
            diagnostics,
        });
    }
    let valid = groups.iter().all(|g| g.diagnostics.is_empty());
    Ok(ValidationReport {
        bindings,
        groups,
        valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::evaluate;

    const SMALL: &str = r#"{
  "dim": 2,
  "preparation": {"ket": [[0.6, 0], [0, 0.8]]},
  "bindings": {
    "a": {"kraus": [[[[1, 0], [0, 0]], [[0, 0], [0, 0]]]]},
    "b": {"kraus": [[[[0, 0], [0, 0]], [[0, 0], [1, 0]]]]},
    "d": {"effect": [[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]]}
  },
  "povms": [{"outcomes": ["a", "b"]}],
  "or_policy": "coherent_sum",
  "expression": "d & (a + b) | s"
}"#;

    #[test]
    fn load_and_evaluate() {
        let t = Tolerance::default();
        let l = load_str(SMALL, &t).unwrap();
        let p = evaluate(l.expression.as_ref().unwrap(), &l.scenario).unwrap();
        // <+|s>² with s = (0.6, 0.8i): |0.6 + 0.8i|²/2
        assert!((p - 0.5).abs() < 1e-14);
        assert!(validate(&l).unwrap().valid);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let t = Tolerance::default();
        let bad = SMALL.replace("\"dim\": 2,", "\"dim\": 2");
        let Err(Error::ScenarioFile(m)) = load_str(&bad, &t) else {
            panic!()
        };
        assert!(m.contains("line 3"), "{m}");
    }

    #[test]
    fn invariant_errors_carry_line() {
        let t = Tolerance::default();
        let bad = SMALL.replace(
            "[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]",
            "[[1.5, 0], [0, 0]], [[0, 0], [0, 0]]",
        );
        let Err(Error::ScenarioFile(m)) = load_str(&bad, &t) else {
            panic!()
        };
        assert!(m.starts_with("line 7: binding `d`"), "{m}");
    }

    #[test]
    fn completeness_report() {
        let t = Tolerance::default();
        let text = SMALL.replace(r#"{"outcomes": ["a", "b"]}"#, r#"{"outcomes": ["a", "b", "d"]}"#);
        let r = validate(&load_str(&text, &t).unwrap()).unwrap();
        assert!(!r.valid);
        assert!(r.groups[0].diagnostics.iter().any(|d| d.starts_with("PSD violation")));
        assert!(r.groups[0]
            .diagnostics
            .iter()
            .any(|d| d.starts_with("completeness violation")));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let t = Tolerance::default();
        let l = load_str(SMALL, &t).unwrap();
        let again = ScenarioFile::describe(&l.scenario, &l.models, &l.povms, l.expression.as_ref());
        let l2 = load_str(&again.to_json(), &t).unwrap();
        let q = l.expression.unwrap();
        assert_eq!(
            evaluate(&q, &l.scenario).unwrap().to_bits(),
            evaluate(&q, &l2.scenario).unwrap().to_bits()
        );
        assert_eq!(l.scenario, l2.scenario);
    }

    #[test]
    fn unknown_fields_rejected() {
        let t = Tolerance::default();
        let bad = SMALL.replace("\"dim\": 2,", "\"dim\": 2, \"dims\": 3,");
        assert!(load_str(&bad, &t).is_err());
    }
}
