//! Probabilities of sequences of generalized quantum measurements, with the
//! distributed and the atomic reading of an alternative kept apart.
//!
//! A [`Query`] such as `d & (a + b) | s` is evaluated against a [`Scenario`]
//! that binds each label to Kraus operators or a final effect.

pub mod causal;
pub mod eraser;
pub mod error;
pub mod evaluator;
pub mod expr;
pub mod linalg;
pub mod measurement;
pub mod mzi;
pub mod oracle;
pub mod scenario_file;

pub use causal::{
    causal_gap, distributed_order_probability, indefinite_kraus, ordered_probability, CausalReport, OrderPolicy,
};
pub use error::{Error, Result};
pub use evaluator::{conditional, evaluate, evaluate_reduced_trace, or_combine, Binding, OrPolicy, Scenario};
pub use expr::{parse, MeasurementExpr, Query};
pub use linalg::{ComplexMatrix, Ket, Tolerance};
pub use measurement::{DensityMatrix, DetectorModel, Effect, Instrument, KrausOperator, Povm};
pub use oracle::brute_force_oracle;
pub use scenario_file::{load_path, load_str, validate, LoadedScenario, ScenarioFile};
