//! Probabilities of measurement propositions under a scenario.
//!
//! The two readings of an alternative are kept apart:
//!
//! * an alternative of complete sequences, `(d & a) + (d & b)`, adds the
//!   probabilities of distinguishable outcomes;
//! * an alternative inside a sequence, `d & (a + b)`, is one indivisible
//!   intermediate measurement whose single Kraus operator is built by the
//!   scenario's [`OrPolicy`], so amplitudes interfere.
//!
//! An alternative of sequences inside a sequence, `d & ((b & a) + (a & b))`,
//! is a measurement with unknown order and is handed to [`crate::causal`].

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::causal::{self, OrderPolicy};
use crate::error::{Error, Result};
use crate::expr::{MeasurementExpr, Query};
use crate::linalg::{partial_trace_second, ComplexMatrix, Tolerance};
use crate::measurement::{
    clamp_probability, clamp_real, effect_matrix, sequence_trace, DensityMatrix, DetectorModel, Effect, KrausOperator,
};

/// How an indivisible `a + b` intermediate measurement is realised.
#[derive(Debug, Clone, PartialEq)]
pub enum OrPolicy {
    /// Both alternatives leave the detector in the same state: `K = Σ K_i`.
    CoherentSum,
    /// A complementary detector fires on neither: `K = U sqrt(Σ E_i)`.
    Complement(ComplexMatrix),
    /// A user-supplied combined operator.
    Explicit(KrausOperator),
}

impl OrPolicy {
    pub fn complement(unitary: ComplexMatrix, tol: &Tolerance) -> Result<Self> {
        let dev = unitary.unitarity_deviation()?;
        if dev > tol.eps_prob {
            return Err(Error::Invariant(format!(
                "complement policy matrix is not unitary (deviation {dev:e})"
            )));
        }
        Ok(Self::Complement(unitary))
    }
}

/// What a label stands for.
#[derive(Debug, Clone, PartialEq)]
pub enum Binding {
    /// An outcome that can occur mid-sequence, with its k-indexed Kraus list.
    Kraus(Vec<KrausOperator>),
    /// A final detection known only through its effect.
    Effect(Effect),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    dim: usize,
    preparation: DensityMatrix,
    bindings: BTreeMap<String, Binding>,
    or_policy: Option<OrPolicy>,
    order_policy: Option<OrderPolicy>,
    tol: Tolerance,
}

impl Scenario {
    pub fn new(preparation: DensityMatrix, tol: Tolerance) -> Self {
        Self {
            dim: preparation.dim(),
            preparation,
            bindings: BTreeMap::new(),
            or_policy: None,
            order_policy: None,
            tol,
        }
    }

    fn check_dim(&self, label: &str, m: &ComplexMatrix) -> Result<()> {
        if m.shape() != (self.dim, self.dim) {
            return Err(Error::Dimension(format!(
                "binding `{label}` is {}x{}, scenario dimension is {}",
                m.rows(),
                m.cols(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn bind(&mut self, label: impl Into<String>, binding: Binding) -> Result<()> {
        let label = label.into();
        match &binding {
            Binding::Kraus(ks) => {
                if ks.is_empty() {
                    return Err(Error::InvalidArgument(format!(
                        "binding `{label}` has no Kraus operators"
                    )));
                }
                for k in ks {
                    self.check_dim(&label, k.mat())?;
                }
                let e = effect_matrix(&ks.iter().map(|k| k.mat().clone()).collect::<Vec<_>>())?;
                // the whole k-list is one outcome, so Σ K†K must itself be an effect
                Effect::new(e, &self.tol).map_err(|err| Error::PovmViolation(format!("binding `{label}`: {err}")))?;
            }
            Binding::Effect(e) => self.check_dim(&label, e.mat())?,
        }
        self.bindings.insert(label, binding);
        Ok(())
    }

    pub fn bind_kraus(&mut self, label: &str, mats: Vec<ComplexMatrix>) -> Result<()> {
        let ks = mats
            .into_iter()
            .map(|m| KrausOperator::new(label, m, &self.tol))
            .collect::<Result<Vec<_>>>()?;
        self.bind(label, Binding::Kraus(ks))
    }

    pub fn bind_effect(&mut self, label: &str, mat: ComplexMatrix) -> Result<()> {
        let e = Effect::new(mat, &self.tol)?;
        self.bind(label, Binding::Effect(e))
    }

    pub fn with_or_policy(mut self, p: OrPolicy) -> Self {
        self.or_policy = Some(p);
        self
    }

    pub fn with_order_policy(mut self, p: OrderPolicy) -> Self {
        self.order_policy = Some(p);
        self
    }

    pub fn set_or_policy(&mut self, p: Option<OrPolicy>) {
        self.or_policy = p;
    }

    pub fn set_order_policy(&mut self, p: Option<OrderPolicy>) {
        self.order_policy = p;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn preparation(&self) -> &DensityMatrix {
        &self.preparation
    }

    pub fn bindings(&self) -> &BTreeMap<String, Binding> {
        &self.bindings
    }

    pub fn binding(&self, label: &str) -> Result<&Binding> {
        self.bindings
            .get(label)
            .ok_or_else(|| Error::UnboundLabel(label.to_string()))
    }

    pub fn or_policy(&self) -> Option<&OrPolicy> {
        self.or_policy.as_ref()
    }

    pub fn order_policy(&self) -> Option<&OrderPolicy> {
        self.order_policy.as_ref()
    }

    pub fn tol(&self) -> &Tolerance {
        &self.tol
    }

    /// Kraus matrices of an intermediate label.
    pub fn kraus_mats(&self, label: &str) -> Result<Vec<ComplexMatrix>> {
        match self.binding(label)? {
            Binding::Kraus(ks) => Ok(ks.iter().map(|k| k.mat().clone()).collect()),
            Binding::Effect(_) => Err(Error::InvalidArgument(format!(
                "`{label}` is bound to an effect only and cannot act as an intermediate measurement"
            ))),
        }
    }

    /// Effect of a label, derived from its Kraus list when needed.
    pub fn effect_mat(&self, label: &str) -> Result<ComplexMatrix> {
        match self.bindings.get(label) {
            Some(Binding::Effect(e)) => Ok(e.mat().clone()),
            Some(Binding::Kraus(ks)) => effect_matrix(&ks.iter().map(|k| k.mat().clone()).collect::<Vec<_>>()),
            None => Err(Error::FinalWithoutEffect(label.to_string())),
        }
    }
}

/// All products `A_i B_j` for Kraus lists `A`, `B` (B acts first).
pub(crate) fn compose(left: &[ComplexMatrix], right: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    let mut out = Vec::with_capacity(left.len() * right.len());
    for a in left {
        for b in right {
            out.push(a.matmul(b)?);
        }
    }
    Ok(out)
}

/// Collapses an indivisible alternative into one Kraus operator.
pub fn or_combine_raw(branches: &[Vec<ComplexMatrix>], policy: &OrPolicy, tol: &Tolerance) -> Result<ComplexMatrix> {
    let Some(first) = branches.first().and_then(|b| b.first()) else {
        return Err(Error::InvalidArgument("or_combine needs at least one branch".into()));
    };
    let shape = first.shape();
    if branches.iter().flatten().any(|k| k.shape() != shape) {
        return Err(Error::Dimension("alternative branches differ in shape".into()));
    }
    match policy {
        OrPolicy::CoherentSum => {
            let mut acc = ComplexMatrix::zeros(shape.0, shape.1);
            for b in branches {
                if b.len() != 1 {
                    return Err(Error::Unsupported("coherent sum needs single-Kraus branches".into()));
                }
                acc = acc.add(&b[0])?;
            }
            let hi = *effect_matrix(std::slice::from_ref(&acc))?
                .hermitian_eigenvalues()?
                .last()
                .expect("spectrum");
            if hi > 1.0 + tol.eps_psd {
                return Err(Error::PovmViolation(format!(
                    "coherent sum has K†K eigenvalue {hi:.6e} above 1"
                )));
            }
            Ok(acc)
        }
        OrPolicy::Complement(u) => {
            let mut sum = ComplexMatrix::zeros(shape.1, shape.1);
            for b in branches {
                sum = sum.add(&effect_matrix(b)?)?;
            }
            let hi = *sum.hermitian_eigenvalues()?.last().expect("spectrum");
            if hi > 1.0 + tol.eps_psd {
                return Err(Error::PovmViolation(format!(
                    "summed effects exceed the identity (eigenvalue {hi:.6e})"
                )));
            }
            if u.cols() != shape.0 {
                return Err(Error::Dimension("complement unitary does not fit the branches".into()));
            }
            u.matmul(&sum.sqrt_psd(tol)?)
        }
        OrPolicy::Explicit(k) => {
            if k.mat().cols() != shape.1 {
                return Err(Error::Dimension("explicit operator does not fit the branches".into()));
            }
            Ok(k.mat().clone())
        }
    }
}

pub fn or_combine(branches: &[&[KrausOperator]], policy: &OrPolicy, tol: &Tolerance) -> Result<KrausOperator> {
    let raw: Vec<Vec<ComplexMatrix>> = branches
        .iter()
        .map(|b| b.iter().map(|k| k.mat().clone()).collect())
        .collect();
    let label = branches
        .iter()
        .filter_map(|b| b.first().map(|k| k.label().to_string()))
        .collect::<Vec<_>>()
        .join(" + ");
    KrausOperator::new(label, or_combine_raw(&raw, policy, tol)?, tol)
}

fn is_seq(e: &MeasurementExpr) -> bool {
    matches!(e, MeasurementExpr::Seq(..))
}

impl Scenario {
    /// Kraus list of an expression standing at an intermediate position.
    pub(crate) fn intermediate_ops(&self, e: &MeasurementExpr) -> Result<Vec<ComplexMatrix>> {
        match e {
            MeasurementExpr::Label(l) => self.kraus_mats(l),
            MeasurementExpr::Seq(..) => {
                let chain = e.chain();
                let mut acc: Option<Vec<ComplexMatrix>> = None;
                for atom in chain {
                    let ops = self.intermediate_ops(atom)?;
                    acc = Some(match acc {
                        None => ops,
                        Some(prev) => compose(&prev, &ops)?,
                    });
                }
                Ok(acc.expect("non-empty chain"))
            }
            MeasurementExpr::Alt(children) => {
                if children.iter().all(|c| matches!(c, MeasurementExpr::Label(_))) {
                    let policy = self.or_policy.as_ref().ok_or_else(|| {
                        Error::MissingPolicy(format!(
                            "`{e}` is an indivisible alternative but the scenario has no or_policy"
                        ))
                    })?;
                    let branches = children
                        .iter()
                        .map(|c| self.intermediate_ops(c))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(vec![or_combine_raw(&branches, policy, &self.tol)?])
                } else if children.iter().all(is_seq) {
                    let policy = self.order_policy.as_ref().ok_or_else(|| {
                        Error::MissingPolicy(format!(
                            "`{e}` has undetermined order but the scenario has no order_policy"
                        ))
                    })?;
                    Ok(causal::combine_orderings(self, children, policy)?.ops)
                } else {
                    Err(Error::AmbiguousStructure(format!(
                        "`{e}` mixes sequences and single measurements inside one alternative"
                    )))
                }
            }
        }
    }

    /// Unclamped probability of an expression.
    pub(crate) fn raw_probability(&self, e: &MeasurementExpr) -> Result<f64> {
        match e {
            MeasurementExpr::Label(l) => {
                let f = self.effect_mat(l)?;
                Ok(clamp_probability(
                    self.preparation.mat().matmul(&f)?.trace()?,
                    &self.tol,
                )?)
            }
            MeasurementExpr::Seq(..) => {
                let chain = e.chain();
                let MeasurementExpr::Label(final_label) = chain[0] else {
                    return Err(Error::AmbiguousStructure(format!(
                        "the final (leftmost) measurement of `{e}` must be a single label"
                    )));
                };
                let f = self.effect_mat(final_label)?;
                let mut ops = self.intermediate_ops(chain[1])?;
                for atom in &chain[2..] {
                    ops = compose(&ops, &self.intermediate_ops(atom)?)?;
                }
                let v = sequence_trace(self.preparation.mat(), &ops, &f)?;
                clamp_probability(v, &self.tol)
            }
            MeasurementExpr::Alt(children) => {
                let labels = children
                    .iter()
                    .filter(|c| matches!(c, MeasurementExpr::Label(_)))
                    .count();
                if labels != 0 && labels != children.len() {
                    return Err(Error::AmbiguousStructure(format!(
                        "`{e}` mixes complete sequences with bare labels"
                    )));
                }
                children.iter().map(|c| self.raw_probability(c)).sum()
            }
        }
    }
}

/// `℘(expr | s)` under the scenario.
pub fn evaluate(q: &Query, sc: &Scenario) -> Result<f64> {
    let p = sc.raw_probability(&q.expr)?;
    clamp_real(p, &sc.tol)
}

/// `℘(joint | s) / ℘(given | s)`.
pub fn conditional(q_joint: &Query, q_given: &Query, sc: &Scenario) -> Result<f64> {
    let given = evaluate(q_given, sc)?;
    if given <= sc.tol.eps_prob {
        return Err(Error::ConditioningOnNull(given));
    }
    let joint = evaluate(q_joint, sc)?;
    clamp_real(joint / given, &sc.tol)
}

/// Extracts `(final, [alternatives])` from `f & (a + b)` or `(f & a) + (f & b)`.
pub(crate) fn final_and_alternatives(e: &MeasurementExpr) -> Result<(String, Vec<String>)> {
    use MeasurementExpr as E;
    let shape_err = || Error::InvalidArgument(format!("`{e}` is not of the form `f & (a + b)` or `(f & a) + (f & b)`"));
    match e {
        E::Seq(l, r) => match (l.as_ref(), r.as_ref()) {
            (E::Label(f), E::Alt(cs)) => {
                let alts = cs
                    .iter()
                    .map(|c| match c {
                        E::Label(x) => Ok(x.clone()),
                        _ => Err(shape_err()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((f.clone(), alts))
            }
            _ => Err(shape_err()),
        },
        E::Alt(cs) => {
            let mut fin: Option<String> = None;
            let mut alts = Vec::new();
            for c in cs {
                let E::Seq(l, r) = c else { return Err(shape_err()) };
                let (E::Label(f), E::Label(x)) = (l.as_ref(), r.as_ref()) else {
                    return Err(shape_err());
                };
                if fin.get_or_insert_with(|| f.clone()) != f {
                    return Err(shape_err());
                }
                alts.push(x.clone());
            }
            Ok((fin.expect("alternative has children"), alts))
        }
        _ => Err(shape_err()),
    }
}

/// Isometry `|i> -> Σ_j α_ij |j> ⊗ |Φ_i>` as a `(d·D) x d` matrix.
pub(crate) fn interaction_isometry(model: &DetectorModel) -> ComplexMatrix {
    let d = model.system_dim();
    let dd = model.detector_dim();
    let mut v = ComplexMatrix::zeros(d * dd, d);
    for (i, phi) in model.post_interaction_states().iter().enumerate() {
        for (j, a) in model.system_image(i).into_iter().enumerate() {
            for (k, p) in phi.amplitudes().iter().enumerate() {
                v[(j * dd + k, i)] = a * p;
            }
        }
    }
    v
}

/// Distributed probability via the reduced system state: entangle system and
/// detector, keep only the detector readouts named by the alternative, trace
/// the detector out and apply the final effect.
pub fn evaluate_reduced_trace(q: &Query, sc: &Scenario, model: &DetectorModel) -> Result<f64> {
    let (final_label, alts) = final_and_alternatives(&q.expr)?;
    if model.system_dim() != sc.dim {
        return Err(Error::Dimension(format!(
            "detector model acts on dimension {}, scenario dimension is {}",
            model.system_dim(),
            sc.dim
        )));
    }
    let tol = &sc.tol;
    let dd = model.detector_dim();
    let v = interaction_isometry(model);
    let joint = v.matmul(sc.preparation.mat())?.matmul(&v.adjoint())?;
    // projector onto the distinct readout states of the alternatives
    let mut seen: Vec<&[Complex64]> = Vec::new();
    let mut proj = ComplexMatrix::zeros(dd, dd);
    for a in &alts {
        let p = model.pointer(a).ok_or_else(|| Error::UnknownOutcome(a.clone()))?;
        let amps = p.amplitudes();
        if seen
            .iter()
            .any(|s| (crate::linalg::inner(s, amps).norm() - 1.0).abs() <= tol.eps_prob)
        {
            continue;
        }
        seen.push(amps);
        proj = proj.add(&p.projector())?;
    }
    let lifted = ComplexMatrix::identity(sc.dim).kron(&proj);
    let reduced = partial_trace_second(&lifted.matmul(&joint)?, sc.dim, dd)?;
    let f = sc.effect_mat(&final_label)?;
    clamp_probability(f.matmul(&reduced)?.trace()?, tol)
}
