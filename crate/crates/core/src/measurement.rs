//! States, effects, Kraus operators and the rules that turn them into
//! probabilities: the trace rule, sequential probability and the Kraus
//! update, plus the construction of Kraus operators from a system/detector
//! interaction model.

use num_complex::Complex64;

use crate::error::{Error, Result};
pub use crate::linalg::Ket;
use crate::linalg::{ComplexMatrix, Tolerance};

/// System preparation `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix, tol: &Tolerance) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Dimension(format!(
                "density matrix must be square, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        let dev = mat.hermiticity_deviation()?;
        if dev > tol.eps_herm {
            return Err(Error::Invariant(format!(
                "density matrix is not Hermitian (deviation {dev:e})"
            )));
        }
        let tr = mat.trace()?;
        if (tr.re - 1.0).abs() > tol.eps_prob || tr.im.abs() > tol.eps_prob {
            return Err(Error::Invariant(format!("density matrix trace is {tr}, expected 1")));
        }
        let min = mat.hermitian_eigenvalues()?[0];
        if min < -tol.eps_psd {
            return Err(Error::Invariant(format!(
                "density matrix has negative eigenvalue {min:e}"
            )));
        }
        Ok(Self { mat })
    }

    pub fn from_ket(ket: &Ket) -> Self {
        Self { mat: ket.projector() }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }
}

/// A Kraus operator `K`, with `K†K <= I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausOperator {
    label: String,
    mat: ComplexMatrix,
}

impl KrausOperator {
    pub fn new(label: impl Into<String>, mat: ComplexMatrix, tol: &Tolerance) -> Result<Self> {
        let label = label.into();
        let e = mat.adjoint().matmul(&mat)?;
        let ev = e.hermitian_eigenvalues()?;
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        if lo < -tol.eps_psd || hi > 1.0 + tol.eps_psd {
            return Err(Error::PovmViolation(format!(
                "Kraus operator `{label}` has K†K eigenvalues in [{lo:.6e}, {hi:.6e}], outside [0, 1]"
            )));
        }
        Ok(Self { label, mat })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_mat(self) -> ComplexMatrix {
        self.mat
    }
}

/// Positive operator with spectrum in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    mat: ComplexMatrix,
}

impl Effect {
    pub fn new(mat: ComplexMatrix, tol: &Tolerance) -> Result<Self> {
        if !mat.is_psd(tol)? {
            return Err(Error::PovmViolation("effect is not positive semidefinite".into()));
        }
        let hi = *mat.hermitian_eigenvalues()?.last().expect("non-empty spectrum");
        if hi > 1.0 + tol.eps_psd {
            return Err(Error::PovmViolation(format!("effect has eigenvalue {hi:.6e} above 1")));
        }
        Ok(Self { mat })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: ComplexMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }
}

/// An ordered collection of effects on one space. Completeness is checked by
/// [`validate_povm`], not at construction, so that broken sets can be
/// diagnosed.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<Effect>,
}

impl Povm {
    pub fn new(effects: Vec<Effect>) -> Result<Self> {
        let Some(first) = effects.first() else {
            return Err(Error::InvalidArgument("POVM with no effects".into()));
        };
        let d = first.dim();
        if effects.iter().any(|e| e.dim() != d) {
            return Err(Error::Dimension("POVM effects differ in dimension".into()));
        }
        Ok(Self { effects })
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }
}

/// Outcome label mapped to the k-indexed Kraus list of that outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    branches: Vec<(String, Vec<KrausOperator>)>,
}

impl Instrument {
    /// Requires `Σ_branches Σ_k K†K = I` within `eps_prob`.
    pub fn new(branches: Vec<(String, Vec<KrausOperator>)>, tol: &Tolerance) -> Result<Self> {
        let all: Vec<ComplexMatrix> = branches
            .iter()
            .flat_map(|(_, ks)| ks.iter().map(|k| k.mat().clone()))
            .collect();
        if all.is_empty() {
            return Err(Error::InvalidArgument("instrument with no Kraus operators".into()));
        }
        let total = effect_matrix(&all)?;
        let dev = total.max_abs_diff(&ComplexMatrix::identity(total.rows()))?;
        if dev > tol.eps_prob {
            return Err(Error::PovmViolation(format!(
                "instrument is incomplete: max |ΣK†K - I| = {dev:e}"
            )));
        }
        Ok(Self { branches })
    }

    pub fn branches(&self) -> &[(String, Vec<KrausOperator>)] {
        &self.branches
    }

    pub fn branch(&self, label: &str) -> Option<&[KrausOperator]> {
        self.branches
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, ks)| ks.as_slice())
    }
}

/// System/detector interaction: the detector ends in `post_interaction_states[i]`
/// when the system entered in basis state `|i>`, and outcome `ℓ` is read as the
/// detector pointer state `pointer_states[ℓ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    pointer_states: Vec<(String, Ket)>,
    post_interaction_states: Vec<Ket>,
    /// Optional transition amplitudes `α_ij` (`|i> -> Σ_j α_ij |j>`) of a
    /// destructive measurement; `None` means the system is left untouched.
    transition: Option<ComplexMatrix>,
}

impl DetectorModel {
    pub fn new(
        pointer_states: Vec<(String, Ket)>,
        post_interaction_states: Vec<Ket>,
        transition: Option<ComplexMatrix>,
        tol: &Tolerance,
    ) -> Result<Self> {
        let Some(first) = post_interaction_states.first() else {
            return Err(Error::InvalidArgument(
                "detector model without post-interaction states".into(),
            ));
        };
        let det_dim = first.dim();
        if post_interaction_states.iter().any(|k| k.dim() != det_dim)
            || pointer_states.iter().any(|(_, k)| k.dim() != det_dim)
        {
            return Err(Error::Dimension("detector kets differ in dimension".into()));
        }
        if pointer_states.is_empty() {
            return Err(Error::InvalidArgument("detector model without pointer states".into()));
        }
        for (i, (li, ki)) in pointer_states.iter().enumerate() {
            for (lj, kj) in &pointer_states[i + 1..] {
                if li == lj {
                    return Err(Error::InvalidArgument(format!("duplicate outcome `{li}`")));
                }
                // two outcomes either share one readout state or are orthogonal
                let ov = ki.inner(kj).norm();
                if ov > tol.eps_prob && (ov - 1.0).abs() > tol.eps_prob {
                    return Err(Error::Invariant(format!(
                        "pointer states `{li}` and `{lj}` overlap by {ov:.6e}"
                    )));
                }
            }
        }
        let n = post_interaction_states.len();
        if let Some(t) = &transition {
            if t.shape() != (n, n) {
                return Err(Error::Dimension(format!(
                    "transition amplitudes must be {n}x{n}, got {}x{}",
                    t.rows(),
                    t.cols()
                )));
            }
        }
        Ok(Self {
            pointer_states,
            post_interaction_states,
            transition,
        })
    }

    /// Perfect which-outcome detector: system index `i` drives the detector
    /// into the pointer state of `outcomes[i]`.
    pub fn perfect(outcomes: &[&str]) -> Self {
        let n = outcomes.len();
        Self {
            pointer_states: outcomes
                .iter()
                .enumerate()
                .map(|(i, l)| (l.to_string(), Ket::basis(n, i)))
                .collect(),
            post_interaction_states: (0..n).map(|i| Ket::basis(n, i)).collect(),
            transition: None,
        }
    }

    pub fn system_dim(&self) -> usize {
        self.post_interaction_states.len()
    }

    pub fn detector_dim(&self) -> usize {
        self.post_interaction_states[0].dim()
    }

    pub fn pointer_states(&self) -> &[(String, Ket)] {
        &self.pointer_states
    }

    pub fn pointer(&self, outcome: &str) -> Option<&Ket> {
        self.pointer_states.iter().find(|(l, _)| l == outcome).map(|(_, k)| k)
    }

    pub fn post_interaction_states(&self) -> &[Ket] {
        &self.post_interaction_states
    }

    pub fn transition(&self) -> Option<&ComplexMatrix> {
        self.transition.as_ref()
    }

    /// System amplitudes `Σ_j α_ij |j>` reached from `|i>`.
    pub fn system_image(&self, i: usize) -> Vec<Complex64> {
        let n = self.system_dim();
        match &self.transition {
            Some(t) => t.row(i).to_vec(),
            None => {
                let mut v = vec![Complex64::new(0.0, 0.0); n];
                v[i] = Complex64::new(1.0, 0.0);
                v
            }
        }
    }
}

/// `Σ K†K` over raw matrices.
pub fn effect_matrix(ks: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let Some(first) = ks.first() else {
        return Err(Error::InvalidArgument("empty Kraus list".into()));
    };
    let mut acc = ComplexMatrix::zeros(first.cols(), first.cols());
    for k in ks {
        if k.shape() != first.shape() {
            return Err(Error::Dimension("Kraus operators differ in shape".into()));
        }
        acc = acc.add(&k.adjoint().matmul(k)?)?;
    }
    Ok(acc)
}

pub fn effect_from_kraus(ks: &[KrausOperator], tol: &Tolerance) -> Result<Effect> {
    let mats: Vec<ComplexMatrix> = ks.iter().map(|k| k.mat().clone()).collect();
    Effect::new(effect_matrix(&mats)?, tol)
}

/// Turns a raw trace value into a probability, clamping float noise and
/// rejecting genuine excursions.
pub fn clamp_probability(value: Complex64, tol: &Tolerance) -> Result<f64> {
    if value.im.abs() > tol.eps_prob {
        return Err(Error::NumericalConsistency(format!(
            "probability has imaginary part {:e}",
            value.im
        )));
    }
    clamp_real(value.re, tol)
}

pub fn clamp_real(p: f64, tol: &Tolerance) -> Result<f64> {
    if !p.is_finite() || p < -tol.eps_prob || p > 1.0 + tol.eps_prob {
        return Err(Error::NumericalConsistency(format!(
            "probability {p} lies outside [0, 1]"
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

fn check_dims(rho: &ComplexMatrix, other: &ComplexMatrix, what: &str) -> Result<()> {
    if other.shape() != rho.shape() {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}, state is {}x{}",
            other.rows(),
            other.cols(),
            rho.rows(),
            rho.cols()
        )));
    }
    Ok(())
}

/// `tr(ρE)`.
pub fn born_probability(rho: &DensityMatrix, e: &Effect, tol: &Tolerance) -> Result<f64> {
    check_dims(rho.mat(), e.mat(), "effect")?;
    clamp_probability(rho.mat().matmul(e.mat())?.trace()?, tol)
}

/// `Σ_k K_k ρ K_k†` (unnormalized).
pub fn apply_branch(rho: &ComplexMatrix, branch: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let Some(first) = branch.first() else {
        return Err(Error::InvalidArgument("empty Kraus branch".into()));
    };
    let mut acc = ComplexMatrix::zeros(first.rows(), first.rows());
    for k in branch {
        acc = acc.add(&k.matmul(rho)?.matmul(&k.adjoint())?)?;
    }
    Ok(acc)
}

/// `tr(F Σ_k K_k ρ K_k†)` on raw matrices.
pub fn sequence_trace(
    rho: &ComplexMatrix,
    branch: &[ComplexMatrix],
    final_effect: &ComplexMatrix,
) -> Result<Complex64> {
    for k in branch {
        if k.cols() != rho.rows() || k.rows() != final_effect.rows() {
            return Err(Error::Dimension(
                "Kraus operator does not fit state and final effect".into(),
            ));
        }
    }
    final_effect.matmul(&apply_branch(rho, branch)?)?.trace()
}

pub fn sequence_probability(
    rho: &DensityMatrix,
    intermediate: &[KrausOperator],
    final_effect: &Effect,
    tol: &Tolerance,
) -> Result<f64> {
    let mats: Vec<ComplexMatrix> = intermediate.iter().map(|k| k.mat().clone()).collect();
    clamp_probability(sequence_trace(rho.mat(), &mats, final_effect.mat())?, tol)
}

/// Post-measurement state `Σ KρK† / tr(Σ KρK†)`.
pub fn kraus_update(rho: &DensityMatrix, branch: &[KrausOperator], tol: &Tolerance) -> Result<DensityMatrix> {
    let mats: Vec<ComplexMatrix> = branch.iter().map(|k| k.mat().clone()).collect();
    for k in &mats {
        check_dims(rho.mat(), k, "Kraus operator")?;
    }
    let unnorm = apply_branch(rho.mat(), &mats)?;
    let p = unnorm.trace()?.re;
    if p <= tol.eps_prob {
        return Err(Error::ConditioningOnNull(p));
    }
    let updated = unnorm.scale_real(1.0 / p).hermitian_part()?;
    DensityMatrix::new(updated, tol)
}

/// `K_ℓ = Σ_ij α_ij <ℓ|Φ_i> |j><i|`; with no transition amplitudes this is
/// the diagonal `Σ_i <ℓ|Φ_i> |i><i|`.
pub fn kraus_from_detector_model(model: &DetectorModel, outcome: &str, tol: &Tolerance) -> Result<KrausOperator> {
    let pointer = model
        .pointer(outcome)
        .ok_or_else(|| Error::UnknownOutcome(outcome.to_string()))?;
    let n = model.system_dim();
    let mut k = ComplexMatrix::zeros(n, n);
    for (i, phi) in model.post_interaction_states().iter().enumerate() {
        let amp = pointer.inner(phi);
        for (j, a) in model.system_image(i).into_iter().enumerate() {
            k[(j, i)] += a * amp;
        }
    }
    KrausOperator::new(outcome, k, tol)
}

/// Per-effect spectral diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectReport {
    pub psd: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PovmReport {
    /// `max |ΣE - I|` over entries.
    pub completeness_deviation: f64,
    pub complete: bool,
    pub effects: Vec<EffectReport>,
}

impl PovmReport {
    pub fn is_valid(&self) -> bool {
        self.complete && self.effects.iter().all(|e| e.psd)
    }
}

pub fn validate_povm(p: &Povm, tol: &Tolerance) -> Result<PovmReport> {
    let d = p.effects()[0].dim();
    let mut sum = ComplexMatrix::zeros(d, d);
    let mut effects = Vec::with_capacity(p.effects().len());
    for e in p.effects() {
        sum = sum.add(e.mat())?;
        effects.push(spectral_report(e.mat(), tol)?);
    }
    let completeness_deviation = sum.max_abs_diff(&ComplexMatrix::identity(d))?;
    Ok(PovmReport {
        completeness_deviation,
        complete: completeness_deviation <= tol.eps_prob,
        effects,
    })
}

/// Diagnostics for a candidate effect matrix that may not be a valid one.
pub fn spectral_report(m: &ComplexMatrix, tol: &Tolerance) -> Result<EffectReport> {
    let ev = m.hermitian_eigenvalues()?;
    let min_eigenvalue = ev[0];
    let max_eigenvalue = ev[ev.len() - 1];
    Ok(EffectReport {
        psd: m.is_psd(tol)? && max_eigenvalue <= 1.0 + tol.eps_psd,
        min_eigenvalue,
        max_eigenvalue,
    })
}
