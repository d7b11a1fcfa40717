//! Which-path detectors read in a rotated basis.
//!
//! With detector states `|q> = α|a> + β|b>` and its orthogonal partner
//! `|r> = e^{iφ}(-β*|a> + α*|b>)`, the outcomes `q` and `r` each show
//! interference, but `℘(d∧q|s) + ℘(d∧r|s)` equals the which-path sum
//! `℘(d∧a|s) + ℘(d∧b|s)` for projective `K_a`, `K_b`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluator::{evaluate, Binding, Scenario};
use crate::expr::parse;
use crate::linalg::{ComplexMatrix, Ket, Tolerance};
use crate::measurement::{DensityMatrix, KrausOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EraserBasis {
    alpha: Complex64,
    beta: Complex64,
    phase: f64,
}

impl EraserBasis {
    pub fn new(alpha: Complex64, beta: Complex64, phase: f64, tol: &Tolerance) -> Result<Self> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if (n - 1.0).abs() > tol.eps_prob {
            return Err(Error::Invariant(format!("|alpha|^2 + |beta|^2 = {n}, expected 1")));
        }
        if alpha.norm() <= tol.eps_prob || beta.norm() <= tol.eps_prob {
            return Err(Error::Invariant("alpha and beta must both be non-zero".into()));
        }
        if !phase.is_finite() {
            return Err(Error::InvalidArgument("phase must be finite".into()));
        }
        Ok(Self { alpha, beta, phase })
    }

    /// `α = cos θ`, `β = e^{iχ} sin θ`.
    pub fn from_angles(theta: f64, chi: f64, phase: f64, tol: &Tolerance) -> Result<Self> {
        Self::new(
            Complex64::new(theta.cos(), 0.0),
            Complex64::from_polar(theta.sin(), chi),
            phase,
            tol,
        )
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Rows are `|q>`, `|r>` in the `{|a>, |b>}` detector basis. For
    /// real `α*β` the `r` row is `(-e^{iφ}β, e^{iφ}α)`; the conjugates keep
    /// it orthogonal to `q` in general.
    pub fn coefficients(&self) -> ComplexMatrix {
        let e = Complex64::from_polar(1.0, self.phase);
        ComplexMatrix::from_rows(&[
            vec![self.alpha, self.beta],
            vec![-e * self.beta.conj(), e * self.alpha.conj()],
        ])
        .expect("2x2")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QrKraus {
    pub k_q: KrausOperator,
    pub k_r: KrausOperator,
}

/// `K_j = Σ_i V*_ji K_i` for the rows `j ∈ {q, r}` of [`EraserBasis::coefficients`].
pub fn build_qr_kraus(
    basis: &EraserBasis,
    k_a: &KrausOperator,
    k_b: &KrausOperator,
    tol: &Tolerance,
) -> Result<QrKraus> {
    if k_a.mat().shape() != k_b.mat().shape() {
        return Err(Error::Dimension("K_a and K_b differ in shape".into()));
    }
    let v = basis.coefficients();
    let dev = v.unitarity_deviation()?;
    if dev > tol.eps_prob {
        return Err(Error::Invariant(format!(
            "basis change is not unitary (deviation {dev:e})"
        )));
    }
    let row = |i: usize| -> Result<ComplexMatrix> {
        k_a.mat()
            .scale(v[(i, 0)].conj())
            .add(&k_b.mat().scale(v[(i, 1)].conj()))
    };
    Ok(QrKraus {
        k_q: KrausOperator::new("q", row(0)?, tol)?,
        k_r: KrausOperator::new("r", row(1)?, tol)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisReport {
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EraserReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub basis: BasisReport,
}

fn single_projector(sc: &Scenario, label: &str) -> Result<KrausOperator> {
    let mats = sc.kraus_mats(label)?;
    let [k] = mats.as_slice() else {
        return Err(Error::InvalidArgument(format!(
            "`{label}` must have a single Kraus operator"
        )));
    };
    let tol = sc.tol();
    let herm = k.hermiticity_deviation()?;
    let idem = k.matmul(k)?.max_abs_diff(k)?;
    if herm > tol.eps_herm || idem > tol.eps_prob {
        return Err(Error::InvalidArgument(format!(
            "`{label}` is not a projector; the equivalence holds for perfect which-path detection only"
        )));
    }
    KrausOperator::new(label, k.clone(), tol)
}

fn fresh(sc: &Scenario, base: &str) -> String {
    let mut name = base.to_string();
    while sc.bindings().contains_key(&name) || name == "s" || name == "d" {
        name.push('_');
    }
    name
}

/// Compares `℘((d∧q)∨(d∧r)|s)` with `℘((d∧a)∨(d∧b)|s)`.
pub fn verify_equivalence(basis: &EraserBasis, sc: &Scenario) -> Result<EraserReport> {
    let k_a = single_projector(sc, "a")?;
    let k_b = single_projector(sc, "b")?;
    let qr = build_qr_kraus(basis, &k_a, &k_b, sc.tol())?;
    let mut ext = sc.clone();
    let q = fresh(sc, "q");
    let r = fresh(sc, "r");
    ext.bind(&q, Binding::Kraus(vec![qr.k_q]))?;
    ext.bind(&r, Binding::Kraus(vec![qr.k_r]))?;
    let lhs = evaluate(&parse(&format!("(d & {q}) + (d & {r}) | s"))?, &ext)?;
    let rhs = evaluate(&parse("(d & a) + (d & b) | s")?, sc)?;
    Ok(EraserReport {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
        basis: BasisReport {
            alpha: [basis.alpha.re, basis.alpha.im],
            beta: [basis.beta.re, basis.beta.im],
            phase: basis.phase,
        },
    })
}

/// Two slits in the path basis `{|a>, |b>}` with projective which-path
/// operators, a fixed source `s` and a screen point `d`.
pub fn young_slit_scenario(tol: &Tolerance) -> Result<Scenario> {
    let c = Complex64::new;
    let s = Ket::normalized(vec![c(0.8, 0.1), c(0.3, -0.5)])?;
    let d = Ket::normalized(vec![c(0.4, 0.3), c(-0.2, 0.7)])?;
    let mut sc = Scenario::new(DensityMatrix::from_ket(&s), *tol);
    sc.bind_kraus("a", vec![Ket::basis(2, 0).projector()])?;
    sc.bind_kraus("b", vec![Ket::basis(2, 1).projector()])?;
    sc.bind_effect("d", d.projector())?;
    Ok(sc)
}
