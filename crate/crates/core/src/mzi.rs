//! Mach-Zehnder interferometer whose first beam splitter recoils.
//!
//! A photon reflected at BS1 (path `a`) kicks the splitter from its ground
//! state `|0>` into the coherent state `|α>`; path `b` leaves it in `|0>`.
//! The overlap `g = <0|α> = e^{-|α|²/2}` sets how much which-path
//! information the splitter stores.
//!
//! Two equivalent representations are provided:
//!
//! * out basis: `K_a`, `K_b` map `|1_in>` to the detector ports
//!   `{|1_out>, |2_out>}` ([`build_movable_kraus`]);
//! * path basis: the photon between the splitters lives in `{|a>, |b>}`,
//!   starts in `(|a> + |b>)/√2`, and the second splitter with the phase
//!   shifter is folded into the final effect ([`path_scenario`]).

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluator::{Binding, OrPolicy, Scenario};
use crate::linalg::{ComplexMatrix, Ket, Tolerance, ZERO};
use crate::measurement::{kraus_from_detector_model, DensityMatrix, DetectorModel, KrausOperator};

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziParams {
    pub phi: f64,
    pub alpha: Complex64,
}

impl MziParams {
    pub fn new(phi: f64, alpha: Complex64) -> Result<Self> {
        if !phi.is_finite() || !alpha.norm().is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite interferometer parameters φ={phi}, α={alpha}"
            )));
        }
        Ok(Self { phi, alpha })
    }

    pub fn real(phi: f64, alpha: f64) -> Result<Self> {
        Self::new(phi, Complex64::new(alpha, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalBs {
    pub mass: f64,
    pub omega: f64,
    pub photon_momentum: f64,
}

impl PhysicalBs {
    pub fn new(mass: f64, omega: f64, photon_momentum: f64) -> Result<Self> {
        for (name, v) in [("mass", mass), ("omega", omega), ("photon_momentum", photon_momentum)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            mass,
            omega,
            photon_momentum,
        })
    }
}

/// `<0|α> = e^{-|α|²/2}`.
pub fn coherent_overlap(alpha: Complex64) -> Complex64 {
    Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0)
}

/// `α = i p / √(m ω ħ)`.
pub fn alpha_from_physical(p: &PhysicalBs) -> Complex64 {
    Complex64::new(0.0, p.photon_momentum / (p.mass * p.omega * HBAR).sqrt())
}

fn g_of(params: &MziParams) -> f64 {
    coherent_overlap(params.alpha).re
}

/// Output amplitudes of the photon leaving via path `a` and via path `b`
/// (phase shifter included), in `{|1_out>, |2_out>}`.
fn port_amplitudes(phi: f64) -> ([Complex64; 2], [Complex64; 2]) {
    let e = Complex64::from_polar(1.0, phi);
    let u = [Complex64::new(-0.5, 0.0), Complex64::new(0.0, -0.5)];
    let v = [-e * 0.5, Complex64::new(0.0, 0.5) * e];
    (u, v)
}

/// Which-path operators in the out basis, with `|α'>` the Gram-Schmidt
/// orthogonalisation of `|α>` against `|0>`:
///
/// `K_a = <α'|Ψ> <1_in| = √(1-g²) (-½|1_out> - i/2 |2_out>) <1_in|`,
/// `K_b = <0|Ψ> <1_in| = (-(g + e^{iφ})/2 |1_out> + i(-g + e^{iφ})/2 |2_out>) <1_in|`.
#[derive(Debug, Clone, PartialEq)]
pub struct MovableKraus {
    pub k_a: KrausOperator,
    pub k_b: KrausOperator,
}

pub fn build_movable_kraus(params: &MziParams, tol: &Tolerance) -> Result<MovableKraus> {
    let g = g_of(params);
    let w = (1.0 - g * g).max(0.0).sqrt();
    let (u, v) = port_amplitudes(params.phi);
    let col = |c: [Complex64; 2]| ComplexMatrix::from_rows(&[vec![c[0], ZERO], vec![c[1], ZERO]]).expect("2x2");
    let ka = col([u[0] * w, u[1] * w]);
    let kb = col([u[0] * g + v[0], u[1] * g + v[1]]);
    Ok(MovableKraus {
        k_a: KrausOperator::new("a", ka, tol)?,
        k_b: KrausOperator::new("b", kb, tol)?,
    })
}

/// The unorthogonalised `K_a = <α|Ψ><1_in|`; together
/// with `K_b` its effects exceed the identity.
pub fn non_orthogonal_kraus_a(params: &MziParams) -> ComplexMatrix {
    let g = g_of(params);
    let (u, v) = port_amplitudes(params.phi);
    ComplexMatrix::from_rows(&[vec![u[0] + v[0] * g, ZERO], vec![u[1] + v[1] * g, ZERO]]).expect("2x2")
}

/// `W`: path basis `{|a>, |b>}` to out basis, including BS2 and the phase
/// shifter. Columns are the normalised port amplitudes of each path.
pub fn output_unitary(phi: f64) -> ComplexMatrix {
    let (u, v) = port_amplitudes(phi);
    let r = std::f64::consts::SQRT_2;
    ComplexMatrix::from_rows(&[vec![u[0] * r, v[0] * r], vec![u[1] * r, v[1] * r]]).expect("2x2")
}

/// Effect of detector `d_port` (1 or 2) pulled back to the path basis.
pub fn detector_effect(phi: f64, port: usize) -> Result<ComplexMatrix> {
    if !(1..=2).contains(&port) {
        return Err(Error::InvalidArgument(format!(
            "the interferometer has ports 1 and 2, got {port}"
        )));
    }
    let w = output_unitary(phi);
    let p = Ket::basis(2, port - 1).projector();
    w.adjoint().matmul(&p)?.matmul(&w)
}

/// BS1 output `(|a> + |b>)/√2`.
pub fn source_state() -> Ket {
    Ket::from_real(&[1.0, 1.0]).expect("non-zero")
}

/// Splitter pointer restricted to `span{|0>, |α'>}`: path `a` leaves it
/// in `|α> = g|0> + √(1-g²)|α'>`, path `b` in `|0>`.
pub fn path_detector_model(params: &MziParams, tol: &Tolerance) -> Result<DetectorModel> {
    let g = g_of(params);
    let w = (1.0 - g * g).max(0.0).sqrt();
    let phi_a = Ket::new(vec![Complex64::new(g, 0.0), Complex64::new(w, 0.0)], tol)?;
    DetectorModel::new(
        vec![("a".into(), Ket::basis(2, 1)), ("b".into(), Ket::basis(2, 0))],
        vec![phi_a, Ket::basis(2, 0)],
        None,
        tol,
    )
}

/// Fock cutoff keeping all but a negligible tail of `|α>`.
pub fn fock_cutoff(alpha: Complex64) -> usize {
    let a = alpha.norm();
    (a * a + 10.0 * a + 20.0).ceil() as usize
}

/// `|α>` on Fock states `0..=n`.
pub fn coherent_state(alpha: Complex64, n: usize) -> Result<Ket> {
    let mut amps = Vec::with_capacity(n + 1);
    let mut c = coherent_overlap(alpha);
    amps.push(c);
    for k in 1..=n {
        c = c * alpha / (k as f64).sqrt();
        amps.push(c);
    }
    Ket::normalized(amps)
}

/// Splitter pointer as a truncated harmonic oscillator. The `a` readout is
/// the Gram-Schmidt state `|α'>`; at `α = 0` any state orthogonal to `|0>`
/// serves, since path `a` then never reaches it.
pub fn fock_detector_model(params: &MziParams, tol: &Tolerance) -> Result<DetectorModel> {
    let n = fock_cutoff(params.alpha);
    let vac = Ket::basis(n + 1, 0);
    let kicked = coherent_state(params.alpha, n)?;
    let pointer_a = match crate::linalg::gram_schmidt_orthogonalize(&kicked, &vac, tol) {
        Ok(k) => k,
        Err(Error::Degenerate(_)) => Ket::basis(n + 1, 1),
        Err(e) => return Err(e),
    };
    DetectorModel::new(
        vec![("a".into(), pointer_a), ("b".into(), vac.clone())],
        vec![kicked, vac],
        None,
        tol,
    )
}

/// Path-basis scenario: `a`, `b` bound from `model`, `d1`/`d2` effects,
/// preparation `(|a> + |b>)/√2`, coherent-sum policy for `a + b`.
pub fn path_scenario_with_model(phi: f64, model: &DetectorModel, tol: &Tolerance) -> Result<Scenario> {
    let mut sc = Scenario::new(DensityMatrix::from_ket(&source_state()), *tol).with_or_policy(OrPolicy::CoherentSum);
    for l in ["a", "b"] {
        sc.bind(l, Binding::Kraus(vec![kraus_from_detector_model(model, l, tol)?]))?;
    }
    sc.bind_effect("d1", detector_effect(phi, 1)?)?;
    sc.bind_effect("d2", detector_effect(phi, 2)?)?;
    Ok(sc)
}

/// Movable splitter in the path basis with `K_a = √(1-g²) P_a`,
/// `K_b = g P_a + P_b`.
pub fn path_scenario(params: &MziParams, tol: &Tolerance) -> Result<Scenario> {
    path_scenario_with_model(params.phi, &path_detector_model(params, tol)?, tol)
}

/// Fixed splitter: perfect projectors on the two paths.
pub fn fixed_bs_scenario(phi: f64, tol: &Tolerance) -> Result<Scenario> {
    path_scenario_with_model(phi, &DetectorModel::perfect(&["a", "b"]), tol)
}

/// `½(1 + cos φ)`.
pub fn prob_fixed_bs(phi: f64) -> f64 {
    0.5 * (1.0 + phi.cos())
}

/// `¼(1 - g²)`, independent of φ.
pub fn prob_path_a(params: &MziParams) -> f64 {
    let g = g_of(params);
    0.25 * (1.0 - g * g)
}

/// `¼|g + e^{iφ}|²`.
pub fn prob_path_b(params: &MziParams) -> f64 {
    0.25 * (Complex64::from_polar(1.0, params.phi) + g_of(params)).norm_sqr()
}

/// `½(1 + g cos φ)`.
pub fn prob_distributed(params: &MziParams) -> f64 {
    0.5 * (1.0 + g_of(params) * params.phi.cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub phi: f64,
    pub alpha: f64,
    pub p_fixed: f64,
    pub p_path_a: f64,
    pub p_path_b: f64,
    pub p_distributed: f64,
}

/// `|<1_out| K |1_in>|²`.
fn port1_probability(k: &KrausOperator) -> f64 {
    k.mat()[(0, 0)].norm_sqr()
}

/// One row per `(φ, α)`, α outermost. The path columns come from the Kraus
/// construction, the other two from the closed forms.
pub fn sweep(phis: &[f64], alphas: &[f64], tol: &Tolerance) -> Result<Vec<SweepRow>> {
    if phis.is_empty() || alphas.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(phis.len() * alphas.len());
    for &alpha in alphas {
        for &phi in phis {
            let p = MziParams::real(phi, alpha)?;
            let k = build_movable_kraus(&p, tol)?;
            rows.push(SweepRow {
                phi,
                alpha,
                p_fixed: prob_fixed_bs(phi),
                p_path_a: port1_probability(&k.k_a),
                p_path_b: port1_probability(&k.k_b),
                p_distributed: prob_distributed(&p),
            });
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "phi,alpha,p_fixed,p_path_a,p_path_b,p_distributed";

/// Shortest round-trip decimal representation of every value.
pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.phi, r.alpha, r.p_fixed, r.p_path_a, r.p_path_b, r.p_distributed
        ));
    }
    out
}

/// Evenly spaced `start, start + step, …` strictly below `stop` (or the
/// single value `start` when `start == stop`).
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err(Error::InvalidArgument("grid bounds must be finite".into()));
    }
    if start == stop {
        return Ok(vec![start]);
    }
    if step <= 0.0 || stop < start {
        return Err(Error::InvalidArgument(format!("empty grid {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step - 1e-9).ceil() as usize;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}
