//! Canned acceptance scenarios behind `qprop reproduce`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use qprop_core::causal::causal_equality_decomposition;
use qprop_core::eraser::{verify_equivalence, young_slit_scenario, EraserBasis};
use qprop_core::mzi::{self, MziParams};
use qprop_core::{
    brute_force_oracle, causal_gap as gap_report, distributed_order_probability, evaluate, load_str, parse,
    ComplexMatrix, DetectorModel, Ket, OrderPolicy, Scenario, Tolerance,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WITNESS: &str = include_str!("../../../fixtures/causal_witness.json");

pub struct Check {
    pub criterion: u32,
    pub name: &'static str,
    pub outcome: Result<String, String>,
}

fn run(criterion: u32, name: &'static str, f: impl FnOnce() -> Result<String, String>) -> Check {
    Check {
        criterion,
        name,
        outcome: f(),
    }
}

fn err(e: impl ToString) -> String {
    e.to_string()
}

fn fixed_models() -> Result<BTreeMap<String, DetectorModel>, String> {
    let one = Ket::basis(1, 0);
    let merged = DetectorModel::new(
        vec![("a + b".into(), one.clone())],
        vec![one.clone(), one],
        None,
        &Tolerance::default(),
    )
    .map_err(err)?;
    Ok(BTreeMap::from([
        ("a".to_string(), DetectorModel::perfect(&["a", "b"])),
        ("b".to_string(), DetectorModel::perfect(&["a", "b"])),
        ("a + b".to_string(), merged),
    ]))
}

/// Fixed-splitter fringe and the movable-splitter curves at `α = 1.5`.
pub fn fig4_top() -> Vec<Check> {
    let tol = Tolerance::default();
    let phis: Vec<f64> = (0..100).map(|k| 2.0 * PI * k as f64 / 100.0).collect();
    let fixed = run(1, "fixed splitter fringe", || {
        let q = parse("d1 & (a + b) | s").map_err(err)?;
        let models = fixed_models()?;
        let mut worst: f64 = 0.0;
        for &phi in &phis {
            let sc = mzi::fixed_bs_scenario(phi, &tol).map_err(err)?;
            let want = 0.5 * (1.0 + phi.cos());
            worst = worst
                .max((evaluate(&q, &sc).map_err(err)? - want).abs())
                .max((brute_force_oracle(&q, &sc, &models).map_err(err)? - want).abs());
        }
        if worst < 1e-12 {
            Ok(format!("max deviation {worst:.1e} over 100 phases"))
        } else {
            Err(format!("max deviation {worst:e}"))
        }
    });
    let movable = run(2, "movable splitter at alpha = 1.5", || {
        let alpha = 1.5;
        let rows = mzi::sweep(&phis, &[alpha], &tol).map_err(err)?;
        let g = (-alpha * alpha / 2.0f64).exp();
        let params = MziParams::real(0.0, alpha).map_err(err)?;
        let fock = mzi::fock_detector_model(&params, &tol).map_err(err)?;
        let models = BTreeMap::from([("a".to_string(), fock.clone()), ("b".to_string(), fock)]);
        let qa = parse("d1 & a | s").map_err(err)?;
        let qb = parse("d1 & b | s").map_err(err)?;
        let (mut closed, mut oracle): (f64, f64) = (0.0, 0.0);
        for r in &rows {
            closed = closed
                .max((r.p_path_a + r.p_path_b - 0.5 * (1.0 + g * r.phi.cos())).abs())
                .max((r.p_path_a - rows[0].p_path_a).abs());
            let sc = mzi::path_scenario(&MziParams::real(r.phi, alpha).map_err(err)?, &tol).map_err(err)?;
            oracle = oracle
                .max((brute_force_oracle(&qa, &sc, &models).map_err(err)? - r.p_path_a).abs())
                .max((brute_force_oracle(&qb, &sc, &models).map_err(err)? - r.p_path_b).abs());
        }
        let spot = rows[0];
        if closed < 1e-12 && oracle < 1e-10 {
            Ok(format!(
                "p_a = {:.6}, p_b = {:.6} at phi = 0; closed forms {closed:.1e}, Fock oracle {oracle:.1e}",
                spot.p_path_a, spot.p_path_b
            ))
        } else {
            Err(format!("closed forms off by {closed:e}, oracle off by {oracle:e}"))
        }
    });
    vec![fixed, movable]
}

/// Visibility loss at `φ = 0` as the kick grows.
pub fn fig4_bottom() -> Vec<Check> {
    let tol = Tolerance::default();
    vec![run(3, "particle-like limit", || {
        let q = parse("(d1 & a) + (d1 & b) | s").map_err(err)?;
        let p = |alpha: f64| -> Result<f64, String> {
            let sc = mzi::path_scenario(&MziParams::real(0.0, alpha).map_err(err)?, &tol).map_err(err)?;
            evaluate(&q, &sc).map_err(err)
        };
        let curve = (0..=100).map(|k| p(0.1 * k as f64)).collect::<Result<Vec<_>, _>>()?;
        let monotone = curve.windows(2).all(|w| w[1] <= w[0] + 1e-15);
        let (lo, hi) = (curve[0], curve[100]);
        if (lo - 1.0).abs() < 1e-10 && (hi - 0.5).abs() < 1e-10 && monotone {
            Ok(format!("alpha = 0: {lo:.12}, alpha = 10: {hi:.12}, monotone"))
        } else {
            Err(format!("endpoints {lo}, {hi}, monotone {monotone}"))
        }
    })]
}

pub fn eraser() -> Vec<Check> {
    let tol = Tolerance::default();
    vec![run(6, "quantum eraser", || {
        let sc = young_slit_scenario(&tol).map_err(err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let basis = EraserBasis::from_angles(
                rng.gen_range(0.05..1.5),
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(0.0..2.0 * PI),
                &tol,
            )
            .map_err(err)?;
            worst = worst.max(verify_equivalence(&basis, &sc).map_err(err)?.gap);
        }
        if worst < 1e-12 {
            Ok(format!("max gap {worst:.1e} over 100 random bases"))
        } else {
            Err(format!("max gap {worst:e}"))
        }
    })]
}

fn random_contraction(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let data = (0..dim * dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let m = ComplexMatrix::new(dim, dim, data).expect("square");
    let top = m
        .adjoint()
        .matmul(&m)
        .expect("square")
        .hermitian_eigenvalues()
        .expect("hermitian");
    m.scale_real(1.0 / top[dim - 1].sqrt().max(1.0))
}

pub fn causal_gap() -> Vec<Check> {
    let tol = Tolerance::default();
    let definite = run(7, "causal equality, definite order", || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let dim = rng.gen_range(2..=3);
            let s: Vec<Complex64> = (0..dim)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let mut sc = Scenario::new(
                qprop_core::DensityMatrix::from_ket(&Ket::normalized(s).map_err(err)?),
                tol,
            );
            sc.bind_kraus("a", vec![random_contraction(&mut rng, dim)])
                .map_err(err)?;
            sc.bind_kraus("b", vec![random_contraction(&mut rng, dim)])
                .map_err(err)?;
            let f = random_contraction(&mut rng, dim);
            sc.bind_effect("d", f.adjoint().matmul(&f).map_err(err)?.hermitian_part().map_err(err)?)
                .map_err(err)?;
            let dist = distributed_order_probability(&sc, "d", &["a", "b"]).map_err(err)?;
            let dec = causal_equality_decomposition(&sc, "d", &["a", "b"]).map_err(err)?;
            worst = worst.max((dist - dec).abs());
        }
        if worst < 1e-10 {
            Ok(format!("max deviation {worst:.1e} over 100 scenarios"))
        } else {
            Err(format!("max deviation {worst:e}"))
        }
    });
    let indefinite = run(8, "causal equality violated, indefinite order", || {
        let loaded = load_str(WITNESS, &tol).map_err(err)?;
        let Some(OrderPolicy::IndefiniteCoherent(w)) = loaded.scenario.order_policy() else {
            return Err("witness has no indefinite_coherent policy".into());
        };
        let r = gap_report(&loaded.scenario, "d", &["a", "b"], *w).map_err(err)?;
        if r.equality_gap > 0.01 {
            Ok(format!(
                "equality gap {:.12} (cond_ab {:.6}, cond_ba {:.6}, indefinite {:.6})",
                r.equality_gap, r.cond_ab, r.cond_ba, r.cond_indefinite
            ))
        } else {
            Err(format!("equality gap {} is not above 0.01", r.equality_gap))
        }
    });
    vec![definite, indefinite]
}
