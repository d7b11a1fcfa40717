//! The ten acceptance criteria, each against an independent oracle at its
//! pinned tolerance and runtime budget. Prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use qprop_core::causal::causal_equality_decomposition;
use qprop_core::eraser::{verify_equivalence, young_slit_scenario, EraserBasis};
use qprop_core::measurement::kraus_from_detector_model;
use qprop_core::mzi::{self, MziParams};
use qprop_core::{
    brute_force_oracle, causal_gap, distributed_order_probability, evaluate, evaluate_reduced_trace, load_path, parse,
    validate, Binding, ComplexMatrix, DetectorModel, Ket, LoadedScenario, OrPolicy, OrderPolicy, Scenario, Tolerance,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{c, direct_trace, random_contraction, random_density, random_effect, random_ket, random_unitary};

type Outcome = Result<String, String>;

/// Criterion number, runtime budget in seconds, check.
type Criterion = (u32, u64, fn() -> Outcome);

fn tol() -> Tolerance {
    Tolerance::default()
}

fn fixture(name: &str) -> Result<LoadedScenario, String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    load_path(&path, &tol()).map_err(|e| e.to_string())
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn perfect_models() -> BTreeMap<String, DetectorModel> {
    let t = tol();
    let one = Ket::basis(1, 0);
    let merged = DetectorModel::new(vec![("a + b".into(), one.clone())], vec![one.clone(), one], None, &t).unwrap();
    let mut m = BTreeMap::new();
    m.insert("a".to_string(), DetectorModel::perfect(&["a", "b"]));
    m.insert("b".to_string(), DetectorModel::perfect(&["a", "b"]));
    m.insert("a + b".to_string(), merged);
    m
}

fn criterion_1() -> Outcome {
    let t = tol();
    let q = parse("d1 & (a + b) | s").map_err(|e| e.to_string())?;
    let models = perfect_models();
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let phi = 2.0 * PI * k as f64 / 100.0;
        let sc = mzi::fixed_bs_scenario(phi, &t).map_err(|e| e.to_string())?;
        let expected = 0.5 * (1.0 + phi.cos());
        let e = evaluate(&q, &sc).map_err(|e| e.to_string())?;
        let o = brute_force_oracle(&q, &sc, &models).map_err(|e| e.to_string())?;
        worst = worst.max((e - expected).abs()).max((o - expected).abs());
    }
    check(worst < 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("max |p - (1 + cos phi)/2| = {worst:.2e} over 100 phases"))
}

fn criterion_2() -> Outcome {
    let t = tol();
    let phis: Vec<f64> = (0..50).map(|k| 2.0 * PI * k as f64 / 50.0).collect();
    let alphas: Vec<f64> = (0..20).map(|k| 0.2 * k as f64).collect();
    let rows = mzi::sweep(&phis, &alphas, &t).map_err(|e| e.to_string())?;
    let queries = [
        "d1 & a | s",
        "d1 & b | s",
        "(d1 & a) + (d1 & b) | s",
        "d1 & (a + b) | s",
    ]
    .map(|s| parse(s).unwrap());
    let fixed = perfect_models();
    let (mut sum_dev, mut flat_dev, mut oracle_dev): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut fock_models: BTreeMap<u64, BTreeMap<String, DetectorModel>> = BTreeMap::new();
    for r in &rows {
        let g = (-r.alpha * r.alpha / 2.0).exp();
        sum_dev = sum_dev.max((r.p_path_a + r.p_path_b - 0.5 * (1.0 + g * r.phi.cos())).abs());
        let first = rows.iter().find(|x| x.alpha == r.alpha).unwrap();
        flat_dev = flat_dev.max((r.p_path_a - first.p_path_a).abs());
        let params = MziParams::real(r.phi, r.alpha).map_err(|e| e.to_string())?;
        let models = fock_models.entry(r.alpha.to_bits()).or_insert_with(|| {
            let m = mzi::fock_detector_model(&params, &t).unwrap();
            BTreeMap::from([("a".to_string(), m.clone()), ("b".to_string(), m)])
        });
        let sc = mzi::path_scenario(&params, &t).map_err(|e| e.to_string())?;
        let o = |i: usize, m: &BTreeMap<String, DetectorModel>| brute_force_oracle(&queries[i], &sc, m).unwrap();
        for (value, oracle) in [
            (r.p_path_a, o(0, models)),
            (r.p_path_b, o(1, models)),
            (r.p_distributed, o(2, models)),
            (r.p_fixed, o(3, &fixed)),
        ] {
            oracle_dev = oracle_dev.max((value - oracle).abs());
        }
    }
    check(sum_dev < 1e-12, || format!("p_a + p_b deviates by {sum_dev:e}"))?;
    check(flat_dev < 1e-12, || format!("p_a varies with phi by {flat_dev:e}"))?;
    check(oracle_dev < 1e-10, || {
        format!("Fock-space oracle deviates by {oracle_dev:e}")
    })?;
    let spot = mzi::sweep(&[0.0], &[1.5], &t).map_err(|e| e.to_string())?[0];
    let sum = spot.p_path_a + spot.p_path_b;
    check(
        (spot.p_path_a - 0.223650).abs() < 5e-7
            && (spot.p_path_b - 0.438676).abs() < 5e-7
            && (sum - 0.662326).abs() < 5e-7,
        || format!("spot values {} {} {}", spot.p_path_a, spot.p_path_b, sum),
    )?;
    Ok(format!(
        "sum {sum_dev:.1e}, phi-drift {flat_dev:.1e}, oracle {oracle_dev:.1e}; alpha=1.5: {:.6} + {:.6} = {:.6}",
        spot.p_path_a, spot.p_path_b, sum
    ))
}

fn criterion_3() -> Outcome {
    let t = tol();
    let q = parse("(d1 & a) + (d1 & b) | s").unwrap();
    let mut out = Vec::new();
    for (alpha, limit) in [(0.0, 1.0), (10.0, 0.5)] {
        let params = MziParams::real(0.0, alpha).map_err(|e| e.to_string())?;
        let sc = mzi::path_scenario(&params, &t).map_err(|e| e.to_string())?;
        let p = evaluate(&q, &sc).map_err(|e| e.to_string())?;
        let swept = mzi::sweep(&[0.0], &[alpha], &t).map_err(|e| e.to_string())?[0];
        let p_cols = swept.p_path_a + swept.p_path_b;
        check((p - limit).abs() < 1e-10 && (p_cols - limit).abs() < 1e-10, || {
            format!("alpha = {alpha}: {p} / {p_cols}, expected {limit}")
        })?;
        out.push(format!("alpha={alpha}: {p:.12}"));
    }
    Ok(out.join(", "))
}

fn criterion_4() -> Outcome {
    let t = tol();
    let sc = young_slit_scenario(&t)
        .map_err(|e| e.to_string())?
        .with_or_policy(OrPolicy::CoherentSum);
    let atomic = evaluate(&parse("d & (a + b) | s").unwrap(), &sc).map_err(|e| e.to_string())?;
    let dist = evaluate(&parse("(d & a) + (d & b) | s").unwrap(), &sc).map_err(|e| e.to_string())?;
    // amplitudes <d|i><i|s> from the same kets the fixture uses
    let s = Ket::normalized(vec![c(0.8, 0.1), c(0.3, -0.5)]).unwrap();
    let d = Ket::normalized(vec![c(0.4, 0.3), c(-0.2, 0.7)]).unwrap();
    let psi: Vec<Complex64> = (0..2).map(|i| d.amplitudes()[i].conj() * s.amplitudes()[i]).collect();
    let expected = 2.0 * (psi[0].norm_sqr() * psi[1].norm_sqr()).sqrt() * (psi[0] * psi[1].conj()).arg().cos();
    let dev = (atomic - dist - expected).abs();
    check(dev < 1e-12, || format!("gap {} vs {expected}", atomic - dist))?;
    Ok(format!("gap {:.12} (deviation {dev:.1e})", atomic - dist))
}

fn criterion_5() -> Outcome {
    let t = tol();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let labels = ["a", "b", "c"];
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let dim = rng.gen_range(2..=4);
        let det = rng.gen_range(2..=4);
        let n_out = rng.gen_range(2..=det.min(3));
        let w = random_unitary(&mut rng, det);
        let pointers: Vec<(String, Ket)> = (0..n_out)
            .map(|k| (labels[k].to_string(), Ket::new(w.col(k), &t).unwrap()))
            .collect();
        let post: Vec<Ket> = (0..dim).map(|_| random_ket(&mut rng, det)).collect();
        let model = DetectorModel::new(pointers, post, None, &t).map_err(|e| e.to_string())?;
        let mut sc = Scenario::new(random_density(&mut rng, dim), t);
        for l in &labels[..n_out] {
            sc.bind(
                *l,
                Binding::Kraus(vec![kraus_from_detector_model(&model, l, &t).unwrap()]),
            )
            .unwrap();
        }
        sc.bind_effect("d", random_effect(&mut rng, dim)).unwrap();
        let k = rng.gen_range(2..=n_out);
        let text = labels[..k]
            .iter()
            .map(|l| format!("(d & {l})"))
            .collect::<Vec<_>>()
            .join(" + ")
            + " | s";
        let q = parse(&text).unwrap();
        let reduced = evaluate_reduced_trace(&q, &sc, &model).map_err(|e| e.to_string())?;
        let dist = evaluate(&q, &sc).map_err(|e| e.to_string())?;
        worst = worst.max((reduced - dist).abs());
    }
    check(worst < 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e} over 200 models"))
}

fn criterion_6() -> Outcome {
    let t = tol();
    let sc = young_slit_scenario(&t).map_err(|e| e.to_string())?;
    let rho = sc.preparation().mat().clone();
    let f = sc.effect_mat("d").unwrap();
    let p = [Ket::basis(2, 0).projector(), Ket::basis(2, 1).projector()];
    let which_path = direct_trace(&rho, &[&p[0]], &f) + direct_trace(&rho, &[&p[1]], &f);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let basis = EraserBasis::from_angles(
            rng.gen_range(0.05..1.5),
            rng.gen_range(0.0..2.0 * PI),
            rng.gen_range(0.0..2.0 * PI),
            &t,
        )
        .map_err(|e| e.to_string())?;
        let rep = verify_equivalence(&basis, &sc).map_err(|e| e.to_string())?;
        // detector picture: Σ_i P_i|s>|i_det>, read the detector in rows q, r
        let v = basis.coefficients();
        let mut erased = 0.0;
        for j in 0..2 {
            let k = p[0].scale(v[(j, 0)].conj()).add(&p[1].scale(v[(j, 1)].conj())).unwrap();
            erased += direct_trace(&rho, &[&k], &f);
        }
        worst = worst
            .max(rep.gap)
            .max((erased - which_path).abs())
            .max((rep.rhs - which_path).abs());
    }
    check(worst < 1e-12, || format!("max gap {worst:e}"))?;
    Ok(format!("max gap {worst:.1e} over 100 bases"))
}

fn random_kraus_list<R: Rng>(rng: &mut R, dim: usize) -> Vec<ComplexMatrix> {
    let n = rng.gen_range(1..=2);
    (0..n)
        .map(|_| random_contraction(rng, dim).scale_real(1.0 / (n as f64).sqrt()))
        .collect()
}

fn criterion_7() -> Outcome {
    let t = tol();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let dim = rng.gen_range(2..=3);
        let ka = random_kraus_list(&mut rng, dim);
        let kb = random_kraus_list(&mut rng, dim);
        let f = random_effect(&mut rng, dim);
        let rho = random_density(&mut rng, dim);
        let mut sc = Scenario::new(rho.clone(), t);
        sc.bind_kraus("a", ka.clone()).unwrap();
        sc.bind_kraus("b", kb.clone()).unwrap();
        sc.bind_effect("d", f.clone()).unwrap();
        let dist = distributed_order_probability(&sc, "d", &["a", "b"]).map_err(|e| e.to_string())?;
        let decomposed = causal_equality_decomposition(&sc, "d", &["a", "b"]).map_err(|e| e.to_string())?;
        let mut direct = 0.0;
        for x in &ka {
            for y in &kb {
                direct += direct_trace(rho.mat(), &[x, y], &f) + direct_trace(rho.mat(), &[y, x], &f);
            }
        }
        worst = worst.max((dist - decomposed).abs()).max((dist - direct).abs());
    }
    check(worst < 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e} over 100 scenarios"))
}

/// Conditional of `d` after the real 2D vector `v` (unnormalised), and its weight.
fn cond2(v: [f64; 2], d: [f64; 2]) -> (f64, f64) {
    let w = v[0] * v[0] + v[1] * v[1];
    let amp = v[0] * d[0] + v[1] * d[1];
    (amp * amp / w, w)
}

fn witness_gap(ta: f64, tb: f64, ts: f64, td: f64) -> Option<f64> {
    let u = |t: f64| [t.cos(), t.sin()];
    let (a, b, s, d) = (u(ta), u(tb), u(ts), u(td));
    let dot = |x: [f64; 2], y: [f64; 2]| x[0] * y[0] + x[1] * y[1];
    let ab = dot(a, b);
    // K_b K_a |s> and K_a K_b |s>
    let ba_s = [dot(a, s) * ab * b[0], dot(a, s) * ab * b[1]];
    let ab_s = [dot(b, s) * ab * a[0], dot(b, s) * ab * a[1]];
    let ind = [FRAC_1_SQRT_2 * (ba_s[0] + ab_s[0]), FRAC_1_SQRT_2 * (ba_s[1] + ab_s[1])];
    let (c1, w1) = cond2(ba_s, d);
    let (c2, w2) = cond2(ab_s, d);
    let (ci, wi) = cond2(ind, d);
    if w1.min(w2).min(wi) < 0.15 {
        return None;
    }
    Some((c1.min(c2) - ci).max(ci - c1.max(c2)).max(0.0))
}

fn criterion_8() -> Outcome {
    let l = fixture("causal_witness.json")?;
    let weights = match l.scenario.order_policy() {
        Some(OrderPolicy::IndefiniteCoherent(w)) => *w,
        other => return Err(format!("witness has order policy {other:?}")),
    };
    let rep = causal_gap(&l.scenario, "d", &["a", "b"], weights).map_err(|e| e.to_string())?;
    let angles = &l.file.metadata.as_ref().ok_or("witness has no metadata")?["angles_deg"];
    let deg = |k: &str| angles[k].as_f64().unwrap().to_radians();
    let independent = witness_gap(deg("a"), deg("b"), deg("s"), deg("d")).ok_or("witness violates the weight floor")?;
    check((rep.equality_gap - independent).abs() < 1e-12, || {
        format!("library gap {} vs direct {independent}", rep.equality_gap)
    })?;
    let grid: Vec<f64> = (0..24).map(|k| PI * k as f64 / 24.0).collect();
    let mut best: f64 = 0.0;
    for &ta in &grid {
        for &tb in &grid {
            for &ts in &grid {
                for &td in &grid {
                    if let Some(g) = witness_gap(ta, tb, ts, td) {
                        best = best.max(g);
                    }
                }
            }
        }
    }
    check(rep.equality_gap > 0.01, || format!("gap {}", rep.equality_gap))?;
    check((best - rep.equality_gap).abs() < 1e-9, || {
        format!(
            "grid optimum {best} differs from the shipped witness {}",
            rep.equality_gap
        )
    })?;
    Ok(format!(
        "equality gap {:.12} (cond_ab {:.6}, cond_ba {:.6}, cond_ind {:.6}); grid optimum {best:.12}",
        rep.equality_gap, rep.cond_ab, rep.cond_ba, rep.cond_indefinite
    ))
}

/// Two-outcome device with orthogonal pointers and a third "neither"
/// pointer. Returns the device and the merged device read by `x + y`.
fn random_device<R: Rng>(
    rng: &mut R,
    dim: usize,
    labels: [&str; 2],
    projective: bool,
    complement: Option<&ComplexMatrix>,
) -> (DetectorModel, DetectorModel) {
    let t = tol();
    let w = random_unitary(rng, 3);
    let e: Vec<Vec<Complex64>> = (0..3).map(|k| w.col(k)).collect();
    let mut post = Vec::new();
    let mut xs = Vec::new();
    for _ in 0..dim {
        let (class, x) = if projective {
            let g = rng.gen_range(0..3);
            (g.min(1), if g < 2 { c(1.0, 0.0) } else { c(0.0, 0.0) })
        } else {
            (
                rng.gen_range(0..2),
                Complex64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..2.0 * PI)),
            )
        };
        let y = (1.0 - x.norm_sqr()).max(0.0).sqrt();
        let amps: Vec<Complex64> = (0..3).map(|k| x * e[class][k] + y * e[2][k]).collect();
        post.push(Ket::new(amps, &t).unwrap());
        xs.push(x);
    }
    let transition = if rng.gen_bool(0.5) {
        Some(random_unitary(rng, dim))
    } else {
        None
    };
    let pointers = vec![
        (labels[0].to_string(), Ket::new(e[0].clone(), &t).unwrap()),
        (labels[1].to_string(), Ket::new(e[1].clone(), &t).unwrap()),
    ];
    let device = DetectorModel::new(pointers, post, transition.clone(), &t).unwrap();
    let merged_post: Vec<Ket> = xs
        .iter()
        .map(|&x| {
            let x = if complement.is_some() { c(x.norm(), 0.0) } else { x };
            Ket::new(vec![x, c((1.0 - x.norm_sqr()).max(0.0).sqrt(), 0.0)], &t).unwrap()
        })
        .collect();
    // K = Tᵀ diag(<ℓ|Φ_i>), so the complement unitary U enters as Uᵀ
    let merged_transition = match complement {
        Some(u) => {
            let mut ut = ComplexMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    ut[(i, j)] = u[(j, i)];
                }
            }
            Some(ut)
        }
        None => transition,
    };
    let merged = DetectorModel::new(
        vec![(format!("{} + {}", labels[0], labels[1]), Ket::basis(2, 0))],
        merged_post,
        merged_transition,
        &t,
    )
    .unwrap();
    (device, merged)
}

const DEVICES: [[&str; 2]; 2] = [["a", "b"], ["c", "e"]];

/// A chain of at most three measurements, read after `d`.
fn random_steps<R: Rng>(rng: &mut R, order_pair: &mut Option<(String, String)>) -> Vec<String> {
    let mut steps = Vec::new();
    let mut budget = 3;
    let n = rng.gen_range(1..=3);
    while budget > 0 && steps.len() < n {
        let dev = DEVICES[rng.gen_range(0..2)];
        match rng.gen_range(0..6) {
            0..=2 => {
                steps.push(dev[rng.gen_range(0..2)].to_string());
                budget -= 1;
            }
            3 | 4 => {
                steps.push(format!("({} + {})", dev[0], dev[1]));
                budget -= 1;
            }
            _ if budget >= 2 && order_pair.is_none() => {
                let x = DEVICES[0][rng.gen_range(0..2)];
                let y = DEVICES[1][rng.gen_range(0..2)];
                steps.push(format!("(({x} & {y}) + ({y} & {x}))"));
                *order_pair = Some((x.to_string(), y.to_string()));
                budget -= 2;
            }
            _ => {}
        }
    }
    steps
}

fn sibling(label: &str) -> Option<&'static str> {
    DEVICES.iter().find_map(|d| {
        if d[0] == label {
            Some(d[1])
        } else if d[1] == label {
            Some(d[0])
        } else {
            None
        }
    })
}

/// `steps` alone, or as a distributed alternative with the chain that
/// differs in one outcome of one device (exclusive events).
fn random_query<R: Rng>(rng: &mut R, steps: &[String]) -> String {
    let chain = |s: &[String]| format!("d & {}", s.join(" & "));
    let swappable: Vec<usize> = (0..steps.len()).filter(|&i| sibling(&steps[i]).is_some()).collect();
    if swappable.is_empty() || rng.gen_bool(0.5) {
        return format!("{} | s", chain(steps));
    }
    let i = swappable[rng.gen_range(0..swappable.len())];
    let mut other = steps.to_vec();
    other[i] = sibling(&steps[i]).unwrap().to_string();
    format!("({}) + ({}) | s", chain(steps), chain(&other))
}

fn criterion_9() -> Outcome {
    let t = tol();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    let mut worst_q = String::new();
    let (mut n_order, mut n_atomic, mut n_dist, mut n_comp) = (0, 0, 0, 0);
    for _ in 0..500 {
        let dim = rng.gen_range(2..=4);
        let complement = rng.gen_bool(0.3).then(|| random_unitary(&mut rng, dim));
        let policy = match &complement {
            Some(u) => OrPolicy::complement(u.clone(), &t).map_err(|e| e.to_string())?,
            None => OrPolicy::CoherentSum,
        };
        let mut sc = Scenario::new(random_density(&mut rng, dim), t).with_or_policy(policy);
        let mut models = BTreeMap::new();
        for labels in DEVICES {
            let projective = rng.gen_bool(0.5);
            let (device, merged) = random_device(&mut rng, dim, labels, projective, complement.as_ref());
            for l in labels {
                sc.bind(
                    l,
                    Binding::Kraus(vec![kraus_from_detector_model(&device, l, &t).unwrap()]),
                )
                .unwrap();
                models.insert(l.to_string(), device.clone());
            }
            models.insert(format!("{} + {}", labels[0], labels[1]), merged);
        }
        sc.bind_effect("d", random_effect(&mut rng, dim)).unwrap();
        let mut order_pair = None;
        let steps = random_steps(&mut rng, &mut order_pair);
        let text = random_query(&mut rng, &steps);
        if let Some((x, y)) = order_pair {
            sc.set_order_policy(Some(match rng.gen_range(0..3) {
                0 => OrderPolicy::Definite(vec![x, y]),
                1 => OrderPolicy::Definite(vec![y, x]),
                _ => OrderPolicy::mixture(rng.gen_range(0.0..=1.0)).unwrap(),
            }));
        }
        n_order += usize::from(text.contains("(("));
        n_atomic += usize::from(text.contains(" + b)") || text.contains(" + e)"));
        n_dist += usize::from(text.contains(") + (d"));
        n_comp += usize::from(complement.is_some());
        let q = parse(&text).map_err(|e| format!("{text}: {e}"))?;
        let e = evaluate(&q, &sc).map_err(|e| format!("{text}: {e}"))?;
        let o = brute_force_oracle(&q, &sc, &models).map_err(|e| format!("{text}: {e}"))?;
        if (e - o).abs() > worst {
            worst = (e - o).abs();
            worst_q = text;
        }
    }
    check(worst < 1e-10, || format!("max deviation {worst:e} on `{worst_q}`"))?;
    Ok(format!(
        "max deviation {worst:.1e} over 500 scenarios ({n_order} order, {n_atomic} atomic, {n_dist} distributed, {n_comp} complement)"
    ))
}

fn criterion_10() -> Outcome {
    for name in [
        "young.json",
        "mzi_fixed.json",
        "mzi_movable.json",
        "causal_witness.json",
    ] {
        let rep = validate(&fixture(name)?).map_err(|e| e.to_string())?;
        check(rep.valid, || format!("{name} does not validate: {:?}", rep.groups))?;
    }
    let bad = validate(&fixture("bad_povm.json")?).map_err(|e| e.to_string())?;
    let g = &bad.groups[0];
    check(
        !bad.valid
            && (g.completeness_deviation - 0.2).abs() < 1e-12
            && g.diagnostics.iter().any(|d| d.starts_with("completeness violation")),
        || format!("bad_povm.json: {g:?}"),
    )?;
    let over = validate(&fixture("mzi_nonorthogonal_pointer.json")?).map_err(|e| e.to_string())?;
    let g2 = &over.groups[0];
    let overlap = (-1.125f64).exp();
    check(
        !over.valid
            && (g2.complement_min_eigenvalue + overlap * overlap).abs() < 1e-12
            && g2.diagnostics.iter().any(|d| d.starts_with("PSD violation")),
        || format!("mzi_nonorthogonal_pointer.json: {g2:?}"),
    )?;
    Ok(format!(
        "4 fixtures valid; completeness deviation {:.6}; PSD eigenvalue {:.6}",
        g.completeness_deviation, g2.complement_min_eigenvalue
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, 1, criterion_1),
        (2, 10, criterion_2),
        (3, 1, criterion_3),
        (4, 1, criterion_4),
        (5, 30, criterion_5),
        (6, 5, criterion_6),
        (7, 10, criterion_7),
        (8, 10, criterion_8),
        (9, 60, criterion_9),
        (10, 1, criterion_10),
    ];
    let mut failed = 0;
    for (n, budget, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed > Duration::from_secs(budget) {
                Err(format!("{msg}; took {elapsed:?}, budget {budget} s"))
            } else {
                Ok(msg)
            }
        });
        match outcome {
            Ok(msg) => println!("criterion {n:>2}: PASS  {msg} [{:.3} s]", elapsed.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL  {msg} [{:.3} s]", elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
