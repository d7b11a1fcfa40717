use std::collections::BTreeMap;
use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use qprop_core::eraser::young_slit_scenario;
use qprop_core::mzi::{self, MziParams};
use qprop_core::{brute_force_oracle, causal_gap, evaluate, load_str, parse, OrPolicy, Tolerance};

const WITNESS: &str = include_str!("../../../fixtures/causal_witness.json");

fn evaluator(c: &mut Criterion) {
    let t = Tolerance::default();
    let sc = young_slit_scenario(&t).unwrap().with_or_policy(OrPolicy::CoherentSum);
    let atomic = parse("d & (a + b) | s").unwrap();
    let dist = parse("(d & a) + (d & b) | s").unwrap();
    c.bench_function("evaluate atomic", |b| {
        b.iter(|| evaluate(black_box(&atomic), &sc).unwrap())
    });
    c.bench_function("evaluate distributed", |b| {
        b.iter(|| evaluate(black_box(&dist), &sc).unwrap())
    });
    c.bench_function("parse", |b| {
        b.iter(|| parse(black_box("d & ((b & a) + (a & b)) & c | s")).unwrap())
    });
}

fn interferometer(c: &mut Criterion) {
    let t = Tolerance::default();
    let phis: Vec<f64> = (0..50).map(|k| 2.0 * PI * k as f64 / 50.0).collect();
    let alphas: Vec<f64> = (0..20).map(|k| 0.2 * k as f64).collect();
    c.bench_function("mzi sweep 50x20", |b| {
        b.iter(|| mzi::sweep(black_box(&phis), &alphas, &t).unwrap())
    });
    let params = MziParams::real(0.3, 1.5).unwrap();
    let sc = mzi::path_scenario(&params, &t).unwrap();
    let fock = mzi::fock_detector_model(&params, &t).unwrap();
    let models = BTreeMap::from([("a".to_string(), fock.clone()), ("b".to_string(), fock)]);
    let q = parse("(d1 & a) + (d1 & b) | s").unwrap();
    c.bench_function("fock oracle alpha=1.5", |b| {
        b.iter(|| brute_force_oracle(black_box(&q), &sc, &models).unwrap())
    });
}

fn causal(c: &mut Criterion) {
    let t = Tolerance::default();
    let l = load_str(WITNESS, &t).unwrap();
    let w = [num_complex::Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2];
    c.bench_function("causal gap", |b| {
        b.iter(|| causal_gap(black_box(&l.scenario), "d", &["a", "b"], w).unwrap())
    });
}

criterion_group!(benches, evaluator, interferometer, causal);
criterion_main!(benches);
