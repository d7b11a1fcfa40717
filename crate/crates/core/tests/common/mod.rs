#![allow(dead_code)]

use num_complex::Complex64;
use qprop_core::{ComplexMatrix, DensityMatrix, Ket, Tolerance};
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

pub fn random_ket<R: Rng>(rng: &mut R, n: usize) -> Ket {
    loop {
        if let Ok(k) = Ket::normalized(random_vec(rng, n)) {
            return k;
        }
    }
}

/// Gram-Schmidt on random columns.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    while cols.len() < n {
        let mut v = random_vec(rng, n);
        for _ in 0..2 {
            for b in &cols {
                let ov: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= ov * bi;
                }
            }
        }
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nv > 1e-3 {
            cols.push(v.into_iter().map(|z| z / nv).collect());
        }
    }
    let mut u = ComplexMatrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            u[(i, j)] = *z;
        }
    }
    u
}

/// `U diag(λ) U†` with `λ` drawn from `[lo, hi]`.
pub fn random_hermitian_with_spectrum<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> ComplexMatrix {
    let u = random_unitary(rng, n);
    let l: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
    u.matmul(&ComplexMatrix::real_diag(&l))
        .unwrap()
        .matmul(&u.adjoint())
        .unwrap()
}

pub fn random_effect<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    random_hermitian_with_spectrum(rng, n, 0.0, 1.0)
}

/// `V √E` for a random unitary `V` and effect `E`.
pub fn random_contraction<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let v = random_unitary(rng, n);
    let root = random_hermitian_with_spectrum(rng, n, 0.0, 1.0);
    v.matmul(&root).unwrap()
}

pub fn random_density<R: Rng>(rng: &mut R, n: usize) -> DensityMatrix {
    let rank = rng.gen_range(1..=n);
    let mut m = ComplexMatrix::zeros(n, n);
    let mut total = 0.0;
    for _ in 0..rank {
        let w: f64 = rng.gen_range(0.1..1.0);
        total += w;
        m = m.add(&random_ket(rng, n).projector().scale_real(w)).unwrap();
    }
    DensityMatrix::new(
        m.scale_real(1.0 / total).hermitian_part().unwrap(),
        &Tolerance::default(),
    )
    .unwrap()
}

/// `tr(F K ρ K†)` for the product `K = ops[last] ... ops[0]`.
pub fn direct_trace(rho: &ComplexMatrix, ops: &[&ComplexMatrix], f: &ComplexMatrix) -> f64 {
    let mut s = rho.clone();
    for k in ops {
        s = k.matmul(&s).unwrap().matmul(&k.adjoint()).unwrap();
    }
    f.matmul(&s).unwrap().trace().unwrap().re
}
