//! Two intermediate measurements with definite, mixed or indefinite order.
//!
//! With a definite order the probability is a plain Kraus chain. A classical
//! mixture of orders is a weighted instrument and always fits the causal
//! equality `Pr = λ Pr^{a first} + (1-λ) Pr^{b first}`. A coherent
//! superposition of the two orders, built here as
//! `K = w₁ K_b K_a + w₂ K_a K_b` (rescaled to stay a contraction), produces
//! cross terms and can leave the range of every such mixture.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluator::{compose, conditional, evaluate, Scenario};
use crate::expr::{parse, MeasurementExpr};
use crate::linalg::{ComplexMatrix, Tolerance};
use crate::measurement::{clamp_probability, effect_matrix, sequence_trace, KrausOperator};

#[derive(Debug, Clone, PartialEq)]
pub enum OrderPolicy {
    /// Exactly one ordering happens, listed first-applied first.
    Definite(Vec<String>),
    /// The first written ordering with probability `λ`, the second otherwise.
    Mixture(f64),
    /// Coherent superposition of the two written orderings.
    IndefiniteCoherent([Complex64; 2]),
}

impl OrderPolicy {
    pub fn mixture(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Invariant(format!("mixture weight {lambda} is outside [0, 1]")));
        }
        Ok(Self::Mixture(lambda))
    }

    pub fn indefinite(weights: [Complex64; 2], tol: &Tolerance) -> Result<Self> {
        let n = weights[0].norm_sqr() + weights[1].norm_sqr();
        if (n - 1.0).abs() > tol.eps_prob {
            return Err(Error::Invariant(format!(
                "order superposition weights have |w1|^2 + |w2|^2 = {n}, expected 1"
            )));
        }
        Ok(Self::IndefiniteCoherent(weights))
    }
}

/// Kraus list of an order-combined measurement and the factor applied to
/// keep `Σ K†K <= I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedOrder {
    pub ops: Vec<ComplexMatrix>,
    pub rescale: f64,
}

struct Atom<'a> {
    key: String,
    expr: &'a MeasurementExpr,
}

fn atoms(child: &MeasurementExpr) -> Vec<Atom<'_>> {
    child
        .chain()
        .into_iter()
        .map(|e| Atom {
            key: e.to_string(),
            expr: e,
        })
        .collect()
}

/// Superposes orderings of the same measurements. Each child is a chain
/// of `(key, Kraus list)` atoms in textual order; Kraus indices are shared
/// per key across children so that `Σ_{k1,k2}` runs over one pair of
/// outcomes.
fn superpose(
    children: &[Vec<(String, Vec<ComplexMatrix>)>],
    weights: &[Complex64],
    tol: &Tolerance,
) -> Result<CombinedOrder> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for (key, ops) in &children[0] {
        if !keys.iter().any(|(k, _)| k == key) {
            keys.push((key.clone(), ops.len()));
        }
    }
    for child in children {
        let mut ck: Vec<&str> = child.iter().map(|(k, _)| k.as_str()).collect();
        let mut k0: Vec<&str> = children[0].iter().map(|(k, _)| k.as_str()).collect();
        ck.sort_unstable();
        k0.sort_unstable();
        if ck != k0 {
            return Err(Error::Unsupported(
                "superposed orderings must contain the same measurements".into(),
            ));
        }
        ck.dedup();
        if ck.len() != child.len() && child.iter().any(|(_, ops)| ops.len() > 1) {
            return Err(Error::Unsupported(
                "a repeated multi-Kraus measurement inside a superposed ordering".into(),
            ));
        }
    }
    let total: usize = keys.iter().map(|(_, n)| n).product();
    let mut ops = Vec::with_capacity(total);
    let mut idx = vec![0usize; keys.len()];
    for _ in 0..total {
        let mut acc: Option<ComplexMatrix> = None;
        for (child, w) in children.iter().zip(weights) {
            let mut prod: Option<ComplexMatrix> = None;
            for (key, list) in child {
                let pos = keys.iter().position(|(k, _)| k == key).expect("known key");
                let m = &list[idx[pos]];
                prod = Some(match prod {
                    None => m.clone(),
                    Some(p) => p.matmul(m)?,
                });
            }
            let term = prod.expect("non-empty chain").scale(*w);
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term)?,
            });
        }
        ops.push(acc.expect("two children"));
        // odometer over the Kraus indices
        for (i, (_, n)) in keys.iter().enumerate() {
            idx[i] += 1;
            if idx[i] < *n {
                break;
            }
            idx[i] = 0;
        }
    }
    if ops.iter().all(|k| k.max_abs() <= tol.eps_prob) {
        return Err(Error::NullCombinator("the superposed orderings cancel exactly".into()));
    }
    let hi = *effect_matrix(&ops)?.hermitian_eigenvalues()?.last().expect("spectrum");
    let rescale = if hi > 1.0 { 1.0 / hi.sqrt() } else { 1.0 };
    if rescale != 1.0 {
        ops = ops.into_iter().map(|k| k.scale_real(rescale)).collect();
    }
    Ok(CombinedOrder { ops, rescale })
}

/// Kraus list for an alternative of orderings under the scenario's order policy.
pub(crate) fn combine_orderings(
    sc: &Scenario,
    children: &[MeasurementExpr],
    policy: &OrderPolicy,
) -> Result<CombinedOrder> {
    let resolved = |child: &MeasurementExpr| -> Result<Vec<(String, Vec<ComplexMatrix>)>> {
        atoms(child)
            .into_iter()
            .map(|a| Ok((a.key, sc.intermediate_ops(a.expr)?)))
            .collect()
    };
    match policy {
        OrderPolicy::IndefiniteCoherent(w) => {
            if children.len() != 2 {
                return Err(Error::Arity(format!(
                    "a coherent order superposition takes two orderings, got {}",
                    children.len()
                )));
            }
            let chains = children.iter().map(resolved).collect::<Result<Vec<_>>>()?;
            superpose(&chains, w, sc.tol())
        }
        OrderPolicy::Mixture(lambda) => {
            if children.len() != 2 {
                return Err(Error::Arity(format!(
                    "an order mixture takes two orderings, got {}",
                    children.len()
                )));
            }
            let mut ops = Vec::new();
            for (child, weight) in children.iter().zip([*lambda, 1.0 - lambda]) {
                if weight == 0.0 {
                    continue;
                }
                for k in sc.intermediate_ops(child)? {
                    ops.push(k.scale_real(weight.sqrt()));
                }
            }
            Ok(CombinedOrder { ops, rescale: 1.0 })
        }
        OrderPolicy::Definite(order) => {
            for child in children {
                let applied: Vec<String> = atoms(child).into_iter().rev().map(|a| a.key).collect();
                if &applied == order {
                    return Ok(CombinedOrder {
                        ops: sc.intermediate_ops(child)?,
                        rescale: 1.0,
                    });
                }
            }
            Err(Error::InvalidArgument(format!(
                "definite order {order:?} matches none of the written orderings"
            )))
        }
    }
}

/// Coherent order combinator `w₁ K_b K_a + w₂ K_a K_b` (one operator per
/// Kraus index pair), rescaled if needed so that `Σ K†K <= I`.
pub fn indefinite_kraus(
    branch_a: &[KrausOperator],
    branch_b: &[KrausOperator],
    weights: [Complex64; 2],
    tol: &Tolerance,
) -> Result<CombinedOrder> {
    let a: Vec<ComplexMatrix> = branch_a.iter().map(|k| k.mat().clone()).collect();
    let b: Vec<ComplexMatrix> = branch_b.iter().map(|k| k.mat().clone()).collect();
    if a.iter().chain(&b).any(|k| k.shape() != a[0].shape()) {
        return Err(Error::Dimension("order branches differ in shape".into()));
    }
    let ba = vec![("b".to_string(), b.clone()), ("a".to_string(), a.clone())];
    let ab = vec![("a".to_string(), a), ("b".to_string(), b)];
    superpose(&[ba, ab], &weights, tol)
}

/// Chain product with `order[0]` applied first.
fn ordered_ops(sc: &Scenario, order: &[&str]) -> Result<Vec<ComplexMatrix>> {
    let Some((first, rest)) = order.split_first() else {
        return Err(Error::Arity("empty measurement order".into()));
    };
    let mut acc = sc.kraus_mats(first)?;
    for l in rest {
        acc = compose(&sc.kraus_mats(l)?, &acc)?;
    }
    Ok(acc)
}

/// `tr(F K_n … K_1 ρ K_1† … K_n†)` for `order = [1, …, n]`.
pub fn ordered_probability(sc: &Scenario, order: &[&str], final_label: &str) -> Result<f64> {
    let f = sc.effect_mat(final_label)?;
    let ops = ordered_ops(sc, order)?;
    clamp_probability(sequence_trace(sc.preparation().mat(), &ops, &f)?, sc.tol())
}

fn two<'a>(intermediates: &[&'a str]) -> Result<(&'a str, &'a str)> {
    match intermediates {
        [a, b] => Ok((a, b)),
        other => Err(Error::Arity(format!(
            "causal analysis needs exactly two intermediate measurements, got {}",
            other.len()
        ))),
    }
}

/// `℘(d∧b∧a|s) + ℘(d∧a∧b|s)`: both orderings counted as distinguishable
/// outcomes. Not clamped, since the two orderings need not be exclusive.
pub fn distributed_order_probability(sc: &Scenario, final_label: &str, intermediates: &[&str]) -> Result<f64> {
    let (a, b) = two(intermediates)?;
    Ok(ordered_probability(sc, &[a, b], final_label)? + ordered_probability(sc, &[b, a], final_label)?)
}

fn prep_name(labels: &[&str]) -> String {
    let mut name = String::from("s");
    while labels.contains(&name.as_str()) {
        name.push('_');
    }
    name
}

/// `℘(a∧b|s) ℘(d|a∧b∧s) + ℘(b∧a|s) ℘(d|b∧a∧s)`, with a null conditioning
/// event contributing zero.
pub fn causal_equality_decomposition(sc: &Scenario, final_label: &str, intermediates: &[&str]) -> Result<f64> {
    let (a, b) = two(intermediates)?;
    let s = prep_name(&[final_label, a, b]);
    let mut total = 0.0;
    for (x, y) in [(a, b), (b, a)] {
        let given = parse(&format!("{x} & {y} | {s}"))?;
        let joint = parse(&format!("{final_label} & {x} & {y} | {s}"))?;
        let weight = evaluate(&given, sc)?;
        if weight <= sc.tol().eps_prob {
            continue;
        }
        total += weight * conditional(&joint, &given, sc)?;
    }
    Ok(total)
}

/// Distance from `target` to the segment of mixtures
/// `λ c_first + (1-λ) c_second`, with the minimising `λ`.
pub fn lambda_minimized_gap(target: f64, c_first: f64, c_second: f64) -> (f64, f64) {
    let (lo, hi) = (c_first.min(c_second), c_first.max(c_second));
    let closest = target.clamp(lo, hi);
    let lambda = if (c_first - c_second).abs() < f64::EPSILON {
        0.5
    } else {
        ((closest - c_second) / (c_first - c_second)).clamp(0.0, 1.0)
    };
    ((target - closest).abs(), lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalReport {
    /// `℘(d∧b∧a|s)`, `a` first.
    pub p_ab: f64,
    /// `℘(d∧a∧b|s)`, `b` first.
    pub p_ba: f64,
    /// The definite-order mixture of conditionals closest to the indefinite one.
    pub p_mixture: f64,
    /// `tr(F K ρ K†)` with the (rescaled) order-superposition operator.
    pub p_indefinite: f64,
    /// `min_λ |℘_ind(d|…) - (λ ℘(d|b∧a∧s) + (1-λ) ℘(d|a∧b∧s))|`.
    pub equality_gap: f64,
    pub cond_ab: f64,
    pub cond_ba: f64,
    pub cond_indefinite: f64,
    pub lambda: f64,
    pub rescale: f64,
}

/// Compares the coherent order superposition with every classical mixture of
/// the two definite orders, on the conditional probability of `final`.
pub fn causal_gap(
    sc: &Scenario,
    final_label: &str,
    intermediates: &[&str],
    weights: [Complex64; 2],
) -> Result<CausalReport> {
    let (a, b) = two(intermediates)?;
    let tol = sc.tol();
    let rho = sc.preparation().mat();
    let f = sc.effect_mat(final_label)?;
    let id = ComplexMatrix::identity(sc.dim());
    let cond = |ops: &[ComplexMatrix]| -> Result<(f64, f64)> {
        let joint = clamp_probability(sequence_trace(rho, ops, &f)?, tol)?;
        let norm = clamp_probability(sequence_trace(rho, ops, &id)?, tol)?;
        if norm <= tol.eps_prob {
            return Err(Error::ConditioningOnNull(norm));
        }
        Ok((joint, joint / norm))
    };
    let (p_ab, cond_ab) = cond(&ordered_ops(sc, &[a, b])?)?;
    let (p_ba, cond_ba) = cond(&ordered_ops(sc, &[b, a])?)?;
    let to_kraus = |l: &str| -> Result<Vec<KrausOperator>> {
        sc.kraus_mats(l)?
            .into_iter()
            .map(|m| KrausOperator::new(l, m, tol))
            .collect()
    };
    let combined = indefinite_kraus(&to_kraus(a)?, &to_kraus(b)?, weights, tol)?;
    let (p_indefinite, cond_indefinite) = cond(&combined.ops)?;
    let (equality_gap, lambda) = lambda_minimized_gap(cond_indefinite, cond_ab, cond_ba);
    Ok(CausalReport {
        p_ab,
        p_ba,
        p_mixture: lambda * cond_ab + (1.0 - lambda) * cond_ba,
        p_indefinite,
        equality_gap,
        cond_ab,
        cond_ba,
        cond_indefinite,
        lambda,
        rescale: combined.rescale,
    })
}
