//! Independent check of [`crate::evaluator::evaluate`]: every intermediate
//! measurement is replaced by its physical interaction with a fresh detector
//! ancilla, the full system ⊗ detectors state is propagated, and the
//! detectors are finally read out on the pointer states the proposition
//! names.
//!
//! Atomic alternatives `a + b` are looked up in the model map under their
//! rendered key (`"a + b"`) and read out on the pointer of that key. An
//! alternative of orderings uses the scenario's order policy; a coherent
//! order superposition is realised with a control qubit prepared in
//! `w₁|0> + w₂|1>` and post-selected on `|+>`, so its value is the
//! evaluator's (unrescaled) value divided by two.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::causal::OrderPolicy;
use crate::error::{Error, Result};
use crate::evaluator::{interaction_isometry, Scenario};
use crate::expr::{MeasurementExpr, Query};
use crate::linalg::{ComplexMatrix, ZERO};
use crate::measurement::{clamp_probability, clamp_real, DetectorModel};

pub const DEFAULT_DIMENSION_CAP: usize = 4096;

struct Slot {
    key: String,
    iso: ComplexMatrix,
    dim: usize,
    pointer: Vec<Complex64>,
}

enum Step {
    Atom(usize),
    Orders(Vec<Vec<Step>>),
}

struct Planner<'a> {
    sc: &'a Scenario,
    models: &'a BTreeMap<String, DetectorModel>,
    slots: Vec<Slot>,
}

impl Planner<'_> {
    fn slot(&mut self, key: &str) -> Result<usize> {
        let model = self
            .models
            .get(key)
            .ok_or_else(|| Error::InvalidArgument(format!("no detector model for `{key}`")))?;
        if model.system_dim() != self.sc.dim() {
            return Err(Error::Dimension(format!(
                "detector model for `{key}` acts on dimension {}, scenario dimension is {}",
                model.system_dim(),
                self.sc.dim()
            )));
        }
        let pointer = model
            .pointer(key)
            .ok_or_else(|| Error::UnknownOutcome(format!("detector model for `{key}` has no pointer `{key}`")))?;
        let iso = interaction_isometry(model);
        let dev = iso
            .adjoint()
            .matmul(&iso)?
            .max_abs_diff(&ComplexMatrix::identity(self.sc.dim()))?;
        if dev > self.sc.tol().eps_prob {
            return Err(Error::Invariant(format!(
                "interaction of `{key}` is not an isometry (deviation {dev:e})"
            )));
        }
        self.slots.push(Slot {
            key: key.to_string(),
            iso,
            dim: model.detector_dim(),
            pointer: pointer.amplitudes().to_vec(),
        });
        Ok(self.slots.len() - 1)
    }

    /// Steps of a chain in application order (rightmost first).
    fn chain(&mut self, e: &MeasurementExpr, shared: Option<&BTreeMap<String, usize>>) -> Result<Vec<Step>> {
        let mut steps = Vec::new();
        for atom in e.chain().into_iter().rev() {
            steps.push(self.atom(atom, shared)?);
        }
        Ok(steps)
    }

    fn atom(&mut self, atom: &MeasurementExpr, shared: Option<&BTreeMap<String, usize>>) -> Result<Step> {
        match atom {
            MeasurementExpr::Alt(children) if children.iter().all(|c| matches!(c, MeasurementExpr::Seq(..))) => {
                if self.sc.order_policy().is_none() {
                    return Err(Error::MissingPolicy(format!(
                        "`{atom}` has undetermined order but the scenario has no order_policy"
                    )));
                }
                // orderings of the same measurements share one detector each
                let mut keys = BTreeMap::new();
                for a in children[0].chain() {
                    let key = a.to_string();
                    if keys.contains_key(&key) {
                        return Err(Error::Unsupported(format!(
                            "`{key}` repeats inside a superposed ordering"
                        )));
                    }
                    let slot = self.slot(&key)?;
                    keys.insert(key, slot);
                }
                let plans = children
                    .iter()
                    .map(|c| self.chain(c, Some(&keys)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Step::Orders(plans))
            }
            MeasurementExpr::Seq(..) => Err(Error::AmbiguousStructure(format!("nested sequence `{atom}`"))),
            _ => {
                let key = atom.to_string();
                if let Some(map) = shared {
                    let slot = map.get(&key).ok_or_else(|| {
                        Error::Unsupported("superposed orderings must contain the same measurements".into())
                    })?;
                    Ok(Step::Atom(*slot))
                } else {
                    Ok(Step::Atom(self.slot(&key)?))
                }
            }
        }
    }
}

struct Register {
    sys: usize,
    dims: Vec<usize>,
    strides: Vec<usize>,
    anc_total: usize,
}

impl Register {
    fn new(sys: usize, slots: &[Slot], cap: usize) -> Result<Self> {
        let mut total = sys;
        for s in slots {
            total = total
                .checked_mul(s.dim)
                .filter(|t| *t <= cap)
                .ok_or_else(|| Error::Resource(format!("system ⊗ detector dimension exceeds the cap of {cap}")))?;
        }
        let dims: Vec<usize> = slots.iter().map(|s| s.dim).collect();
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Ok(Self {
            sys,
            anc_total: total / sys,
            dims,
            strides,
        })
    }

    fn len(&self) -> usize {
        self.sys * self.anc_total
    }

    /// Couples the system to the ancilla in `slot`, which must still be
    /// in its ready state `|0>`.
    fn interact(&self, psi: &[Complex64], slot: &Slot, k: usize) -> Result<Vec<Complex64>> {
        let stride = self.strides[k];
        let dk = self.dims[k];
        let mut out = vec![ZERO; psi.len()];
        for (idx, amp) in psi.iter().enumerate() {
            if *amp == ZERO {
                continue;
            }
            let s = idx / self.anc_total;
            let rest = idx % self.anc_total;
            if !(rest / stride).is_multiple_of(dk) {
                return Err(Error::InvalidArgument("a detector was used twice".into()));
            }
            for j in 0..self.sys {
                for m in 0..dk {
                    let v = slot.iso[(j * dk + m, s)];
                    if v != ZERO {
                        out[j * self.anc_total + rest + m * stride] += v * amp;
                    }
                }
            }
        }
        Ok(out)
    }

    /// System vector left after reading every detector on its pointer.
    fn read_out(&self, psi: &[Complex64], slots: &[Slot]) -> Vec<Complex64> {
        let mut phi = vec![ZERO; self.sys];
        for (idx, amp) in psi.iter().enumerate() {
            if *amp == ZERO {
                continue;
            }
            let rest = idx % self.anc_total;
            let mut w = *amp;
            for (k, slot) in slots.iter().enumerate() {
                w *= slot.pointer[(rest / self.strides[k]) % self.dims[k]].conj();
            }
            phi[idx / self.anc_total] += w;
        }
        phi
    }
}

type Trajectories = Vec<(f64, Vec<Complex64>)>;

fn evolve(
    steps: &[Step],
    traj: Trajectories,
    reg: &Register,
    slots: &[Slot],
    policy: Option<&OrderPolicy>,
) -> Result<Trajectories> {
    let mut traj = traj;
    for step in steps {
        traj = match step {
            Step::Atom(k) => traj
                .into_iter()
                .map(|(w, psi)| Ok((w, reg.interact(&psi, &slots[*k], *k)?)))
                .collect::<Result<_>>()?,
            Step::Orders(children) => {
                let policy = policy.ok_or_else(|| Error::MissingPolicy("no order_policy".into()))?;
                orders(children, traj, reg, slots, policy)?
            }
        };
    }
    Ok(traj)
}

fn orders(
    children: &[Vec<Step>],
    traj: Trajectories,
    reg: &Register,
    slots: &[Slot],
    policy: &OrderPolicy,
) -> Result<Trajectories> {
    match policy {
        OrderPolicy::Definite(order) => {
            let ci = children
                .iter()
                .position(|child| {
                    let applied: Vec<&str> = child
                        .iter()
                        .filter_map(|s| match s {
                            Step::Atom(k) => Some(slots[*k].key.as_str()),
                            Step::Orders(_) => None,
                        })
                        .collect();
                    applied.len() == child.len() && applied.iter().eq(order.iter())
                })
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "definite order {order:?} matches none of the written orderings"
                    ))
                })?;
            evolve(&children[ci], traj, reg, slots, Some(policy))
        }
        OrderPolicy::Mixture(lambda) => {
            if children.len() != 2 {
                return Err(Error::Arity("an order mixture takes two orderings".into()));
            }
            let mut out = Vec::new();
            for (child, weight) in children.iter().zip([*lambda, 1.0 - lambda]) {
                if weight == 0.0 {
                    continue;
                }
                let scaled = traj.iter().map(|(w, psi)| (w * weight, psi.clone())).collect();
                out.extend(evolve(child, scaled, reg, slots, Some(policy))?);
            }
            Ok(out)
        }
        OrderPolicy::IndefiniteCoherent(weights) => {
            if children.len() != 2 {
                return Err(Error::Arity(
                    "a coherent order superposition takes two orderings".into(),
                ));
            }
            let half = std::f64::consts::FRAC_1_SQRT_2;
            let mut out = Vec::with_capacity(traj.len());
            for (w, psi) in traj {
                let mut acc = vec![ZERO; reg.len()];
                for (child, c) in children.iter().zip(weights) {
                    let branch = evolve(child, vec![(1.0, psi.clone())], reg, slots, Some(policy))?;
                    let [(bw, bpsi)] = branch.as_slice() else {
                        return Err(Error::Unsupported(
                            "a mixture nested inside a coherent order superposition".into(),
                        ));
                    };
                    let amp = c * bw.sqrt() * half;
                    for (a, b) in acc.iter_mut().zip(bpsi) {
                        *a += amp * b;
                    }
                }
                out.push((w, acc));
            }
            Ok(out)
        }
    }
}

/// `℘(q)` by explicit simulation of system ⊗ detector ancillas.
pub fn brute_force_oracle(q: &Query, sc: &Scenario, models: &BTreeMap<String, DetectorModel>) -> Result<f64> {
    brute_force_oracle_with_cap(q, sc, models, DEFAULT_DIMENSION_CAP)
}

pub fn brute_force_oracle_with_cap(
    q: &Query,
    sc: &Scenario,
    models: &BTreeMap<String, DetectorModel>,
    cap: usize,
) -> Result<f64> {
    let p = raw(&q.expr, sc, models, cap)?;
    clamp_real(p, sc.tol())
}

fn raw(e: &MeasurementExpr, sc: &Scenario, models: &BTreeMap<String, DetectorModel>, cap: usize) -> Result<f64> {
    match e {
        MeasurementExpr::Alt(children) => children.iter().map(|c| raw(c, sc, models, cap)).sum(),
        MeasurementExpr::Label(l) => {
            let f = sc.effect_mat(l)?;
            clamp_probability(sc.preparation().mat().matmul(&f)?.trace()?, sc.tol())
        }
        MeasurementExpr::Seq(..) => {
            let chain = e.chain();
            let MeasurementExpr::Label(final_label) = chain[0] else {
                return Err(Error::AmbiguousStructure(format!(
                    "the final (leftmost) measurement of `{e}` must be a single label"
                )));
            };
            let f = sc.effect_mat(final_label)?;
            let mut planner = Planner {
                sc,
                models,
                slots: Vec::new(),
            };
            let steps = chain[1..]
                .iter()
                .rev()
                .map(|atom| planner.atom(atom, None))
                .collect::<Result<Vec<_>>>()?;
            let slots = planner.slots;
            let reg = Register::new(sc.dim(), &slots, cap)?;
            let r = sc.preparation().mat().sqrt_psd(sc.tol())?;
            let mut traj = Vec::new();
            for c in 0..sc.dim() {
                let col = r.col(c);
                if col.iter().all(|z| z.norm() == 0.0) {
                    continue;
                }
                let mut psi = vec![ZERO; reg.len()];
                for (s, a) in col.into_iter().enumerate() {
                    psi[s * reg.anc_total] = a;
                }
                traj.push((1.0, psi));
            }
            let traj = evolve(&steps, traj, &reg, &slots, sc.order_policy())?;
            let mut total = 0.0;
            for (w, psi) in traj {
                let phi = reg.read_out(&psi, &slots);
                let fphi = f.apply(&phi)?;
                total += w * crate::linalg::inner(&phi, &fphi).re;
            }
            Ok(total)
        }
    }
}
