//! Exact gradients.
//!
//! Circuit parameters are differentiated with adjoint reverse accumulation:
//! after one forward pass the state and a co-state `H|psi>` are walked back
//! through the gate list together, and each rotation contributes
//! `2 Re <lambda| dU |phi>`. The output head and the SNN use the ordinary
//! chain rule. [`finite_difference_oracle`] is the independent check.

use std::ops::Deref;


use crate::error::{Error, Result};
use crate::models::{argmax, softmax, Angle, Circuit, Family, Gate, Model, ModelSpec, Output};
use crate::pruning::PruningMask;
use crate::statevector::{apply_cnot_masks, apply_mat2, gates, Mat2, State};
use crate::training::{bce_with_logits_loss, cross_entropy_loss, sigmoid, PROBABILITY_FLOOR};

/// One labelled sample.
pub type Sample<'a> = (&'a [f64], usize);

/// Gradient aligned index-for-index with a parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GradientVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Gradient of `sum_k weights[k] · <Z_k>` with respect to the circuit's parameters.
pub fn expectation_gradient(circuit: &Circuit, params: &[f64], x: &[f64], weights: &[f64]) -> Result<GradientVector> {
    if weights.len() > circuit.n_qubits() {
        return Err(Error::Contract(format!(
            "{} observable weights on {} wires",
            weights.len(),
            circuit.n_qubits()
        )));
    }
    let state = circuit.run(params, x)?;
    let mut grad = vec![0.0; params.len()];
    adjoint_backward(circuit, params, x, state, weights, 1.0, &mut grad);
    Ok(GradientVector(grad))
}

/// Mean batch loss and its gradient. With a mask, pruned entries are reported as exactly 0.
pub fn batch_loss_gradient(
    model: &Model,
    params: &[f64],
    batch: &[Sample<'_>],
    mask: Option<&PruningMask>,
) -> Result<(f64, GradientVector)> {
    if batch.is_empty() {
        return Err(Error::Contract("empty batch".into()));
    }
    if let Some(mask) = mask {
        mask.check_against(model.spec())?;
    }
    let scale = 1.0 / batch.len() as f64;
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    for &(x, label) in batch {
        loss += sample_loss_gradient(model, params, x, label, scale, &mut grad)?.0 * scale;
    }
    if let Some(mask) = mask {
        for (g, keep) in grad.iter_mut().zip(mask.bits()) {
            if !keep {
                *g = 0.0;
            }
        }
    }
    Ok((loss, GradientVector(grad)))
}

/// Gradient of the mean batch loss for the model described by `spec`.
pub fn loss_gradient(spec: &ModelSpec, params: &[f64], batch: &[Sample<'_>]) -> Result<GradientVector> {
    let model = Model::new(spec.clone())?;
    Ok(batch_loss_gradient(&model, params, batch, None)?.1)
}

/// As [`loss_gradient`], with pruned entries zeroed.
pub fn masked_loss_gradient(
    spec: &ModelSpec,
    params: &[f64],
    mask: &PruningMask,
    batch: &[Sample<'_>],
) -> Result<GradientVector> {
    let model = Model::new(spec.clone())?;
    Ok(batch_loss_gradient(&model, params, batch, Some(mask))?.1)
}

/// Central differences `(f(p + h e_i) - f(p - h e_i)) / 2h` of the mean batch loss.
pub fn finite_difference_oracle(
    spec: &ModelSpec,
    params: &[f64],
    batch: &[Sample<'_>],
    step: f64,
) -> Result<GradientVector> {
    if batch.is_empty() {
        return Err(Error::Contract("empty batch".into()));
    }
    let model = Model::new(spec.clone())?;
    let mean_loss = |p: &[f64]| -> Result<f64> {
        let mut total = 0.0;
        for &(x, label) in batch {
            total += model.loss(p, x, label)?;
        }
        Ok(total / batch.len() as f64)
    };
    central_differences(mean_loss, params, step)
}

/// Central differences of an arbitrary scalar function.
pub fn central_differences<F>(f: F, params: &[f64], step: f64) -> Result<GradientVector>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Contract(format!("finite-difference step {step} must be positive")));
    }
    let mut probe = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let plus = f(&probe)?;
        probe[i] = orig - step;
        let minus = f(&probe)?;
        probe[i] = orig;
        grad.push((plus - minus) / (2.0 * step));
    }
    Ok(GradientVector(grad))
}

/// Loss and predicted class of one sample; accumulates
/// `scale · dloss/dparams` into `grad`.
pub(crate) fn sample_loss_gradient(
    model: &Model,
    params: &[f64],
    x: &[f64],
    label: usize,
    scale: f64,
    grad: &mut [f64],
) -> Result<(f64, usize)> {
    model.check_shapes(params, x)?;
    let spec = model.spec();
    if label >= spec.n_classes {
        return Err(Error::Contract(format!("label {label} with {} classes", spec.n_classes)));
    }
    let (loss, predicted) = match spec.family {
        Family::Snn => {
            let acts = crate::models::snn_forward_pass(spec, params, x);
            let loss = cross_entropy_loss(&acts.probs, label)?;
            let dlogits = softmax_ce_grad(&acts.probs, label);
            crate::models::snn_backward(spec, params, x, &acts, &dlogits, scale, grad);
            (loss, argmax(&acts.probs))
        }
        Family::Mvqc | Family::Bvqc => {
            let circuit = model.circuit().expect("VQC models carry a circuit");
            let state = circuit.run(params, x)?;
            let z = (0..spec.measured_outputs())
                .map(|k| state.expectation_z(k))
                .collect::<Result<Vec<_>>>()?;
            let logits = model.head_logits(params, &z);
            let (loss, dlogits, predicted) = if spec.family == Family::Mvqc {
                let probs = softmax(&logits);
                let ce = cross_entropy_loss(&probs, label)?;
                (ce, softmax_ce_grad(&probs, label), argmax(&probs))
            } else {
                let l = logits[0];
                let class = Output::Logit(l).predicted_class();
                (bce_with_logits_loss(l, label), vec![sigmoid(l) - label as f64], class)
            };
            let head = model.head_offset();
            let mut weights = Vec::with_capacity(z.len());
            for (k, (&dl, &zk)) in dlogits.iter().zip(&z).enumerate() {
                grad[head + 2 * k] += scale * dl * zk;
                grad[head + 2 * k + 1] += scale * dl;
                weights.push(dl * params[head + 2 * k]);
            }
            adjoint_backward(circuit, params, x, state, &weights, scale, grad);
            (loss, predicted)
        }
    };
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("loss {loss} for label {label}")));
    }
    Ok((loss, predicted))
}

/// `d(-ln max(p_y, floor)) / dlogits`; zero once the floor is active.
fn softmax_ce_grad(probs: &[f64], label: usize) -> Vec<f64> {
    if probs[label] < PROBABILITY_FLOOR {
        return vec![0.0; probs.len()];
    }
    probs
        .iter()
        .enumerate()
        .map(|(k, &p)| if k == label { p - 1.0 } else { p })
        .collect()
}

/// Reverse sweep for the observable `H = sum_k weights[k] Z_k`, given the final state.
fn adjoint_backward(
    circuit: &Circuit,
    params: &[f64],
    x: &[f64],
    state: State,
    weights: &[f64],
    scale: f64,
    grad: &mut [f64],
) {
    if weights.iter().all(|&w| w == 0.0) {
        return;
    }
    let mut phi = state;
    let mut lam = phi.clone();
    apply_weighted_z(&mut lam, weights);

    // Gates ahead of the first parameterized one never contribute.
    let first_trainable = circuit
        .gates()
        .iter()
        .position(|g| matches!(g, Gate::Rot { .. } | Gate::Rx { angle: Angle::Param(_), .. }))
        .unwrap_or(circuit.gates().len());

    let gz = gates::half_generator_z();
    let gy = gates::half_generator_y();
    for gate in circuit.gates()[first_trainable..].iter().rev() {
        match *gate {
            Gate::Cnot { control, target } => {
                let c = phi.stride(control);
                let t = phi.stride(target);
                for st in [&mut phi, &mut lam] {
                    let (re, im) = st.planes_mut();
                    apply_cnot_masks(re, c, t);
                    apply_cnot_masks(im, c, t);
                }
            }
            Gate::Rx { wire, angle } => {
                let theta = crate::models::circuit_angle(angle, params, x);
                let m = gates::rx(theta);
                let stride = phi.stride(wire);
                match angle {
                    Angle::Param(i) => {
                        let d = [gates::matmul(&gates::half_generator_x(), &m)];
                        let g = reverse_pass(&mut phi, &mut lam, stride, &m, &d);
                        grad[i] += scale * 2.0 * g[0];
                    }
                    Angle::Feature(_) => {
                        reverse_pass::<0>(&mut phi, &mut lam, stride, &m, &[]);
                    }
                }
            }
            Gate::Rot { wire, first } => {
                let (a, b, c) = (params[first], params[first + 1], params[first + 2]);
                let (rza, ryb, rzc) = (gates::rz(a), gates::ry(b), gates::rz(c));
                let m = gates::matmul(&gates::matmul(&rzc, &ryb), &rza);
                let zy = gates::matmul(&rzc, &ryb);
                let d = [
                    gates::matmul(&zy, &gates::matmul(&gz, &rza)),
                    gates::matmul(&gates::matmul(&rzc, &gy), &gates::matmul(&ryb, &rza)),
                    gates::matmul(&gz, &m),
                ];
                let stride = phi.stride(wire);
                let g = reverse_pass(&mut phi, &mut lam, stride, &m, &d);
                for (j, gj) in g.iter().enumerate() {
                    grad[first + j] += scale * 2.0 * gj;
                }
            }
        }
    }
}

/// Multiplies each amplitude by `sum_k w_k (+1 or -1)` by its wire-`k` bit.
fn apply_weighted_z(state: &mut State, weights: &[f64]) {
    let n_qubits = state.n_qubits();
    let (re, im) = state.planes_mut();
    for (b, (r, i)) in re.iter_mut().zip(im.iter_mut()).enumerate() {
        let mut h = 0.0;
        for (k, &w) in weights.iter().enumerate() {
            if b >> (n_qubits - 1 - k) & 1 == 0 {
                h += w;
            } else {
                h -= w;
            }
        }
        *r *= h;
        *i *= h;
    }
}

const LANES: usize = 4;

/// `sum conj(l_a) * q_b` for the four wire-local pairings `(a, b)`, as
/// `[re, im]` rows in the order 00, 01, 10, 11.
fn overlaps(phi: &State, lam: &State, stride: usize) -> [[f64; 2]; 4] {
    let (pr, pi) = phi.planes();
    let (lr, li) = lam.planes();
    let mut lanes = [[[0.0; LANES]; 2]; 4];
    let mut tail = [[0.0; 2]; 4];
    for base in (0..pr.len()).step_by(2 * stride) {
        let halves = [base, base + stride];
        let mut k = 0;
        while k + LANES <= stride {
            for (slot, (a, b)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
                let (la, qb) = (halves[a] + k, halves[b] + k);
                for j in 0..LANES {
                    lanes[slot][0][j] += lr[la + j] * pr[qb + j] + li[la + j] * pi[qb + j];
                    lanes[slot][1][j] += lr[la + j] * pi[qb + j] - li[la + j] * pr[qb + j];
                }
            }
            k += LANES;
        }
        while k < stride {
            for (slot, (a, b)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
                let (la, qb) = (halves[a] + k, halves[b] + k);
                tail[slot][0] += lr[la] * pr[qb] + li[la] * pi[qb];
                tail[slot][1] += lr[la] * pi[qb] - li[la] * pr[qb];
            }
            k += 1;
        }
    }
    for (t, l) in tail.iter_mut().zip(&lanes) {
        t[0] += l[0].iter().sum::<f64>();
        t[1] += l[1].iter().sum::<f64>();
    }
    tail
}

/// Un-applies `m` from `phi` and `lam` at one wire and returns
/// `Re <lam| D_j |phi_before>` for each derivative matrix, where `lam` is
/// taken before its own un-application.
fn reverse_pass<const N: usize>(phi: &mut State, lam: &mut State, stride: usize, m: &Mat2, derivs: &[Mat2; N]) -> [f64; N] {
    let inv = gates::dagger(m);
    {
        let (re, im) = phi.planes_mut();
        apply_mat2(re, im, stride, &inv);
    }
    let mut acc = [0.0; N];
    if N > 0 {
        let s = overlaps(phi, lam, stride);
        for (slot, d) in acc.iter_mut().zip(derivs) {
            let flat = [d[0][0], d[0][1], d[1][0], d[1][1]];
            *slot = flat.iter().zip(&s).map(|(dab, [sr, si])| dab.re * sr - dab.im * si).sum();
        }
    }
    let (re, im) = lam.planes_mut();
    apply_mat2(re, im, stride, &inv);
    acc
}
