use super::{softmax, ModelSpec};

pub(crate) struct Activations {
    pub hidden_pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub probs: Vec<f64>,
}

struct Offsets {
    w1: usize,
    w2: usize,
    b1: usize,
    b2: usize,
}

fn offsets(spec: &ModelSpec) -> Offsets {
    let (d, h, c) = (spec.n_features, spec.hidden_width, spec.n_classes);
    Offsets {
        w1: 0,
        w2: h * d,
        b1: h * d + c * h,
        b2: h * d + c * h + h,
    }
}

/// `softmax(W2 · relu(W1 · x + b1) + b2)`
pub(crate) fn forward(spec: &ModelSpec, params: &[f64], x: &[f64]) -> Activations {
    let (d, h, c) = (spec.n_features, spec.hidden_width, spec.n_classes);
    let o = offsets(spec);
    let hidden_pre: Vec<f64> = (0..h)
        .map(|j| {
            let row = &params[o.w1 + j * d..o.w1 + (j + 1) * d];
            row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + params[o.b1 + j]
        })
        .collect();
    let hidden: Vec<f64> = hidden_pre.iter().map(|&v| v.max(0.0)).collect();
    let logits: Vec<f64> = (0..c)
        .map(|k| {
            let row = &params[o.w2 + k * h..o.w2 + (k + 1) * h];
            row.iter().zip(&hidden).map(|(w, a)| w * a).sum::<f64>() + params[o.b2 + k]
        })
        .collect();
    Activations {
        hidden_pre,
        hidden,
        probs: softmax(&logits),
    }
}

/// Accumulates `scale · dL/dparams` into `grad` given `dL/dlogits`.
/// The ReLU derivative at exactly zero is taken as zero.
pub(crate) fn backward(
    spec: &ModelSpec,
    params: &[f64],
    x: &[f64],
    acts: &Activations,
    dlogits: &[f64],
    scale: f64,
    grad: &mut [f64],
) {
    let (d, h, c) = (spec.n_features, spec.hidden_width, spec.n_classes);
    let o = offsets(spec);
    let mut dhidden = vec![0.0; h];
    for k in 0..c {
        let g = dlogits[k] * scale;
        grad[o.b2 + k] += g;
        for j in 0..h {
            grad[o.w2 + k * h + j] += g * acts.hidden[j];
            dhidden[j] += g * params[o.w2 + k * h + j];
        }
    }
    for j in 0..h {
        if acts.hidden_pre[j] <= 0.0 {
            continue;
        }
        let g = dhidden[j];
        grad[o.b1 + j] += g;
        for (i, xi) in x.iter().enumerate().take(d) {
            grad[o.w1 + j * d + i] += g * xi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_hand_evaluation() {
        let mut spec = ModelSpec::snn(2, 2);
        spec.hidden_width = 2;
        // W1 = [[1, -1], [0.5, 2]], W2 = [[1, 2], [-1, 0.5]], b1 = [0.1, -3], b2 = [0, 0.2]
        let params = [1.0, -1.0, 0.5, 2.0, 1.0, 2.0, -1.0, 0.5, 0.1, -3.0, 0.0, 0.2];
        let x = [2.0, 1.0];
        let acts = forward(&spec, &params, &x);
        // h_pre = [2 - 1 + 0.1, 1 + 2 - 3] = [1.1, 0]
        assert!((acts.hidden_pre[0] - 1.1).abs() < 1e-15);
        assert_eq!(acts.hidden_pre[1], 0.0);
        // logits = [1.1, -1.1 + 0.2]
        let (l0, l1) = (1.1f64, -0.9f64);
        let z = l0.exp() + l1.exp();
        assert!((acts.probs[0] - l0.exp() / z).abs() < 1e-15);
        assert!((acts.probs[1] - l1.exp() / z).abs() < 1e-15);
    }
}
