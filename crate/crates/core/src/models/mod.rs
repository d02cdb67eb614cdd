//! The three classifiers: a multi-class VQC, a binary VQC and a one-hidden-layer
//! network baseline, all evaluated from a flat [`ParamVector`].
//!
//! # Parameter layout
//!
//! VQC: `n_layers · n_qubits` rotation triples `(a, b, c)`, layer-major and
//! wire-minor, followed by one `(scale, bias)` pair per measured wire. The
//! measured wires are `0..n_classes` for the multi-class circuit and wire 0 for
//! the binary one. Logits are `scale_k · <Z_k> + bias_k`.
//!
//! SNN: `W1` (`hidden × n_features`, row-major), `W2` (`n_classes × hidden`,
//! row-major), then `b1` and `b2`.
//!
//! In both layouts the prunable weights form a prefix of the vector: the
//! rotation angles for a VQC and the two weight matrices for the SNN.

mod circuit;
mod snn;

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use circuit::{Angle, Circuit, Gate};

use crate::error::{Error, Result};
use crate::statevector::MAX_QUBITS;
use crate::training::{bce_with_logits_loss, cross_entropy_loss};

/// Width of the SNN hidden layer.
pub const SNN_HIDDEN_WIDTH: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Mvqc,
    Bvqc,
    Snn,
}

impl Family {
    pub fn is_vqc(self) -> bool {
        !matches!(self, Family::Snn)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Mvqc => "mvqc",
            Family::Bvqc => "bvqc",
            Family::Snn => "snn",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mvqc" => Ok(Family::Mvqc),
            "bvqc" => Ok(Family::Bvqc),
            "snn" => Ok(Family::Snn),
            other => Err(Error::Config(format!("unknown model family `{other}`"))),
        }
    }
}

/// Architecture and initialization settings; enough to rebuild a model from its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub n_features: usize,
    pub n_classes: usize,
    /// Variational layers (VQC only).
    pub n_layers: usize,
    /// Re-apply the angle embedding before every layer (VQC only).
    pub data_reuploading: bool,
    /// Rotation angles are drawn from `[-r, r]` (VQC only).
    pub init_uniform_range: f64,
    /// SNN only.
    pub hidden_width: usize,
    pub seed: u64,
}

impl ModelSpec {
    pub fn mvqc(n_features: usize, n_classes: usize, n_layers: usize, init_uniform_range: f64) -> Self {
        Self {
            family: Family::Mvqc,
            n_features,
            n_classes,
            n_layers,
            data_reuploading: false,
            init_uniform_range,
            hidden_width: SNN_HIDDEN_WIDTH,
            seed: 0,
        }
    }

    pub fn bvqc(n_features: usize, n_layers: usize, init_uniform_range: f64) -> Self {
        Self {
            family: Family::Bvqc,
            n_classes: 2,
            ..Self::mvqc(n_features, 2, n_layers, init_uniform_range)
        }
    }

    pub fn snn(n_features: usize, n_classes: usize) -> Self {
        Self {
            family: Family::Snn,
            n_layers: 0,
            init_uniform_range: 0.0,
            ..Self::mvqc(n_features, n_classes, 0, 0.0)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_reuploading(mut self, on: bool) -> Self {
        self.data_reuploading = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_features == 0 {
            return fail("n_features must be positive".into());
        }
        if self.n_classes < 2 {
            return fail(format!("{} classes, need at least 2", self.n_classes));
        }
        match self.family {
            Family::Mvqc | Family::Bvqc => {
                if self.family == Family::Bvqc && self.n_classes != 2 {
                    return fail(format!("BVQC is binary, got {} classes", self.n_classes));
                }
                if self.family == Family::Mvqc && self.n_classes > self.n_features {
                    return fail(format!(
                        "MVQC measures one wire per class: {} classes on {} wires",
                        self.n_classes, self.n_features
                    ));
                }
                if self.n_features > MAX_QUBITS {
                    return Err(Error::Resource(format!(
                        "{} features need {} qubits, limit is {MAX_QUBITS}",
                        self.n_features, self.n_features
                    )));
                }
                if self.n_layers == 0 {
                    return fail("a VQC needs at least one layer".into());
                }
                if !(self.init_uniform_range.is_finite() && self.init_uniform_range >= 0.0) {
                    return fail(format!("init range {} must be finite and >= 0", self.init_uniform_range));
                }
            }
            Family::Snn => {
                if self.hidden_width == 0 {
                    return fail("hidden_width must be positive".into());
                }
            }
        }
        Ok(())
    }

    /// Qubits in the register; zero for the SNN.
    pub fn n_qubits(&self) -> usize {
        if self.family.is_vqc() {
            self.n_features
        } else {
            0
        }
    }

    /// Wires whose `<Z>` feeds the output head.
    pub fn measured_outputs(&self) -> usize {
        match self.family {
            Family::Mvqc => self.n_classes,
            Family::Bvqc => 1,
            Family::Snn => 0,
        }
    }

    /// Parameters subject to pruning; they occupy the front of the vector.
    pub fn prunable_count(&self) -> usize {
        match self.family {
            Family::Mvqc | Family::Bvqc => 3 * self.n_layers * self.n_features,
            Family::Snn => self.hidden_width * (self.n_features + self.n_classes),
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self.family {
            Family::Mvqc | Family::Bvqc => self.prunable_count() + 2 * self.measured_outputs(),
            Family::Snn => self.prunable_count() + self.hidden_width + self.n_classes,
        }
    }
}

/// Total trainable parameters of a model.
pub fn count_parameters(spec: &ModelSpec) -> usize {
    spec.parameter_count()
}

/// Flat trainable parameters, see the module docs for the layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Seeded initialization.
///
/// Rotation angles are uniform on `[-r, r]` and every output head starts at
/// scale 1, bias 0. SNN weights and biases are uniform on
/// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
pub fn init_params(spec: &ModelSpec) -> Result<ParamVector> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut uniform = |bound: f64| bound * (2.0 * rng.gen::<f64>() - 1.0) + 0.0;
    let mut values = Vec::with_capacity(spec.parameter_count());
    match spec.family {
        Family::Mvqc | Family::Bvqc => {
            let r = spec.init_uniform_range;
            values.extend((0..spec.prunable_count()).map(|_| uniform(r)));
            for _ in 0..spec.measured_outputs() {
                values.extend([1.0, 0.0]);
            }
        }
        Family::Snn => {
            let (d, h, c) = (spec.n_features, spec.hidden_width, spec.n_classes);
            let in_bound = 1.0 / (d as f64).sqrt();
            let hidden_bound = 1.0 / (h as f64).sqrt();
            values.extend((0..h * d).map(|_| uniform(in_bound)));
            values.extend((0..c * h).map(|_| uniform(hidden_bound)));
            values.extend((0..h).map(|_| uniform(in_bound)));
            values.extend((0..c).map(|_| uniform(hidden_bound)));
        }
    }
    debug_assert_eq!(values.len(), spec.parameter_count());
    Ok(ParamVector(values))
}

/// Raw model output for one sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    /// Class probabilities (MVQC, SNN).
    Probabilities(Vec<f64>),
    /// Binary logit (BVQC); class 1 iff `sigmoid(logit) > 0.5`.
    Logit(f64),
}

impl Output {
    /// Predicted class; argmax ties go to the lowest index and a logit of
    /// exactly 0 maps to class 0.
    pub fn predicted_class(&self) -> usize {
        match self {
            Output::Probabilities(p) => argmax(p),
            Output::Logit(l) => usize::from(*l > 0.0),
        }
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// A validated spec with its circuit prebuilt.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    circuit: Option<Circuit>,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        let circuit = spec
            .family
            .is_vqc()
            .then(|| Circuit::layered(spec.n_features, spec.n_layers, spec.data_reuploading));
        Ok(Self { spec, circuit })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn circuit(&self) -> Option<&Circuit> {
        self.circuit.as_ref()
    }

    pub fn parameter_count(&self) -> usize {
        self.spec.parameter_count()
    }

    pub(crate) fn check_shapes(&self, params: &[f64], x: &[f64]) -> Result<()> {
        if params.len() != self.spec.parameter_count() {
            return Err(Error::Contract(format!(
                "{} parameters, model expects {}",
                params.len(),
                self.spec.parameter_count()
            )));
        }
        if x.len() != self.spec.n_features {
            return Err(Error::Contract(format!(
                "{} features, model expects {}",
                x.len(),
                self.spec.n_features
            )));
        }
        Ok(())
    }

    pub(crate) fn head_offset(&self) -> usize {
        self.spec.prunable_count()
    }

    /// `<Z>` of every measured wire.
    pub fn measured_expectations(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let circuit = self
            .circuit
            .as_ref()
            .ok_or_else(|| Error::Contract("the SNN has no circuit".into()))?;
        self.check_shapes(params, x)?;
        let state = circuit.run(params, x)?;
        (0..self.spec.measured_outputs())
            .map(|k| state.expectation_z(k))
            .collect()
    }

    /// Affine head applied to measured expectations.
    pub(crate) fn head_logits(&self, params: &[f64], z: &[f64]) -> Vec<f64> {
        let head = &params[self.head_offset()..];
        z.iter()
            .enumerate()
            .map(|(k, &zk)| head[2 * k] * zk + head[2 * k + 1])
            .collect()
    }

    pub fn forward(&self, params: &[f64], x: &[f64]) -> Result<Output> {
        self.check_shapes(params, x)?;
        match self.spec.family {
            Family::Mvqc => {
                let z = self.measured_expectations(params, x)?;
                Ok(Output::Probabilities(softmax(&self.head_logits(params, &z))))
            }
            Family::Bvqc => {
                let z = self.measured_expectations(params, x)?;
                Ok(Output::Logit(self.head_logits(params, &z)[0]))
            }
            Family::Snn => Ok(Output::Probabilities(snn::forward(&self.spec, params, x).probs)),
        }
    }

    pub fn predict(&self, params: &[f64], x: &[f64]) -> Result<usize> {
        Ok(self.forward(params, x)?.predicted_class())
    }

    /// Per-sample loss: cross-entropy for MVQC/SNN, BCE-with-logits for BVQC.
    pub fn loss(&self, params: &[f64], x: &[f64], label: usize) -> Result<f64> {
        match self.forward(params, x)? {
            Output::Probabilities(p) => cross_entropy_loss(&p, label),
            Output::Logit(l) => {
                if label > 1 {
                    return Err(Error::Contract(format!("binary label {label}")));
                }
                Ok(bce_with_logits_loss(l, label))
            }
        }
    }
}

/// Class probabilities of the multi-class circuit.
pub fn mvqc_forward(spec: &ModelSpec, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    expect_family(spec, Family::Mvqc)?;
    match Model::new(spec.clone())?.forward(params, x)? {
        Output::Probabilities(p) => Ok(p),
        Output::Logit(_) => unreachable!("MVQC yields probabilities"),
    }
}

/// Logit of the binary circuit.
pub fn bvqc_forward(spec: &ModelSpec, params: &[f64], x: &[f64]) -> Result<f64> {
    expect_family(spec, Family::Bvqc)?;
    match Model::new(spec.clone())?.forward(params, x)? {
        Output::Logit(l) => Ok(l),
        Output::Probabilities(_) => unreachable!("BVQC yields a logit"),
    }
}

/// Class probabilities of the classical baseline.
pub fn snn_forward(spec: &ModelSpec, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    expect_family(spec, Family::Snn)?;
    match Model::new(spec.clone())?.forward(params, x)? {
        Output::Probabilities(p) => Ok(p),
        Output::Logit(_) => unreachable!("SNN yields probabilities"),
    }
}

fn expect_family(spec: &ModelSpec, family: Family) -> Result<()> {
    if spec.family != family {
        return Err(Error::Contract(format!("expected a {family} spec, got {}", spec.family)));
    }
    Ok(())
}

pub(crate) use circuit::resolve as circuit_angle;
pub(crate) use snn::{backward as snn_backward, forward as snn_forward_pass};
