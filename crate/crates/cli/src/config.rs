//! Experiment configuration: presets, config files and flag overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use lth_core::data::{load_csv, CsvSchema, DEFAULT_TRAIN_FRACTION, EMBEDDING_RANGE};
use lth_core::lth::{iterative_ratios, EaConfig, Experiment, Mode};
use lth_core::{preset, BuiltinDataset, Dataset, Family, ModelSpec, TrainConfig};
use serde::{Deserialize, Serialize};

/// A bundled dataset by name, or a CSV file with a header and the label last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetRef {
    Builtin(BuiltinDataset),
    Path(PathBuf),
}

impl FromStr for DatasetRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Ok(b) = s.parse::<BuiltinDataset>() {
            return Ok(Self::Builtin(b));
        }
        let path = PathBuf::from(s);
        if path.is_file() {
            Ok(Self::Path(path))
        } else {
            Err(format!("unknown dataset `{s}`: not one of iris, iris2, wine, wine2 and not a file"))
        }
    }
}

impl fmt::Display for DatasetRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Builtin(b) => write!(f, "{b}"),
            Self::Path(p) => write!(f, "{}", p.display()),
        }
    }
}

impl DatasetRef {
    pub fn load(&self) -> lth_core::Result<Dataset> {
        match self {
            Self::Builtin(b) => Ok(b.load()),
            Self::Path(p) => load_csv(p, &CsvSchema::default()),
        }
    }
}

/// Circuit shape knobs; ignored for the classical model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitConfig {
    pub n_layers: usize,
    pub data_reuploading: bool,
    pub init_uniform_range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetRef,
    pub model: Family,
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    pub circuit: CircuitConfig,
    pub train_fraction: f64,
    /// Iterative pruning stops once at most this many weights survive.
    pub rw_threshold: usize,
    /// One-shot pruning ratios.
    pub ratios: Vec<f64>,
    pub ea: EaConfig,
}

impl ExperimentConfig {
    /// Tuned values where a preset exists, generic defaults otherwise.
    pub fn defaults(dataset: DatasetRef, model: Family, mode: Mode) -> Self {
        let p = match &dataset {
            DatasetRef::Builtin(b) => preset(*b, model),
            DatasetRef::Path(_) => None,
        };
        let (train, circuit) = match p {
            Some(p) => (
                p.train_config(),
                CircuitConfig {
                    n_layers: p.n_layers.max(1),
                    data_reuploading: p.data_reuploading,
                    init_uniform_range: if model.is_vqc() { p.init_uniform_range } else { 1.0 },
                },
            ),
            None => (
                TrainConfig::default(),
                CircuitConfig {
                    n_layers: 8,
                    data_reuploading: false,
                    init_uniform_range: std::f64::consts::PI,
                },
            ),
        };
        Self {
            dataset,
            model,
            mode,
            seeds: (0..10).collect(),
            train,
            circuit,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            rw_threshold: 0,
            ratios: iterative_ratios(12),
            ea: EaConfig::default(),
        }
    }

    pub fn model_spec(&self, data: &Dataset) -> ModelSpec {
        let c = &self.circuit;
        match self.model {
            Family::Mvqc => ModelSpec::mvqc(data.n_features(), data.class_count(), c.n_layers, c.init_uniform_range),
            Family::Bvqc => ModelSpec::bvqc(data.n_features(), c.n_layers, c.init_uniform_range),
            Family::Snn => ModelSpec::snn(data.n_features(), data.class_count()),
        }
        .with_reuploading(c.data_reuploading)
    }

    /// Loads the dataset and checks every knob.
    pub fn experiment(&self) -> lth_core::Result<Experiment> {
        if self.seeds.is_empty() {
            return Err(lth_core::Error::Config("empty seed list".into()));
        }
        let data = self.dataset.load()?;
        let spec = self.model_spec(&data);
        let mut exp = Experiment::new(data, spec, self.train.clone());
        exp.train_fraction = self.train_fraction;
        exp.feature_range = EMBEDDING_RANGE;
        exp.validate()?;
        if self.mode == Mode::StrongEa {
            self.ea.validate()?;
        }
        Ok(exp)
    }
}

/// Parses `0-9`, `1,4,7` or a mix such as `0-2,8`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || format!("bad seed list entry `{part}`");
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if b < a {
                    return Err(bad());
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    if seeds.is_empty() {
        return Err("empty seed list".into());
    }
    Ok(seeds)
}

/// Comma-separated reals.
pub fn parse_ratios(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().map_err(|_| format!("bad ratio `{p}`")))
        .collect()
}
