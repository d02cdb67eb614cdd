//! Lottery-ticket experiment drivers.
//!
//! * [`run_iterative`]: train, prune 20% of the surviving weights by
//!   magnitude, rewind the survivors to their initial values, repeat.
//! * [`run_oneshot`]: train once unpruned, then derive one mask per pruning
//!   ratio from those trained weights and retrain each from the same init.
//! * [`run_ea`]: evolve masks over frozen, untrained initial weights.

mod ea;
mod ticket;
mod weak;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use ea::{crossover, migrate, mutate, phase_targets, run_ea, EaConfig, GenerationRecord, Individual};
pub use ticket::{detect_winning_ticket, level_summaries, winning_ticket, LevelSummary, TicketSummary};
pub use weak::{iterative_ratios, rewound_params, run_iterative, run_oneshot, ITERATIVE_PRUNE_FRACTION};

use crate::data::{Dataset, PreparedData, DEFAULT_TRAIN_FRACTION, EMBEDDING_RANGE};
use crate::error::{Error, Result};
use crate::models::{Family, ModelSpec};
use crate::pruning::{PruningMask, RemainingWeights};
use crate::training::{TrainConfig, TrainHistory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    WeakIterative,
    WeakOneshot,
    StrongEa,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::WeakIterative => "weak-iterative",
            Mode::WeakOneshot => "weak-oneshot",
            Mode::StrongEa => "strong-ea",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Mode::WeakIterative, Mode::WeakOneshot, Mode::StrongEa]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}`")))
    }
}

/// Everything a driver needs besides the seed list. The model and training
/// seeds are overwritten per run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub dataset: Dataset,
    pub spec: ModelSpec,
    pub train: TrainConfig,
    pub train_fraction: f64,
    pub feature_range: (f64, f64),
}

impl Experiment {
    pub fn new(dataset: Dataset, spec: ModelSpec, train: TrainConfig) -> Self {
        Self {
            dataset,
            spec,
            train,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            feature_range: EMBEDDING_RANGE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.train.validate()?;
        if self.spec.n_features != self.dataset.n_features() || self.spec.n_classes != self.dataset.class_count() {
            return Err(Error::Config(format!(
                "{} model with {} features / {} classes cannot fit `{}` ({} features / {} classes)",
                self.spec.family,
                self.spec.n_features,
                self.spec.n_classes,
                self.dataset.name(),
                self.dataset.n_features(),
                self.dataset.class_count()
            )));
        }
        Ok(())
    }

    pub fn spec_for(&self, seed: u64) -> ModelSpec {
        self.spec.clone().with_seed(seed)
    }

    pub fn train_config_for(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.train.clone()
        }
    }

    /// Split and scaling for one seed.
    pub fn data_for(&self, seed: u64) -> Result<PreparedData> {
        PreparedData::new(&self.dataset, self.train_fraction, seed, self.feature_range)
    }
}

/// One trained model at one remaining-weight level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub family: Family,
    pub mode: Mode,
    pub seed: u64,
    /// Pruning round; 0 is the unpruned model.
    pub round: usize,
    pub parameter_count: usize,
    pub remaining: RemainingWeights,
    pub mask: PruningMask,
    pub history: TrainHistory,
    /// Set when training failed numerically; the history is then empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn is_unpruned(&self) -> bool {
        self.remaining.count == self.remaining.prunable_count
    }
}
