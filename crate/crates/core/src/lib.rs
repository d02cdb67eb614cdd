//! Lottery-ticket experiments on simulated variational quantum classifiers.
//!
//! The crate bundles a dense statevector simulator, adjoint gradients for the
//! layered classifiers and a small classical baseline, Adam training, global
//! magnitude pruning and an evolutionary mask search.
//!
//! ```
//! use lth_core::{count_parameters, ModelSpec};
//!
//! let spec = ModelSpec::mvqc(4, 3, 16, 1.0);
//! assert_eq!(count_parameters(&spec), 198);
//! ```

pub mod data;
pub mod diff;
pub mod error;
pub mod lth;
pub mod models;
pub mod presets;
pub mod pruning;
pub mod statevector;
pub mod training;

pub use data::{BuiltinDataset, Dataset, PreparedData};
pub use diff::{loss_gradient, GradientVector, Sample};
pub use error::{Error, Result};
pub use lth::{EaConfig, Experiment, GenerationRecord, Mode, RunRecord};
pub use models::{count_parameters, init_params, Family, Model, ModelSpec, ParamVector};
pub use presets::{preset, Preset};
pub use pruning::{magnitude_prune, PruningMask, RemainingWeights};
pub use statevector::State;
pub use training::{train, TrainConfig, TrainHistory};
