//! Tuned hyperparameters per dataset and model.

use crate::data::BuiltinDataset;
use crate::models::{Family, ModelSpec};
use crate::training::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub dataset: BuiltinDataset,
    pub family: Family,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Circuit depth; zero for the classical model.
    pub n_layers: usize,
    pub data_reuploading: bool,
    pub init_uniform_range: f64,
}

use BuiltinDataset::{Iris, Iris2, Wine, Wine2};
use Family::{Bvqc, Mvqc, Snn};

#[rustfmt::skip]
pub const PRESETS: [Preset; 10] = [
    p(Iris2, Bvqc, 0.0061690543775444456, 0.00011451748647630793, 10, 1.78340734641020670),
    p(Iris2, Mvqc, 0.1404603283295513300, 0.00020043419481312650, 15, 0.34099999999999997),
    p(Iris2, Snn,  0.0189753941329335250, 0.00037958686849631810, 0, 0.0),
    p(Iris,  Mvqc, 0.0276674656133278770, 0.00014188599748059832, 16, 0.99700000000000000),
    p(Iris,  Snn,  0.0412876064499254560, 0.00011458294311477400, 0, 0.0),
    p(Wine2, Bvqc, 0.0341163513021525840, 0.00048832766322303640, 14, 0.76659265358979310),
    p(Wine2, Mvqc, 0.0469360377064666600, 0.00017400041959447874, 9, 0.13840734641020713),
    p(Wine2, Snn,  0.0012576386169755418, 0.00077375502517089950, 0, 0.0),
    p(Wine,  Mvqc, 0.0562921735356738800, 0.00033968499286871637, 16, 0.35300000000000000),
    p(Wine,  Snn,  0.0574452822141239800, 0.00010743993876395757, 0, 0.0),
];

const fn p(
    dataset: BuiltinDataset,
    family: Family,
    learning_rate: f64,
    weight_decay: f64,
    n_layers: usize,
    init_uniform_range: f64,
) -> Preset {
    Preset {
        dataset,
        family,
        learning_rate,
        weight_decay,
        n_layers,
        data_reuploading: false,
        init_uniform_range,
    }
}

pub fn preset(dataset: BuiltinDataset, family: Family) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.dataset == dataset && p.family == family)
}

impl Preset {
    pub fn model_spec(&self, n_features: usize, n_classes: usize) -> ModelSpec {
        match self.family {
            Family::Mvqc => ModelSpec::mvqc(n_features, n_classes, self.n_layers, self.init_uniform_range),
            Family::Bvqc => ModelSpec::bvqc(n_features, self.n_layers, self.init_uniform_range),
            Family::Snn => ModelSpec::snn(n_features, n_classes),
        }
        .with_reuploading(self.data_reuploading)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            ..TrainConfig::default()
        }
    }
}
