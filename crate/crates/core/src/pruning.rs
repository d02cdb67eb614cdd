//! Keep/prune masks over the prunable prefix of a parameter vector and
//! global unstructured magnitude pruning.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::models::ModelSpec;

/// One bit per prunable parameter; `true` keeps the weight.
///
/// Serializes as a string of `0`/`1` characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PruningMask {
    bits: Vec<bool>,
}

impl PruningMask {
    /// Nothing pruned.
    pub fn full(prunable_count: usize) -> Self {
        Self {
            bits: vec![true; prunable_count],
        }
    }

    /// Everything pruned.
    pub fn empty(prunable_count: usize) -> Self {
        Self {
            bits: vec![false; prunable_count],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of prunable positions.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_kept(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn prune(&mut self, i: usize) {
        self.bits[i] = false;
    }

    pub(crate) fn set(&mut self, i: usize, keep: bool) {
        self.bits[i] = keep;
    }

    pub fn remaining(&self) -> RemainingWeights {
        remaining_weights(self)
    }

    pub(crate) fn check_against(&self, spec: &ModelSpec) -> Result<()> {
        if self.len() != spec.prunable_count() {
            return Err(Error::Contract(format!(
                "mask covers {} weights, model has {} prunable",
                self.len(),
                spec.prunable_count()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for PruningMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl FromStr for PruningMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(Error::Contract(format!("mask character `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bits)
    }
}

impl Serialize for PruningMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PruningMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Surviving weight count and its share of the prunable total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainingWeights {
    pub count: usize,
    pub prunable_count: usize,
    pub percent: f64,
}

pub fn remaining_weights(mask: &PruningMask) -> RemainingWeights {
    let count = mask.bits.iter().filter(|&&b| b).count();
    let prunable_count = mask.len();
    let percent = if prunable_count == 0 {
        100.0
    } else {
        100.0 * count as f64 / prunable_count as f64
    };
    RemainingWeights {
        count,
        prunable_count,
        percent,
    }
}

/// All prunable weights kept.
pub fn initial_mask(spec: &ModelSpec) -> PruningMask {
    PruningMask::full(spec.prunable_count())
}

/// Sets pruned positions to exactly zero. Parameters past the mask (head,
/// biases) are left alone.
pub fn apply_mask(params: &mut [f64], mask: &PruningMask) -> Result<()> {
    if params.len() < mask.len() {
        return Err(Error::Contract(format!(
            "mask covers {} weights but only {} parameters given",
            mask.len(),
            params.len()
        )));
    }
    for (p, &keep) in params.iter_mut().zip(&mask.bits) {
        if !keep {
            *p = 0.0;
        }
    }
    Ok(())
}

/// Number of weights a round removes: `floor(fraction · surviving)`.
pub fn prune_count(fraction: f64, surviving: usize) -> usize {
    // The epsilon absorbs representation error in fractions like 1 - 0.8.
    ((fraction * surviving as f64) + 1e-9).floor() as usize
}

/// Prunes the `floor(fraction · surviving)` surviving weights of smallest
/// magnitude, across the whole prunable range. Ties go to the lower index.
pub fn magnitude_prune(params: &[f64], mask: &PruningMask, fraction: f64) -> Result<PruningMask> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Contract(format!("prune fraction {fraction} outside [0, 1]")));
    }
    if params.len() < mask.len() {
        return Err(Error::Contract(format!(
            "mask covers {} weights but only {} parameters given",
            mask.len(),
            params.len()
        )));
    }
    let mut survivors: Vec<usize> = (0..mask.len()).filter(|&i| mask.bits[i]).collect();
    let n_prune = prune_count(fraction, survivors.len()).min(survivors.len());
    // stable sort keeps index order among equal magnitudes
    survivors.sort_by(|&a, &b| params[a].abs().total_cmp(&params[b].abs()));
    let mut next = mask.clone();
    for &i in &survivors[..n_prune] {
        next.bits[i] = false;
    }
    Ok(next)
}
