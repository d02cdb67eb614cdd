use rayon::prelude::*;

use super::{Experiment, Mode, RunRecord};
use crate::data::PreparedData;
use crate::error::{Error, Result};
use crate::models::{init_params, Model, ModelSpec, ParamVector};
use crate::pruning::{apply_mask, initial_mask, magnitude_prune, PruningMask};
use crate::training::{train, TrainConfig};

/// Share of surviving weights removed per iterative round.
pub const ITERATIVE_PRUNE_FRACTION: f64 = 0.2;

/// The seeded initial weights with the mask applied; the starting point of every round.
pub fn rewound_params(spec: &ModelSpec, mask: &PruningMask) -> Result<ParamVector> {
    let mut params = init_params(spec)?;
    apply_mask(&mut params, mask)?;
    Ok(params)
}

/// `1 - 0.8^k` for `k = 1..=rounds`: one-shot ratios matching the iterative schedule.
pub fn iterative_ratios(rounds: usize) -> Vec<f64> {
    (1..=rounds)
        .map(|k| 1.0 - (1.0 - ITERATIVE_PRUNE_FRACTION).powi(k as i32))
        .collect()
}

struct SeedRun<'a> {
    exp: &'a Experiment,
    model: Model,
    data: PreparedData,
    config: TrainConfig,
    seed: u64,
    mode: Mode,
}

impl<'a> SeedRun<'a> {
    fn new(exp: &'a Experiment, seed: u64, mode: Mode) -> Result<Self> {
        Ok(Self {
            exp,
            model: Model::new(exp.spec_for(seed))?,
            data: exp.data_for(seed)?,
            config: exp.train_config_for(seed),
            seed,
            mode,
        })
    }

    /// Rewind, train and record. Numeric failures end up in the record.
    fn round(&self, round: usize, mask: &PruningMask) -> Result<(RunRecord, Option<ParamVector>)> {
        let params = rewound_params(self.model.spec(), mask)?;
        let mut record = RunRecord {
            dataset: self.exp.dataset.name().to_owned(),
            family: self.model.spec().family,
            mode: self.mode,
            seed: self.seed,
            round,
            parameter_count: self.model.parameter_count(),
            remaining: mask.remaining(),
            mask: mask.clone(),
            history: Default::default(),
            error: None,
        };
        match train(&self.model, params, mask, &self.data, &self.config) {
            Ok((trained, history)) => {
                record.history = history;
                Ok((record, Some(trained)))
            }
            Err(Error::Numeric(msg)) => {
                log::error!("seed {} round {round}: {msg}", self.seed);
                record.error = Some(msg);
                Ok((record, None))
            }
            Err(e) => Err(e),
        }
    }
}

/// Iterative magnitude pruning with rewinding. Per seed, rounds continue
/// until the remaining count is at or below `rw_threshold` or a round
/// prunes nothing.
pub fn run_iterative(exp: &Experiment, seeds: &[u64], rw_threshold: usize) -> Result<Vec<RunRecord>> {
    exp.validate()?;
    if seeds.is_empty() {
        return Err(Error::Contract("no seeds given".into()));
    }
    let per_seed: Vec<Vec<RunRecord>> = seeds
        .par_iter()
        .map(|&seed| iterative_seed(exp, seed, rw_threshold))
        .collect::<Result<_>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

fn iterative_seed(exp: &Experiment, seed: u64, rw_threshold: usize) -> Result<Vec<RunRecord>> {
    let run = SeedRun::new(exp, seed, Mode::WeakIterative)?;
    let mut mask = initial_mask(run.model.spec());
    let mut records = Vec::new();
    for round in 0.. {
        let (record, trained) = run.round(round, &mask)?;
        records.push(record);
        let Some(trained) = trained else { break };
        let before = mask.remaining().count;
        mask = magnitude_prune(&trained, &mask, ITERATIVE_PRUNE_FRACTION)?;
        let after = mask.remaining().count;
        if after <= rw_threshold || after == before {
            break;
        }
    }
    Ok(records)
}

/// One-shot pruning: each ratio prunes the unpruned model's trained weights
/// once, then retrains from the shared initialization.
pub fn run_oneshot(exp: &Experiment, seeds: &[u64], ratios: &[f64]) -> Result<Vec<RunRecord>> {
    exp.validate()?;
    if seeds.is_empty() {
        return Err(Error::Contract("no seeds given".into()));
    }
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::Contract(format!("pruning ratio {r} outside (0, 1)")));
    }
    if ratios.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Contract("pruning ratios must be strictly increasing".into()));
    }
    let per_seed: Vec<Vec<RunRecord>> = seeds
        .par_iter()
        .map(|&seed| oneshot_seed(exp, seed, ratios))
        .collect::<Result<_>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

fn oneshot_seed(exp: &Experiment, seed: u64, ratios: &[f64]) -> Result<Vec<RunRecord>> {
    let run = SeedRun::new(exp, seed, Mode::WeakOneshot)?;
    let full = initial_mask(run.model.spec());
    let (record, trained) = run.round(0, &full)?;
    let mut records = vec![record];
    let Some(trained) = trained else {
        return Ok(records);
    };
    for (k, &ratio) in ratios.iter().enumerate() {
        let mask = magnitude_prune(&trained, &full, ratio)?;
        records.push(run.round(k + 1, &mask)?.0);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pruning::prune_count;

    #[test]
    fn floor_schedule_from_624() {
        let mut rw = 624usize;
        let mut seq = vec![rw];
        while rw > 50 {
            rw -= prune_count(ITERATIVE_PRUNE_FRACTION, rw);
            seq.push(rw);
        }
        assert_eq!(seq, [624, 500, 400, 320, 256, 205, 164, 132, 106, 85, 68, 55, 44]);
    }

    #[test]
    fn oneshot_ratios_track_iterative_counts() {
        let n = 624usize;
        let mut iterative = n;
        for ratio in iterative_ratios(12) {
            iterative -= prune_count(ITERATIVE_PRUNE_FRACTION, iterative);
            let oneshot = n - prune_count(ratio, n);
            assert!(oneshot.abs_diff(iterative) <= 2, "{ratio}: {oneshot} vs {iterative}");
        }
    }

    #[test]
    fn rewind_is_masked_init() {
        let spec = ModelSpec::mvqc(4, 3, 2, 1.0).with_seed(9);
        let init = init_params(&spec).unwrap();
        let mut mask = initial_mask(&spec);
        for i in [0, 5, 17] {
            mask.prune(i);
        }
        let p = rewound_params(&spec, &mask).unwrap();
        for i in 0..p.len() {
            let expected = if i < mask.len() && !mask.is_kept(i) { 0.0 } else { init[i] };
            assert_eq!(p[i], expected);
        }
    }
}
