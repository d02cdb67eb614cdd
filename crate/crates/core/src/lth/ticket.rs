use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RunRecord;
use crate::error::{Error, Result};

/// Seed-averaged result at one remaining-weight count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub remaining_count: usize,
    pub prunable_count: usize,
    pub remaining_percent: f64,
    /// Mean over seeds of the best validation accuracy.
    pub mean_best_val: f64,
    pub n_seeds: usize,
}

impl LevelSummary {
    pub fn is_unpruned(&self) -> bool {
        self.remaining_count == self.prunable_count
    }
}

/// Groups records by remaining count, most weights first. Records that
/// failed to train are left out.
pub fn level_summaries(records: &[RunRecord]) -> Vec<LevelSummary> {
    let mut groups: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.error.is_none()) {
        groups
            .entry((r.remaining.count, r.remaining.prunable_count))
            .or_default()
            .push(r.history.best_val_accuracy);
    }
    groups
        .into_iter()
        .rev()
        .map(|((remaining_count, prunable_count), accs)| LevelSummary {
            remaining_count,
            prunable_count,
            remaining_percent: 100.0 * remaining_count as f64 / prunable_count.max(1) as f64,
            mean_best_val: accs.iter().sum::<f64>() / accs.len() as f64,
            n_seeds: accs.len(),
        })
        .collect()
}

/// Smallest remaining percentage whose mean accuracy reaches `baseline`.
pub fn detect_winning_ticket(levels: &[LevelSummary], baseline: f64) -> Option<f64> {
    levels
        .iter()
        .filter(|l| l.mean_best_val >= baseline - 1e-12)
        .map(|l| l.remaining_percent)
        .min_by(f64::total_cmp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TicketSummary {
    pub baseline_accuracy: f64,
    /// `None` when every pruned level falls short of the baseline and there
    /// is no unpruned level to fall back to; in practice the unpruned level
    /// always qualifies.
    pub winning_percent: Option<f64>,
    pub levels: Vec<LevelSummary>,
}

impl TicketSummary {
    /// The winning percentage, or `None` if only the unpruned model qualifies.
    pub fn pruned_winner(&self) -> Option<f64> {
        self.winning_percent.filter(|p| *p < 100.0 - 1e-9)
    }
}

/// Winning ticket of one (dataset, model) group.
pub fn winning_ticket(records: &[RunRecord]) -> Result<TicketSummary> {
    let levels = level_summaries(records);
    let baseline = levels
        .iter()
        .find(|l| l.is_unpruned())
        .ok_or_else(|| Error::Contract("no unpruned records to compare against".into()))?
        .mean_best_val;
    Ok(TicketSummary {
        baseline_accuracy: baseline,
        winning_percent: detect_winning_ticket(&levels, baseline),
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lth::Mode;
    use crate::models::Family;
    use crate::pruning::PruningMask;
    use crate::training::TrainHistory;

    fn record(seed: u64, kept: usize, acc: f64) -> RunRecord {
        let mask = PruningMask::from_bits((0..100).map(|i| i < kept).collect());
        RunRecord {
            dataset: "iris2".into(),
            family: Family::Mvqc,
            mode: Mode::WeakIterative,
            seed,
            round: 0,
            parameter_count: 104,
            remaining: mask.remaining(),
            mask,
            history: TrainHistory {
                best_val_accuracy: acc,
                ..Default::default()
            },
            error: None,
        }
    }

    #[test]
    fn synthetic_levels() {
        let recs = [record(0, 100, 0.9), record(0, 50, 0.9), record(0, 25, 0.8)];
        let t = winning_ticket(&recs).unwrap();
        assert_eq!(t.winning_percent, Some(50.0));
        assert_eq!(t.pruned_winner(), Some(50.0));
        assert_eq!(t.levels.len(), 3);
    }

    #[test]
    fn single_unpruned_record() {
        let t = winning_ticket(&[record(3, 100, 0.6)]).unwrap();
        assert_eq!(t.winning_percent, Some(100.0));
        assert_eq!(t.pruned_winner(), None);
    }

    #[test]
    fn all_below_baseline() {
        let levels = level_summaries(&[record(0, 50, 0.5), record(0, 25, 0.4)]);
        assert_eq!(detect_winning_ticket(&levels, 0.9), None);
        assert!(winning_ticket(&[record(0, 50, 0.5)]).is_err());
        assert!(winning_ticket(&[]).is_err());
    }

    #[test]
    fn averages_over_seeds_and_skips_errors() {
        let mut failed = record(2, 50, 1.0);
        failed.error = Some("nan".into());
        let recs = [record(0, 100, 0.8), record(1, 100, 1.0), record(0, 50, 0.9), record(1, 50, 0.9), failed];
        let t = winning_ticket(&recs).unwrap();
        assert!((t.baseline_accuracy - 0.9).abs() < 1e-15);
        assert_eq!(t.levels[1].n_seeds, 2);
        assert_eq!(t.winning_percent, Some(50.0));
    }
}
