//! Tables derived from records: per-run summaries, winning tickets and plot data.

use std::collections::BTreeMap;
use std::io::Write;

use anyhow::{bail, Result};
use lth_core::lth::{winning_ticket, TicketSummary};
use lth_core::{GenerationRecord, RunRecord};

use crate::records::RecordLine;

pub const WEAK_SUMMARY_HEADER: [&str; 12] = [
    "dataset",
    "model",
    "mode",
    "seed",
    "round",
    "remaining_count",
    "prunable_count",
    "remaining_percent",
    "best_val_accuracy",
    "final_train_accuracy",
    "final_val_accuracy",
    "error",
];

pub const EA_SUMMARY_HEADER: [&str; 9] = [
    "dataset",
    "model",
    "seed",
    "generation",
    "best_accuracy",
    "mean_accuracy",
    "remaining_count",
    "prunable_count",
    "remaining_percent",
];

fn opt(v: Option<&f64>) -> String {
    v.map(f64::to_string).unwrap_or_default()
}

/// One row per record, in input order.
pub fn write_run_summary<W: Write>(out: W, lines: &[RecordLine]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match lines.first() {
        Some(RecordLine::Ea(_)) => w.write_record(EA_SUMMARY_HEADER)?,
        _ => w.write_record(WEAK_SUMMARY_HEADER)?,
    }
    for line in lines {
        match line {
            RecordLine::Weak(r) => w.write_record([
                r.dataset.clone(),
                r.family.to_string(),
                r.mode.to_string(),
                r.seed.to_string(),
                r.round.to_string(),
                r.remaining.count.to_string(),
                r.remaining.prunable_count.to_string(),
                r.remaining.percent.to_string(),
                if r.error.is_some() { String::new() } else { r.history.best_val_accuracy.to_string() },
                opt(r.history.train_accuracy.last()),
                opt(r.history.val_accuracy.last()),
                r.error.clone().unwrap_or_default(),
            ])?,
            RecordLine::Ea(g) => w.write_record([
                g.dataset.clone(),
                g.family.to_string(),
                g.seed.to_string(),
                g.generation.to_string(),
                g.best_fitness.to_string(),
                g.mean_fitness.to_string(),
                g.best_remaining.count.to_string(),
                g.best_remaining.prunable_count.to_string(),
                g.best_remaining.percent.to_string(),
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Ticket summary per (dataset, model, mode), keyed in sorted order.
pub fn tickets(lines: &[RecordLine]) -> Result<Vec<((String, String, String), TicketSummary)>> {
    let mut groups: BTreeMap<(String, String, String), Vec<RunRecord>> = BTreeMap::new();
    let mut skipped = 0;
    for line in lines {
        match line {
            RecordLine::Weak(r) => groups
                .entry((r.dataset.clone(), r.family.to_string(), r.mode.to_string()))
                .or_default()
                .push(r.clone()),
            RecordLine::Ea(_) => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("ignoring {skipped} evolutionary records; tickets need trained levels");
    }
    if groups.is_empty() {
        bail!(lth_core::Error::Contract("no pruning records to summarize".into()));
    }
    groups
        .into_iter()
        .map(|(key, recs)| {
            let t = winning_ticket(&recs)
                .map_err(|e| anyhow::anyhow!("{} {} {}: {e}", key.0, key.1, key.2))?;
            Ok((key, t))
        })
        .collect()
}

pub const TICKET_HEADER: [&str; 8] = [
    "dataset",
    "model",
    "mode",
    "seeds",
    "levels",
    "unpruned_accuracy",
    "winning_remaining_percent",
    "winning_accuracy",
];

pub fn write_tickets<W: Write>(out: W, tickets: &[((String, String, String), TicketSummary)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TICKET_HEADER)?;
    for ((dataset, model, mode), t) in tickets {
        let unpruned = t.levels.iter().find(|l| l.is_unpruned());
        let winner = t
            .winning_percent
            .and_then(|p| t.levels.iter().find(|l| l.remaining_percent == p));
        w.write_record([
            dataset.clone(),
            model.clone(),
            mode.clone(),
            unpruned.map(|l| l.n_seeds).unwrap_or(0).to_string(),
            t.levels.len().to_string(),
            t.baseline_accuracy.to_string(),
            opt(t.winning_percent.as_ref()),
            opt(winner.map(|l| &l.mean_best_val)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    WeakCurve,
    EaTrace,
}

pub const WEAK_CURVE_HEADER: [&str; 9] = [
    "dataset",
    "model",
    "mode",
    "level",
    "seed",
    "epoch",
    "split",
    "accuracy",
    "remaining_percent",
];

pub const EA_TRACE_HEADER: [&str; 8] = [
    "dataset",
    "model",
    "seed",
    "generation",
    "best_accuracy",
    "mean_accuracy",
    "remaining_count",
    "remaining_percent",
];

/// Long-format table for plotting. All records must match `kind`.
pub fn write_plot_data<W: Write>(out: W, lines: &[RecordLine], kind: PlotKind) -> Result<()> {
    let weak: Vec<&RunRecord> = lines
        .iter()
        .filter_map(|l| match l {
            RecordLine::Weak(r) => Some(r),
            RecordLine::Ea(_) => None,
        })
        .collect();
    let ea: Vec<&GenerationRecord> = lines
        .iter()
        .filter_map(|l| match l {
            RecordLine::Ea(g) => Some(g),
            RecordLine::Weak(_) => None,
        })
        .collect();
    let mismatched = match kind {
        PlotKind::WeakCurve => ea.len(),
        PlotKind::EaTrace => weak.len(),
    };
    if mismatched > 0 {
        bail!(lth_core::Error::Contract(format!(
            "{mismatched} records do not match the requested plot kind"
        )));
    }

    let mut w = csv::Writer::from_writer(out);
    match kind {
        PlotKind::WeakCurve => {
            w.write_record(WEAK_CURVE_HEADER)?;
            for r in weak {
                let h = &r.history;
                for (split, accs) in [("train", &h.train_accuracy), ("validation", &h.val_accuracy)] {
                    for (epoch, acc) in accs.iter().enumerate() {
                        w.write_record([
                            r.dataset.clone(),
                            r.family.to_string(),
                            r.mode.to_string(),
                            r.round.to_string(),
                            r.seed.to_string(),
                            (epoch + 1).to_string(),
                            split.to_string(),
                            acc.to_string(),
                            r.remaining.percent.to_string(),
                        ])?;
                    }
                }
            }
        }
        PlotKind::EaTrace => {
            w.write_record(EA_TRACE_HEADER)?;
            for g in ea {
                w.write_record([
                    g.dataset.clone(),
                    g.family.to_string(),
                    g.seed.to_string(),
                    g.generation.to_string(),
                    g.best_fitness.to_string(),
                    g.mean_fitness.to_string(),
                    g.best_remaining.count.to_string(),
                    g.best_remaining.percent.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
