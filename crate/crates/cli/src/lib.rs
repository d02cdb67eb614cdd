//! Command-line driver: runs pruning experiments, writes record files and
//! derives ticket tables and plot data from them.
//!
//! ```text
//! lth run --dataset iris2 --model bvqc --mode weak-iterative --seeds 0-9 --out runs/bvqc
//! lth summarize runs/ --out tickets.csv
//! lth plot-data --kind weak-curve runs/bvqc --out curve.csv
//! ```

pub mod config;
pub mod records;
pub mod report;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use lth_core::lth::{run_ea, run_iterative, run_oneshot, Mode};
use lth_core::Family;

use config::{parse_ratios, parse_seeds, DatasetRef, ExperimentConfig};
use records::RecordLine;
use report::PlotKind;

#[derive(Debug, Parser)]
#[command(name = "lth", version, about = "Lottery-ticket experiments on simulated variational quantum classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write its records.
    Run(RunArgs),
    /// Winning-ticket table from record files or directories.
    Summarize {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Long-format CSV for plotting.
    PlotData {
        #[arg(long, value_enum)]
        kind: PlotKind,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

// Aliases keep clap from treating the parsed lists as repeated flags.
type SeedList = Vec<u64>;
type RatioList = Vec<f64>;

#[derive(Debug, Args)]
pub struct RunArgs {
    /// iris, iris2, wine, wine2 or a CSV path.
    #[arg(long)]
    pub dataset: Option<DatasetRef>,
    /// mvqc, bvqc or snn.
    #[arg(long)]
    pub model: Option<Family>,
    /// weak-iterative, weak-oneshot or strong-ea.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Start from a saved config (such as a previous run's config.json).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed list, e.g. `0-9` or `1,3,5`.
    #[arg(long, value_parser = parse_seeds)]
    pub seeds: Option<SeedList>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub reupload: Option<bool>,
    #[arg(long)]
    pub init_range: Option<f64>,
    #[arg(long)]
    pub rw_threshold: Option<usize>,
    /// Comma-separated one-shot pruning ratios.
    #[arg(long, value_parser = parse_ratios)]
    pub ratios: Option<RatioList>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl From<lth_core::Error> for CliError {
    fn from(e: lth_core::Error) -> Self {
        Self::Runtime(e.into())
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let config = resolve_config(&args)?;
            run(&config, &args.out, args.jobs)
        }
        Command::Summarize { inputs, out } => {
            let lines = records::read_all(&inputs)?;
            let tickets = report::tickets(&lines)?;
            with_output(out.as_deref(), |w| report::write_tickets(w, &tickets))
        }
        Command::PlotData { kind, inputs, out } => {
            let lines = records::read_all(&inputs)?;
            with_output(out.as_deref(), |w| report::write_plot_data(w, &lines, kind))
        }
    }
}

fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut file = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            f(&mut file)?;
        }
        None => f(&mut io::stdout().lock())?,
    }
    Ok(())
}

/// Config file or presets, then flag overrides, then validation.
pub fn resolve_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut c = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let mut c: ExperimentConfig =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            if let Some(d) = &args.dataset {
                c.dataset = d.clone();
            }
            if let Some(m) = args.model {
                c.model = m;
            }
            if let Some(m) = args.mode {
                c.mode = m;
            }
            c
        }
        None => {
            let missing = |flag: &str| CliError::Usage(format!("--{flag} is required without --config"));
            ExperimentConfig::defaults(
                args.dataset.clone().ok_or_else(|| missing("dataset"))?,
                args.model.ok_or_else(|| missing("model"))?,
                args.mode.ok_or_else(|| missing("mode"))?,
            )
        }
    };
    if let Some(v) = &args.seeds {
        c.seeds = v.clone();
    }
    if let Some(v) = args.epochs {
        c.train.epochs = v;
    }
    if let Some(v) = args.batch_size {
        c.train.batch_size = v;
    }
    if let Some(v) = args.lr {
        c.train.learning_rate = v;
    }
    if let Some(v) = args.weight_decay {
        c.train.weight_decay = v;
    }
    if let Some(v) = args.layers {
        c.circuit.n_layers = v;
    }
    if let Some(v) = args.reupload {
        c.circuit.data_reuploading = v;
    }
    if let Some(v) = args.init_range {
        c.circuit.init_uniform_range = v;
    }
    if let Some(v) = args.rw_threshold {
        c.rw_threshold = v;
    }
    if let Some(v) = &args.ratios {
        c.ratios = v.clone();
    }
    if let Some(v) = args.generations {
        c.ea.generations = v;
    }
    if let Some(v) = args.population {
        c.ea.population = v;
    }
    if let Some(v) = args.mutation_rate {
        c.ea.mutation_rate = v;
    }
    if let Some(0) = args.jobs {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    c.experiment().map_err(|e| CliError::Usage(e.to_string()))?;
    if c.mode == Mode::WeakOneshot {
        if let Some(r) = c.ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(CliError::Usage(format!("pruning ratio {r} outside (0, 1)")));
        }
        if c.ratios.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Usage("pruning ratios must be strictly increasing".into()));
        }
    }
    Ok(c)
}

/// Runs the configured driver and writes `config.json`, `records/seed-N.jsonl`
/// and `summary.csv` under `out`.
pub fn run(config: &ExperimentConfig, out: &Path, jobs: Option<usize>) -> Result<(), CliError> {
    let records_dir = out.join("records");
    if records_dir.exists() && fs::read_dir(&records_dir).map_err(anyhow::Error::from)?.next().is_some() {
        return Err(CliError::Usage(format!("{} already holds records", records_dir.display())));
    }
    fs::create_dir_all(&records_dir).with_context(|| format!("creating {}", records_dir.display()))?;
    fs::write(out.join("config.json"), serde_json::to_string_pretty(config).map_err(anyhow::Error::from)? + "\n")
        .context("writing config.json")?;

    let lines = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(anyhow::Error::from)?
            .install(|| execute_driver(config))?,
        None => execute_driver(config)?,
    };

    for &seed in &config.seeds {
        let mine: Vec<RecordLine> = lines.iter().filter(|l| l.seed() == seed).cloned().collect();
        records::write_jsonl(&records_dir.join(format!("seed-{seed}.jsonl")), &mine)?;
    }
    let file = fs::File::create(out.join("summary.csv")).context("creating summary.csv")?;
    report::write_run_summary(file, &lines)?;
    log::info!("{} records written to {}", lines.len(), out.display());
    Ok(())
}

pub fn execute_driver(config: &ExperimentConfig) -> lth_core::Result<Vec<RecordLine>> {
    let exp = config.experiment()?;
    let seeds = &config.seeds;
    Ok(match config.mode {
        Mode::WeakIterative => run_iterative(&exp, seeds, config.rw_threshold)?
            .into_iter()
            .map(RecordLine::Weak)
            .collect(),
        Mode::WeakOneshot => run_oneshot(&exp, seeds, &config.ratios)?
            .into_iter()
            .map(RecordLine::Weak)
            .collect(),
        Mode::StrongEa => run_ea(&exp, seeds, &config.ea)?.into_iter().map(RecordLine::Ea).collect(),
    })
}
