use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fedmix::data::{canonical_features, SchemaMap};
use fedmix::experiment::{
    default_synthetic_datasets, ensure_output_dir, generate_synthetic, run_and_emit, DatasetEntry,
    DatasetSource, ExperimentSpec, GridKind, RegimeKind, Setting,
};
use fedmix::federation::stream;
use fedmix::numeric::Rng;
use fedmix::{Error, Result};

#[derive(Parser)]
#[command(name = "fedmix", version, about = "Local and federated MLP training with MixUp variants on imbalanced tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Every regime in every setting at the default alphas.
    MainGrid(RunArgs),
    /// MixUp and Balanced-MixUp over the alpha grid, with a No-MixUp baseline.
    AlphaSweep(RunArgs),
    /// Federated runs for each communication-round count at a fixed gradient budget.
    RoundsSweep(RunArgs),
    /// Writes the synthetic stand-in datasets as CSV files with matching schemas.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset as `name=path/to/data.csv:path/to/schema.json` (repeatable).
    #[arg(long = "dataset", value_name = "NAME=CSV:SCHEMA")]
    datasets: Vec<String>,
    /// Regimes to run: none, mixup, balanced (repeatable or comma-separated).
    #[arg(long = "regime", value_delimiter = ',')]
    regimes: Vec<RegimeKind>,
    /// Alpha grid for the alpha sweep.
    #[arg(long = "alpha", value_delimiter = ',')]
    alphas: Vec<f64>,
    #[arg(long)]
    mixup_alpha: Option<f64>,
    #[arg(long)]
    balanced_alpha: Option<f64>,
    /// Settings to run: local, fl.
    #[arg(long = "setting", value_delimiter = ',')]
    settings: Vec<Setting>,
    /// Communication rounds (the first value is used outside the rounds sweep).
    #[arg(long = "rounds", value_delimiter = ',')]
    rounds: Vec<usize>,
    /// Total local epochs per client.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run every cell once per listed seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Save final model parameters of every job.
    #[arg(long)]
    checkpoints: bool,
    /// Write 0 in the wall-time column so repeated runs are byte-identical.
    #[arg(long)]
    no_wall_time: bool,
    /// Run jobs and clients on one thread.
    #[arg(long)]
    sequential: bool,
    /// Log and skip datasets that fail to load.
    #[arg(long)]
    skip_failed: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = "data/synthetic")]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

impl RunArgs {
    fn into_spec(self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_path(path)?,
            None => ExperimentSpec::default(),
        };
        if !self.datasets.is_empty() {
            spec.datasets = self
                .datasets
                .iter()
                .map(|d| DatasetEntry::parse_flag(d))
                .collect::<Result<_>>()?;
        }
        if !self.regimes.is_empty() {
            spec.regimes = self.regimes;
        }
        if !self.alphas.is_empty() {
            spec.alphas = self.alphas;
        }
        if let Some(a) = self.mixup_alpha {
            spec.mixup_alpha = a;
        }
        if let Some(a) = self.balanced_alpha {
            spec.balanced_alpha = a;
        }
        if !self.settings.is_empty() {
            spec.settings = self.settings;
        }
        if !self.rounds.is_empty() {
            spec.rounds_list = self.rounds;
        }
        if let Some(b) = self.budget {
            spec.gradient_budget = b;
        }
        if let Some(b) = self.batch_size {
            spec.batch_size = b;
        }
        if let Some(s) = self.seed {
            spec.master_seed = s;
        }
        if !self.seeds.is_empty() {
            spec.seeds = self.seeds;
        }
        if let Some(o) = self.out {
            spec.output = o;
        }
        spec.checkpoints |= self.checkpoints;
        spec.record_wall_time &= !self.no_wall_time;
        spec.parallel &= !self.sequential;
        spec.skip_failed_datasets |= self.skip_failed;
        Ok(spec)
    }
}

fn run(args: RunArgs, kind: GridKind) -> Result<()> {
    let spec = args.into_spec()?;
    spec.validate()?;
    ensure_output_dir(&spec.output)?;
    let out = run_and_emit(&spec, kind)?;
    let skipped: Vec<_> = out.prepared.iter().flat_map(|p| &p.skipped).collect();
    for s in &skipped {
        eprintln!("skipped {}: {}", s.name, s.error);
    }
    println!(
        "{kind}: {} rows from {} jobs written to {}",
        out.result.len(),
        out.jobs.len(),
        spec.output.display()
    );
    Ok(())
}

fn write_synthetic(dir: &Path, seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let features = canonical_features();
    for (i, entry) in default_synthetic_datasets().iter().enumerate() {
        let DatasetSource::Synthetic { synthetic } = &entry.source else {
            continue;
        };
        let mut rng = Rng::from_words([seed, i as u64 + 1, 0, stream::SYNTH]);
        let ds = generate_synthetic(&entry.name, synthetic, &mut rng)?;
        let mut text = String::new();
        for f in &features {
            text.push_str(&f.name);
            text.push(',');
        }
        text.push_str("label\n");
        for (r, &label) in ds.y.iter().enumerate() {
            for v in ds.x.row(r) {
                let _ = write!(text, "{v},");
            }
            let _ = writeln!(text, "{label}");
        }
        let csv_path = dir.join(format!("{}.csv", entry.name));
        std::fs::write(&csv_path, text).map_err(|e| Error::Io {
            path: csv_path.clone(),
            source: e,
        })?;

        let map = SchemaMap {
            dataset_name: entry.name.clone(),
            label_column: "label".into(),
            columns: features
                .iter()
                .map(|f| (f.name.clone(), f.name.clone()))
                .collect::<BTreeMap<_, _>>(),
            missing_values: Vec::new(),
        };
        let schema_path = dir.join(format!("{}.schema.json", entry.name));
        let json = serde_json::to_string_pretty(&map).expect("schema map serializes");
        std::fs::write(&schema_path, json).map_err(|e| Error::Io {
            path: schema_path.clone(),
            source: e,
        })?;
        println!("wrote {} ({} rows)", csv_path.display(), ds.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::MainGrid(a) => run(a, GridKind::MainGrid),
        Command::AlphaSweep(a) => run(a, GridKind::AlphaSweep),
        Command::RoundsSweep(a) => run(a, GridKind::RoundsSweep),
        Command::Synth(a) => write_synthetic(&a.out, a.seed),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
