//! Expands an [`ExperimentSpec`] into independent jobs and runs them.
//!
//! Random streams are keyed by `(seed, client id, round)` and nothing else,
//! so a job's numbers do not depend on which grid or thread runs it.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{load_csv, prepare, FeatureSchema, RawTable, SchemaMap};
use crate::error::{Error, Result};
use crate::federation::{
    derive_client_rng, derive_split_rng, initial_global, run_federation_from, stream, ClientNode,
    FederationConfig,
};
use crate::metrics::evaluate;
use crate::model::{checkpoint, train_local, LocalTraining, MlpParams};
use crate::numeric::Rng;
use crate::sampler::MixRegime;

use super::results::{RunResult, RunRow};
use super::spec::{DatasetEntry, DatasetSource, ExperimentSpec, RegimeKind, Setting};
use super::synthetic::generate_synthetic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    MainGrid,
    AlphaSweep,
    RoundsSweep,
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridKind::MainGrid => "main-grid",
            GridKind::AlphaSweep => "alpha-sweep",
            GridKind::RoundsSweep => "rounds-sweep",
        })
    }
}

/// One grid cell: a local run on one client, or a federation over all clients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Job {
    Local {
        client_id: u64,
        regime: MixRegime,
        seed: u64,
    },
    Federated {
        regime: MixRegime,
        rounds: usize,
        seed: u64,
    },
}

impl Job {
    pub fn seed(&self) -> u64 {
        match *self {
            Job::Local { seed, .. } | Job::Federated { seed, .. } => seed,
        }
    }
}

/// Clients prepared for one seed, plus datasets that could not be loaded.
#[derive(Debug, Clone)]
pub struct PreparedClients {
    pub seed: u64,
    pub clients: Vec<ClientNode>,
    pub skipped: Vec<SkippedDataset>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedDataset {
    pub name: String,
    pub error: String,
}

/// Loads (or generates) one dataset as a raw table.
pub fn load_dataset(entry: &DatasetEntry, client_id: u64, seed: u64) -> Result<RawTable> {
    match &entry.source {
        DatasetSource::Csv { csv, schema } => {
            let mut map = SchemaMap::from_path(schema)?;
            map.dataset_name = entry.name.clone();
            load_csv(csv, &FeatureSchema::canonical(map)?)
        }
        DatasetSource::Synthetic { synthetic } => {
            let data_seed = synthetic.seed.unwrap_or(seed);
            let mut rng = Rng::from_words([data_seed, client_id, 0, stream::SYNTH]);
            let ds = generate_synthetic(&entry.name, synthetic, &mut rng)?;
            Ok(RawTable::from(&ds))
        }
    }
}

/// Loads, splits and normalizes every dataset for `seed`. Client ids follow
/// the dataset order, starting at 1.
pub fn prepare_clients(spec: &ExperimentSpec, seed: u64) -> Result<PreparedClients> {
    let mut clients = Vec::new();
    let mut skipped = Vec::new();
    for (i, entry) in spec.effective_datasets().iter().enumerate() {
        let id = i as u64 + 1;
        let prepared = load_dataset(entry, id, seed).and_then(|raw| {
            let split = prepare(&raw, spec.train_ratio, &mut derive_split_rng(seed, id))?;
            ClientNode::new(id, split.train, split.test)
        });
        match prepared {
            Ok(c) => clients.push(c),
            Err(e) if spec.skip_failed_datasets => {
                log::error!("skipping dataset {}: {e}", entry.name);
                skipped.push(SkippedDataset {
                    name: entry.name.clone(),
                    error: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    if clients.is_empty() {
        return Err(Error::Validation("no dataset could be loaded".into()));
    }
    let dims: Vec<usize> = clients.iter().map(|c| c.train.num_features()).collect();
    if dims.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::Validation(format!("clients disagree on feature count: {dims:?}")));
    }
    Ok(PreparedClients {
        seed,
        clients,
        skipped,
    })
}

fn regime_for(spec: &ExperimentSpec, kind: RegimeKind) -> MixRegime {
    match kind {
        RegimeKind::None => MixRegime::NoMix,
        RegimeKind::Mixup => MixRegime::MixUp { alpha: spec.mixup_alpha },
        RegimeKind::Balanced => MixRegime::BalancedMixUp { alpha: spec.balanced_alpha },
    }
}

fn push_setting_jobs(jobs: &mut Vec<Job>, setting: Setting, regime: MixRegime, rounds: usize, seed: u64, client_ids: &[u64]) {
    match setting {
        Setting::Local => jobs.extend(client_ids.iter().map(|&client_id| Job::Local {
            client_id,
            regime,
            seed,
        })),
        Setting::Fl => jobs.push(Job::Federated { regime, rounds, seed }),
    }
}

/// All jobs of a grid for one seed.
pub fn plan(spec: &ExperimentSpec, kind: GridKind, seed: u64, client_ids: &[u64]) -> Vec<Job> {
    let mut jobs = Vec::new();
    match kind {
        GridKind::MainGrid => {
            for &rk in &spec.regimes {
                for &setting in &spec.settings {
                    push_setting_jobs(&mut jobs, setting, regime_for(spec, rk), spec.main_rounds(), seed, client_ids);
                }
            }
        }
        GridKind::AlphaSweep => {
            for &setting in &spec.settings {
                if spec.regimes.contains(&RegimeKind::None) {
                    push_setting_jobs(&mut jobs, setting, MixRegime::NoMix, spec.main_rounds(), seed, client_ids);
                }
                for rk in [RegimeKind::Mixup, RegimeKind::Balanced] {
                    if !spec.regimes.contains(&rk) {
                        continue;
                    }
                    for &alpha in &spec.alphas {
                        push_setting_jobs(&mut jobs, setting, rk.with_alpha(alpha), spec.main_rounds(), seed, client_ids);
                    }
                }
            }
        }
        GridKind::RoundsSweep => {
            for &rk in &spec.regimes {
                for &rounds in &spec.rounds_list {
                    jobs.push(Job::Federated {
                        regime: regime_for(spec, rk),
                        rounds,
                        seed,
                    });
                }
            }
        }
    }
    jobs
}

/// Final parameters of a job and its result rows.
#[derive(Debug, Clone)]
pub struct JobOutput {
    pub job: Job,
    pub rows: Vec<RunRow>,
    pub params: MlpParams,
    /// Adam steps taken per client over the whole job, in client order.
    pub client_steps: Vec<(u64, usize)>,
}

/// Runs one grid cell against prepared clients.
pub fn run_job(spec: &ExperimentSpec, prepared: &PreparedClients, job: &Job) -> Result<JobOutput> {
    let start = Instant::now();
    let clients = &prepared.clients;
    let input_dim = clients[0].train.num_features();
    let seed = job.seed();
    let init = initial_global(seed, input_dim);
    let budget = spec.gradient_budget;
    let row = |c: &ClientNode, regime: MixRegime, setting, rounds, local_epochs, m: crate::metrics::MetricsReport| RunRow {
        dataset: c.name().to_string(),
        regime: regime.key().to_string(),
        alpha: regime.alpha(),
        setting,
        rounds,
        local_epochs,
        seed,
        loss: m.loss,
        accuracy: m.accuracy,
        f_score: m.f_score,
        wall_time_s: 0.0,
    };

    let mut out = match *job {
        Job::Local { client_id, regime, .. } => {
            let c = clients
                .iter()
                .find(|c| c.id == client_id)
                .ok_or_else(|| Error::Config(format!("no client with id {client_id}")))?;
            let cfg = LocalTraining {
                regime,
                epochs: budget,
                batch_size: spec.batch_size,
                lr: spec.learning_rates.for_regime(&regime),
            };
            // Local training is a single round of a one-client federation.
            let mut rng = derive_client_rng(seed, client_id, 1);
            let trained = train_local(&init, &c.train, &cfg, &mut rng).map_err(|e| Error::Client {
                client_id: client_id as usize,
                round: 1,
                source: Box::new(e),
            })?;
            let m = evaluate(&trained.params, &c.test)?;
            JobOutput {
                job: *job,
                rows: vec![row(c, regime, Setting::Local, 0, budget, m)],
                params: trained.params,
                client_steps: vec![(client_id, trained.steps)],
            }
        }
        Job::Federated { regime, rounds, .. } => {
            let cfg = FederationConfig {
                rounds,
                local_epochs: spec.local_epochs_for(rounds),
                batch_size: spec.batch_size,
                lr: spec.learning_rates.for_regime(&regime),
                regime,
                master_seed: seed,
                parallel: spec.parallel,
            };
            let logs = run_federation_from(&init, clients, &cfg)?;
            let last = logs.last().expect("at least one round");
            let rows = clients
                .iter()
                .zip(&last.evals)
                .map(|(c, e)| row(c, regime, Setting::Fl, rounds, cfg.local_epochs, e.metrics))
                .collect();
            let client_steps = clients
                .iter()
                .enumerate()
                .map(|(i, c)| (c.id, logs.iter().map(|l| l.client_steps[i]).sum()))
                .collect();
            JobOutput {
                job: *job,
                rows,
                params: last.global.clone(),
                client_steps,
            }
        }
    };
    if spec.record_wall_time {
        let secs = start.elapsed().as_secs_f64();
        for r in &mut out.rows {
            r.wall_time_s = secs;
        }
    }
    Ok(out)
}

fn checkpoint_name(job: &Job, clients: &[ClientNode]) -> String {
    let alpha = |r: &MixRegime| r.alpha().map(|a| format!("-a{a}")).unwrap_or_default();
    match job {
        Job::Local { client_id, regime, seed } => {
            let name = clients.iter().find(|c| c.id == *client_id).map_or("?", |c| c.name());
            format!("local-{name}-{}{}-s{seed}.json", regime.key(), alpha(regime))
        }
        Job::Federated { regime, rounds, seed } => {
            format!("fl-{}{}-r{rounds}-s{seed}.json", regime.key(), alpha(regime))
        }
    }
}

/// Everything a grid run produced.
#[derive(Debug, Clone)]
pub struct GridOutput {
    pub kind: GridKind,
    pub result: RunResult,
    pub jobs: Vec<JobOutput>,
    pub prepared: Vec<PreparedClients>,
}

/// Validates `spec`, prepares clients for every seed, and runs all jobs of `kind`.
pub fn run_grid(spec: &ExperimentSpec, kind: GridKind) -> Result<GridOutput> {
    spec.validate()?;
    let prepared = spec
        .effective_seeds()
        .into_iter()
        .map(|seed| prepare_clients(spec, seed))
        .collect::<Result<Vec<_>>>()?;
    let work: Vec<(usize, Job)> = prepared
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            let ids: Vec<u64> = p.clients.iter().map(|c| c.id).collect();
            plan(spec, kind, p.seed, &ids).into_iter().map(move |j| (i, j))
        })
        .collect();
    log::info!("{kind}: {} jobs over {} seed(s)", work.len(), prepared.len());
    let run = |(i, job): &(usize, Job)| run_job(spec, &prepared[*i], job);
    let outputs = if spec.parallel {
        work.par_iter().map(run).collect::<Vec<_>>()
    } else {
        work.iter().map(run).collect()
    }
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let rows = outputs.iter().flat_map(|o| o.rows.iter().cloned()).collect();
    Ok(GridOutput {
        kind,
        result: RunResult::new(rows),
        jobs: outputs,
        prepared,
    })
}

pub fn run_main_grid(spec: &ExperimentSpec) -> Result<RunResult> {
    run_grid(spec, GridKind::MainGrid).map(|g| g.result)
}

pub fn run_alpha_sweep(spec: &ExperimentSpec) -> Result<RunResult> {
    run_grid(spec, GridKind::AlphaSweep).map(|g| g.result)
}

pub fn run_rounds_sweep(spec: &ExperimentSpec) -> Result<RunResult> {
    run_grid(spec, GridKind::RoundsSweep).map(|g| g.result)
}

#[derive(Serialize)]
struct Manifest<'a> {
    grid: String,
    spec: &'a ExperimentSpec,
    seeds: Vec<u64>,
    datasets: Vec<ManifestDataset>,
    skipped: Vec<&'a SkippedDataset>,
    jobs: usize,
    rows: usize,
}

#[derive(Serialize)]
struct ManifestDataset {
    seed: u64,
    client_id: u64,
    name: String,
    train_n: usize,
    test_n: usize,
    train_class_counts: Vec<usize>,
    test_class_counts: Vec<usize>,
}

/// Writes `results.csv`, `results.md`, `run-manifest.json` and, if enabled,
/// per-job checkpoints under `spec.output`.
pub fn write_outputs(spec: &ExperimentSpec, output: &GridOutput) -> Result<()> {
    let dir = &spec.output;
    super::results::emit_results(&output.result, dir)?;
    let manifest = Manifest {
        grid: output.kind.to_string(),
        spec,
        seeds: spec.effective_seeds(),
        datasets: output
            .prepared
            .iter()
            .flat_map(|p| {
                p.clients.iter().map(move |c| ManifestDataset {
                    seed: p.seed,
                    client_id: c.id,
                    name: c.name().to_string(),
                    train_n: c.train.len(),
                    test_n: c.test.len(),
                    train_class_counts: c.train.class_counts().to_vec(),
                    test_class_counts: c.test.class_counts().to_vec(),
                })
            })
            .collect(),
        skipped: output.prepared.iter().flat_map(|p| &p.skipped).collect(),
        jobs: output.jobs.len(),
        rows: output.result.len(),
    };
    let path = dir.join("run-manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&path, e))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;

    if spec.checkpoints {
        let ckpt_dir = dir.join("checkpoints");
        std::fs::create_dir_all(&ckpt_dir).map_err(|e| Error::io(&ckpt_dir, e))?;
        for o in &output.jobs {
            let clients = &output
                .prepared
                .iter()
                .find(|p| p.seed == o.job.seed())
                .expect("job seed was prepared")
                .clients;
            checkpoint::save(&o.params, ckpt_dir.join(checkpoint_name(&o.job, clients)))?;
        }
    }
    Ok(())
}

/// Runs a grid and writes all outputs.
pub fn run_and_emit(spec: &ExperimentSpec, kind: GridKind) -> Result<GridOutput> {
    let output = run_grid(spec, kind)?;
    write_outputs(spec, &output)?;
    Ok(output)
}

/// Checks that `path` can hold outputs before any training starts.
pub fn ensure_output_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}
