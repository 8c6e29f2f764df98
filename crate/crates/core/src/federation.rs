//! In-process federated averaging.
//!
//! Each round broadcasts the global parameters, trains every client locally
//! (optionally in parallel), and replaces the global model with the
//! sample-count-weighted mean of the client models. Client randomness comes
//! from [`derive_client_rng`], so results do not depend on scheduling.

use rayon::prelude::*;

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricsReport};
use crate::model::{init_params, train_local, LocalTraining, MlpParams};
use crate::numeric::Rng;
use crate::sampler::MixRegime;

/// Stream tags occupying the last key word of derived generators.
pub mod stream {
    pub const TRAIN: u64 = 0x7472_6169_6e00_0001;
    pub const SPLIT: u64 = 0x7370_6c69_7400_0002;
    pub const INIT: u64 = 0x696e_6974_0000_0003;
    pub const SYNTH: u64 = 0x7379_6e74_6800_0004;
}

/// Generator for client `client_id` in round `round`. Distinct inputs key
/// distinct ChaCha streams.
pub fn derive_client_rng(master_seed: u64, client_id: u64, round: u64) -> Rng {
    Rng::from_words([master_seed, client_id, round, stream::TRAIN])
}

/// Generator for the stratified split of client `client_id`'s data.
pub fn derive_split_rng(master_seed: u64, client_id: u64) -> Rng {
    Rng::from_words([master_seed, client_id, 0, stream::SPLIT])
}

/// The initial global model `w⁰`, shared by every regime and setting that uses
/// the same master seed and input width.
pub fn initial_global(master_seed: u64, input_dim: usize) -> MlpParams {
    init_params(&mut Rng::from_words([master_seed, 0, 0, stream::INIT]), input_dim)
}

#[derive(Debug, Clone)]
pub struct ClientNode {
    /// 1-based client identifier.
    pub id: u64,
    pub train: TabularDataset,
    pub test: TabularDataset,
}

impl ClientNode {
    pub fn new(id: u64, train: TabularDataset, test: TabularDataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Config(format!("client {id} has no training samples")));
        }
        Ok(Self { id, train, test })
    }

    /// FedAvg weight: the number of local training samples.
    pub fn weight(&self) -> usize {
        self.train.len()
    }

    pub fn name(&self) -> &str {
        &self.train.name
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FederationConfig {
    pub rounds: usize,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub regime: MixRegime,
    pub master_seed: u64,
    /// Train clients concurrently within a round.
    pub parallel: bool,
}

impl FederationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.local_epochs == 0 {
            return Err(Error::Config("rounds and local_epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        self.regime.validate()
    }

    fn local(&self) -> LocalTraining {
        LocalTraining {
            regime: self.regime,
            epochs: self.local_epochs,
            batch_size: self.batch_size,
            lr: self.lr,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClientEval {
    pub client_id: u64,
    pub name: String,
    pub metrics: MetricsReport,
}

/// Outcome of one communication round.
#[derive(Debug, Clone)]
pub struct RoundLog {
    /// 1-based round index.
    pub round: usize,
    /// `w^e` produced by this round's aggregation.
    pub global: MlpParams,
    /// Global model evaluated on every client's test split.
    pub evals: Vec<ClientEval>,
    /// Adam steps taken by each client during this round.
    pub client_steps: Vec<usize>,
}

/// Weighted componentwise mean of client parameters; weights are normalized
/// to sum to one.
pub fn fedavg(client_params: &[MlpParams], weights: &[f64]) -> Result<MlpParams> {
    let first = client_params
        .first()
        .ok_or_else(|| Error::Protocol("fedavg needs at least one client".into()))?;
    if weights.len() != client_params.len() {
        return Err(Error::Protocol(format!(
            "{} weights for {} clients",
            weights.len(),
            client_params.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::Protocol(format!("client weight {w} is not positive")));
    }
    if let Some(i) = client_params.iter().position(|p| !p.same_shape(first)) {
        return Err(Error::Protocol(format!("client {i} parameter shapes differ")));
    }
    let total: f64 = weights.iter().sum();
    let norm: Vec<f64> = weights.iter().map(|w| w / total).collect();

    let mut out = first.zeros_like();
    for (t, dst) in out.tensors_mut().into_iter().enumerate() {
        let dst = dst.as_mut_slice();
        for (k, d) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (p, w) in client_params.iter().zip(&norm) {
                let v = p.tensors()[t].as_slice()[k];
                acc += w * v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            *d = acc.clamp(lo, hi);
        }
    }
    Ok(out)
}

/// Runs `config.rounds` rounds of broadcast → local training → FedAvg starting
/// from `initial`. Any client failure aborts the run before aggregation.
pub fn run_federation_from(
    initial: &MlpParams,
    clients: &[ClientNode],
    config: &FederationConfig,
) -> Result<Vec<RoundLog>> {
    config.validate()?;
    if clients.is_empty() {
        return Err(Error::Config("federation needs at least one client".into()));
    }
    if let Some(c) = clients.iter().find(|c| c.train.num_features() != initial.input_dim()) {
        return Err(Error::Protocol(format!(
            "client {} has {} features, global model expects {}",
            c.id,
            c.train.num_features(),
            initial.input_dim()
        )));
    }
    let local = config.local();
    let weights: Vec<f64> = clients.iter().map(|c| c.weight() as f64).collect();
    let mut global = initial.clone();
    let mut logs = Vec::with_capacity(config.rounds);

    for round in 1..=config.rounds {
        let train_one = |c: &ClientNode| {
            let mut rng = derive_client_rng(config.master_seed, c.id, round as u64);
            train_local(&global, &c.train, &local, &mut rng).map_err(|e| Error::Client {
                client_id: c.id as usize,
                round,
                source: Box::new(e),
            })
        };
        let results: Vec<_> = if config.parallel {
            clients.par_iter().map(train_one).collect()
        } else {
            clients.iter().map(train_one).collect()
        };
        let trained = results.into_iter().collect::<Result<Vec<_>>>()?;
        let client_steps = trained.iter().map(|t| t.steps).collect();
        let params: Vec<MlpParams> = trained.into_iter().map(|t| t.params).collect();
        global = fedavg(&params, &weights)?;

        let evals = clients
            .iter()
            .map(|c| {
                Ok(ClientEval {
                    client_id: c.id,
                    name: c.name().to_string(),
                    metrics: evaluate(&global, &c.test)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        log::debug!("round {round}/{} done", config.rounds);
        logs.push(RoundLog {
            round,
            global: global.clone(),
            evals,
            client_steps,
        });
    }
    Ok(logs)
}

/// [`run_federation_from`] with `w⁰` drawn from the master seed.
pub fn run_federation(clients: &[ClientNode], config: &FederationConfig) -> Result<Vec<RoundLog>> {
    let input_dim = clients
        .first()
        .ok_or_else(|| Error::Config("federation needs at least one client".into()))?
        .train
        .num_features();
    run_federation_from(&initial_global(config.master_seed, input_dim), clients, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_params_with_hidden;
    use crate::numeric::Matrix;

    fn scalar(v: f64) -> MlpParams {
        let mut p = MlpParams::zeros(1, 1);
        p.b3 = Matrix::from_vec(1, 1, vec![v]);
        p
    }

    #[test]
    fn weighted_scalar_example() {
        let out = fedavg(&[scalar(0.0), scalar(1.0)], &[100.0, 300.0]).unwrap();
        assert!((out.b3.get(0, 0) - 0.75).abs() <= 1e-12);
    }

    #[test]
    fn identical_inputs_are_returned_unchanged() {
        let p = init_params_with_hidden(&mut Rng::new(1), 3, 5);
        let out = fedavg(&[p.clone(), p.clone(), p.clone()], &[1.0, 7.0, 2.0]).unwrap();
        assert_eq!(out, p);
    }

    #[test]
    fn normalized_weights_for_reference_train_sizes() {
        let sizes = [3392.0, 226.0, 160.0, 99.0];
        let total: f64 = sizes.iter().sum();
        let expected = [0.8749, 0.0583, 0.0413, 0.0255];
        for (s, e) in sizes.iter().zip(expected) {
            assert!((s / total - e).abs() < 5e-5, "{}", s / total);
        }
        // A one-hot parameter per client exposes each client's weight.
        let params: Vec<MlpParams> = (0..4)
            .map(|i| {
                let mut p = MlpParams::zeros(1, 4);
                p.b1.set(0, i, 1.0);
                p
            })
            .collect();
        let out = fedavg(&params, &sizes).unwrap();
        for (i, e) in expected.iter().enumerate() {
            assert!((out.b1.get(0, i) - e).abs() < 5e-5);
        }
    }

    #[test]
    fn protocol_errors() {
        assert!(fedavg(&[], &[]).is_err());
        assert!(fedavg(&[scalar(1.0)], &[0.0]).is_err());
        assert!(fedavg(&[scalar(1.0)], &[1.0, 2.0]).is_err());
        let other = MlpParams::zeros(2, 1);
        assert!(fedavg(&[scalar(1.0), other], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn derived_streams_are_reproducible_and_distinct() {
        let draws = |s, c, r| {
            let mut rng = derive_client_rng(s, c, r);
            (0..10_000).map(|_| rng.next_u64()).collect::<Vec<_>>()
        };
        let base = draws(7, 1, 1);
        assert_eq!(base, draws(7, 1, 1));
        for other in [draws(7, 2, 1), draws(7, 1, 2)] {
            assert!(base.iter().zip(&other).all(|(a, b)| a != b));
        }
    }

    fn toy_client(id: u64, n: usize, seed: u64) -> ClientNode {
        let mut rng = Rng::new(seed);
        let make = |rng: &mut Rng, n: usize| {
            let x = Matrix::from_vec(n, 3, (0..3 * n).map(|_| rng.normal()).collect());
            let y = (0..n).map(|i| u8::from(i % 4 == 0)).collect();
            TabularDataset::binary(format!("toy{id}"), x, y).unwrap()
        };
        let train = make(&mut rng, n);
        let test = make(&mut rng, 8);
        ClientNode::new(id, train, test).unwrap()
    }

    fn config(rounds: usize, local_epochs: usize) -> FederationConfig {
        FederationConfig {
            rounds,
            local_epochs,
            batch_size: 24,
            lr: 0.004,
            regime: MixRegime::MixUp { alpha: 0.2 },
            master_seed: 9,
            parallel: false,
        }
    }

    #[test]
    fn single_client_single_round_is_local_training() {
        let client = toy_client(1, 50, 1);
        let init = init_params_with_hidden(&mut Rng::new(2), 3, 8);
        let cfg = config(1, 4);
        let logs = run_federation_from(&init, std::slice::from_ref(&client), &cfg).unwrap();
        let solo = train_local(&init, &client.train, &cfg.local(), &mut derive_client_rng(9, 1, 1)).unwrap();
        assert_eq!(logs[0].global, solo.params);
    }

    #[test]
    fn identical_clients_average_to_the_solo_model() {
        let a = toy_client(1, 40, 3);
        let b = a.clone();
        let init = init_params_with_hidden(&mut Rng::new(4), 3, 8);
        let cfg = config(1, 3);
        let pair = run_federation_from(&init, &[a.clone(), b], &cfg).unwrap();
        let solo = run_federation_from(&init, &[a], &cfg).unwrap();
        assert_eq!(pair[0].global, solo[0].global);
    }

    #[test]
    fn parallel_and_sequential_rounds_agree() {
        let clients = [toy_client(1, 30, 5), toy_client(2, 70, 6), toy_client(3, 45, 7)];
        let init = init_params_with_hidden(&mut Rng::new(8), 3, 8);
        let seq = run_federation_from(&init, &clients, &config(3, 2)).unwrap();
        let par = run_federation_from(&init, &clients, &FederationConfig { parallel: true, ..config(3, 2) }).unwrap();
        assert_eq!(seq.last().unwrap().global, par.last().unwrap().global);
        assert_eq!(seq[0].client_steps, vec![4, 6, 4]);
    }

    #[test]
    fn config_rejects_zero_rounds() {
        assert!(config(0, 5).validate().is_err());
        assert!(config(5, 0).validate().is_err());
    }
}
