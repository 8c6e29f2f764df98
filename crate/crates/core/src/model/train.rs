use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::numeric::Rng;
use crate::sampler::{epoch_batches, MixRegime};

use super::adam::{adam_step, AdamState};
use super::mlp::{backward, MlpParams};

/// Hyperparameters of one local training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTraining {
    pub regime: MixRegime,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

/// Parameters after local training and the number of Adam steps taken.
#[derive(Debug, Clone)]
pub struct Trained {
    pub params: MlpParams,
    pub steps: usize,
    pub final_batch_loss: f64,
}

/// Number of minibatch gradient steps in one epoch over `n` samples.
pub fn steps_per_epoch(n: usize, batch_size: usize) -> usize {
    n.div_ceil(batch_size)
}

/// Runs `epochs` passes of minibatch Adam from `params`, with fresh optimizer
/// state.
pub fn train_local(
    params: &MlpParams,
    dataset: &TabularDataset,
    cfg: &LocalTraining,
    rng: &mut Rng,
) -> Result<Trained> {
    if cfg.epochs == 0 {
        return Err(Error::Config("epochs must be at least 1".into()));
    }
    if !(cfg.lr > 0.0 && cfg.lr.is_finite()) {
        return Err(Error::Config(format!("learning rate must be > 0, got {}", cfg.lr)));
    }
    if dataset.num_features() != params.input_dim() {
        return Err(Error::Shape {
            op: "train_local",
            expected: format!("{} features", params.input_dim()),
            actual: dataset.num_features().to_string(),
        });
    }
    let mut params = params.clone();
    let mut state = AdamState::new(&params);
    let mut steps = 0;
    let mut last_loss = f64::NAN;
    for _ in 0..cfg.epochs {
        for batch in epoch_batches(dataset, cfg.regime, cfg.batch_size, rng)? {
            let (grads, loss) = backward(&params, &batch.x, &batch.y_soft)?;
            adam_step(&mut params, &grads, &mut state, cfg.lr);
            steps += 1;
            last_loss = loss;
        }
    }
    if !params.is_finite() {
        return Err(Error::data(&dataset.name, "training diverged to non-finite parameters"));
    }
    Ok(Trained {
        params,
        steps,
        final_batch_loss: last_loss,
    })
}
