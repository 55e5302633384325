//! Adam training loop shared by every [`Model`].
//!
//! Per-document gradients may be computed on several threads, but they are
//! always summed in document order, so results do not depend on the job
//! count.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::DocFeatures;
use crate::model::{mix_seed, DocObjective, Dropout, Model};
use crate::optim::{Adam, AdamConfig};
use crate::parallel::Parallelism;

pub const DEFAULT_DROPOUT: f64 = 0.5;

const SHUFFLE_STREAM: u64 = 0x5348_5546;
const DROPOUT_STREAM: u64 = 0x4452_4f50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub dropout: f64,
    /// Documents per update; `None` means the whole corpus.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        TrainConfig {
            epochs: 10,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            adam_eps: adam.eps,
            dropout: DEFAULT_DROPOUT,
            batch_size: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be > 0, got {}", self.lr)));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Summed loss of the updates made this epoch, with dropout. Absent for
    /// the initial evaluation.
    pub train_loss: Option<f64>,
    /// Loss without dropout after the epoch.
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    /// Mentions contributing to the loss.
    pub counted: usize,
    /// Labeled mentions left out because their gold entity is not a candidate.
    pub excluded: usize,
    /// Epoch 0 is the model before any update.
    pub epochs: Vec<EpochRecord>,
}

/// Loss and accuracy over a corpus without dropout.
pub fn evaluate<M: Model>(model: &M, docs: &[DocFeatures], par: &Parallelism) -> DocObjective {
    let per_doc = par.map(docs, |_, doc| model.objective(doc, None, None));
    let mut total = DocObjective::default();
    for obj in &per_doc {
        total.accumulate(obj);
    }
    total
}

fn accuracy(obj: &DocObjective) -> f64 {
    if obj.counted == 0 {
        0.0
    } else {
        obj.correct as f64 / obj.counted as f64
    }
}

/// Trains `model` in place and returns the per-epoch log.
pub fn train<M: Model>(model: &mut M, docs: &[DocFeatures], cfg: &TrainConfig, par: &Parallelism) -> Result<TrainLog> {
    cfg.validate()?;
    let initial = evaluate(model, docs, par);
    if initial.counted == 0 {
        return Err(Error::NothingToTrainOn);
    }
    let mut log = TrainLog {
        counted: initial.counted,
        excluded: initial.excluded,
        epochs: vec![EpochRecord {
            epoch: 0,
            train_loss: None,
            loss: initial.loss,
            accuracy: accuracy(&initial),
        }],
    };

    let mut adam = Adam::new(cfg.adam(), model);
    let mut order: Vec<usize> = (0..docs.len()).collect();
    let mut shuffler = ChaCha8Rng::seed_from_u64(mix_seed(&[cfg.seed, SHUFFLE_STREAM]));
    let batch_size = cfg.batch_size.unwrap_or(docs.len()).max(1);

    for epoch in 1..=cfg.epochs {
        if cfg.batch_size.is_some() {
            order.shuffle(&mut shuffler);
        }
        let mut train_loss = 0.0;
        for batch in order.chunks(batch_size) {
            let current: &M = model;
            let results = par.map(batch, |_, &d| {
                let mut grad = current.zeroed();
                let mut dropout = (cfg.dropout > 0.0).then(|| {
                    Dropout::new(
                        cfg.dropout,
                        mix_seed(&[cfg.seed, DROPOUT_STREAM, epoch as u64, d as u64]),
                    )
                });
                let obj = current.objective(&docs[d], dropout.as_mut(), Some(&mut grad));
                (obj, grad)
            });
            let mut total = model.zeroed();
            let mut counted = 0;
            for (obj, grad) in &results {
                train_loss += obj.loss;
                counted += obj.counted;
                total.add_assign(grad);
            }
            if counted > 0 {
                adam.update(model, &total);
            }
        }
        let after = evaluate(model, docs, par);
        log.epochs.push(EpochRecord {
            epoch,
            train_loss: Some(train_loss),
            loss: after.loss,
            accuracy: accuracy(&after),
        });
    }
    Ok(log)
}
