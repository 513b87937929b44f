use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::backward::{backward, draw_views, StepContext};
use super::loss::LossConfig;
use super::sampler::sample_triplets;
use super::{stream_rng, Stream};
use crate::community::AffiliationMatrix;
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::exec::Parallelism;
use crate::graph::EdgeList;
use crate::model::{sia_state, ModelConfig, ModelInputs, ModelParameters};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub loss: LossConfig,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Compute the socially-connected-item branch once per epoch instead of
    /// on every step.
    pub cache_sia: bool,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelConfig::default(),
            loss: LossConfig::default(),
            adam: AdamConfig::default(),
            batch_size: 4096,
            max_epochs: 500,
            patience: 15,
            seed: 2024,
            cache_sia: false,
            parallelism: Parallelism::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.loss.validate()?;
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if !(self.adam.lr > 0.0) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Graphs and targets consumed by [`train`].
#[derive(Clone, Copy)]
pub struct TrainData<'a> {
    pub inputs: ModelInputs<'a>,
    pub affiliation: &'a AffiliationMatrix,
    pub val: &'a EdgeList,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Per-step means of the unweighted loss terms and the weighted total.
    pub l_rec: f64,
    pub l_ssl: f64,
    pub l2: f64,
    pub total: f64,
    pub val_recall20: f64,
    pub val_ndcg20: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation NDCG@20.
    pub params: ModelParameters,
    pub best_epoch: usize,
    pub best_ndcg20: f64,
    pub history: Vec<EpochRecord>,
}

/// Trains from a Xavier initialisation.
pub fn train(data: TrainData<'_>, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let mut rng = stream_rng(cfg.seed, Stream::Init);
    let params = ModelParameters::xavier(
        data.affiliation.community_count(),
        data.inputs.train.item_count(),
        &cfg.model,
        &mut rng,
    );
    train_from(params, data, cfg)
}

/// Trains starting from `params`, validating after every epoch.
pub fn train_from(mut params: ModelParameters, data: TrainData<'_>, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let edges = data.inputs.train.edge_count();
    if edges == 0 {
        return Err(Error::Empty("training interactions"));
    }
    let steps = edges.div_ceil(cfg.batch_size);
    let par = cfg.parallelism;
    let ctx = StepContext {
        inputs: data.inputs,
        affiliation: data.affiliation,
        model: &cfg.model,
        loss: &cfg.loss,
        par,
    };
    let mut sampling = stream_rng(cfg.seed, Stream::Sampling);
    let mut first_view = stream_rng(cfg.seed, Stream::FirstView);
    let mut second_view = stream_rng(cfg.seed, Stream::SecondView);
    let mut adam = AdamState::new(&params, cfg.adam);

    let mut best = (params.clone(), 0usize, f64::NEG_INFINITY);
    let mut history = Vec::new();
    let mut stale = 0usize;
    for epoch in 1..=cfg.max_epochs {
        let start = Instant::now();
        let cached = cfg
            .cache_sia
            .then(|| Arc::new(sia_state(&params.items, data.inputs, &cfg.model, par)));
        let mut sums = [0.0f64; 4];
        for _ in 0..steps {
            let batch = sample_triplets(data.inputs.train, cfg.batch_size, &mut sampling)?;
            let views = cfg
                .loss
                .ssl_active()
                .then(|| draw_views(data.affiliation, cfg.loss.mask_ratio, &mut first_view, &mut second_view));
            let (loss, grads) = backward(&params, &batch, ctx, views.as_ref(), cached.clone())?;
            if !loss.total.is_finite() {
                return Err(Error::NonFinite(format!("loss {} at epoch {epoch}", loss.total)));
            }
            adam_step(&mut params, &grads, &mut adam)?;
            for (s, v) in sums.iter_mut().zip([loss.rec, loss.ssl, loss.l2, loss.total]) {
                *s += v;
            }
        }
        let report = evaluate(&params, data.inputs, data.affiliation, &cfg.model, data.val, &[20], None, par)?;
        let (recall, ndcg) = (report.recall[0], report.ndcg[0]);
        let n = steps as f64;
        history.push(EpochRecord {
            epoch,
            l_rec: sums[0] / n,
            l_ssl: sums[1] / n,
            l2: sums[2] / n,
            total: sums[3] / n,
            val_recall20: recall,
            val_ndcg20: ndcg,
            seconds: start.elapsed().as_secs_f64(),
        });
        log::info!(
            "epoch {epoch}: loss {:.5} val recall@20 {recall:.4} ndcg@20 {ndcg:.4}",
            sums[3] / n
        );
        if ndcg > best.2 {
            best = (params.clone(), epoch, ndcg);
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                log::info!("no improvement for {stale} epochs, stopping");
                break;
            }
        }
    }
    Ok(TrainOutcome {
        params: best.0,
        best_epoch: best.1,
        best_ndcg20: best.2,
        history,
    })
}
