//! Dataset loading and the shared detect → split → train → evaluate chain.

use std::borrow::Cow;
use std::path::Path;
use std::time::Instant;

use sha2::{Digest, Sha256};
use socgcf::community::{detect_communities, AffiliationMatrix, Detection};
use socgcf::eval::{evaluate, per_user_metrics, MetricsReport, UserMetrics};
use socgcf::graph::{
    build_social_graph, load_edge_list, split_interactions, sym_norm_weights, EdgeKind, EdgeList, IdMap, NormWeights,
    SocialGraph, SplitBundle,
};
use socgcf::model::{full_forward, ModelInputs, ModelParameters};
use socgcf::training::{train, TrainData, TrainOutcome};

use crate::config::RunConfig;
use crate::CliError;

/// Interactions and friendships with contiguous internal ids.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub users: IdMap,
    pub items: IdMap,
    pub interactions: EdgeList,
    pub social: SocialGraph,
}

pub fn file_sha256(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn check_digest(path: &Path, expected: Option<&str>) -> Result<(), CliError> {
    if let Some(expected) = expected {
        let actual = file_sha256(path)?;
        if !actual.eq_ignore_ascii_case(expected) {
            return Err(CliError::Data(format!(
                "checksum mismatch for {}: expected {expected}, found {actual}",
                path.display()
            )));
        }
    }
    Ok(())
}

impl Dataset {
    /// Reads the configured files. Users are the union of ids seen in either
    /// file; items are the interaction targets.
    pub fn load(cfg: &RunConfig) -> Result<Self, CliError> {
        let inter_path = cfg
            .interactions
            .as_deref()
            .ok_or_else(|| CliError::Usage("no interactions file configured".into()))?;
        let social_path = cfg
            .social
            .as_deref()
            .ok_or_else(|| CliError::Usage("no social file configured".into()))?;
        check_digest(inter_path, cfg.interactions_sha256.as_deref())?;
        check_digest(social_path, cfg.social_sha256.as_deref())?;
        let raw_inter = load_edge_list(inter_path, EdgeKind::Interaction)?;
        let raw_social = load_edge_list(social_path, EdgeKind::Social)?;
        let users = IdMap::from_raw(
            raw_inter
                .pairs()
                .iter()
                .map(|p| p.0 as u64)
                .chain(raw_social.pairs().iter().flat_map(|&(a, b)| [a as u64, b as u64])),
        );
        let items = IdMap::from_raw(raw_inter.pairs().iter().map(|p| p.1 as u64));
        let interactions = raw_inter.remap(&users, &items)?;
        let social = build_social_graph(&raw_social.remap(&users, &users)?, users.len())?;
        log::info!(
            "loaded {} users, {} items, {} interactions, {} social relations",
            users.len(),
            items.len(),
            interactions.len(),
            social.edge_count()
        );
        Ok(Dataset {
            name: cfg.dataset.clone(),
            users,
            items,
            interactions,
            social,
        })
    }

    /// Wraps edge lists that already use ids `0..users` and `0..items`.
    pub fn from_internal(
        name: &str,
        users: usize,
        items: usize,
        interactions: EdgeList,
        social: &EdgeList,
    ) -> Result<Self, CliError> {
        Ok(Dataset {
            name: name.into(),
            users: IdMap::from_raw(0..users as u64),
            items: IdMap::from_raw(0..items as u64),
            interactions,
            social: build_social_graph(social, users)?,
        })
    }

    pub fn with_social(&self, social: SocialGraph) -> Self {
        Dataset {
            social,
            ..self.clone()
        }
    }
}

/// Split, normalisation and detected communities for one dataset.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub dataset: Dataset,
    pub split: SplitBundle,
    pub norm: NormWeights,
    pub detection: Detection,
    pub detect_seconds: f64,
}

pub fn detect(social: &SocialGraph, cfg: &RunConfig) -> (Detection, f64) {
    let start = Instant::now();
    let detection = detect_communities(social, cfg.resolution, cfg.theta, cfg.seed);
    (detection, start.elapsed().as_secs_f64())
}

pub fn prepare(dataset: Dataset, cfg: &RunConfig) -> Result<Prepared, CliError> {
    let split = split_interactions(
        &dataset.interactions,
        dataset.users.len(),
        dataset.items.len(),
        (cfg.split_train, cfg.split_val, cfg.split_test),
        cfg.split_seed,
        cfg.split_mode(),
    )?;
    let norm = sym_norm_weights(&split.train);
    let (detection, detect_seconds) = detect(&dataset.social, cfg);
    log::info!(
        "{} communities ({} memberships) in {detect_seconds:.2}s",
        detection.affiliation().community_count(),
        detection.affiliation().nnz()
    );
    Ok(Prepared {
        dataset,
        split,
        norm,
        detection,
        detect_seconds,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitName {
    Val,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

impl std::str::FromStr for SplitName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "val" => Ok(SplitName::Val),
            "test" => Ok(SplitName::Test),
            _ => Err(CliError::Usage(format!("unknown split {s:?} (expected val or test)"))),
        }
    }
}

impl Prepared {
    pub fn inputs(&self) -> ModelInputs<'_> {
        ModelInputs {
            train: &self.split.train,
            norm: &self.norm,
            social: &self.dataset.social,
        }
    }

    /// Detected memberships, or one community per user for the baseline.
    pub fn affiliation(&self, cfg: &RunConfig) -> Cow<'_, AffiliationMatrix> {
        if cfg.baseline_lightgcn {
            Cow::Owned(AffiliationMatrix::identity(self.dataset.users.len()))
        } else {
            Cow::Borrowed(self.detection.affiliation())
        }
    }

    /// Same graphs with a different training split.
    pub fn with_split(&self, split: SplitBundle) -> Self {
        Prepared {
            norm: sym_norm_weights(&split.train),
            split,
            ..self.clone()
        }
    }

    pub fn targets(&self, which: SplitName) -> &EdgeList {
        match which {
            SplitName::Val => &self.split.val,
            SplitName::Test => &self.split.test,
        }
    }

    pub fn train(&self, cfg: &RunConfig) -> Result<TrainOutcome, CliError> {
        let affiliation = self.affiliation(cfg);
        let data = TrainData {
            inputs: self.inputs(),
            affiliation: &affiliation,
            val: &self.split.val,
        };
        Ok(train(data, &cfg.train_config())?)
    }

    pub fn evaluate(
        &self,
        params: &ModelParameters,
        cfg: &RunConfig,
        which: SplitName,
        subset: Option<&[u32]>,
    ) -> Result<MetricsReport, CliError> {
        let affiliation = self.affiliation(cfg);
        Ok(evaluate(
            params,
            self.inputs(),
            &affiliation,
            &cfg.model_config(),
            self.targets(which),
            &cfg.ks,
            subset,
            cfg.parallelism(),
        )?)
    }

    pub fn per_user(
        &self,
        params: &ModelParameters,
        cfg: &RunConfig,
        which: SplitName,
    ) -> Result<Vec<UserMetrics>, CliError> {
        let affiliation = self.affiliation(cfg);
        let par = cfg.parallelism();
        let state = full_forward(params, self.inputs(), &affiliation, &cfg.model_config(), None, par)?;
        Ok(per_user_metrics(
            &state.users,
            &state.items,
            &self.split.train,
            self.targets(which),
            &cfg.ks,
            None,
            par,
        )?)
    }
}
