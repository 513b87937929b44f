//! Parameters, forward computations and checkpoints.

mod checkpoint;
pub(crate) mod forward;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use forward::{
    behavior_embeddings, ceg_forward, full_forward, gate_fusion, lightgcn_forward, mask_affiliation, predict,
    sia_forward, sia_state, social_attention, ForwardState, GateOutput, ModelInputs, SiaState,
};

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::training::xavier_init;

/// Bandwidth of the Gaussian factor in the social attention.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbfConfig {
    pub sigma: f64,
}

impl Default for RbfConfig {
    fn default() -> Self {
        RbfConfig { sigma: 1.0 }
    }
}

/// Architecture hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub rbf: RbfConfig,
    pub leaky_slope: f64,
    /// Drop the socially-connected-item branch; fused embedding is the
    /// community embedding.
    pub no_sia: bool,
    /// Replace the learned gate by a fixed 0.5 blend.
    pub sum_fusion: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dim: 64,
            hidden: 64,
            layers: 3,
            rbf: RbfConfig::default(),
            leaky_slope: 0.01,
            no_sia: false,
            sum_fusion: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        if !(self.rbf.sigma > 0.0) {
            return Err(Error::InvalidArgument("RBF bandwidth must be positive".into()));
        }
        Ok(())
    }

    /// True when the gate weights take part in the forward pass.
    pub fn uses_gate(&self) -> bool {
        !self.no_sia && !self.sum_fusion
    }
}

/// The complete trainable state. There is no per-user tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParameters {
    /// `|C| x d`
    pub community: Array2<f64>,
    /// `n x d`
    pub items: Array2<f64>,
    /// `2d x h`
    pub gate_hidden: Array2<f64>,
    /// `h x 1`
    pub gate_out: Array2<f64>,
}

impl ModelParameters {
    pub fn zeros(communities: usize, items: usize, dim: usize, hidden: usize) -> Self {
        ModelParameters {
            community: Array2::zeros((communities, dim)),
            items: Array2::zeros((items, dim)),
            gate_hidden: Array2::zeros((2 * dim, hidden)),
            gate_out: Array2::zeros((hidden, 1)),
        }
    }

    /// Xavier-uniform initialisation of all four tensors, drawn in a fixed
    /// order from `rng`.
    pub fn xavier<R: Rng>(communities: usize, items: usize, cfg: &ModelConfig, rng: &mut R) -> Self {
        ModelParameters {
            community: xavier_init((communities, cfg.dim), rng),
            items: xavier_init((items, cfg.dim), rng),
            gate_hidden: xavier_init((2 * cfg.dim, cfg.hidden), rng),
            gate_out: xavier_init((cfg.hidden, 1), rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.items.ncols()
    }

    pub fn hidden(&self) -> usize {
        self.gate_out.nrows()
    }

    pub fn community_count(&self) -> usize {
        self.community.nrows()
    }

    pub fn item_count(&self) -> usize {
        self.items.nrows()
    }

    pub fn tensors(&self) -> [&Array2<f64>; 4] {
        [&self.community, &self.items, &self.gate_hidden, &self.gate_out]
    }

    pub fn tensors_mut(&mut self) -> [&mut Array2<f64>; 4] {
        [
            &mut self.community,
            &mut self.items,
            &mut self.gate_hidden,
            &mut self.gate_out,
        ]
    }

    /// Total number of trainable scalars.
    pub fn scalar_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn check_shapes(&self, cfg: &ModelConfig) -> Result<()> {
        let d = cfg.dim;
        let ok = self.community.ncols() == d
            && self.items.ncols() == d
            && self.gate_hidden.dim() == (2 * d, cfg.hidden)
            && self.gate_out.dim() == (cfg.hidden, 1);
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "parameters (d={}, h={}) do not match config (d={}, h={})",
                self.dim(),
                self.hidden(),
                cfg.dim,
                cfg.hidden
            )))
        }
    }
}

pub const TENSOR_NAMES: [&str; 4] = ["community", "items", "gate_hidden", "gate_out"];
