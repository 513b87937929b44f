use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;

use super::{ModelConfig, ModelParameters, RbfConfig};
use crate::community::AffiliationMatrix;
use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::graph::{InteractionGraph, NormWeights, SocialGraph};

/// Graph inputs shared by every forward pass: the training split, its
/// symmetric normalisation weights and the social graph.
#[derive(Clone, Copy)]
pub struct ModelInputs<'a> {
    pub train: &'a InteractionGraph,
    pub norm: &'a NormWeights,
    pub social: &'a SocialGraph,
}

impl ModelInputs<'_> {
    pub fn user_count(&self) -> usize {
        self.train.user_count()
    }
}

/// Outputs of the socially-connected-item branch. All three are treated as
/// constants by the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct SiaState {
    /// `m x d` behaviour embeddings built from detached item embeddings.
    pub behavior: Array2<f64>,
    /// One weight per entry of the social adjacency, in CSR order.
    pub attention: Vec<f64>,
    /// `m x d` aggregated friends' item signal.
    pub social_items: Array2<f64>,
}

impl SiaState {
    fn zeros(users: usize, dim: usize, entries: usize) -> Self {
        SiaState {
            behavior: Array2::zeros((users, dim)),
            attention: vec![0.0; entries],
            social_items: Array2::zeros((users, dim)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateOutput {
    /// `m x h` hidden pre-activations (empty when the gate is unused).
    pub pre_activation: Array2<f64>,
    pub alpha: Vec<f64>,
    /// `m x d` fused user embeddings.
    pub fused: Array2<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardState {
    /// `m x d` community-aware user embeddings.
    pub community_user: Array2<f64>,
    pub sia: Arc<SiaState>,
    pub gate: GateOutput,
    /// Final user embeddings after propagation.
    pub users: Array2<f64>,
    /// Final item embeddings after propagation.
    pub items: Array2<f64>,
}

#[inline]
pub(crate) fn row(data: &[f64], r: usize, width: usize) -> &[f64] {
    &data[r * width..(r + 1) * width]
}

#[inline]
pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean of the embeddings of each user's communities; empty rows give zero.
pub fn ceg_forward(affiliation: &AffiliationMatrix, community: &Array2<f64>, par: Parallelism) -> Array2<f64> {
    let d = community.ncols();
    let src = community.as_slice().expect("standard layout");
    let mut out = Array2::zeros((affiliation.user_count(), d));
    par.for_each_row(out.as_slice_mut().unwrap(), d, |u, dst| {
        let comms = affiliation.communities_of(u);
        if comms.is_empty() {
            return;
        }
        let w = 1.0 / comms.len() as f64;
        for &c in comms {
            axpy(dst, w, row(src, c as usize, d));
        }
    });
    out
}

/// `sum_i h_i / sqrt(d(u) d(i))` over each user's training items.
pub fn behavior_embeddings(
    train: &InteractionGraph,
    norm: &NormWeights,
    items: &Array2<f64>,
    par: Parallelism,
) -> Array2<f64> {
    let d = items.ncols();
    let src = items.as_slice().expect("standard layout");
    let mut out = Array2::zeros((train.user_count(), d));
    par.for_each_row(out.as_slice_mut().unwrap(), d, |u, dst| {
        let start = train.forward().row_range(u).start;
        for (k, &i) in train.items_of(u).iter().enumerate() {
            axpy(dst, norm.by_user[start + k], row(src, i as usize, d));
        }
    });
    out
}

/// Attention for one ordered pair of behaviour vectors:
/// `(1 + cos) / 2 * exp(-|a - b|^2 / (2 sigma^2))`, with cosine 0 when
/// either vector is zero.
pub fn attention_weight(a: &[f64], b: &[f64], rbf: RbfConfig) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    let cos = if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
    };
    let dist2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    0.5 * (1.0 + cos) * (-dist2 / (2.0 * rbf.sigma * rbf.sigma)).exp()
}

/// Attention weights aligned with the social adjacency entries.
pub fn social_attention(behavior: &Array2<f64>, social: &SocialGraph, rbf: RbfConfig, par: Parallelism) -> Vec<f64> {
    let d = behavior.ncols();
    let x = behavior.as_slice().expect("standard layout");
    par.map(social.user_count(), |u| {
        social
            .neighbors(u)
            .iter()
            .map(|&v| attention_weight(row(x, u, d), row(x, v as usize, d), rbf))
            .collect::<Vec<f64>>()
    })
    .concat()
}

/// `sum_v attn(u, v) / sqrt(d(u) d(v)) * x_v` over social neighbours.
pub fn sia_forward(social: &SocialGraph, behavior: &Array2<f64>, attention: &[f64], par: Parallelism) -> Array2<f64> {
    let d = behavior.ncols();
    let x = behavior.as_slice().expect("standard layout");
    let mut out = Array2::zeros((social.user_count(), d));
    par.for_each_row(out.as_slice_mut().unwrap(), d, |u, dst| {
        let du = social.degree(u) as f64;
        let start = social.adjacency().row_range(u).start;
        for (k, &v) in social.neighbors(u).iter().enumerate() {
            let w = attention[start + k] / (du * social.degree(v as usize) as f64).sqrt();
            axpy(dst, w, row(x, v as usize, d));
        }
    });
    out
}

/// Computes the branch from the current item embeddings.
pub fn sia_state(items: &Array2<f64>, inputs: ModelInputs<'_>, cfg: &ModelConfig, par: Parallelism) -> SiaState {
    if cfg.no_sia {
        return SiaState::zeros(inputs.user_count(), items.ncols(), inputs.social.adjacency().nnz());
    }
    let behavior = behavior_embeddings(inputs.train, inputs.norm, items, par);
    let attention = social_attention(&behavior, inputs.social, cfg.rbf, par);
    let social_items = sia_forward(inputs.social, &behavior, &attention, par);
    SiaState {
        behavior,
        attention,
        social_items,
    }
}

/// Keeps the gate strictly inside (0, 1) where the sigmoid rounds to 0 or 1.
const ALPHA_FLOOR: f64 = f64::EPSILON / 2.0;

#[inline]
pub(crate) fn leaky(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

/// Per-user scalar gate `sigmoid(leaky([h_c; h_s] W1) W2)` and the blend
/// `alpha h_c + (1 - alpha) h_s`.
pub fn gate_fusion(
    community_user: &Array2<f64>,
    social_items: &Array2<f64>,
    gate_hidden: &Array2<f64>,
    gate_out: &Array2<f64>,
    cfg: &ModelConfig,
    par: Parallelism,
) -> GateOutput {
    let (m, d) = community_user.dim();
    let hc = community_user.as_slice().expect("standard layout");
    let hs = social_items.as_slice().expect("standard layout");
    if cfg.no_sia {
        return GateOutput {
            pre_activation: Array2::zeros((m, 0)),
            alpha: vec![1.0; m],
            fused: community_user.clone(),
        };
    }
    let (pre_activation, alpha) = if cfg.sum_fusion {
        (Array2::zeros((m, 0)), vec![0.5; m])
    } else {
        let h = gate_hidden.ncols();
        let w1 = gate_hidden.as_slice().expect("standard layout");
        let w2 = gate_out.as_slice().expect("standard layout");
        let mut pre = Array2::zeros((m, h));
        par.for_each_row(pre.as_slice_mut().unwrap(), h, |u, z| {
            for (j, &x) in row(hc, u, d).iter().chain(row(hs, u, d)).enumerate() {
                axpy(z, x, row(w1, j, h));
            }
        });
        let z = pre.as_slice().unwrap();
        let alpha = par.map(m, |u| {
            let s: f64 = row(z, u, h)
                .iter()
                .zip(w2)
                .map(|(&zk, &wk)| leaky(zk, cfg.leaky_slope) * wk)
                .sum();
            sigmoid(s).clamp(ALPHA_FLOOR, 1.0 - ALPHA_FLOOR)
        });
        (pre, alpha)
    };
    let mut fused = Array2::zeros((m, d));
    par.for_each_row(fused.as_slice_mut().unwrap(), d, |u, dst| {
        let a = alpha[u];
        for ((o, &c), &s) in dst.iter_mut().zip(row(hc, u, d)).zip(row(hs, u, d)) {
            *o = a * c + (1.0 - a) * s;
        }
    });
    GateOutput {
        pre_activation,
        alpha,
        fused,
    }
}

/// Layer-sum LightGCN propagation over the normalised bipartite adjacency.
///
/// The propagation operator is symmetric, so the same routine maps output
/// gradients back to input gradients.
pub fn lightgcn_forward(
    users: &Array2<f64>,
    items: &Array2<f64>,
    train: &InteractionGraph,
    norm: &NormWeights,
    layers: usize,
    par: Parallelism,
) -> (Array2<f64>, Array2<f64>) {
    let d = users.ncols();
    let mut sum_u = users.as_standard_layout().into_owned();
    let mut sum_i = items.as_standard_layout().into_owned();
    let mut cur_u = sum_u.clone();
    let mut cur_i = sum_i.clone();
    for _ in 0..layers {
        let mut next_u = Array2::zeros(cur_u.dim());
        let mut next_i = Array2::zeros(cur_i.dim());
        {
            let src_i = cur_i.as_slice().unwrap();
            par.for_each_row(next_u.as_slice_mut().unwrap(), d, |u, dst| {
                let start = train.forward().row_range(u).start;
                for (k, &i) in train.items_of(u).iter().enumerate() {
                    axpy(dst, norm.by_user[start + k], row(src_i, i as usize, d));
                }
            });
            let src_u = cur_u.as_slice().unwrap();
            par.for_each_row(next_i.as_slice_mut().unwrap(), d, |i, dst| {
                let start = train.reverse().row_range(i).start;
                for (k, &u) in train.users_of(i).iter().enumerate() {
                    axpy(dst, norm.by_item[start + k], row(src_u, u as usize, d));
                }
            });
        }
        sum_u += &next_u;
        sum_i += &next_i;
        cur_u = next_u;
        cur_i = next_i;
    }
    (sum_u, sum_i)
}

/// Dot-product scores of `user` against `items`.
pub fn predict(users: &Array2<f64>, items: &Array2<f64>, user: usize, candidates: &[u32]) -> Result<Vec<f64>> {
    if user >= users.nrows() {
        return Err(Error::OutOfRange {
            what: "user",
            id: user,
            limit: users.nrows(),
        });
    }
    let eu = users.row(user);
    candidates
        .iter()
        .map(|&i| {
            if i as usize >= items.nrows() {
                return Err(Error::OutOfRange {
                    what: "item",
                    id: i as usize,
                    limit: items.nrows(),
                });
            }
            Ok(eu.dot(&items.row(i as usize)))
        })
        .collect()
}

/// Drops each membership independently with probability `ratio`.
pub fn mask_affiliation<R: Rng>(affiliation: &AffiliationMatrix, ratio: f64, rng: &mut R) -> AffiliationMatrix {
    let rows = affiliation
        .rows()
        .iter()
        .map(|r| r.iter().copied().filter(|_| rng.gen::<f64>() >= ratio).collect())
        .collect();
    AffiliationMatrix::from_rows(rows, affiliation.community_count()).expect("subset of a valid matrix")
}

/// Runs the whole pipeline: social branch (or `cached`), community
/// embeddings, gate, propagation.
pub fn full_forward(
    params: &ModelParameters,
    inputs: ModelInputs<'_>,
    affiliation: &AffiliationMatrix,
    cfg: &ModelConfig,
    cached: Option<Arc<SiaState>>,
    par: Parallelism,
) -> Result<ForwardState> {
    let m = inputs.user_count();
    if inputs.social.user_count() != m || affiliation.user_count() != m {
        return Err(Error::ShapeMismatch(format!(
            "user counts differ: train {m}, social {}, affiliation {}",
            inputs.social.user_count(),
            affiliation.user_count()
        )));
    }
    if affiliation.community_count() > params.community_count() {
        return Err(Error::ShapeMismatch(format!(
            "affiliation has {} communities, parameters {}",
            affiliation.community_count(),
            params.community_count()
        )));
    }
    if params.item_count() != inputs.train.item_count() {
        return Err(Error::ShapeMismatch(format!(
            "parameters have {} items, graph {}",
            params.item_count(),
            inputs.train.item_count()
        )));
    }
    params.check_shapes(cfg)?;
    let sia = match cached {
        Some(s) => s,
        None => Arc::new(sia_state(&params.items, inputs, cfg, par)),
    };
    let community_user = ceg_forward(affiliation, &params.community, par);
    let gate = gate_fusion(
        &community_user,
        &sia.social_items,
        &params.gate_hidden,
        &params.gate_out,
        cfg,
        par,
    );
    let (users, items) = lightgcn_forward(&gate.fused, &params.items, inputs.train, inputs.norm, cfg.layers, par);
    Ok(ForwardState {
        community_user,
        sia,
        gate,
        users,
        items,
    })
}
