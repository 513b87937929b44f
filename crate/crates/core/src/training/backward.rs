//! Objective and its analytic gradient.
//!
//! Gradient routes:
//! - items: propagation layers (main pass and both contrastive views) + L2
//! - community: community mean -> gate blend -> propagation
//! - gate weights: gate only
//!
//! The socially-connected-item branch is computed from detached item
//! embeddings, so nothing flows back into the items through it.

use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;

use super::loss::{check_finite, infonce_with_grad, l2_penalty, softplus, tensor_name, LossConfig};
use super::TripletBatch;
use crate::community::AffiliationMatrix;
use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::model::{
    full_forward, lightgcn_forward, mask_affiliation, ForwardState, ModelConfig, ModelInputs, ModelParameters,
    SiaState,
};
use crate::model::forward::{axpy, dot, leaky, row, sigmoid};

/// One gradient tensor per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub community: Array2<f64>,
    pub items: Array2<f64>,
    pub gate_hidden: Array2<f64>,
    pub gate_out: Array2<f64>,
}

impl Gradients {
    pub fn zeros_like(p: &ModelParameters) -> Self {
        Gradients {
            community: Array2::zeros(p.community.dim()),
            items: Array2::zeros(p.items.dim()),
            gate_hidden: Array2::zeros(p.gate_hidden.dim()),
            gate_out: Array2::zeros(p.gate_out.dim()),
        }
    }

    pub fn tensors(&self) -> [&Array2<f64>; 4] {
        [&self.community, &self.items, &self.gate_hidden, &self.gate_out]
    }

    pub fn check_finite(&self) -> Result<()> {
        for (k, t) in self.tensors().into_iter().enumerate() {
            check_finite(tensor_name(k), t)?;
        }
        Ok(())
    }
}

/// Two independently masked affiliation matrices.
#[derive(Clone, Debug)]
pub struct SslViews {
    pub first: AffiliationMatrix,
    pub second: AffiliationMatrix,
}

pub fn draw_views<R1: Rng, R2: Rng>(
    affiliation: &AffiliationMatrix,
    ratio: f64,
    first_rng: &mut R1,
    second_rng: &mut R2,
) -> SslViews {
    SslViews {
        first: mask_affiliation(affiliation, ratio, first_rng),
        second: mask_affiliation(affiliation, ratio, second_rng),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub rec: f64,
    /// Unweighted contrastive loss (0 when disabled).
    pub ssl: f64,
    /// Unweighted squared norm of the parameters.
    pub l2: f64,
    pub total: f64,
}

/// Everything a training step needs besides parameters and batch.
#[derive(Clone, Copy)]
pub struct StepContext<'a> {
    pub inputs: ModelInputs<'a>,
    pub affiliation: &'a AffiliationMatrix,
    pub model: &'a ModelConfig,
    pub loss: &'a LossConfig,
    pub par: Parallelism,
}

struct Evaluated {
    breakdown: LossBreakdown,
    main: ForwardState,
    views: Option<(ForwardState, ForwardState)>,
    anchors: Vec<u32>,
}

fn evaluate(
    params: &ModelParameters,
    batch: &TripletBatch,
    ctx: StepContext<'_>,
    views: Option<&SslViews>,
    sia: Option<Arc<SiaState>>,
    ssl_value: bool,
) -> Result<Evaluated> {
    let main = full_forward(params, ctx.inputs, ctx.affiliation, ctx.model, sia, ctx.par)?;
    let (n_users, n_items) = (main.users.nrows(), main.items.nrows());
    let mut rec = 0.0;
    for &(u, i, j) in &batch.triples {
        if u as usize >= n_users || i as usize >= n_items || j as usize >= n_items {
            return Err(Error::OutOfRange {
                what: "triple id",
                id: u.max(i).max(j) as usize,
                limit: n_users.min(n_items),
            });
        }
        let eu = main.users.row(u as usize);
        let diff = eu.dot(&main.items.row(i as usize)) - eu.dot(&main.items.row(j as usize));
        rec += softplus(-diff);
    }
    let anchors = batch.users();
    let (ssl, view_states) = if ctx.loss.ssl_active() {
        let views = views.ok_or_else(|| Error::InvalidArgument("contrastive loss needs two masked views".into()))?;
        let first = full_forward(params, ctx.inputs, &views.first, ctx.model, Some(main.sia.clone()), ctx.par)?;
        let second = full_forward(params, ctx.inputs, &views.second, ctx.model, Some(main.sia.clone()), ctx.par)?;
        let ssl = if ssl_value {
            super::infonce_loss(&first.users, &second.users, &anchors, ctx.loss.temperature)
        } else {
            0.0
        };
        (ssl, Some((first, second)))
    } else {
        (0.0, None)
    };
    let l2 = l2_penalty(params);
    let total = rec + ctx.loss.ssl_weight * ssl + ctx.loss.l2_weight * l2;
    Ok(Evaluated {
        breakdown: LossBreakdown { rec, ssl, l2, total },
        main,
        views: view_states,
        anchors,
    })
}

/// Objective value. `sia` optionally fixes the socially-connected-item
/// branch (otherwise it is recomputed from the current items).
pub fn total_loss(
    params: &ModelParameters,
    batch: &TripletBatch,
    ctx: StepContext<'_>,
    views: Option<&SslViews>,
    sia: Option<Arc<SiaState>>,
) -> Result<LossBreakdown> {
    Ok(evaluate(params, batch, ctx, views, sia, true)?.breakdown)
}

/// Objective value and its gradient with respect to every parameter tensor.
pub fn backward(
    params: &ModelParameters,
    batch: &TripletBatch,
    ctx: StepContext<'_>,
    views: Option<&SslViews>,
    sia: Option<Arc<SiaState>>,
) -> Result<(LossBreakdown, Gradients)> {
    let mut ev = evaluate(params, batch, ctx, views, sia, false)?;
    let d = params.dim();
    let mut grads = Gradients::zeros_like(params);

    // ranking loss
    let mut g_users = Array2::<f64>::zeros(ev.main.users.dim());
    let mut g_items = Array2::<f64>::zeros(ev.main.items.dim());
    {
        let eu_all = ev.main.users.as_slice().unwrap();
        let ei_all = ev.main.items.as_slice().unwrap();
        let gu = g_users.as_slice_mut().unwrap();
        let gi = g_items.as_slice_mut().unwrap();
        for &(u, i, j) in &batch.triples {
            let (u, i, j) = (u as usize, i as usize, j as usize);
            let eu = row(eu_all, u, d);
            let (ei, ej) = (row(ei_all, i, d), row(ei_all, j, d));
            let diff = dot(eu, ei) - dot(eu, ej);
            // d softplus(-diff) / d diff
            let g = -sigmoid(-diff);
            for k in 0..d {
                gu[u * d + k] += g * (ei[k] - ej[k]);
                gi[i * d + k] += g * eu[k];
                gi[j * d + k] -= g * eu[k];
            }
        }
    }
    backprop_state(params, &ev.main, ctx.affiliation, &g_users, &g_items, ctx, &mut grads);

    if let (Some((first, second)), Some(views)) = (ev.views.take(), views) {
        let (ssl, mut g_first, mut g_second) =
            infonce_with_grad(&first.users, &second.users, &ev.anchors, ctx.loss.temperature, ctx.par);
        ev.breakdown.ssl = ssl;
        ev.breakdown.total += ctx.loss.ssl_weight * ssl;
        g_first *= ctx.loss.ssl_weight;
        g_second *= ctx.loss.ssl_weight;
        let no_items = Array2::zeros(first.items.dim());
        backprop_state(params, &first, &views.first, &g_first, &no_items, ctx, &mut grads);
        backprop_state(params, &second, &views.second, &g_second, &no_items, ctx, &mut grads);
    }

    let l2 = 2.0 * ctx.loss.l2_weight;
    grads.community.scaled_add(l2, &params.community);
    grads.items.scaled_add(l2, &params.items);
    grads.gate_hidden.scaled_add(l2, &params.gate_hidden);
    grads.gate_out.scaled_add(l2, &params.gate_out);
    Ok((ev.breakdown, grads))
}

/// Pushes gradients of the propagated embeddings back to the parameters
/// for one forward pass.
fn backprop_state(
    params: &ModelParameters,
    state: &ForwardState,
    affiliation: &AffiliationMatrix,
    g_users_out: &Array2<f64>,
    g_items_out: &Array2<f64>,
    ctx: StepContext<'_>,
    grads: &mut Gradients,
) {
    let par = ctx.par;
    let cfg = ctx.model;
    let (m, d) = state.community_user.dim();
    let (g_fused, g_items0) = lightgcn_forward(
        g_users_out,
        g_items_out,
        ctx.inputs.train,
        ctx.inputs.norm,
        cfg.layers,
        par,
    );
    grads.items += &g_items0;

    let gp = g_fused.as_slice().unwrap();
    let hc = state.community_user.as_slice().unwrap();
    let hs = state.sia.social_items.as_slice().unwrap();
    let alpha = &state.gate.alpha;

    // gradient w.r.t. the community-aware user embeddings
    let mut g_hc = Array2::<f64>::zeros((m, d));
    if cfg.no_sia {
        g_hc.assign(&g_fused);
    } else if cfg.sum_fusion {
        g_hc.scaled_add(0.5, &g_fused);
    } else {
        let h = params.hidden();
        let w1 = params.gate_hidden.as_slice().unwrap();
        let w2 = params.gate_out.as_slice().unwrap();
        let z = state.gate.pre_activation.as_slice().unwrap();
        let slope = cfg.leaky_slope;
        // d loss / d (pre-sigmoid gate logit) per user
        let g_logit: Vec<f64> = par.map(m, |u| {
            let diff: f64 = row(gp, u, d)
                .iter()
                .zip(row(hc, u, d).iter().zip(row(hs, u, d)))
                .map(|(g, (c, s))| g * (c - s))
                .sum();
            diff * alpha[u] * (1.0 - alpha[u])
        });
        let g_pre = |u: usize, k: usize| {
            let zk = z[u * h + k];
            let deriv = if zk > 0.0 { 1.0 } else { slope };
            g_logit[u] * w2[k] * deriv
        };
        par.for_each_row(g_hc.as_slice_mut().unwrap(), d, |u, dst| {
            for (o, g) in dst.iter_mut().zip(row(gp, u, d)) {
                *o = alpha[u] * g;
            }
            for k in 0..h {
                let gz = g_pre(u, k);
                if gz == 0.0 {
                    continue;
                }
                for (j, o) in dst.iter_mut().enumerate() {
                    *o += w1[j * h + k] * gz;
                }
            }
        });
        let reduced = par.blocked_sum(m, 2 * d * h + h, |u, acc| {
            let (acc_w1, acc_w2) = acc.split_at_mut(2 * d * h);
            let gl = g_logit[u];
            if gl == 0.0 {
                return;
            }
            for k in 0..h {
                acc_w2[k] += leaky(z[u * h + k], slope) * gl;
            }
            let gz: Vec<f64> = (0..h).map(|k| g_pre(u, k)).collect();
            for (j, &x) in row(hc, u, d).iter().chain(row(hs, u, d)).enumerate() {
                axpy(&mut acc_w1[j * h..(j + 1) * h], x, &gz);
            }
        });
        let (r1, r2) = reduced.split_at(2 * d * h);
        for (g, r) in grads.gate_hidden.iter_mut().zip(r1) {
            *g += r;
        }
        for (g, r) in grads.gate_out.iter_mut().zip(r2) {
            *g += r;
        }
    }

    // community mean
    let members = affiliation.members();
    let ghc = g_hc.as_slice().unwrap();
    let mut g_comm = Array2::<f64>::zeros(params.community.dim());
    par.for_each_row(g_comm.as_slice_mut().unwrap(), d, |c, dst| {
        if let Some(users) = members.get(c) {
            for &u in users {
                let w = 1.0 / affiliation.communities_of(u as usize).len() as f64;
                axpy(dst, w, row(ghc, u as usize, d));
            }
        }
    });
    grads.community += &g_comm;
}
