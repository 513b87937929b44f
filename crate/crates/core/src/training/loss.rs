use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{Parallelism, REDUCTION_BLOCK};
use crate::model::{ModelParameters, TENSOR_NAMES};

/// Weights of the objective `L_rec + ssl_weight * L_ssl + l2_weight * |theta|^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub ssl_weight: f64,
    pub l2_weight: f64,
    pub temperature: f64,
    pub mask_ratio: f64,
    pub no_ssl: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            ssl_weight: 0.3,
            l2_weight: 1e-6,
            temperature: 0.2,
            mask_ratio: 0.1,
            no_ssl: false,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ssl_weight >= 0.0 && self.l2_weight >= 0.0) {
            return Err(Error::InvalidArgument("loss weights must be non-negative".into()));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidArgument("temperature must be positive".into()));
        }
        if !(self.mask_ratio > 0.0 && self.mask_ratio < 1.0) {
            return Err(Error::InvalidArgument("mask ratio must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn ssl_active(&self) -> bool {
        !self.no_ssl && self.ssl_weight > 0.0
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `-sum ln sigmoid(pos - neg)` over `(pos, neg)` score pairs.
pub fn bpr_loss(scores: &[(f64, f64)]) -> f64 {
    scores.iter().map(|&(p, n)| softplus(n - p)).sum()
}

/// Squared L2 norm of all trainable tensors.
pub fn l2_penalty(params: &ModelParameters) -> f64 {
    params.tensors().iter().map(|t| t.iter().map(|v| v * v).sum::<f64>()).sum()
}

/// Contrastive loss between two views of the user embeddings: each anchor's
/// own second view is the positive, every user's second view is in the
/// denominator.
pub fn infonce_loss(first: &Array2<f64>, second: &Array2<f64>, anchors: &[u32], temperature: f64) -> f64 {
    infonce(first, second, anchors, temperature, false, Parallelism::Sequential).0
}

/// Loss and gradients with respect to both views.
pub fn infonce_with_grad(
    first: &Array2<f64>,
    second: &Array2<f64>,
    anchors: &[u32],
    temperature: f64,
    par: Parallelism,
) -> (f64, Array2<f64>, Array2<f64>) {
    let (loss, grads) = infonce(first, second, anchors, temperature, true, par);
    let (g1, g2) = grads.expect("requested");
    (loss, g1, g2)
}

/// Row-normalised copy and the row norms. Zero rows stay zero.
fn normalize_rows(x: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
    let d = x.ncols();
    let data = x.as_standard_layout();
    let data = data.as_slice().unwrap();
    let mut out = data.to_vec();
    let mut norms = Vec::with_capacity(x.nrows());
    for r in out.chunks_mut(d.max(1)).take(x.nrows()) {
        let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.0 {
            r.iter_mut().for_each(|v| *v /= n);
        }
        norms.push(n);
    }
    (out, norms)
}

/// Gradient through `x / |x|`: `(g - (g . n) n) / |x|`.
fn unnormalize_grad(grad_unit: &mut [f64], unit: &[f64], norm: f64) {
    if norm == 0.0 {
        grad_unit.iter_mut().for_each(|g| *g = 0.0);
        return;
    }
    let proj: f64 = grad_unit.iter().zip(unit).map(|(g, n)| g * n).sum();
    for (g, n) in grad_unit.iter_mut().zip(unit) {
        *g = (*g - proj * n) / norm;
    }
}

type ViewGrads = (Array2<f64>, Array2<f64>);

fn infonce(
    first: &Array2<f64>,
    second: &Array2<f64>,
    anchors: &[u32],
    temperature: f64,
    want_grad: bool,
    par: Parallelism,
) -> (f64, Option<ViewGrads>) {
    let (m, d) = first.dim();
    let (a_unit, a_norm) = normalize_rows(first);
    let (b_unit, b_norm) = normalize_rows(second);
    let mut g_a = vec![0.0; m * d];
    let mut g_b = vec![0.0; m * d];
    let mut loss = 0.0;

    for block in anchors.chunks(REDUCTION_BLOCK) {
        // per anchor: loss term and d loss / d cos(a, b_v) for every v
        let rows = par.map(block.len(), |k| {
            let u = block[k] as usize;
            let au = &a_unit[u * d..(u + 1) * d];
            let logits: Vec<f64> = (0..m)
                .map(|v| {
                    let bv = &b_unit[v * d..(v + 1) * d];
                    au.iter().zip(bv).map(|(x, y)| x * y).sum::<f64>() / temperature
                })
                .collect();
            let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = logits.iter().map(|l| (l - top).exp()).sum();
            let term = top + denom.ln() - logits[u];
            let weights = want_grad.then(|| {
                let mut w: Vec<f64> = logits.iter().map(|l| (l - top).exp() / denom / temperature).collect();
                w[u] -= 1.0 / temperature;
                w
            });
            (term, weights)
        });
        for (term, _) in &rows {
            loss += term;
        }
        if !want_grad {
            continue;
        }
        for (k, &u) in block.iter().enumerate() {
            let w = rows[k].1.as_ref().unwrap();
            let dst = &mut g_a[u as usize * d..(u as usize + 1) * d];
            for (v, &wv) in w.iter().enumerate() {
                for (g, b) in dst.iter_mut().zip(&b_unit[v * d..(v + 1) * d]) {
                    *g += wv * b;
                }
            }
        }
        par.for_each_row(&mut g_b, d, |v, dst| {
            for (k, &u) in block.iter().enumerate() {
                let wv = rows[k].1.as_ref().unwrap()[v];
                for (g, a) in dst.iter_mut().zip(&a_unit[u as usize * d..(u as usize + 1) * d]) {
                    *g += wv * a;
                }
            }
        });
    }

    if !want_grad {
        return (loss, None);
    }
    par.for_each_row(&mut g_a, d, |u, g| unnormalize_grad(g, &a_unit[u * d..(u + 1) * d], a_norm[u]));
    par.for_each_row(&mut g_b, d, |v, g| unnormalize_grad(g, &b_unit[v * d..(v + 1) * d], b_norm[v]));
    let g_a = Array2::from_shape_vec((m, d), g_a).unwrap();
    let g_b = Array2::from_shape_vec((m, d), g_b).unwrap();
    (loss, Some((g_a, g_b)))
}

pub(crate) fn check_finite(name: &str, t: &Array2<f64>) -> Result<()> {
    if t.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("gradient of {name}")))
    }
}

pub(crate) fn tensor_name(k: usize) -> &'static str {
    TENSOR_NAMES[k]
}
