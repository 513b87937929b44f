use ndarray::Array2;

use super::metrics::{ndcg_at_k, recall_at_k, MetricsReport, UserMetrics};
use crate::community::AffiliationMatrix;
use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::graph::{EdgeList, InteractionGraph};
use crate::model::{full_forward, ModelConfig, ModelInputs, ModelParameters};

/// Highest-scoring `k` item ids outside `exclude` (sorted), ties broken by
/// ascending id.
pub fn top_k(scores: &[f64], exclude: &[u32], k: usize) -> Vec<u32> {
    let order = |a: &(f64, u32), b: &(f64, u32)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    let mut cands: Vec<(f64, u32)> = scores
        .iter()
        .enumerate()
        .filter(|(i, _)| exclude.binary_search(&(*i as u32)).is_err())
        .map(|(i, &s)| (s, i as u32))
        .collect();
    if k == 0 {
        return Vec::new();
    }
    if cands.len() > k {
        cands.select_nth_unstable_by(k - 1, order);
        cands.truncate(k);
    }
    cands.sort_unstable_by(order);
    cands.into_iter().map(|c| c.1).collect()
}

/// Relevant items per user, from sorted target pairs.
fn group_targets(targets: &EdgeList, users: usize) -> Vec<&[(u32, u32)]> {
    let pairs = targets.pairs();
    let mut out = vec![&pairs[0..0]; users];
    let mut start = 0;
    while start < pairs.len() {
        let u = pairs[start].0;
        let end = start + pairs[start..].iter().take_while(|p| p.0 == u).count();
        if (u as usize) < users {
            out[u as usize] = &pairs[start..end];
        }
        start = end;
    }
    out
}

/// Metrics for every user with at least one target (restricted to `subset`
/// when given), ranking all items except the user's training items.
pub fn per_user_metrics(
    user_emb: &Array2<f64>,
    item_emb: &Array2<f64>,
    train: &InteractionGraph,
    targets: &EdgeList,
    ks: &[usize],
    subset: Option<&[u32]>,
    par: Parallelism,
) -> Result<Vec<UserMetrics>> {
    let m = user_emb.nrows();
    if train.user_count() != m || train.item_count() != item_emb.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "embeddings {}x{} vs graph {}x{}",
            m,
            item_emb.nrows(),
            train.user_count(),
            train.item_count()
        )));
    }
    if let Some(&(u, i)) = targets
        .pairs()
        .iter()
        .find(|&&(u, i)| u as usize >= m || i as usize >= item_emb.nrows())
    {
        return Err(Error::OutOfRange {
            what: "target",
            id: u.max(i) as usize,
            limit: m.min(item_emb.nrows()),
        });
    }
    let grouped = group_targets(targets, m);
    let users: Vec<u32> = match subset {
        Some(s) => s.iter().copied().filter(|&u| (u as usize) < m && !grouped[u as usize].is_empty()).collect(),
        None => (0..m as u32).filter(|&u| !grouped[u as usize].is_empty()).collect(),
    };
    let max_k = ks.iter().copied().max().unwrap_or(0);
    Ok(par.map(users.len(), |k| {
        let u = users[k] as usize;
        let eu = user_emb.row(u);
        let scores: Vec<f64> = item_emb.rows().into_iter().map(|ei| eu.dot(&ei)).collect();
        let ranked = top_k(&scores, train.items_of(u), max_k);
        let relevant: Vec<u32> = grouped[u].iter().map(|p| p.1).collect();
        UserMetrics {
            user: u as u32,
            recall: ks.iter().map(|&k| recall_at_k(&ranked, &relevant, k)).collect(),
            ndcg: ks.iter().map(|&k| ndcg_at_k(&ranked, &relevant, k)).collect(),
        }
    }))
}

pub fn evaluate_embeddings(
    user_emb: &Array2<f64>,
    item_emb: &Array2<f64>,
    train: &InteractionGraph,
    targets: &EdgeList,
    ks: &[usize],
    subset: Option<&[u32]>,
    par: Parallelism,
) -> Result<MetricsReport> {
    let rows = per_user_metrics(user_emb, item_emb, train, targets, ks, subset, par)?;
    Ok(MetricsReport::from_users(ks, &rows))
}

/// Forward pass with the full affiliation matrix followed by full-ranking
/// evaluation against `targets`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    params: &ModelParameters,
    inputs: ModelInputs<'_>,
    affiliation: &AffiliationMatrix,
    cfg: &ModelConfig,
    targets: &EdgeList,
    ks: &[usize],
    subset: Option<&[u32]>,
    par: Parallelism,
) -> Result<MetricsReport> {
    let state = full_forward(params, inputs, affiliation, cfg, None, par)?;
    evaluate_embeddings(&state.users, &state.items, inputs.train, targets, ks, subset, par)
}

/// Expected NDCG@k of a ranker that orders each user's candidates uniformly
/// at random, averaged over users with targets.
pub fn uniform_random_ndcg(train: &InteractionGraph, targets: &EdgeList, k: usize) -> f64 {
    let grouped = group_targets(targets, train.user_count());
    let mut total = 0.0;
    let mut users = 0usize;
    for (u, rel) in grouped.iter().enumerate() {
        if rel.is_empty() {
            continue;
        }
        let candidates = (train.item_count() - train.user_degree(u)) as f64;
        let r = rel.len();
        let p = r as f64 / candidates;
        let gain = |pos: usize| 1.0 / ((pos + 2) as f64).log2();
        let dcg: f64 = (0..k.min(candidates as usize)).map(|pos| p * gain(pos)).sum();
        let ideal: f64 = (0..k.min(r)).map(gain).sum();
        total += dcg / ideal;
        users += 1;
    }
    if users == 0 {
        0.0
    } else {
        total / users as f64
    }
}
