use std::collections::HashSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{MetricsReport, UserMetrics};
use crate::error::{Error, Result};
use crate::graph::{build_interaction_graph, build_social_graph, EdgeKind, EdgeList, InteractionGraph, SocialGraph, SplitBundle};

/// Users bucketed by train degree into quartiles.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeGroups {
    /// Inclusive upper degree bound of each bucket.
    pub upper: [usize; 4],
    pub buckets: [Vec<u32>; 4],
}

/// Quartile buckets over `users` by train degree. Bounds use the nearest-rank
/// percentile; a user goes to the lowest bucket whose bound covers its degree.
pub fn degree_groups(train: &InteractionGraph, users: &[u32]) -> DegreeGroups {
    let mut degrees: Vec<usize> = users.iter().map(|&u| train.user_degree(u as usize)).collect();
    degrees.sort_unstable();
    let mut upper = [0usize; 4];
    if !degrees.is_empty() {
        let n = degrees.len();
        for (q, bound) in upper.iter_mut().enumerate() {
            let rank = ((q + 1) * n).div_ceil(4);
            *bound = degrees[rank.max(1) - 1];
        }
    }
    let mut buckets: [Vec<u32>; 4] = Default::default();
    for &u in users {
        let d = train.user_degree(u as usize);
        let b = upper.iter().position(|&ub| d <= ub).unwrap_or(3);
        buckets[b].push(u);
    }
    DegreeGroups { upper, buckets }
}

/// Per-bucket reports from per-user metrics; empty buckets are `None`.
pub fn degree_group_eval(ks: &[usize], rows: &[UserMetrics], groups: &DegreeGroups) -> [Option<MetricsReport>; 4] {
    let mut bucket_of = std::collections::HashMap::new();
    for (b, users) in groups.buckets.iter().enumerate() {
        for &u in users {
            bucket_of.insert(u, b);
        }
    }
    let mut split: [Vec<UserMetrics>; 4] = Default::default();
    for r in rows {
        if let Some(&b) = bucket_of.get(&r.user) {
            split[b].push(r.clone());
        }
    }
    split.map(|rows| (!rows.is_empty()).then(|| MetricsReport::from_users(ks, &rows)))
}

/// Reduced training data with a set of held-out users.
#[derive(Clone, Debug)]
pub struct ColdStart {
    pub split: SplitBundle,
    /// Held-out users, ascending. Their train interactions are removed;
    /// validation and test targets are kept.
    pub users: Vec<u32>,
    pub removed: usize,
}

/// Samples `count` users uniformly without replacement and drops all of
/// their training interactions.
pub fn make_coldstart_split(split: &SplitBundle, count: usize, seed: u64) -> Result<ColdStart> {
    let m = split.train.user_count();
    if count > m {
        return Err(Error::InvalidArgument(format!("cold-start count {count} exceeds {m} users")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut users: Vec<u32> = sample(&mut rng, m, count).into_iter().map(|u| u as u32).collect();
    users.sort_unstable();
    let kept: Vec<(u32, u32)> = split
        .train
        .edges()
        .filter(|(u, _)| users.binary_search(u).is_err())
        .collect();
    let removed = split.train.edge_count() - kept.len();
    let train = build_interaction_graph(
        &EdgeList::new(EdgeKind::Interaction, kept),
        m,
        split.train.item_count(),
    )?;
    Ok(ColdStart {
        split: SplitBundle {
            train,
            val: split.val.clone(),
            test: split.test.clone(),
            seed: split.seed,
        },
        users,
        removed,
    })
}

/// Replaces `floor(ratio * |E|)` uniformly chosen edges with uniformly random
/// pairs that are neither self-loops nor edges of the input graph.
pub fn inject_social_noise(social: &SocialGraph, ratio: f64, seed: u64) -> Result<SocialGraph> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::InvalidArgument(format!("noise ratio {ratio} outside [0, 1)")));
    }
    let m = social.user_count();
    let edges: Vec<(u32, u32)> = social.edges().collect();
    let k = (ratio * edges.len() as f64).floor() as usize;
    if k == 0 {
        return Ok(social.clone());
    }
    let pairs = m as u64 * (m as u64 - 1) / 2;
    if pairs - (edges.len() as u64) < k as u64 {
        return Err(Error::InvalidArgument(format!(
            "cannot place {k} replacement edges among {m} users"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drop: Vec<usize> = sample(&mut rng, edges.len(), k).into_vec();
    drop.sort_unstable();
    let mut added = HashSet::with_capacity(k);
    while added.len() < k {
        let a = rng.gen_range(0..m as u32);
        let b = rng.gen_range(0..m as u32);
        if a == b {
            continue;
        }
        let (a, b) = (a.min(b), a.max(b));
        if social.contains(a as usize, b) {
            continue;
        }
        added.insert((a, b));
    }
    let kept = edges
        .iter()
        .enumerate()
        .filter(|(i, _)| drop.binary_search(i).is_err())
        .map(|(_, &e)| e);
    let list = EdgeList::new(EdgeKind::Social, kept.chain(added));
    build_social_graph(&list, m)
}

/// Trainable scalar counts for the community model and the per-user
/// embedding baseline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamReport {
    pub users: usize,
    pub items: usize,
    pub communities: usize,
    pub dim: usize,
    pub hidden: usize,
    pub model_user_side: usize,
    pub model_item_side: usize,
    pub model_total: usize,
    pub lightgcn_user_side: usize,
    pub lightgcn_item_side: usize,
    pub lightgcn_total: usize,
    /// LightGCN user-side count over the community model's.
    pub user_side_ratio: f64,
    /// Fractional reduction of the total count.
    pub total_reduction: f64,
}

pub fn count_parameters(users: usize, items: usize, dim: usize, hidden: usize, communities: usize) -> ParamReport {
    let gate = if hidden == 0 { 0 } else { 2 * dim * hidden + hidden };
    let model_user_side = communities * dim + gate;
    let item_side = items * dim;
    let lightgcn_user_side = users * dim;
    let model_total = model_user_side + item_side;
    let lightgcn_total = lightgcn_user_side + item_side;
    ParamReport {
        users,
        items,
        communities,
        dim,
        hidden,
        model_user_side,
        model_item_side: item_side,
        model_total,
        lightgcn_user_side,
        lightgcn_item_side: item_side,
        lightgcn_total,
        user_side_ratio: lightgcn_user_side as f64 / model_user_side as f64,
        total_reduction: 1.0 - model_total as f64 / lightgcn_total as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{split_interactions, SplitMode};

    fn interactions(pairs: &[(u32, u32)], m: usize, n: usize) -> InteractionGraph {
        build_interaction_graph(&EdgeList::new(EdgeKind::Interaction, pairs.iter().copied()), m, n).unwrap()
    }

    #[test]
    fn census_examples() {
        let r = count_parameters(1, 1, 1, 1, 1);
        assert_eq!(r.model_user_side, 4);
        assert_eq!(r.lightgcn_user_side, 1);
        let douban = count_parameters(13_024, 22_347, 64, 64, 100);
        assert_eq!(douban.lightgcn_total, 2_263_744);
        let doubled = count_parameters(26_048, 22_347, 64, 64, 100);
        assert_eq!(douban.model_user_side, doubled.model_user_side);
    }

    #[test]
    fn equal_degrees_share_lowest_bucket() {
        let g = interactions(&[(0, 0), (1, 1), (2, 2), (3, 3)], 4, 4);
        let groups = degree_groups(&g, &[0, 1, 2, 3]);
        assert_eq!(groups.buckets[0], vec![0, 1, 2, 3]);
        assert!(groups.buckets[1..].iter().all(|b| b.is_empty()));
    }

    #[test]
    fn quartiles_split_distinct_degrees() {
        let mut pairs = Vec::new();
        for u in 0..8u32 {
            for i in 0..=u {
                pairs.push((u, i));
            }
        }
        let g = interactions(&pairs, 8, 8);
        let groups = degree_groups(&g, &(0..8).collect::<Vec<_>>());
        assert_eq!(groups.buckets, [vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]]);
        assert_eq!(groups.upper, [2, 4, 6, 8]);
    }

    #[test]
    fn bucket_means_recombine_to_overall() {
        let ks = [20];
        let rows: Vec<UserMetrics> = (0..8u32)
            .map(|u| UserMetrics { user: u, recall: vec![u as f64 / 8.0], ndcg: vec![(u as f64).sqrt() / 3.0] })
            .collect();
        let mut pairs = Vec::new();
        for u in 0..8u32 {
            for i in 0..(u % 3 + 1) {
                pairs.push((u, i));
            }
        }
        let g = interactions(&pairs, 8, 8);
        let groups = degree_groups(&g, &(0..8).collect::<Vec<_>>());
        let per = degree_group_eval(&ks, &rows, &groups);
        let overall = MetricsReport::from_users(&ks, &rows);
        let weighted: f64 = per.iter().flatten().map(|r| r.ndcg[0] * r.users as f64).sum::<f64>() / 8.0;
        assert!((weighted - overall.ndcg[0]).abs() < 1e-9);
        assert_eq!(groups.upper, [1, 2, 2, 3]);
        assert!(per[2].is_none());
    }

    fn bundle() -> SplitBundle {
        let mut pairs = Vec::new();
        for u in 0..20u32 {
            for i in 0..10u32 {
                if (u + i) % 3 != 0 {
                    pairs.push((u, i));
                }
            }
        }
        split_interactions(&EdgeList::new(EdgeKind::Interaction, pairs), 20, 10, (0.6, 0.2, 0.2), 5, SplitMode::Global)
            .unwrap()
    }

    #[test]
    fn coldstart_zero_is_identity() {
        let b = bundle();
        let cs = make_coldstart_split(&b, 0, 1).unwrap();
        assert!(cs.users.is_empty());
        assert_eq!(cs.split.train.to_edge_list(), b.train.to_edge_list());
    }

    #[test]
    fn coldstart_users_lose_all_train_edges() {
        let b = bundle();
        let cs = make_coldstart_split(&b, 5, 9).unwrap();
        assert_eq!(cs.users.len(), 5);
        for &u in &cs.users {
            assert_eq!(cs.split.train.user_degree(u as usize), 0);
        }
        let expected: usize = cs.users.iter().map(|&u| b.train.user_degree(u as usize)).sum();
        assert_eq!(cs.removed, expected);
        assert_eq!(cs.split.test, b.test);
        assert!(make_coldstart_split(&b, 21, 0).is_err());
    }

    fn ring(m: u32) -> SocialGraph {
        let edges = (0..m).flat_map(|u| [(u, (u + 1) % m), (u, (u + 2) % m)]);
        build_social_graph(&EdgeList::new(EdgeKind::Social, edges), m as usize).unwrap()
    }

    #[test]
    fn noise_preserves_count_and_removes_exact_fraction() {
        let s = ring(50);
        assert_eq!(s.edge_count(), 100);
        assert_eq!(inject_social_noise(&s, 0.0, 1).unwrap().to_edge_list(), s.to_edge_list());
        let noisy = inject_social_noise(&s, 0.2, 1).unwrap();
        assert_eq!(noisy.edge_count(), 100);
        let before: HashSet<_> = s.edges().collect();
        let after: HashSet<_> = noisy.edges().collect();
        assert_eq!(before.difference(&after).count(), 20);
        assert!(noisy.edges().all(|(a, b)| a != b));
        let again = inject_social_noise(&s, 0.2, 1).unwrap();
        assert_eq!(again.to_edge_list(), noisy.to_edge_list());
        assert!(inject_social_noise(&s, 1.0, 1).is_err());
    }
}
