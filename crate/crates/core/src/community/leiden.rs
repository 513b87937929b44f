//! Leiden community detection on an unweighted, undirected social graph.
//!
//! Quality function is modularity with a resolution parameter:
//! `Q = sum_c [ L_c / M - gamma * (K_c / 2M)^2 ]` with `M` the edge count,
//! `L_c` the internal edges and `K_c` the total degree of community `c`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Partition;
use crate::graph::SocialGraph;

/// Randomness of the refinement step.
const REFINE_TEMPERATURE: f64 = 0.01;
const MAX_LEVELS: usize = 100;
/// Moves must improve the quality by more than this (relative to `2M`).
const GAIN_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Phase {
    LocalMove,
    Refine,
    Aggregate,
    SplitDisconnected,
}

/// Modularity of the maintained partition after one phase, measured on the
/// original graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseRecord {
    pub level: usize,
    pub phase: Phase,
    pub modularity: f64,
}

/// Modularity of a labelling; nodes labelled `None` must be isolated.
pub fn modularity(social: &SocialGraph, labels: &[Option<u32>], resolution: f64) -> f64 {
    let edges = social.edge_count() as f64;
    if edges == 0.0 {
        return 0.0;
    }
    let communities = labels.iter().flatten().map(|&c| c as usize + 1).max().unwrap_or(0);
    let mut internal = vec![0.0; communities];
    let mut degree = vec![0.0; communities];
    for u in 0..social.user_count() {
        let Some(cu) = labels[u] else { continue };
        degree[cu as usize] += social.degree(u) as f64;
        for &v in social.neighbors(u) {
            if labels[v as usize] == Some(cu) {
                internal[cu as usize] += 0.5;
            }
        }
    }
    internal
        .iter()
        .zip(&degree)
        .map(|(l, k)| l / edges - resolution * (k / (2.0 * edges)).powi(2))
        .sum()
}

struct WeightedGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    node_weight: Vec<f64>,
}

impl WeightedGraph {
    fn from_social(social: &SocialGraph) -> Self {
        let adj = social.adjacency();
        let n = social.user_count();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::with_capacity(adj.nnz());
        for u in 0..n {
            targets.extend_from_slice(adj.row(u));
            offsets.push(targets.len());
        }
        WeightedGraph {
            weights: vec![1.0; targets.len()],
            node_weight: (0..n).map(|u| social.degree(u) as f64).collect(),
            offsets,
            targets,
        }
    }

    fn len(&self) -> usize {
        self.node_weight.len()
    }

    fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.targets[r.clone()]
            .iter()
            .zip(&self.weights[r])
            .map(|(&t, &w)| (t as usize, w))
    }

    /// Collapses nodes sharing a label into one node; inter-label edge
    /// weights are summed, intra-label edges fold into the node weight only.
    fn aggregate(&self, labels: &[u32], count: usize) -> WeightedGraph {
        let mut node_weight = vec![0.0; count];
        let mut triples = Vec::new();
        for v in 0..self.len() {
            let a = labels[v];
            node_weight[a as usize] += self.node_weight[v];
            for (u, w) in self.neighbors(v) {
                let b = labels[u];
                if a != b {
                    triples.push((a, b, w));
                }
            }
        }
        triples.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut offsets = vec![0usize; count + 1];
        let mut targets = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut last: Option<(u32, u32)> = None;
        for (a, b, w) in triples {
            if last == Some((a, b)) {
                *weights.last_mut().unwrap() += w;
            } else {
                targets.push(b);
                weights.push(w);
                offsets[a as usize + 1] += 1;
                last = Some((a, b));
            }
        }
        for i in 0..count {
            offsets[i + 1] += offsets[i];
        }
        WeightedGraph {
            offsets,
            targets,
            weights,
            node_weight,
        }
    }
}

/// Relabels to `0..k` in order of first appearance.
fn renumber(labels: &mut [u32]) -> usize {
    let mut map = vec![u32::MAX; labels.len()];
    let mut next = 0u32;
    for l in labels.iter_mut() {
        let slot = &mut map[*l as usize];
        if *slot == u32::MAX {
            *slot = next;
            next += 1;
        }
        *l = *slot;
    }
    next as usize
}

struct Mover<'g> {
    graph: &'g WeightedGraph,
    resolution: f64,
    two_m: f64,
}

impl Mover<'_> {
    /// Queue-based local moving. Returns true if any node changed community.
    fn local_move(&self, labels: &mut [u32], rng: &mut ChaCha8Rng) -> bool {
        let n = self.graph.len();
        let mut comm_weight = vec![0.0; n];
        let mut comm_size = vec![0usize; n];
        for v in 0..n {
            comm_weight[labels[v] as usize] += self.graph.node_weight[v];
            comm_size[labels[v] as usize] += 1;
        }
        let mut empty: Vec<u32> = (0..n as u32).filter(|&c| comm_size[c as usize] == 0).rev().collect();

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut queue: std::collections::VecDeque<usize> = order.into();
        let mut queued = vec![true; n];
        let mut link = vec![0.0; n];
        let mut touched: Vec<u32> = Vec::new();
        let mut moved = false;

        while let Some(v) = queue.pop_front() {
            queued[v] = false;
            let kv = self.graph.node_weight[v];
            let own = labels[v];
            for (u, w) in self.graph.neighbors(v) {
                let c = labels[u];
                if link[c as usize] == 0.0 {
                    touched.push(c);
                }
                link[c as usize] += w;
            }
            let scale = self.resolution * kv / self.two_m;
            let own_gain = link[own as usize] - scale * (comm_weight[own as usize] - kv);
            let mut best = own;
            let mut best_gain = own_gain;
            touched.sort_unstable();
            for &c in &touched {
                if c == own {
                    continue;
                }
                let gain = link[c as usize] - scale * comm_weight[c as usize];
                if gain > best_gain + GAIN_EPS * self.two_m.max(1.0) {
                    best = c;
                    best_gain = gain;
                }
            }
            if comm_size[own as usize] > 1 && 0.0 > best_gain + GAIN_EPS * self.two_m.max(1.0) {
                best = *empty.last().expect("a non-singleton community frees an id");
            }
            for &c in &touched {
                link[c as usize] = 0.0;
            }
            touched.clear();

            if best != own {
                if Some(&best) == empty.last() {
                    empty.pop();
                }
                comm_weight[own as usize] -= kv;
                comm_size[own as usize] -= 1;
                if comm_size[own as usize] == 0 {
                    empty.push(own);
                }
                comm_weight[best as usize] += kv;
                comm_size[best as usize] += 1;
                labels[v] = best;
                moved = true;
                for (u, _) in self.graph.neighbors(v) {
                    if !queued[u] && labels[u] != best {
                        queued[u] = true;
                        queue.push_back(u);
                    }
                }
            }
        }
        moved
    }

    /// Splits each community of `labels` into well-connected subcommunities.
    /// Returns the refined labels (not renumbered).
    fn refine(&self, labels: &[u32], rng: &mut ChaCha8Rng) -> Vec<u32> {
        let n = self.graph.len();
        let mut outer_weight = vec![0.0; n];
        for v in 0..n {
            outer_weight[labels[v] as usize] += self.graph.node_weight[v];
        }
        let mut refined: Vec<u32> = (0..n as u32).collect();
        let mut ref_weight = self.graph.node_weight.clone();
        let mut ref_size = vec![1usize; n];
        // weight from each refined community to the rest of its outer community
        let mut ref_external: Vec<f64> = (0..n)
            .map(|v| {
                self.graph
                    .neighbors(v)
                    .filter(|&(u, _)| labels[u] == labels[v])
                    .map(|(_, w)| w)
                    .sum()
            })
            .collect();

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut link = vec![0.0; n];
        let mut touched: Vec<u32> = Vec::new();
        let mut candidates: Vec<(u32, f64)> = Vec::new();

        for v in order {
            let own = refined[v];
            if ref_size[own as usize] != 1 {
                continue;
            }
            let kv = self.graph.node_weight[v];
            let outer = labels[v];
            let k_outer = outer_weight[outer as usize];
            let connect = |ext: f64, k: f64| ext >= self.resolution * k * (k_outer - k) / self.two_m;
            if !connect(ref_external[v], kv) {
                continue;
            }
            for (u, w) in self.graph.neighbors(v) {
                if labels[u] != outer {
                    continue;
                }
                let c = refined[u];
                if link[c as usize] == 0.0 {
                    touched.push(c);
                }
                link[c as usize] += w;
            }
            touched.sort_unstable();
            candidates.clear();
            candidates.push((own, 0.0));
            for &c in &touched {
                if c == own || !connect(ref_external[c as usize], ref_weight[c as usize]) {
                    continue;
                }
                let gain = link[c as usize] - self.resolution * kv * ref_weight[c as usize] / self.two_m;
                if gain >= 0.0 {
                    candidates.push((c, gain));
                }
            }
            let chosen = if candidates.len() == 1 {
                own
            } else {
                let top = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
                let total: f64 = candidates
                    .iter()
                    .map(|c| ((c.1 - top) / REFINE_TEMPERATURE).exp())
                    .sum();
                let mut draw = rng.gen::<f64>() * total;
                let mut pick = candidates.last().unwrap().0;
                for &(c, g) in &candidates {
                    draw -= ((g - top) / REFINE_TEMPERATURE).exp();
                    if draw <= 0.0 {
                        pick = c;
                        break;
                    }
                }
                pick
            };
            if chosen != own {
                let to = chosen as usize;
                ref_external[to] += ref_external[v] - 2.0 * link[to];
                ref_weight[to] += kv;
                ref_size[to] += 1;
                ref_size[own as usize] = 0;
                refined[v] = chosen;
            }
            for &c in &touched {
                link[c as usize] = 0.0;
            }
            touched.clear();
        }
        refined
    }
}

/// Runs Leiden and returns the partition together with the modularity
/// trace of the maintained partition after every phase.
pub fn leiden_with_trace(social: &SocialGraph, resolution: f64, seed: u64) -> (Partition, Vec<PhaseRecord>) {
    let n = social.user_count();
    let mut trace = Vec::new();
    if n == 0 {
        return (Partition::from_labels(Vec::new(), 0.0), trace);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let two_m = social.total_degree() as f64;
    let mut graph = WeightedGraph::from_social(social);
    // aggregate node of every original node
    let mut membership: Vec<u32> = (0..n as u32).collect();
    let mut labels: Vec<u32> = (0..n as u32).collect();

    let project = |membership: &[u32], labels: &[u32]| -> Vec<Option<u32>> {
        membership.iter().map(|&a| Some(labels[a as usize])).collect()
    };

    for level in 0..MAX_LEVELS {
        let mover = Mover {
            graph: &graph,
            resolution,
            two_m: two_m.max(1.0),
        };
        mover.local_move(&mut labels, &mut rng);
        let count = renumber(&mut labels);
        let q = modularity(social, &project(&membership, &labels), resolution);
        trace.push(PhaseRecord { level, phase: Phase::LocalMove, modularity: q });
        if count == graph.len() {
            break;
        }

        let mut refined = mover.refine(&labels, &mut rng);
        let refined_count = renumber(&mut refined);
        trace.push(PhaseRecord { level, phase: Phase::Refine, modularity: q });
        if refined_count == graph.len() {
            // refinement kept every node apart; aggregation would not shrink the graph
            break;
        }

        let mut next_labels = vec![0u32; refined_count];
        for v in 0..graph.len() {
            next_labels[refined[v] as usize] = labels[v];
        }
        graph = graph.aggregate(&refined, refined_count);
        for m in membership.iter_mut() {
            *m = refined[*m as usize];
        }
        labels = next_labels;
        let q_agg = modularity(social, &project(&membership, &labels), resolution);
        trace.push(PhaseRecord { level, phase: Phase::Aggregate, modularity: q_agg });
    }

    let mut flat: Vec<u32> = membership.iter().map(|&a| labels[a as usize]).collect();
    split_disconnected(social, &mut flat);
    let assignment: Vec<Option<u32>> = flat
        .iter()
        .enumerate()
        .map(|(u, &c)| (social.degree(u) > 0).then_some(c))
        .collect();
    let mut partition = Partition::from_labels(assignment, 0.0);
    partition.modularity = modularity(social, partition.assignment(), resolution);
    trace.push(PhaseRecord {
        level: trace.last().map_or(0, |r| r.level),
        phase: Phase::SplitDisconnected,
        modularity: partition.modularity,
    });
    (partition, trace)
}

/// Relabels so that every community is a connected component of its
/// induced subgraph. Splitting a disconnected community never lowers
/// modularity.
fn split_disconnected(social: &SocialGraph, labels: &mut [u32]) {
    let n = labels.len();
    let mut out = vec![u32::MAX; n];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..n {
        if out[start] != u32::MAX {
            continue;
        }
        out[start] = next;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for &u in social.neighbors(v) {
                let u = u as usize;
                if out[u] == u32::MAX && labels[u] == labels[start] {
                    out[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    labels.copy_from_slice(&out);
}
