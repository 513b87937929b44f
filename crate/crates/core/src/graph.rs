//! Sparse interaction and social graphs, id remapping and dataset splits.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    /// User to item.
    Interaction,
    /// Undirected user to user.
    Social,
}

/// Deduplicated edge pairs. Social pairs are stored canonically as
/// `(min, max)` and never contain self-loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeList {
    kind: EdgeKind,
    pairs: Vec<(u32, u32)>,
    dropped_self_loops: usize,
}

impl EdgeList {
    pub fn new(kind: EdgeKind, pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut dropped_self_loops = 0;
        let mut pairs: Vec<(u32, u32)> = match kind {
            EdgeKind::Interaction => pairs.into_iter().collect(),
            EdgeKind::Social => pairs
                .into_iter()
                .filter(|&(a, b)| {
                    if a == b {
                        dropped_self_loops += 1;
                    }
                    a != b
                })
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect(),
        };
        pairs.sort_unstable();
        pairs.dedup();
        if dropped_self_loops > 0 {
            log::warn!("dropped {dropped_self_loops} social self-loop(s)");
        }
        EdgeList {
            kind,
            pairs,
            dropped_self_loops,
        }
    }

    pub fn kind(&self) -> EdgeKind {
        self.kind
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dropped_self_loops(&self) -> usize {
        self.dropped_self_loops
    }

    /// Rewrites raw ids into contiguous internal ids.
    ///
    /// Interaction edges map sources through `sources` and targets through
    /// `targets`; social edges use `sources` for both endpoints.
    pub fn remap(&self, sources: &IdMap, targets: &IdMap) -> Result<EdgeList> {
        let targets = match self.kind {
            EdgeKind::Interaction => targets,
            EdgeKind::Social => sources,
        };
        let lookup = |map: &IdMap, raw: u32, what: &'static str| {
            map.internal(raw as u64).ok_or(Error::OutOfRange {
                what,
                id: raw as usize,
                limit: map.len(),
            })
        };
        let pairs = self
            .pairs
            .iter()
            .map(|&(a, b)| Ok((lookup(sources, a, "raw source")?, lookup(targets, b, "raw target")?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(EdgeList::new(self.kind, pairs))
    }

    /// Largest source and target id plus one, or zero when empty.
    pub fn id_bounds(&self) -> (usize, usize) {
        self.pairs.iter().fold((0, 0), |(s, t), &(a, b)| {
            (s.max(a as usize + 1), t.max(b as usize + 1))
        })
    }
}

/// Reads an edge-list file: one edge per line, two whitespace-separated
/// non-negative integers, `#` comment lines and blank lines ignored.
pub fn load_edge_list(path: impl AsRef<Path>, kind: EdgeKind) -> Result<EdgeList> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let malformed = |reason: String| Error::Malformed {
            path: path.to_path_buf(),
            line: idx + 1,
            reason,
        };
        let mut fields = trimmed.split_whitespace();
        let mut next = || -> Result<u32> {
            let tok = fields
                .next()
                .ok_or_else(|| malformed("expected two integers".into()))?;
            tok.parse::<u32>()
                .map_err(|_| malformed(format!("`{tok}` is not a non-negative 32-bit integer")))
        };
        let a = next()?;
        let b = next()?;
        if fields.next().is_some() {
            return Err(malformed("expected exactly two fields".into()));
        }
        pairs.push((a, b));
    }
    Ok(EdgeList::new(kind, pairs))
}

pub fn write_edge_list(path: impl AsRef<Path>, edges: &EdgeList) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for &(a, b) in edges.pairs() {
        writeln!(out, "{a} {b}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Bijection between raw ids and contiguous internal ids, assigned in
/// ascending raw-id order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdMap {
    raw: Vec<u64>,
}

impl IdMap {
    pub fn from_raw(ids: impl IntoIterator<Item = u64>) -> Self {
        let set: BTreeSet<u64> = ids.into_iter().collect();
        IdMap {
            raw: set.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn internal(&self, raw: u64) -> Option<u32> {
        self.raw.binary_search(&raw).ok().map(|i| i as u32)
    }

    pub fn raw(&self, internal: u32) -> Option<u64> {
        self.raw.get(internal as usize).copied()
    }

    /// Writes `raw_id internal_id` lines.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (i, r) in self.raw.iter().enumerate() {
            writeln!(out, "{r} {i}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let malformed = |reason: &str| Error::Malformed {
                path: path.to_path_buf(),
                line: idx + 1,
                reason: reason.to_string(),
            };
            let mut it = trimmed.split_whitespace();
            let raw = it
                .next()
                .and_then(|t| t.parse::<u64>().ok())
                .ok_or_else(|| malformed("bad raw id"))?;
            let internal = it
                .next()
                .and_then(|t| t.parse::<usize>().ok())
                .ok_or_else(|| malformed("bad internal id"))?;
            entries.push((internal, raw));
        }
        entries.sort_unstable();
        for (expected, &(internal, _)) in entries.iter().enumerate() {
            if internal != expected {
                return Err(Error::Malformed {
                    path: path.to_path_buf(),
                    line: 0,
                    reason: format!("internal ids not contiguous at {expected}"),
                });
            }
        }
        let raw: Vec<u64> = entries.into_iter().map(|(_, r)| r).collect();
        if raw.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                line: 0,
                reason: "raw ids must be strictly increasing in internal order".into(),
            });
        }
        Ok(IdMap { raw })
    }
}

/// Compressed sparse row adjacency: `targets[offsets[r]..offsets[r + 1]]`
/// are the sorted neighbours of row `r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Csr {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Csr {
    fn from_sorted_pairs(rows: usize, pairs: impl Iterator<Item = (u32, u32)>) -> Self {
        let mut offsets = vec![0usize; rows + 1];
        let mut targets = Vec::new();
        for (r, t) in pairs {
            offsets[r as usize + 1] += 1;
            targets.push(t);
        }
        for r in 0..rows {
            offsets[r + 1] += offsets[r];
        }
        Csr { offsets, targets }
    }

    /// Builds from unsorted pairs via counting sort on rows, then sorts each row.
    fn from_pairs(rows: usize, pairs: &[(u32, u32)]) -> Self {
        let mut offsets = vec![0usize; rows + 1];
        for &(r, _) in pairs {
            offsets[r as usize + 1] += 1;
        }
        for r in 0..rows {
            offsets[r + 1] += offsets[r];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0u32; pairs.len()];
        for &(r, t) in pairs {
            targets[cursor[r as usize]] = t;
            cursor[r as usize] += 1;
        }
        for r in 0..rows {
            targets[offsets[r]..offsets[r + 1]].sort_unstable();
        }
        Csr { offsets, targets }
    }

    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u32] {
        &self.targets[self.offsets[r]..self.offsets[r + 1]]
    }

    #[inline]
    pub fn row_range(&self, r: usize) -> std::ops::Range<usize> {
        self.offsets[r]..self.offsets[r + 1]
    }

    #[inline]
    pub fn degree(&self, r: usize) -> usize {
        self.offsets[r + 1] - self.offsets[r]
    }

    pub fn contains(&self, r: usize, t: u32) -> bool {
        self.row(r).binary_search(&t).is_ok()
    }

    /// Target stored at flat position `k`.
    #[inline]
    pub fn entry(&self, k: usize) -> u32 {
        self.targets[k]
    }

    /// Row owning flat position `k`.
    pub fn row_of_entry(&self, k: usize) -> usize {
        self.offsets.partition_point(|&o| o <= k) - 1
    }
}

/// Bipartite user-item graph with forward (user to items) and reverse
/// (item to users) adjacency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionGraph {
    users: usize,
    items: usize,
    forward: Csr,
    reverse: Csr,
}

impl InteractionGraph {
    pub fn user_count(&self) -> usize {
        self.users
    }

    pub fn item_count(&self) -> usize {
        self.items
    }

    pub fn edge_count(&self) -> usize {
        self.forward.nnz()
    }

    pub fn forward(&self) -> &Csr {
        &self.forward
    }

    pub fn reverse(&self) -> &Csr {
        &self.reverse
    }

    pub fn items_of(&self, user: usize) -> &[u32] {
        self.forward.row(user)
    }

    pub fn users_of(&self, item: usize) -> &[u32] {
        self.reverse.row(item)
    }

    pub fn user_degree(&self, user: usize) -> usize {
        self.forward.degree(user)
    }

    pub fn item_degree(&self, item: usize) -> usize {
        self.reverse.degree(item)
    }

    pub fn contains(&self, user: usize, item: u32) -> bool {
        self.forward.contains(user, item)
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.users).flat_map(move |u| self.forward.row(u).iter().map(move |&i| (u as u32, i)))
    }

    pub fn to_edge_list(&self) -> EdgeList {
        EdgeList::new(EdgeKind::Interaction, self.edges())
    }
}

pub fn build_interaction_graph(edges: &EdgeList, users: usize, items: usize) -> Result<InteractionGraph> {
    if edges.kind() != EdgeKind::Interaction {
        return Err(Error::InvalidArgument("expected interaction edges".into()));
    }
    for &(u, i) in edges.pairs() {
        if u as usize >= users {
            return Err(Error::OutOfRange { what: "user", id: u as usize, limit: users });
        }
        if i as usize >= items {
            return Err(Error::OutOfRange { what: "item", id: i as usize, limit: items });
        }
    }
    // pairs are sorted by (user, item) already
    let forward = Csr::from_sorted_pairs(users, edges.pairs().iter().copied());
    let flipped: Vec<(u32, u32)> = edges.pairs().iter().map(|&(u, i)| (i, u)).collect();
    let reverse = Csr::from_pairs(items, &flipped);
    Ok(InteractionGraph {
        users,
        items,
        forward,
        reverse,
    })
}

/// Symmetric user-user graph without self-loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SocialGraph {
    adjacency: Csr,
}

impl SocialGraph {
    pub fn user_count(&self) -> usize {
        self.adjacency.rows()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn adjacency(&self) -> &Csr {
        &self.adjacency
    }

    pub fn neighbors(&self, user: usize) -> &[u32] {
        self.adjacency.row(user)
    }

    pub fn degree(&self, user: usize) -> usize {
        self.adjacency.degree(user)
    }

    /// Sum of all degrees, i.e. twice the edge count.
    pub fn total_degree(&self) -> usize {
        self.adjacency.nnz()
    }

    pub fn contains(&self, a: usize, b: u32) -> bool {
        self.adjacency.contains(a, b)
    }

    /// Canonical `(min, max)` pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.user_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v as usize > u)
                .map(move |&v| (u as u32, v))
        })
    }

    pub fn to_edge_list(&self) -> EdgeList {
        EdgeList::new(EdgeKind::Social, self.edges())
    }
}

pub fn build_social_graph(edges: &EdgeList, users: usize) -> Result<SocialGraph> {
    if edges.kind() != EdgeKind::Social {
        return Err(Error::InvalidArgument("expected social edges".into()));
    }
    let mut both = Vec::with_capacity(edges.len() * 2);
    for &(a, b) in edges.pairs() {
        for id in [a, b] {
            if id as usize >= users {
                return Err(Error::OutOfRange { what: "user", id: id as usize, limit: users });
            }
        }
        both.push((a, b));
        both.push((b, a));
    }
    Ok(SocialGraph {
        adjacency: Csr::from_pairs(users, &both),
    })
}

/// `1/sqrt(d(u) d(i))` for every interaction, stored twice: aligned with the
/// forward rows and with the reverse rows.
#[derive(Clone, Debug, PartialEq)]
pub struct NormWeights {
    pub by_user: Vec<f64>,
    pub by_item: Vec<f64>,
}

impl NormWeights {
    pub fn weight(&self, graph: &InteractionGraph, user: usize, item: u32) -> Option<f64> {
        let range = graph.forward().row_range(user);
        graph
            .items_of(user)
            .binary_search(&item)
            .ok()
            .map(|k| self.by_user[range.start + k])
    }
}

pub fn sym_norm_weights(graph: &InteractionGraph) -> NormWeights {
    let w = |u: usize, i: usize| 1.0 / ((graph.user_degree(u) * graph.item_degree(i)) as f64).sqrt();
    let mut by_user = Vec::with_capacity(graph.edge_count());
    for u in 0..graph.user_count() {
        by_user.extend(graph.items_of(u).iter().map(|&i| w(u, i as usize)));
    }
    let mut by_item = Vec::with_capacity(graph.edge_count());
    for i in 0..graph.item_count() {
        by_item.extend(graph.users_of(i).iter().map(|&u| w(u as usize, i)));
    }
    NormWeights { by_user, by_item }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMode {
    /// One random permutation over all edges.
    #[default]
    Global,
    /// Each user's edges are shuffled and divided separately.
    PerUser,
}

#[derive(Clone, Debug)]
pub struct SplitBundle {
    pub train: InteractionGraph,
    pub val: EdgeList,
    pub test: EdgeList,
    pub seed: u64,
}

/// Sizes `(train, val, test)` for `len` edges: floor, floor, remainder.
pub fn split_sizes(len: usize, ratios: (f64, f64, f64)) -> (usize, usize, usize) {
    // the epsilon keeps exact products such as 0.2 * 10 from flooring down
    let train = ((ratios.0 * len as f64) + 1e-9).floor() as usize;
    let val = (((ratios.1 * len as f64) + 1e-9).floor() as usize).min(len - train);
    (train, val, len - train - val)
}

pub fn split_interactions(
    edges: &EdgeList,
    users: usize,
    items: usize,
    ratios: (f64, f64, f64),
    seed: u64,
    mode: SplitMode,
) -> Result<SplitBundle> {
    if edges.is_empty() {
        return Err(Error::Empty("interaction edge list"));
    }
    let sum = ratios.0 + ratios.1 + ratios.2;
    if (sum - 1.0).abs() > 1e-9 || ratios.0 < 0.0 || ratios.1 < 0.0 || ratios.2 < 0.0 {
        return Err(Error::InvalidArgument(format!("split ratios {ratios:?} must be non-negative and sum to 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = edges.pairs();
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    let mut assign = |idx: &mut Vec<usize>| {
        idx.shuffle(&mut rng);
        let (a, b, _) = split_sizes(idx.len(), ratios);
        train.extend(idx[..a].iter().map(|&k| pairs[k]));
        val.extend(idx[a..a + b].iter().map(|&k| pairs[k]));
        test.extend(idx[a + b..].iter().map(|&k| pairs[k]));
    };
    match mode {
        SplitMode::Global => assign(&mut (0..pairs.len()).collect()),
        SplitMode::PerUser => {
            let mut start = 0;
            while start < pairs.len() {
                let user = pairs[start].0;
                let end = start + pairs[start..].iter().take_while(|p| p.0 == user).count();
                assign(&mut (start..end).collect());
                start = end;
            }
        }
    }
    let train = EdgeList::new(EdgeKind::Interaction, train);
    Ok(SplitBundle {
        train: build_interaction_graph(&train, users, items)?,
        val: EdgeList::new(EdgeKind::Interaction, val),
        test: EdgeList::new(EdgeKind::Interaction, test),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn interaction_duplicates_removed() {
        let f = write_tmp("0 5\n0 5\n1 2\n");
        let e = load_edge_list(f.path(), EdgeKind::Interaction).unwrap();
        assert_eq!(e.pairs(), &[(0, 5), (1, 2)]);
    }

    #[test]
    fn social_pairs_canonicalized() {
        let f = write_tmp("0 1\n1 0\n");
        let e = load_edge_list(f.path(), EdgeKind::Social).unwrap();
        assert_eq!(e.pairs(), &[(0, 1)]);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let f = write_tmp("# header\n\n3\t4\n");
        let e = load_edge_list(f.path(), EdgeKind::Interaction).unwrap();
        assert_eq!(e.pairs(), &[(3, 4)]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_tmp("0 1\n2 x\n");
        match load_edge_list(f.path(), EdgeKind::Interaction) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp("-1 2\n");
        assert!(matches!(
            load_edge_list(f.path(), EdgeKind::Interaction),
            Err(Error::Malformed { line: 1, .. })
        ));
        let f = write_tmp("1 2 3\n");
        assert!(load_edge_list(f.path(), EdgeKind::Interaction).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_edge_list("/nonexistent/edges.txt", EdgeKind::Social),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn social_self_loops_dropped_and_counted() {
        let e = EdgeList::new(EdgeKind::Social, [(1, 1), (2, 2), (1, 2)]);
        assert_eq!(e.pairs(), &[(1, 2)]);
        assert_eq!(e.dropped_self_loops(), 2);
    }

    #[test]
    fn interaction_degrees() {
        let e = EdgeList::new(EdgeKind::Interaction, [(0, 0), (0, 1)]);
        let g = build_interaction_graph(&e, 1, 2).unwrap();
        assert_eq!(g.user_degree(0), 2);
        assert_eq!(g.item_degree(0), 1);
        assert_eq!(g.item_degree(1), 1);
    }

    #[test]
    fn empty_interaction_graph_is_valid() {
        let e = EdgeList::new(EdgeKind::Interaction, []);
        let g = build_interaction_graph(&e, 3, 4).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert!((0..3).all(|u| g.user_degree(u) == 0));
        assert!((0..4).all(|i| g.item_degree(i) == 0));
    }

    #[test]
    fn out_of_range_ids_rejected() {
        let e = EdgeList::new(EdgeKind::Interaction, [(0, 7)]);
        assert!(matches!(
            build_interaction_graph(&e, 1, 7),
            Err(Error::OutOfRange { what: "item", .. })
        ));
        let s = EdgeList::new(EdgeKind::Social, [(0, 3)]);
        assert!(build_social_graph(&s, 3).is_err());
    }

    #[test]
    fn social_degrees() {
        let s = EdgeList::new(EdgeKind::Social, [(0, 1)]);
        let g = build_social_graph(&s, 2).unwrap();
        assert_eq!((g.degree(0), g.degree(1)), (1, 1));
        let s = EdgeList::new(EdgeKind::Social, [(0, 1), (1, 2)]);
        let g = build_social_graph(&s, 3).unwrap();
        assert_eq!(g.degree(1), 2);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn norm_weights_hand_values() {
        // user 0 degree 1 -> item 0 degree 1
        let e = EdgeList::new(EdgeKind::Interaction, [(0, 0)]);
        let g = build_interaction_graph(&e, 1, 1).unwrap();
        assert_eq!(sym_norm_weights(&g).weight(&g, 0, 0), Some(1.0));

        // user 0 degree 2, item 0 degree 1
        let e = EdgeList::new(EdgeKind::Interaction, [(0, 0), (0, 1)]);
        let g = build_interaction_graph(&e, 1, 2).unwrap();
        let w = sym_norm_weights(&g).weight(&g, 0, 0).unwrap();
        assert!((w - 0.5f64.sqrt()).abs() < 1e-15);

        // user 0 degree 4, item 0 degree 9
        let mut pairs = vec![(0, 0), (0, 1), (0, 2), (0, 3)];
        pairs.extend((1..9).map(|u| (u, 0)));
        let e = EdgeList::new(EdgeKind::Interaction, pairs);
        let g = build_interaction_graph(&e, 9, 4).unwrap();
        let w = sym_norm_weights(&g).weight(&g, 0, 0).unwrap();
        assert!((w - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(sym_norm_weights(&g).weight(&g, 1, 3), None);
    }

    #[test]
    fn split_sizes_floor_rule() {
        assert_eq!(split_sizes(10, (0.6, 0.2, 0.2)), (6, 2, 2));
        assert_eq!(split_sizes(598_420, (0.6, 0.2, 0.2)), (359_052, 119_684, 119_684));
        // Yelp: 0.6 * 450,884 = 270,530.4
        assert_eq!(split_sizes(450_884, (0.6, 0.2, 0.2)).0, 270_530);
        assert_eq!(split_sizes(7, (0.6, 0.2, 0.2)), (4, 1, 2));
    }

    #[test]
    fn split_ten_edges() {
        let e = EdgeList::new(EdgeKind::Interaction, (0..10).map(|k| (k % 3, k)));
        let s = split_interactions(&e, 3, 10, (0.6, 0.2, 0.2), 9, SplitMode::Global).unwrap();
        assert_eq!((s.train.edge_count(), s.val.len(), s.test.len()), (6, 2, 2));
        let again = split_interactions(&e, 3, 10, (0.6, 0.2, 0.2), 9, SplitMode::Global).unwrap();
        assert_eq!(s.train, again.train);
        assert_eq!(s.val, again.val);
        assert_eq!(s.test, again.test);
    }

    #[test]
    fn split_rejects_bad_input() {
        let empty = EdgeList::new(EdgeKind::Interaction, []);
        assert!(matches!(
            split_interactions(&empty, 1, 1, (0.6, 0.2, 0.2), 0, SplitMode::Global),
            Err(Error::Empty(_))
        ));
        let e = EdgeList::new(EdgeKind::Interaction, [(0, 0)]);
        assert!(split_interactions(&e, 1, 1, (0.6, 0.3, 0.2), 0, SplitMode::Global).is_err());
    }

    #[test]
    fn per_user_split_keeps_user_proportions() {
        let pairs: Vec<(u32, u32)> = (0..4).flat_map(|u| (0..10).map(move |i| (u, i))).collect();
        let e = EdgeList::new(EdgeKind::Interaction, pairs);
        let s = split_interactions(&e, 4, 10, (0.6, 0.2, 0.2), 3, SplitMode::PerUser).unwrap();
        assert!((0..4).all(|u| s.train.user_degree(u) == 6));
    }

    #[test]
    fn id_map_round_trip() {
        let map = IdMap::from_raw([900, 12, 55, 12]);
        assert_eq!(map.len(), 3);
        assert_eq!(map.internal(55), Some(1));
        assert_eq!(map.raw(2), Some(900));
        let f = tempfile::NamedTempFile::new().unwrap();
        map.save(f.path()).unwrap();
        assert_eq!(IdMap::load(f.path()).unwrap(), map);

        let e = EdgeList::new(EdgeKind::Social, [(900, 12)]);
        assert_eq!(e.remap(&map, &map).unwrap().pairs(), &[(0, 2)]);
    }
}
