//! Two-step overlapping community detection: a Leiden partition of the
//! social graph, singleton communities for users it leaves uncovered, and a
//! threshold-driven expansion into overlapping memberships.

mod affiliation;
mod leiden;
mod overlap;

pub use affiliation::AffiliationMatrix;
pub use leiden::{leiden_with_trace, modularity, Phase, PhaseRecord};
pub use overlap::{expand_affiliation, expand_overlapping, Addition, Expansion, MAX_SWEEPS};

use crate::graph::SocialGraph;

/// Non-overlapping community assignment. `None` marks a user without a
/// community (only socially isolated users before [`ensure_coverage`]).
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    assignment: Vec<Option<u32>>,
    community_count: usize,
    modularity: f64,
}

impl Partition {
    /// Builds a partition, relabelling communities to `0..k` in order of
    /// first appearance.
    pub fn from_labels(mut assignment: Vec<Option<u32>>, modularity: f64) -> Self {
        let mut map = std::collections::HashMap::new();
        for slot in assignment.iter_mut().flatten() {
            let next = map.len() as u32;
            *slot = *map.entry(*slot).or_insert(next);
        }
        Partition {
            community_count: map.len(),
            assignment,
            modularity,
        }
    }

    pub fn assignment(&self) -> &[Option<u32>] {
        &self.assignment
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    pub fn modularity(&self) -> f64 {
        self.modularity
    }

    pub fn is_complete(&self) -> bool {
        self.assignment.iter().all(Option::is_some)
    }

    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.community_count];
        for (u, c) in self.assignment.iter().enumerate() {
            if let Some(c) = c {
                out[*c as usize].push(u as u32);
            }
        }
        out
    }
}

/// Leiden partition of the socially connected users. Isolated users are
/// left unassigned.
pub fn leiden_partition(social: &SocialGraph, resolution: f64, seed: u64) -> Partition {
    leiden_with_trace(social, resolution, seed).0
}

/// Gives every unassigned user in `0..users` a fresh singleton community,
/// numbered after the existing ones in ascending user order.
pub fn ensure_coverage(partition: &Partition, users: usize) -> Partition {
    let mut assignment = partition.assignment.clone();
    assignment.resize(users.max(assignment.len()), None);
    let mut next = partition.community_count as u32;
    for slot in assignment.iter_mut() {
        if slot.is_none() {
            *slot = Some(next);
            next += 1;
        }
    }
    Partition {
        assignment,
        community_count: next as usize,
        modularity: partition.modularity,
    }
}

/// Partition after coverage together with its overlapping expansion.
#[derive(Clone, Debug)]
pub struct Detection {
    pub partition: Partition,
    pub expansion: Expansion,
}

impl Detection {
    pub fn affiliation(&self) -> &AffiliationMatrix {
        &self.expansion.affiliation
    }
}

/// Leiden, singleton coverage for isolated users, then overlap expansion
/// with threshold `theta`.
pub fn detect_communities(social: &SocialGraph, resolution: f64, theta: f64, seed: u64) -> Detection {
    let partition = ensure_coverage(&leiden_partition(social, resolution, seed), social.user_count());
    let expansion = expand_overlapping(&partition, social, theta);
    Detection { partition, expansion }
}
