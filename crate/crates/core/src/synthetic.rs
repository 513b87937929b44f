//! Generators for planted-structure datasets and small random instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::community::AffiliationMatrix;
use crate::error::Result;
use crate::graph::{
    build_interaction_graph, build_social_graph, sym_norm_weights, EdgeKind, EdgeList, InteractionGraph, NormWeights,
    SocialGraph,
};

/// Users split into equal groups; each group prefers its own block of items
/// and befriends mostly inside the group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub users: usize,
    pub items: usize,
    pub groups: usize,
    pub interactions_per_user: usize,
    /// Probability that an interaction is drawn from the user's own block.
    pub in_group: f64,
    pub friend_in: f64,
    pub friend_out: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            users: 200,
            items: 200,
            groups: 10,
            interactions_per_user: 6,
            in_group: 0.8,
            friend_in: 0.3,
            friend_out: 0.005,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlantedDataset {
    pub users: usize,
    pub items: usize,
    pub interactions: EdgeList,
    pub social: EdgeList,
    pub group_of: Vec<u32>,
}

pub fn planted_dataset(cfg: &PlantedConfig) -> PlantedDataset {
    assert!(cfg.groups > 0 && cfg.users >= cfg.groups && cfg.items >= cfg.groups);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let group_of: Vec<u32> = (0..cfg.users).map(|u| (u * cfg.groups / cfg.users) as u32).collect();
    let block = |g: usize| (g * cfg.items / cfg.groups)..((g + 1) * cfg.items / cfg.groups);
    let mut interactions = Vec::new();
    for (u, &g) in group_of.iter().enumerate() {
        let own: Vec<u32> = block(g as usize).map(|i| i as u32).collect();
        let mut chosen = std::collections::BTreeSet::new();
        let target = cfg.interactions_per_user.min(cfg.items);
        while chosen.len() < target {
            let i = if rng.gen::<f64>() < cfg.in_group {
                *own.choose(&mut rng).unwrap()
            } else {
                rng.gen_range(0..cfg.items as u32)
            };
            chosen.insert(i);
        }
        interactions.extend(chosen.into_iter().map(|i| (u as u32, i)));
    }
    let mut social = Vec::new();
    for a in 0..cfg.users {
        for b in a + 1..cfg.users {
            let p = if group_of[a] == group_of[b] { cfg.friend_in } else { cfg.friend_out };
            if rng.gen::<f64>() < p {
                social.push((a as u32, b as u32));
            }
        }
    }
    PlantedDataset {
        users: cfg.users,
        items: cfg.items,
        interactions: EdgeList::new(EdgeKind::Interaction, interactions),
        social: EdgeList::new(EdgeKind::Social, social),
        group_of,
    }
}

/// Small random graphs with a random overlapping affiliation.
#[derive(Clone, Debug)]
pub struct ToyInstance {
    pub train: InteractionGraph,
    pub norm: NormWeights,
    pub social: SocialGraph,
    pub affiliation: AffiliationMatrix,
}

/// Every user gets between one and `communities.min(2)` memberships; edge
/// densities are fixed at 0.3 (interactions) and 0.3 (friendships).
pub fn toy_instance(users: usize, items: usize, communities: usize, seed: u64) -> Result<ToyInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for u in 0..users as u32 {
        for i in 0..items as u32 {
            if rng.gen::<f64>() < 0.3 {
                pairs.push((u, i));
            }
        }
    }
    let mut friends = Vec::new();
    for a in 0..users as u32 {
        for b in a + 1..users as u32 {
            if rng.gen::<f64>() < 0.3 {
                friends.push((a, b));
            }
        }
    }
    let rows = (0..users)
        .map(|_| {
            let first = rng.gen_range(0..communities as u32);
            let mut row = vec![first];
            if communities > 1 && rng.gen::<f64>() < 0.5 {
                row.push((first + rng.gen_range(1..communities as u32)) % communities as u32);
            }
            row
        })
        .collect();
    let train = build_interaction_graph(&EdgeList::new(EdgeKind::Interaction, pairs), users, items)?;
    let norm = sym_norm_weights(&train);
    let social = build_social_graph(&EdgeList::new(EdgeKind::Social, friends), users)?;
    let affiliation = AffiliationMatrix::from_rows(rows, communities)?;
    Ok(ToyInstance {
        train,
        norm,
        social,
        affiliation,
    })
}
