use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::InteractionGraph;

/// `(user, positive item, negative item)` training triples.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TripletBatch {
    pub triples: Vec<(u32, u32, u32)>,
}

impl TripletBatch {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Distinct users of the batch in ascending order.
    pub fn users(&self) -> Vec<u32> {
        let mut users: Vec<u32> = self.triples.iter().map(|t| t.0).collect();
        users.sort_unstable();
        users.dedup();
        users
    }
}

/// Draws `size` positives uniformly from the training edges and one
/// negative per positive uniformly from the user's non-interacted items.
/// Positives of users who interacted with every item are skipped.
pub fn sample_triplets<R: Rng>(train: &InteractionGraph, size: usize, rng: &mut R) -> Result<TripletBatch> {
    let edges = train.edge_count();
    if edges == 0 {
        return Err(Error::Empty("training interactions"));
    }
    let items = train.item_count();
    let samplable = (0..train.user_count()).any(|u| {
        let d = train.user_degree(u);
        d > 0 && d < items
    });
    if !samplable {
        return Err(Error::InvalidArgument(
            "every user with interactions has interacted with all items".into(),
        ));
    }
    let forward = train.forward();
    let mut triples = Vec::with_capacity(size);
    let mut skipped = 0usize;
    while triples.len() < size {
        let k = rng.gen_range(0..edges);
        let user = forward.row_of_entry(k);
        if train.user_degree(user) == items {
            skipped += 1;
            continue;
        }
        let positive = forward.entry(k);
        let negative = loop {
            let j = rng.gen_range(0..items as u32);
            if !train.contains(user, j) {
                break j;
            }
        };
        triples.push((user as u32, positive, negative));
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} positives of users without negatives");
    }
    Ok(TripletBatch { triples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_interaction_graph, EdgeKind, EdgeList};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn graph(pairs: &[(u32, u32)], m: usize, n: usize) -> InteractionGraph {
        build_interaction_graph(&EdgeList::new(EdgeKind::Interaction, pairs.iter().copied()), m, n).unwrap()
    }

    #[test]
    fn forced_negative() {
        let g = graph(&[(0, 0), (0, 1), (0, 2)], 1, 4);
        let b = sample_triplets(&g, 50, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(b.triples.iter().all(|t| t.2 == 3));
    }

    #[test]
    fn exact_batch_size_and_validity() {
        let pairs: Vec<(u32, u32)> = (0..20).map(|k| (k % 5, (k * 7) % 13)).collect();
        let g = graph(&pairs, 5, 13);
        let b = sample_triplets(&g, 4096, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(b.len(), 4096);
        for &(u, i, j) in &b.triples {
            assert!(g.contains(u as usize, i));
            assert!(!g.contains(u as usize, j));
        }
    }

    #[test]
    fn saturated_users_skipped() {
        // user 0 has every item, user 1 has one
        let g = graph(&[(0, 0), (0, 1), (1, 0)], 2, 2);
        let b = sample_triplets(&g, 100, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(b.triples.iter().all(|&t| t == (1, 0, 1)));
        let full = graph(&[(0, 0), (0, 1)], 1, 2);
        assert!(sample_triplets(&full, 1, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn negatives_uniform_chi_squared() {
        // one user with item 0; negatives uniform over items 1..10
        let g = graph(&[(0, 0)], 1, 10);
        let b = sample_triplets(&g, 100_000, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let mut counts = [0f64; 10];
        for t in &b.triples {
            counts[t.2 as usize] += 1.0;
        }
        assert_eq!(counts[0], 0.0);
        let expected = 100_000.0 / 9.0;
        let chi2: f64 = counts[1..].iter().map(|c| (c - expected).powi(2) / expected).sum();
        // chi-squared critical value, 8 degrees of freedom, alpha = 0.01
        assert!(chi2 < 20.090, "chi2 = {chi2}");
    }
}
