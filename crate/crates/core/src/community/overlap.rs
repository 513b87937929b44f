//! Conversion of a non-overlapping partition into overlapping memberships.
//!
//! A user `u` joins a community `c` containing one of its neighbours when
//! the fraction of `u`'s edges landing in `c` exceeds `theta` times the
//! share of total degree held by `c`:
//!
//! ```text
//! |{w in c : (u, w) in E}| / d(u)  >  theta * sum_{w in c} d(w) / sum_v d(v)
//! ```
//!
//! Sweeps run over users in ascending id order and candidate communities in
//! ascending id order, updating memberships in place, until a sweep adds
//! nothing.

use serde::Serialize;

use super::{AffiliationMatrix, Partition};
use crate::graph::SocialGraph;

pub const MAX_SWEEPS: usize = 100;

/// One accepted membership, with the two sides of the test as evaluated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Addition {
    pub sweep: usize,
    pub user: u32,
    pub community: u32,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct Expansion {
    pub affiliation: AffiliationMatrix,
    pub additions: Vec<Addition>,
    pub sweeps: usize,
    pub converged: bool,
}

pub fn expand_overlapping(partition: &Partition, social: &SocialGraph, theta: f64) -> Expansion {
    expand_affiliation(&AffiliationMatrix::from_partition(partition), social, theta)
}

/// Expands an arbitrary (possibly already overlapping) membership matrix.
pub fn expand_affiliation(start: &AffiliationMatrix, social: &SocialGraph, theta: f64) -> Expansion {
    assert!(theta > 0.0, "threshold must be positive");
    let users = start.user_count();
    assert_eq!(users, social.user_count(), "affiliation and social graph disagree on users");
    let mut rows: Vec<Vec<u32>> = start.rows().to_vec();
    let total_degree = social.total_degree() as f64;

    let mut degree_sum = vec![0.0; start.community_count()];
    for (u, row) in rows.iter().enumerate() {
        for &c in row {
            degree_sum[c as usize] += social.degree(u) as f64;
        }
    }

    let mut additions = Vec::new();
    let mut hits = vec![0usize; start.community_count()];
    let mut touched: Vec<u32> = Vec::new();
    let mut sweeps = 0;
    let mut converged = total_degree == 0.0;

    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut changed = false;
        for u in 0..users {
            let du = social.degree(u);
            if du == 0 {
                continue;
            }
            for &v in social.neighbors(u) {
                for &c in &rows[v as usize] {
                    if hits[c as usize] == 0 {
                        touched.push(c);
                    }
                    hits[c as usize] += 1;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if rows[u].binary_search(&c).is_ok() {
                    continue;
                }
                let lhs = hits[c as usize] as f64 / du as f64;
                let rhs = theta * degree_sum[c as usize] / total_degree;
                if lhs > rhs {
                    let pos = rows[u].binary_search(&c).unwrap_err();
                    rows[u].insert(pos, c);
                    degree_sum[c as usize] += du as f64;
                    additions.push(Addition {
                        sweep: sweeps,
                        user: u as u32,
                        community: c,
                        lhs,
                        rhs,
                    });
                    changed = true;
                }
            }
            for &c in &touched {
                hits[c as usize] = 0;
            }
            touched.clear();
        }
        converged = !changed;
    }
    if !converged {
        log::warn!("overlap expansion stopped after {MAX_SWEEPS} sweeps without converging");
    }
    Expansion {
        affiliation: AffiliationMatrix::from_rows(rows, start.community_count())
            .expect("community ids are taken from the input"),
        additions,
        sweeps,
        converged,
    }
}
