use serde::{Deserialize, Serialize};

pub const DEFAULT_KS: [usize; 3] = [10, 20, 40];

/// Fraction of `relevant` (sorted ascending) found in the first `k` ranks.
pub fn recall_at_k(ranked: &[u32], relevant: &[u32], k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let hits = ranked
        .iter()
        .take(k)
        .filter(|i| relevant.binary_search(i).is_ok())
        .count();
    hits as f64 / relevant.len() as f64
}

/// Binary-relevance NDCG with gain `1 / log2(rank + 1)`, normalised by the
/// ideal ordering over `min(k, |relevant|)` positions.
pub fn ndcg_at_k(ranked: &[u32], relevant: &[u32], k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let gain = |pos: usize| 1.0 / ((pos + 2) as f64).log2();
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| relevant.binary_search(i).is_ok())
        .map(|(pos, _)| gain(pos))
        .sum();
    let ideal: f64 = (0..k.min(relevant.len())).map(gain).sum();
    dcg / ideal
}

/// Per-user metric values at each cutoff of the owning report.
#[derive(Clone, Debug, PartialEq)]
pub struct UserMetrics {
    pub user: u32,
    pub recall: Vec<f64>,
    pub ndcg: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ks: Vec<usize>,
    pub recall: Vec<f64>,
    pub ndcg: Vec<f64>,
    pub users: usize,
}

impl MetricsReport {
    /// Means over `rows`, accumulated in the given order.
    pub fn from_users(ks: &[usize], rows: &[UserMetrics]) -> Self {
        let mut recall = vec![0.0; ks.len()];
        let mut ndcg = vec![0.0; ks.len()];
        for r in rows {
            for k in 0..ks.len() {
                recall[k] += r.recall[k];
                ndcg[k] += r.ndcg[k];
            }
        }
        if !rows.is_empty() {
            let n = rows.len() as f64;
            recall.iter_mut().chain(ndcg.iter_mut()).for_each(|v| *v /= n);
        }
        MetricsReport {
            ks: ks.to_vec(),
            recall,
            ndcg,
            users: rows.len(),
        }
    }

    fn index(&self, k: usize) -> Option<usize> {
        self.ks.iter().position(|&x| x == k)
    }

    pub fn recall_at(&self, k: usize) -> Option<f64> {
        self.index(k).map(|i| self.recall[i])
    }

    pub fn ndcg_at(&self, k: usize) -> Option<f64> {
        self.index(k).map(|i| self.ndcg[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recall_examples() {
        assert_eq!(recall_at_k(&[5, 1, 9], &[1, 7], 3), 0.5);
        assert_eq!(recall_at_k(&[7, 1, 9], &[1, 7], 2), 1.0);
        assert_eq!(recall_at_k(&[9, 1, 7], &[1, 7], 1), 0.0);
    }

    #[test]
    fn ndcg_examples() {
        assert_eq!(ndcg_at_k(&[4, 2], &[4], 2), 1.0);
        assert!((ndcg_at_k(&[2, 4], &[4], 2) - 1.0 / 3f64.log2()).abs() < 1e-15);
        assert!((ndcg_at_k(&[2, 4], &[4], 2) - 0.630_929_753_571_457_4).abs() < 1e-15);
        assert_eq!(ndcg_at_k(&[1, 2, 3], &[4], 3), 0.0);
    }

    #[test]
    fn report_means() {
        let rows = vec![
            UserMetrics { user: 0, recall: vec![1.0], ndcg: vec![0.5] },
            UserMetrics { user: 1, recall: vec![0.0], ndcg: vec![0.25] },
        ];
        let r = MetricsReport::from_users(&[20], &rows);
        assert_eq!(r.recall_at(20), Some(0.5));
        assert_eq!(r.ndcg_at(20), Some(0.375));
        assert_eq!(r.ndcg_at(10), None);
        assert_eq!(r.users, 2);
    }
}
