//! Execution policy for the data-parallel inner loops.
//!
//! Every parallel loop in this crate is written as a gather (each output row
//! is owned by one task) or as a reduction over fixed-size blocks summed in
//! block order, so both policies produce bit-identical results. The
//! `parallel` cargo feature pulls in rayon; without it `Parallel` silently
//! runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Rows per block in blocked reductions. Fixed so that the summation order
/// does not depend on the number of worker threads.
pub const REDUCTION_BLOCK: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Parallelism {
    #[default]
    Sequential,
    Parallel,
}

impl Parallelism {
    /// `Parallel` when compiled with rayon support, otherwise `Sequential`.
    pub fn available() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Parallel
        } else {
            Parallelism::Sequential
        }
    }

    fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }

    /// Calls `f(row_index, row)` for every `width`-sized row of `data`.
    pub fn for_each_row<F>(self, data: &mut [f64], width: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        if width == 0 {
            return;
        }
        debug_assert_eq!(data.len() % width, 0);
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            data.par_chunks_mut(width)
                .enumerate()
                .for_each(|(i, row)| f(i, row));
            return;
        }
        data.chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
    }

    /// Evaluates `f` on `0..len`, returning results in index order.
    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Sums per-item contributions into a buffer of `out_len` values.
    ///
    /// Items are grouped into blocks of [`REDUCTION_BLOCK`]; each block is
    /// accumulated sequentially and the block partials are then added in
    /// block order.
    pub fn blocked_sum<F>(self, len: usize, out_len: usize, f: F) -> Vec<f64>
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        let blocks = len.div_ceil(REDUCTION_BLOCK);
        let partials = self.map(blocks, |b| {
            let mut acc = vec![0.0; out_len];
            let start = b * REDUCTION_BLOCK;
            for i in start..(start + REDUCTION_BLOCK).min(len) {
                f(i, &mut acc);
            }
            acc
        });
        let mut total = vec![0.0; out_len];
        for p in partials {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree_bitwise() {
        let f = |i: usize, acc: &mut [f64]| {
            acc[0] += (i as f64).sqrt() * 1e-3;
            acc[1] += 1.0 / (1.0 + i as f64);
        };
        let a = Parallelism::Sequential.blocked_sum(5000, 2, f);
        let b = Parallelism::Parallel.blocked_sum(5000, 2, f);
        assert_eq!(a, b);

        let mut x = vec![0.0; 30];
        let mut y = vec![0.0; 30];
        let g = |i: usize, row: &mut [f64]| {
            for (k, v) in row.iter_mut().enumerate() {
                *v = (i * 3 + k) as f64;
            }
        };
        Parallelism::Sequential.for_each_row(&mut x, 3, g);
        Parallelism::Parallel.for_each_row(&mut y, 3, g);
        assert_eq!(x, y);
        assert_eq!(x[29], 29.0);
    }

    #[test]
    fn zero_width_rows_are_noop() {
        let mut empty: Vec<f64> = Vec::new();
        Parallelism::Parallel.for_each_row(&mut empty, 0, |_, _| panic!("called"));
    }
}
