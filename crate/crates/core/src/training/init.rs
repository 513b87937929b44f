use ndarray::Array2;
use rand::Rng;

/// Uniform on `[-a, a]` with `a = sqrt(6 / (rows + cols))`.
pub fn xavier_init<R: Rng>(shape: (usize, usize), rng: &mut R) -> Array2<f64> {
    let (rows, cols) = shape;
    if rows + cols == 0 {
        return Array2::zeros(shape);
    }
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn(shape, || rng.gen_range(-bound..=bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_within_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let v = xavier_init((1, 1), &mut rng)[[0, 0]];
            assert!(v.abs() <= 3f64.sqrt());
        }
    }

    #[test]
    fn sample_mean_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = xavier_init((1000, 100), &mut rng);
        let a = (6.0f64 / 1100.0).sqrt();
        // uniform variance a^2/3, mean of 1e5 draws has sd a/sqrt(3e5)
        let sd = a / (3.0e5f64).sqrt();
        assert!(t.mean().unwrap().abs() < 3.0 * sd);
        assert!(t.iter().all(|v| v.abs() <= a));
    }

    #[test]
    fn seeded_determinism() {
        let a = xavier_init((4, 3), &mut ChaCha8Rng::seed_from_u64(5));
        let b = xavier_init((4, 3), &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }
}
