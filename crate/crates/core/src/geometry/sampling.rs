use super::vec3::{Aabb, Vec3};
use crate::rng::rng_for;
use rand::Rng;

/// `n` uniform points in `bbox`, deterministic for a given seed.
pub fn sample_points(bbox: &Aabb, n: usize, seed: u64) -> Vec<Vec3> {
    assert!(n > 0);
    let mut rng = rng_for(seed, 0x5a3);
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.gen_range(bbox.min.x..=bbox.max.x),
                rng.gen_range(bbox.min.y..=bbox.max.y),
                rng.gen_range(bbox.min.z..=bbox.max.z),
            )
        })
        .collect()
}

/// Pearson chi-square statistic for uniformity over `bins` equal cells.
pub fn chi_square_uniform(values: impl Iterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> f64 {
    let mut counts = vec![0usize; bins];
    let mut n = 0usize;
    for v in values {
        let b = (((v - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
        n += 1;
    }
    let expected = n as f64 / bins as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

/// Upper critical value of chi-square at alpha = 0.01 via the
/// Wilson-Hilferty cube approximation. Adequate for the dof used in tests.
pub fn chi_square_crit_001(dof: usize) -> f64 {
    let k = dof as f64;
    let z = 2.326_347_874; // standard normal quantile at 0.99
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}
