use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Uniform draw from the 2-simplex, scaled to percent.
///
/// The gaps between two sorted uniforms on `[0, 1]` are Dirichlet(1, 1, 1).
pub fn sample_destination_distribution<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let a: f64 = rng.random();
    let b: f64 = rng.random();
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let p = [lo * 100.0, (hi - lo) * 100.0, 0.0];
    [p[0], p[1], 100.0 - p[0] - p[1]]
}

/// Index drawn with probability proportional to `weights`.
pub(crate) fn sample_index<R: Rng + ?Sized>(rng: &mut R, weights: &[f64; 3]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if u < *w {
            return k;
        }
        u -= w;
    }
    // rounding leftovers go to the last non-empty class
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(2)
}

/// Truncated normal free-flow speed distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedDistribution {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for SpeedDistribution {
    fn default() -> Self {
        Self {
            mean: 1.34,
            sd: 0.26,
            min: 0.5,
            max: 2.2,
        }
    }
}

/// Rejection sampling from the truncated normal; a zero `sd` returns the clamped mean.
pub fn sample_speed<R: Rng + ?Sized>(rng: &mut R, dist: &SpeedDistribution) -> f64 {
    if dist.sd <= 0.0 {
        return dist.mean.clamp(dist.min, dist.max);
    }
    let normal = Normal::new(dist.mean, dist.sd).expect("finite speed parameters");
    for _ in 0..1000 {
        let v = normal.sample(rng);
        if (dist.min..=dist.max).contains(&v) {
            return v;
        }
    }
    dist.mean.clamp(dist.min, dist.max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn simplex_draws_sum_to_100() {
        let mut rng = seed::rng(3, &[]);
        for _ in 0..1000 {
            let p = sample_destination_distribution(&mut rng);
            assert!((p.iter().sum::<f64>() - 100.0).abs() < 1e-9);
            assert!(p.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn simplex_mean_matches_monte_carlo_oracle() {
        // oracle: normalized i.i.d. exponentials are uniform on the simplex
        let mut orng = seed::rng(11, &[1]);
        let exp = rand_distr::Exp1;
        let mut oracle = [0.0; 3];
        let mut ours = [0.0; 3];
        let mut rng = seed::rng(11, &[2]);
        let n = 10_000;
        for _ in 0..n {
            let e: [f64; 3] = std::array::from_fn(|_| exp.sample(&mut orng));
            let s: f64 = e.iter().sum();
            let p = sample_destination_distribution(&mut rng);
            for k in 0..3 {
                oracle[k] += 100.0 * e[k] / s / n as f64;
                ours[k] += p[k] / n as f64;
            }
        }
        for k in 0..3 {
            assert!((oracle[k] - 100.0 / 3.0).abs() < 1.5);
            assert!((ours[k] - 100.0 / 3.0).abs() < 1.5, "{ours:?}");
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let a = sample_destination_distribution(&mut seed::rng(5, &[]));
        let b = sample_destination_distribution(&mut seed::rng(5, &[]));
        assert_eq!(a, b);
    }

    #[test]
    fn speeds_are_truncated() {
        let mut rng = seed::rng(1, &[]);
        let d = SpeedDistribution::default();
        let speeds: Vec<f64> = (0..5000).map(|_| sample_speed(&mut rng, &d)).collect();
        assert!(speeds.iter().all(|v| (0.5..=2.2).contains(v)));
        let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
        assert!((mean - 1.34).abs() < 0.02);
    }

    #[test]
    fn categorical_respects_zero_weights() {
        let mut rng = seed::rng(9, &[]);
        for _ in 0..1000 {
            assert_ne!(sample_index(&mut rng, &[50.0, 0.0, 50.0]), 1);
        }
    }
}
