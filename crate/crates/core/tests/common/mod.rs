#![allow(dead_code)]

use mdcov::{build_distance_matrix, DistanceMatrix, MetricSpec, PairedSample, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Point> {
    (0..n)
        .map(|_| Point::vector((0..dim).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>()))
        .collect()
}

/// Metrics of negative type used for mixed-metric samples.
pub fn negative_type_metrics() -> [MetricSpec; 3] {
    [MetricSpec::Euclidean, MetricSpec::Manhattan, MetricSpec::Discrete]
}

/// A random distance matrix under a randomly chosen metric. Discrete samples
/// draw points from a small grid so repeats occur.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DistanceMatrix {
    let dim = rng.random_range(1..=3);
    match rng.random_range(0..5) {
        0 => build_distance_matrix(&random_points(rng, n, dim), &MetricSpec::Euclidean),
        1 => build_distance_matrix(&random_points(rng, n, dim), &MetricSpec::Manhattan),
        2 => build_distance_matrix(&random_points(rng, n, dim), &MetricSpec::Chebyshev),
        3 => build_distance_matrix(
            &random_points(rng, n, dim),
            &MetricSpec::Minkowski {
                p: rng.random_range(1.0..4.0),
            },
        ),
        _ => {
            let pts: Vec<Point> = (0..n)
                .map(|_| Point::vector(vec![rng.random_range(0..3) as f64]))
                .collect();
            build_distance_matrix(&pts, &MetricSpec::Discrete)
        }
    }
    .unwrap()
}

pub fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> PairedSample {
    PairedSample::new(random_matrix(rng, n), random_matrix(rng, n)).unwrap()
}

pub fn line(xs: &[f64]) -> DistanceMatrix {
    DistanceMatrix::from_fn(xs.len(), |i, j| (xs[i] - xs[j]).abs()).unwrap()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn euclidean_sample(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> DistanceMatrix {
    build_distance_matrix(&random_points(rng, n, dim), &MetricSpec::Euclidean).unwrap()
}
