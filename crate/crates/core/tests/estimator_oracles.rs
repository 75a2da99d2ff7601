mod common;

use common::*;
use mdcov::population::{population_dcov, FiniteJointMeasure};
use mdcov::{
    brownian_plugin, brute_force_u, brute_force_v, dcor_u, dcor_v, dcov_u, dcov_v, kernel_h,
    v_center, DistanceMatrix, PairedSample,
};
use rand::Rng;

#[test]
fn dcov_v_matches_sixfold_v_statistic() {
    let mut rng = rng(101);
    for k in 0..200 {
        let n = 1 + k % 8;
        let s = random_pair(&mut rng, n);
        let fast = dcov_v(&s);
        let slow = brute_force_v(&s).unwrap();
        assert!((fast - slow).abs() <= 1e-10, "n={n}: {fast} vs {slow}");
    }
}

#[test]
fn dcov_u_matches_distinct_tuple_average() {
    let mut rng = rng(202);
    for k in 0..40 {
        let n = 6 + k % 4;
        let s = random_pair(&mut rng, n);
        let fast = dcov_u(&s).unwrap();
        let slow = brute_force_u(&s).unwrap();
        assert!((fast - slow).abs() <= 1e-9, "n={n}: {fast} vs {slow}");
    }
}

/// All 720 permutations of six slots.
fn permutations6() -> Vec<[usize; 6]> {
    fn go(prefix: &mut Vec<usize>, out: &mut Vec<[usize; 6]>) {
        if prefix.len() == 6 {
            out.push(prefix.as_slice().try_into().unwrap());
            return;
        }
        for i in 0..6 {
            if !prefix.contains(&i) {
                prefix.push(i);
                go(prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::with_capacity(720);
    go(&mut Vec::new(), &mut out);
    out
}

#[test]
fn symmetrised_kernel_gives_same_v_statistic() {
    let perms = permutations6();
    assert_eq!(perms.len(), 720);
    let mut rng = rng(303);
    for n in 1..=5 {
        let s = random_pair(&mut rng, n);
        let mut total = 0.0;
        let mut t = [0usize; 6];
        let count = n.pow(6);
        for code in 0..count {
            let mut c = code;
            for slot in t.iter_mut() {
                *slot = c % n;
                c /= n;
            }
            let hbar: f64 = perms
                .iter()
                .map(|p| kernel_h(&s, [t[p[0]], t[p[1]], t[p[2]], t[p[3]], t[p[4]], t[p[5]]]).unwrap())
                .sum::<f64>()
                / 720.0;
            total += hbar;
        }
        let v_sym = total / count as f64;
        assert!((v_sym - brute_force_v(&s).unwrap()).abs() <= 1e-9, "n={n}");
    }
}

#[test]
fn brownian_expansion_equals_centred_form() {
    let mut rng = rng(404);
    for _ in 0..100 {
        let n = rng.random_range(1..80);
        let s = random_pair(&mut rng, n);
        let tol = 1e-10 * n as f64 * s.dx().max_abs().max(s.dy().max_abs()).max(1.0);
        assert!((brownian_plugin(&s) - dcov_v(&s)).abs() <= tol);
    }
}

#[test]
fn euclidean_reduction_matches_textbook_formula() {
    // (1/n²) Σ A_ij B_ij with A, B built by explicit row/column/grand means.
    let mut rng = rng(505);
    for _ in 0..20 {
        let n = rng.random_range(2..30);
        let dx = euclidean_sample(&mut rng, n, 2);
        let dy = euclidean_sample(&mut rng, n, 3);
        let centre = |m: &DistanceMatrix| -> Vec<Vec<f64>> {
            let nf = n as f64;
            let row: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m.get(i, j)).sum::<f64>() / nf).collect();
            let col: Vec<f64> = (0..n).map(|j| (0..n).map(|i| m.get(i, j)).sum::<f64>() / nf).collect();
            let all = row.iter().sum::<f64>() / nf;
            (0..n)
                .map(|i| (0..n).map(|j| m.get(i, j) - row[i] - col[j] + all).collect())
                .collect()
        };
        let (a, b) = (centre(&dx), centre(&dy));
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += a[i][j] * b[i][j];
            }
        }
        let textbook = s / (n * n) as f64;
        let sample = PairedSample::new(dx, dy).unwrap();
        assert!((dcov_v(&sample) - textbook).abs() <= 1e-12);
    }
}

#[test]
fn nonnegative_on_negative_type_metrics() {
    let mut rng = rng(606);
    for _ in 0..200 {
        let n = rng.random_range(2..40);
        let pick = |rng: &mut rand_chacha::ChaCha8Rng| {
            let spec = &negative_type_metrics()[rng.random_range(0..3)];
            let dim = rng.random_range(1..4);
            let pts: Vec<_> = random_points(rng, n, dim)
                .into_iter()
                .map(|p| match (spec, p) {
                    (mdcov::MetricSpec::Discrete, mdcov::Point::Vector(c)) => {
                        mdcov::Point::vector(vec![(c[0] * 1.5).round()])
                    }
                    (_, p) => p,
                })
                .collect();
            mdcov::build_distance_matrix(&pts, spec).unwrap()
        };
        let s = PairedSample::new(pick(&mut rng), pick(&mut rng)).unwrap();
        assert!(dcov_v(&s) >= -1e-12);
        let r = dcor_v(&s);
        assert!((-1e-12..=1.0 + 1e-12).contains(&r), "dcor_v = {r}");
    }
}

#[test]
fn scale_equivariance() {
    let mut rng = rng(707);
    for _ in 0..30 {
        let n = rng.random_range(6..30);
        let s = random_pair(&mut rng, n);
        let c = rng.random_range(0.1..10.0);
        let scaled = PairedSample::new(s.dx().scaled(c), s.dy().clone()).unwrap();
        let base = dcov_v(&s);
        assert!((dcov_v(&scaled) - c * base).abs() <= 1e-10 * (1.0 + (c * base).abs()));
        assert!((dcov_u(&scaled).unwrap() - c * dcov_u(&s).unwrap()).abs() <= 1e-10 * (1.0 + c));
        assert!((dcor_v(&scaled) - dcor_v(&s)).abs() <= 1e-10);
    }
}

#[test]
fn identical_samples_have_unit_correlation() {
    let mut rng = rng(808);
    for _ in 0..10 {
        let x = euclidean_sample(&mut rng, 15, 2);
        let s = PairedSample::new(x.clone(), x).unwrap();
        assert!((dcor_v(&s) - 1.0).abs() <= 1e-12);
        assert!((dcor_u(&s).unwrap() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn v_centring_is_tail_average_of_f() {
    let mut rng = rng(909);
    let m = random_matrix(&mut rng, 7);
    let a = v_center(&m);
    let n = m.n();
    for i in 0..n {
        for j in 0..n {
            let mut sum = 0.0;
            for k in 0..n {
                for l in 0..n {
                    sum += mdcov::kernel_f(m.get(i, j), m.get(k, l), m.get(i, k), m.get(j, l));
                }
            }
            assert!((sum / (n * n) as f64 - a.get(i, j)).abs() <= 1e-12);
        }
    }
}

#[test]
fn u_statistic_is_unbiased_under_independence() {
    let mut rng = rng(1001);
    let reps = 200;
    let vals: Vec<f64> = (0..reps)
        .map(|_| {
            let x: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
            let y: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
            dcov_u(&PairedSample::new(line(&x), line(&y)).unwrap()).unwrap()
        })
        .collect();
    let m = reps as f64;
    let mean = vals.iter().sum::<f64>() / m;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    assert!(mean.abs() <= 3.0 * sd / m.sqrt(), "mean {mean}, se {}", sd / m.sqrt());
}

/// Draws n i.i.d. atoms from a joint measure and returns the sample.
fn sample_from(theta: &FiniteJointMeasure, n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> PairedSample {
    let (k1, k2) = theta.shape();
    let cdf: Vec<f64> = theta
        .weights()
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let atoms: Vec<(usize, usize)> = (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
            let k = cdf.iter().position(|&c| u < c).unwrap_or(k1 * k2 - 1);
            (k / k2, k % k2)
        })
        .collect();
    let dx = DistanceMatrix::from_fn(n, |a, b| theta.space_x().get(atoms[a].0, atoms[b].0)).unwrap();
    let dy = DistanceMatrix::from_fn(n, |a, b| theta.space_y().get(atoms[a].1, atoms[b].1)).unwrap();
    PairedSample::new(dx, dy).unwrap()
}

#[test]
fn plug_in_estimator_is_consistent() {
    let sx = line(&[0.0, 1.0, 3.0]);
    let sy = line(&[0.0, 2.0, 2.5]);
    let theta = FiniteJointMeasure::from_rows(
        sx,
        sy,
        vec![vec![0.25, 0.05, 0.0], vec![0.05, 0.2, 0.05], vec![0.0, 0.1, 0.3]],
    )
    .unwrap();
    let truth = population_dcov(&theta).unwrap();
    assert!(truth > 0.01);
    let mut rng = rng(1102);
    let mut err_at = |n: usize| {
        median(
            (0..50)
                .map(|_| (dcov_v(&sample_from(&theta, n, &mut rng)) - truth).abs())
                .collect(),
        )
    };
    let small = err_at(50);
    let large = err_at(400);
    assert!(large < small, "median error n=50: {small}, n=400: {large}");
}
