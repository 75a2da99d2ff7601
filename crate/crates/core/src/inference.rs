//! Independence testing.
//!
//! The permutation test is the reference calibration. Replication `r`
//! draws its permutation from a ChaCha8 stream keyed by `(seed, r)`, so the
//! p-value depends only on `(sample, statistic, R, seed)` and not on how
//! replications are scheduled across threads.
//!
//! The spectral approximation of the null law of n·dcov_v is experimental
//! and meant for cross-checking against the permutation distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{u_center, v_center, CenteredMatrices, PairedSample, U_MIN_N};
use crate::linalg::symmetric_eigen;

pub const RNG_ALGORITHM: &str = "ChaCha8";
pub const RNG_VERSION: &str =
    "rand_chacha 0.9, seed_from_u64(seed), stream = replication index, Fisher-Yates over u64 ranges";

/// Relative slack under which a permuted statistic counts as a tie.
const TIE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    DcovV,
    DcovU,
    DcorV,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::DcovV => "dcov_v",
            Statistic::DcovU => "dcov_u",
            Statistic::DcorV => "dcor_v",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dcov_v" => Ok(Statistic::DcovV),
            "dcov_u" => Ok(Statistic::DcovU),
            "dcor_v" => Ok(Statistic::DcorV),
            other => Err(Error::InvalidArgument(format!("unknown statistic {other:?}"))),
        }
    }

    fn min_n(self) -> usize {
        match self {
            Statistic::DcovU => U_MIN_N,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Permutation,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngInfo {
    pub algorithm: String,
    pub version: String,
}

impl Default for RngInfo {
    fn default() -> Self {
        RngInfo {
            algorithm: RNG_ALGORITHM.into(),
            version: RNG_VERSION.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: Statistic,
    pub observed: f64,
    pub p_value: f64,
    #[serde(rename = "R")]
    pub replications: usize,
    pub seed: u64,
    pub method: Method,
    pub rng: RngInfo,
}

/// Generator for replication `index` under `seed`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform permutation of 0..n by Fisher–Yates.
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i as u64) as usize;
        p.swap(i, j);
    }
    p
}

/// Centred matrices and normalisation cached across replications.
struct Prepared {
    a: CenteredMatrices,
    b: CenteredMatrices,
    norm: f64,
}

impl Prepared {
    fn new(s: &PairedSample, stat: Statistic) -> Result<Self> {
        let n = s.n();
        if n < stat.min_n() {
            return Err(Error::SampleTooSmall {
                n,
                min: stat.min_n(),
            });
        }
        let (a, b) = match stat {
            Statistic::DcovU => (u_center(s.dx())?, u_center(s.dy())?),
            _ => (v_center(s.dx()), v_center(s.dy())),
        };
        let norm = match stat {
            Statistic::DcorV => {
                let prod = a.covariance(&a, None) * b.covariance(&b, None);
                if prod > 0.0 {
                    prod.sqrt()
                } else {
                    0.0
                }
            }
            _ => 1.0,
        };
        Ok(Prepared { a, b, norm })
    }

    fn statistic(&self, perm: Option<&[usize]>) -> f64 {
        if self.norm == 0.0 {
            return 0.0;
        }
        self.a.covariance(&self.b, perm) / self.norm
    }
}

fn check_replications(r: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidArgument("need at least one replication".into()));
    }
    Ok(())
}

/// Observed statistic followed by its R permutation replicates.
pub fn permutation_distribution(
    s: &PairedSample,
    stat: Statistic,
    r: usize,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    check_replications(r)?;
    let prep = Prepared::new(s, stat)?;
    let n = s.n();
    let observed = prep.statistic(None);
    let reps = (0..r)
        .into_par_iter()
        .map(|k| {
            let perm = random_permutation(n, &mut replication_rng(seed, k as u64));
            prep.statistic(Some(&perm))
        })
        .collect();
    Ok((observed, reps))
}

/// Permutation test of independence with the add-one p-value
/// (1 + #{T_r ≥ T_obs}) / (1 + R); ties count against rejection.
pub fn permutation_test(s: &PairedSample, stat: Statistic, r: usize, seed: u64) -> Result<TestResult> {
    let (observed, reps) = permutation_distribution(s, stat, r, seed)?;
    let cutoff = observed - TIE_RTOL * observed.abs();
    let exceed = reps.iter().filter(|&&t| t >= cutoff).count();
    Ok(TestResult {
        statistic: stat,
        observed,
        p_value: (1 + exceed) as f64 / (1 + r) as f64,
        replications: r,
        seed,
        method: Method::Permutation,
        rng: RngInfo::default(),
    })
}

/// The operator matrix M[i][j] = A[i][j]·B[i][j]/n from V-centred marginals.
fn operator_matrix(s: &PairedSample) -> Vec<f64> {
    let n = s.n();
    let a = v_center(s.dx());
    let b = v_center(s.dy());
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x * y / n as f64)
        .collect()
}

fn mean_distance(s: &crate::metric::DistanceMatrix) -> f64 {
    let n = s.n() as f64;
    crate::sum::sum_for_size(s.as_slice().iter().copied(), s.n()) / (n * n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralNull {
    /// Eigenvalues of the empirical operator, descending.
    pub lambdas: Vec<f64>,
    /// D̂(μ)·D̂(ν), the grand means of the two distance matrices multiplied.
    pub offset: f64,
    /// Simulated values of Σ λᵢ(Zᵢ² − 1) + offset, approximating n·dcov_v under independence.
    pub draws: Vec<f64>,
}

impl SpectralNull {
    pub fn quantile(&self, q: f64) -> f64 {
        quantile(&self.draws, q)
    }
}

/// Empirical quantile (type 7, linear interpolation).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Spectral approximation to the null law of n·dcov_v.
pub fn spectral_null(s: &PairedSample, n_draws: usize, seed: u64) -> Result<SpectralNull> {
    let n = s.n();
    if n < 2 {
        return Err(Error::SampleTooSmall { n, min: 2 });
    }
    let eig = symmetric_eigen(&operator_matrix(s), n)?;
    let offset = mean_distance(s.dx()) * mean_distance(s.dy());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = (0..n_draws)
        .map(|_| {
            let chi: f64 = eig
                .values
                .iter()
                .map(|l| {
                    let z: f64 = rng.sample(StandardNormal);
                    l * (z * z - 1.0)
                })
                .sum();
            chi + offset
        })
        .collect();
    Ok(SpectralNull {
        lambdas: eig.values,
        offset,
        draws,
    })
}

/// Spectral-calibration test of n·dcov_v; p = (1 + #{draw ≥ n·T}) / (1 + draws).
pub fn spectral_test(s: &PairedSample, n_draws: usize, seed: u64) -> Result<TestResult> {
    check_replications(n_draws)?;
    let null = spectral_null(s, n_draws, seed)?;
    let observed = crate::estimators::dcov_v(s);
    let scaled = observed * s.n() as f64;
    let cutoff = scaled - TIE_RTOL * scaled.abs();
    let exceed = null.draws.iter().filter(|&&t| t >= cutoff).count();
    Ok(TestResult {
        statistic: Statistic::DcovV,
        observed,
        p_value: (1 + exceed) as f64 / (1 + n_draws) as f64,
        replications: n_draws,
        seed,
        method: Method::Spectral,
        rng: RngInfo {
            algorithm: RNG_ALGORITHM.into(),
            version: "rand_chacha 0.9, seed_from_u64(seed), single stream, rand_distr StandardNormal".into(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaDiagnostic {
    pub trace: f64,
    pub offset: f64,
    pub relative_gap: f64,
}

/// Compares trace(M) = Σ λ̂ᵢ with D̂(μ)·D̂(ν). A report only: the identity is
/// expected to hold asymptotically when both spaces have negative type.
pub fn sum_lambda_diagnostic(s: &PairedSample) -> Result<LambdaDiagnostic> {
    let n = s.n();
    if n < 2 {
        return Err(Error::SampleTooSmall { n, min: 2 });
    }
    let a = v_center(s.dx());
    let b = v_center(s.dy());
    let trace = (0..n).map(|i| a.get(i, i) * b.get(i, i)).sum::<f64>() / n as f64;
    let offset = mean_distance(s.dx()) * mean_distance(s.dy());
    let relative_gap = (trace - offset).abs() / offset.max(f64::MIN_POSITIVE);
    Ok(LambdaDiagnostic {
        trace,
        offset,
        relative_gap,
    })
}
