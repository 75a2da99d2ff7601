//! Negative-type geometry of a finite metric sample.
//!
//! A metric is of negative type on a sample when Σ αᵢαⱼ d(xᵢ, xⱼ) ≤ 0 for
//! every weight vector with Σ α = 0. Writing the sum-zero vectors in an
//! orthonormal basis Q of 𝟙^⊥ turns this into a plain eigenproblem for the
//! compressed form QᵀdQ: the sample is of negative type iff its largest
//! eigenvalue is ≤ 0. Positive eigenvectors are violation witnesses and
//! (near-)zero eigenvectors are directions δ with D(δ) = 0, which is how
//! failures of strong negative type show up.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{centred_basis, quadratic_form, symmetric_eigen};
use crate::metric::{validate_metric, DistanceMatrix, METRIC_TOL};
use crate::population::FiniteSignedMeasure;

/// Default relative tolerance (multiplied by the largest distance).
pub const NEGTYPE_TOL: f64 = 1e-10;

/// Relative clamp for slightly negative Gram eigenvalues in the embedding.
pub const EMBED_CLAMP: f64 = 1e-9;

/// A sum-zero weight vector with a positive quadratic form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// Scaled so the largest entry is +1.
    pub alpha: Vec<f64>,
    /// αᵀdα evaluated directly from the distance matrix.
    pub form: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegTypeReport {
    pub n: usize,
    /// Spectrum of the distance form restricted to sum-zero vectors
    /// (n − 1 values, descending).
    pub eigenvalues: Vec<f64>,
    pub scale: f64,
    pub tol: f64,
    pub is_negative_type_on_sample: bool,
    pub witness: Option<Witness>,
    /// Unit sum-zero vectors δ with |δᵀdδ| ≤ tol·scale.
    pub null_directions: Vec<Vec<f64>>,
}

impl NegTypeReport {
    /// Largest centred eigenvalue; 0 for a single point.
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn threshold(&self) -> f64 {
        self.tol * self.scale
    }

    pub fn to_json(&self) -> NegTypeJson {
        NegTypeJson {
            negative_type: self.is_negative_type_on_sample,
            max_eigenvalue: self.max_eigenvalue(),
            witness: self.witness.as_ref().map(|w| w.alpha.clone()),
            witness_form: self.witness.as_ref().map(|w| w.form),
            null_directions: self.null_directions.clone(),
            eigenvalues: self.eigenvalues.clone(),
            n: self.n,
            scale: self.scale,
            tol: self.tol,
        }
    }
}

/// Serialized report: `negative_type`, `max_eigenvalue`, `witness`,
/// `null_directions`, plus the full spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct NegTypeJson {
    pub negative_type: bool,
    pub max_eigenvalue: f64,
    pub witness: Option<Vec<f64>>,
    pub witness_form: Option<f64>,
    pub null_directions: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub n: usize,
    pub scale: f64,
    pub tol: f64,
}

fn require_metric(m: &DistanceMatrix) -> Result<()> {
    let report = validate_metric(m, METRIC_TOL);
    match report.first_failure() {
        Some(msg) => Err(Error::InvalidMetric(msg)),
        None => Ok(()),
    }
}

fn recentre(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Expands coordinates in the centred basis back to ℝⁿ.
fn lift(basis: &[Vec<f64>], coeffs: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (q, c) in basis.iter().zip(coeffs) {
        for (o, x) in out.iter_mut().zip(q) {
            *o += c * x;
        }
    }
    recentre(&mut out);
    out
}

/// Eigen-analysis of the distance form on sum-zero vectors.
///
/// `tol` is relative to the largest distance. A "no null direction" result
/// only describes this sample; it does not certify strong negative type for
/// the underlying space.
pub fn negative_type_check(m: &DistanceMatrix, tol: f64) -> Result<NegTypeReport> {
    require_metric(m)?;
    let n = m.n();
    let scale = m.max_abs();
    let basis = centred_basis(n);
    let k = basis.len();

    // Compressed form C = Qᵀ d Q.
    let dq: Vec<Vec<f64>> = basis
        .iter()
        .map(|q| (0..n).map(|i| m.row(i).iter().zip(q).map(|(d, x)| d * x).sum()).collect())
        .collect();
    let mut c = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let v: f64 = basis[a].iter().zip(&dq[b]).map(|(x, y)| x * y).sum();
            c[a * k + b] = v;
            c[b * k + a] = v;
        }
    }
    let eig = symmetric_eigen(&c, k)?;
    let threshold = tol * scale;
    let max = eig.max_value().unwrap_or(0.0);
    let is_negative = max <= threshold;

    let witness = if is_negative {
        None
    } else {
        let mut alpha = lift(&basis, &eig.vectors[0], n);
        let (pos, _) = alpha
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, &x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) });
        let s = alpha[pos];
        alpha.iter_mut().for_each(|x| *x /= s);
        recentre(&mut alpha);
        let form = quadratic_form(m.as_slice(), n, &alpha);
        Some(Witness { alpha, form })
    };

    let null_directions = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .filter(|(l, _)| l.abs() <= threshold)
        .map(|(_, v)| lift(&basis, v, n))
        .collect();

    Ok(NegTypeReport {
        n,
        eigenvalues: eig.values,
        scale,
        tol,
        is_negative_type_on_sample: is_negative,
        witness,
        null_directions,
    })
}

/// Coordinates φᵢ with ‖φᵢ − φⱼ‖² ≈ d(i, j).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Embedding {
    /// `coords[i]` is the embedded point for observation i.
    pub coords: Vec<Vec<f64>>,
    pub dimension: usize,
    /// max over pairs of |‖φᵢ − φⱼ‖² − d(i, j)|, unclamped.
    pub reconstruction_error: f64,
    pub base: usize,
}

/// Isometric embedding of (𝒳, √d) into Euclidean space.
///
/// Uses the Gram matrix of the divergence d_o relative to `base`:
/// G[i][j] = ½(d(i, o) + d(j, o) − d(i, j)), which is positive semidefinite
/// exactly when the sample is of negative type.
pub fn schoenberg_embed(m: &DistanceMatrix, base: usize) -> Result<Embedding> {
    require_metric(m)?;
    let n = m.n();
    if base >= n {
        return Err(Error::IndexOutOfRange { index: base, len: n });
    }
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = 0.5 * (m.get(i, base) + m.get(j, base) - m.get(i, j));
        }
    }
    let eig = symmetric_eigen(&g, n)?;
    let clamp = EMBED_CLAMP * g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if let Some(&min) = eig.values.last() {
        if min < -clamp {
            return Err(Error::NotNegativeType(format!(
                "Gram matrix has eigenvalue {min:e} below -{clamp:e}"
            )));
        }
    }
    let kept: Vec<(f64, &Vec<f64>)> = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .filter(|(l, _)| **l > clamp)
        .map(|(l, v)| (l.sqrt(), v))
        .collect();
    let coords: Vec<Vec<f64>> = (0..n)
        .map(|i| kept.iter().map(|(s, v)| s * v[i]).collect())
        .collect();

    let mut err = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let sq: f64 = coords[i]
                .iter()
                .zip(&coords[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            err = err.max((sq - m.get(i, j)).abs());
        }
    }
    Ok(Embedding {
        dimension: kept.len(),
        coords,
        reconstruction_error: err,
        base,
    })
}

/// Two distinct probability measures ν₁, ν₂ on the sample with D(ν₁ − ν₂) ≈ 0.
///
/// Takes the first null direction δ of [`negative_type_check`], oriented so
/// its largest entry is positive, and normalises its Hahn–Jordan parts:
/// ν₁ = δ⁺/‖δ⁺‖₁, ν₂ = δ⁻/‖δ⁻‖₁. Since Σδ = 0 the two norms agree and
/// ν₁ − ν₂ is a multiple of δ. Returns `None` when the sample shows no null
/// direction. Errors if the sample is not of negative type.
pub fn find_null_measure_pair(
    m: &DistanceMatrix,
    tol: f64,
) -> Result<Option<(FiniteSignedMeasure, FiniteSignedMeasure)>> {
    let report = negative_type_check(m, tol)?;
    if !report.is_negative_type_on_sample {
        return Err(Error::NotNegativeType(
            "null measure pairs are only meaningful for negative-type samples".into(),
        ));
    }
    let Some(delta) = report.null_directions.first() else {
        return Ok(None);
    };
    let peak = delta.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let cut = 1e-9 * peak;
    // First entry attaining the peak (within rounding) decides the sign.
    let lead = delta
        .iter()
        .position(|x| x.abs() >= peak * (1.0 - 1e-9))
        .unwrap_or(0);
    let sign = delta[lead].signum();
    let oriented: Vec<f64> = delta
        .iter()
        .map(|x| if x.abs() <= cut { 0.0 } else { sign * x })
        .collect();
    let plus: Vec<f64> = oriented.iter().map(|x| x.max(0.0)).collect();
    let minus: Vec<f64> = oriented.iter().map(|x| (-x).max(0.0)).collect();
    let normalise = |v: Vec<f64>| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
    };
    let nu1 = FiniteSignedMeasure::probability(m.clone(), normalise(plus))?;
    let nu2 = FiniteSignedMeasure::probability(m.clone(), normalise(minus))?;
    Ok(Some((nu1, nu2)))
}
