//! Exact population-level distance covariance on finite-support measures.
//!
//! A measure is a weight vector over the points of a [`DistanceMatrix`].
//! Weights may be negative (signed measures); the centring operators and
//! covariance require probability measures. All integrals reduce to
//! weighted sums, so every quantity here is computed exactly up to
//! floating-point rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{build_distance_matrix, DistanceMatrix, MatrixJson, MetricSpec, Point};

/// Tolerance on total mass when checking for a probability measure.
pub const PROBABILITY_TOL: f64 = 1e-12;

/// Bound on |D(ν₁ − ν₂)| accepted when building the counterexample coupling.
pub const NULL_FORM_TOL: f64 = 1e-10;

/// Minimum sup-norm gap for two measures to count as distinct.
pub const DISTINCT_TOL: f64 = 1e-12;

/// Signed measure with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSignedMeasure {
    space: DistanceMatrix,
    weights: Vec<f64>,
}

impl FiniteSignedMeasure {
    /// Zero-weight atoms may share a location with other atoms; atoms that
    /// carry mass must be at distinct points.
    pub fn new(space: DistanceMatrix, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.n() {
            return Err(Error::LengthMismatch {
                left: space.n(),
                right: weights.len(),
            });
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::Input(format!("weight {i} is not finite")));
        }
        let charged: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] != 0.0).collect();
        for (a, &i) in charged.iter().enumerate() {
            for &j in &charged[a + 1..] {
                if space.get(i, j) <= 0.0 {
                    return Err(Error::Input(format!(
                        "support points {i} and {j} coincide (distance {})",
                        space.get(i, j)
                    )));
                }
            }
        }
        Ok(FiniteSignedMeasure { space, weights })
    }

    /// Like [`new`](Self::new) but also requires nonnegative weights summing to one.
    pub fn probability(space: DistanceMatrix, weights: Vec<f64>) -> Result<Self> {
        let m = Self::new(space, weights)?;
        m.require_probability()?;
        Ok(m)
    }

    pub fn uniform(space: DistanceMatrix) -> Result<Self> {
        let k = space.n();
        Self::probability(space, vec![1.0 / k as f64; k])
    }

    pub fn point_mass(space: DistanceMatrix, at: usize) -> Result<Self> {
        let k = space.n();
        if at >= k {
            return Err(Error::IndexOutOfRange { index: at, len: k });
        }
        let mut w = vec![0.0; k];
        w[at] = 1.0;
        Self::probability(space, w)
    }

    pub fn space(&self) -> &DistanceMatrix {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// |m|(𝒳), the total variation norm.
    pub fn total_variation(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    pub fn is_probability(&self) -> bool {
        self.require_probability().is_ok()
    }

    fn require_probability(&self) -> Result<()> {
        if let Some(i) = self.weights.iter().position(|&w| w < 0.0) {
            return Err(Error::NotProbability(format!(
                "weight {i} is negative ({})",
                self.weights[i]
            )));
        }
        let mass = self.total_mass();
        if (mass - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::NotProbability(format!("total mass {mass} != 1")));
        }
        Ok(())
    }

    /// `self − other`, both measures living on the same space.
    pub fn difference(&self, other: &FiniteSignedMeasure) -> Result<FiniteSignedMeasure> {
        if self.space != other.space {
            return Err(Error::InvalidArgument(
                "measures live on different spaces".into(),
            ));
        }
        let w = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| a - b)
            .collect();
        FiniteSignedMeasure::new(self.space.clone(), w)
    }

    /// Largest absolute weight difference against a measure on the same support.
    pub fn sup_distance(&self, other: &FiniteSignedMeasure) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }
}

/// Finite-support measure on a product space; weights are `k₁ × k₂` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteJointMeasure {
    space_x: DistanceMatrix,
    space_y: DistanceMatrix,
    weights: Vec<f64>,
}

impl FiniteJointMeasure {
    pub fn new(space_x: DistanceMatrix, space_y: DistanceMatrix, weights: Vec<f64>) -> Result<Self> {
        let (k1, k2) = (space_x.n(), space_y.n());
        if weights.len() != k1 * k2 {
            return Err(Error::Input(format!(
                "joint weights have {} entries, expected {k1}x{k2}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Input("joint weights must be finite".into()));
        }
        Ok(FiniteJointMeasure {
            space_x,
            space_y,
            weights,
        })
    }

    pub fn from_rows(space_x: DistanceMatrix, space_y: DistanceMatrix, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != space_x.n() || rows.iter().any(|r| r.len() != space_y.n()) {
            return Err(Error::Input(format!(
                "joint weight grid must be {}x{}",
                space_x.n(),
                space_y.n()
            )));
        }
        Self::new(space_x, space_y, rows.concat())
    }

    pub fn space_x(&self) -> &DistanceMatrix {
        &self.space_x
    }

    pub fn space_y(&self) -> &DistanceMatrix {
        &self.space_y
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.space_x.n(), self.space_y.n())
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.space_y.n() + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.weights.chunks(self.space_y.n()).map(<[f64]>::to_vec).collect()
    }

    pub fn is_probability(&self) -> bool {
        self.weights.iter().all(|&w| w >= 0.0)
            && (self.weights.iter().sum::<f64>() - 1.0).abs() <= PROBABILITY_TOL
    }

    fn require_probability(&self) -> Result<()> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(Error::NotProbability(
                "joint weights must be nonnegative and sum to 1".into(),
            ))
        }
    }

    /// First marginal (row sums).
    pub fn marginal_x(&self) -> Result<FiniteSignedMeasure> {
        let k2 = self.space_y.n();
        let w = self.weights.chunks(k2).map(|r| r.iter().sum()).collect();
        FiniteSignedMeasure::new(self.space_x.clone(), w)
    }

    /// Second marginal (column sums).
    pub fn marginal_y(&self) -> Result<FiniteSignedMeasure> {
        let (k1, k2) = self.shape();
        let w = (0..k2)
            .map(|j| (0..k1).map(|i| self.get(i, j)).sum())
            .collect();
        FiniteSignedMeasure::new(self.space_y.clone(), w)
    }

    pub fn sup_distance(&self, other: &FiniteJointMeasure) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }
}

/// Hahn–Jordan split `m = plus − minus` with disjointly supported parts.
pub fn hahn_jordan(m: &FiniteSignedMeasure) -> (FiniteSignedMeasure, FiniteSignedMeasure) {
    let plus = m.weights.iter().map(|&w| w.max(0.0)).collect();
    let minus = m.weights.iter().map(|&w| (-w).max(0.0)).collect();
    (
        FiniteSignedMeasure {
            space: m.space.clone(),
            weights: plus,
        },
        FiniteSignedMeasure {
            space: m.space.clone(),
            weights: minus,
        },
    )
}

/// Expected distance from support point `i`: Σⱼ d(i, j)·w(j).
pub fn a_mu(m: &FiniteSignedMeasure, i: usize) -> Result<f64> {
    if i >= m.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: m.len(),
        });
    }
    Ok(expected_distance(&m.space, &m.weights, i))
}

fn expected_distance(space: &DistanceMatrix, w: &[f64], i: usize) -> f64 {
    space.row(i).iter().zip(w).map(|(d, w)| d * w).sum()
}

/// The quadratic form D(m) = Σᵢⱼ w(i)·w(j)·d(i, j).
pub fn big_d(m: &FiniteSignedMeasure) -> f64 {
    (0..m.len())
        .map(|i| m.weights[i] * expected_distance(&m.space, &m.weights, i))
        .sum()
}

/// Doubly centred distance d_μ(i, j).
pub fn d_mu(m: &FiniteSignedMeasure, i: usize, j: usize) -> Result<f64> {
    m.require_probability()?;
    let (ai, aj) = (a_mu(m, i)?, a_mu(m, j)?);
    Ok(m.space.get(i, j) - ai - aj + big_d(m))
}

/// All d_μ values, row-major. Assumes `m` is a probability measure.
fn centred_table(m: &FiniteSignedMeasure) -> Vec<f64> {
    let k = m.len();
    let a: Vec<f64> = (0..k).map(|i| expected_distance(&m.space, &m.weights, i)).collect();
    let d = big_d(m);
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            out.push(m.space.get(i, j) - a[i] - a[j] + d);
        }
    }
    out
}

/// Generalised distance covariance of a joint probability measure:
/// Σ d_μ(x, x')·d_ν(y, y') θ(x, y) θ(x', y') over all pairs of atoms.
pub fn population_dcov(t: &FiniteJointMeasure) -> Result<f64> {
    t.require_probability()?;
    let (k1, k2) = t.shape();
    let dmu = centred_table(&t.marginal_x()?);
    let dnu = centred_table(&t.marginal_y()?);

    // inner[i][j'] = Σ_j θ(i, j)·d_ν(j, j')
    let mut inner = vec![0.0; k1 * k2];
    for i in 0..k1 {
        for j in 0..k2 {
            let w = t.get(i, j);
            if w == 0.0 {
                continue;
            }
            for jp in 0..k2 {
                inner[i * k2 + jp] += w * dnu[j * k2 + jp];
            }
        }
    }
    let mut total = 0.0;
    for i in 0..k1 {
        for ip in 0..k1 {
            let pair: f64 = (0..k2).map(|jp| inner[i * k2 + jp] * t.get(ip, jp)).sum();
            total += dmu[i * k1 + ip] * pair;
        }
    }
    Ok(total)
}

/// Coupling of `m` with itself along the diagonal, i.e. the law of (X, X).
pub fn diagonal_coupling(m: &FiniteSignedMeasure) -> Result<FiniteJointMeasure> {
    let k = m.len();
    let mut w = vec![0.0; k * k];
    for i in 0..k {
        w[i * k + i] = m.weights[i];
    }
    FiniteJointMeasure::new(m.space.clone(), m.space.clone(), w)
}

/// dvar(X) = dcov(X, X).
pub fn population_dvar(m: &FiniteSignedMeasure) -> Result<f64> {
    m.require_probability()?;
    population_dcov(&diagonal_coupling(m)?)
}

/// dcor with the convention dcor := 0 when either distance variance vanishes.
pub fn population_dcor(t: &FiniteJointMeasure) -> Result<f64> {
    let cov = population_dcov(t)?;
    let vx = population_dvar(&t.marginal_x()?)?;
    let vy = population_dvar(&t.marginal_y()?)?;
    let denom = (vx * vy).sqrt();
    Ok(if denom > 0.0 { cov / denom } else { 0.0 })
}

pub fn product_measure(m: &FiniteSignedMeasure, n: &FiniteSignedMeasure) -> Result<FiniteJointMeasure> {
    m.require_probability()?;
    n.require_probability()?;
    let w = m
        .weights
        .iter()
        .flat_map(|a| n.weights.iter().map(move |b| a * b))
        .collect();
    FiniteJointMeasure::new(m.space.clone(), n.space.clone(), w)
}

/// Builds θ = (δ_{x₀}×ν₁ + δ_{x₁}×ν₂)/2 on `space_x × 𝒴`, using the first two
/// points of `space_x`.
///
/// When D(ν₁ − ν₂) = 0 for distinct ν₁, ν₂, this θ has zero distance
/// covariance although it is not the product of its marginals.
pub fn construct_counterexample(
    space_x: &DistanceMatrix,
    nu1: &FiniteSignedMeasure,
    nu2: &FiniteSignedMeasure,
) -> Result<FiniteJointMeasure> {
    if space_x.n() < 2 || space_x.get(0, 1) <= 0.0 {
        return Err(Error::Counterexample(
            "the X space needs two distinct points".into(),
        ));
    }
    nu1.require_probability()?;
    nu2.require_probability()?;
    let delta = nu1.difference(nu2).map_err(|e| Error::Counterexample(e.to_string()))?;
    let gap = nu1.sup_distance(nu2);
    if gap <= DISTINCT_TOL {
        return Err(Error::Counterexample(format!(
            "measures are not distinct (sup gap {gap:e})"
        )));
    }
    let form = big_d(&delta);
    if form.abs() > NULL_FORM_TOL {
        return Err(Error::Counterexample(format!(
            "D(nu1 - nu2) = {form:e} is not zero; the pair does not witness a failure of strong negative type"
        )));
    }
    let (k1, k2) = (space_x.n(), nu1.len());
    let mut w = vec![0.0; k1 * k2];
    for j in 0..k2 {
        w[j] = nu1.weights[j] / 2.0;
        w[k2 + j] = nu2.weights[j] / 2.0;
    }
    FiniteJointMeasure::new(space_x.clone(), nu1.space.clone(), w)
}

/// The constant c_r = max(1, 2^{r−1}) in (α+β)^r ≤ c_r(α^r + β^r).
pub fn cr_constant(r: f64) -> f64 {
    f64::max(1.0, 2f64.powf(r - 1.0))
}

/// Support description in the measure JSON schema: a bare matrix, a
/// `{"n", "d"}` matrix document, or points plus a metric name.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceJson {
    Matrix(Vec<Vec<f64>>),
    MatrixDoc(MatrixJson),
    Points { points: Vec<Vec<f64>>, metric: String },
}

impl SpaceJson {
    pub fn to_matrix(&self) -> Result<DistanceMatrix> {
        match self {
            SpaceJson::Matrix(rows) => DistanceMatrix::from_rows(rows.clone()),
            SpaceJson::MatrixDoc(doc) => DistanceMatrix::try_from(doc.clone()),
            SpaceJson::Points { points, metric } => {
                let spec = MetricSpec::parse(metric)?;
                let pts: Vec<Point> = points.iter().cloned().map(Point::Vector).collect();
                build_distance_matrix(&pts, &spec)
            }
        }
    }
}

/// `{"support": ..., "weights": [...]}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureJson {
    pub support: SpaceJson,
    pub weights: Vec<f64>,
}

impl MeasureJson {
    pub fn to_measure(&self) -> Result<FiniteSignedMeasure> {
        FiniteSignedMeasure::new(self.support.to_matrix()?, self.weights.clone())
    }
}

/// `{"spaceX": ..., "spaceY": ..., "weights": [[...]]}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointMeasureJson {
    #[serde(rename = "spaceX")]
    pub space_x: SpaceJson,
    #[serde(rename = "spaceY")]
    pub space_y: SpaceJson,
    pub weights: Vec<Vec<f64>>,
}

impl JointMeasureJson {
    pub fn to_measure(&self) -> Result<FiniteJointMeasure> {
        FiniteJointMeasure::from_rows(
            self.space_x.to_matrix()?,
            self.space_y.to_matrix()?,
            self.weights.clone(),
        )
    }

    pub fn from_measure(t: &FiniteJointMeasure) -> Self {
        JointMeasureJson {
            space_x: SpaceJson::Matrix(t.space_x.to_rows()),
            space_y: SpaceJson::Matrix(t.space_y.to_rows()),
            weights: t.to_rows(),
        }
    }
}
