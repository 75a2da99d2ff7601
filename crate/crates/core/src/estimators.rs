//! Sample distance covariance and correlation.
//!
//! The O(n²) estimators work on double-centred distance matrices:
//!
//! * V-centring gives the plug-in (V-statistic) estimator, the distance
//!   covariance of the empirical measure.
//! * U-centring gives the unbiased estimator, equal to the U-statistic of
//!   the order-6 kernel `h` averaged over distinct index tuples.
//!
//! [`brute_force_v`] and [`brute_force_u`] evaluate those kernel averages
//! literally and serve as oracles for the fast paths.

use crate::error::{Error, Result};
use crate::metric::DistanceMatrix;
use crate::sum::sum_for_size;

/// Largest sample accepted by [`brute_force_v`] (n⁶ kernel evaluations).
pub const BRUTE_V_MAX_N: usize = 12;
/// Largest sample accepted by [`brute_force_u`].
pub const BRUTE_U_MAX_N: usize = 10;
/// Smallest sample for the unbiased estimator.
pub const U_MIN_N: usize = 6;
/// Smallest sample for U-centring itself.
pub const U_CENTER_MIN_N: usize = 4;

/// Two distance matrices over the same n observations.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    dx: DistanceMatrix,
    dy: DistanceMatrix,
}

impl PairedSample {
    pub fn new(dx: DistanceMatrix, dy: DistanceMatrix) -> Result<Self> {
        if dx.n() != dy.n() {
            return Err(Error::LengthMismatch {
                left: dx.n(),
                right: dy.n(),
            });
        }
        Ok(PairedSample { dx, dy })
    }

    pub fn n(&self) -> usize {
        self.dx.n()
    }

    pub fn dx(&self) -> &DistanceMatrix {
        &self.dx
    }

    pub fn dy(&self) -> &DistanceMatrix {
        &self.dy
    }

    /// The same sample with observations relabeled: both matrices permuted.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        PairedSample {
            dx: self.dx.permuted(perm),
            dy: self.dy.permuted(perm),
        }
    }

    pub fn swapped(&self) -> Self {
        PairedSample {
            dx: self.dy.clone(),
            dy: self.dx.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    V,
    U,
}

/// A double-centred distance matrix (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredMatrices {
    n: usize,
    data: Vec<f64>,
    centering: Centering,
}

impl CenteredMatrices {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn centering(&self) -> Centering {
        self.centering
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Σᵢⱼ self[i][j]·other[π(i)][π(j)], skipping the diagonal for U-centred
    /// inputs. `perm = None` is the identity.
    pub fn inner(&self, other: &CenteredMatrices, perm: Option<&[usize]>) -> f64 {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let skip_diag = self.centering == Centering::U;
        let terms = (0..n).flat_map(|i| {
            let pi = perm.map_or(i, |p| p[i]);
            (0..n).filter_map(move |j| {
                if skip_diag && i == j {
                    return None;
                }
                let pj = perm.map_or(j, |p| p[j]);
                Some(self.get(i, j) * other.get(pi, pj))
            })
        });
        sum_for_size(terms, n)
    }

    /// Inner product normalised into the covariance estimate.
    pub fn covariance(&self, other: &CenteredMatrices, perm: Option<&[usize]>) -> f64 {
        let n = self.n as f64;
        let s = self.inner(other, perm);
        match self.centering {
            Centering::V => s / (n * n),
            Centering::U => s / (n * (n - 3.0)),
        }
    }
}

fn row_sums(m: &DistanceMatrix) -> Vec<f64> {
    let n = m.n();
    (0..n).map(|i| sum_for_size(m.row(i).iter().copied(), n)).collect()
}

/// A[i][j] = a[i][j] − ā_i − ā_j + ā, means over all n indices.
pub fn v_center(m: &DistanceMatrix) -> CenteredMatrices {
    let n = m.n();
    let nf = n as f64;
    let rows = row_sums(m);
    let grand = sum_for_size(rows.iter().copied(), n) / (nf * nf);
    let means: Vec<f64> = rows.iter().map(|s| s / nf).collect();
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            data.push(m.get(i, j) - (means[i] + means[j]) + grand);
        }
    }
    CenteredMatrices {
        n,
        data,
        centering: Centering::V,
    }
}

/// Ã[i][j] = a[i][j] − aᵢ./(n−2) − a.ⱼ/(n−2) + a../((n−1)(n−2)) off the
/// diagonal, Ã[i][i] = 0.
pub fn u_center(m: &DistanceMatrix) -> Result<CenteredMatrices> {
    let n = m.n();
    if n < U_CENTER_MIN_N {
        return Err(Error::SampleTooSmall {
            n,
            min: U_CENTER_MIN_N,
        });
    }
    let nf = n as f64;
    let rows = row_sums(m);
    let total = sum_for_size(rows.iter().copied(), n);
    let grand = total / ((nf - 1.0) * (nf - 2.0));
    let marg: Vec<f64> = rows.iter().map(|s| s / (nf - 2.0)).collect();
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            data.push(if i == j {
                0.0
            } else {
                m.get(i, j) - (marg[i] + marg[j]) + grand
            });
        }
    }
    Ok(CenteredMatrices {
        n,
        data,
        centering: Centering::U,
    })
}

/// Plug-in estimator (1/n²)·Σ A∘B; the distance covariance of the empirical measure.
pub fn dcov_v(s: &PairedSample) -> f64 {
    v_center(s.dx()).covariance(&v_center(s.dy()), None)
}

/// Unbiased estimator (1/(n(n−3)))·Σ_{i≠j} Ã∘B̃. Can be negative.
pub fn dcov_u(s: &PairedSample) -> Result<f64> {
    let n = s.n();
    if n < U_MIN_N {
        return Err(Error::SampleTooSmall { n, min: U_MIN_N });
    }
    Ok(u_center(s.dx())?.covariance(&u_center(s.dy())?, None))
}

pub fn dvar_v(m: &DistanceMatrix) -> f64 {
    let a = v_center(m);
    a.covariance(&a, None)
}

pub fn dvar_u(m: &DistanceMatrix) -> Result<f64> {
    if m.n() < U_MIN_N {
        return Err(Error::SampleTooSmall {
            n: m.n(),
            min: U_MIN_N,
        });
    }
    let a = u_center(m)?;
    Ok(a.covariance(&a, None))
}

/// Ratio with the zero-denominator convention: 0 when either variance is 0.
pub(crate) fn correlation(cov: f64, var_x: f64, var_y: f64) -> f64 {
    let prod = var_x * var_y;
    if prod > 0.0 {
        cov / prod.sqrt()
    } else {
        0.0
    }
}

pub fn dcor_v(s: &PairedSample) -> f64 {
    let a = v_center(s.dx());
    let b = v_center(s.dy());
    correlation(
        a.covariance(&b, None),
        a.covariance(&a, None),
        b.covariance(&b, None),
    )
}

/// Unbiased-route correlation, reported raw: it can be negative or exceed
/// one, and is not clipped.
pub fn dcor_u(s: &PairedSample) -> Result<f64> {
    let n = s.n();
    if n < U_MIN_N {
        return Err(Error::SampleTooSmall { n, min: U_MIN_N });
    }
    let a = u_center(s.dx())?;
    let b = u_center(s.dy())?;
    Ok(correlation(
        a.covariance(&b, None),
        a.covariance(&a, None),
        b.covariance(&b, None),
    ))
}

/// f(z₁, z₂, z₃, z₄) = d₁₂ + d₃₄ − d₁₃ − d₂₄.
#[inline]
pub fn kernel_f(d12: f64, d34: f64, d13: f64, d24: f64) -> f64 {
    d12 + d34 - d13 - d24
}

#[inline]
fn f_at(m: &DistanceMatrix, z1: usize, z2: usize, z3: usize, z4: usize) -> f64 {
    kernel_f(m.get(z1, z2), m.get(z3, z4), m.get(z1, z3), m.get(z2, z4))
}

#[inline]
fn h_unchecked(s: &PairedSample, t: [usize; 6]) -> f64 {
    f_at(s.dx(), t[0], t[1], t[2], t[3]) * f_at(s.dy(), t[0], t[1], t[4], t[5])
}

/// The order-6 kernel h = f_𝒳(x₁, x₂, x₃, x₄)·f_𝒴(y₁, y₂, y₅, y₆) at sample
/// indices `t` (repeats allowed).
pub fn kernel_h(s: &PairedSample, t: [usize; 6]) -> Result<f64> {
    let n = s.n();
    if let Some(&index) = t.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index, len: n });
    }
    Ok(h_unchecked(s, t))
}

/// V-statistic of h: the literal sixfold average over all of {0..n}⁶.
pub fn brute_force_v(s: &PairedSample) -> Result<f64> {
    let n = s.n();
    if n > BRUTE_V_MAX_N {
        return Err(Error::SampleTooLarge {
            n,
            max: BRUTE_V_MAX_N,
        });
    }
    let mut total = 0.0;
    for i1 in 0..n {
        for i2 in 0..n {
            for i3 in 0..n {
                for i4 in 0..n {
                    let fx = f_at(s.dx(), i1, i2, i3, i4);
                    if fx == 0.0 {
                        continue;
                    }
                    for i5 in 0..n {
                        for i6 in 0..n {
                            total += fx * f_at(s.dy(), i1, i2, i5, i6);
                        }
                    }
                }
            }
        }
    }
    Ok(total / (n as f64).powi(6))
}

/// Average of h over every ordered 6-tuple of distinct indices.
pub fn brute_force_u(s: &PairedSample) -> Result<f64> {
    let n = s.n();
    if n < U_MIN_N {
        return Err(Error::SampleTooSmall { n, min: U_MIN_N });
    }
    if n > BRUTE_U_MAX_N {
        return Err(Error::SampleTooLarge {
            n,
            max: BRUTE_U_MAX_N,
        });
    }
    let mut total = 0.0;
    let mut count = 0u64;
    let mut t = [0usize; 6];
    distinct_tuples(n, 0, &mut t, &mut |t| {
        total += h_unchecked(s, *t);
        count += 1;
    });
    Ok(total / count as f64)
}

fn distinct_tuples(n: usize, depth: usize, t: &mut [usize; 6], visit: &mut impl FnMut(&[usize; 6])) {
    if depth == 6 {
        visit(t);
        return;
    }
    for i in 0..n {
        if t[..depth].contains(&i) {
            continue;
        }
        t[depth] = i;
        distinct_tuples(n, depth + 1, t, visit);
    }
}

/// Plug-in of the moment expansion
/// E[d_𝒳 d_𝒴] + E[d_𝒳]·E[d_𝒴] − 2·E[d_𝒳(X, X′)·d_𝒴(Y, Y″)].
pub fn brownian_plugin(s: &PairedSample) -> f64 {
    let n = s.n();
    let nf = n as f64;
    let (a, b) = (s.dx(), s.dy());
    let t1 = sum_for_size(
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y),
        n,
    ) / (nf * nf);
    let ra = row_sums(a);
    let rb = row_sums(b);
    let sa = sum_for_size(ra.iter().copied(), n) / (nf * nf);
    let sb = sum_for_size(rb.iter().copied(), n) / (nf * nf);
    let t2 = sa * sb;
    // Σ_{i,j,k} a_ij b_ik = Σ_i (Σ_j a_ij)(Σ_k b_ik)
    let t3 = sum_for_size(ra.iter().zip(&rb).map(|(x, y)| x * y), n) / (nf * nf * nf);
    t1 + t2 - 2.0 * t3
}
