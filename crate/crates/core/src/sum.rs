//! Compensated summation for long reductions with mixed signs.

/// Sample sizes above this use compensated accumulation in the estimators.
pub const COMPENSATED_MIN_N: usize = 1000;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Sums `values`, switching to compensated accumulation when `n` is large.
pub fn sum_for_size(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    if n > COMPENSATED_MIN_N {
        values.collect::<NeumaierSum>().value()
    } else {
        values.sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(xs.iter().sum::<f64>(), 0.0);
        assert_eq!(xs.iter().copied().collect::<NeumaierSum>().value(), 2.0);
    }
}
