//! Small numerical helpers shared by the energy and potential code.

/// Neumaier (improved Kahan–Babuška) compensated accumulator.
///
/// Used wherever a sum must be reproducible to the last few ulps regardless
/// of the magnitude spread of its terms.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(iter);
    acc.value()
}

/// `x^p` for `x >= 0`; negative round-off and `-0.0` are clamped to zero first.
#[inline]
pub fn nonneg_pow(x: f64, p: f64) -> f64 {
    let x = if x > 0.0 { x } else { 0.0 };
    if x == 0.0 {
        0.0
    } else {
        x.powf(p)
    }
}

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
pub fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let terms = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(terms), 2.0);
        assert_ne!(terms.iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn nonneg_pow_clamps() {
        assert_eq!(nonneg_pow(-1e-18, 5.0 / 3.0), 0.0);
        assert_eq!(nonneg_pow(-0.0, 4.0 / 3.0), 0.0);
        assert!((nonneg_pow(8.0, 1.0 / 3.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(next_smooth(47), 48);
        assert_eq!(next_smooth(401), 405);
        assert_eq!(next_smooth(1), 1);
        assert_eq!(next_smooth(7), 8);
    }
}
