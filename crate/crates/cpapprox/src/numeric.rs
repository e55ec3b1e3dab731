//! Small numerical helpers: compensated summation and log-log least squares.

/// Kahan–Babuška compensated accumulator.
///
/// Convolution chains in this crate run to hundreds of operations; plain
/// summation would drift by ~1e-11 over such chains, which is visible against
/// the 1e-12 mass-conservation contract. Compensated summation keeps the
/// per-operation error at a few ulps.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    /// Adds `x` with Neumaier's variant of Kahan compensation, which stays
    /// accurate regardless of the relative magnitude of `x` and the running
    /// sum.
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Sums a slice with compensation.
pub(crate) fn kahan_total(values: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Ordinary least squares of `y` against `x`, returning
/// `(slope, intercept, r_squared)`.
///
/// When the responses are numerically constant the line `y = mean(y)` is an
/// exact fit, so `r_squared` is reported as 1 (the usual ratio would be 0/0).
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len(), "linear_fit needs paired samples");
    let n = x.len() as f64;
    let mean_x = kahan_total(x) / n;
    let mean_y = kahan_total(y) / n;
    let mut sxx = KahanSum::new();
    let mut sxy = KahanSum::new();
    let mut syy = KahanSum::new();
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        sxx.add(dx * dx);
        sxy.add(dx * dy);
        syy.add(dy * dy);
    }
    let sxx = sxx.value();
    let sxy = sxy.value();
    let syy = syy.value();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy <= 1e-18 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, intercept, r_squared)
}
