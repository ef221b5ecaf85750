//! Small numeric helpers shared across modules.

use alloc::vec::Vec;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
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

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator of floats.
pub fn sum(iter: impl IntoIterator<Item = f64>) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Poisson pmf `e^{-μ} μ^n / n!` for `n = 0, 1, ...`, extended until the
/// remaining upper tail is below `tail` (and at least through the mode).
pub fn poisson_pmf(mean: f64, tail: f64) -> Vec<f64> {
    let mut probs = Vec::new();
    let mut p = libm::exp(-mean);
    let mut cumulative = CompensatedSum::new();
    let mut n = 0usize;
    loop {
        probs.push(p);
        cumulative.add(p);
        let remaining = 1.0 - cumulative.value();
        if (n as f64) > mean && remaining < tail {
            break;
        }
        n += 1;
        p *= mean / n as f64;
        if n > 1_000_000 {
            break;
        }
    }
    probs
}

/// Mean of a pmf indexed from zero.
pub fn pmf_mean(probs: &[f64]) -> f64 {
    sum(probs.iter().enumerate().map(|(n, &p)| n as f64 * p))
}

/// Standard error of the mean of an autocorrelated series by
/// non-overlapping batch means.
pub fn batch_means_se(series: &[f64], batches: usize) -> f64 {
    let batches = batches.max(2);
    let size = series.len() / batches;
    if size == 0 {
        return f64::NAN;
    }
    let means: Vec<f64> = series
        .chunks_exact(size)
        .take(batches)
        .map(|c| sum(c.iter().copied()) / size as f64)
        .collect();
    let k = means.len() as f64;
    let grand = sum(means.iter().copied()) / k;
    let var = sum(means.iter().map(|m| (m - grand) * (m - grand))) / (k - 1.0);
    libm::sqrt(var / k)
}
