//! The pre-scheduled random arrivals process.
//!
//! Customer `i ∈ ℤ` is scheduled at `i/λ` and arrives at `t_i = i/λ + ξ_i`;
//! independently of everything else it is kept with probability `γ` and
//! cancelled otherwise. All window quantities below are built from
//! `p_i(t, t+T) = F(t+T-i/λ) - F(t-i/λ)`, scaled by `γ` where cancellations
//! matter.
//!
//! The number of arrivals in a window is Poisson-binomial over `{γ p_i}`.
//! Infinite index sums are cut to a finite active set whose omitted
//! expected mass is certified below a caller-chosen budget.

use alloc::vec::Vec;

use rand::Rng;

use crate::dists::{self, DelayDistribution};
use crate::error::{invalid, Error, Result};
use crate::numeric::{self, CompensatedSum};

/// Omitted-mass budget used by the moment, covariance and TV evaluators.
pub const DEFAULT_EPS: f64 = 1e-14;

const MAX_ACTIVE_INDICES: f64 = 5e7;

/// Arrival model: schedule rate `λ`, delay law, survival probability `γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsraProcess {
    rate: f64,
    delay: DelayDistribution,
    survival: f64,
}

/// Finite set of consecutive indices carrying (γ-scaled) window probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveWindow {
    pub first_index: i64,
    pub probs: Vec<f64>,
    /// Upper bound on the expected arrivals from indices left out.
    pub excluded_mass: f64,
}

/// Law of the number of arrivals in a window.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotCountDistribution {
    /// `probs[n] = P(n arrivals)`.
    pub probs: Vec<f64>,
    /// Mass of negligible trailing entries that were trimmed.
    pub truncation_residual: f64,
    /// Bound on the expected count carried by omitted indices.
    pub excluded_mass: f64,
    pub mean: f64,
    pub variance: f64,
}

impl SlotCountDistribution {
    /// Wrap an arbitrary pmf on `0..len`, e.g. a truncated Poisson law.
    pub fn from_pmf(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("probs", "pmf must not be empty"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid("probs", "entries must be finite and non-negative"));
        }
        let total = numeric::sum(probs.iter().copied());
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid("probs", "pmf must sum to 1 within 1e-9"));
        }
        let mean = numeric::pmf_mean(&probs);
        let second = numeric::sum(probs.iter().enumerate().map(|(n, p)| (n * n) as f64 * p));
        Ok(Self {
            truncation_residual: 1.0 - total,
            excluded_mass: 0.0,
            mean,
            variance: second - mean * mean,
            probs,
        })
    }

    /// `P(n arrivals)`, zero beyond the stored range.
    pub fn pmf(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn max_count(&self) -> usize {
        self.probs.len() - 1
    }
}

impl PsraProcess {
    pub fn new(rate: f64, delay: DelayDistribution, survival: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(invalid("rate", "must be finite and positive"));
        }
        if !(survival > 0.0 && survival <= 1.0) {
            return Err(invalid("survival", "must lie in (0, 1]"));
        }
        Ok(Self {
            rate,
            delay,
            survival,
        })
    }

    /// Schedule rate `λ`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn delay(&self) -> &DelayDistribution {
        &self.delay
    }

    /// Probability `γ` that a scheduled customer is not cancelled.
    pub fn survival(&self) -> f64 {
        self.survival
    }

    /// Long-run arrival rate `γλ`.
    pub fn effective_rate(&self) -> f64 {
        self.survival * self.rate
    }

    /// Scheduled time `i/λ` of customer `i`.
    pub fn scheduled_time(&self, index: i64) -> f64 {
        index as f64 / self.rate
    }

    /// `p_i(t, t+T)`: probability that customer `i` lands in `(t, t+T]`,
    /// ignoring cancellation.
    pub fn arrival_prob_in_window(&self, index: i64, t: f64, width: f64) -> f64 {
        let s = self.scheduled_time(index);
        self.delay.interval_mass(t - s, t + width - s)
    }

    /// Instantaneous rate `λ(t) = γ Σ_i f(t - i/λ)`; periodic with period `1/λ`.
    pub fn rate_at(&self, t: f64) -> f64 {
        let reach = match self.delay.support() {
            Some((_, hi)) => hi,
            None => {
                // Omitted density ≤ 2(φ(z)/σ + λ Φ̄(z)) for cut-off zσ.
                let sigma = self.delay.std_dev();
                let mut z: f64 = 4.0;
                while z < 40.0 {
                    let phi = dists::FRAC_1_SQRT_2PI * libm::exp(-0.5 * z * z);
                    let bound = 2.0 * (phi / sigma + self.rate * dists::normal_cdf(-z));
                    if bound < 1e-13 {
                        break;
                    }
                    z += 0.25;
                }
                z * sigma
            }
        };
        let lo = libm::ceil((t - reach) * self.rate) as i64;
        let hi = libm::floor((t + reach) * self.rate) as i64;
        let total = numeric::sum((lo..=hi).map(|i| self.delay.pdf(t - self.scheduled_time(i))));
        self.survival * total
    }

    /// Indices whose arrival can fall in `(t, t+width]`, with `γ p_i` for each.
    pub fn active_window(&self, t: f64, width: f64, eps: f64) -> Result<ActiveWindow> {
        check_window(t, width)?;
        if !(eps > 0.0) {
            return Err(invalid("eps", "must be positive"));
        }
        let (reach, excluded_mass) = match self.delay.support() {
            Some((_, hi)) => (hi, 0.0),
            None => {
                let sigma = self.delay.std_dev();
                let reach = self.delay.tail_margin(self.rate, eps).max(8.0 * sigma);
                let bound = dists::lattice_tail_bound(reach / sigma, self.rate, sigma);
                (reach, self.survival * bound)
            }
        };
        let span = (width + 2.0 * reach) * self.rate;
        if !span.is_finite() || span > MAX_ACTIVE_INDICES {
            return Err(Error::UnboundedIndexSet);
        }
        if excluded_mass > eps {
            return Err(Error::UnboundedIndexSet);
        }
        let lo = libm::ceil((t - reach) * self.rate) as i64;
        let hi = libm::floor((t + width + reach) * self.rate) as i64;
        let probs = (lo..=hi)
            .map(|i| self.survival * self.arrival_prob_in_window(i, t, width))
            .collect();
        Ok(ActiveWindow {
            first_index: lo,
            probs,
            excluded_mass,
        })
    }

    /// Exact law of `n(t, t+T)` over the active indices.
    pub fn slot_count_dist(&self, t: f64, width: f64, eps: f64) -> Result<SlotCountDistribution> {
        if !(eps > 0.0 && eps <= 1e-6) {
            return Err(invalid("eps", "must lie in (0, 1e-6]"));
        }
        let window = self.active_window(t, width, eps)?;
        let mut probs = poisson_binomial_pmf(&window.probs);
        let mut residual = 0.0;
        while probs.len() > 1 {
            let last = probs[probs.len() - 1];
            if residual + last >= 1e-18 {
                break;
            }
            residual += last;
            probs.pop();
        }
        Ok(SlotCountDistribution {
            probs,
            truncation_residual: residual,
            excluded_mass: window.excluded_mass,
            mean: numeric::sum(window.probs.iter().copied()),
            variance: numeric::sum(window.probs.iter().map(|p| p * (1.0 - p))),
        })
    }

    /// `(Σ γp_i, Σ γp_i(1 - γp_i))` for the window `(t, t+T]`.
    pub fn slot_moments(&self, t: f64, width: f64) -> Result<(f64, f64)> {
        let window = self.active_window(t, width, DEFAULT_EPS)?;
        let mut mean = CompensatedSum::new();
        let mut variance = CompensatedSum::new();
        for &p in &window.probs {
            mean.add(p);
            variance.add(p * (1.0 - p));
        }
        Ok((mean.value(), variance.value()))
    }

    /// `Σ γp_i` and `Σ (γp_i)²`, the two sums the independence formula needs.
    pub fn window_power_sums(&self, t: f64, width: f64) -> Result<(f64, f64)> {
        let window = self.active_window(t, width, DEFAULT_EPS)?;
        Ok((
            numeric::sum(window.probs.iter().copied()),
            numeric::sum(window.probs.iter().map(|p| p * p)),
        ))
    }

    /// Covariance of the counts in `(t, t+T]` and `(t+T, t+2T]`:
    /// `-Σ γ² p_i(t, t+T) p_i(t+T, t+2T)`.
    pub fn slot_covariance(&self, t: f64, width: f64) -> Result<f64> {
        let window = self.active_window(t, 2.0 * width, DEFAULT_EPS)?;
        let g2 = self.survival * self.survival;
        let total = numeric::sum((0..window.probs.len()).map(|k| {
            let i = window.first_index + k as i64;
            self.arrival_prob_in_window(i, t, width)
                * self.arrival_prob_in_window(i, t + width, width)
        }));
        Ok(-(g2 * total))
    }

    /// `Σ_n |q_n - Poisson(γλT)_n|`, both laws cut below `1e-12`.
    pub fn tv_distance_to_poisson(&self, t: f64, width: f64) -> Result<f64> {
        let counts = self.slot_count_dist(t, width, 1e-12)?;
        let poisson = numeric::poisson_pmf(self.effective_rate() * width, 1e-12);
        let len = counts.probs.len().max(poisson.len());
        let tv = numeric::sum(
            (0..len).map(|n| (counts.pmf(n) - poisson.get(n).copied().unwrap_or(0.0)).abs()),
        );
        Ok(tv.clamp(0.0, 2.0))
    }

    /// Sorted arrival times in `[t0, t1)`.
    ///
    /// Every index scheduled within the tail margin of the window draws a
    /// survival uniform and then a delay, in index order, so the output is a
    /// pure function of the generator state.
    pub fn sample_arrivals<R: Rng + ?Sized>(
        &self,
        t0: f64,
        t1: f64,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(invalid("t1", "window must satisfy t0 < t1"));
        }
        let margin = self.delay.tail_margin(self.rate, 1e-9);
        let lo = libm::ceil((t0 - margin) * self.rate) as i64;
        let hi = libm::floor((t1 + margin) * self.rate) as i64;
        let mut times = Vec::new();
        for i in lo..=hi {
            let keep = rng.random::<f64>() < self.survival;
            let delay = self.delay.sample(rng);
            if keep {
                let a = self.scheduled_time(i) + delay;
                if a >= t0 && a < t1 {
                    times.push(a);
                }
            }
        }
        times.sort_by(f64::total_cmp);
        Ok(times)
    }
}

fn check_window(t: f64, width: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(invalid("t", "must be finite"));
    }
    if !(width.is_finite() && width > 0.0) {
        return Err(invalid("width", "must be finite and positive"));
    }
    Ok(())
}

/// Poisson-binomial pmf of a sum of independent Bernoulli(`p_k`) variables,
/// by forward convolution `q ← q·(1-p) + shift(q)·p`.
pub fn poisson_binomial_pmf(probs: &[f64]) -> Vec<f64> {
    let mut q = Vec::with_capacity(probs.len() + 1);
    q.push(1.0);
    for &p in probs {
        if p == 0.0 {
            continue;
        }
        q.push(0.0);
        for n in (1..q.len()).rev() {
            q[n] = q[n] * (1.0 - p) + q[n - 1] * p;
        }
        q[0] *= 1.0 - p;
    }
    q
}
