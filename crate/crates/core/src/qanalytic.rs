//! Single-server, deterministic-service queue solvers that treat the slot
//! counts as i.i.d.
//!
//! With `Q_n` the probability of `n` arrivals in one service slot, the
//! queue length seen just before a service evolves as the discrete GI/D/1
//! chain with balance equations
//!
//! ```text
//! P_0 = (P_0 + P_1) Q_0
//! P_n = P_0 Q_n + Σ_{k=1}^{n+1} P_k Q_{n-k+1}
//! ```
//!
//! and generating function `P(z) = P_0 (1 - z) / (1 - z/Q(z))`. Letting
//! `z → 1` with `P(1) = 1` forces `P_0 = 1 - Q'(1) = 1 - ρ`, which seeds
//! the recursion.
//!
//! Subtracting consecutive balance equations gives the level-crossing form
//! `P_{n+1} Q_0 = P_0 Q̄_n + Σ_{k=1}^{n} P_k Q̄_{n+1-k}` with
//! `Q̄_m = Σ_{j>m} Q_j`. Every term there is non-negative, so unlike the
//! textbook forward recursion it does not amplify rounding error through
//! repeated division by `Q_0`; that is the form used here.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::numeric::{self, CompensatedSum};
use crate::psra::{PsraProcess, SlotCountDistribution};

/// Hard cap on the number of stationary probabilities computed.
pub const DEFAULT_MAX_TERMS: usize = 10_000;

const TAIL_STOP: f64 = 1e-12;
const MASS_GATE: f64 = 1e-9;

/// Mean queue length of the M/D/1 queue, `ρ(2-ρ) / (2(1-ρ))`.
pub fn mdone_mean(rho: f64) -> Result<f64> {
    if rho.is_nan() || rho <= 0.0 {
        return Err(invalid("rho", "must be positive"));
    }
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    let idle = 1.0 - rho;
    Ok((1.0 - idle * idle) / (2.0 * idle))
}

/// Stationary queue-length law of the discrete GI/D/1 queue.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueStationaryDist {
    pub probs: Vec<f64>,
    /// `ρ`, the mean number of arrivals per slot.
    pub traffic_intensity: f64,
    /// `1 - Σ P_n` after truncation.
    pub residual: f64,
    /// Largest negative round-off clamped to zero (0 when none).
    pub max_clamp: f64,
    /// Whether the term cap, rather than the tail criterion, ended the series.
    pub hit_term_cap: bool,
}

impl QueueStationaryDist {
    pub fn pmf(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        numeric::pmf_mean(&self.probs)
    }
}

/// Solve the GI/D/1 balance equations for slot-count law `counts`.
///
/// The series stops once the unassigned mass `1 - Σ P_n` drops below
/// `1e-12`, or after `max_terms` (default [`DEFAULT_MAX_TERMS`]) terms; in
/// the latter case the result is only returned if the unassigned mass is
/// below `1e-9`.
pub fn gidone_stationary(
    counts: &SlotCountDistribution,
    max_terms: Option<usize>,
) -> Result<QueueStationaryDist> {
    let rho = counts.mean;
    if !(rho < 1.0) {
        return Err(Error::Unstable { rho });
    }
    let q = &counts.probs;
    let idle = q[0];
    if !(idle > 0.0) {
        return Err(Error::ZeroIdleProbability);
    }
    let max_terms = max_terms.unwrap_or(DEFAULT_MAX_TERMS).max(1);

    // upper[m] = Σ_{j > m} Q_j, accumulated from the top.
    let mut upper = alloc::vec![0.0; q.len()];
    let mut acc = CompensatedSum::new();
    for m in (0..q.len()).rev() {
        upper[m] = acc.value();
        acc.add(q[m]);
    }
    let upper_at = |m: usize| upper.get(m).copied().unwrap_or(0.0);

    let mut probs = Vec::with_capacity(64);
    probs.push(1.0 - rho);
    let mut total = CompensatedSum::new();
    total.add(probs[0]);
    let mut max_clamp: f64 = 0.0;
    let mut hit_term_cap = false;

    loop {
        let remaining = 1.0 - total.value();
        if remaining < TAIL_STOP {
            break;
        }
        if probs.len() >= max_terms {
            hit_term_cap = true;
            break;
        }
        let n = probs.len() - 1;
        let mut flow = CompensatedSum::new();
        flow.add(probs[0] * upper_at(n));
        let first = (n + 2).saturating_sub(q.len()).max(1);
        for k in first..=n {
            flow.add(probs[k] * upper_at(n + 1 - k));
        }
        let mut next = flow.value() / idle;
        if next < 0.0 {
            max_clamp = max_clamp.max(-next);
            next = 0.0;
        }
        probs.push(next);
        total.add(next);
    }

    let residual = 1.0 - total.value();
    if residual.abs() > MASS_GATE {
        return Err(Error::TruncationExceeded {
            residual,
            terms: probs.len(),
        });
    }
    Ok(QueueStationaryDist {
        probs,
        traffic_intensity: rho,
        residual,
        max_clamp,
        hit_term_cap,
    })
}

/// Mean queue length from the two window sums `S₁ = Σ p̃_i` and
/// `S₂ = Σ p̃_i²`: `(2S₁ - S₁² - S₂) / (2(1 - S₁))`.
pub fn independence_mean_from_sums(sum: f64, sum_sq: f64) -> Result<f64> {
    if !(sum < 1.0) {
        return Err(Error::Unstable { rho: sum });
    }
    Ok((2.0 * sum - sum * sum - sum_sq) / (2.0 * (1.0 - sum)))
}

/// Mean queue length of the GI/D/1 queue fed by the PSRA slot-count law at
/// window `(t, t+T]`, ignoring the correlation between slots.
pub fn independence_approx_mean(process: &PsraProcess, t: f64, width: f64) -> Result<f64> {
    let (sum, sum_sq) = process.window_power_sums(t, width)?;
    independence_mean_from_sums(sum, sum_sq)
}
