//! Exact correlated model for compact-support delays (`λ = T = 1`, delays
//! uniform on `[-L, L]` or any other law supported there).
//!
//! At service epoch `j` every customer with index `<= j-L` has arrived and
//! none with index `>= j+L` has. The customers `j+m`, `m ∈ {-L+1, …, L-1}`,
//! have each arrived independently with probability `q_m = F(-m)` (customer
//! `j+m` is in by time `j` iff `ξ <= -m`). The occupancy `|I|` is the number
//! of those that have, so
//!
//! ```text
//! P(|I| = k) = P(|I| = 0) · e_k(w),   w_m = q_m / (1 - q_m),
//! P(|I| = 0) = Π_m (1 - q_m),
//! ```
//!
//! with `e_k` the elementary symmetric polynomial: the canonical partition
//! function of `k` fermions on `2L-1` levels with fugacities `w_m`. For
//! uniform delays `q_m = (L-m)/(2L)`, `w_m = (L-m)/(L+m)` and
//! `P(|I| = 0) = (2L)!/(2L)^{2L}`. For symmetric laws this offset
//! convention and `w_m = F(m)/(1-F(m))` give the same distribution.
//!
//! At critical load, `α = n - |I|` is constant within a busy period and
//! grows by one when the queue empties. Below critical load (cancellation
//! probability `1-ρ`) `α` performs a slow birth-death walk with up-rate
//! `P(|I| = -α)` (a busy-period end, approximating the mean return time by
//! `1/P(|I| = -α)`) and down-rate `1-ρ`; the mean queue is then
//! `Σ_α π_α (α + E_α|I|)`, where `E_α` only counts occupancies `|I| >= -α`.

use alloc::vec::Vec;
use core::ops::{Add, Div, Mul, Sub};

use num_traits::{One, Zero};
use twofloat::TwoFloat;

use crate::dists::DelayDistribution;
use crate::error::{invalid, Error, Result};
use crate::numeric::{self, CompensatedSum};

/// Largest `L` accepted by the power-sum expansion.
pub const DEFAULT_GINIBRE_CAP: u32 = 12;

/// Arrival-by-offset probabilities of the `2L-1` undecided customers.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyModel {
    half_support: u32,
    arrival_probs: Vec<f64>,
    weights: Vec<f64>,
}

impl OccupancyModel {
    /// Uniform delays on `[-L, L]`: `q_m = (L-m)/(2L)`.
    pub fn uniform(half_support: u32) -> Result<Self> {
        let delay = DelayDistribution::uniform(half_support)?;
        Self::from_delay(&delay)
    }

    /// `q_m = F(-m)` for a compact delay law with integer half-support.
    pub fn from_delay(delay: &DelayDistribution) -> Result<Self> {
        let Some((_, hi)) = delay.support() else {
            return Err(invalid(
                "delay",
                "occupancy model needs compact-support delays",
            ));
        };
        let l = hi as i64;
        let probs = (-l + 1..l).map(|m| delay.cdf(-(m as f64))).collect();
        Self::from_arrival_probs(probs)
    }

    /// Arbitrary probabilities for offsets `-L+1..=L-1`, in offset order.
    pub fn from_arrival_probs(arrival_probs: Vec<f64>) -> Result<Self> {
        if arrival_probs.len().is_multiple_of(2) {
            return Err(invalid(
                "arrival_probs",
                "need an odd number (2L-1) of offsets",
            ));
        }
        if arrival_probs.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return Err(invalid(
                "arrival_probs",
                "each probability must lie in (0, 1)",
            ));
        }
        let weights = arrival_probs.iter().map(|q| q / (1.0 - q)).collect();
        Ok(Self {
            half_support: (arrival_probs.len() as u32).div_ceil(2),
            arrival_probs,
            weights,
        })
    }

    pub fn half_support(&self) -> u32 {
        self.half_support
    }

    /// `q_m` in offset order `m = -L+1, …, L-1`.
    pub fn arrival_probs(&self) -> &[f64] {
        &self.arrival_probs
    }

    /// `w_m = q_m / (1 - q_m)` in offset order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn offsets(&self) -> core::ops::RangeInclusive<i64> {
        let l = self.half_support as i64;
        -l + 1..=l - 1
    }

    /// `E|I| = Σ q_m`.
    pub fn mean_occupancy(&self) -> f64 {
        numeric::sum(self.arrival_probs.iter().copied())
    }
}

/// `P(|I| = k)` for `k = 0..=2L-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyDist {
    half_support: u32,
    pub probs: Vec<f64>,
}

/// Outcome of the daily-horizon search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinAlpha {
    Alpha(i64),
    /// No `α <= 0` keeps the queue busy for the whole horizon.
    RequiresPositive,
}

/// `e_0, …, e_n` of `weights` by `e_k ← e_k + w·e_{k-1}`.
pub fn elementary_symmetric<T>(weights: &[T]) -> Vec<T>
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    let mut e = alloc::vec![T::zero(); weights.len() + 1];
    e[0] = T::one();
    for (m, w) in weights.iter().enumerate() {
        for k in (1..=m + 1).rev() {
            e[k] = e[k].clone() + w.clone() * e[k - 1].clone();
        }
    }
    e
}

/// `P(|I| = 0) = Π (1 - q_m)`.
pub fn empty_probability<T>(arrival_probs: &[T]) -> T
where
    T: Clone + One + Sub<Output = T> + Mul<Output = T>,
{
    arrival_probs
        .iter()
        .fold(T::one(), |acc, q| acc * (T::one() - q.clone()))
}

/// `P(|I| = k) = P(|I| = 0) e_k(w)`, generic over the number type so that
/// exact arithmetic can check the floating-point path.
pub fn occupancy_pmf<T>(arrival_probs: &[T]) -> Vec<T>
where
    T: Clone + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T>,
{
    let weights: Vec<T> = arrival_probs
        .iter()
        .map(|q| q.clone() / (T::one() - q.clone()))
        .collect();
    let empty = empty_probability(arrival_probs);
    elementary_symmetric(&weights)
        .into_iter()
        .map(|e| empty.clone() * e)
        .collect()
}

/// Occupancy law by the elementary-symmetric recursion.
pub fn occupancy_dist_dp(model: &OccupancyModel) -> OccupancyDist {
    let empty = empty_probability(&model.arrival_probs);
    let probs = elementary_symmetric(&model.weights)
        .into_iter()
        .map(|e| empty * e)
        .collect();
    OccupancyDist {
        half_support: model.half_support,
        probs,
    }
}

/// Occupancy law by the power-sum (Ginibre) expansion, capped at
/// [`DEFAULT_GINIBRE_CAP`].
pub fn occupancy_dist_ginibre(model: &OccupancyModel) -> Result<OccupancyDist> {
    occupancy_dist_ginibre_capped(model, DEFAULT_GINIBRE_CAP)
}

/// `P(|I| = k) = P(|I| = 0) Σ_{partitions of k} Π_j (-1)^{(j-1)m_j} (S_j/j)^{m_j} / m_j!`
/// with power sums `S_j = Σ_m w_m^j` and `m_j` the multiplicity of part `j`.
///
/// The terms alternate in sign and grow combinatorially, so large `L` is
/// refused.
pub fn occupancy_dist_ginibre_capped(model: &OccupancyModel, cap: u32) -> Result<OccupancyDist> {
    if model.half_support > cap {
        return Err(Error::GinibreCapExceeded {
            half_support: model.half_support,
            cap,
        });
    }
    let levels = model.weights.len();
    // scaled[j] = (-1)^{j-1} S_j / j, in double-double: the largest terms
    // exceed the result by up to (max w)^k, which overwhelms f64 from L = 6.
    let mut scaled = alloc::vec![TwoFloat::from(0.0); levels + 1];
    let mut powers: Vec<TwoFloat> = model.weights.iter().map(|w| TwoFloat::from(*w)).collect();
    for (j, slot) in scaled.iter_mut().enumerate().skip(1) {
        if j > 1 {
            for (p, w) in powers.iter_mut().zip(&model.weights) {
                *p *= *w;
            }
        }
        let s = powers.iter().fold(TwoFloat::from(0.0), |acc, p| acc + *p);
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        *slot = s * sign / j as f64;
    }
    let empty = empty_probability(&model.arrival_probs);
    let probs = (0..=levels)
        .map(|k| {
            let mut acc = TwoFloat::from(0.0);
            partition_terms(k, k, TwoFloat::from(1.0), &scaled, &mut acc);
            empty * f64::from(acc)
        })
        .collect();
    Ok(OccupancyDist {
        half_support: model.half_support,
        probs,
    })
}

/// Adds `Π_j scaled[j]^{m_j} / m_j!` for every partition of `remaining` into
/// parts no larger than `largest`.
fn partition_terms(
    remaining: usize,
    largest: usize,
    prefix: TwoFloat,
    scaled: &[TwoFloat],
    acc: &mut TwoFloat,
) {
    if remaining == 0 {
        *acc += prefix;
        return;
    }
    if largest == 0 {
        return;
    }
    let part = largest;
    let mut term = prefix;
    let mut mult = 0usize;
    loop {
        partition_terms(remaining - mult * part, part - 1, term, scaled, acc);
        if (mult + 1) * part > remaining {
            break;
        }
        mult += 1;
        term = term * scaled[part] / mult as f64;
    }
}

impl OccupancyDist {
    pub fn half_support(&self) -> u32 {
        self.half_support
    }

    /// `P(|I| = k)`, zero outside `0..=2L-1`.
    pub fn pmf(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        numeric::pmf_mean(&self.probs)
    }

    fn occupancy_for(&self, alpha: i64) -> Result<usize> {
        if alpha > 0 {
            return Err(invalid("alpha", "must be <= 0"));
        }
        let k = (-alpha) as usize;
        if k >= self.probs.len() {
            return Err(invalid("alpha", "must be >= -(2L-1)"));
        }
        Ok(k)
    }

    /// `T(α) ≈ 1/P(|I| = -α)`, the unconditioned mean busy-period length.
    pub fn mean_return_time(&self, alpha: i64) -> Result<f64> {
        let k = self.occupancy_for(alpha)?;
        let p = self.probs[k];
        if p <= 0.0 {
            return Err(Error::InfiniteReturnTime { occupancy: k });
        }
        Ok(1.0 / p)
    }

    /// Whether `P(|I| = -α) < 1/(2L)`, the regime where neglecting the
    /// conditioning in [`Self::mean_return_time`] is reasonable.
    pub fn return_time_reliable(&self, alpha: i64) -> bool {
        match self.occupancy_for(alpha) {
            Ok(k) => self.probs[k] < 1.0 / (2.0 * self.half_support as f64),
            Err(_) => false,
        }
    }

    /// Smallest `α ∈ [-L+1, 0]` with `T(α) > horizon`.
    pub fn min_alpha_for_horizon(&self, horizon: u64) -> Result<MinAlpha> {
        if horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        let l = self.half_support as i64;
        for alpha in -l + 1..=0 {
            match self.mean_return_time(alpha) {
                Ok(t) if t > horizon as f64 => return Ok(MinAlpha::Alpha(alpha)),
                Err(Error::InfiniteReturnTime { .. }) => return Ok(MinAlpha::Alpha(alpha)),
                _ => {}
            }
        }
        Ok(MinAlpha::RequiresPositive)
    }

    /// `E_α|I| = Σ_{k >= -α} k P_k / Σ_{k >= -α} P_k`.
    pub fn conditional_mean(&self, alpha: i64) -> Result<f64> {
        let min = if alpha >= 0 { 0 } else { (-alpha) as usize };
        let mass = numeric::sum(self.probs.iter().skip(min).copied());
        if !(mass > 0.0) {
            return Err(Error::EmptyConditioning { min });
        }
        let first = numeric::sum(
            self.probs
                .iter()
                .enumerate()
                .skip(min)
                .map(|(k, p)| k as f64 * p),
        );
        Ok(first / mass)
    }

    /// Stationary queue law at critical load once `α >= 1` is frozen:
    /// `P(n = k) = P(|I| = k - α)`.
    pub fn critical_queue_dist(&self, alpha: i64) -> Result<Vec<f64>> {
        if alpha < 1 {
            return Err(invalid("alpha", "must be >= 1"));
        }
        let shift = alpha as usize;
        let mut out = alloc::vec![0.0; shift + self.probs.len()];
        out[shift..].copy_from_slice(&self.probs);
        Ok(out)
    }

    /// `N = α + E|I|` at critical load with frozen `α`.
    pub fn critical_mean_queue(&self, alpha: i64) -> f64 {
        alpha as f64 + self.mean()
    }
}

/// Stationary law of the slow `α` walk on `{floor, …, 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaChain {
    floor: i64,
    /// `λ_α = P(|I| = -α)`, with `λ_0 = 0`; indexed from `floor`.
    pub up_rates: Vec<f64>,
    /// `μ = 1 - ρ`.
    pub down_rate: f64,
    /// `π_α`, indexed from `floor`.
    pub stationary: Vec<f64>,
}

impl AlphaChain {
    /// Chain on `{-L+1, …, 0}`.
    pub fn new(dist: &OccupancyDist, rho: f64) -> Result<Self> {
        Self::with_floor(dist, rho, -(dist.half_support as i64) + 1)
    }

    /// Chain on `{floor, …, 0}`, `-(2L-1) <= floor <= 0`.
    pub fn with_floor(dist: &OccupancyDist, rho: f64, floor: i64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(invalid("rho", "must lie in (0, 1)"));
        }
        let deepest = -(dist.probs.len() as i64 - 1);
        if floor > 0 || floor < deepest {
            return Err(invalid("floor", "must lie in [-(2L-1), 0]"));
        }
        let down_rate = 1.0 - rho;
        let up_rates: Vec<f64> = (floor..=0)
            .map(|alpha| {
                if alpha == 0 {
                    0.0
                } else {
                    dist.pmf((-alpha) as usize)
                }
            })
            .collect();
        // π_{a+1} = π_a λ_a / μ, renormalised as we go to stay in range.
        let mut stationary = Vec::with_capacity(up_rates.len());
        stationary.push(1.0);
        for a in 1..up_rates.len() {
            let next = stationary[a - 1] * up_rates[a - 1] / down_rate;
            stationary.push(next);
            if next > 1e200 {
                stationary.iter_mut().for_each(|p| *p /= next);
            }
        }
        let total = numeric::sum(stationary.iter().copied());
        stationary.iter_mut().for_each(|p| *p /= total);
        Ok(Self {
            floor,
            up_rates,
            down_rate,
            stationary,
        })
    }

    pub fn floor(&self) -> i64 {
        self.floor
    }

    pub fn states(&self) -> core::ops::RangeInclusive<i64> {
        self.floor..=0
    }

    /// `π_α`, zero off the state space.
    pub fn prob(&self, alpha: i64) -> f64 {
        if alpha < self.floor || alpha > 0 {
            return 0.0;
        }
        self.stationary[(alpha - self.floor) as usize]
    }

    /// `max_α |π_α λ_α - π_{α+1} μ|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        (0..self.stationary.len().saturating_sub(1))
            .map(|a| {
                (self.stationary[a] * self.up_rates[a] - self.stationary[a + 1] * self.down_rate)
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// `max_α |π P - π|` for the full one-step transition matrix, with
    /// boundary conditions `μ_floor = λ_0 = 0`.
    pub fn balance_residual(&self) -> f64 {
        let n = self.stationary.len();
        let down = |a: usize| if a == 0 { 0.0 } else { self.down_rate };
        (0..n)
            .map(|a| {
                let stay = self.stationary[a] * (1.0 - self.up_rates[a] - down(a));
                let from_below = if a > 0 {
                    self.stationary[a - 1] * self.up_rates[a - 1]
                } else {
                    0.0
                };
                let from_above = if a + 1 < n {
                    self.stationary[a + 1] * down(a + 1)
                } else {
                    0.0
                };
                (stay + from_below + from_above - self.stationary[a]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `N = Σ_α π_α (α + E_α|I|)` on the default chain.
pub fn correlated_mean_queue(dist: &OccupancyDist, rho: f64) -> Result<f64> {
    let chain = AlphaChain::new(dist, rho)?;
    correlated_mean_queue_on(dist, &chain)
}

/// `N = Σ_α π_α (α + E_α|I|)` on a given chain.
pub fn correlated_mean_queue_on(dist: &OccupancyDist, chain: &AlphaChain) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for alpha in chain.states() {
        acc.add(chain.prob(alpha) * (alpha as f64 + dist.conditional_mean(alpha)?));
    }
    Ok(acc.value())
}
