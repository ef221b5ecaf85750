//! Slotted Monte-Carlo simulation of the deterministic-service queue fed by
//! PSRA arrivals.
//!
//! Slot `j` is `[jT, (j+1)T)`; `n(j)` is the queue just before the service
//! at `jT` and `m(j)` the arrivals during slot `j`, so
//! `n(j+1) = n(j) - 1{n(j) > 0} + m(j)`. The system starts empty at `j = 0`.
//!
//! With uniform delays and `λ = T = 1` the occupancy `|I_j|` (surviving
//! customers `k ∈ [j-L+1, j+L-1]` already arrived at `j`) and
//! `α(j) = n(j) - |I_j|` can be tracked as well.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dists::Family;
use crate::error::{invalid, Error, Result};
use crate::numeric::{self, CompensatedSum};
use crate::psra::PsraProcess;

const MEAN_BATCHES: usize = 50;
const JACKKNIFE_BLOCKS: usize = 100;

/// Simulation settings. Construct with [`SimConfig::new`] (or the
/// [`thinning`](SimConfig::thinning) / [`load`](SimConfig::load) presets)
/// to get valid defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub process: PsraProcess,
    pub service_time: f64,
    /// Number of service slots simulated.
    pub horizon: u64,
    /// Leading slots excluded from the statistics.
    pub warmup: u64,
    pub seed: u64,
    /// Scheduled indices simulated beyond each end of the horizon.
    pub index_margin: u64,
    pub track_occupancy: bool,
    /// Keep the per-slot series in the result (statistics are computed
    /// either way).
    pub keep_series: bool,
}

/// Busy period between two consecutive empty-queue slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BusyPeriod {
    /// `α` during the period (when tracked).
    pub alpha: Option<i64>,
    /// Slots from one empty slot to the next.
    pub length: u64,
}

/// Lag autocovariance with its jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoCovariance {
    pub lag: usize,
    pub value: f64,
    pub std_error: f64,
}

/// Mean busy-period length for one starting `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusyPeriodStat {
    pub alpha: i64,
    pub count: usize,
    pub mean_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// `histogram[k]` = measured slots with `n = k`.
    pub histogram: Vec<u64>,
    pub pmf: Vec<f64>,
    pub mean: f64,
    /// Batch-means standard error of `mean`.
    pub std_error: f64,
    /// `n(j)` over the measured slots.
    pub queue: Vec<u32>,
    /// `m(j)` over the measured slots.
    pub counts: Vec<u32>,
    /// Lag-1 autocovariance of `m(j)`, when the series is long enough.
    pub lag1_autocov: Option<AutoCovariance>,
    /// `α(j)` over the measured slots, when tracked.
    pub alpha: Option<Vec<i32>>,
    /// Completed busy periods that start after the warmup.
    pub busy_periods: Vec<BusyPeriod>,
    pub measured_slots: u64,
    pub total_slots: u64,
    pub total_arrivals: u64,
    pub total_services: u64,
    pub initial_queue: u64,
    pub final_queue: u64,
}

/// Pooled replications.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub pooled: SimResult,
    pub rep_means: Vec<f64>,
    /// Sample variance of `rep_means` (0 for a single replication).
    pub between_rep_variance: f64,
}

impl SimConfig {
    /// Defaults: warmup `20·max(σλ, L)` slots (capped at half the horizon),
    /// minimal index margin, no tracking.
    pub fn new(process: PsraProcess, service_time: f64, horizon: u64, seed: u64) -> Result<Self> {
        if !(service_time.is_finite() && service_time > 0.0) {
            return Err(invalid("service_time", "must be finite and positive"));
        }
        let spread = match process.delay().family() {
            Family::Gaussian { sigma } => sigma * process.rate(),
            Family::Uniform { half_support } => half_support as f64,
        };
        let warmup = (libm::ceil(20.0 * spread.max(1.0)) as u64).min(horizon / 2);
        let mut config = Self {
            process,
            service_time,
            horizon,
            warmup,
            seed,
            index_margin: 0,
            track_occupancy: false,
            keep_series: true,
        };
        config.index_margin = config.min_index_margin();
        config.validate()?;
        Ok(config)
    }

    /// `λ = T = 1`, survival `γ = ρ`.
    pub fn thinning(
        rho: f64,
        delay: crate::DelayDistribution,
        horizon: u64,
        seed: u64,
    ) -> Result<Self> {
        Self::new(PsraProcess::new(1.0, delay, rho)?, 1.0, horizon, seed)
    }

    /// `γ = λ = 1`, service time `T = ρ`.
    pub fn load(
        rho: f64,
        delay: crate::DelayDistribution,
        horizon: u64,
        seed: u64,
    ) -> Result<Self> {
        Self::new(PsraProcess::new(1.0, delay, 1.0)?, rho, horizon, seed)
    }

    pub fn with_warmup(mut self, warmup: u64) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_index_margin(mut self, margin: u64) -> Self {
        self.index_margin = margin;
        self
    }

    pub fn with_tracking(mut self, track: bool) -> Self {
        self.track_occupancy = track;
        self
    }

    pub fn with_series(mut self, keep: bool) -> Self {
        self.keep_series = keep;
        self
    }

    /// `ρ = γλT`.
    pub fn traffic_intensity(&self) -> f64 {
        self.process.effective_rate() * self.service_time
    }

    /// Smallest admissible index margin.
    pub fn min_index_margin(&self) -> u64 {
        let rate = self.process.rate();
        let m = match self.process.delay().family() {
            Family::Uniform { half_support } => {
                let l = half_support as f64;
                libm::ceil(l * rate).max(libm::ceil(l / (self.service_time * rate)))
            }
            Family::Gaussian { sigma } => libm::ceil((8.0 * sigma + self.service_time) * rate),
        };
        m as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.service_time.is_finite() && self.service_time > 0.0) {
            return Err(invalid("service_time", "must be finite and positive"));
        }
        if self.horizon == 0 || self.warmup >= self.horizon {
            return Err(invalid("warmup", "must be smaller than the horizon"));
        }
        if self.horizon > u32::MAX as u64 {
            return Err(invalid("horizon", "too many slots"));
        }
        if self.index_margin < self.min_index_margin() {
            return Err(invalid("index_margin", "too small for the delay spread"));
        }
        if self.track_occupancy {
            if !self.process.delay().is_compact() {
                return Err(Error::TrackingUnsupported(
                    "delays must have compact support",
                ));
            }
            if self.process.rate() != 1.0 || self.service_time != 1.0 {
                return Err(Error::TrackingUnsupported(
                    "needs unit rate and unit service time",
                ));
            }
        }
        Ok(())
    }
}

/// Run one replication on stream 0 of the seed.
pub fn run_queue_sim(config: &SimConfig) -> Result<SimResult> {
    run_replication(config, 0)
}

/// Run replication `index`: stream `index` of a ChaCha8 generator seeded
/// with `config.seed`.
pub fn run_replication(config: &SimConfig, index: u64) -> Result<SimResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index);
    simulate(config, &mut rng)
}

fn simulate<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<SimResult> {
    let horizon = config.horizon as usize;
    let warmup = config.warmup as usize;
    let process = &config.process;
    let rate = process.rate();
    let survival = process.survival();
    let delay = process.delay();
    let slot_len = config.service_time;
    let margin = config.index_margin as i64;

    let half = match delay.family() {
        Family::Uniform { half_support } => half_support as i64,
        Family::Gaussian { .. } => 0,
    };
    let mut counts = alloc::vec![0u32; horizon];
    // occupancy[j]: difference array of |I_j| for j in 0..=horizon.
    let mut occupancy: Vec<i32> = if config.track_occupancy {
        alloc::vec![0; horizon + 2]
    } else {
        Vec::new()
    };

    let last = libm::ceil(horizon as f64 * slot_len * rate) as i64 + margin;
    for k in -margin..=last {
        let keep = rng.random::<f64>() < survival;
        let xi = delay.sample(rng);
        if !keep {
            continue;
        }
        let slot = libm::floor((k as f64 / rate + xi) / slot_len);
        if slot >= 0.0 && slot < horizon as f64 {
            counts[slot as usize] += 1;
        }
        if config.track_occupancy {
            let from = (slot as i64 + 1).max(0);
            let to = (k + half - 1).min(horizon as i64);
            if from <= to {
                occupancy[from as usize] += 1;
                occupancy[to as usize + 1] -= 1;
            }
        }
    }

    let measured = horizon - warmup;
    let mut queue = Vec::with_capacity(measured);
    let mut alpha = config.track_occupancy.then(|| Vec::with_capacity(measured));
    let mut histogram: Vec<u64> = Vec::new();
    let mut busy_periods = Vec::new();
    let mut occ: i64 = 0;
    let mut n: u64 = 0;
    let mut total_services = 0u64;
    let mut total_arrivals = 0u64;
    // (first slot, α) of the period following the last empty slot.
    let mut open: Option<(usize, Option<i64>)> = None;

    for j in 0..horizon {
        let a = if config.track_occupancy {
            occ += occupancy[j] as i64;
            Some(n as i64 - occ)
        } else {
            None
        };
        if j >= warmup {
            queue.push(n as u32);
            if let (Some(series), Some(a)) = (alpha.as_mut(), a) {
                series.push(a as i32);
            }
            if histogram.len() <= n as usize {
                histogram.resize(n as usize + 1, 0);
            }
            histogram[n as usize] += 1;
            if let Some((start, None)) = open {
                if start == j {
                    open = Some((start, a));
                }
            }
        }
        if n == 0 {
            if j >= warmup {
                if let Some((start, period_alpha)) = open {
                    busy_periods.push(BusyPeriod {
                        alpha: period_alpha,
                        length: (j + 1 - start) as u64,
                    });
                }
                open = Some((j + 1, None));
            }
        } else {
            n -= 1;
            total_services += 1;
        }
        n += counts[j] as u64;
        total_arrivals += counts[j] as u64;
    }

    let counts_measured = counts.split_off(warmup);
    let mut result = summarize(SimParts {
        histogram,
        queue,
        counts: counts_measured,
        alpha,
        busy_periods,
        total_slots: horizon as u64,
        total_arrivals,
        total_services,
        final_queue: n,
    });
    if !config.keep_series {
        result.queue = Vec::new();
        result.counts = Vec::new();
        result.alpha = result.alpha.map(|_| Vec::new());
    }
    Ok(result)
}

struct SimParts {
    histogram: Vec<u64>,
    queue: Vec<u32>,
    counts: Vec<u32>,
    alpha: Option<Vec<i32>>,
    busy_periods: Vec<BusyPeriod>,
    total_slots: u64,
    total_arrivals: u64,
    total_services: u64,
    final_queue: u64,
}

fn summarize(parts: SimParts) -> SimResult {
    let measured = parts.histogram.iter().sum::<u64>();
    let pmf: Vec<f64> = parts
        .histogram
        .iter()
        .map(|&h| h as f64 / measured as f64)
        .collect();
    let mean = parts
        .histogram
        .iter()
        .enumerate()
        .map(|(k, &h)| k as f64 * h as f64)
        .collect::<CompensatedSum>()
        .value()
        / measured as f64;
    let series: Vec<f64> = parts.queue.iter().map(|&q| q as f64).collect();
    let std_error = numeric::batch_means_se(&series, MEAN_BATCHES);
    let lag1_autocov = empirical_autocovariance(&parts.counts, 1).ok();
    SimResult {
        histogram: parts.histogram,
        pmf,
        mean,
        std_error,
        queue: parts.queue,
        counts: parts.counts,
        lag1_autocov,
        alpha: parts.alpha,
        busy_periods: parts.busy_periods,
        measured_slots: measured,
        total_slots: parts.total_slots,
        total_arrivals: parts.total_arrivals,
        total_services: parts.total_services,
        initial_queue: 0,
        final_queue: parts.final_queue,
    }
}

/// Biased-normalised sample autocovariance
/// `(1/n) Σ_{j<n-lag} (x_j - x̄)(x_{j+lag} - x̄)` with a delete-a-block
/// jackknife standard error.
pub fn empirical_autocovariance<T: Copy + Into<f64>>(
    series: &[T],
    lag: usize,
) -> Result<AutoCovariance> {
    if lag == 0 {
        return Err(invalid("lag", "must be positive"));
    }
    let len = series.len();
    if len <= 10 * lag {
        return Err(Error::SeriesTooShort { len, lag });
    }
    let blocks = JACKKNIFE_BLOCKS.min(len / (10 * lag)).max(2);
    let size = len / blocks;
    let block_of = |j: usize| (j / size).min(blocks - 1);

    // Per block: samples, Σx, and for pairs (j, j+lag) whose first element
    // lies in the block: count, Σx_j x_{j+lag}, Σx_j, Σx_{j+lag}.
    let mut parts = alloc::vec![Moments::default(); blocks];
    for j in 0..len {
        let x: f64 = series[j].into();
        let part = &mut parts[block_of(j)];
        part.samples += 1;
        part.sum.add(x);
        if j + lag < len {
            let y: f64 = series[j + lag].into();
            part.pairs += 1;
            part.cross.add(x * y);
            part.first.add(x);
            part.second.add(y);
        }
    }
    let total = parts.iter().fold(Moments::default(), |acc, p| acc.plus(p));
    let value = total.autocov();
    let leave_out: Vec<f64> = parts.iter().map(|p| total.minus(p).autocov()).collect();
    let k = blocks as f64;
    let centre = numeric::sum(leave_out.iter().copied()) / k;
    let spread = numeric::sum(leave_out.iter().map(|v| (v - centre) * (v - centre)));
    Ok(AutoCovariance {
        lag,
        value,
        std_error: libm::sqrt((k - 1.0) / k * spread),
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    samples: usize,
    sum: CompensatedSum,
    pairs: usize,
    cross: CompensatedSum,
    first: CompensatedSum,
    second: CompensatedSum,
}

impl Moments {
    fn combine(&self, other: &Self, sign: f64) -> Self {
        let mix = |a: &CompensatedSum, b: &CompensatedSum| {
            let mut c = *a;
            c.add(sign * b.value());
            c
        };
        let count = |a: usize, b: usize| if sign > 0.0 { a + b } else { a - b };
        Self {
            samples: count(self.samples, other.samples),
            sum: mix(&self.sum, &other.sum),
            pairs: count(self.pairs, other.pairs),
            cross: mix(&self.cross, &other.cross),
            first: mix(&self.first, &other.first),
            second: mix(&self.second, &other.second),
        }
    }

    fn plus(&self, other: &Self) -> Self {
        self.combine(other, 1.0)
    }

    fn minus(&self, other: &Self) -> Self {
        self.combine(other, -1.0)
    }

    /// `Σ (x_j - m)(x_{j+lag} - m) / samples` with `m` the sample mean.
    fn autocov(&self) -> f64 {
        let n = self.samples as f64;
        let m = self.sum.value() / n;
        let centred = self.cross.value() - m * (self.first.value() + self.second.value())
            + self.pairs as f64 * m * m;
        centred / n
    }
}

/// Mean busy-period length per `α`, sorted by `α`.
pub fn busy_period_stats(result: &SimResult) -> Result<Vec<BusyPeriodStat>> {
    if result.alpha.is_none() {
        return Err(Error::NotTracked);
    }
    let mut stats: Vec<(i64, usize, u64)> = Vec::new();
    for period in &result.busy_periods {
        let Some(alpha) = period.alpha else { continue };
        match stats.binary_search_by_key(&alpha, |s| s.0) {
            Ok(i) => {
                stats[i].1 += 1;
                stats[i].2 += period.length;
            }
            Err(i) => stats.insert(i, (alpha, 1, period.length)),
        }
    }
    Ok(stats
        .into_iter()
        .map(|(alpha, count, total)| BusyPeriodStat {
            alpha,
            count,
            mean_length: total as f64 / count as f64,
        })
        .collect())
}

/// Run replications `0..n_reps` sequentially and pool them.
pub fn replicate(config: &SimConfig, n_reps: u64) -> Result<Replication> {
    if n_reps == 0 {
        return Err(invalid("n_reps", "must be at least 1"));
    }
    let runs = (0..n_reps)
        .map(|i| run_replication(config, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(pool(runs))
}

/// Pool replications in the given order. A single run is returned as is.
pub fn pool(mut runs: Vec<SimResult>) -> Replication {
    let rep_means: Vec<f64> = runs.iter().map(|r| r.mean).collect();
    if runs.len() == 1 {
        return Replication {
            pooled: runs.pop().expect("one run"),
            rep_means,
            between_rep_variance: 0.0,
        };
    }
    let k = runs.len() as f64;
    let grand = numeric::sum(rep_means.iter().copied()) / k;
    let between_rep_variance =
        numeric::sum(rep_means.iter().map(|m| (m - grand) * (m - grand))) / (k - 1.0);

    let width = runs.iter().map(|r| r.histogram.len()).max().unwrap_or(0);
    let mut histogram = alloc::vec![0u64; width];
    let mut parts_queue = Vec::new();
    let mut parts_counts = Vec::new();
    let mut parts_alpha = runs.iter().all(|r| r.alpha.is_some()).then(Vec::new);
    let mut busy_periods = Vec::new();
    let mut autocov = CompensatedSum::new();
    let mut autocov_var = CompensatedSum::new();
    let mut autocov_ok = true;
    let (mut total_slots, mut total_arrivals, mut total_services, mut final_queue) = (0, 0, 0, 0);
    for r in runs.iter_mut() {
        for (h, &c) in histogram.iter_mut().zip(&r.histogram) {
            *h += c;
        }
        parts_queue.append(&mut r.queue);
        parts_counts.append(&mut r.counts);
        if let (Some(all), Some(a)) = (parts_alpha.as_mut(), r.alpha.as_mut()) {
            all.append(a);
        }
        busy_periods.append(&mut r.busy_periods);
        match r.lag1_autocov {
            Some(ac) => {
                autocov.add(ac.value);
                autocov_var.add(ac.std_error * ac.std_error);
            }
            None => autocov_ok = false,
        }
        total_slots += r.total_slots;
        total_arrivals += r.total_arrivals;
        total_services += r.total_services;
        final_queue += r.final_queue;
    }
    let measured = histogram.iter().sum::<u64>();
    let pmf = histogram
        .iter()
        .map(|&h| h as f64 / measured as f64)
        .collect();
    let mean = histogram
        .iter()
        .enumerate()
        .map(|(n, &h)| n as f64 * h as f64)
        .collect::<CompensatedSum>()
        .value()
        / measured as f64;
    let lag1_autocov = autocov_ok.then(|| AutoCovariance {
        lag: 1,
        value: autocov.value() / k,
        std_error: libm::sqrt(autocov_var.value()) / k,
    });
    Replication {
        pooled: SimResult {
            histogram,
            pmf,
            mean,
            std_error: libm::sqrt(between_rep_variance / k),
            queue: parts_queue,
            counts: parts_counts,
            lag1_autocov,
            alpha: parts_alpha,
            busy_periods,
            measured_slots: measured,
            total_slots,
            total_arrivals,
            total_services,
            initial_queue: 0,
            final_queue,
        },
        rep_means,
        between_rep_variance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::DelayDistribution;
    use crate::fermi::{occupancy_dist_dp, OccupancyModel};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use std::vec;

    fn uniform(l: u32) -> DelayDistribution {
        DelayDistribution::uniform(l).unwrap()
    }

    fn gaussian(sigma: f64) -> DelayDistribution {
        DelayDistribution::gaussian(sigma).unwrap()
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = SimConfig::thinning(0.9, gaussian(1.0), 1000, 1).unwrap();
        assert_eq!(c.warmup, 20);
        assert_eq!(c.index_margin, 9);
        assert_abs_diff_eq!(c.traffic_intensity(), 0.9, epsilon = 1e-15);
        let c = SimConfig::load(0.9, uniform(3), 1000, 1).unwrap();
        assert_eq!(c.index_margin, 4);
        assert_eq!(c.warmup, 60);
        assert!(c.clone().with_index_margin(3).validate().is_err());
        assert!(c.clone().with_warmup(1000).validate().is_err());
        assert_eq!(
            c.clone().with_tracking(true).validate(),
            Err(Error::TrackingUnsupported(
                "needs unit rate and unit service time"
            ))
        );
        let g = SimConfig::thinning(1.0, gaussian(1.0), 1000, 1)
            .unwrap()
            .with_tracking(true);
        assert!(matches!(
            run_queue_sim(&g),
            Err(Error::TrackingUnsupported(_))
        ));
        assert_eq!(
            SimConfig::thinning(0.9, gaussian(10.0), 100, 1)
                .unwrap()
                .warmup,
            50
        );
    }

    #[test]
    fn critical_load_alpha_is_conserved() {
        let c = SimConfig::thinning(1.0, uniform(3), 100_000, 7)
            .unwrap()
            .with_tracking(true);
        let r = run_queue_sim(&c).unwrap();
        let alpha = r.alpha.as_ref().unwrap();
        let mut increments = 0;
        for j in 0..alpha.len() - 1 {
            let step = alpha[j + 1] - alpha[j];
            if r.queue[j] == 0 {
                assert_eq!(step, 1, "slot {j}");
                increments += 1;
            } else {
                assert_eq!(step, 0, "slot {j}");
            }
        }
        assert!(increments > 0);
    }

    #[test]
    fn alpha_drops_only_on_deletions() {
        let c = SimConfig::thinning(0.8, uniform(2), 50_000, 3)
            .unwrap()
            .with_tracking(true);
        let r = run_queue_sim(&c).unwrap();
        let alpha = r.alpha.as_ref().unwrap();
        for j in 0..alpha.len() - 1 {
            let step = alpha[j + 1] - alpha[j] - (r.queue[j] == 0) as i32;
            assert!(step == 0 || step == -1);
        }
        let occupancy: Vec<i64> = r
            .queue
            .iter()
            .zip(alpha)
            .map(|(&n, &a)| n as i64 - a as i64)
            .collect();
        assert!(occupancy.iter().all(|&o| (0..=3).contains(&o)));
    }

    #[test]
    fn tracked_occupancy_matches_fermi_law() {
        let c = SimConfig::thinning(1.0, uniform(2), 200_000, 11)
            .unwrap()
            .with_tracking(true);
        let r = run_queue_sim(&c).unwrap();
        let alpha = r.alpha.as_ref().unwrap();
        let mut freq = [0.0; 4];
        for (&n, &a) in r.queue.iter().zip(alpha) {
            freq[(n as i64 - a as i64) as usize] += 1.0 / alpha.len() as f64;
        }
        let exact = occupancy_dist_dp(&OccupancyModel::uniform(2).unwrap());
        for k in 0..4 {
            assert_abs_diff_eq!(freq[k], exact.probs[k], epsilon = 5e-3);
        }
    }

    #[test]
    fn conservation_and_pmf_identities() {
        for c in [
            SimConfig::thinning(0.9, gaussian(0.7), 20_000, 5).unwrap(),
            SimConfig::load(0.7, gaussian(2.0), 20_000, 6).unwrap(),
            SimConfig::load(0.95, uniform(4), 20_000, 8).unwrap(),
        ] {
            let r = run_queue_sim(&c).unwrap();
            assert_eq!(
                r.total_arrivals,
                r.total_services + r.final_queue - r.initial_queue
            );
            assert_abs_diff_eq!(r.pmf.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(numeric::pmf_mean(&r.pmf), r.mean, epsilon = 1e-9);
            assert_eq!(r.measured_slots, c.horizon - c.warmup);
            assert_eq!(r.queue.len() as u64, r.measured_slots);
            assert_eq!(r.counts.len() as u64, r.measured_slots);
        }
    }

    #[test]
    fn thinned_rate_is_conserved() {
        let c = SimConfig::thinning(0.9, gaussian(1.0), 1_000_000, 2024).unwrap();
        let r = run_queue_sim(&c).unwrap();
        let counts: Vec<f64> = r.counts.iter().map(|&m| m as f64).collect();
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        let se = numeric::batch_means_se(&counts, 50);
        assert!((mean - 0.9).abs() < 4.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn deterministic_given_seed() {
        let c = SimConfig::thinning(0.9, gaussian(1.0), 5_000, 99).unwrap();
        assert_eq!(run_queue_sim(&c).unwrap(), run_queue_sim(&c).unwrap());
        assert_ne!(
            run_queue_sim(&c).unwrap().counts,
            run_queue_sim(&c.clone().with_seed(100)).unwrap().counts
        );
        assert_ne!(
            run_replication(&c, 0).unwrap().counts,
            run_replication(&c, 1).unwrap().counts
        );
    }

    #[test]
    fn fixed_seed_regression() {
        let c = SimConfig::thinning(0.9, gaussian(1.0), 200, 2024).unwrap();
        let r = run_queue_sim(&c).unwrap();
        assert_eq!(&r.queue[..12], &FIXED_SEED_QUEUE_HEAD);
        assert_eq!(r.total_arrivals, FIXED_SEED_TOTAL_ARRIVALS);
        assert_eq!(r.mean, FIXED_SEED_MEAN);
    }

    const FIXED_SEED_QUEUE_HEAD: [u32; 12] = [1, 2, 2, 1, 1, 1, 0, 1, 0, 1, 0, 1];
    const FIXED_SEED_TOTAL_ARRIVALS: u64 = 180;
    const FIXED_SEED_MEAN: f64 = 1.7555555555555555;

    #[test]
    fn dropping_series_keeps_statistics() {
        let c = SimConfig::thinning(0.9, uniform(2), 20_000, 12)
            .unwrap()
            .with_tracking(true);
        let full = run_queue_sim(&c).unwrap();
        let lean = run_queue_sim(&c.clone().with_series(false)).unwrap();
        assert!(lean.queue.is_empty() && lean.counts.is_empty());
        assert_eq!(lean.alpha, Some(vec![]));
        assert_eq!(
            (lean.mean, lean.std_error, lean.lag1_autocov),
            (full.mean, full.std_error, full.lag1_autocov)
        );
        assert_eq!(lean.histogram, full.histogram);
        assert_eq!(lean.busy_periods, full.busy_periods);
    }

    #[test]
    fn replication_identity_and_scaling() {
        let c = SimConfig::thinning(0.8, gaussian(1.0), 100_000, 17).unwrap();
        let single = run_queue_sim(&c).unwrap();
        let one = replicate(&c, 1).unwrap();
        assert_eq!(one.pooled, single);
        let sixteen = replicate(&c, 16).unwrap();
        assert_eq!(sixteen, replicate(&c, 16).unwrap());
        let ratio = sixteen.pooled.std_error / single.std_error;
        assert!((0.25 / 1.6..0.25 * 1.6).contains(&ratio), "ratio {ratio}");
        assert_eq!(sixteen.rep_means.len(), 16);
        assert_eq!(sixteen.pooled.measured_slots, 16 * single.measured_slots);
        assert!(replicate(&c, 0).is_err());
    }

    #[test]
    fn autocovariance_examples() {
        assert_eq!(
            empirical_autocovariance(&[1.0f64; 10], 1),
            Err(Error::SeriesTooShort { len: 10, lag: 1 })
        );
        let alternating: Vec<f64> = (0..1000)
            .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let ac = empirical_autocovariance(&alternating, 1).unwrap();
        assert_abs_diff_eq!(ac.value, -0.999, epsilon = 1e-12);

        let c = SimConfig::thinning(1.0, gaussian(1.0), 400_000, 4).unwrap();
        let r = run_queue_sim(&c).unwrap();
        let ac = r.lag1_autocov.unwrap();
        assert!(ac.value + 3.0 * ac.std_error < 0.0);
        let analytic = c.process.slot_covariance(0.0, 1.0).unwrap();
        assert!(
            (ac.value - analytic).abs() < 3.0 * ac.std_error,
            "{} vs {analytic}",
            ac.value
        );

        let mut shuffled = r.counts.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
        let ac = empirical_autocovariance(&shuffled, 1).unwrap();
        assert!(ac.value.abs() < 3.0 * ac.std_error);
    }

    #[test]
    fn busy_periods_match_return_time() {
        let c = SimConfig::thinning(1.0, uniform(2), 60, 8)
            .unwrap()
            .with_warmup(0)
            .with_tracking(true);
        let rep = replicate(&c, 30_000).unwrap();
        let stats = busy_period_stats(&rep.pooled).unwrap();
        let dist = occupancy_dist_dp(&OccupancyModel::uniform(2).unwrap());
        let at = |alpha: i64| stats.iter().find(|s| s.alpha == alpha).copied().unwrap();
        let minus_one = at(-1);
        assert!(minus_one.count >= 10_000);
        let predicted = dist.mean_return_time(-1).unwrap();
        assert!((minus_one.mean_length - predicted).abs() < 0.25 * predicted);
        // P(|I| = 2) is above 1/(2L): the approximation overshoots.
        let minus_two = at(-2);
        assert!(!dist.return_time_reliable(-2));
        assert!(dist.mean_return_time(-2).unwrap() > minus_two.mean_length);

        let untracked = SimConfig::thinning(1.0, uniform(2), 60, 8).unwrap();
        assert_eq!(
            busy_period_stats(&run_queue_sim(&untracked).unwrap()),
            Err(Error::NotTracked)
        );
    }

    #[test]
    fn single_busy_period_is_its_own_mean() {
        let r = SimResult {
            histogram: vec![],
            pmf: vec![],
            mean: 0.0,
            std_error: 0.0,
            queue: vec![],
            counts: vec![],
            lag1_autocov: None,
            alpha: Some(vec![]),
            busy_periods: vec![BusyPeriod {
                alpha: Some(-1),
                length: 7,
            }],
            measured_slots: 0,
            total_slots: 0,
            total_arrivals: 0,
            total_services: 0,
            initial_queue: 0,
            final_queue: 0,
        };
        let s = busy_period_stats(&r).unwrap();
        assert_eq!(
            s,
            vec![BusyPeriodStat {
                alpha: -1,
                count: 1,
                mean_length: 7.0
            }]
        );
    }

    #[test]
    fn heavy_delay_spread_approaches_mdone() {
        for rho in [0.5, 0.7] {
            let c = SimConfig::load(rho, gaussian(2000.0), 2_000_000, 31).unwrap();
            let r = run_queue_sim(&c).unwrap();
            let target = crate::qanalytic::mdone_mean(rho).unwrap();
            assert!(
                (r.mean - target).abs() < 3.0 * r.std_error,
                "{rho}: {} ± {} vs {target}",
                r.mean,
                r.std_error
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn conservation_holds(rho in 0.3f64..1.0, sigma in 0.2f64..3.0, seed in any::<u64>(), load in any::<bool>()) {
            let c = if load {
                SimConfig::load(rho, gaussian(sigma), 3_000, seed).unwrap()
            } else {
                SimConfig::thinning(rho, gaussian(sigma), 3_000, seed).unwrap()
            };
            let r = run_queue_sim(&c).unwrap();
            prop_assert_eq!(r.total_arrivals, r.total_services + r.final_queue);
            prop_assert!((r.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn alpha_invariant_at_critical_load(l in 1u32..6, seed in any::<u64>()) {
            let c = SimConfig::thinning(1.0, uniform(l), 5_000, seed).unwrap().with_tracking(true);
            let r = run_queue_sim(&c).unwrap();
            let alpha = r.alpha.unwrap();
            for j in 0..alpha.len() - 1 {
                let step = alpha[j + 1] - alpha[j];
                prop_assert_eq!(step, (r.queue[j] == 0) as i32);
            }
        }
    }
}
