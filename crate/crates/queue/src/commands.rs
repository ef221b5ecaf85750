//! The CLI commands. Each one builds a [`Table`] and, on request, compares
//! it against the expected values.

use psra_core::fermi::{
    correlated_mean_queue_on, occupancy_dist_dp, occupancy_dist_ginibre, AlphaChain, MinAlpha,
    OccupancyModel,
};
use psra_core::qanalytic::{independence_approx_mean, mdone_mean};
use psra_core::sim::{busy_period_stats, SimConfig};
use psra_core::{DelayDistribution, Error, PsraProcess};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{self, require_grid, ExperimentConfig, Family, WindowTableConfig};
use crate::error::CliError;
use crate::output::{Cell, Table};
use crate::parallel;
use crate::reference::Reference;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    RateTable,
    IntensityTable,
    QueueTable,
    FigIndependence,
    FigCorrelated,
    Fermi,
    Simulate,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::RateTable,
        Command::IntensityTable,
        Command::QueueTable,
        Command::FigIndependence,
        Command::FigCorrelated,
        Command::Fermi,
        Command::Simulate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::RateTable => "rate-table",
            Command::IntensityTable => "intensity-table",
            Command::QueueTable => "queue-table",
            Command::FigIndependence => "fig-independence",
            Command::FigCorrelated => "fig-correlated",
            Command::Fermi => "fermi",
            Command::Simulate => "simulate",
        }
    }

    /// Whether the command draws random numbers.
    pub fn uses_seed(self) -> bool {
        matches!(
            self,
            Command::FigIndependence | Command::FigCorrelated | Command::Simulate
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl CheckReport {
    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    /// Effective command section, as TOML.
    pub config_toml: String,
    pub check: Option<CheckReport>,
}

pub fn run(command: Command, cfg: &ExperimentConfig, check: bool) -> Result<Outcome, CliError> {
    let (table, config_toml, report) = match command {
        Command::RateTable => with_section(&cfg.rate_table, rate_table(&cfg.rate_table, check))?,
        Command::IntensityTable => with_section(
            &cfg.intensity_table,
            window_table(&cfg.intensity_table, Reference::Intensity, check),
        )?,
        Command::QueueTable => with_section(
            &cfg.queue_table,
            window_table(&(&cfg.queue_table).into(), Reference::MeanQueue, check),
        )?,
        Command::FigIndependence => {
            with_section(&cfg.fig_independence, fig_independence(cfg, check))?
        }
        Command::FigCorrelated => with_section(&cfg.fig_correlated, fig_correlated(cfg, check))?,
        Command::Fermi => with_section(&cfg.fermi, fermi(&cfg.fermi, check))?,
        Command::Simulate => with_section(&cfg.simulate, simulate(cfg, check))?,
    };
    Ok(Outcome {
        table,
        config_toml,
        check: check.then(|| report.unwrap_or_default()),
    })
}

type Built = (Table, Option<CheckReport>);

fn with_section<S: Serialize>(
    section: &S,
    built: Result<Built, CliError>,
) -> Result<(Table, String, Option<CheckReport>), CliError> {
    let (table, report) = built?;
    let toml = toml::to_string(section).map_err(|e| CliError::Config(e.to_string()))?;
    Ok((table, toml, report))
}

fn gaussian_process(rate: f64, sigma: f64, survival: f64) -> Result<PsraProcess, CliError> {
    Ok(PsraProcess::new(
        rate,
        DelayDistribution::gaussian(sigma)?,
        survival,
    )?)
}

fn compare(report: &mut CheckReport, reference: Reference, sigma: f64, t: f64, value: f64) {
    if let Some(expected) = reference.lookup(sigma, t) {
        let tol = reference.tolerance();
        report.expect((value - expected).abs() <= tol, || {
            format!("sigma={sigma} t={t}: {value} differs from {expected} by more than {tol}")
        });
    }
}

fn rate_table(cfg: &config::RateTableConfig, check: bool) -> Result<Built, CliError> {
    require_grid("sigmas", &cfg.sigmas)?;
    require_grid("ts", &cfg.ts)?;
    let mut table = Table::new(vec!["sigma", "t", "rate"]);
    let mut report = CheckReport::default();
    let comparable = cfg.rate == 1.0;
    for &sigma in &cfg.sigmas {
        let process = gaussian_process(cfg.rate, sigma, 1.0)?;
        for &t in &cfg.ts {
            let value = process.rate_at(t);
            table.push(vec![sigma.into(), t.into(), value.into()]);
            if check && comparable {
                compare(&mut report, Reference::Rate, sigma, t, value);
            }
        }
    }
    Ok((table, check.then_some(report)))
}

fn window_table(
    cfg: &WindowTableConfig,
    reference: Reference,
    check: bool,
) -> Result<Built, CliError> {
    require_grid("sigmas", &cfg.sigmas)?;
    require_grid("ts", &cfg.ts)?;
    let column = match reference {
        Reference::MeanQueue => "mean_queue",
        _ => "intensity",
    };
    let mut table = Table::new(vec!["sigma", "t", column]);
    let mut report = CheckReport::default();
    let comparable = cfg.rate == 1.0 && cfg.service_time == 0.9;
    for &sigma in &cfg.sigmas {
        let process = gaussian_process(cfg.rate, sigma, 1.0)?;
        for &t in &cfg.ts {
            let value = match reference {
                Reference::MeanQueue => independence_approx_mean(&process, t, cfg.service_time)?,
                _ => process.slot_moments(t, cfg.service_time)?.0,
            };
            table.push(vec![sigma.into(), t.into(), value.into()]);
            if check && comparable {
                compare(&mut report, reference, sigma, t, value);
            }
        }
    }
    Ok((table, check.then_some(report)))
}

fn fig_independence(cfg: &ExperimentConfig, check: bool) -> Result<Built, CliError> {
    let fig = &cfg.fig_independence;
    require_grid("rhos", &fig.rhos)?;
    require_grid("sigmas", &fig.sigmas)?;
    let points: Vec<(f64, f64)> = fig
        .rhos
        .iter()
        .flat_map(|&rho| fig.sigmas.iter().map(move |&sigma| (rho, sigma)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(rho, sigma)| -> Result<[f64; 6], CliError> {
            let poisson = mdone_mean(rho)?;
            let process = gaussian_process(1.0, sigma, 1.0)?;
            let analytic = independence_approx_mean(&process, fig.t, rho)?;
            let sim = SimConfig::load(
                rho,
                DelayDistribution::gaussian(sigma)?,
                fig.horizon,
                cfg.seed,
            )?
            .with_series(false);
            let rep = parallel::replicate(&sim, fig.n_reps)?;
            Ok([
                rho,
                sigma,
                poisson,
                analytic,
                rep.pooled.mean,
                rep.pooled.std_error,
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(vec![
        "rho",
        "sigma",
        "poisson_mdone",
        "analytic_valore",
        "simulated_mean",
        "sim_se",
    ]);
    table.note("mode", "load (survival 1, rate 1, service time rho)");
    let mut report = CheckReport::default();
    for [rho, sigma, poisson, analytic, sim, se] in rows {
        table.push(
            [rho, sigma, poisson, analytic, sim, se]
                .map(Cell::from)
                .to_vec(),
        );
        if !check {
            continue;
        }
        report.expect(
            (poisson - rho * (2.0 - rho) / (2.0 * (1.0 - rho))).abs() < 1e-12,
            || format!("rho={rho}: poisson column {poisson}"),
        );
        if rho == 0.9 && sigma >= 0.5 {
            report.expect(analytic > sim + 3.0 * se, || {
                format!(
                    "rho={rho} sigma={sigma}: analytic {analytic} not above simulated {sim} ± {se}"
                )
            });
        }
        if rho == 0.5 && sigma == 2.0 {
            report.expect((analytic - sim).abs() < 3.0 * se, || {
                format!("rho={rho} sigma={sigma}: analytic {analytic} vs simulated {sim} ± {se}")
            });
        }
    }
    Ok((table, check.then_some(report)))
}

fn fig_correlated(cfg: &ExperimentConfig, check: bool) -> Result<Built, CliError> {
    let fig = &cfg.fig_correlated;
    require_grid("rhos", &fig.rhos)?;
    let dist = occupancy_dist_dp(&OccupancyModel::uniform(fig.half_support)?);
    let rows = fig
        .rhos
        .par_iter()
        .map(|&rho| -> Result<[f64; 5], CliError> {
            let delay = DelayDistribution::uniform(fig.half_support)?;
            let chain = AlphaChain::new(&dist, rho)?;
            let correlated = correlated_mean_queue_on(&dist, &chain)?;
            let process = PsraProcess::new(1.0, delay, rho)?;
            let valore = independence_approx_mean(&process, 0.5, 1.0)?;
            let sim = SimConfig::thinning(rho, delay, fig.horizon, cfg.seed)?.with_series(false);
            let rep = parallel::replicate(&sim, fig.n_reps)?;
            Ok([
                rho,
                rep.pooled.mean,
                rep.pooled.std_error,
                correlated,
                valore,
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(vec![
        "rho",
        "simulated_mean",
        "sim_se",
        "correlated_approx",
        "uncorrelated_valore",
    ]);
    table.note(
        "mode",
        format!(
            "thinning (rate 1, service time 1, uniform delays L={})",
            fig.half_support
        ),
    );
    let mut report = CheckReport::default();
    for [rho, sim, se, correlated, valore] in rows {
        table.push([rho, sim, se, correlated, valore].map(Cell::from).to_vec());
        if check {
            report.expect(valore > sim, || {
                format!("rho={rho}: valore {valore} not above simulated {sim}")
            });
            let rel = (correlated - sim).abs() / sim;
            report.expect(rel < 0.10, || {
                format!("rho={rho}: correlated {correlated} vs simulated {sim} ({rel:.3})")
            });
        }
    }
    Ok((table, check.then_some(report)))
}

fn fermi(cfg: &config::FermiConfig, check: bool) -> Result<Built, CliError> {
    let model = OccupancyModel::uniform(cfg.half_support)?;
    let dist = occupancy_dist_dp(&model);
    let ginibre = match occupancy_dist_ginibre(&model) {
        Ok(g) => Some(g),
        Err(Error::GinibreCapExceeded { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let floor = cfg.alpha_floor.unwrap_or(-(cfg.half_support as i64) + 1);
    let chain = AlphaChain::with_floor(&dist, cfg.rho, floor)?;
    let mean = correlated_mean_queue_on(&dist, &chain)?;
    let min_alpha = dist.min_alpha_for_horizon(cfg.day_operations)?;

    let mut table = Table::new(vec!["quantity", "index", "value", "aux"]);
    let mut report = CheckReport::default();
    for (k, &p) in dist.probs.iter().enumerate() {
        let g = ginibre.as_ref().map(|g| g.probs[k]);
        table.push(vec![
            "occupancy".into(),
            (k as i64).into(),
            p.into(),
            g.map_or(Cell::Empty, Cell::Num),
        ]);
        if let (true, Some(g)) = (check, g) {
            report.expect((p - g).abs() <= 1e-9, || {
                format!("P(|I|={k}): {p} vs power-sum {g}")
            });
        }
    }
    let mut unreliable = Vec::new();
    for alpha in chain.states() {
        let t = match dist.mean_return_time(alpha) {
            Ok(t) => t,
            Err(Error::InfiniteReturnTime { .. }) => f64::INFINITY,
            Err(e) => return Err(e.into()),
        };
        let reliable = dist.return_time_reliable(alpha);
        if !reliable {
            unreliable.push(alpha.to_string());
        }
        table.push(vec![
            "return_time".into(),
            alpha.into(),
            t.into(),
            (reliable as i64).into(),
        ]);
    }
    for alpha in chain.states() {
        table.push(vec![
            "stationary".into(),
            alpha.into(),
            chain.prob(alpha).into(),
            Cell::Empty,
        ]);
    }
    for alpha in chain.states() {
        let e = dist.conditional_mean(alpha)?;
        table.push(vec![
            "conditional_mean".into(),
            alpha.into(),
            e.into(),
            Cell::Empty,
        ]);
    }
    table.push(vec![
        "mean_queue".into(),
        Cell::Empty,
        mean.into(),
        Cell::Empty,
    ]);
    let day = cfg.day_operations as i64;
    table.push(match min_alpha {
        MinAlpha::Alpha(a) => vec!["min_alpha".into(), day.into(), a.into(), Cell::Empty],
        MinAlpha::RequiresPositive => vec![
            "min_alpha".into(),
            day.into(),
            Cell::Empty,
            "requires_alpha_ge_1".into(),
        ],
    });
    if !unreliable.is_empty() {
        table.note(
            "warning",
            format!(
                "P(|I|=-alpha) >= 1/(2L) for alpha in [{}]; return times there are overestimates",
                unreliable.join(", ")
            ),
        );
    }
    if check {
        let total: f64 = dist.probs.iter().sum();
        report.expect((total - 1.0).abs() < 1e-12, || {
            format!("occupancy mass {total}")
        });
        let residual = chain.balance_residual();
        report.expect(residual < 1e-12, || {
            format!("chain balance residual {residual}")
        });
    }
    Ok((table, check.then_some(report)))
}

fn simulate(cfg: &ExperimentConfig, check: bool) -> Result<Built, CliError> {
    let s = &cfg.simulate;
    let delay = match s.family {
        Family::Gaussian => DelayDistribution::gaussian(s.sigma)?,
        Family::Uniform => DelayDistribution::uniform(s.half_support)?,
    };
    let process = PsraProcess::new(s.rate, delay, s.survival)?;
    let mut sim = SimConfig::new(process, s.service_time, s.horizon, cfg.seed)?
        .with_tracking(s.track_occupancy);
    if let Some(w) = s.warmup {
        sim = sim.with_warmup(w);
    }
    if let Some(m) = s.index_margin {
        sim = sim.with_index_margin(m);
    }
    let rep = parallel::replicate(&sim, s.n_reps)?;
    let r = &rep.pooled;

    let mut columns = vec!["rep", "slot", "queue", "arrivals"];
    if r.alpha.is_some() {
        columns.push("alpha");
    }
    let mut table = Table::new(columns);
    let per_rep = (sim.horizon - sim.warmup) as usize;
    for (i, (&n, &m)) in r.queue.iter().zip(&r.counts).enumerate() {
        let mut row = vec![
            Cell::Int((i / per_rep) as i64),
            Cell::Int((sim.warmup as usize + i % per_rep) as i64),
            Cell::Int(n as i64),
            Cell::Int(m as i64),
        ];
        if let Some(alpha) = &r.alpha {
            row.push(Cell::Int(alpha[i] as i64));
        }
        table.push(row);
    }
    table.note(
        "summary.traffic_intensity",
        crate::output::format_float(sim.traffic_intensity()),
    );
    table.note("summary.warmup", sim.warmup);
    table.note("summary.index_margin", sim.index_margin);
    table.note("summary.mean_queue", crate::output::format_float(r.mean));
    table.note(
        "summary.std_error",
        crate::output::format_float(r.std_error),
    );
    if let Some(ac) = r.lag1_autocov {
        table.note(
            "summary.lag1_autocov",
            format!(
                "{} ± {}",
                crate::output::format_float(ac.value),
                crate::output::format_float(ac.std_error)
            ),
        );
    }
    table.note("summary.arrivals", r.total_arrivals);
    table.note("summary.services", r.total_services);
    table.note("summary.final_queue", r.final_queue);
    if r.alpha.is_some() {
        for stat in busy_period_stats(r)? {
            table.note(
                format!("summary.busy_period[alpha={}]", stat.alpha),
                format!(
                    "{} periods, mean length {}",
                    stat.count,
                    crate::output::format_float(stat.mean_length)
                ),
            );
        }
    }
    let mut report = CheckReport::default();
    if check {
        report.expect(
            r.total_arrivals == r.total_services + r.final_queue - r.initial_queue,
            || {
                format!(
                    "conservation: {} arrivals, {} services, final queue {}",
                    r.total_arrivals, r.total_services, r.final_queue
                )
            },
        );
        let mass: f64 = r.pmf.iter().sum();
        report.expect((mass - 1.0).abs() < 1e-12, || {
            format!("queue pmf mass {mass}")
        });
    }
    Ok((table, check.then_some(report)))
}
