//! Outage sweeps, optimizer reports and the analytic-vs-Monte-Carlo suite.
//!
//! Sweep points run in parallel; results are collected in grid order so
//! every table is identical from run to run.

use rayon::prelude::*;
use risnoma_core::channels::{round_to_half_integer, CompositeLink, CompositeMethod, NakagamiParams, SnrCdf};
use risnoma_core::environment::generate_scenario;
use risnoma_core::noma::{ordered_cdf, PowerAllocation};
use risnoma_core::ruom::{ruom, OutageModel, RuomResult};
use risnoma_core::sim::{mc_noma_outage, mc_order_statistic_cdf, mc_snr_samples, McConfig};
use risnoma_core::system::{resolve_system, LinkType, SystemModel};
use serde::Serialize;

use crate::config::{BetaSetting, ExperimentConfig};
use crate::error::RunError;

/// One row of a sweep table. `uav` is the NOMA rank, 1 = weakest direct channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sweep_var: &'static str,
    pub sweep_value: f64,
    pub uav: usize,
    pub link_type: &'static str,
    pub outage_analytic: f64,
    pub outage_mc: Option<f64>,
    pub mc_halfwidth: Option<f64>,
    pub n_elements: u32,
}

pub const SWEEP_HEADER: [&str; 8] = [
    "sweep_var",
    "sweep_value",
    "uav",
    "link_type",
    "outage_analytic",
    "outage_mc",
    "mc_halfwidth",
    "n_elements",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<SweepRow>,
}

impl ResultTable {
    /// Analytic outages of one curve against N, in grid order. `family`
    /// selects the power or rate value; `None` matches every row.
    pub fn curve(&self, family: Option<f64>, uav: usize, link: LinkType) -> Vec<(u32, f64)> {
        self.rows
            .iter()
            .filter(|r| family.is_none_or(|f| r.sweep_value == f))
            .filter(|r| r.uav == uav && r.link_type == link.as_str())
            .map(|r| (r.n_elements, r.outage_analytic))
            .collect()
    }
}

/// Resolve the configured scenario, optionally overriding power and the common rate.
pub fn build_system(cfg: &ExperimentConfig, tx_power_dbm: f64, rate: Option<f64>) -> Result<SystemModel, RunError> {
    let mut c = cfg.clone();
    c.scenario.tx_power_dbm = tx_power_dbm;
    if let Some(r) = rate {
        c.noma.target_rate_bpc = r;
        c.noma.target_rates_bpc = None;
    }
    let scn = generate_scenario(&c.scenario_config(), c.seed)?;
    Ok(resolve_system(
        &c.environment_params()?,
        &scn,
        &c.fading(),
        c.composite_method(),
    )?)
}

/// The power allocation used by the sweeps: the fixed vector, or the
/// optimizer's output for the first configured λ.
pub fn sweep_allocation(cfg: &ExperimentConfig, model: &SystemModel) -> Result<PowerAllocation, RunError> {
    match &cfg.noma.beta {
        BetaSetting::Fixed(b) if cfg.noma.normalize_beta => Ok(PowerAllocation::normalized(b)?),
        BetaSetting::Fixed(b) => Ok(PowerAllocation::new(b.clone())?),
        BetaSetting::Keyword(_) => Ok(ruom(model, &cfg.ruom_params(cfg.ruom.lambda[0]))?.beta),
    }
}

struct Curve<'a> {
    /// Index of the curve family (power or rate value) in its grid.
    group: usize,
    sweep_var: &'static str,
    sweep_value: f64,
    model: &'a SystemModel,
    kind: LinkType,
    n: u32,
}

fn evaluate(curve: &Curve<'_>, alloc: &PowerAllocation, mc: Option<&McConfig>) -> Result<Vec<SweepRow>, RunError> {
    let m = curve.model;
    let estimates = match mc {
        Some(mc) => {
            let links = m.mc_links(curve.kind, &vec![curve.n; m.n_uavs()])?;
            Some(mc_noma_outage(&links, m.transmit_snr(), alloc, &m.rates, mc)?)
        }
        None => None,
    };
    (1..=m.n_uavs())
        .map(|rank| {
            let est = estimates.as_ref().map(|e| e[rank - 1]);
            Ok(SweepRow {
                sweep_var: curve.sweep_var,
                sweep_value: curve.sweep_value,
                uav: rank,
                link_type: curve.kind.as_str(),
                outage_analytic: m.outage_of(curve.kind, rank, alloc, curve.n)?,
                outage_mc: est.map(|e| e.value),
                mc_halfwidth: est.map(|e| e.half_width),
                n_elements: curve.n,
            })
        })
        .collect()
}

fn run_curves(curves: Vec<Curve<'_>>, alloc: &PowerAllocation, mc: Option<&McConfig>) -> Result<ResultTable, RunError> {
    let parts = curves
        .par_iter()
        .map(|c| evaluate(c, alloc, mc))
        .collect::<Result<Vec<_>, _>>()?;
    let mut keyed: Vec<(usize, SweepRow)> = curves
        .iter()
        .zip(parts)
        .flat_map(|(c, rows)| rows.into_iter().map(move |r| (c.group, r)))
        .collect();
    // Stable sort keeps N in grid order inside each (group, rank, link type) curve.
    let order = |r: &SweepRow| LinkType::ALL.iter().position(|k| k.as_str() == r.link_type);
    keyed.sort_by(|(ga, a), (gb, b)| {
        ga.cmp(gb)
            .then(a.uav.cmp(&b.uav))
            .then(order(a).cmp(&order(b)))
    });
    Ok(ResultTable {
        rows: keyed.into_iter().map(|(_, r)| r).collect(),
    })
}

fn mc_config(cfg: &ExperimentConfig, mc: bool) -> Option<McConfig> {
    mc.then(|| cfg.mc_config(cfg.mc.trials))
}

/// Outage of every UAV over the direct, RIS-only and composite links against N.
pub fn run_sweep_links(cfg: &ExperimentConfig, mc: bool) -> Result<ResultTable, RunError> {
    let model = build_system(cfg, cfg.scenario.tx_power_dbm, None)?;
    let alloc = sweep_allocation(cfg, &model)?;
    let curves = cfg
        .sweep
        .n_elements
        .iter()
        .flat_map(|&n| {
            LinkType::ALL.into_iter().map({
                let model = &model;
                move |kind| Curve {
                    group: 0,
                    sweep_var: "n_elements",
                    sweep_value: n as f64,
                    model,
                    kind,
                    n,
                }
            })
        })
        .collect();
    run_curves(curves, &alloc, mc_config(cfg, mc).as_ref())
}

fn composite_grid<'a>(
    cfg: &ExperimentConfig,
    sweep_var: &'static str,
    models: &'a [(f64, SystemModel)],
) -> Vec<Curve<'a>> {
    models
        .iter()
        .enumerate()
        .flat_map(|(group, (value, model))| {
            cfg.sweep.n_elements.iter().map(move |&n| Curve {
                group,
                sweep_var,
                sweep_value: *value,
                model,
                kind: LinkType::Composite,
                n,
            })
        })
        .collect()
}

/// Composite-link outage against N, one curve per transmit power.
pub fn run_sweep_power(cfg: &ExperimentConfig, mc: bool) -> Result<ResultTable, RunError> {
    let base = build_system(cfg, cfg.scenario.tx_power_dbm, None)?;
    let alloc = sweep_allocation(cfg, &base)?;
    let models = cfg
        .sweep
        .tx_power_dbm
        .iter()
        .map(|&p| Ok((p, build_system(cfg, p, None)?)))
        .collect::<Result<Vec<_>, RunError>>()?;
    run_curves(composite_grid(cfg, "tx_power_dbm", &models), &alloc, mc_config(cfg, mc).as_ref())
}

/// Composite-link outage against N, one curve per common target rate.
pub fn run_sweep_rate(cfg: &ExperimentConfig, mc: bool) -> Result<ResultTable, RunError> {
    let base = build_system(cfg, cfg.scenario.tx_power_dbm, None)?;
    let alloc = sweep_allocation(cfg, &base)?;
    let models = cfg
        .sweep
        .target_rate_bpc
        .iter()
        .map(|&r| Ok((r, build_system(cfg, cfg.scenario.tx_power_dbm, Some(r))?)))
        .collect::<Result<Vec<_>, RunError>>()?;
    run_curves(composite_grid(cfg, "target_rate", &models), &alloc, mc_config(cfg, mc).as_ref())
}

/// One optimizer run per λ.
#[derive(Debug, Clone)]
pub struct RuomRun {
    pub lambda: f64,
    pub outcome: Result<RuomResult, String>,
}

/// Per-iteration, per-UAV row of an optimizer trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub lambda: f64,
    pub t: usize,
    pub uav: usize,
    pub ris: usize,
    pub beta: f64,
    pub outage: f64,
    pub n_elements: u32,
    pub total_elements: u32,
    pub max_outage: f64,
    pub capacity_exhausted: bool,
}

/// Per-λ summary of an optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuomSummary {
    pub lambda: f64,
    pub delta: f64,
    pub converged: bool,
    pub iterations: usize,
    pub beta: Vec<f64>,
    pub outage: Vec<f64>,
    pub n_elements: Vec<u32>,
    pub total_elements_first: u32,
    pub total_elements_final: u32,
    pub all_below_delta: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RuomReport {
    pub delta: f64,
    pub model: SystemModel,
    pub runs: Vec<RuomRun>,
}

impl RuomReport {
    pub fn trace_rows(&self) -> Vec<TraceRow> {
        let mut rows = Vec::new();
        for run in &self.runs {
            let Ok(res) = &run.outcome else { continue };
            for it in &res.trace.iterations {
                for rank in 1..=self.model.n_uavs() {
                    rows.push(TraceRow {
                        lambda: run.lambda,
                        t: it.t,
                        uav: rank,
                        ris: self.model.ris_of(rank),
                        beta: it.beta[rank - 1],
                        outage: it.outage[rank - 1],
                        n_elements: it.n_elements[rank - 1],
                        total_elements: it.total_elements,
                        max_outage: it.max_outage,
                        capacity_exhausted: it.capacity_exhausted.contains(&rank),
                    });
                }
            }
        }
        rows
    }

    pub fn summaries(&self) -> Vec<RuomSummary> {
        self.runs
            .iter()
            .map(|run| match &run.outcome {
                Ok(res) => {
                    let first = res.trace.iterations.first();
                    let last = res.trace.iterations.last();
                    let outage = last.map(|l| l.outage.clone()).unwrap_or_default();
                    RuomSummary {
                        lambda: run.lambda,
                        delta: self.delta,
                        converged: res.converged,
                        iterations: res.trace.iterations.len(),
                        beta: res.beta.beta().to_vec(),
                        n_elements: last.map(|l| l.n_elements.clone()).unwrap_or_default(),
                        total_elements_first: first.map_or(0, |f| f.total_elements),
                        total_elements_final: last.map_or(0, |l| l.total_elements),
                        all_below_delta: outage.iter().all(|p| *p < self.delta),
                        outage,
                        error: None,
                    }
                }
                Err(e) => RuomSummary {
                    lambda: run.lambda,
                    delta: self.delta,
                    converged: false,
                    iterations: 0,
                    beta: Vec::new(),
                    outage: Vec::new(),
                    n_elements: Vec::new(),
                    total_elements_first: 0,
                    total_elements_final: 0,
                    all_below_delta: false,
                    error: Some(e.clone()),
                },
            })
            .collect()
    }

    /// Runs that failed or ended with some outage at or above δ.
    pub fn infeasible_lambdas(&self) -> Vec<f64> {
        self.summaries()
            .into_iter()
            .filter(|s| !s.all_below_delta)
            .map(|s| s.lambda)
            .collect()
    }
}

/// Run the optimizer once per configured λ on the configured scenario.
pub fn run_ruom_report(cfg: &ExperimentConfig) -> Result<RuomReport, RunError> {
    let model = build_system(cfg, cfg.scenario.tx_power_dbm, None)?;
    let runs = cfg
        .ruom
        .lambda
        .iter()
        .map(|&lambda| RuomRun {
            lambda,
            outcome: ruom(&model, &cfg.ruom_params(lambda)).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(RuomReport {
        delta: cfg.ruom.delta,
        model,
        runs,
    })
}

/// One comparison in the validation suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: &'static str,
    pub tx_power_dbm: Option<f64>,
    pub uav: usize,
    pub link_type: &'static str,
    /// SNR threshold, parent CDF value or element count, depending on the check.
    pub point: f64,
    pub analytic: f64,
    pub reference: f64,
    pub gap: f64,
    pub half_width: f64,
    pub tolerance: f64,
    pub bound: f64,
    /// The half-width exceeds the tolerance, so the bound is mostly statistical.
    pub underpowered: bool,
    /// Not compared (outage below the Monte Carlo floor).
    pub skipped: bool,
    pub pass: bool,
}

impl CheckRow {
    #[allow(clippy::too_many_arguments)]
    fn new(
        check: &'static str,
        uav: usize,
        link_type: &'static str,
        point: f64,
        analytic: f64,
        reference: f64,
        half_width: f64,
        tolerance: f64,
    ) -> Self {
        let gap = (analytic - reference).abs();
        let bound = tolerance + half_width;
        Self {
            check,
            tx_power_dbm: None,
            uav,
            link_type,
            point,
            analytic,
            reference,
            gap,
            half_width,
            tolerance,
            bound,
            underpowered: half_width > tolerance,
            skipped: false,
            pass: gap <= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub rows: Vec<CheckRow>,
}

impl ValidationReport {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| !r.skipped && !r.pass).count()
    }

    pub fn compared(&self) -> usize {
        self.rows.iter().filter(|r| !r.skipped).count()
    }

    pub fn underpowered(&self) -> bool {
        self.rows.iter().any(|r| !r.skipped && r.underpowered)
    }
}

fn quantile_grid(sorted: &[f64], points: usize) -> Vec<f64> {
    let n = sorted.len();
    (1..=points)
        .map(|i| sorted[((i * n) / (points + 1)).min(n - 1)])
        .collect()
}

fn empirical(sorted: &[f64], gamma: f64) -> f64 {
    sorted.partition_point(|x| *x <= gamma) as f64 / sorted.len() as f64
}

fn cdf_checks(cfg: &ExperimentConfig, model: &SystemModel, mc: &McConfig) -> Result<Vec<CheckRow>, RunError> {
    let v = &cfg.validate;
    let jobs: Vec<(usize, LinkType)> = (1..=model.n_uavs())
        .flat_map(|r| LinkType::ALL.into_iter().map(move |k| (r, k)))
        .collect();
    let parts = jobs
        .par_iter()
        .map(|&(rank, kind)| -> Result<Vec<CheckRow>, RunError> {
            let link = &model.links[rank - 1];
            let mut samples = mc_snr_samples(&link.mc_link(kind, v.n_elements)?, link.transmit_snr, mc)?;
            samples.sort_unstable_by(f64::total_cmp);
            let grid = quantile_grid(&samples, v.grid_points);
            let analytic = link.link(kind, v.n_elements, model.method)?;
            let hw = risnoma_core::sim::dkw_half_width(mc.trials);
            let mut rows = grid
                .iter()
                .map(|&g| {
                    Ok(CheckRow::new(
                        "snr_cdf",
                        rank,
                        kind.as_str(),
                        g,
                        analytic.cdf(g)?,
                        empirical(&samples, g),
                        hw,
                        v.tolerance_cdf,
                    ))
                })
                .collect::<Result<Vec<_>, RunError>>()?;
            if kind == LinkType::Composite {
                rows.extend(closed_form_checks(cfg, model, rank, &grid)?);
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(parts.into_iter().flatten().collect())
}

// Closed form against quadrature, both with the direct shape rounded to a half-integer.
fn closed_form_checks(
    cfg: &ExperimentConfig,
    model: &SystemModel,
    rank: usize,
    grid: &[f64],
) -> Result<Vec<CheckRow>, RunError> {
    let link = &model.links[rank - 1];
    let n = cfg.validate.n_elements;
    let direct = NakagamiParams::new(round_to_half_integer(link.direct.m), link.direct.omega)?;
    let fit = link
        .ris_params(n)?
        .map(|r| risnoma_core::channels::fit_laguerre(&r))
        .transpose()?;
    let budget = link.budget()?;
    let with = |method| CompositeLink {
        direct,
        fit,
        budget,
        method,
    };
    let closed = with(CompositeMethod::Closed);
    let quad = with(CompositeMethod::Quadrature);
    grid.iter()
        .map(|&g| {
            Ok(CheckRow::new(
                "composite_closed_form",
                rank,
                LinkType::Composite.as_str(),
                g,
                closed.cdf(g)?,
                quad.cdf(g)?,
                0.0,
                cfg.validate.tolerance_closed,
            ))
        })
        .collect()
}

const PARENT_POINTS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

fn order_statistic_checks(cfg: &ExperimentConfig, total: usize, mc: Option<&McConfig>) -> Result<Vec<CheckRow>, RunError> {
    let mut rows = Vec::new();
    for &p in &PARENT_POINTS {
        let mut mean = 0.0;
        for m in 1..=total {
            let f = ordered_cdf(p, m, total)?;
            mean += f / total as f64;
            if let Some(mc) = mc {
                let est = mc_order_statistic_cdf(p, m, total, mc)?;
                rows.push(CheckRow::new(
                    "order_statistic",
                    m,
                    "",
                    p,
                    f,
                    est.value,
                    est.half_width,
                    cfg.validate.tolerance_outage,
                ));
            }
        }
        rows.push(CheckRow::new("order_statistic_mean", 0, "", p, mean, p, 0.0, 1e-12));
    }
    Ok(rows)
}

fn outage_checks(
    cfg: &ExperimentConfig,
    tx_power_dbm: f64,
    model: &SystemModel,
    mc: &McConfig,
) -> Result<Vec<CheckRow>, RunError> {
    let v = &cfg.validate;
    let alloc = sweep_allocation(cfg, model)?;
    let parts = LinkType::ALL
        .par_iter()
        .map(|&kind| -> Result<Vec<CheckRow>, RunError> {
            let links = model.mc_links(kind, &vec![v.n_elements; model.n_uavs()])?;
            let est = mc_noma_outage(&links, model.transmit_snr(), &alloc, &model.rates, mc)?;
            (1..=model.n_uavs())
                .map(|rank| {
                    let analytic = model.outage_of(kind, rank, &alloc, v.n_elements)?;
                    let e = est[rank - 1];
                    let mut row = CheckRow::new(
                        "noma_outage",
                        rank,
                        kind.as_str(),
                        v.n_elements as f64,
                        analytic,
                        e.value,
                        e.half_width,
                        v.tolerance_outage,
                    );
                    row.tx_power_dbm = Some(tx_power_dbm);
                    row.skipped = analytic < v.min_outage;
                    Ok(row)
                })
                .collect()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Compare every closed form against Monte Carlo (and the closed composite
/// form against quadrature) on the configured scenario. SNR CDFs are checked
/// at the first validation power, NOMA outages at each. Without `mc` only the
/// deterministic comparisons run.
pub fn run_validate(cfg: &ExperimentConfig, mc: bool) -> Result<ValidationReport, RunError> {
    let powers = &cfg.validate.tx_power_dbm;
    let model = build_system(cfg, powers[0], None)?;
    let mc_cfg = cfg.mc_config(cfg.validate.trials);
    let mut rows = Vec::new();
    if mc {
        rows.extend(cdf_checks(cfg, &model, &mc_cfg)?);
    } else {
        for rank in 1..=model.n_uavs() {
            let link = &model.links[rank - 1];
            let gbar = link.budget()?.gamma_bar_d;
            let grid: Vec<f64> = (1..=cfg.validate.grid_points)
                .map(|i| gbar * 4.0 * i as f64 / cfg.validate.grid_points as f64)
                .collect();
            rows.extend(closed_form_checks(cfg, &model, rank, &grid)?);
        }
    }
    rows.extend(order_statistic_checks(cfg, model.n_uavs(), mc.then_some(&mc_cfg))?);
    if mc {
        for &p in powers {
            let model = build_system(cfg, p, None)?;
            rows.extend(outage_checks(cfg, p, &model, &mc_cfg)?);
        }
    }
    Ok(ValidationReport { rows })
}
