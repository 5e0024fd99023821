//! Fairness-efficiency optimizer for NOMA power coefficients and RIS element counts.
//!
//! Each outer iteration first picks β by progressive grid search, minimizing
//! the worst per-UAV outage, then adjusts every UAV's element count on its
//! serving RIS so its outage just falls below δ. Iteration stops when β moves
//! less than `eps_conv` between iterations.

use crate::error::{Error, Result};
use crate::noma::PowerAllocation;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use libm::{ceil, fabs, log, pow, round, sqrt};

/// Per-rank outage as a function of β and the rank's element count.
pub trait OutageModel: Sync {
    fn n_uavs(&self) -> usize;
    /// Target rate per rank.
    fn rates(&self) -> &[f64];
    /// Element budget per RIS.
    fn ris_caps(&self) -> &[u32];
    /// Serving RIS of a 1-based rank.
    fn ris_of(&self, rank: usize) -> usize;
    fn outage(&self, rank: usize, alloc: &PowerAllocation, n_elements: u32) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuomParams {
    /// Resolution shrink factor per refinement.
    pub lambda: f64,
    /// Outage threshold.
    pub delta: f64,
    pub eps_in: f64,
    pub eps_ac: f64,
    /// Euclidean β-convergence tolerance.
    pub eps_conv: f64,
    pub max_iter: usize,
    /// Start each iteration's search from the previous β instead of the global grid.
    pub warm_start: bool,
}

impl Default for RuomParams {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            delta: 1e-3,
            eps_in: 1e-1,
            eps_ac: 1e-8,
            eps_conv: 1e-4,
            max_iter: 100,
            warm_start: false,
        }
    }
}

impl RuomParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason| Err(Error::InvalidParameter { name, reason });
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return bad("lambda", "must lie in (0, 1)");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta", "must lie in (0, 1)");
        }
        if !(self.eps_in > 0.0 && self.eps_in <= 1.0) {
            return bad("eps_in", "must lie in (0, 1]");
        }
        if !(self.eps_ac > 0.0 && self.eps_ac < self.eps_in) {
            return bad("eps_ac", "must be positive and below eps_in");
        }
        if !(self.eps_conv > 0.0) {
            return bad("eps_conv", "must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter", "must be at least 1");
        }
        Ok(())
    }

    /// Number of grid searches per iteration: resolutions eps_in·λ^k above eps_ac.
    pub fn refinements(&self) -> usize {
        let k = log(self.eps_ac / self.eps_in) / log(self.lambda);
        ceil(k - 1e-9).max(1.0) as usize
    }

    pub fn resolution(&self, k: usize) -> f64 {
        self.eps_in * pow(self.lambda, k as f64)
    }
}

/// Element counts per (rank, RIS) and per-RIS budgets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RisAssignment {
    /// `n[rank-1][k]`.
    pub n: Vec<Vec<u32>>,
    pub caps: Vec<u32>,
}

impl RisAssignment {
    pub fn zeros(n_uavs: usize, caps: &[u32]) -> Self {
        Self {
            n: vec![vec![0; caps.len()]; n_uavs],
            caps: caps.to_vec(),
        }
    }

    pub fn used(&self, k: usize) -> u32 {
        self.n.iter().map(|row| row[k]).sum()
    }

    pub fn total(&self) -> u32 {
        self.n.iter().flatten().sum()
    }

    pub fn within_caps(&self) -> bool {
        (0..self.caps.len()).all(|k| self.used(k) <= self.caps[k])
    }

    /// Elements per rank on its serving RIS.
    pub fn per_rank<M: OutageModel + ?Sized>(&self, model: &M) -> Vec<u32> {
        (0..self.n.len())
            .map(|r| self.n[r][model.ris_of(r + 1)])
            .collect()
    }
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct RuomIteration {
    pub t: usize,
    pub beta: Vec<f64>,
    /// Worst outage after each grid search, with the element counts held fixed.
    pub search_max_outage: Vec<f64>,
    /// Elements per rank after the efficiency step.
    pub n_elements: Vec<u32>,
    pub outage: Vec<f64>,
    pub max_outage: f64,
    pub total_elements: u32,
    /// Ranks whose RIS ran out of elements with outage still at or above δ.
    pub capacity_exhausted: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RuomTrace {
    pub iterations: Vec<RuomIteration>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuomResult {
    pub beta: PowerAllocation,
    pub assignment: RisAssignment,
    pub trace: RuomTrace,
    pub converged: bool,
}

fn feasible(beta: &[f64], rates: &[f64]) -> bool {
    let mut rest = 0.0;
    for j in (0..beta.len()).rev() {
        if !((pow(2.0, rates[j]) - 1.0) * rest < beta[j]) {
            return false;
        }
        rest += beta[j];
    }
    true
}

// Grid multiples kε (and 1) in [lo, hi].
fn grid_values(eps: f64, lo: f64, hi: f64) -> Vec<f64> {
    let top = (1.0 / eps + 1e-9) as u64;
    let first = ceil(lo / eps - 1e-9).max(0.0) as u64;
    let mut v: Vec<f64> = (first..=top)
        .map(|k| k as f64 * eps)
        .take_while(|x| *x <= hi + 1e-12 * eps)
        .collect();
    if (top as f64) * eps < 1.0 - 1e-12 && hi >= 1.0 {
        v.push(1.0);
    }
    v
}

fn dedup_sorted(v: &mut Vec<f64>, scale: f64) {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| fabs(*a - *b) <= 1e-9 * scale);
}

/// Candidate β vectors on the ε-grid, globally or in a box around `beta_prev`.
///
/// Returns every vector with Σβ = 1 (within 1e-9·M) that satisfies the SIC
/// feasibility constraint and strict decrease, in lexicographic order. The
/// local box always contains `beta_prev` itself.
pub fn pgs(
    beta_prev: Option<&PowerAllocation>,
    eps_sr: f64,
    rates: &[f64],
    n_uavs: usize,
) -> Result<Vec<PowerAllocation>> {
    if !(eps_sr > 0.0 && eps_sr <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "eps_sr",
            reason: "must lie in (0, 1]",
        });
    }
    if n_uavs == 0 || rates.len() != n_uavs {
        return Err(Error::InvalidParameter {
            name: "rates",
            reason: "need one target rate per UAV",
        });
    }
    let axes: Vec<Vec<f64>> = match beta_prev {
        None => vec![grid_values(eps_sr, 0.0, 1.0); n_uavs],
        Some(prev) => {
            if prev.len() != n_uavs {
                return Err(Error::InvalidParameter {
                    name: "beta_prev",
                    reason: "length differs from the number of UAVs",
                });
            }
            prev.beta()
                .iter()
                .map(|b| {
                    let (lo, hi) = ((b - eps_sr).max(0.0), (b + eps_sr).min(1.0));
                    let mut axis = grid_values(eps_sr, lo, hi);
                    axis.push(*b);
                    dedup_sorted(&mut axis, eps_sr);
                    axis
                })
                .collect()
        }
    };
    let tol = 1e-9 * n_uavs as f64;
    let mut out = Vec::new();
    let mut current = vec![0.0; n_uavs];
    enumerate(&axes, 0, 0.0, tol, &mut current, &mut |beta| {
        if feasible(beta, rates) && beta.windows(2).all(|w| w[0] > w[1]) {
            if let Ok(a) = PowerAllocation::new(beta.to_vec()) {
                out.push(a);
            }
        }
    });
    Ok(out)
}

fn enumerate<F: FnMut(&[f64])>(
    axes: &[Vec<f64>],
    depth: usize,
    partial: f64,
    tol: f64,
    current: &mut [f64],
    visit: &mut F,
) {
    let axis = &axes[depth];
    if depth + 1 == axes.len() {
        // only values completing the sum can pass
        let lo = axis.partition_point(|v| partial + v < 1.0 - tol);
        for v in &axis[lo..] {
            if partial + v > 1.0 + tol {
                break;
            }
            current[depth] = *v;
            visit(current);
        }
        return;
    }
    for v in axis {
        if partial + v > 1.0 + tol {
            break;
        }
        current[depth] = *v;
        enumerate(axes, depth + 1, partial + v, tol, current, visit);
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn max_outage<M: OutageModel + ?Sized>(model: &M, alloc: &PowerAllocation, n: &[u32]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for r in 1..=model.n_uavs() {
        worst = worst.max(model.outage(r, alloc, n[r - 1])?);
    }
    Ok(worst)
}

/// Candidate minimizing the worst per-UAV outage; ties go to the
/// lexicographically smallest β. Returns the winner and its worst outage.
pub fn evaluate_candidates<M: OutageModel + ?Sized>(
    candidates: &[PowerAllocation],
    model: &M,
    n_per_rank: &[u32],
) -> Result<(PowerAllocation, f64)> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    #[cfg(feature = "std")]
    let scores: Vec<Result<f64>> = {
        use rayon::prelude::*;
        candidates
            .par_iter()
            .map(|c| max_outage(model, c, n_per_rank))
            .collect()
    };
    #[cfg(not(feature = "std"))]
    let scores: Vec<Result<f64>> = candidates
        .iter()
        .map(|c| max_outage(model, c, n_per_rank))
        .collect();
    select_best(candidates, scores)
}

/// Serial reference for [`evaluate_candidates`].
pub fn evaluate_candidates_serial<M: OutageModel + ?Sized>(
    candidates: &[PowerAllocation],
    model: &M,
    n_per_rank: &[u32],
) -> Result<(PowerAllocation, f64)> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let scores = candidates
        .iter()
        .map(|c| max_outage(model, c, n_per_rank))
        .collect();
    select_best(candidates, scores)
}

fn select_best(candidates: &[PowerAllocation], scores: Vec<Result<f64>>) -> Result<(PowerAllocation, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        let s = s?;
        let better = match best {
            None => true,
            Some((j, b)) => match s.total_cmp(&b) {
                Ordering::Less => true,
                Ordering::Equal => lex_cmp(candidates[i].beta(), candidates[j].beta()).is_lt(),
                Ordering::Greater => false,
            },
        };
        if better {
            best = Some((i, s));
        }
    }
    let (i, s) = best.ok_or(Error::EmptyCandidates)?;
    Ok((candidates[i].clone(), s))
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Run the optimizer from zero elements everywhere.
pub fn ruom<M: OutageModel + ?Sized>(model: &M, params: &RuomParams) -> Result<RuomResult> {
    params.validate()?;
    let n_uavs = model.n_uavs();
    if n_uavs == 0 {
        return Err(Error::InvalidParameter {
            name: "uavs",
            reason: "need at least one UAV",
        });
    }
    let rates = model.rates();
    let mut assignment = RisAssignment::zeros(n_uavs, model.ris_caps());
    let mut trace = RuomTrace::default();
    let mut prev: Option<PowerAllocation> = None;
    let refinements = params.refinements();

    for t in 1..=params.max_iter {
        let n_now = assignment.per_rank(model);
        let mut beta = if params.warm_start { prev.clone() } else { None };
        let mut search_max_outage = Vec::with_capacity(refinements);
        for k in 0..refinements {
            let eps = params.resolution(k);
            let candidates = pgs(beta.as_ref(), eps, rates, n_uavs)?;
            if candidates.is_empty() {
                return Err(Error::NoFeasibleAllocation);
            }
            let (best, score) = evaluate_candidates(&candidates, model, &n_now)?;
            search_max_outage.push(score);
            beta = Some(best);
        }
        let beta = beta.ok_or(Error::NoFeasibleAllocation)?;

        let mut exhausted = Vec::new();
        for r in 1..=n_uavs {
            let k = model.ris_of(r);
            let mut n = assignment.n[r - 1][k];
            let mut p = model.outage(r, &beta, n)?;
            while p < params.delta && n >= 1 {
                n -= 1;
                p = model.outage(r, &beta, n)?;
            }
            assignment.n[r - 1][k] = n;
            while p >= params.delta && assignment.used(k) < assignment.caps[k] {
                n += 1;
                assignment.n[r - 1][k] = n;
                p = model.outage(r, &beta, n)?;
            }
            if p >= params.delta {
                exhausted.push(r);
            }
        }

        let n_final = assignment.per_rank(model);
        let outage = (1..=n_uavs)
            .map(|r| model.outage(r, &beta, n_final[r - 1]))
            .collect::<Result<Vec<f64>>>()?;
        trace.iterations.push(RuomIteration {
            t,
            beta: beta.beta().to_vec(),
            search_max_outage,
            n_elements: n_final,
            max_outage: outage.iter().copied().fold(0.0, f64::max),
            outage,
            total_elements: assignment.total(),
            capacity_exhausted: exhausted,
        });

        if let Some(p) = &prev {
            if distance(p.beta(), beta.beta()) < params.eps_conv {
                return Ok(RuomResult {
                    beta,
                    assignment,
                    trace,
                    converged: true,
                });
            }
        }
        prev = Some(beta);
    }
    Ok(RuomResult {
        beta: prev.ok_or(Error::NoFeasibleAllocation)?,
        assignment,
        trace,
        converged: false,
    })
}

/// Round β to `digits` decimals for reporting.
pub fn rounded(beta: &[f64], digits: i32) -> Vec<f64> {
    let s = pow(10.0, digits as f64);
    beta.iter().map(|b| round(b * s) / s).collect()
}
