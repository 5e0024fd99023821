//! Downlink NOMA rates, SIC decoding thresholds and order-statistic outage.
//!
//! Ranks are 1-based, weakest UAV first, matching the power coefficients
//! β_1 > … > β_M.

use crate::channels::SnrCdf;
use crate::error::{Error, Result};
use crate::special::binomial_f64;
use alloc::vec::Vec;
use libm::{fabs, log2, pow};

/// Power coefficients for the M ranks, strictly decreasing and summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    beta: Vec<f64>,
}

pub const SUM_TOLERANCE: f64 = 1e-9;

impl PowerAllocation {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: "need at least one coefficient",
            });
        }
        if beta.iter().any(|b| !(*b > 0.0 && *b <= 1.0)) {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: "coefficients must lie in (0, 1]",
            });
        }
        if fabs(beta.iter().sum::<f64>() - 1.0) > SUM_TOLERANCE {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: "coefficients must sum to 1",
            });
        }
        if beta.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: "coefficients must be strictly decreasing",
            });
        }
        Ok(Self { beta })
    }

    /// Rescale positive weights to sum to 1, then validate.
    pub fn normalized(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: "weights must have a positive finite sum",
            });
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// Σ_{i>j} β_i for 1-based `j`.
    pub fn residual(&self, j: usize) -> f64 {
        self.beta[j..].iter().sum()
    }

    fn check_rank(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.beta.len() {
            return Err(Error::Rank {
                rank: m,
                total: self.beta.len(),
            });
        }
        Ok(())
    }
}

/// Rate UAV m needs to decode its own layer at SNR `gamma_m`.
pub fn achievable_rate(gamma_m: f64, alloc: &PowerAllocation, m: usize) -> Result<f64> {
    decode_rate(gamma_m, alloc, m, m)
}

/// Rate at which UAV m can decode layer j ≤ m (SIC stage j).
pub fn decode_rate(gamma_m: f64, alloc: &PowerAllocation, m: usize, j: usize) -> Result<f64> {
    alloc.check_rank(m)?;
    if j == 0 || j > m {
        return Err(Error::Rank { rank: j, total: m });
    }
    if !(gamma_m >= 0.0) {
        return Err(crate::error::domain("decode_rate", "gamma_m", gamma_m));
    }
    if gamma_m.is_infinite() {
        let rest = alloc.residual(j);
        return Ok(if rest == 0.0 {
            f64::INFINITY
        } else {
            log2(1.0 + alloc.beta[j - 1] / rest)
        });
    }
    let sinr = gamma_m * alloc.beta[j - 1] / (gamma_m * alloc.residual(j) + 1.0);
    Ok(log2(1.0 + sinr))
}

/// Per-stage SNR thresholds and the binding threshold for a rank.
#[derive(Debug, Clone, PartialEq)]
pub struct SicThresholds {
    /// γ_j^lb for j = 1…m.
    pub gamma_lbs: Vec<f64>,
    pub gamma_mlb: f64,
}

/// SNR thresholds for the SIC stages a UAV of rank `m` must pass.
///
/// For m < M the binding threshold is the largest stage threshold; for the
/// strongest rank it is that rank's own threshold alone.
pub fn sic_thresholds(alloc: &PowerAllocation, rates: &[f64], m: usize) -> Result<SicThresholds> {
    alloc.check_rank(m)?;
    if rates.len() < m {
        return Err(Error::InvalidParameter {
            name: "target_rates",
            reason: "need a target rate for every decoded layer",
        });
    }
    if rates[..m].iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "target_rates",
            reason: "rates must be positive",
        });
    }
    let mut gamma_lbs = Vec::with_capacity(m);
    for j in 1..=m {
        let need = pow(2.0, rates[j - 1]) - 1.0;
        let denom = alloc.beta[j - 1] - need * alloc.residual(j);
        if !(denom > 0.0) {
            return Err(Error::Infeasible { j });
        }
        gamma_lbs.push(need / denom);
    }
    let gamma_mlb = if m < alloc.len() {
        gamma_lbs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        gamma_lbs[m - 1]
    };
    Ok(SicThresholds { gamma_lbs, gamma_mlb })
}

/// True when every SIC stage has a positive threshold denominator.
pub fn is_feasible(alloc: &PowerAllocation, rates: &[f64]) -> bool {
    sic_thresholds(alloc, rates, alloc.len()).is_ok()
}

/// CDF of the m-th smallest of M i.i.d. draws, given the parent CDF value.
///
/// Evaluated as the binomial tail Σ_{k≥m} C(M,k)F^k(1−F)^{M−k}, which equals the
/// alternating-sum form without its cancellation.
pub fn ordered_cdf(parent_cdf_value: f64, m: usize, total: usize) -> Result<f64> {
    if m == 0 || m > total {
        return Err(Error::Rank { rank: m, total });
    }
    if !(0.0..=1.0).contains(&parent_cdf_value) {
        return Err(crate::error::domain("ordered_cdf", "parent_cdf_value", parent_cdf_value));
    }
    let f = parent_cdf_value;
    let tail: f64 = (m..=total)
        .map(|k| binomial_f64(total, k) * pow(f, k as f64) * pow(1.0 - f, (total - k) as f64))
        .sum();
    Ok(tail.clamp(0.0, 1.0))
}

/// Outage query for one UAV: its rank, the number of UAVs and its own link CDF.
pub struct OutageQuery<'a> {
    pub rank_m: usize,
    pub total_m: usize,
    pub parent_cdf: &'a dyn SnrCdf,
    pub target_rates: &'a [f64],
}

/// NOMA outage probability F_{γ_m}(γ^mlb_m). Infeasible allocations are errors.
pub fn outage_probability(q: &OutageQuery<'_>, alloc: &PowerAllocation) -> Result<f64> {
    if q.total_m != alloc.len() {
        return Err(Error::InvalidParameter {
            name: "total_m",
            reason: "must equal the number of power coefficients",
        });
    }
    let th = sic_thresholds(alloc, q.target_rates, q.rank_m)?;
    let parent = q.parent_cdf.cdf(th.gamma_mlb)?;
    ordered_cdf(parent, q.rank_m, q.total_m)
}

/// As [`outage_probability`], but an infeasible allocation counts as certain outage.
pub fn outage_probability_lenient(q: &OutageQuery<'_>, alloc: &PowerAllocation) -> Result<f64> {
    match outage_probability(q, alloc) {
        Err(Error::Infeasible { .. }) => Ok(1.0),
        other => other,
    }
}
