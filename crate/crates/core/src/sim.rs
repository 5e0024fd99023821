//! Monte Carlo reference engine.
//!
//! Trials run in fixed-size batches. Batch `b` draws from a ChaCha8 stream
//! seeded with `seed` and stream index `b`, and batches reduce through integer
//! counts, so results do not depend on how batches are scheduled.

use crate::channels::{NakagamiParams, RisLinkParams};
use crate::error::{Error, Result};
use crate::noma::{sic_thresholds, PowerAllocation};
use alloc::vec;
use alloc::vec::Vec;
use libm::{log, sqrt};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rand::SeedableRng;

/// z-value for two-sided 95% intervals.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    pub batch: u64,
}

impl McConfig {
    pub fn new(trials: u64, seed: u64, batch: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidParameter {
                name: "trials",
                reason: "must be at least 1",
            });
        }
        if batch == 0 {
            return Err(Error::InvalidParameter {
                name: "batch",
                reason: "must be at least 1",
            });
        }
        Ok(Self { trials, seed, batch })
    }

    fn n_batches(&self) -> u64 {
        self.trials.div_ceil(self.batch)
    }

    fn batch_len(&self, b: u64) -> u64 {
        (self.trials - b * self.batch).min(self.batch)
    }
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 0,
            batch: 8192,
        }
    }
}

/// Generator for batch `b` of a run seeded with `seed`.
pub fn batch_rng(seed: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b);
    rng
}

/// Per-batch counts summed over all batches. `work` fills the count vector for one batch.
fn run_counts<F>(cfg: &McConfig, width: usize, work: F) -> Vec<u64>
where
    F: Fn(&mut ChaCha8Rng, u64, &mut [u64]) + Sync,
{
    let one = |b: u64| {
        let mut counts = vec![0u64; width];
        let mut rng = batch_rng(cfg.seed, b);
        work(&mut rng, cfg.batch_len(b), &mut counts);
        counts
    };
    let add = |mut x: Vec<u64>, y: Vec<u64>| {
        x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
        x
    };
    #[cfg(feature = "std")]
    {
        use rayon::prelude::*;
        (0..cfg.n_batches())
            .into_par_iter()
            .map(one)
            .reduce(|| vec![0u64; width], add)
    }
    #[cfg(not(feature = "std"))]
    {
        (0..cfg.n_batches()).map(one).fold(vec![0u64; width], add)
    }
}

/// Nakagami amplitude sampler: the square root of a Gamma(m, Ω/m) power.
#[derive(Debug, Clone, Copy)]
pub struct NakagamiSampler {
    power: Gamma<f64>,
}

impl NakagamiSampler {
    pub fn new(p: &NakagamiParams) -> Result<Self> {
        let power = Gamma::new(p.m, p.omega / p.m).map_err(|_| Error::InvalidParameter {
            name: "nakagami",
            reason: "invalid gamma parameters",
        })?;
        Ok(Self { power })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sqrt(self.power.sample(rng))
    }
}

pub fn sample_nakagami<R: Rng + ?Sized>(p: &NakagamiParams, rng: &mut R) -> Result<f64> {
    Ok(NakagamiSampler::new(p)?.sample(rng))
}

/// Sampler for the phase-aligned sum Σ g̃_i^g·g̃_i^a over the N elements.
#[derive(Debug, Clone, Copy)]
pub struct RisSumSampler {
    g2r: NakagamiSampler,
    r2a: NakagamiSampler,
    n: u32,
}

impl RisSumSampler {
    pub fn new(ris: &RisLinkParams) -> Result<Self> {
        Ok(Self {
            g2r: NakagamiSampler::new(&ris.hop_g2r)?,
            r2a: NakagamiSampler::new(&ris.hop_r2a)?,
            n: ris.n_elements,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (0..self.n)
            .map(|_| self.g2r.sample(rng) * self.r2a.sample(rng))
            .sum()
    }
}

pub fn sample_ris_sum<R: Rng + ?Sized>(ris: &RisLinkParams, rng: &mut R) -> Result<f64> {
    Ok(RisSumSampler::new(ris)?.sample(rng))
}

/// Link to simulate. A missing RIS stands for zero elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum McLink {
    Direct {
        fading: NakagamiParams,
        amp: f64,
    },
    Ris {
        link: Option<RisLinkParams>,
    },
    Composite {
        direct: NakagamiParams,
        amp_direct: f64,
        ris: Option<RisLinkParams>,
    },
}

/// Draws SNR samples γ = (P_t/P_N)·(ĝ^r·Σg̃ + ĝ^d·|g̃^d|)² for one link.
#[derive(Debug, Clone, Copy)]
pub struct SnrSampler {
    transmit_snr: f64,
    direct: Option<(NakagamiSampler, f64)>,
    ris: Option<(RisSumSampler, f64)>,
}

impl SnrSampler {
    pub fn new(link: &McLink, transmit_snr: f64) -> Result<Self> {
        if !(transmit_snr > 0.0) {
            return Err(crate::error::domain("SnrSampler", "transmit_snr", transmit_snr));
        }
        let ris = |r: &Option<RisLinkParams>| -> Result<Option<(RisSumSampler, f64)>> {
            r.as_ref()
                .map(|r| Ok((RisSumSampler::new(r)?, r.amp_cascade())))
                .transpose()
        };
        let (direct, ris) = match link {
            McLink::Direct { fading, amp } => (Some((NakagamiSampler::new(fading)?, *amp)), None),
            McLink::Ris { link } => (None, ris(link)?),
            McLink::Composite {
                direct,
                amp_direct,
                ris: r,
            } => (Some((NakagamiSampler::new(direct)?, *amp_direct)), ris(r)?),
        };
        Ok(Self {
            transmit_snr,
            direct,
            ris,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut amp = 0.0;
        if let Some((s, g)) = &self.ris {
            amp += g * s.sample(rng);
        }
        if let Some((s, g)) = &self.direct {
            amp += g * s.sample(rng);
        }
        self.transmit_snr * amp * amp
    }
}

/// Empirical CDF on a grid with its DKW 95% uniform half-width.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    pub gamma: Vec<f64>,
    pub cdf: Vec<f64>,
    pub half_width: f64,
    pub trials: u64,
}

/// DKW 95% band half-width for `n` samples.
pub fn dkw_half_width(n: u64) -> f64 {
    sqrt(log(2.0 / 0.05) / (2.0 * n as f64))
}

/// Wilson-score 95% half-width for a proportion.
pub fn binomial_half_width(p: f64, n: u64) -> f64 {
    let n = n as f64;
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n))
}

/// Empirical SNR CDF of a link over an ascending grid.
pub fn mc_snr_cdf(link: &McLink, transmit_snr: f64, grid: &[f64], cfg: &McConfig) -> Result<EmpiricalCdf> {
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter {
            name: "gamma_grid",
            reason: "must be sorted ascending",
        });
    }
    let sampler = SnrSampler::new(link, transmit_snr)?;
    let counts = run_counts(cfg, grid.len(), |rng, n, counts| {
        let mut draws: Vec<f64> = (0..n).map(|_| sampler.sample(rng)).collect();
        draws.sort_unstable_by(f64::total_cmp);
        for (c, g) in counts.iter_mut().zip(grid) {
            *c += draws.partition_point(|x| x <= g) as u64;
        }
    });
    Ok(EmpiricalCdf {
        gamma: grid.to_vec(),
        cdf: counts.iter().map(|c| *c as f64 / cfg.trials as f64).collect(),
        half_width: dkw_half_width(cfg.trials),
        trials: cfg.trials,
    })
}

/// Raw SNR samples from one link, in batch order.
pub fn mc_snr_samples(link: &McLink, transmit_snr: f64, cfg: &McConfig) -> Result<Vec<f64>> {
    let sampler = SnrSampler::new(link, transmit_snr)?;
    let mut out = Vec::with_capacity(cfg.trials as usize);
    for b in 0..cfg.n_batches() {
        let mut rng = batch_rng(cfg.seed, b);
        out.extend((0..cfg.batch_len(b)).map(|_| sampler.sample(&mut rng)));
    }
    Ok(out)
}

/// Kolmogorov–Smirnov distance between samples (sorted in place) and a CDF.
pub fn ks_distance<F: FnMut(f64) -> f64>(samples: &mut [f64], mut cdf: F) -> f64 {
    samples.sort_unstable_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// A Monte Carlo proportion with its 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub half_width: f64,
    pub trials: u64,
}

impl McEstimate {
    fn from_count(count: u64, trials: u64) -> Self {
        let value = count as f64 / trials as f64;
        Self {
            value,
            half_width: binomial_half_width(value, trials),
            trials,
        }
    }
}

/// Event-level NOMA outage per rank.
///
/// `links[m-1]` is the link of the UAV holding rank m. Each trial draws M
/// i.i.d. SNRs from that UAV's link, takes the m-th smallest, and declares
/// outage unless it clears every SIC stage j ≤ m.
pub fn mc_noma_outage(
    links: &[McLink],
    transmit_snr: f64,
    alloc: &PowerAllocation,
    rates: &[f64],
    cfg: &McConfig,
) -> Result<Vec<McEstimate>> {
    let total = alloc.len();
    if links.len() != total {
        return Err(Error::InvalidParameter {
            name: "links",
            reason: "need one link per power coefficient",
        });
    }
    let mut out = Vec::with_capacity(total);
    for (idx, link) in links.iter().enumerate() {
        let m = idx + 1;
        let th = sic_thresholds(alloc, rates, m)?;
        let sampler = SnrSampler::new(link, transmit_snr)?;
        let counts = run_counts(cfg, 1, |rng, n, counts| {
            let mut draws = vec![0.0; total];
            for _ in 0..n {
                draws.iter_mut().for_each(|d| *d = sampler.sample(rng));
                draws.sort_unstable_by(f64::total_cmp);
                let gamma_m = draws[m - 1];
                if th.gamma_lbs.iter().any(|lb| gamma_m <= *lb) {
                    counts[0] += 1;
                }
            }
        });
        out.push(McEstimate::from_count(counts[0], cfg.trials));
    }
    Ok(out)
}

/// Sorting-based estimate of the m-th order statistic CDF of M uniforms at `parent_cdf_value`.
pub fn mc_order_statistic_cdf(parent_cdf_value: f64, m: usize, total: usize, cfg: &McConfig) -> Result<McEstimate> {
    if m == 0 || m > total {
        return Err(Error::Rank { rank: m, total });
    }
    let counts = run_counts(cfg, 1, |rng, n, counts| {
        let mut u = vec![0.0; total];
        for _ in 0..n {
            u.iter_mut().for_each(|x| *x = rng.random::<f64>());
            u.sort_unstable_by(f64::total_cmp);
            if u[m - 1] <= parent_cdf_value {
                counts[0] += 1;
            }
        }
    });
    Ok(McEstimate::from_count(counts[0], cfg.trials))
}
