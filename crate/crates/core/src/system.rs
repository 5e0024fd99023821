//! Per-UAV link resolution from scenario geometry.
//!
//! Each UAV gets a direct link, a link through its best RIS, and their
//! composite. UAVs are ranked weakest first by mean direct channel power
//! ĝ_d²·Ω, which fixes the NOMA decoding order.

use crate::channels::{
    fit_laguerre, CompositeLink, CompositeMethod, DirectLink, LinkBudget, NakagamiParams, RisLink,
    RisLinkParams, SnrCdf,
};
use crate::environment::{
    los_probability, nakagami_shape, path_loss_amplitude, select_best_ris, EnvironmentParams,
    Position3D, Scenario,
};
use crate::error::{Error, Result};
use crate::noma::{outage_probability, OutageQuery, PowerAllocation};
use crate::ruom::OutageModel;
use crate::sim::McLink;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkType {
    Direct,
    RisOnly,
    Composite,
}

impl LinkType {
    pub const ALL: [LinkType; 3] = [LinkType::Direct, LinkType::RisOnly, LinkType::Composite];

    pub fn as_str(&self) -> &'static str {
        match self {
            LinkType::Direct => "direct",
            LinkType::RisOnly => "ris",
            LinkType::Composite => "composite",
        }
    }
}

/// Fading overrides. A `None` shape is derived from the LoS probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingOverrides {
    pub m_direct: Option<f64>,
    pub m_g2r: Option<f64>,
    pub m_r2a: Option<f64>,
    pub omega_direct: f64,
    pub omega_g2r: f64,
    pub omega_r2a: f64,
}

impl Default for FadingOverrides {
    fn default() -> Self {
        Self {
            m_direct: None,
            m_g2r: None,
            m_r2a: None,
            omega_direct: 1.0,
            omega_g2r: 1.0,
            omega_r2a: 1.0,
        }
    }
}

/// Large-scale and fading parameters of one UAV's links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavLink {
    /// Index into the scenario's UAV list.
    pub uav_index: usize,
    /// 1-based NOMA rank, weakest first.
    pub rank: usize,
    /// Index of the serving RIS.
    pub ris_index: usize,
    pub direct: NakagamiParams,
    pub hop_g2r: NakagamiParams,
    pub hop_r2a: NakagamiParams,
    pub amp_direct: f64,
    pub amp_g2r: f64,
    pub amp_r2a: f64,
    /// P_t / P_N.
    pub transmit_snr: f64,
}

impl UavLink {
    pub fn mean_direct_power(&self) -> f64 {
        self.amp_direct * self.amp_direct * self.direct.omega
    }

    pub fn budget(&self) -> Result<LinkBudget> {
        LinkBudget::new(self.transmit_snr, self.amp_direct, self.amp_g2r * self.amp_r2a)
    }

    /// RIS path with `n` elements, `None` when `n == 0`.
    pub fn ris_params(&self, n: u32) -> Result<Option<RisLinkParams>> {
        if n == 0 {
            return Ok(None);
        }
        RisLinkParams::new(self.hop_g2r, self.hop_r2a, n, self.amp_g2r, self.amp_r2a).map(Some)
    }

    pub fn link(&self, kind: LinkType, n: u32, method: CompositeMethod) -> Result<ResolvedLink> {
        let budget = self.budget()?;
        let fit = self.ris_params(n)?.map(|r| fit_laguerre(&r)).transpose()?;
        Ok(match kind {
            LinkType::Direct => ResolvedLink::Direct(DirectLink {
                fading: self.direct,
                gamma_bar_d: budget.gamma_bar_d,
            }),
            LinkType::RisOnly => ResolvedLink::Ris(RisLink {
                fit,
                gamma_bar_r: budget.gamma_bar_r,
            }),
            LinkType::Composite => ResolvedLink::Composite(CompositeLink {
                direct: self.direct,
                fit,
                budget,
                method,
            }),
        })
    }

    pub fn mc_link(&self, kind: LinkType, n: u32) -> Result<McLink> {
        Ok(match kind {
            LinkType::Direct => McLink::Direct {
                fading: self.direct,
                amp: self.amp_direct,
            },
            LinkType::RisOnly => McLink::Ris {
                link: self.ris_params(n)?,
            },
            LinkType::Composite => McLink::Composite {
                direct: self.direct,
                amp_direct: self.amp_direct,
                ris: self.ris_params(n)?,
            },
        })
    }
}

/// A link CDF of any of the three kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedLink {
    Direct(DirectLink),
    Ris(RisLink),
    Composite(CompositeLink),
}

impl SnrCdf for ResolvedLink {
    fn cdf(&self, gamma: f64) -> Result<f64> {
        match self {
            ResolvedLink::Direct(l) => l.cdf(gamma),
            ResolvedLink::Ris(l) => l.cdf(gamma),
            ResolvedLink::Composite(l) => l.cdf(gamma),
        }
    }
}

/// All UAV links of a scenario in rank order, with rates and RIS capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub links: Vec<UavLink>,
    /// Target rate per rank.
    pub rates: Vec<f64>,
    /// Element budget per RIS.
    pub caps: Vec<u32>,
    pub method: CompositeMethod,
}

fn hop(env: &EnvironmentParams, a: &Position3D, b: &Position3D, m: Option<f64>, omega: f64) -> Result<NakagamiParams> {
    let m = match m {
        Some(m) => m,
        None => nakagami_shape(los_probability(env, a, b))?,
    };
    NakagamiParams::new(m, omega)
}

/// Resolve every UAV's links and rank UAVs by mean direct power (ties by index).
pub fn resolve_system(
    env: &EnvironmentParams,
    scn: &Scenario,
    fading: &FadingOverrides,
    method: CompositeMethod,
) -> Result<SystemModel> {
    scn.validate(None)?;
    let transmit_snr = scn.transmit_snr()?;
    let mut links = Vec::with_capacity(scn.uavs.len());
    for (i, uav) in scn.uavs.iter().enumerate() {
        let k = select_best_ris(env, scn, i)?;
        let ris = &scn.riss[k].position;
        links.push(UavLink {
            uav_index: i,
            rank: 0,
            ris_index: k,
            direct: hop(env, &scn.bs, uav, fading.m_direct, fading.omega_direct)?,
            hop_g2r: hop(env, &scn.bs, ris, fading.m_g2r, fading.omega_g2r)?,
            hop_r2a: hop(env, ris, uav, fading.m_r2a, fading.omega_r2a)?,
            amp_direct: path_loss_amplitude(env, &scn.bs, uav)?,
            amp_g2r: path_loss_amplitude(env, &scn.bs, ris)?,
            amp_r2a: path_loss_amplitude(env, ris, uav)?,
            transmit_snr,
        });
    }
    links.sort_by(|a, b| {
        a.mean_direct_power()
            .total_cmp(&b.mean_direct_power())
            .then(a.uav_index.cmp(&b.uav_index))
    });
    for (r, l) in links.iter_mut().enumerate() {
        l.rank = r + 1;
    }
    let rates = links.iter().map(|l| scn.target_rates_bpc[l.uav_index]).collect();
    Ok(SystemModel {
        links,
        rates,
        caps: scn.riss.iter().map(|r| r.max_elements).collect(),
        method,
    })
}

impl SystemModel {
    pub fn n_uavs(&self) -> usize {
        self.links.len()
    }

    fn link_at(&self, rank: usize) -> Result<&UavLink> {
        if rank == 0 {
            return Err(Error::Rank { rank, total: self.links.len() });
        }
        self.links.get(rank - 1).ok_or(Error::Rank {
            rank,
            total: self.links.len(),
        })
    }

    /// Outage of the UAV at `rank` over the given link type with `n` elements.
    pub fn outage_of(&self, kind: LinkType, rank: usize, alloc: &PowerAllocation, n: u32) -> Result<f64> {
        let parent = self.link_at(rank)?.link(kind, n, self.method)?;
        outage_probability(
            &OutageQuery {
                rank_m: rank,
                total_m: self.links.len(),
                parent_cdf: &parent,
                target_rates: &self.rates,
            },
            alloc,
        )
    }

    /// Monte Carlo links in rank order, `n[r]` elements for rank r+1.
    pub fn mc_links(&self, kind: LinkType, n: &[u32]) -> Result<Vec<McLink>> {
        self.links
            .iter()
            .zip(n)
            .map(|(l, n)| l.mc_link(kind, *n))
            .collect()
    }

    pub fn transmit_snr(&self) -> f64 {
        self.links.first().map_or(0.0, |l| l.transmit_snr)
    }
}

impl OutageModel for SystemModel {
    fn n_uavs(&self) -> usize {
        self.links.len()
    }

    fn rates(&self) -> &[f64] {
        &self.rates
    }

    fn ris_caps(&self) -> &[u32] {
        &self.caps
    }

    fn ris_of(&self, rank: usize) -> usize {
        self.links[rank - 1].ris_index
    }

    fn outage(&self, rank: usize, alloc: &PowerAllocation, n_elements: u32) -> Result<f64> {
        self.outage_of(LinkType::Composite, rank, alloc, n_elements)
    }
}
