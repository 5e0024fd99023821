//! Scenario geometry and large-scale propagation.
//!
//! LoS probability follows the altitude-dependent built-up model: equal
//! endpoint altitudes use the `d·√(vμ)` exponent, unequal ones the
//! horizontal-distance exponent with the Q-function difference over the
//! vertical separation. `z1` is always the transmitter-side altitude.

use crate::error::{domain, Error, Result};
use crate::special::q_function;
use alloc::vec::Vec;
use core::f64::consts::PI;
use libm::{exp, fabs, pow, sqrt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Built-up environment and path-loss exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentParams {
    pub zeta: f64,
    pub v: f64,
    pub mu: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
}

impl Default for EnvironmentParams {
    fn default() -> Self {
        Self {
            zeta: 20.0,
            v: 3e-4,
            mu: 0.5,
            alpha_los: 2.0,
            alpha_nlos: 3.5,
        }
    }
}

impl EnvironmentParams {
    pub fn new(zeta: f64, v: f64, mu: f64, alpha_los: f64, alpha_nlos: f64) -> Result<Self> {
        let p = Self {
            zeta,
            v,
            mu,
            alpha_los,
            alpha_nlos,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason| Err(Error::InvalidParameter { name, reason });
        if !(self.zeta > 0.0) {
            return bad("zeta", "must be positive");
        }
        if !(self.v > 0.0) {
            return bad("v", "must be positive");
        }
        if !(self.mu > 0.0) {
            return bad("mu", "must be positive");
        }
        if !(self.alpha_los >= 2.0 && self.alpha_los <= self.alpha_nlos) {
            return bad("alpha_los", "need 2 <= alpha_los <= alpha_nlos");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn horizontal_distance(&self, other: &Position3D) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn vertical_distance(&self, other: &Position3D) -> f64 {
        fabs(self.z - other.z)
    }

    pub fn distance(&self, other: &Position3D) -> f64 {
        libm::hypot(self.horizontal_distance(other), self.vertical_distance(other))
    }

    pub fn horizontal_norm(&self) -> f64 {
        libm::hypot(self.x, self.y)
    }
}

/// A partitionable RIS and its element budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ris {
    pub position: Position3D,
    pub max_elements: u32,
}

/// A placed BS / UAV / RIS layout with link-budget constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub bs: Position3D,
    pub uavs: Vec<Position3D>,
    pub riss: Vec<Ris>,
    pub tx_power_w: f64,
    pub bandwidth_hz: f64,
    pub noise_temp_k: f64,
    pub target_rates_bpc: Vec<f64>,
    pub cell_radius_m: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn n_uavs(&self) -> usize {
        self.uavs.len()
    }

    pub fn noise_power_w(&self) -> Result<f64> {
        noise_power_w(self.bandwidth_hz, self.noise_temp_k)
    }

    /// Transmit SNR P_t / P_N (the composite-link scale γ̄_c).
    pub fn transmit_snr(&self) -> Result<f64> {
        Ok(self.tx_power_w / self.noise_power_w()?)
    }

    pub fn validate(&self, uav_altitude_band: Option<(f64, f64)>) -> Result<()> {
        let bad = |name, reason| Err(Error::InvalidParameter { name, reason });
        if self.uavs.is_empty() {
            return bad("uavs", "need at least one UAV");
        }
        if self.riss.is_empty() {
            return bad("riss", "need at least one RIS");
        }
        if self.riss.iter().any(|r| r.max_elements == 0) {
            return bad("max_elements", "each RIS needs at least one element");
        }
        if self.target_rates_bpc.len() != self.uavs.len() {
            return bad("target_rates_bpc", "need one target rate per UAV");
        }
        if self.target_rates_bpc.iter().any(|r| !(*r > 0.0)) {
            return bad("target_rates_bpc", "rates must be positive");
        }
        let tol = 1e-9 * self.cell_radius_m.max(1.0);
        let inside = |p: &Position3D| p.horizontal_norm() <= self.cell_radius_m + tol && p.z >= 0.0;
        if !self.uavs.iter().all(inside) || !self.riss.iter().all(|r| inside(&r.position)) {
            return bad("positions", "all nodes must lie inside the cell");
        }
        if let Some((lo, hi)) = uav_altitude_band {
            if self.uavs.iter().any(|u| u.z < lo || u.z > hi) {
                return bad("uav altitude", "outside the configured band");
            }
        }
        Ok(())
    }
}

/// Inputs for random scenario generation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_uavs: usize,
    pub n_ris: usize,
    pub cell_radius_m: f64,
    pub uav_altitude_min_m: f64,
    pub uav_altitude_max_m: f64,
    pub bs_altitude_m: f64,
    pub ris_altitude_m: f64,
    pub ris_max_elements: u32,
    pub tx_power_w: f64,
    pub bandwidth_hz: f64,
    pub noise_temp_k: f64,
    pub target_rates_bpc: Vec<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_uavs: 3,
            n_ris: 3,
            cell_radius_m: 2000.0,
            uav_altitude_min_m: 80.0,
            uav_altitude_max_m: 120.0,
            bs_altitude_m: 25.0,
            ris_altitude_m: 30.0,
            ris_max_elements: 32 * 32,
            tx_power_w: dbm_to_watts(37.0),
            bandwidth_hz: 40e6,
            noise_temp_k: 290.0,
            target_rates_bpc: alloc::vec![1.0; 3],
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason| Err(Error::InvalidParameter { name, reason });
        if self.n_uavs == 0 {
            return bad("n_uavs", "must be at least 1");
        }
        if self.n_ris == 0 {
            return bad("n_ris", "must be at least 1");
        }
        if !(self.cell_radius_m > 0.0) {
            return bad("cell_radius_m", "must be positive");
        }
        if !(self.uav_altitude_min_m >= 0.0 && self.uav_altitude_min_m <= self.uav_altitude_max_m) {
            return bad("uav_altitude", "need 0 <= min <= max");
        }
        if !(self.bs_altitude_m >= 0.0) {
            return bad("bs_altitude_m", "must be nonnegative");
        }
        if !(self.ris_altitude_m >= 0.0) {
            return bad("ris_altitude_m", "must be nonnegative");
        }
        if self.ris_max_elements == 0 {
            return bad("ris_max_elements", "must be at least 1");
        }
        if !(self.tx_power_w > 0.0) {
            return bad("tx_power", "must be positive");
        }
        if !(self.bandwidth_hz > 0.0) {
            return bad("bandwidth_hz", "must be positive");
        }
        if !(self.noise_temp_k > 0.0) {
            return bad("noise_temp_k", "must be positive");
        }
        if self.target_rates_bpc.len() != self.n_uavs {
            return bad("target_rates_bpc", "need one target rate per UAV");
        }
        if self.target_rates_bpc.iter().any(|r| !(*r > 0.0)) {
            return bad("target_rates_bpc", "rates must be positive");
        }
        Ok(())
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    pow(10.0, (dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * libm::log10(w) + 30.0
}

/// LoS probability between transmitter `a` and receiver `b`.
pub fn los_probability(env: &EnvironmentParams, a: &Position3D, b: &Position3D) -> f64 {
    let scale = sqrt(env.v * env.mu);
    let (z1, z2) = (a.z, b.z);
    if z1 == z2 {
        let base = 1.0 - exp(-z1 * z1 / (2.0 * env.zeta * env.zeta));
        return pow(base, a.distance(b) * scale).clamp(0.0, 1.0);
    }
    let dv = a.vertical_distance(b);
    let dq = fabs(q_function(z1 / env.zeta) - q_function(z2 / env.zeta));
    let base = (1.0 - sqrt(2.0 * PI) * env.zeta / dv * dq).clamp(0.0, 1.0);
    pow(base, a.horizontal_distance(b) * scale).clamp(0.0, 1.0)
}

/// α = α_L·P_L + α_N·(1 − P_L).
pub fn path_loss_exponent(env: &EnvironmentParams, p_los: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_los) {
        return Err(domain("path_loss_exponent", "p_los", p_los));
    }
    Ok(env.alpha_los * p_los + env.alpha_nlos * (1.0 - p_los))
}

/// Nakagami shape fitted from the LoS probability through the Rician K-factor.
pub fn nakagami_shape(p_los: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_los) {
        return Err(domain("nakagami_shape", "p_los", p_los));
    }
    let k = exp(2.708 * p_los * p_los);
    Ok((k + 1.0) * (k + 1.0) / (2.0 * k + 1.0))
}

/// Square root of the distance-dependent path loss, d^{−α(d)/2}.
pub fn path_loss_amplitude(env: &EnvironmentParams, a: &Position3D, b: &Position3D) -> Result<f64> {
    let d = a.distance(b);
    if !(d > 0.0) {
        return Err(Error::DegenerateDistance);
    }
    let alpha = path_loss_exponent(env, los_probability(env, a, b))?;
    Ok(pow(d, -0.5 * alpha))
}

/// Thermal noise κTB in watts.
pub fn noise_power_w(bandwidth_hz: f64, temp_k: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) {
        return Err(domain("noise_power_w", "bandwidth_hz", bandwidth_hz));
    }
    if !(temp_k > 0.0) {
        return Err(domain("noise_power_w", "temp_k", temp_k));
    }
    Ok(BOLTZMANN * temp_k * bandwidth_hz)
}

fn uniform_in_disc<R: Rng>(rng: &mut R, radius: f64) -> (f64, f64) {
    let r = radius * sqrt(rng.random::<f64>());
    let theta = 2.0 * PI * rng.random::<f64>();
    (r * libm::cos(theta), r * libm::sin(theta))
}

/// Place UAVs and RISs uniformly in the cell disc (a Poisson field
/// conditioned on its count). Deterministic for a given seed.
pub fn generate_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uavs = (0..cfg.n_uavs)
        .map(|_| {
            let (x, y) = uniform_in_disc(&mut rng, cfg.cell_radius_m);
            let span = cfg.uav_altitude_max_m - cfg.uav_altitude_min_m;
            let z = cfg.uav_altitude_min_m + span * rng.random::<f64>();
            Position3D::new(x, y, z)
        })
        .collect();
    let riss = (0..cfg.n_ris)
        .map(|_| {
            let (x, y) = uniform_in_disc(&mut rng, cfg.cell_radius_m);
            Ris {
                position: Position3D::new(x, y, cfg.ris_altitude_m),
                max_elements: cfg.ris_max_elements,
            }
        })
        .collect();
    Ok(Scenario {
        bs: Position3D::new(0.0, 0.0, cfg.bs_altitude_m),
        uavs,
        riss,
        tx_power_w: cfg.tx_power_w,
        bandwidth_hz: cfg.bandwidth_hz,
        noise_temp_k: cfg.noise_temp_k,
        target_rates_bpc: cfg.target_rates_bpc.clone(),
        cell_radius_m: cfg.cell_radius_m,
        seed,
    })
}

/// Index of the RIS maximizing the cascaded mean amplitude ĝ^g·ĝ^a for a UAV.
/// Ties go to the lowest index.
pub fn select_best_ris(env: &EnvironmentParams, scn: &Scenario, uav_index: usize) -> Result<usize> {
    let uav = scn.uavs.get(uav_index).ok_or(Error::Rank {
        rank: uav_index + 1,
        total: scn.uavs.len(),
    })?;
    let mut best = None;
    for (k, ris) in scn.riss.iter().enumerate() {
        let g = path_loss_amplitude(env, &scn.bs, &ris.position)?
            * path_loss_amplitude(env, &ris.position, uav)?;
        match best {
            Some((_, gb)) if g <= gb => {}
            _ => best = Some((k, g)),
        }
    }
    best.map(|(k, _)| k).ok_or(Error::InvalidParameter {
        name: "riss",
        reason: "need at least one RIS",
    })
}
