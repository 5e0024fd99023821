//! Experiment configuration (TOML). Every key is optional; absent keys take
//! the reference deployment defaults.

use std::path::{Path, PathBuf};

use risnoma_core::channels::CompositeMethod;
use risnoma_core::environment::{dbm_to_watts, EnvironmentParams, ScenarioConfig};
use risnoma_core::ruom::RuomParams;
use risnoma_core::sim::McConfig;
use risnoma_core::system::FadingOverrides;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid `{field}`: {reason}")]
    Field { field: String, reason: String },
}

fn field(name: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: name.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seeds both node placement and Monte Carlo streams.
    pub seed: u64,
    pub scenario: ScenarioSection,
    pub environment: EnvironmentSection,
    pub channel: ChannelSection,
    pub noma: NomaSection,
    pub sweep: SweepSection,
    pub ruom: RuomSection,
    pub mc: McSection,
    pub validate: ValidateSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 2,
            scenario: ScenarioSection::default(),
            environment: EnvironmentSection::default(),
            channel: ChannelSection::default(),
            noma: NomaSection::default(),
            sweep: SweepSection::default(),
            ruom: RuomSection::default(),
            mc: McSection::default(),
            validate: ValidateSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub n_uavs: usize,
    pub n_ris: usize,
    pub cell_radius_m: f64,
    pub uav_altitude_min_m: f64,
    pub uav_altitude_max_m: f64,
    pub bs_altitude_m: f64,
    pub ris_altitude_m: f64,
    pub ris_max_elements: u32,
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_temp_k: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            n_uavs: 3,
            n_ris: 3,
            cell_radius_m: 2000.0,
            uav_altitude_min_m: 80.0,
            uav_altitude_max_m: 120.0,
            bs_altitude_m: 25.0,
            ris_altitude_m: 30.0,
            ris_max_elements: 1024,
            tx_power_dbm: 37.0,
            bandwidth_hz: 40e6,
            noise_temp_k: 290.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentSection {
    pub zeta: f64,
    pub v: f64,
    pub mu: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        let e = EnvironmentParams::default();
        Self {
            zeta: e.zeta,
            v: e.v,
            mu: e.mu,
            alpha_los: e.alpha_los,
            alpha_nlos: e.alpha_nlos,
        }
    }
}

/// A Nakagami shape: `"derive"` from the LoS probability, or a fixed number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShapeSetting {
    Fixed(f64),
    Keyword(ShapeKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKeyword {
    Derive,
}

impl ShapeSetting {
    pub const DERIVE: ShapeSetting = ShapeSetting::Keyword(ShapeKeyword::Derive);

    fn fixed(&self) -> Option<f64> {
        match self {
            ShapeSetting::Fixed(m) => Some(*m),
            ShapeSetting::Keyword(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompositeSetting {
    Closed,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    /// Composite-link evaluator used for analytic outages.
    pub composite: CompositeSetting,
    pub m_direct: ShapeSetting,
    pub m_g2r: ShapeSetting,
    pub m_r2a: ShapeSetting,
    pub omega_direct: f64,
    pub omega_g2r: f64,
    pub omega_r2a: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            composite: CompositeSetting::Quadrature,
            m_direct: ShapeSetting::DERIVE,
            m_g2r: ShapeSetting::DERIVE,
            m_r2a: ShapeSetting::DERIVE,
            omega_direct: 1.0,
            omega_g2r: 1.0,
            omega_r2a: 1.0,
        }
    }
}

/// Power coefficients: a fixed vector or `"optimize"` (taken from the optimizer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSetting {
    Fixed(Vec<f64>),
    Keyword(BetaKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaKeyword {
    Optimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NomaSection {
    /// Target rate shared by all UAVs unless `target_rates_bpc` is given.
    pub target_rate_bpc: f64,
    /// Per-UAV target rates in scenario order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_rates_bpc: Option<Vec<f64>>,
    pub beta: BetaSetting,
    /// Rescale a fixed β to sum to one.
    pub normalize_beta: bool,
}

impl Default for NomaSection {
    fn default() -> Self {
        Self {
            target_rate_bpc: 1.0,
            target_rates_bpc: None,
            beta: BetaSetting::Fixed(vec![0.9895, 0.0101, 0.0003]),
            normalize_beta: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Element counts per UAV (x-axis of every sweep).
    pub n_elements: Vec<u32>,
    /// Transmit powers for `sweep-power`.
    pub tx_power_dbm: Vec<f64>,
    /// Target rates for `sweep-rate`.
    pub target_rate_bpc: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            n_elements: vec![0, 1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024],
            tx_power_dbm: vec![30.0, 32.0, 34.0, 36.0, 38.0, 40.0],
            target_rate_bpc: vec![0.7, 0.9, 1.1, 1.3, 1.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuomSection {
    /// One optimizer run per scaling factor.
    pub lambda: Vec<f64>,
    pub delta: f64,
    pub eps_in: f64,
    pub eps_ac: f64,
    pub eps_conv: f64,
    pub max_iter: usize,
    pub warm_start: bool,
}

impl Default for RuomSection {
    fn default() -> Self {
        let p = RuomParams::default();
        Self {
            lambda: vec![0.1, 0.5, 0.9],
            delta: p.delta,
            eps_in: p.eps_in,
            eps_ac: p.eps_ac,
            eps_conv: p.eps_conv,
            max_iter: p.max_iter,
            warm_start: p.warm_start,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub enabled: bool,
    pub trials: u64,
    pub batch: u64,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            enabled: false,
            trials: 100_000,
            batch: 8192,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    /// Trials per Monte Carlo comparison.
    pub trials: u64,
    /// Allowed |analytic − MC| for CDFs, on top of the DKW half-width.
    pub tolerance_cdf: f64,
    /// Allowed |analytic − MC| for NOMA outages, on top of the binomial half-width.
    pub tolerance_outage: f64,
    /// Allowed |closed form − quadrature| for the composite CDF.
    pub tolerance_closed: f64,
    /// Outages below this are not compared against Monte Carlo.
    pub min_outage: f64,
    /// Transmit powers for the outage comparisons. SNR CDFs are checked at the first.
    pub tx_power_dbm: Vec<f64>,
    /// Element count for the RIS and composite comparisons.
    pub n_elements: u32,
    /// Points per CDF grid.
    pub grid_points: usize,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self {
            trials: 200_000,
            tolerance_cdf: 0.01,
            tolerance_outage: 0.01,
            tolerance_closed: 1e-3,
            min_outage: 1e-2,
            tx_power_dbm: vec![20.0, 30.0, 40.0],
            n_elements: 64,
            grid_points: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Root directory; each subcommand writes to `<dir>/<command>/`.
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parse and validate a configuration from TOML text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn to_toml(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("configuration always serializes")
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(name, "must be positive and finite"))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.scenario;
        if s.n_uavs == 0 {
            return Err(field("scenario.n_uavs", "must be at least 1"));
        }
        if s.n_ris == 0 {
            return Err(field("scenario.n_ris", "must be at least 1"));
        }
        positive("scenario.cell_radius_m", s.cell_radius_m)?;
        positive("bandwidth_hz", s.bandwidth_hz)?;
        positive("noise_temp_k", s.noise_temp_k)?;
        if !(s.uav_altitude_min_m >= 0.0 && s.uav_altitude_min_m <= s.uav_altitude_max_m) {
            return Err(field("scenario.uav_altitude_min_m", "need 0 <= min <= max"));
        }
        if !(s.bs_altitude_m >= 0.0) {
            return Err(field("scenario.bs_altitude_m", "must be nonnegative"));
        }
        if !(s.ris_altitude_m >= 0.0) {
            return Err(field("scenario.ris_altitude_m", "must be nonnegative"));
        }
        if s.ris_max_elements == 0 {
            return Err(field("scenario.ris_max_elements", "must be at least 1"));
        }
        if !s.tx_power_dbm.is_finite() {
            return Err(field("scenario.tx_power_dbm", "must be finite"));
        }
        self.environment_params()
            .map_err(|e| field("environment", e.to_string()))?;

        let c = &self.channel;
        for (name, m) in [("channel.m_direct", c.m_direct), ("channel.m_g2r", c.m_g2r), ("channel.m_r2a", c.m_r2a)] {
            if let Some(m) = m.fixed() {
                if !(m >= 0.5 && m.is_finite()) {
                    return Err(field(name, "Nakagami shape must be at least 0.5"));
                }
            }
        }
        positive("channel.omega_direct", c.omega_direct)?;
        positive("channel.omega_g2r", c.omega_g2r)?;
        positive("channel.omega_r2a", c.omega_r2a)?;

        let n = &self.noma;
        positive("noma.target_rate_bpc", n.target_rate_bpc)?;
        if let Some(r) = &n.target_rates_bpc {
            if r.len() != s.n_uavs {
                return Err(field("noma.target_rates_bpc", "need one rate per UAV"));
            }
            for v in r {
                positive("noma.target_rates_bpc", *v)?;
            }
        }
        if let BetaSetting::Fixed(b) = &n.beta {
            if b.len() != s.n_uavs {
                return Err(field("noma.beta", "need one coefficient per UAV"));
            }
            if b.iter().any(|x| !(*x > 0.0 && *x <= 1.0)) {
                return Err(field("noma.beta", "coefficients must lie in (0, 1]"));
            }
        }

        let w = &self.sweep;
        if w.n_elements.is_empty() {
            return Err(field("sweep.n_elements", "grid must be nonempty"));
        }
        if w.tx_power_dbm.is_empty() || w.tx_power_dbm.iter().any(|p| !p.is_finite()) {
            return Err(field("sweep.tx_power_dbm", "grid must be nonempty and finite"));
        }
        if w.target_rate_bpc.is_empty() || w.target_rate_bpc.iter().any(|r| !(*r > 0.0)) {
            return Err(field("sweep.target_rate_bpc", "grid must be nonempty and positive"));
        }

        if self.ruom.lambda.is_empty() {
            return Err(field("ruom.lambda", "need at least one scaling factor"));
        }
        for l in &self.ruom.lambda {
            self.ruom_params(*l)
                .validate()
                .map_err(|e| field("ruom", e.to_string()))?;
        }

        McConfig::new(self.mc.trials, self.seed, self.mc.batch)
            .map_err(|e| field("mc", e.to_string()))?;

        let v = &self.validate;
        if v.trials == 0 {
            return Err(field("validate.trials", "must be at least 1"));
        }
        positive("validate.tolerance_cdf", v.tolerance_cdf)?;
        positive("validate.tolerance_outage", v.tolerance_outage)?;
        positive("validate.tolerance_closed", v.tolerance_closed)?;
        if !(v.min_outage > 0.0 && v.min_outage < 1.0) {
            return Err(field("validate.min_outage", "must lie in (0, 1)"));
        }
        if v.tx_power_dbm.is_empty() || v.tx_power_dbm.iter().any(|p| !p.is_finite()) {
            return Err(field("validate.tx_power_dbm", "need at least one finite power"));
        }
        if v.n_elements == 0 {
            return Err(field("validate.n_elements", "must be at least 1"));
        }
        if v.grid_points < 2 {
            return Err(field("validate.grid_points", "need at least 2 points"));
        }
        Ok(())
    }

    pub fn environment_params(&self) -> risnoma_core::Result<EnvironmentParams> {
        let e = &self.environment;
        EnvironmentParams::new(e.zeta, e.v, e.mu, e.alpha_los, e.alpha_nlos)
    }

    pub fn target_rates(&self) -> Vec<f64> {
        self.noma
            .target_rates_bpc
            .clone()
            .unwrap_or_else(|| vec![self.noma.target_rate_bpc; self.scenario.n_uavs])
    }

    pub fn scenario_config(&self) -> ScenarioConfig {
        let s = &self.scenario;
        ScenarioConfig {
            n_uavs: s.n_uavs,
            n_ris: s.n_ris,
            cell_radius_m: s.cell_radius_m,
            uav_altitude_min_m: s.uav_altitude_min_m,
            uav_altitude_max_m: s.uav_altitude_max_m,
            bs_altitude_m: s.bs_altitude_m,
            ris_altitude_m: s.ris_altitude_m,
            ris_max_elements: s.ris_max_elements,
            tx_power_w: dbm_to_watts(s.tx_power_dbm),
            bandwidth_hz: s.bandwidth_hz,
            noise_temp_k: s.noise_temp_k,
            target_rates_bpc: self.target_rates(),
        }
    }

    pub fn fading(&self) -> FadingOverrides {
        let c = &self.channel;
        FadingOverrides {
            m_direct: c.m_direct.fixed(),
            m_g2r: c.m_g2r.fixed(),
            m_r2a: c.m_r2a.fixed(),
            omega_direct: c.omega_direct,
            omega_g2r: c.omega_g2r,
            omega_r2a: c.omega_r2a,
        }
    }

    pub fn composite_method(&self) -> CompositeMethod {
        match self.channel.composite {
            CompositeSetting::Closed => CompositeMethod::Closed,
            CompositeSetting::Quadrature => CompositeMethod::Quadrature,
        }
    }

    pub fn ruom_params(&self, lambda: f64) -> RuomParams {
        let r = &self.ruom;
        RuomParams {
            lambda,
            delta: r.delta,
            eps_in: r.eps_in,
            eps_ac: r.eps_ac,
            eps_conv: r.eps_conv,
            max_iter: r.max_iter,
            warm_start: r.warm_start,
        }
    }

    pub fn mc_config(&self, trials: u64) -> McConfig {
        McConfig {
            trials,
            seed: self.seed,
            batch: self.mc.batch,
        }
    }
}
