//! Fading and SNR distributions for the direct, RIS-only and composite links.
//!
//! The RIS-only amplitude sum Σ g̃_i (cascaded double Nakagami factors under
//! optimal phase alignment) is approximated by a gamma law matched on the
//! first two moments. The composite link adds the direct and RIS amplitudes
//! coherently, so its CDF is a convolution over amplitudes. Two evaluators
//! exist: adaptive quadrature of that convolution, and a closed form built on
//! a truncated-normal approximation of the RIS amplitude CDF.

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::special::{
    bessel_k, binomial_f64, gamma_p, ln_gamma, lower_inc_gamma, q_function,
    upper_inc_gamma,
};
use alloc::vec::Vec;
use libm::{exp, fabs, log, pow, round, sqrt};

/// Nakagami-m fading with shape `m` and average power `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NakagamiParams {
    pub m: f64,
    pub omega: f64,
}

impl NakagamiParams {
    pub fn new(m: f64, omega: f64) -> Result<Self> {
        if !(m >= 0.5) || !m.is_finite() {
            return Err(domain("NakagamiParams", "m", m));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(domain("NakagamiParams", "omega", omega));
        }
        Ok(Self { m, omega })
    }

    /// Shape with unit average power.
    pub fn unit(m: f64) -> Result<Self> {
        Self::new(m, 1.0)
    }

    /// E[|g|^n] for the Nakagami amplitude.
    pub fn amplitude_moment(&self, n: f64) -> Result<f64> {
        Ok(exp(ln_gamma(self.m + 0.5 * n)? - ln_gamma(self.m)?) * pow(self.omega / self.m, 0.5 * n))
    }
}

/// One RIS path: two fading hops, element count and the per-hop mean amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisLinkParams {
    pub hop_g2r: NakagamiParams,
    pub hop_r2a: NakagamiParams,
    pub n_elements: u32,
    pub amp_g2r: f64,
    pub amp_r2a: f64,
}

impl RisLinkParams {
    pub fn new(
        hop_g2r: NakagamiParams,
        hop_r2a: NakagamiParams,
        n_elements: u32,
        amp_g2r: f64,
        amp_r2a: f64,
    ) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::InvalidParameter {
                name: "n_elements",
                reason: "a RIS link needs at least one element",
            });
        }
        if !(amp_g2r > 0.0) {
            return Err(domain("RisLinkParams", "amp_g2r", amp_g2r));
        }
        if !(amp_r2a > 0.0) {
            return Err(domain("RisLinkParams", "amp_r2a", amp_r2a));
        }
        Ok(Self {
            hop_g2r,
            hop_r2a,
            n_elements,
            amp_g2r,
            amp_r2a,
        })
    }

    /// Cascaded mean amplitude ĝ^g·ĝ^a.
    pub fn amp_cascade(&self) -> f64 {
        self.amp_g2r * self.amp_r2a
    }
}

/// Moment-matched gamma law for the RIS amplitude sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaguerreFit {
    pub a: f64,
    pub b: f64,
    pub mean_sum: f64,
    pub var_sum: f64,
}

impl LaguerreFit {
    pub fn sigma(&self) -> f64 {
        sqrt(self.var_sum)
    }
}

/// Average SNRs of each link and the direct mean amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub gamma_bar_r: f64,
    pub gamma_bar_d: f64,
    pub gamma_bar_c: f64,
    pub amp_direct: f64,
}

impl LinkBudget {
    /// Budget from the transmit SNR P_t/P_N and the direct and cascaded RIS amplitudes.
    pub fn new(transmit_snr: f64, amp_direct: f64, amp_ris: f64) -> Result<Self> {
        if !(transmit_snr > 0.0) || !transmit_snr.is_finite() {
            return Err(domain("LinkBudget", "transmit_snr", transmit_snr));
        }
        if !(amp_direct >= 0.0) {
            return Err(domain("LinkBudget", "amp_direct", amp_direct));
        }
        if !(amp_ris >= 0.0) {
            return Err(domain("LinkBudget", "amp_ris", amp_ris));
        }
        Ok(Self {
            gamma_bar_r: transmit_snr * amp_ris * amp_ris,
            gamma_bar_d: transmit_snr * amp_direct * amp_direct,
            gamma_bar_c: transmit_snr,
            amp_direct,
        })
    }

    /// Cascaded RIS amplitude recovered from γ̄_r/γ̄_c.
    pub fn amp_ris(&self) -> f64 {
        sqrt(self.gamma_bar_r / self.gamma_bar_c)
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma_bar_c > 0.0) {
            return Err(domain("LinkBudget", "gamma_bar_c", self.gamma_bar_c));
        }
        if !(self.gamma_bar_r >= 0.0) {
            return Err(domain("LinkBudget", "gamma_bar_r", self.gamma_bar_r));
        }
        if !(self.amp_direct >= 0.0) {
            return Err(domain("LinkBudget", "amp_direct", self.amp_direct));
        }
        Ok(())
    }
}

fn check_gamma(op: &'static str, gamma: f64) -> Result<()> {
    if !(gamma >= 0.0) {
        return Err(domain(op, "gamma", gamma));
    }
    Ok(())
}

/// Density of the product of two independent Nakagami amplitudes.
pub fn double_nakagami_pdf(p1: &NakagamiParams, p2: &NakagamiParams, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain("double_nakagami_pdf", "x", x));
    }
    let (m1, m2) = (p1.m, p2.m);
    let ratio = m1 * m2 / (p1.omega * p2.omega);
    let k = bessel_k(m1 - m2, 2.0 * x * sqrt(ratio))?;
    if k == 0.0 {
        return Ok(0.0);
    }
    let ln = log(4.0) + (m1 + m2 - 1.0) * log(x) + log(k) - ln_gamma(m1)? - ln_gamma(m2)?
        + 0.5 * (m1 + m2) * log(ratio);
    Ok(exp(ln))
}

/// n-th raw moment of the double Nakagami product.
pub fn double_nakagami_moment(p1: &NakagamiParams, p2: &NakagamiParams, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(domain("double_nakagami_moment", "n", 0.0));
    }
    Ok(p1.amplitude_moment(n as f64)? * p2.amplitude_moment(n as f64)?)
}

/// Gamma law with the mean and variance of the N-element amplitude sum.
pub fn fit_laguerre(ris: &RisLinkParams) -> Result<LaguerreFit> {
    let e1 = double_nakagami_moment(&ris.hop_g2r, &ris.hop_r2a, 1)?;
    let e2 = double_nakagami_moment(&ris.hop_g2r, &ris.hop_r2a, 2)?;
    let n = ris.n_elements as f64;
    let var1 = e2 - e1 * e1;
    Ok(LaguerreFit {
        a: n * e1 * e1 / var1,
        b: var1 / e1,
        mean_sum: n * e1,
        var_sum: n * var1,
    })
}

/// CDF of the RIS-only SNR.
pub fn ris_snr_cdf(fit: &LaguerreFit, gamma_bar_r: f64, gamma: f64) -> Result<f64> {
    if !(gamma_bar_r > 0.0) {
        return Err(domain("ris_snr_cdf", "gamma_bar_r", gamma_bar_r));
    }
    check_gamma("ris_snr_cdf", gamma)?;
    gamma_p(fit.a, sqrt(gamma / gamma_bar_r) / fit.b)
}

/// Truncated-normal approximation of the RIS-only SNR CDF, clamped to [0, 1].
pub fn ris_snr_cdf_q_approx(fit: &LaguerreFit, gamma_bar_r: f64, gamma: f64) -> Result<f64> {
    if !(gamma_bar_r > 0.0) {
        return Err(domain("ris_snr_cdf_q_approx", "gamma_bar_r", gamma_bar_r));
    }
    check_gamma("ris_snr_cdf_q_approx", gamma)?;
    let z = (sqrt(gamma / gamma_bar_r) - fit.mean_sum) / fit.sigma();
    let raw = 1.0 - q_function(z) / q_function(-sqrt(fit.a));
    Ok(raw.clamp(0.0, 1.0))
}

/// CDF of the direct-link SNR (gamma-distributed power).
pub fn direct_snr_cdf(p: &NakagamiParams, gamma_bar_d: f64, gamma: f64) -> Result<f64> {
    if !(gamma_bar_d > 0.0) {
        return Err(domain("direct_snr_cdf", "gamma_bar_d", gamma_bar_d));
    }
    check_gamma("direct_snr_cdf", gamma)?;
    gamma_p(p.m, p.m * gamma / (p.omega * gamma_bar_d))
}

/// Density of the direct-link SNR.
pub fn direct_snr_pdf(p: &NakagamiParams, gamma_bar_d: f64, gamma: f64) -> Result<f64> {
    if !(gamma_bar_d > 0.0) {
        return Err(domain("direct_snr_pdf", "gamma_bar_d", gamma_bar_d));
    }
    if !(gamma > 0.0) {
        return Err(domain("direct_snr_pdf", "gamma", gamma));
    }
    let rate = p.m / (p.omega * gamma_bar_d);
    Ok(exp(p.m * log(rate) + (p.m - 1.0) * log(gamma) - rate * gamma - ln_gamma(p.m)?))
}

// Density of a Nakagami amplitude.
fn nakagami_amplitude_pdf(p: &NakagamiParams, t: f64, ln_norm: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let r = p.m / p.omega;
    exp(ln_norm + (2.0 * p.m - 1.0) * log(t) - r * t * t)
}

// Amplitude above which the Nakagami tail mass is negligible.
fn nakagami_support_edge(p: &NakagamiParams) -> f64 {
    let x = p.m + 12.0 * sqrt(p.m) + 40.0;
    sqrt(x * p.omega / p.m)
}

/// Composite SNR CDF by adaptive quadrature of the amplitude convolution.
pub fn composite_snr_cdf_quadrature(
    fit: &LaguerreFit,
    direct: &NakagamiParams,
    budget: &LinkBudget,
    gamma: f64,
) -> Result<f64> {
    budget.validate()?;
    check_gamma("composite_snr_cdf_quadrature", gamma)?;
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let s = sqrt(gamma / budget.gamma_bar_c);
    let amp_r = budget.amp_ris();
    let amp_d = budget.amp_direct;
    if amp_r == 0.0 {
        return amp_cdf_nakagami(direct, s / amp_d);
    }
    if amp_d == 0.0 {
        return gamma_p(fit.a, s / (amp_r * fit.b));
    }
    // t is the normalized direct amplitude, y = amp_d·t
    let upper = (s / amp_d).min(nakagami_support_edge(direct));
    let ln_norm = log(2.0) + direct.m * log(direct.m / direct.omega) - ln_gamma(direct.m)?;
    let mut failed = None;
    let integrand = |t: f64| {
        let u = (s - amp_d * t) / (amp_r * fit.b);
        let fg = if u <= 0.0 { Ok(0.0) } else { gamma_p(fit.a, u) };
        match fg {
            Ok(v) => v * nakagami_amplitude_pdf(direct, t, ln_norm),
            Err(e) => {
                failed.get_or_insert(e);
                0.0
            }
        }
    };
    let sigma = fit.sigma();
    let mode = sqrt(((2.0 * direct.m - 1.0) / (2.0 * direct.m)) * direct.omega);
    let mut breaks: Vec<f64> = [-6.0, -2.0, 0.0, 2.0, 6.0]
        .iter()
        .map(|k| (s - amp_r * (fit.mean_sum + k * sigma)) / amp_d)
        .collect();
    breaks.push(mode);
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-10,
        max_intervals: 4000,
    };
    let r = integrate(integrand, 0.0, upper, &breaks, opts)?;
    if let Some(e) = failed {
        return Err(e);
    }
    Ok(r.value.clamp(0.0, 1.0))
}

fn amp_cdf_nakagami(p: &NakagamiParams, t: f64) -> Result<f64> {
    gamma_p(p.m, p.m * t * t / p.omega)
}

/// Nearest half-integer shape, at least 0.5.
pub fn round_to_half_integer(m: f64) -> f64 {
    (round(2.0 * m) / 2.0).max(0.5)
}

// ∫_{p1}^{p2} y^{n−1} exp(−c1 y² + 2 c2 y − c3) dy through the binomial
// expansion around c2/c1, one incomplete-gamma case per term.
fn psi(p1: f64, p2: f64, c: (f64, f64, f64), n: usize) -> Result<f64> {
    let (c1, c2, c3) = c;
    let k = c2 / c1;
    let shift = exp(c2 * c2 / c1 - c3);
    let t1 = c1 * (p1 - k) * (p1 - k);
    let t2 = c1 * (p2 - k) * (p2 - k);
    let mut total = 0.0;
    for i in 0..n {
        let rho = binomial_f64(n - 1, i) * shift * pow(k, (n - 1 - i) as f64);
        let s = 0.5 * (i + 1) as f64;
        let pre = rho / (2.0 * pow(c1, s));
        if pre == 0.0 {
            continue;
        }
        let term = if p1 > k || i % 2 == 1 {
            upper_diff(s, t1, t2)?
        } else if p2 < k {
            upper_diff(s, t2, t1)?
        } else {
            lower_inc_gamma(s, t1)? + lower_inc_gamma(s, t2)?
        };
        total += pre * term;
    }
    Ok(total)
}

// Γ(s, x1) − Γ(s, x2), taken through γ when both arguments sit in the bulk.
fn upper_diff(s: f64, x1: f64, x2: f64) -> Result<f64> {
    if x1 < s && x2 < s {
        Ok(lower_inc_gamma(s, x2)? - lower_inc_gamma(s, x1)?)
    } else {
        Ok(upper_inc_gamma(s, x1)? - upper_inc_gamma(s, x2)?)
    }
}

/// Unclamped closed-form composite CDF.
///
/// The direct shape must be a half-integer (within 1e-6); callers round it
/// with [`round_to_half_integer`].
pub fn composite_snr_cdf_closed_raw(
    fit: &LaguerreFit,
    direct: &NakagamiParams,
    budget: &LinkBudget,
    gamma: f64,
) -> Result<f64> {
    budget.validate()?;
    check_gamma("composite_snr_cdf_closed", gamma)?;
    let twice_m = 2.0 * direct.m;
    if fabs(twice_m - round(twice_m)) > 1e-6 {
        return Err(Error::NonHalfIntegerShape { m: direct.m });
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let n = round(twice_m) as usize;
    let m = 0.5 * n as f64;
    let s = sqrt(gamma / budget.gamma_bar_c);
    let amp_r = budget.amp_ris();
    let amp_d = budget.amp_direct;
    let shape = NakagamiParams {
        m,
        omega: direct.omega,
    };
    if amp_r == 0.0 {
        return amp_cdf_nakagami(&shape, s / amp_d);
    }
    if amp_d == 0.0 {
        let z = (s / amp_r - fit.mean_sum) / fit.sigma();
        return Ok(1.0 - q_function(z) / q_function(-sqrt(fit.a)));
    }

    // work in units of the direct mean amplitude
    let q_star = q_function(-sqrt(fit.a));
    let direct_weight = -q_function(sqrt(fit.a)) / q_star;
    let rate = m / direct.omega;
    let lambda = (amp_d / amp_r) * (amp_d / amp_r) / fit.var_sum;
    let s_n = s / amp_d;
    let u_n = (s - amp_r * fit.mean_sum) / amp_d;
    let c = (rate + lambda, lambda * u_n, lambda * u_n * u_n);
    let scale = exp(m * log(rate) - ln_gamma(m)?) / q_star;
    let f_direct = amp_cdf_nakagami(&shape, s_n)?;
    let value = if u_n < 0.0 {
        direct_weight * f_direct + scale * psi(0.0, s_n, c, n)?
    } else {
        direct_weight * f_direct
            + amp_cdf_nakagami(&shape, u_n)? / q_star
            + scale * (psi(u_n, s_n, c, n)? - psi(0.0, u_n, c, n)?)
    };
    Ok(value)
}

/// Closed-form composite CDF clamped to [0, 1].
pub fn composite_snr_cdf_closed(
    fit: &LaguerreFit,
    direct: &NakagamiParams,
    budget: &LinkBudget,
    gamma: f64,
) -> Result<f64> {
    Ok(composite_snr_cdf_closed_raw(fit, direct, budget, gamma)?.clamp(0.0, 1.0))
}

/// A link SNR distribution.
pub trait SnrCdf {
    fn cdf(&self, gamma: f64) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectLink {
    pub fading: NakagamiParams,
    pub gamma_bar_d: f64,
}

impl SnrCdf for DirectLink {
    fn cdf(&self, gamma: f64) -> Result<f64> {
        direct_snr_cdf(&self.fading, self.gamma_bar_d, gamma)
    }
}

/// RIS-only link. `fit == None` means no elements, so the link never carries signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisLink {
    pub fit: Option<LaguerreFit>,
    pub gamma_bar_r: f64,
}

impl SnrCdf for RisLink {
    fn cdf(&self, gamma: f64) -> Result<f64> {
        check_gamma("RisLink::cdf", gamma)?;
        match &self.fit {
            Some(fit) => ris_snr_cdf(fit, self.gamma_bar_r, gamma),
            None => Ok(1.0),
        }
    }
}

/// Which composite evaluator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompositeMethod {
    Closed,
    #[default]
    Quadrature,
}

/// Direct plus RIS link. `fit == None` reduces to the direct link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeLink {
    pub direct: NakagamiParams,
    pub fit: Option<LaguerreFit>,
    pub budget: LinkBudget,
    pub method: CompositeMethod,
}

impl SnrCdf for CompositeLink {
    fn cdf(&self, gamma: f64) -> Result<f64> {
        let Some(fit) = &self.fit else {
            return direct_snr_cdf(&self.direct, self.budget.gamma_bar_d, gamma);
        };
        match self.method {
            CompositeMethod::Quadrature => {
                composite_snr_cdf_quadrature(fit, &self.direct, &self.budget, gamma)
            }
            CompositeMethod::Closed => {
                let rounded = NakagamiParams {
                    m: round_to_half_integer(self.direct.m),
                    omega: self.direct.omega,
                };
                composite_snr_cdf_closed(fit, &rounded, &self.budget, gamma)
            }
        }
    }
}

#[cfg(test)]
// Reference values are kept exactly as the oracle printed them.
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::environment::{
        dbm_to_watts, nakagami_shape, noise_power_w, path_loss_amplitude, los_probability,
        EnvironmentParams, Position3D,
    };
    use core::f64::consts::PI;

    fn unit(m: f64) -> NakagamiParams {
        NakagamiParams::unit(m).unwrap()
    }

    fn ris(m1: f64, m2: f64, n: u32) -> RisLinkParams {
        RisLinkParams::new(unit(m1), unit(m2), n, 1.0, 1.0).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(NakagamiParams::new(0.4, 1.0).is_err());
        assert!(NakagamiParams::new(1.0, 0.0).is_err());
        assert!(RisLinkParams::new(unit(1.0), unit(1.0), 0, 1.0, 1.0).is_err());
        assert!(LinkBudget::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn double_nakagami_density() {
        let one = unit(1.0);
        let v = double_nakagami_pdf(&one, &one, 1.0).unwrap();
        assert!(fabs(v - 0.455_575_490_998_133_74) < 1e-13);
        assert!(double_nakagami_pdf(&one, &one, 0.0).is_err());
        let two = unit(2.0);
        let r = integrate(
            |x| double_nakagami_pdf(&two, &two, x).unwrap(),
            1e-12,
            12.0,
            &[0.5, 1.0, 2.0],
            QuadOptions::default(),
        )
        .unwrap();
        assert!(fabs(r.value - 1.0) < 1e-8);
        assert!(double_nakagami_pdf(&two, &two, 1e-6).unwrap() < 1e-15);
        let a = NakagamiParams::new(2.0, 1.0).unwrap();
        let b = NakagamiParams::new(3.5, 2.0).unwrap();
        let mean = integrate(
            |x| x * double_nakagami_pdf(&a, &b, x).unwrap(),
            1e-12,
            20.0,
            &[1.0, 2.0],
            QuadOptions::default(),
        )
        .unwrap();
        assert!(fabs(mean.value - double_nakagami_moment(&a, &b, 1).unwrap()) < 1e-8);
    }

    #[test]
    fn double_nakagami_moments() {
        let one = unit(1.0);
        assert!(fabs(double_nakagami_moment(&one, &one, 2).unwrap() - 1.0) < 1e-14);
        assert!(fabs(double_nakagami_moment(&one, &one, 1).unwrap() - PI / 4.0) < 1e-14);
        let a = NakagamiParams::new(2.0, 1.0).unwrap();
        let b = NakagamiParams::new(3.0, 2.0).unwrap();
        assert!(fabs(double_nakagami_moment(&a, &b, 1).unwrap() - 1.275_327_677_977_184_4) < 1e-13);
        assert!(double_nakagami_moment(&a, &b, 0).is_err());
    }

    #[test]
    fn laguerre_fit_values_and_linearity() {
        let f1 = fit_laguerre(&ris(1.0, 1.0, 1)).unwrap();
        assert!(fabs(f1.a - 1.609_945_759_918_522_5) < 1e-13);
        assert!(fabs(f1.b - 0.487_841_381_337_714_4) < 1e-14);
        let f4 = fit_laguerre(&ris(1.0, 1.0, 4)).unwrap();
        assert!(fabs(f4.a - 4.0 * f1.a) < 1e-12);
        assert_eq!(f4.b, f1.b);
        assert!(fabs(f4.mean_sum - PI) < 1e-13);
        for f in [f1, f4] {
            assert!(fabs(f.a - f.mean_sum * f.mean_sum / f.var_sum) < 1e-12 * f.a);
            assert!(fabs(f.b - f.var_sum / f.mean_sum) < 1e-14);
        }
    }

    #[test]
    fn ris_cdf_limits() {
        let fit = fit_laguerre(&ris(2.0, 2.0, 16)).unwrap();
        assert_eq!(ris_snr_cdf(&fit, 3.0, 0.0).unwrap(), 0.0);
        assert!(ris_snr_cdf(&fit, 3.0, 1e9).unwrap() > 1.0 - 1e-12);
        assert!(ris_snr_cdf(&fit, 0.0, 1.0).is_err());
        assert!(ris_snr_cdf(&fit, 1.0, -1.0).is_err());
        let mut prev = 0.0;
        for i in 0..200 {
            let v = ris_snr_cdf(&fit, 3.0, i as f64 * 5.0).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn ris_q_approx() {
        let fit = fit_laguerre(&ris(2.0, 2.0, 64)).unwrap();
        assert_eq!(ris_snr_cdf_q_approx(&fit, 1.0, 0.0).unwrap(), 0.0);
        let at_mean = fit.mean_sum * fit.mean_sum;
        let want = 1.0 - 0.5 / q_function(-sqrt(fit.a));
        assert!(fabs(ris_snr_cdf_q_approx(&fit, 1.0, at_mean).unwrap() - want) < 1e-14);
        let mut worst: f64 = 0.0;
        for i in 1..400 {
            let amp = fit.mean_sum * (0.5 + i as f64 / 400.0);
            let g = amp * amp;
            let d = ris_snr_cdf_q_approx(&fit, 1.0, g).unwrap() - ris_snr_cdf(&fit, 1.0, g).unwrap();
            worst = worst.max(fabs(d));
        }
        assert!(worst <= 0.02, "max deviation {worst}");
    }

    #[test]
    fn direct_cdf_and_pdf() {
        let one = unit(1.0);
        assert!(fabs(direct_snr_cdf(&one, 7.0, 7.0).unwrap() - (1.0 - exp(-1.0))) < 1e-15);
        for g in [0.1, 1.0, 3.0, 20.0] {
            let want = 1.0 - exp(-g / 5.0);
            assert!(fabs(direct_snr_cdf(&one, 5.0, g).unwrap() - want) < 1e-15);
        }
        assert_eq!(direct_snr_cdf(&one, 1.0, 0.0).unwrap(), 0.0);
        assert!(direct_snr_cdf(&one, 0.0, 1.0).is_err());

        let p = NakagamiParams::new(2.5, 1.3).unwrap();
        let r = integrate(
            |g| if g > 0.0 { direct_snr_pdf(&p, 4.0, g).unwrap() } else { 0.0 },
            0.0,
            200.0,
            &[4.0, 10.0],
            QuadOptions::default(),
        )
        .unwrap();
        assert!(fabs(r.value - 1.0) < 1e-8);
        for g in [0.5, 2.0, 5.0, 11.0] {
            let h = 1e-5;
            let d = (direct_snr_cdf(&p, 4.0, g + h).unwrap() - direct_snr_cdf(&p, 4.0, g - h).unwrap())
                / (2.0 * h);
            assert!(fabs(d - direct_snr_pdf(&p, 4.0, g).unwrap()) < 1e-6);
        }
    }

    // Transmitter, RIS and UAV placed as in a mid-cell deployment; the direct
    // shape is overridden so the closed form needs no rounding.
    fn table_link(n: u32, m3: f64) -> (LaguerreFit, NakagamiParams, LinkBudget) {
        let env = EnvironmentParams::default();
        let bs = Position3D::new(0.0, 0.0, 25.0);
        let uav = Position3D::new(600.0, 300.0, 100.0);
        let ris_pos = Position3D::new(400.0, 200.0, 30.0);
        let hop = |a: &Position3D, b: &Position3D| {
            unit(nakagami_shape(los_probability(&env, a, b)).unwrap())
        };
        let link = RisLinkParams::new(
            hop(&bs, &ris_pos),
            hop(&ris_pos, &uav),
            n,
            path_loss_amplitude(&env, &bs, &ris_pos).unwrap(),
            path_loss_amplitude(&env, &ris_pos, &uav).unwrap(),
        )
        .unwrap();
        let snr = dbm_to_watts(37.0) / noise_power_w(40e6, 290.0).unwrap();
        let amp_d = path_loss_amplitude(&env, &bs, &uav).unwrap();
        let budget = LinkBudget::new(snr, amp_d, link.amp_cascade()).unwrap();
        (fit_laguerre(&link).unwrap(), unit(m3), budget)
    }

    fn amplitude_grid(fit: &LaguerreFit, budget: &LinkBudget) -> Vec<f64> {
        let base = budget.amp_ris() * fit.mean_sum;
        (0..60)
            .map(|i| {
                let s = 0.6 * base + (i as f64 / 59.0) * (base + 3.0 * budget.amp_direct - 0.6 * base);
                budget.gamma_bar_c * s * s
            })
            .collect()
    }

    #[test]
    fn composite_closed_matches_quadrature() {
        for n in [16, 64] {
            let (fit, direct, budget) = table_link(n, 2.0);
            let boundary = budget.gamma_bar_r * fit.mean_sum * fit.mean_sum;
            let grid = amplitude_grid(&fit, &budget);
            assert!(grid[0] < boundary && *grid.last().unwrap() > boundary);
            for g in grid {
                let c = composite_snr_cdf_closed(&fit, &direct, &budget, g).unwrap();
                let q = composite_snr_cdf_quadrature(&fit, &direct, &budget, g).unwrap();
                assert!(fabs(c - q) <= 1e-3, "N={n} gamma={g}: closed {c} quad {q}");
            }
        }
    }

    #[test]
    fn composite_limits() {
        let (fit, direct, budget) = table_link(32, 2.0);
        assert_eq!(composite_snr_cdf_closed(&fit, &direct, &budget, 0.0).unwrap(), 0.0);
        assert_eq!(composite_snr_cdf_quadrature(&fit, &direct, &budget, 0.0).unwrap(), 0.0);
        let big = budget.gamma_bar_c * 1e-3;
        assert!(composite_snr_cdf_quadrature(&fit, &direct, &budget, big).unwrap() > 1.0 - 1e-9);

        let odd = unit(1.92);
        assert!(matches!(
            composite_snr_cdf_closed(&fit, &odd, &budget, 1.0),
            Err(Error::NonHalfIntegerShape { .. })
        ));

        // vanishing RIS amplitude collapses onto the direct link
        let tiny = LinkBudget::new(budget.gamma_bar_c, budget.amp_direct, 1e-12).unwrap();
        let p = unit(1.7);
        for i in 1..20 {
            let g = budget.gamma_bar_d * i as f64 * 0.2;
            let d = direct_snr_cdf(&p, budget.gamma_bar_d, g).unwrap();
            let q = composite_snr_cdf_quadrature(&fit, &p, &tiny, g).unwrap();
            assert!(fabs(d - q) < 1e-6);
        }
        let none = CompositeLink {
            direct: p,
            fit: None,
            budget,
            method: CompositeMethod::Closed,
        };
        assert_eq!(
            none.cdf(3.0).unwrap(),
            direct_snr_cdf(&p, budget.gamma_bar_d, 3.0).unwrap()
        );
    }

    #[test]
    fn composite_closed_monotone() {
        let (fit, direct, budget) = table_link(64, 2.0);
        let top = budget.amp_ris() * fit.mean_sum + 4.0 * budget.amp_direct;
        let mut prev = 0.0;
        for i in 0..200 {
            let s = top * i as f64 / 199.0;
            let v = composite_snr_cdf_closed(&fit, &direct, &budget, budget.gamma_bar_c * s * s).unwrap();
            assert!(v >= prev - 1e-12, "step {i}: {v} < {prev}");
            assert!((0.0..=1.0).contains(&v));
            prev = v;
        }
        assert!(prev > 0.99);
    }

    #[test]
    fn ris_link_without_elements_is_always_in_outage() {
        let link = RisLink {
            fit: None,
            gamma_bar_r: 0.0,
        };
        assert_eq!(link.cdf(0.5).unwrap(), 1.0);
    }

    #[test]
    fn half_integer_rounding() {
        assert_eq!(round_to_half_integer(1.92), 2.0);
        assert_eq!(round_to_half_integer(1.7), 1.5);
        assert_eq!(round_to_half_integer(0.1), 0.5);
        assert_eq!(round_to_half_integer(8.2577), 8.5);
    }
}
