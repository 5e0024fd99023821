//! Special functions used by the closed-form distributions.
//!
//! Γ uses a Lanczos approximation (g = 607/128, 15 terms). The incomplete
//! gamma functions split between a power series (x < s + 1) and a modified
//! Lentz continued fraction, with the regularized forms computed in the log
//! domain so that shapes in the thousands do not overflow. K_v for real order
//! follows Temme's series for x <= 2 and Steed's continued fraction above,
//! then recurs upward in order.

use crate::error::{domain, Error, Result};
use core::f64::consts::PI;
use libm::{cosh, exp, fabs, log, pow, sin, sinh, sqrt};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;

const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    3.399_464_998_481_189e-5,
    4.652_362_892_704_858e-5,
    -9.837_447_530_487_956e-5,
    1.580_887_032_249_125e-4,
    -2.102_644_417_241_049e-4,
    2.174_396_181_152_126_4e-4,
    -1.643_181_065_367_639e-4,
    8.441_822_398_385_275e-5,
    -2.619_083_840_158_141e-5,
    3.689_918_265_953_162_4e-6,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

fn lanczos_sum(z: f64) -> f64 {
    // z = x - 1
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    a
}

/// Γ(x) for x > 0.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("gamma", "x", x));
    }
    Ok(gamma_pos(x))
}

fn gamma_pos(x: f64) -> f64 {
    if x <= 30.0 && x == libm::floor(x) {
        return (2..x as u32).fold(1.0, |acc, k| acc * k as f64);
    }
    if x < 0.5 {
        // reflection
        return PI / (sin(PI * x) * gamma_pos(1.0 - x));
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    if x < 140.0 {
        SQRT_2PI * pow(t, z + 0.5) * exp(-t) * lanczos_sum(z)
    } else {
        exp(ln_gamma_pos(x))
    }
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("ln_gamma", "x", x));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        return log(PI / fabs(sin(PI * x))) - ln_gamma_pos(1.0 - x);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * log(t) - t + log(lanczos_sum(z))
}

fn check_inc_args(op: &'static str, s: f64, x: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(domain(op, "s", s));
    }
    if !(x >= 0.0) || x.is_nan() {
        return Err(domain(op, "x", x));
    }
    Ok(())
}

/// Series part of P(s, x) without the prefactor: Σ x^n / (s (s+1) ... (s+n)).
fn inc_gamma_series(s: f64, x: f64) -> Result<f64> {
    let mut ap = s;
    let mut del = 1.0 / s;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if fabs(del) < fabs(sum) * EPS {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        op: "incomplete gamma series",
        estimate: sum,
        error: del,
    })
}

/// Continued fraction for Q(s, x) without the prefactor (modified Lentz).
fn inc_gamma_cf(s: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if fabs(d) < TINY {
            d = TINY;
        }
        c = b + an / c;
        if fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if fabs(del - 1.0) < EPS {
            return Ok(h);
        }
    }
    Err(Error::NonConvergence {
        op: "incomplete gamma continued fraction",
        estimate: h,
        error: f64::NAN,
    })
}

/// Regularized pair (P, Q) with P + Q = 1.
fn gamma_pq(s: f64, x: f64) -> Result<(f64, f64)> {
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let ln_pref = s * log(x) - x - ln_gamma_pos(s);
    if x < s + 1.0 {
        let p = (exp(ln_pref) * inc_gamma_series(s, x)?).min(1.0);
        Ok((p, 1.0 - p))
    } else {
        let q = (exp(ln_pref) * inc_gamma_cf(s, x)?).min(1.0);
        Ok((1.0 - q, q))
    }
}

/// Regularized lower incomplete gamma P(s, x) = γ(s, x) / Γ(s).
pub fn gamma_p(s: f64, x: f64) -> Result<f64> {
    check_inc_args("gamma_p", s, x)?;
    Ok(gamma_pq(s, x)?.0)
}

/// Regularized upper incomplete gamma Q(s, x) = Γ(s, x) / Γ(s).
pub fn gamma_q(s: f64, x: f64) -> Result<f64> {
    check_inc_args("gamma_q", s, x)?;
    Ok(gamma_pq(s, x)?.1)
}

/// Unregularized lower incomplete gamma γ(s, x) = ∫₀ˣ t^{s−1} e^{−t} dt.
pub fn lower_inc_gamma(s: f64, x: f64) -> Result<f64> {
    check_inc_args("lower_inc_gamma", s, x)?;
    let (p, _) = gamma_pq(s, x)?;
    Ok(scale_by_gamma(p, s))
}

/// Unregularized upper incomplete gamma Γ(s, x) = Γ(s) − γ(s, x).
pub fn upper_inc_gamma(s: f64, x: f64) -> Result<f64> {
    check_inc_args("upper_inc_gamma", s, x)?;
    let (_, q) = gamma_pq(s, x)?;
    Ok(scale_by_gamma(q, s))
}

fn scale_by_gamma(r: f64, s: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else if s < 140.0 {
        r * gamma_pos(s)
    } else {
        exp(log(r) + ln_gamma_pos(s))
    }
}

// Taylor coefficients of 1/Γ(1 + z) about z = 0.
const RGAMMA1P: [f64; 25] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_9,
    -0.042_002_635_034_095_24,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_34,
    -0.009_621_971_527_876_974,
    0.007_218_943_246_663_1,
    -0.001_165_167_591_859_065,
    -2.152_416_741_149_51e-4,
    1.280_502_823_881_162e-4,
    -2.013_485_478_078_824e-5,
    -1.250_493_482_142_671e-6,
    1.133_027_231_981_696e-6,
    -2.056_338_416_977_607e-7,
    6.116_095_104_481_416e-9,
    5.002_007_644_469_223e-9,
    -1.181_274_570_487_02e-9,
    1.043_426_711_691_101e-10,
    7.782_263_439_905_071e-12,
    -3.696_805_618_642_206e-12,
    5.100_370_287_454_476e-13,
    -2.058_326_053_566_507e-14,
    -5.348_122_539_423_018e-15,
    1.226_778_628_238_261e-15,
];

/// Temme's auxiliary values for |mu| <= 1/2:
/// (gam1, gam2, 1/Γ(1+mu), 1/Γ(1−mu)).
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    // gam1 = −Σ_{k odd} c_k mu^{k−1}, gam2 = Σ_{k even} c_k mu^k
    let mut gam1 = 0.0;
    let mut gam2 = 0.0;
    let mut pw = 1.0;
    for pair in RGAMMA1P.chunks(2) {
        gam2 += pair[0] * pw;
        if let Some(c) = pair.get(1) {
            gam1 -= c * pw;
        }
        pw *= mu * mu;
    }
    let gampl = gam2 - mu * gam1;
    let gammi = gam2 + mu * gam1;
    (gam1, gam2, gampl, gammi)
}

/// Modified Bessel function of the second kind K_v(x) for real order v and x > 0.
pub fn bessel_k(v: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("bessel_k", "x", x));
    }
    if !v.is_finite() {
        return Err(domain("bessel_k", "v", v));
    }
    let nu = fabs(v);
    let nl = libm::floor(nu + 0.5) as usize;
    let mu = nu - nl as f64;
    let mu2 = mu * mu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;

    let (mut k_mu, mut k_mu1) = if x <= 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if fabs(pimu) < EPS { 1.0 } else { pimu / sin(pimu) };
        let d = -log(x2);
        let e = mu * d;
        let fact2 = if fabs(e) < EPS { 1.0 } else { sinh(e) / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let mut ff = fact * (gam1 * cosh(e) + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = exp(e);
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        let mut converged = false;
        for i in 1..MAX_ITER {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            let del1 = c * (p - fi * ff);
            sum1 += del1;
            if fabs(del) < fabs(sum) * EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                op: "bessel_k series",
                estimate: sum,
                error: f64::NAN,
            });
        }
        (sum, sum1 * xi2)
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        let mut converged = false;
        for i in 2..MAX_ITER {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            h += delh;
            let dels = q * delh;
            s += dels;
            if fabs(dels / s) < EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                op: "bessel_k continued fraction",
                estimate: s,
                error: f64::NAN,
            });
        }
        h *= a1;
        let k_mu = sqrt(PI / (2.0 * x)) * exp(-x) / s;
        let k_mu1 = k_mu * (mu + x + 0.5 - h) * xi;
        (k_mu, k_mu1)
    };

    for i in 1..=nl {
        let next = (mu + i as f64) * xi2 * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
    }
    Ok(k_mu)
}

/// Standard normal tail probability Q(x) = P(Z > x).
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}

/// Binomial coefficient C(n, k), exact for n <= 60.
pub fn binomial(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Err(domain("binomial", "k", k as f64));
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).map_err(|_| Error::InvalidParameter {
        name: "n",
        reason: "binomial coefficient overflows u64",
    })
}

/// Binomial coefficient as f64 (no overflow guard beyond f64 range).
pub(crate) fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    libm::round(acc)
}
