//! Modified Bessel function of the third kind, `K_nu(x)`, for real order and
//! positive argument.
//!
//! The fractional order `mu = nu - round(nu)` in `[-1/2, 1/2)` is evaluated
//! with Temme's series for `x <= 2` and Steed's continued fraction (CF2)
//! above; both return the pair `K_mu, K_{mu+1}`, which seeds the upward
//! recurrence `K_{v+1} = K_{v-1} + (2v/x) K_v`. The recurrence runs on a
//! rescaled mantissa with a separate log scale, so `log_bessel_k` stays
//! finite where `K_nu` itself overflows (tiny `x`, large `|nu|`) or
//! underflows (large `x`). Half-integer orders land on `mu = -1/2`, where
//! both seed values are exact closed forms.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselPoint {
    pub nu: f64,
    pub x: f64,
}

impl BesselPoint {
    pub fn new(nu: f64, x: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(domain(format!("Bessel order must be finite, got {nu}")));
        }
        if !(x > 0.0) || !x.is_finite() {
            return Err(domain(format!("Bessel argument must be positive and finite, got {x}")));
        }
        Ok(Self { nu, x })
    }
}

/// `K_nu(x)`. Fails with [`Error::OutOfRange`] when the value overflows or
/// underflows an f64.
pub fn bessel_k(point: BesselPoint) -> Result<f64> {
    let BesselPoint { nu, x } = BesselPoint::new(point.nu, point.x)?;
    let (mantissa, log_scale) = scaled_parts(nu.abs(), x);
    let exponent = log_scale - x;
    let value = mantissa * exponent.exp();
    if !value.is_finite() || value < f64::MIN_POSITIVE {
        return Err(Error::OutOfRange { nu, x });
    }
    Ok(value)
}

/// `ln K_nu(x)`.
pub fn log_bessel_k(point: BesselPoint) -> Result<f64> {
    let BesselPoint { nu, x } = BesselPoint::new(point.nu, point.x)?;
    let (mantissa, log_scale) = scaled_parts(nu.abs(), x);
    Ok(mantissa.ln() + log_scale - x)
}

/// Returns `(m, s)` with `e^x K_nu(x) = m * exp(s)`, for `nu >= 0`.
fn scaled_parts(nu: f64, x: f64) -> (f64, f64) {
    let steps = (nu + 0.5).floor();
    let mu = nu - steps;
    let (mut k_cur, mut k_next) = if x <= 2.0 { temme_scaled(mu, x) } else { steed_cf2_scaled(mu, x) };
    let mut log_scale = 0.0;
    for n in 0..steps as u64 {
        let factor = 2.0 * (mu + n as f64 + 1.0) / x;
        if k_next > 1e250 / factor.max(1.0) {
            k_cur /= k_next;
            log_scale += k_next.ln();
            k_next = 1.0;
        }
        let k_prev = k_cur;
        k_cur = k_next;
        k_next = factor * k_cur + k_prev;
    }
    (k_cur, log_scale)
}

// Chebyshev fits of g1(mu) = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu) and
// g2(mu) = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2 on t = 4|mu| - 1 (GSL tables).
#[allow(clippy::excessive_precision)]
const G1_COEFFS: [f64; 14] = [
    -1.14516408366268311786898152867,
    0.00636085311347084238122955495,
    0.00186245193007206848934643657,
    0.000152833085873453507081227824,
    0.000017017464011802038795324732,
    -6.4597502923347254354668326451e-07,
    -5.1819848432519380894104312968e-08,
    4.5189092894858183051123180797e-10,
    3.2433227371020873043666259180e-11,
    6.8309434024947522875432400828e-13,
    2.8353502755172101513119628130e-14,
    -7.9883905769323592875638087541e-16,
    -3.3726677300771949833341213457e-17,
    -3.6586334809210520744054437104e-20,
];

#[allow(clippy::excessive_precision)]
const G2_COEFFS: [f64; 15] = [
    1.882645524949671835019616975350,
    -0.077490658396167518329547945212,
    -0.018256714847324929419579340950,
    0.0006338030209074895795923971731,
    0.0000762290543508729021194461175,
    -9.5501647561720443519853993526e-07,
    -8.8927268107886351912431512955e-08,
    -1.9521334772319613740511880132e-09,
    -9.4003052735885162111769579771e-11,
    4.6875133849532393179290879101e-12,
    2.2658535746925759582447545145e-13,
    -1.1725509698488015111878735251e-15,
    -7.0441338200245222530843155877e-17,
    -2.4377878310107693650659740228e-18,
    -7.5225243218253901727164675011e-20,
];

fn chebyshev(coeffs: &[f64], t: f64) -> f64 {
    let t2 = 2.0 * t;
    let (mut d, mut dd) = (0.0, 0.0);
    for &c in coeffs[1..].iter().rev() {
        let tmp = d;
        d = t2 * d - dd + c;
        dd = tmp;
    }
    t * d - dd + 0.5 * coeffs[0]
}

/// Returns `(Gamma(1+mu), Gamma(1-mu), g1, g2)` for `|mu| <= 1/2`.
fn temme_gamma(mu: f64) -> (f64, f64, f64, f64) {
    let t = 4.0 * mu.abs() - 1.0;
    let g1 = chebyshev(&G1_COEFFS, t);
    let g2 = chebyshev(&G2_COEFFS, t);
    (1.0 / (g2 - mu * g1), 1.0 / (g2 + mu * g1), g1, g2)
}

/// Temme's series: `(e^x K_mu(x), e^x K_{mu+1}(x))` for `|mu| <= 1/2`, `x <= 2`.
fn temme_scaled(mu: f64, x: f64) -> (f64, f64) {
    const MAX_TERMS: usize = 15_000;
    let half_x = 0.5 * x;
    let ln_half_x = half_x.ln();
    let half_x_mu = (mu * ln_half_x).exp();
    let pi_mu = PI * mu;
    let sigma = -mu * ln_half_x;
    let sin_ratio = if pi_mu.abs() < f64::EPSILON { 1.0 } else { pi_mu / pi_mu.sin() };
    let sinh_ratio = if sigma.abs() < f64::EPSILON { 1.0 } else { sigma.sinh() / sigma };

    let (gamma_1p, gamma_1m, g1, g2) = temme_gamma(mu);

    let mut fk = sin_ratio * (sigma.cosh() * g1 - sinh_ratio * ln_half_x * g2);
    let mut pk = 0.5 / half_x_mu * gamma_1p;
    let mut qk = 0.5 * half_x_mu * gamma_1m;
    let mut ck = 1.0;
    let mut sum0 = fk;
    let mut sum1 = pk;
    for k in 1..=MAX_TERMS {
        let kf = k as f64;
        fk = (kf * fk + pk + qk) / (kf * kf - mu * mu);
        ck *= half_x * half_x / kf;
        pk /= kf - mu;
        qk /= kf + mu;
        let hk = -kf * fk + pk;
        let del0 = ck * fk;
        sum0 += del0;
        sum1 += ck * hk;
        if del0.abs() < 0.5 * sum0.abs() * f64::EPSILON {
            break;
        }
    }
    let ex = x.exp();
    (sum0 * ex, sum1 * 2.0 / x * ex)
}

/// Steed's CF2 with Temme's normalization: `(e^x K_mu(x), e^x K_{mu+1}(x))`
/// for `|mu| <= 1/2`, `x > 2`.
fn steed_cf2_scaled(mu: f64, x: f64) -> (f64, f64) {
    const MAX_TERMS: usize = 10_000;
    let mut bi = 2.0 * (1.0 + x);
    let mut di = 1.0 / bi;
    let mut delhi = di;
    let mut hi = di;
    let mut qi = 0.0;
    let mut qip1 = 1.0;
    let mut ai = -(0.25 - mu * mu);
    let a1 = ai;
    let mut ci = -ai;
    let mut bqi = -ai;
    let mut s = 1.0 + bqi * delhi;
    for i in 2..=MAX_TERMS {
        ai -= 2.0 * (i - 1) as f64;
        ci = -ai * ci / i as f64;
        let tmp = (qi - bi * qip1) / ai;
        qi = qip1;
        qip1 = tmp;
        bqi += ci * qip1;
        bi += 2.0;
        di = 1.0 / (bi + ai * di);
        delhi *= bi * di - 1.0;
        hi += delhi;
        let dels = bqi * delhi;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            break;
        }
    }
    hi *= -a1;
    let k_mu = (PI / (2.0 * x)).sqrt() / s;
    let k_mu1 = k_mu * (mu + x + 0.5 - hi) / x;
    (k_mu, k_mu1)
}
