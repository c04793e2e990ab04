//! Loschmidt-echo decoherence factors for a ring prepared in its ground
//! state or in a thermal state, with their logarithmic `lambda`-derivatives.
//!
//! Both products are accumulated as sums of per-mode logarithms in
//! ascending mode order. `1 - L` is recovered with `expm1` so that the QFI,
//! which divides by it, stays accurate when the echo is close to one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{spectrum, ModeSpectrum, RingConfig};

/// Per-mode factors below this are treated as an exact zero of the echo.
pub const VANISHING_FACTOR: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lambda: f64,
    pub t: f64,
}

impl GridPoint {
    pub fn new(lambda: f64, t: f64) -> Result<Self> {
        if !lambda.is_finite() || !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "grid point needs finite lambda and t >= 0, got ({lambda}, {t})"
            )));
        }
        Ok(Self { lambda, t })
    }
}

/// Ring temperature in units with `hbar = k_B = 1`. `T = 0` selects the
/// ground-state path; `T = inf` is the `beta = 0` limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalConfig {
    temperature: f64,
}

impl ThermalConfig {
    pub fn new(temperature: f64) -> Result<Self> {
        if temperature.is_nan() || temperature < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "temperature must be >= 0, got {temperature}"
            )));
        }
        Ok(Self { temperature })
    }

    pub fn from_beta(beta: f64) -> Result<Self> {
        if beta.is_nan() || beta < 0.0 {
            return Err(Error::InvalidConfig(format!("beta must be >= 0, got {beta}")));
        }
        Self::new(1.0 / beta)
    }

    pub fn ground() -> Self {
        Self { temperature: 0.0 }
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn beta(&self) -> f64 {
        if self.temperature == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.temperature
        }
    }

    pub fn is_ground(&self) -> bool {
        self.temperature == 0.0
    }
}

/// A decoherence factor `L`, its complement `1 - L` computed without
/// cancellation, and the logarithmic derivative `dL/dlambda / L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoValue {
    pub l: f64,
    pub one_minus_l: f64,
    pub dlog_l: f64,
}

impl EchoValue {
    pub fn dl(&self) -> f64 {
        self.l * self.dlog_l
    }

    fn from_log_sum(log_sum: f64, dlog_l: f64) -> Self {
        Self {
            l: log_sum.exp(),
            one_minus_l: -log_sum.exp_m1(),
            dlog_l,
        }
    }
}

/// Ground-state echo from an already computed spectrum. Any subset of the
/// ring's modes is accepted; the result is the partial product over them.
pub fn ground_echo_from_spectrum(modes: &[ModeSpectrum], t: f64) -> Result<EchoValue> {
    let mut log_sum = 0.0;
    let mut dlog = 0.0;
    for m in modes {
        let s2 = m.sin2a * m.sin2a;
        let (sn, cs) = (m.eps1 * t).sin_cos();
        let s = s2 * sn * sn;
        // 1 - s written as a sum of squares, exact near a zero of the factor
        let factor = m.cos2a * m.cos2a + s2 * cs * cs;
        if factor < VANISHING_FACTOR {
            return Err(Error::EchoVanished { mode: m.n });
        }
        log_sum += if s <= 0.5 { (-s).ln_1p() } else { factor.ln() };
        let num = 2.0 * m.sin2a * sn * sn * m.dsin2a + t * s2 * (2.0 * sn * cs) * m.deps1;
        dlog -= num / factor;
    }
    Ok(EchoValue::from_log_sum(log_sum, dlog))
}

pub fn loschmidt_ground(cfg: &RingConfig, p: GridPoint) -> Result<EchoValue> {
    let modes = spectrum(cfg, p.lambda)?;
    ground_echo_from_spectrum(&modes, p.t)
}

/// `p_k`, `q_k` and the per-mode log factor. Numerator and denominator of
/// the factor are both multiplied by `exp(-2 beta eps0)`, so `p` and `q`
/// here are the physical values times `scale = exp(-beta eps0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalModeFactor {
    pub p: f64,
    pub q: f64,
    pub scale: f64,
    pub logfactor: f64,
}

struct ThermalTerms {
    scale: f64,
    cosh_s: f64,
    sinh_s: f64,
    denom: f64,
    a: f64,
    b: f64,
    da: f64,
    db: f64,
    p: f64,
    q: f64,
}

impl ThermalTerms {
    fn new(m: &ModeSpectrum, t: f64, beta: f64) -> Self {
        let x = (-beta * m.eps0).exp();
        let cosh_s = 0.5 * (1.0 + x * x);
        let sinh_s = 0.5 * (1.0 - x) * (1.0 + x);
        let denom = 0.5 * (1.0 + x) * (1.0 + x);

        let (s0, c0) = (m.eps0 * t).sin_cos();
        let (s1, c1) = (m.eps1 * t).sin_cos();
        let c = m.cos2a;
        let a = c1 * c0 + s1 * s0 * c;
        let b = c1 * s0 - s1 * c0 * c;
        let da = t * (-m.deps1 * s1 * c0 - m.deps0 * c1 * s0 + c * (m.deps1 * c1 * s0 + m.deps0 * s1 * c0))
            + s1 * s0 * m.dcos2a;
        let db = t * (-m.deps1 * s1 * s0 + m.deps0 * c1 * c0 + c * (-m.deps1 * c1 * c0 + m.deps0 * s1 * s0))
            - s1 * c0 * m.dcos2a;

        Self {
            scale: x,
            cosh_s,
            sinh_s,
            denom,
            a,
            b,
            da,
            db,
            p: cosh_s * a + x,
            q: sinh_s * b,
        }
    }

    fn one_minus_a(m: &ModeSpectrum, t: f64) -> f64 {
        // 1 - A = 2 sin^2((eps1 - eps0) t / 2) + sin(eps1 t) sin(eps0 t) (1 - cos 2a)
        let half = 0.5 * (m.eps1 - m.eps0) * t;
        let one_minus_c = if m.cos2a > 0.0 {
            m.sin2a * m.sin2a / (1.0 + m.cos2a)
        } else {
            1.0 - m.cos2a
        };
        2.0 * half.sin().powi(2) + (m.eps1 * t).sin() * (m.eps0 * t).sin() * one_minus_c
    }

    /// Returns `(log factor, 1 - factor)`.
    fn log_factor(&self, m: &ModeSpectrum, t: f64) -> (f64, f64) {
        let pq = self.p * self.p + self.q * self.q;
        let d2 = self.denom * self.denom;
        let one_minus_a = Self::one_minus_a(m, t);
        let diff = self.cosh_s * one_minus_a * (self.cosh_s * (2.0 - one_minus_a) + 2.0 * self.scale)
            - self.q * self.q;
        let omf = diff / d2;
        let log = if omf.abs() <= 0.5 { (-omf).ln_1p() } else { (pq / d2).ln() };
        (log, omf)
    }

    fn dlog(&self, m: &ModeSpectrum, beta: f64) -> f64 {
        let pq = self.p * self.p + self.q * self.q;
        let (x, ch, sh, d) = (self.scale, self.cosh_s, self.sinh_s, self.denom);
        // The beta-proportional pieces of p dp + q dq and of the
        // partition-function term cancel analytically; what is left is
        // suppressed by exp(-beta eps0).
        let beta_part = if x > 0.0 && beta > 0.0 {
            let r = (1.0 - x) / (1.0 + x);
            beta * m.deps0 * r * x
                * (ch * self.a * self.a + (x - ch) * self.a - x + d * self.b * self.b)
        } else {
            0.0
        };
        2.0 * ((ch * self.p * self.da + sh * self.q * self.db) + beta_part) / pq
    }
}

pub fn thermal_mode_factor(m: &ModeSpectrum, t: f64, beta: f64) -> ThermalModeFactor {
    let terms = ThermalTerms::new(m, t, beta);
    let (logfactor, _) = terms.log_factor(m, t);
    ThermalModeFactor {
        p: terms.p,
        q: terms.q,
        scale: terms.scale,
        logfactor,
    }
}

/// Physical (unscaled) `p_k`, `q_k`. Overflows once `beta eps0` exceeds ~700.
pub fn p_q_thermal(m: &ModeSpectrum, t: f64, beta: f64) -> (f64, f64) {
    let terms = ThermalTerms::new(m, t, beta);
    (terms.p / terms.scale, terms.q / terms.scale)
}

/// `lambda`-derivatives of the physical `p_k`, `q_k`, by the chain rule
/// through `eps0`, `eps1` and `cos 2 alpha`.
pub fn dp_dq_thermal(m: &ModeSpectrum, t: f64, beta: f64) -> (f64, f64) {
    let tt = ThermalTerms::new(m, t, beta);
    let x = tt.scale;
    let dp = beta * tt.sinh_s * m.deps0 * tt.a + tt.cosh_s * tt.da;
    let dq = beta * tt.cosh_s * m.deps0 * tt.b + tt.sinh_s * tt.db;
    (dp / x, dq / x)
}

/// Thermal echo from an already computed spectrum at finite `beta >= 0`.
pub fn thermal_echo_from_spectrum(modes: &[ModeSpectrum], t: f64, beta: f64) -> Result<EchoValue> {
    let mut log_sum = 0.0;
    let mut dlog = 0.0;
    for m in modes {
        let terms = ThermalTerms::new(m, t, beta);
        let (log, _) = terms.log_factor(m, t);
        if log.is_nan() {
            return Err(Error::NumericalFailure(format!(
                "NaN thermal factor at mode n = {}, t = {t}, beta = {beta}",
                m.n
            )));
        }
        if log < VANISHING_FACTOR.ln() {
            return Err(Error::EchoVanished { mode: m.n });
        }
        log_sum += log;
        dlog += terms.dlog(m, beta);
    }
    if dlog.is_nan() {
        return Err(Error::NumericalFailure(format!(
            "NaN thermal log-derivative at t = {t}, beta = {beta}"
        )));
    }
    Ok(EchoValue::from_log_sum(log_sum, dlog))
}

pub fn loschmidt_thermal(cfg: &RingConfig, p: GridPoint, th: &ThermalConfig) -> Result<EchoValue> {
    if th.is_ground() {
        return loschmidt_ground(cfg, p);
    }
    let modes = spectrum(cfg, p.lambda)?;
    thermal_echo_from_spectrum(&modes, p.t, th.beta())
}
