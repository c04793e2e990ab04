//! Momentum-mode decomposition of the periodic transverse-field Ising ring.
//!
//! After the Jordan-Wigner and Fourier maps the ring Hamiltonian with
//! field `h` splits into independent `(k, -k)` pairs. Each pair carries a
//! quasi-particle energy `eps = 2 sqrt(1 + h^2 - 2 h cos k)` and a
//! Bogoliubov angle `theta = atan2(sin k, h - cos k)`. The probe qubit sees
//! two rings, one at `lambda` (probe in `|0>`) and one at `lambda + delta`
//! (probe in `|1>`); everything downstream is built from the pair of
//! spectra and their closed-form `lambda`-derivatives.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ring size and probe coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingConfig {
    n: usize,
    delta: f64,
}

impl RingConfig {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "ring size must be even and >= 2, got {n}"
            )));
        }
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "coupling delta must be finite and >= 0, got {delta}"
            )));
        }
        Ok(Self { n, delta })
    }

    /// Ring of `n` spins with `delta = n_delta / n`.
    pub fn with_n_delta(n: usize, n_delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("ring size must be positive".into()));
        }
        Self::new(n, n_delta / n as f64)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// One momentum pair `(k, -k)` with `k = 2 pi n / N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub n: usize,
    pub k: f64,
    pub sin_k: f64,
    pub cos_k: f64,
    /// `sin(k/2)`, kept for the cancellation-free form of the dispersion.
    pub sin_half_k: f64,
}

impl Mode {
    /// Mode at an arbitrary momentum in `(0, pi]`.
    pub fn from_momentum(n: usize, k: f64) -> Self {
        Self {
            n,
            k,
            sin_k: k.sin(),
            cos_k: k.cos(),
            sin_half_k: (0.5 * k).sin(),
        }
    }

    fn new(n: usize, ring: usize) -> Self {
        let k = 2.0 * PI * n as f64 / ring as f64;
        // k = pi is hit for every even ring; pin it so sin k is exactly 0.
        if 2 * n == ring {
            return Self {
                n,
                k: PI,
                sin_k: 0.0,
                cos_k: -1.0,
                sin_half_k: 1.0,
            };
        }
        Self {
            n,
            k,
            sin_k: k.sin(),
            cos_k: k.cos(),
            sin_half_k: (0.5 * k).sin(),
        }
    }
}

/// Modes `n = 1..=N/2`, ascending.
pub fn build_modes(cfg: &RingConfig) -> Vec<Mode> {
    (1..=cfg.n / 2).map(|n| Mode::new(n, cfg.n)).collect()
}

/// Quasi-particle energy `2 sqrt(1 + h^2 - 2 h cos k)`.
pub fn dispersion(h: f64, k: f64) -> f64 {
    let s = (0.5 * k).sin();
    dispersion_half(h, s)
}

// 1 + h^2 - 2h cos k == (1 - h)^2 + 4 h sin^2(k/2), without the cancellation
// near h = 1, k -> 0.
fn dispersion_half(h: f64, sin_half_k: f64) -> f64 {
    let d = 1.0 - h;
    2.0 * (d * d + 4.0 * h * sin_half_k * sin_half_k).sqrt()
}

/// Bogoliubov angle on the continuous `atan2` branch, in `[0, pi]` for `k` in `(0, pi]`.
pub fn bogoliubov_angle(h: f64, k: f64) -> f64 {
    k.sin().atan2(h - k.cos())
}

/// Per-mode energies, angles and their `lambda`-derivatives at one field value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpectrum {
    pub n: usize,
    pub k: f64,
    pub sin_k: f64,
    pub eps0: f64,
    pub eps1: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub alpha: f64,
    pub sin2a: f64,
    pub cos2a: f64,
    pub deps0: f64,
    pub deps1: f64,
    pub dsin2a: f64,
    pub dcos2a: f64,
}

impl ModeSpectrum {
    /// Builds the spectrum of a single mode for fields `lambda` and `lambda + delta`.
    pub fn new(mode: &Mode, lambda: f64, delta: f64) -> Result<Self> {
        let h1 = lambda + delta;
        let eps0 = dispersion_half(lambda, mode.sin_half_k);
        let eps1 = dispersion_half(h1, mode.sin_half_k);
        if !(eps0 > 0.0 && eps1 > 0.0) {
            return Err(Error::NumericalFailure(format!(
                "non-positive mode energy at n = {}, lambda = {lambda}: eps0 = {eps0}, eps1 = {eps1}",
                mode.n
            )));
        }
        let (s, c) = (mode.sin_k, mode.cos_k);
        let theta0 = s.atan2(lambda - c);
        let theta1 = s.atan2(h1 - c);

        let e01 = eps0 * eps1;
        let sin2a = 4.0 * delta * s / e01;
        let cos2a = 4.0 * (1.0 + lambda * h1 - (2.0 * lambda + delta) * c) / e01;

        let deps0 = 4.0 * (lambda - c) / eps0;
        let deps1 = 4.0 * (h1 - c) / eps1;
        let dsin2a =
            -4.0 * delta * s * (deps0 / (eps0 * e01) + deps1 / (e01 * eps1));
        let dcos2a = 64.0 * delta * delta * (2.0 * lambda + delta - 2.0 * c) * s * s / (e01 * e01 * e01);

        Ok(Self {
            n: mode.n,
            k: mode.k,
            sin_k: s,
            eps0,
            eps1,
            theta0,
            theta1,
            alpha: 0.5 * (theta0 - theta1),
            sin2a,
            cos2a,
            deps0,
            deps1,
            dsin2a,
            dcos2a,
        })
    }
}

/// Spectrum of every mode of the ring at field `lambda`, in ascending `n`.
pub fn spectrum(cfg: &RingConfig, lambda: f64) -> Result<Vec<ModeSpectrum>> {
    if !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("field must be finite, got {lambda}")));
    }
    build_modes(cfg)
        .iter()
        .map(|m| ModeSpectrum::new(m, lambda, cfg.delta))
        .collect()
}
