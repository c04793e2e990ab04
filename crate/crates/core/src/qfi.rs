//! Quantum Fisher information of the dephased probe qubit.
//!
//! The probe starts in `cos(theta)|0> + e^{i omega} sin(theta)|1>` and its
//! coherence shrinks by `sqrt(L)`. The Bloch vector convention is
//! `rho_01 = (a_x - i a_y) / 2`, giving
//! `a = (sqrt(L) sin 2theta cos omega, -sqrt(L) sin 2theta sin omega, cos 2theta)`.
//! The QFI does not depend on `omega` or on the sign of `a_y`.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::echo::{loschmidt_ground, loschmidt_thermal, EchoValue, GridPoint, ThermalConfig};
use crate::error::{Error, Result};
use crate::modes::RingConfig;

/// Probe angle that maximizes `sin^2 2theta`.
pub const OPTIMAL_THETA: f64 = FRAC_PI_4;

/// `1 - L` (or `L`) below this counts as sitting on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-14;
/// `|dL|` below this on the boundary takes the zero limit.
pub const BOUNDARY_DL_TOL: f64 = 1e-7;
const PURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeState {
    pub theta: f64,
    pub omega: f64,
}

impl Default for ProbeState {
    fn default() -> Self {
        Self {
            theta: OPTIMAL_THETA,
            omega: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochVector {
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub dax: f64,
    pub day: f64,
    pub daz: f64,
}

impl BlochVector {
    pub fn norm_sqr(&self) -> f64 {
        self.ax * self.ax + self.ay * self.ay + self.az * self.az
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiValue {
    pub f: f64,
}

/// Bloch vector of the dephased probe, values only.
pub fn dephased_bloch(probe: &ProbeState, l: f64) -> BlochVector {
    let r = l.clamp(0.0, 1.0).sqrt() * (2.0 * probe.theta).sin();
    let (so, co) = probe.omega.sin_cos();
    BlochVector {
        ax: r * co,
        ay: -r * so,
        az: (2.0 * probe.theta).cos(),
        ..Default::default()
    }
}

/// Bloch vector with `lambda`-derivatives, chained through `sqrt(L)`.
/// Requires `L > 0`.
pub fn dephased_bloch_with_derivative(probe: &ProbeState, l: f64, dl: f64) -> BlochVector {
    let mut a = dephased_bloch(probe, l);
    let s = (2.0 * probe.theta).sin();
    let dr = s * dl / (2.0 * l.sqrt());
    let (so, co) = probe.omega.sin_cos();
    a.dax = dr * co;
    a.day = -dr * so;
    a.daz = 0.0;
    a
}

/// `F = (a . da)^2 / (1 - |a|^2) + |da|^2`.
pub fn qfi_bloch(a: &BlochVector) -> Result<QfiValue> {
    let radial = a.ax * a.dax + a.ay * a.day + a.az * a.daz;
    let tangent = a.dax * a.dax + a.day * a.day + a.daz * a.daz;
    let mixed = 1.0 - a.norm_sqr();
    if mixed < PURE_TOL {
        if radial.abs() < PURE_TOL {
            return Ok(QfiValue { f: tangent });
        }
        return Err(Error::PureStateSingularity { radial });
    }
    Ok(QfiValue {
        f: radial * radial / mixed + tangent,
    })
}

/// Dephasing-channel QFI `F = dL^2 sin^2(2 theta) / (4 L (1 - L))`.
pub fn qfi_dephasing(l: f64, dl: f64, theta: f64) -> Result<QfiValue> {
    qfi_dephasing_with_complement(l, 1.0 - l, dl, theta)
}

/// As [`qfi_dephasing`] with `1 - L` supplied by the caller, who can
/// usually compute it more accurately than the subtraction.
pub fn qfi_dephasing_with_complement(
    l: f64,
    one_minus_l: f64,
    dl: f64,
    theta: f64,
) -> Result<QfiValue> {
    let s2 = (2.0 * theta).sin().powi(2);
    if one_minus_l < BOUNDARY_TOL || l < BOUNDARY_TOL {
        if dl.abs() < BOUNDARY_DL_TOL {
            return Ok(QfiValue { f: 0.0 });
        }
        return Err(Error::BoundarySingularity { l, dl });
    }
    Ok(QfiValue {
        f: dl * dl * s2 / (4.0 * l * one_minus_l),
    })
}

pub fn qfi_from_echo(echo: &EchoValue, theta: f64) -> Result<QfiValue> {
    qfi_dephasing_with_complement(echo.l, echo.one_minus_l, echo.dl(), theta)
}

pub fn qfi_ground(cfg: &RingConfig, p: GridPoint, theta: f64) -> Result<QfiValue> {
    qfi_from_echo(&loschmidt_ground(cfg, p)?, theta)
}

pub fn qfi_thermal(
    cfg: &RingConfig,
    p: GridPoint,
    th: &ThermalConfig,
    theta: f64,
) -> Result<QfiValue> {
    qfi_from_echo(&loschmidt_thermal(cfg, p, th)?, theta)
}
