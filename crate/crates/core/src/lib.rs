//! Probe-qubit magnetometry with a transverse-field Ising ring.
//!
//! A single probe qubit couples through its `|1>` state to every spin of a
//! periodic Ising ring, shifting the ring's transverse field from `lambda`
//! to `lambda + delta`. The probe dephases by the Loschmidt echo `L` of the
//! ring, and the quantum Fisher information for `lambda` follows from `L`
//! and its `lambda`-derivative. Everything is evaluated mode by mode in the
//! free-fermion representation of the ring.

pub mod echo;
pub mod error;
pub mod modes;
pub mod oracle;
pub mod qfi;
pub mod report;
pub mod sweep;

pub use echo::{loschmidt_ground, loschmidt_thermal, EchoValue, GridPoint, ThermalConfig};
pub use error::{Error, Result};
pub use modes::{build_modes, spectrum, Mode, ModeSpectrum, RingConfig};
pub use qfi::{qfi_dephasing, qfi_ground, qfi_thermal, ProbeState, QfiValue, OPTIMAL_THETA};
pub use sweep::{
    critical_lambda, evaluate_surface, find_peaks, peak_scaling, symmetry_residual, Grid, Peak,
    QuadFit, Surface, SurfaceKind,
};
