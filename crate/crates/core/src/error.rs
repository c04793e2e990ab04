use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A per-mode echo factor is zero within machine precision, so
    /// the logarithmic derivative is undefined.
    #[error("decoherence factor vanished (mode n = {mode})")]
    EchoVanished { mode: usize },

    #[error("pure-state singularity: radial Bloch derivative {radial:e} at |a| = 1")]
    PureStateSingularity { radial: f64 },

    #[error("boundary singularity: L = {l:e}, dL = {dl:e}")]
    BoundarySingularity { l: f64, dl: f64 },

    #[error("ring of {n} spins exceeds the exact-diagonalization limit of {max}")]
    DimensionExceeded { n: usize, max: usize },

    #[error("ground state of H0 is degenerate (gap {gap:e})")]
    DegenerateGroundState { gap: f64 },

    #[error("found {found} peaks, {wanted} requested")]
    InsufficientPeaks { found: usize, wanted: usize },
}
