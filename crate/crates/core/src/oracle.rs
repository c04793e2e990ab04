//! Independent validators for the closed-form echoes.
//!
//! * Momentum-block oracles: each `(k, -k)` pair is treated as a 2x2
//!   Hamiltonian on the even-parity states `{|11>, |00>}` and exponentiated
//!   numerically by eigen-decomposition.
//! * Exact diagonalization of the full `2^N` spin ring (small `N`).
//! * Richardson-extrapolated finite differences.
//!
//! Block normalization: `H_k = 2 [ (h - cos k) sigma_z + sin k sigma_y ]`, so the
//! even-sector eigenvalues are `+-eps_k` and the odd sector sits at 0. This is
//! the normalization under which the thermal partition factor is
//! `Z_k = 2 + 2 cosh(beta eps_k)`; the ground-state echo depends only on
//! `eps_k t` and is fixed by the same choice.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::echo::{
    ground_echo_from_spectrum, loschmidt_ground, loschmidt_thermal, GridPoint, ThermalConfig,
};
use crate::error::{Error, Result};
use crate::modes::{build_modes, Mode, ModeSpectrum, RingConfig};

pub const MAX_ED_SPINS: usize = 12;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A 2x2 complex matrix in the `{|11>, |00>}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockMatrix(pub [[Complex64; 2]; 2]);

impl BlockMatrix {
    pub fn zero() -> Self {
        Self([[Complex64::new(0.0, 0.0); 2]; 2])
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                r.0[i][j] = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j];
            }
        }
        r
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn apply(&self, v: &[Complex64; 2]) -> [Complex64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.0[i][j] - o.0[i][j]).norm());
            }
        }
        d
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self([[one, zero], [zero, one]])
    }
}

/// Eigen-decomposition of a Hermitian 2x2 block: ascending eigenvalues and
/// unit eigenvectors.
#[derive(Debug, Clone, Copy)]
pub struct BlockEigen {
    pub values: [f64; 2],
    pub vectors: [[Complex64; 2]; 2],
}

impl BlockEigen {
    pub fn new(m: &BlockMatrix) -> Self {
        let a = m.0[0][0].re;
        let d = m.0[1][1].re;
        let b = m.0[0][1];
        let mean = 0.5 * (a + d);
        let half = 0.5 * (a - d);
        let r = half.hypot(b.norm());
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        if r == 0.0 {
            return Self {
                values: [mean, mean],
                vectors: [[one, zero], [zero, one]],
            };
        }
        // pick the better-conditioned row of (m - lambda) v = 0 for each root
        let (lo, hi) = if half >= 0.0 {
            ([b, Complex64::new(-half - r, 0.0)], [Complex64::new(half + r, 0.0), b.conj()])
        } else {
            ([Complex64::new(half - r, 0.0), b.conj()], [b, Complex64::new(r - half, 0.0)])
        };
        let norm = |v: [Complex64; 2]| {
            let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            [v[0] / n, v[1] / n]
        };
        Self {
            values: [mean - r, mean + r],
            vectors: [norm(lo), norm(hi)],
        }
    }

    /// `U f(D) U^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> Complex64) -> BlockMatrix {
        let mut out = BlockMatrix::zero();
        for (val, v) in self.values.iter().zip(&self.vectors) {
            let fv = f(*val);
            for i in 0..2 {
                for j in 0..2 {
                    out.0[i][j] += fv * v[i] * v[j].conj();
                }
            }
        }
        out
    }
}

/// Even-parity block of the ring Hamiltonian with field `h` at momentum `k`.
pub fn block_hamiltonian(h: f64, mode: &Mode) -> BlockMatrix {
    let z = 2.0 * (h - mode.cos_k);
    let y = 2.0 * mode.sin_k;
    // z sigma_z + y sigma_y
    BlockMatrix([
        [Complex64::new(z, 0.0), Complex64::new(0.0, -y)],
        [Complex64::new(0.0, y), Complex64::new(-z, 0.0)],
    ])
}

/// Amplitudes on `(|11>, |00>)` of the negative-energy eigenvector.
#[derive(Debug, Clone, Copy)]
pub struct BlockGroundState(pub [Complex64; 2]);

impl BlockGroundState {
    pub fn of(h: f64, mode: &Mode) -> Self {
        Self(BlockEigen::new(&block_hamiltonian(h, mode)).vectors[0])
    }

    /// Bogoliubov vacuum `sin(theta/2)|11> - i cos(theta/2)|00>`.
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        Self([Complex64::new(s, 0.0), Complex64::new(0.0, -c)])
    }

    /// `|<self|other>|`.
    pub fn overlap(&self, other: &Self) -> f64 {
        (self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]).norm()
    }
}

/// Per-mode partition factor `Z_k`, traced over the even block plus the
/// two odd-parity states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionFactor {
    pub z: f64,
}

impl PartitionFactor {
    pub fn of(h0: &BlockEigen, beta: f64) -> Self {
        let even = h0.map(|e| Complex64::new((-beta * e).exp(), 0.0)).trace().re;
        Self { z: even + 2.0 }
    }
}

pub fn block_echo_oracle(cfg: &RingConfig, p: GridPoint) -> f64 {
    let h0 = p.lambda;
    let h1 = p.lambda + cfg.delta();
    build_modes(cfg)
        .iter()
        .map(|m| {
            let e0 = BlockEigen::new(&block_hamiltonian(h0, m));
            let e1 = BlockEigen::new(&block_hamiltonian(h1, m));
            let fwd0 = e0.map(|e| (I * e * p.t).exp());
            let back1 = e1.map(|e| (-I * e * p.t).exp());
            let g = e0.vectors[0];
            let v = fwd0.mul(&back1).apply(&g);
            (g[0].conj() * v[0] + g[1].conj() * v[1]).norm_sqr()
        })
        .product()
}

/// Thermal block oracle; restricted to `beta <= 100` since it works with
/// unscaled Boltzmann weights.
pub fn block_thermal_oracle(cfg: &RingConfig, p: GridPoint, th: &ThermalConfig) -> Result<f64> {
    let beta = th.beta();
    if beta.is_nan() || beta > 100.0 {
        return Err(Error::InvalidConfig(format!(
            "thermal block oracle needs beta <= 100, got {beta}"
        )));
    }
    let h0 = p.lambda;
    let h1 = p.lambda + cfg.delta();
    Ok(build_modes(cfg)
        .iter()
        .map(|m| {
            let e0 = BlockEigen::new(&block_hamiltonian(h0, m));
            let e1 = BlockEigen::new(&block_hamiltonian(h1, m));
            let fwd1 = e1.map(|e| (I * e * p.t).exp());
            let weighted0 = e0.map(|e| (-(beta + I * p.t) * e).exp());
            let tr = fwd1.mul(&weighted0).trace() + 2.0;
            let z = PartitionFactor::of(&e0, beta).z;
            (tr / z).norm_sqr()
        })
        .product())
}

/// Richardson-extrapolated central difference, error `O(h^4)`.
pub fn finite_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let central = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let coarse = central(h);
    let fine = central(0.5 * h);
    (4.0 * fine - coarse) / 3.0
}

/// Ground-state echo over the antiperiodic momenta `k = (2n - 1) pi / N`,
/// the mode set of the even fermion-parity sector. Diagnostic only.
pub fn antiperiodic_ground_echo(cfg: &RingConfig, p: GridPoint) -> Result<f64> {
    let n = cfg.n();
    let modes = (1..=n / 2)
        .map(|j| Mode::from_momentum(j, (2 * j - 1) as f64 * PI / n as f64))
        .map(|m| ModeSpectrum::new(&m, p.lambda, cfg.delta()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ground_echo_from_spectrum(&modes, p.t)?.l)
}

struct SpinRing {
    n: usize,
    diag_zz: Vec<f64>,
}

impl SpinRing {
    fn new(n: usize) -> Self {
        let dim = 1usize << n;
        let diag_zz = (0..dim)
            .map(|s| {
                (0..n)
                    .map(|j| {
                        let a = (s >> j) & 1;
                        let b = (s >> ((j + 1) % n)) & 1;
                        if a == b { -1.0 } else { 1.0 }
                    })
                    .sum()
            })
            .collect();
        Self { n, diag_zz }
    }

    fn dim(&self) -> usize {
        self.diag_zz.len()
    }

    /// `out = H v` for `H = -sum_j (sz_j sz_{j+1} + h sx_j)`.
    fn apply(&self, h: f64, v: &[f64], out: &mut [f64]) {
        for (s, o) in out.iter_mut().enumerate() {
            let mut acc = self.diag_zz[s] * v[s];
            for j in 0..self.n {
                acc -= h * v[s ^ (1 << j)];
            }
            *o = acc;
        }
    }

    /// Translation-invariant, spin-flip-symmetric seed. `odd` multiplies by
    /// the magnetization to land in the spin-flip-odd sector.
    fn seed(&self, odd: bool) -> Vec<f64> {
        (0..self.dim())
            .map(|s: usize| {
                let down = s.count_ones() as i64;
                let sign = if down % 2 == 0 { 1.0 } else { -1.0 };
                let base = 1.0 + 0.5 * sign;
                if odd {
                    base * (self.n as i64 - 2 * down) as f64
                } else {
                    base
                }
            })
            .collect()
    }
}

struct Krylov {
    basis: Vec<Vec<f64>>,
    tridiag: DMatrix<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lanczos with full reorthogonalization, run until the Krylov space is
/// invariant (or `max_iter`).
fn lanczos(apply: impl Fn(&[f64], &mut [f64]), seed: &[f64], max_iter: usize, scale: f64) -> Krylov {
    let dim = seed.len();
    let nrm = dot(seed, seed).sqrt();
    let mut basis = vec![seed.iter().map(|x| x / nrm).collect::<Vec<_>>()];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    loop {
        let v = basis.last().unwrap();
        apply(v, &mut w);
        alphas.push(dot(&w, v));
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let beta = dot(&w, &w).sqrt();
        if beta < 1e-11 * scale || basis.len() >= max_iter {
            break;
        }
        betas.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
    }
    let m = alphas.len();
    let mut tridiag = DMatrix::zeros(m, m);
    for i in 0..m {
        tridiag[(i, i)] = alphas[i];
        if i + 1 < m {
            tridiag[(i, i + 1)] = betas[i];
            tridiag[(i + 1, i)] = betas[i];
        }
    }
    Krylov { basis, tridiag }
}

/// Echo from exact diagonalization of the full ring with periodic boundary
/// conditions, `N <= 12`.
pub fn spin_chain_ed_oracle(cfg: &RingConfig, p: GridPoint) -> Result<f64> {
    let n = cfg.n();
    if n > MAX_ED_SPINS {
        return Err(Error::DimensionExceeded { n, max: MAX_ED_SPINS });
    }
    let ring = SpinRing::new(n);
    let dim = ring.dim();
    let max_iter = dim.min(2000);
    let h0 = p.lambda;
    let h1 = p.lambda + cfg.delta();
    let scale = n as f64 * (1.0 + h0.abs().max(h1.abs()));

    let lowest = |odd: bool| {
        let k = lanczos(|v, o| ring.apply(h0, v, o), &ring.seed(odd), max_iter, scale);
        let eig = SymmetricEigen::new(k.tridiag.clone());
        let (idx, e) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        (k, eig.eigenvectors.column(idx).clone_owned(), e)
    };
    let (krylov, coeffs, e_even) = lowest(false);
    let (_, _, e_odd) = lowest(true);
    let gap = e_odd - e_even;
    if gap.abs() < 1e-10 {
        return Err(Error::DegenerateGroundState { gap });
    }

    let mut ground = vec![0.0; dim];
    for (b, c) in krylov.basis.iter().zip(coeffs.iter()) {
        ground.iter_mut().zip(b).for_each(|(g, x)| *g += c * x);
    }
    let nrm = dot(&ground, &ground).sqrt();
    ground.iter_mut().for_each(|g| *g /= nrm);

    // <G| exp(-i H1 t) |G> = e1^T exp(-i T t) e1 on the Krylov space of H1 from G.
    let k1 = lanczos(|v, o| ring.apply(h1, v, o), &ground, max_iter, scale);
    let eig = SymmetricEigen::new(k1.tridiag);
    let amp: Complex64 = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.row(0).iter())
        .map(|(e, u)| u * u * (-I * e * p.t).exp())
        .sum();
    Ok(amp.norm_sqr())
}

/// One row of the oracle self-check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub max_abs_error: f64,
    pub tolerance: Option<f64>,
    pub passed: bool,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, errs: impl IntoIterator<Item = f64>, tol: Option<f64>) -> OracleCheck {
    let mut max = 0.0f64;
    let mut samples = 0;
    for e in errs {
        max = if e.is_nan() { f64::NAN } else { max.max(e) };
        samples += 1;
    }
    OracleCheck {
        name: name.to_string(),
        max_abs_error: max,
        tolerance: tol,
        passed: tol.is_none_or(|t| max < t),
        samples,
    }
}

/// Runs the closed-form vs. oracle comparisons on random points in
/// `[0.5, 1.5] x [0, 20]`. The ED rows are reported without a tolerance.
pub fn run_oracle_checks(quick: bool, seed: u64) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_n = if quick { 20 } else { 100 };
    let ns: &[usize] = &[4, 8, 16, 100];
    let mut points = Vec::new();
    for &n in ns {
        for _ in 0..per_n {
            points.push((n, rng.random_range(0.5..1.5), rng.random_range(0.0..20.0)));
        }
    }
    let ring = |n: usize| RingConfig::with_n_delta(n, 10.0);

    let ground = points
        .iter()
        .map(|&(n, l, t)| {
            let cfg = ring(n)?;
            let p = GridPoint::new(l, t)?;
            Ok((loschmidt_ground(&cfg, p)?.l - block_echo_oracle(&cfg, p)).abs())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut thermal = Vec::new();
    for beta in [0.1, 1.0, 10.0] {
        let th = ThermalConfig::from_beta(beta)?;
        for &(n, l, t) in &points {
            let cfg = ring(n)?;
            let p = GridPoint::new(l, t)?;
            thermal.push((loschmidt_thermal(&cfg, p, &th)?.l - block_thermal_oracle(&cfg, p, &th)?).abs());
        }
    }

    let derivative = {
        let mut errs = Vec::new();
        for &(n, l, t) in points.iter().step_by(4) {
            let cfg = ring(n)?;
            let e = loschmidt_ground(&cfg, GridPoint::new(l, t)?)?;
            if e.l > 1e-8 && e.dlog_l.abs() > 1e-8 {
                let fd = finite_difference(
                    |x| loschmidt_ground(&cfg, GridPoint { lambda: x, t }).map_or(f64::NAN, |e| e.l.ln()),
                    l,
                    1e-5,
                );
                errs.push((e.dlog_l - fd).abs() / e.dlog_l.abs().max(1.0));
            }
        }
        errs
    };

    let ed_points: Vec<(usize, f64, f64)> = {
        let count = if quick { 4 } else { 12 };
        (0..count)
            .map(|i| (if i % 2 == 0 { 8 } else { 10 }, rng.random_range(0.5..1.5), rng.random_range(0.0..20.0)))
            .collect()
    };
    let mut ed_periodic = Vec::new();
    let mut ed_antiperiodic = Vec::new();
    for &(n, l, t) in &ed_points {
        let cfg = RingConfig::new(n, 0.5)?;
        let p = GridPoint::new(l, t)?;
        let ed = spin_chain_ed_oracle(&cfg, p)?;
        ed_periodic.push((ed - loschmidt_ground(&cfg, p)?.l).abs());
        ed_antiperiodic.push((ed - antiperiodic_ground_echo(&cfg, p)?).abs());
    }

    Ok(OracleReport {
        checks: vec![
            check("block_echo_vs_closed_form", ground, Some(1e-10)),
            check("block_thermal_vs_closed_form", thermal, Some(1e-9)),
            check("dlogL_vs_richardson_relative", derivative, Some(1e-6)),
            check("ed_vs_antiperiodic_modes", ed_antiperiodic, Some(1e-9)),
            check("ed_vs_closed_form_gap", ed_periodic, None),
        ],
    })
}
