//! Grid evaluation of echo and QFI surfaces over the `(lambda, t)` plane,
//! peak extraction, quadratic `N`-scaling fits, and the scaling-symmetry
//! residual between two ring sizes at fixed `N delta`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::echo::{loschmidt_thermal, EchoValue, GridPoint, ThermalConfig};
use crate::error::{Error, Result};
use crate::modes::RingConfig;
use crate::qfi::{qfi_from_echo, OPTIMAL_THETA};

/// Uniform `lambda x t` grid, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_steps: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub t_steps: usize,
}

impl Grid {
    pub fn new(
        (lambda_min, lambda_max, lambda_steps): (f64, f64, usize),
        (t_min, t_max, t_steps): (f64, f64, usize),
    ) -> Result<Self> {
        let ok = lambda_min.is_finite()
            && lambda_max.is_finite()
            && t_min.is_finite()
            && t_max.is_finite()
            && lambda_min < lambda_max
            && t_min < t_max
            && t_min >= 0.0
            && lambda_steps >= 2
            && t_steps >= 2;
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "bad grid: lambda {lambda_min}:{lambda_max}:{lambda_steps}, t {t_min}:{t_max}:{t_steps}"
            )));
        }
        Ok(Self {
            lambda_min,
            lambda_max,
            lambda_steps,
            t_min,
            t_max,
            t_steps,
        })
    }

    pub fn len(&self) -> usize {
        self.lambda_steps * self.t_steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lambda_step(&self) -> f64 {
        (self.lambda_max - self.lambda_min) / (self.lambda_steps - 1) as f64
    }

    pub fn t_step(&self) -> f64 {
        (self.t_max - self.t_min) / (self.t_steps - 1) as f64
    }

    pub fn lambda(&self, i: usize) -> f64 {
        if i + 1 == self.lambda_steps {
            self.lambda_max
        } else {
            self.lambda_min + i as f64 * self.lambda_step()
        }
    }

    pub fn t(&self, j: usize) -> f64 {
        if j + 1 == self.t_steps {
            self.t_max
        } else {
            self.t_min + j as f64 * self.t_step()
        }
    }

    /// Row-major (`lambda`-major) index.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.t_steps + j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    EchoGround,
    EchoThermal,
    QfiGround,
    QfiThermal,
}

impl SurfaceKind {
    pub fn is_qfi(self) -> bool {
        matches!(self, Self::QfiGround | Self::QfiThermal)
    }

    pub fn is_thermal(self) -> bool {
        matches!(self, Self::EchoThermal | Self::QfiThermal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeFlag {
    Ok,
    EchoVanished,
    BoundarySingularity,
}

impl NodeFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::EchoVanished => "echo_vanished",
            Self::BoundarySingularity => "boundary_singularity",
        }
    }
}

/// One evaluated node. Fields that could not be computed are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub l: f64,
    pub dlog_l: f64,
    pub qfi: f64,
    pub flag: NodeFlag,
}

/// Physical inputs a surface was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSource {
    pub ring: RingConfig,
    pub thermal: ThermalConfig,
    pub theta: f64,
}

impl SurfaceSource {
    pub fn node(&self, p: GridPoint) -> Result<Node> {
        evaluate_node(&self.ring, p, &self.thermal, self.theta)
    }
}

#[derive(Debug, Clone)]
pub struct Surface {
    pub grid: Grid,
    pub kind: SurfaceKind,
    pub source: Option<SurfaceSource>,
    pub nodes: Vec<Node>,
}

impl Surface {
    /// A surface of bare values, with no physical source attached.
    pub fn from_values(grid: Grid, kind: SurfaceKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidConfig(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        let nodes = values
            .into_iter()
            .map(|v| {
                let (l, qfi) = if kind.is_qfi() { (f64::NAN, v) } else { (v, f64::NAN) };
                Node { l, dlog_l: f64::NAN, qfi, flag: NodeFlag::Ok }
            })
            .collect();
        Ok(Self { grid, kind, source: None, nodes })
    }

    /// `L` for echo kinds, `F` for QFI kinds.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        let n = &self.nodes[self.grid.index(i, j)];
        if self.kind.is_qfi() {
            n.qfi
        } else {
            n.l
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|n| if self.kind.is_qfi() { n.qfi } else { n.l })
            .collect()
    }

    pub fn flagged(&self) -> impl Iterator<Item = (usize, NodeFlag)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.flag != NodeFlag::Ok)
            .map(|(i, n)| (i, n.flag))
    }
}

fn node_from_echo(echo: &EchoValue, theta: f64) -> Node {
    match qfi_from_echo(echo, theta) {
        Ok(q) => Node { l: echo.l, dlog_l: echo.dlog_l, qfi: q.f, flag: NodeFlag::Ok },
        Err(_) => Node {
            l: echo.l,
            dlog_l: echo.dlog_l,
            qfi: f64::NAN,
            flag: NodeFlag::BoundarySingularity,
        },
    }
}

/// Echo and QFI at one point. Vanishing echoes and QFI boundary
/// singularities become node flags; anything else is an error.
pub fn evaluate_node(cfg: &RingConfig, p: GridPoint, th: &ThermalConfig, theta: f64) -> Result<Node> {
    match loschmidt_thermal(cfg, p, th) {
        Ok(echo) => Ok(node_from_echo(&echo, theta)),
        Err(Error::EchoVanished { .. }) => Ok(Node {
            l: 0.0,
            dlog_l: f64::NAN,
            qfi: f64::NAN,
            flag: NodeFlag::EchoVanished,
        }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Used by thermal kinds only; ground kinds always evaluate at `T = 0`.
    pub thermal: ThermalConfig,
    pub theta: f64,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            thermal: ThermalConfig::ground(),
            theta: OPTIMAL_THETA,
            workers: 0,
        }
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Evaluates every node of `grid`. The node order and every value are
/// independent of the worker count.
pub fn evaluate_surface(cfg: &RingConfig, grid: &Grid, kind: SurfaceKind, opts: &EvalOptions) -> Result<Surface> {
    let thermal = if kind.is_thermal() { opts.thermal } else { ThermalConfig::ground() };
    let source = SurfaceSource { ring: *cfg, thermal, theta: opts.theta };
    let nodes = with_pool(opts.workers, || {
        (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / grid.t_steps, idx % grid.t_steps);
                source.node(GridPoint { lambda: grid.lambda(i), t: grid.t(j) })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(Surface { grid: *grid, kind, source: Some(source), nodes })
}

/// Effective critical field `1 - delta`.
pub fn critical_lambda(cfg: &RingConfig) -> f64 {
    1.0 - cfg.delta()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index_l: usize,
    pub lambda_star: f64,
    pub t_star: f64,
    pub f_star: f64,
    /// Grid node the peak was found at, and its value.
    pub node: (usize, usize),
    pub f_node: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions {
    /// `lambda` interval searched; `None` means `lambda_c +- 5 delta` (or the
    /// whole grid for surfaces without a source).
    pub window: Option<(f64, f64)>,
    pub count: usize,
    /// Fraction of the window maximum a peak must reach.
    pub threshold: f64,
    /// Peaks closer than this many cells (Chebyshev) are merged.
    pub dedup_radius: usize,
    /// Rounds of 3x3 quadratic refinement against the exact function; each
    /// round halves the stencil. Ignored for surfaces without a source.
    pub refine_iterations: usize,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self {
            window: None,
            count: 5,
            threshold: 0.1,
            dedup_radius: 2,
            refine_iterations: 10,
        }
    }
}

/// Least-squares quadratic `f(x, y) = c0 + bx x + by y + dxx x^2 + exy x y + dyy y^2`
/// on a 3x3 stencil with offsets -1, 0, 1.
struct StencilQuadratic {
    c0: f64,
    bx: f64,
    by: f64,
    dxx: f64,
    exy: f64,
    dyy: f64,
}

impl StencilQuadratic {
    /// `f[a][b]` at offsets `(a - 1, b - 1)`.
    fn fit(f: &[[f64; 3]; 3]) -> Self {
        let mut bx = 0.0;
        let mut by = 0.0;
        let mut exy = 0.0;
        let mut mean = 0.0;
        let mut sx = 0.0;
        let mut sy = 0.0;
        for (a, row) in f.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                let (x, y) = (a as f64 - 1.0, b as f64 - 1.0);
                bx += x * v;
                by += y * v;
                exy += x * y * v;
                mean += v;
            }
        }
        for (k, row) in f.iter().enumerate() {
            sx += f[2][k] - 2.0 * f[1][k] + f[0][k];
            sy += row[2] - 2.0 * row[1] + row[0];
        }
        let dxx = sx / 6.0;
        let dyy = sy / 6.0;
        let mean = mean / 9.0;
        Self {
            c0: mean - 2.0 / 3.0 * (dxx + dyy),
            bx: bx / 6.0,
            by: by / 6.0,
            dxx,
            exy: exy / 4.0,
            dyy,
        }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        self.c0 + self.bx * x + self.by * y + self.dxx * x * x + self.exy * x * y + self.dyy * y * y
    }

    /// Stationary point clamped to the stencil, if the fit is concave.
    fn maximum(&self) -> Option<(f64, f64)> {
        let (hxx, hxy, hyy) = (2.0 * self.dxx, self.exy, 2.0 * self.dyy);
        let det = hxx * hyy - hxy * hxy;
        if !(hxx < 0.0 && det > 0.0) {
            return None;
        }
        let x = -(hyy * self.bx - hxy * self.by) / det;
        let y = -(-hxy * self.bx + hxx * self.by) / det;
        Some((x.clamp(-1.0, 1.0), y.clamp(-1.0, 1.0)))
    }
}

fn finite_or_neg_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::NEG_INFINITY
    }
}

fn refine(surface: &Surface, i: usize, j: usize, iterations: usize) -> (f64, f64, f64) {
    let g = &surface.grid;
    let node_value = surface.value(i, j);
    let mut stencil = [[0.0; 3]; 3];
    for (a, row) in stencil.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v = finite_or_neg_inf(surface.value(i + a - 1, j + b - 1));
        }
    }
    let (mut lam, mut t) = (g.lambda(i), g.t(j));
    let (mut hl, mut ht) = (g.lambda_step(), g.t_step());

    let Some(source) = surface.source else {
        if stencil.iter().flatten().any(|v| !v.is_finite()) {
            return (lam, t, node_value);
        }
        let q = StencilQuadratic::fit(&stencil);
        return match q.maximum() {
            Some((x, y)) if q.eval(x, y) >= node_value => (lam + x * hl, t + y * ht, q.eval(x, y)),
            _ => (lam, t, node_value),
        };
    };

    let exact = |lambda: f64, t: f64| -> f64 {
        if t < 0.0 {
            return f64::NEG_INFINITY;
        }
        source
            .node(GridPoint { lambda, t })
            .map_or(f64::NEG_INFINITY, |n| finite_or_neg_inf(n.qfi))
    };
    let mut best = node_value;
    for round in 0..iterations {
        if round > 0 {
            for (a, row) in stencil.iter_mut().enumerate() {
                for (b, v) in row.iter_mut().enumerate() {
                    *v = if a == 1 && b == 1 {
                        best
                    } else {
                        exact(lam + (a as f64 - 1.0) * hl, t + (b as f64 - 1.0) * ht)
                    };
                }
            }
        }
        // climb to a better stencil node before fitting
        let (mut ba, mut bb) = (1, 1);
        for a in 0..3 {
            for b in 0..3 {
                if stencil[a][b] > stencil[ba][bb] {
                    (ba, bb) = (a, b);
                }
            }
        }
        if (ba, bb) != (1, 1) {
            lam += (ba as f64 - 1.0) * hl;
            t += (bb as f64 - 1.0) * ht;
            best = stencil[ba][bb];
            continue;
        }
        if stencil.iter().flatten().all(|v| v.is_finite()) {
            let q = StencilQuadratic::fit(&stencil);
            if let Some((x, y)) = q.maximum() {
                let (cl, ct) = (lam + x * hl, t + y * ht);
                let v = exact(cl, ct);
                if v > best {
                    (lam, t, best) = (cl, ct, v);
                }
            }
        }
        hl *= 0.5;
        ht *= 0.5;
    }
    (lam, t, best)
}

/// Local maxima of a QFI surface inside a `lambda` window, ordered by
/// ascending `t`, labeled `1..=count`.
pub fn find_peaks(surface: &Surface, opts: &PeakOptions) -> Result<Vec<Peak>> {
    let g = &surface.grid;
    let (wlo, whi) = match (opts.window, surface.source) {
        (Some(w), _) => w,
        (None, Some(src)) => {
            let lc = critical_lambda(&src.ring);
            let d = src.ring.delta();
            (lc - 5.0 * d, lc + 5.0 * d)
        }
        (None, None) => (g.lambda_min, g.lambda_max),
    };
    let in_window = |i: usize| {
        let l = g.lambda(i);
        l >= wlo && l <= whi
    };

    let window_max = (0..g.lambda_steps)
        .filter(|&i| in_window(i))
        .flat_map(|i| (0..g.t_steps).map(move |j| (i, j)))
        .map(|(i, j)| surface.value(i, j))
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);

    let mut candidates = Vec::new();
    if window_max.is_finite() {
        for i in 1..g.lambda_steps.saturating_sub(1) {
            if !in_window(i) {
                continue;
            }
            for j in 1..g.t_steps - 1 {
                let v = surface.value(i, j);
                if !v.is_finite() || v < opts.threshold * window_max {
                    continue;
                }
                let mut is_max = true;
                let mut strictly = false;
                for di in 0..3 {
                    for dj in 0..3 {
                        if di == 1 && dj == 1 {
                            continue;
                        }
                        let w = finite_or_neg_inf(surface.value(i + di - 1, j + dj - 1));
                        is_max &= v >= w;
                        strictly |= v > w;
                    }
                }
                if is_max && strictly {
                    candidates.push((i, j, v));
                }
            }
        }
    }

    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.1.cmp(&b.1)).then(a.0.cmp(&b.0)));
    let r = opts.dedup_radius;
    let mut kept: Vec<(usize, usize, f64)> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| k.0.abs_diff(c.0) > r || k.1.abs_diff(c.1) > r) {
            kept.push(c);
        }
    }
    if kept.len() < opts.count {
        return Err(Error::InsufficientPeaks { found: kept.len(), wanted: opts.count });
    }

    let mut peaks: Vec<Peak> = kept
        .iter()
        .map(|&(i, j, v)| {
            let (lambda_star, t_star, f_star) = refine(surface, i, j, opts.refine_iterations);
            Peak { index_l: 0, lambda_star, t_star, f_star, node: (i, j), f_node: v }
        })
        .collect();
    // neighbouring grid maxima can climb onto the same refined peak
    peaks.sort_by(|a, b| b.f_star.total_cmp(&a.f_star));
    let (rl, rt) = (r.max(1) as f64 * g.lambda_step(), r.max(1) as f64 * g.t_step());
    let mut merged: Vec<Peak> = Vec::with_capacity(peaks.len());
    for p in peaks {
        if merged
            .iter()
            .all(|m| (m.lambda_star - p.lambda_star).abs() > rl || (m.t_star - p.t_star).abs() > rt)
        {
            merged.push(p);
        }
    }
    let mut peaks = merged;
    if peaks.len() < opts.count {
        return Err(Error::InsufficientPeaks { found: peaks.len(), wanted: opts.count });
    }
    peaks.sort_by(|a, b| a.t_star.total_cmp(&b.t_star));
    peaks.truncate(opts.count);
    for (k, p) in peaks.iter_mut().enumerate() {
        p.index_l = k + 1;
    }
    Ok(peaks)
}

/// Coefficients of `F(N) = a N^2 + b N + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadFit {
    pub peak_index: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r2: f64,
    pub n_values: Vec<usize>,
    pub f_values: Vec<f64>,
}

impl QuadFit {
    pub fn eval(&self, n: f64) -> f64 {
        self.a * n * n + self.b * n + self.c
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.n_values
            .iter()
            .zip(&self.f_values)
            .map(|(&n, &f)| f - self.eval(n as f64))
            .collect()
    }
}

/// Least-squares quadratic through `(n, f)` pairs.
pub fn fit_quadratic(peak_index: usize, n_values: &[usize], f_values: &[f64]) -> Result<QuadFit> {
    let m = n_values.len();
    if m < 3 || f_values.len() != m {
        return Err(Error::InvalidConfig(format!(
            "quadratic fit needs >= 3 matched points, got {m} N values and {} F values",
            f_values.len()
        )));
    }
    // columns scaled by the largest N to keep the system well conditioned
    let scale = n_values.iter().copied().max().unwrap_or(1).max(1) as f64;
    let design = DMatrix::from_fn(m, 3, |r, c| (n_values[r] as f64 / scale).powi(2 - c as i32));
    let rhs = DVector::from_column_slice(f_values);
    let coef = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::NumericalFailure(format!("quadratic fit: {e}")))?;
    let mut fit = QuadFit {
        peak_index,
        a: coef[0] / (scale * scale),
        b: coef[1] / scale,
        c: coef[2],
        r2: 0.0,
        n_values: n_values.to_vec(),
        f_values: f_values.to_vec(),
    };
    let mean = f_values.iter().sum::<f64>() / m as f64;
    let ss_tot: f64 = f_values.iter().map(|f| (f - mean).powi(2)).sum();
    let ss_res: f64 = fit.residuals().iter().map(|r| r * r).sum();
    fit.r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    Ok(fit)
}

/// Grid shape used for each ring size in a scaling sweep. The window is
/// `lambda_c +- lambda_halfwidth * delta` and `t` runs over
/// `[0, t_per_spin * N]`, so grids for different `N` map onto each other
/// under the scaling symmetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingOptions {
    pub lambda_halfwidth: f64,
    pub lambda_steps: usize,
    pub t_per_spin: f64,
    pub t_steps: usize,
    pub eval: EvalOptions,
    pub peaks: PeakOptions,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            lambda_halfwidth: 5.0,
            lambda_steps: 200,
            t_per_spin: 0.3,
            t_steps: 300,
            eval: EvalOptions::default(),
            peaks: PeakOptions::default(),
        }
    }
}

impl ScalingOptions {
    pub fn grid_for(&self, cfg: &RingConfig) -> Result<Grid> {
        let lc = critical_lambda(cfg);
        let w = self.lambda_halfwidth * cfg.delta();
        Grid::new(
            (lc - w, lc + w, self.lambda_steps),
            (0.0, self.t_per_spin * cfg.n() as f64, self.t_steps),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    pub fit: QuadFit,
    /// `(N, delta, peak)` for every ring size.
    pub peaks: Vec<(usize, f64, Peak)>,
}

/// Tracks QFI peak `peak_index` across ring sizes at fixed `N delta` and
/// fits its height to a quadratic in `N`.
pub fn peak_scaling(
    n_list: &[usize],
    n_delta: f64,
    peak_index: usize,
    opts: &ScalingOptions,
) -> Result<ScalingResult> {
    if peak_index == 0 {
        return Err(Error::InvalidConfig("peak index starts at 1".into()));
    }
    let kind = if opts.eval.thermal.is_ground() { SurfaceKind::QfiGround } else { SurfaceKind::QfiThermal };
    let mut peaks = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let cfg = RingConfig::with_n_delta(n, n_delta)?;
        let grid = opts.grid_for(&cfg)?;
        let surface = evaluate_surface(&cfg, &grid, kind, &opts.eval)?;
        let popts = PeakOptions { count: opts.peaks.count.max(peak_index), ..opts.peaks };
        let found = find_peaks(&surface, &popts)?;
        peaks.push((n, cfg.delta(), found[peak_index - 1]));
    }
    let f_values: Vec<f64> = peaks.iter().map(|p| p.2.f_star).collect();
    let fit = fit_quadratic(peak_index, n_list, &f_values)?;
    Ok(ScalingResult { fit, peaks })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryQuantity {
    /// Relative QFI residual `(F_n0 - F_n1 / alpha^2) / F_n1`.
    Qfi,
    /// Echo difference `L_n0 - L_n1`.
    Echo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Values outside the range land in the edge bins.
    pub fn new(values: impl IntoIterator<Item = f64>, range: (f64, f64), bins: usize) -> Self {
        let (lo, hi) = range;
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|b| lo + b as f64 * width).collect();
        let mut counts = vec![0; bins];
        for v in values {
            let b = ((v - lo) / width).floor();
            let b = if b < 0.0 { 0 } else { (b as usize).min(bins - 1) };
            counts[b] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryCheck {
    pub n0: usize,
    pub n1: usize,
    pub alpha: f64,
    pub n_delta: f64,
    pub quantity: SymmetryQuantity,
    /// Grid in shifted coordinates `(lambda - lambda_c, t)` of the `n0` ring.
    pub grid: Grid,
    pub value_n0: Vec<f64>,
    /// `F_n1 / alpha^2` (or `L_n1`) at the scaled coordinates.
    pub value_n1_scaled: Vec<f64>,
    /// NaN on flagged nodes.
    pub residual: Vec<f64>,
    pub flagged: Vec<bool>,
    pub histogram: Histogram,
}

impl SymmetryCheck {
    pub fn unflagged(&self) -> usize {
        self.flagged.iter().filter(|f| !**f).count()
    }

    /// Fraction of unflagged nodes with `|residual| < tol`.
    pub fn fraction_within(&self, tol: f64) -> f64 {
        let within = self
            .residual
            .iter()
            .zip(&self.flagged)
            .filter(|(r, f)| !**f && r.abs() < tol)
            .count();
        within as f64 / self.unflagged().max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryOptions {
    pub quantity: SymmetryQuantity,
    pub eval: EvalOptions,
    pub histogram_range: (f64, f64),
    pub histogram_bins: usize,
    /// Nodes whose denominator `F_n1` is below this are flagged.
    pub min_denominator: f64,
}

impl Default for SymmetryOptions {
    fn default() -> Self {
        Self {
            quantity: SymmetryQuantity::Qfi,
            eval: EvalOptions::default(),
            histogram_range: (-0.5, 0.5),
            histogram_bins: 50,
            min_denominator: 1e-12,
        }
    }
}

/// Compares ring `n0` at `(x, t)` with ring `alpha n0` at `(x / alpha, alpha t)`,
/// where `x = lambda - lambda_c`, both at the same `N delta`.
pub fn symmetry_residual(
    n0: usize,
    alpha: f64,
    n_delta: f64,
    shifted: &Grid,
    opts: &SymmetryOptions,
) -> Result<SymmetryCheck> {
    let n1f = alpha * n0 as f64;
    let n1 = n1f.round() as usize;
    if alpha.is_nan() || alpha <= 0.0 || (n1f - n1 as f64).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("alpha * n0 = {n1f} is not an integer")));
    }
    let cfg0 = RingConfig::with_n_delta(n0, n_delta)?;
    let cfg1 = RingConfig::with_n_delta(n1, n_delta)?;
    let (lc0, lc1) = (critical_lambda(&cfg0), critical_lambda(&cfg1));
    let kind = match (opts.quantity, opts.eval.thermal.is_ground()) {
        (SymmetryQuantity::Qfi, true) => SurfaceKind::QfiGround,
        (SymmetryQuantity::Qfi, false) => SurfaceKind::QfiThermal,
        (SymmetryQuantity::Echo, true) => SurfaceKind::EchoGround,
        (SymmetryQuantity::Echo, false) => SurfaceKind::EchoThermal,
    };
    let g0 = Grid::new(
        (shifted.lambda_min + lc0, shifted.lambda_max + lc0, shifted.lambda_steps),
        (shifted.t_min, shifted.t_max, shifted.t_steps),
    )?;
    let g1 = Grid::new(
        (shifted.lambda_min / alpha + lc1, shifted.lambda_max / alpha + lc1, shifted.lambda_steps),
        (shifted.t_min * alpha, shifted.t_max * alpha, shifted.t_steps),
    )?;
    let s0 = evaluate_surface(&cfg0, &g0, kind, &opts.eval)?;
    let s1 = evaluate_surface(&cfg1, &g1, kind, &opts.eval)?;

    let value_n0 = s0.values();
    let value_n1_scaled: Vec<f64> = match opts.quantity {
        SymmetryQuantity::Qfi => s1.values().iter().map(|v| v / (alpha * alpha)).collect(),
        SymmetryQuantity::Echo => s1.values(),
    };
    let mut residual = Vec::with_capacity(value_n0.len());
    let mut flagged = Vec::with_capacity(value_n0.len());
    for (&a, &b) in value_n0.iter().zip(&value_n1_scaled) {
        let r = match opts.quantity {
            SymmetryQuantity::Qfi => {
                let denom = b * alpha * alpha;
                if denom.is_finite() && denom >= opts.min_denominator && a.is_finite() {
                    (a - b) / denom
                } else {
                    f64::NAN
                }
            }
            SymmetryQuantity::Echo => a - b,
        };
        flagged.push(!r.is_finite());
        residual.push(if r.is_finite() { r } else { f64::NAN });
    }
    let histogram = Histogram::new(
        residual.iter().copied().filter(|r| r.is_finite()),
        opts.histogram_range,
        opts.histogram_bins,
    );
    Ok(SymmetryCheck {
        n0,
        n1,
        alpha,
        n_delta,
        quantity: opts.quantity,
        grid: *shifted,
        value_n0,
        value_n1_scaled,
        residual,
        flagged,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian_surface() -> Surface {
        let grid = Grid::new((0.0, 1.0, 41), (0.0, 10.0, 101)).unwrap();
        let bump = |l: f64, t: f64, l0: f64, t0: f64, h: f64| {
            h * (-((l - l0) / 0.08).powi(2) - ((t - t0) / 0.7).powi(2)).exp()
        };
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.lambda_steps {
            for j in 0..grid.t_steps {
                let (l, t) = (grid.lambda(i), grid.t(j));
                values.push(bump(l, t, 0.41, 6.03, 3.0) + bump(l, t, 0.62, 2.52, 1.0));
            }
        }
        Surface::from_values(grid, SurfaceKind::QfiGround, values).unwrap()
    }

    #[test]
    fn grid_layout() {
        let g = Grid::new((0.7, 1.1, 5), (0.0, 30.0, 4)).unwrap();
        assert_eq!(g.len(), 20);
        assert_eq!(g.lambda(0), 0.7);
        assert_eq!(g.lambda(4), 1.1);
        assert_eq!(g.t(3), 30.0);
        assert_eq!(g.index(2, 3), 11);
        assert!(Grid::new((1.0, 0.5, 4), (0.0, 1.0, 4)).is_err());
        assert!(Grid::new((0.0, 1.0, 1), (0.0, 1.0, 4)).is_err());
    }

    #[test]
    fn synthetic_peaks_are_found_and_refined() {
        let s = gaussian_surface();
        let peaks = find_peaks(&s, &PeakOptions { count: 2, ..Default::default() }).unwrap();
        assert_eq!(peaks.len(), 2);
        assert_eq!(peaks[0].index_l, 1);
        assert!((peaks[0].lambda_star - 0.62).abs() < 0.01);
        assert!((peaks[0].t_star - 2.52).abs() < 0.05);
        assert!((peaks[1].lambda_star - 0.41).abs() < 0.01);
        assert!((peaks[1].t_star - 6.03).abs() < 0.05);
        for p in &peaks {
            assert!(p.f_star >= p.f_node - 1e-12);
        }
    }

    #[test]
    fn flat_surface_has_no_peaks() {
        let grid = Grid::new((0.0, 1.0, 10), (0.0, 1.0, 10)).unwrap();
        let s = Surface::from_values(grid, SurfaceKind::QfiGround, vec![2.0; 100]).unwrap();
        assert!(matches!(
            find_peaks(&s, &PeakOptions::default()),
            Err(Error::InsufficientPeaks { found: 0, wanted: 5 })
        ));
    }

    #[test]
    fn ring_peaks_are_distinct_and_ordered() {
        let cfg = RingConfig::new(100, 0.1).unwrap();
        let grid = Grid::new((0.7, 1.1, 80), (0.0, 30.0, 120)).unwrap();
        let s = evaluate_surface(&cfg, &grid, SurfaceKind::QfiGround, &EvalOptions::default()).unwrap();
        let peaks = find_peaks(&s, &PeakOptions::default()).unwrap();
        for w in peaks.windows(2) {
            assert!(w[0].t_star < w[1].t_star);
        }
        for p in &peaks {
            assert!(p.f_star >= p.f_node - 1e-12);
        }
    }

    #[test]
    fn quadratic_fit_is_exact_on_quadratic_data() {
        let ns = [50, 100, 150, 200];
        let f: Vec<f64> = ns.iter().map(|&n| 2.0 * (n * n) as f64).collect();
        let fit = fit_quadratic(1, &ns, &f).unwrap();
        assert_relative_eq!(fit.a, 2.0, max_relative = 1e-10);
        assert!(fit.b.abs() < 1e-7 && fit.c.abs() < 1e-4);
        assert_relative_eq!(fit.r2, 1.0, max_relative = 1e-12);
        assert!(fit_quadratic(1, &ns[..2], &f[..2]).is_err());
    }

    #[test]
    fn unit_scale_factor_gives_zero_residual() {
        let g = Grid::new((-0.3, 0.3, 12), (0.0, 20.0, 15)).unwrap();
        let c = symmetry_residual(40, 1.0, 10.0, &g, &SymmetryOptions::default()).unwrap();
        assert!(c.residual.iter().zip(&c.flagged).all(|(r, f)| *f || *r == 0.0));
        // t = 0 column has F = 0 and is flagged
        assert_eq!(c.unflagged(), 12 * 14);
        assert_eq!(c.fraction_within(1e-300), 1.0);
        assert!(symmetry_residual(40, 1.01, 10.0, &g, &SymmetryOptions::default()).is_err());
    }

    #[test]
    fn histogram_clamps_outliers() {
        let h = Histogram::new([-2.0, -0.5, 0.0, 0.49, 7.0], (-0.5, 0.5), 4);
        assert_eq!(h.edges.len(), 5);
        assert_eq!(h.counts, vec![2, 0, 1, 2]);
    }

    #[test]
    fn surfaces_do_not_depend_on_worker_count() {
        let cfg = RingConfig::new(60, 0.15).unwrap();
        let grid = Grid::new((0.7, 1.1, 17), (0.0, 20.0, 23)).unwrap();
        let th = ThermalConfig::new(0.02).unwrap();
        let run = |workers| {
            let opts = EvalOptions { thermal: th, workers, ..Default::default() };
            evaluate_surface(&cfg, &grid, SurfaceKind::QfiThermal, &opts).unwrap().values()
        };
        let a = run(1);
        let b = run(3);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn critical_point_tracks_coupling() {
        assert_relative_eq!(critical_lambda(&RingConfig::new(100, 0.1).unwrap()), 0.9);
    }
}
