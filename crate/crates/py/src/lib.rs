//! Python bindings. Echo, QFI and oracle functions take plain floats for the
//! grid point; `temperature=None` selects the ground state.

use std::f64::consts::FRAC_PI_4;

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use isingprobe::oracle;
use isingprobe::qfi::{dephased_bloch_with_derivative, qfi_bloch as core_qfi_bloch, BlochVector};
use isingprobe::report::write_surface_csv;
use isingprobe::sweep::{self, EvalOptions, PeakOptions, ScalingOptions, SymmetryOptions, SymmetryQuantity};
use isingprobe::{Error, GridPoint, ProbeState, SurfaceKind, ThermalConfig};

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidConfig(_) | Error::DimensionExceeded { .. } => PyValueError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

fn point(lam: f64, t: f64) -> PyResult<GridPoint> {
    GridPoint::new(lam, t).map_err(err)
}

fn thermal(temperature: Option<f64>) -> PyResult<ThermalConfig> {
    temperature.map_or(Ok(ThermalConfig::ground()), |t| ThermalConfig::new(t).map_err(err))
}

#[pyclass(name = "RingConfig", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyRingConfig(isingprobe::RingConfig);

#[pymethods]
impl PyRingConfig {
    #[new]
    fn new(n: usize, delta: f64) -> PyResult<Self> {
        isingprobe::RingConfig::new(n, delta).map(Self).map_err(err)
    }

    #[staticmethod]
    fn with_n_delta(n: usize, n_delta: f64) -> PyResult<Self> {
        isingprobe::RingConfig::with_n_delta(n, n_delta).map(Self).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta()
    }

    #[getter]
    fn critical_lambda(&self) -> f64 {
        sweep::critical_lambda(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("RingConfig(n={}, delta={:?})", self.0.n(), self.0.delta())
    }
}

#[pyclass(name = "ModeSpectrum", frozen, get_all)]
struct PyModeSpectrum {
    n: usize,
    k: f64,
    eps0: f64,
    eps1: f64,
    theta0: f64,
    theta1: f64,
    alpha: f64,
    sin2a: f64,
    cos2a: f64,
    deps0: f64,
    deps1: f64,
    dsin2a: f64,
    dcos2a: f64,
}

#[pyclass(name = "EchoValue", frozen, get_all)]
struct PyEchoValue {
    l: f64,
    one_minus_l: f64,
    dlog_l: f64,
    dl: f64,
}

impl From<isingprobe::EchoValue> for PyEchoValue {
    fn from(e: isingprobe::EchoValue) -> Self {
        Self { l: e.l, one_minus_l: e.one_minus_l, dlog_l: e.dlog_l, dl: e.dl() }
    }
}

#[pymethods]
impl PyEchoValue {
    fn __repr__(&self) -> String {
        format!("EchoValue(l={:?}, dlog_l={:?})", self.l, self.dlog_l)
    }
}

#[pyfunction]
fn spectrum(cfg: &PyRingConfig, lam: f64) -> PyResult<Vec<PyModeSpectrum>> {
    let modes = isingprobe::spectrum(&cfg.0, lam).map_err(err)?;
    Ok(modes
        .into_iter()
        .map(|m| PyModeSpectrum {
            n: m.n,
            k: m.k,
            eps0: m.eps0,
            eps1: m.eps1,
            theta0: m.theta0,
            theta1: m.theta1,
            alpha: m.alpha,
            sin2a: m.sin2a,
            cos2a: m.cos2a,
            deps0: m.deps0,
            deps1: m.deps1,
            dsin2a: m.dsin2a,
            dcos2a: m.dcos2a,
        })
        .collect())
}

#[pyfunction]
fn loschmidt_ground(cfg: &PyRingConfig, lam: f64, t: f64) -> PyResult<PyEchoValue> {
    isingprobe::loschmidt_ground(&cfg.0, point(lam, t)?).map(Into::into).map_err(err)
}

#[pyfunction]
fn loschmidt_thermal(cfg: &PyRingConfig, lam: f64, t: f64, temperature: f64) -> PyResult<PyEchoValue> {
    isingprobe::loschmidt_thermal(&cfg.0, point(lam, t)?, &thermal(Some(temperature))?)
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (cfg, lam, t, theta = FRAC_PI_4))]
fn qfi_ground(cfg: &PyRingConfig, lam: f64, t: f64, theta: f64) -> PyResult<f64> {
    isingprobe::qfi_ground(&cfg.0, point(lam, t)?, theta).map(|q| q.f).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (cfg, lam, t, temperature, theta = FRAC_PI_4))]
fn qfi_thermal(cfg: &PyRingConfig, lam: f64, t: f64, temperature: f64, theta: f64) -> PyResult<f64> {
    isingprobe::qfi_thermal(&cfg.0, point(lam, t)?, &thermal(Some(temperature))?, theta)
        .map(|q| q.f)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (l, dl, theta = FRAC_PI_4))]
fn qfi_dephasing(l: f64, dl: f64, theta: f64) -> PyResult<f64> {
    isingprobe::qfi_dephasing(l, dl, theta).map(|q| q.f).map_err(err)
}

/// Bloch vector and its derivative as two 3-tuples.
#[pyfunction]
fn dephased_bloch(theta: f64, omega: f64, l: f64, dl: f64) -> ((f64, f64, f64), (f64, f64, f64)) {
    let a = dephased_bloch_with_derivative(&ProbeState { theta, omega }, l, dl);
    ((a.ax, a.ay, a.az), (a.dax, a.day, a.daz))
}

#[pyfunction]
fn qfi_bloch(a: (f64, f64, f64), da: (f64, f64, f64)) -> PyResult<f64> {
    let v = BlochVector { ax: a.0, ay: a.1, az: a.2, dax: da.0, day: da.1, daz: da.2 };
    core_qfi_bloch(&v).map(|q| q.f).map_err(err)
}

#[pyfunction]
fn block_echo_oracle(cfg: &PyRingConfig, lam: f64, t: f64) -> PyResult<f64> {
    Ok(oracle::block_echo_oracle(&cfg.0, point(lam, t)?))
}

#[pyfunction]
fn block_thermal_oracle(cfg: &PyRingConfig, lam: f64, t: f64, temperature: f64) -> PyResult<f64> {
    oracle::block_thermal_oracle(&cfg.0, point(lam, t)?, &thermal(Some(temperature))?).map_err(err)
}

#[pyfunction]
fn spin_chain_ed_oracle(cfg: &PyRingConfig, lam: f64, t: f64) -> PyResult<f64> {
    oracle::spin_chain_ed_oracle(&cfg.0, point(lam, t)?).map_err(err)
}

/// `(name, max_abs_error, tolerance, passed)`
type CheckRow = (String, f64, Option<f64>, bool);

#[pyfunction]
#[pyo3(signature = (quick = true, seed = 7))]
fn run_oracle_checks(py: Python<'_>, quick: bool, seed: u64) -> PyResult<Vec<CheckRow>> {
    let report = py.detach(|| oracle::run_oracle_checks(quick, seed)).map_err(err)?;
    Ok(report
        .checks
        .into_iter()
        .map(|c| (c.name, c.max_abs_error, c.tolerance, c.passed))
        .collect())
}

#[pyclass(name = "Surface", frozen)]
struct PySurface(sweep::Surface);

#[pymethods]
impl PySurface {
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.grid.lambda_steps, self.0.grid.t_steps)
    }

    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        (0..self.0.grid.lambda_steps).map(|i| self.0.grid.lambda(i)).collect()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        (0..self.0.grid.t_steps).map(|j| self.0.grid.t(j)).collect()
    }

    /// Row-major `L` (echo kinds) or `F` (QFI kinds).
    fn values(&self) -> Vec<f64> {
        self.0.values()
    }

    fn echo(&self) -> Vec<f64> {
        self.0.nodes.iter().map(|n| n.l).collect()
    }

    fn qfi(&self) -> Vec<f64> {
        self.0.nodes.iter().map(|n| n.qfi).collect()
    }

    fn flags(&self) -> Vec<&'static str> {
        self.0.nodes.iter().map(|n| n.flag.as_str()).collect()
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        write_surface_csv(&mut buf, &self.0).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(String::from_utf8(buf).expect("csv is ascii"))
    }
}

fn surface_kind(kind: &str, thermal: bool) -> PyResult<SurfaceKind> {
    match (kind, thermal) {
        ("echo", false) => Ok(SurfaceKind::EchoGround),
        ("echo", true) => Ok(SurfaceKind::EchoThermal),
        ("qfi", false) => Ok(SurfaceKind::QfiGround),
        ("qfi", true) => Ok(SurfaceKind::QfiThermal),
        _ => Err(PyValueError::new_err(format!("kind must be 'echo' or 'qfi', got {kind:?}"))),
    }
}

/// Ranges are `(min, max, steps)`.
#[pyfunction]
#[pyo3(signature = (cfg, lambda_range, t_range, kind = "qfi", temperature = None, theta = FRAC_PI_4, workers = 0))]
#[allow(clippy::too_many_arguments)]
fn evaluate_surface(
    py: Python<'_>,
    cfg: &PyRingConfig,
    lambda_range: (f64, f64, usize),
    t_range: (f64, f64, usize),
    kind: &str,
    temperature: Option<f64>,
    theta: f64,
    workers: usize,
) -> PyResult<PySurface> {
    let grid = sweep::Grid::new(lambda_range, t_range).map_err(err)?;
    let kind = surface_kind(kind, temperature.is_some())?;
    let opts = EvalOptions { thermal: thermal(temperature)?, theta, workers };
    let ring = cfg.0;
    py.detach(|| sweep::evaluate_surface(&ring, &grid, kind, &opts)).map(PySurface).map_err(err)
}

#[pyclass(name = "Peak", frozen, get_all)]
struct PyPeak {
    index_l: usize,
    lambda_star: f64,
    t_star: f64,
    f_star: f64,
}

impl From<sweep::Peak> for PyPeak {
    fn from(p: sweep::Peak) -> Self {
        Self { index_l: p.index_l, lambda_star: p.lambda_star, t_star: p.t_star, f_star: p.f_star }
    }
}

#[pymethods]
impl PyPeak {
    fn __repr__(&self) -> String {
        format!("Peak(l={}, lambda={:?}, t={:?}, F={:?})", self.index_l, self.lambda_star, self.t_star, self.f_star)
    }
}

#[pyfunction]
#[pyo3(signature = (surface, count = 5, window = None, threshold = 0.1))]
fn find_peaks(
    py: Python<'_>,
    surface: &PySurface,
    count: usize,
    window: Option<(f64, f64)>,
    threshold: f64,
) -> PyResult<Vec<PyPeak>> {
    let opts = PeakOptions { window, count, threshold, ..Default::default() };
    let s = &surface.0;
    let peaks = py.detach(|| sweep::find_peaks(s, &opts)).map_err(err)?;
    Ok(peaks.into_iter().map(Into::into).collect())
}

#[pyclass(name = "ScalingResult", frozen, get_all)]
struct PyScalingResult {
    a: f64,
    b: f64,
    c: f64,
    r2: f64,
    n_values: Vec<usize>,
    f_values: Vec<f64>,
    /// `(N, delta, lambda_star, t_star)` per ring size.
    locations: Vec<(usize, f64, f64, f64)>,
}

#[pyfunction]
#[pyo3(signature = (n_list, n_delta, peak = 1, temperature = None, lambda_steps = 200, t_steps = 300))]
#[allow(clippy::too_many_arguments)]
fn peak_scaling(
    py: Python<'_>,
    n_list: Vec<usize>,
    n_delta: f64,
    peak: usize,
    temperature: Option<f64>,
    lambda_steps: usize,
    t_steps: usize,
) -> PyResult<PyScalingResult> {
    let opts = ScalingOptions {
        lambda_steps,
        t_steps,
        eval: EvalOptions { thermal: thermal(temperature)?, ..Default::default() },
        ..Default::default()
    };
    let r = py.detach(|| sweep::peak_scaling(&n_list, n_delta, peak, &opts)).map_err(err)?;
    Ok(PyScalingResult {
        a: r.fit.a,
        b: r.fit.b,
        c: r.fit.c,
        r2: r.fit.r2,
        n_values: r.fit.n_values,
        f_values: r.fit.f_values,
        locations: r.peaks.iter().map(|(n, d, p)| (*n, *d, p.lambda_star, p.t_star)).collect(),
    })
}

#[pyclass(name = "SymmetryCheck", frozen)]
struct PySymmetryCheck(sweep::SymmetryCheck);

#[pymethods]
impl PySymmetryCheck {
    #[getter]
    fn n1(&self) -> usize {
        self.0.n1
    }

    #[getter]
    fn residual(&self) -> Vec<f64> {
        self.0.residual.clone()
    }

    #[getter]
    fn flagged(&self) -> Vec<bool> {
        self.0.flagged.clone()
    }

    #[getter]
    fn histogram(&self) -> (Vec<f64>, Vec<usize>) {
        (self.0.histogram.edges.clone(), self.0.histogram.counts.clone())
    }

    fn unflagged(&self) -> usize {
        self.0.unflagged()
    }

    fn fraction_within(&self, tol: f64) -> f64 {
        self.0.fraction_within(tol)
    }
}

/// `lambda_range` is in shifted coordinates `lambda - lambda_c` of ring `n0`.
#[pyfunction]
#[pyo3(signature = (n0, alpha, n_delta, lambda_range, t_range, quantity = "qfi", temperature = None))]
#[allow(clippy::too_many_arguments)]
fn symmetry_residual(
    py: Python<'_>,
    n0: usize,
    alpha: f64,
    n_delta: f64,
    lambda_range: (f64, f64, usize),
    t_range: (f64, f64, usize),
    quantity: &str,
    temperature: Option<f64>,
) -> PyResult<PySymmetryCheck> {
    let quantity = match quantity {
        "qfi" => SymmetryQuantity::Qfi,
        "echo" => SymmetryQuantity::Echo,
        q => return Err(PyValueError::new_err(format!("quantity must be 'qfi' or 'echo', got {q:?}"))),
    };
    let grid = sweep::Grid::new(lambda_range, t_range).map_err(err)?;
    let opts = SymmetryOptions {
        quantity,
        eval: EvalOptions { thermal: thermal(temperature)?, ..Default::default() },
        ..Default::default()
    };
    py.detach(|| sweep::symmetry_residual(n0, alpha, n_delta, &grid, &opts))
        .map(PySymmetryCheck)
        .map_err(err)
}

#[pymodule]
#[pyo3(name = "isingprobe")]
fn isingprobe_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRingConfig>()?;
    m.add_class::<PyModeSpectrum>()?;
    m.add_class::<PyEchoValue>()?;
    m.add_class::<PySurface>()?;
    m.add_class::<PyPeak>()?;
    m.add_class::<PyScalingResult>()?;
    m.add_class::<PySymmetryCheck>()?;
    m.add("OPTIMAL_THETA", FRAC_PI_4)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(loschmidt_ground, m)?)?;
    m.add_function(wrap_pyfunction!(loschmidt_thermal, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_ground, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_thermal, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_dephasing, m)?)?;
    m.add_function(wrap_pyfunction!(dephased_bloch, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_bloch, m)?)?;
    m.add_function(wrap_pyfunction!(block_echo_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(block_thermal_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(spin_chain_ed_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(run_oracle_checks, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_surface, m)?)?;
    m.add_function(wrap_pyfunction!(find_peaks, m)?)?;
    m.add_function(wrap_pyfunction!(peak_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(symmetry_residual, m)?)?;
    Ok(())
}
