use std::path::Path;

use chrono::{SecondsFormat, Utc};
use serde::Serialize;

use isingprobe::oracle::run_oracle_checks;
use isingprobe::report::{
    fit_json, write_histogram_csv, write_peaks_csv, write_residual_csv, write_surface_csv, PeakRow, RunDir,
    RunManifest,
};
use isingprobe::sweep::{EvalOptions, PeakOptions, ScalingOptions, SymmetryOptions};
use isingprobe::{
    critical_lambda, evaluate_surface, find_peaks, peak_scaling, symmetry_residual, RingConfig, SurfaceKind,
    ThermalConfig,
};

use crate::args::{grid, OracleArgs, PeaksArgs, Range, ScalingArgs, SurfaceArgs, SymmetryArgs};
use crate::{CliError, EXIT_NUMERICAL};

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Output directory plus the manifest fields known at start.
struct Run {
    dir: RunDir,
    command: &'static str,
    config: serde_json::Value,
    started: String,
}

impl Run {
    fn start(command: &'static str, out: &Path, config: &impl Serialize) -> Result<Self, CliError> {
        Ok(Self {
            dir: RunDir::create(out)?,
            command,
            config: serde_json::to_value(config).map_err(|e| CliError::config(e.to_string()))?,
            started: now(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.dir.write(name, bytes)?;
        Ok(())
    }

    fn finish(self) -> Result<(), CliError> {
        let path = self.dir.path().to_path_buf();
        let manifest = RunManifest {
            tool: "isingprobe".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.into(),
            config: self.config,
            started: self.started,
            finished: now(),
            outputs: Vec::new(),
        };
        let n = self.dir.outputs().len();
        self.dir.finish(manifest)?;
        println!("wrote {n} file(s) and manifest.json to {}", path.display());
        Ok(())
    }
}

fn eval_options(thermal: ThermalConfig, theta: f64, workers: usize) -> EvalOptions {
    EvalOptions { thermal, theta, workers }
}

fn kind(qfi: bool, thermal: bool) -> SurfaceKind {
    match (qfi, thermal) {
        (false, false) => SurfaceKind::EchoGround,
        (false, true) => SurfaceKind::EchoThermal,
        (true, false) => SurfaceKind::QfiGround,
        (true, true) => SurfaceKind::QfiThermal,
    }
}

pub fn surface(command: &'static str, a: &SurfaceArgs, qfi: bool) -> Result<(), CliError> {
    let cfg = a.ring.resolve()?;
    let grid = a.grid()?;
    let th = a.common.thermal()?;
    let opts = eval_options(th, a.common.theta, a.common.workers);
    let mut run = Run::start(command, &a.common.out, a)?;
    eprintln!("evaluating {} nodes", grid.len());
    let s = evaluate_surface(&cfg, &grid, kind(qfi, a.common.temperature.is_some()), &opts)?;
    let mut buf = Vec::new();
    write_surface_csv(&mut buf, &s)?;
    run.write("surface.csv", &buf)?;
    let flagged = s.flagged().count();
    if flagged > 0 {
        eprintln!("{flagged} flagged node(s)");
    }
    run.finish()
}

pub fn peaks(a: &PeaksArgs) -> Result<(), CliError> {
    let sa = &a.surface;
    let cfg = sa.ring.resolve()?;
    let grid = sa.grid()?;
    let th = sa.common.thermal()?;
    let opts = eval_options(th, sa.common.theta, sa.common.workers);
    let mut run = Run::start("peaks", &sa.common.out, a)?;
    let s = evaluate_surface(&cfg, &grid, kind(true, sa.common.temperature.is_some()), &opts)?;
    let popts = PeakOptions {
        window: a.window.map(|w| (w.0, w.1)),
        count: a.count,
        threshold: a.threshold,
        ..Default::default()
    };
    let found = find_peaks(&s, &popts)?;
    let rows: Vec<PeakRow> = found
        .into_iter()
        .map(|peak| PeakRow { peak, n: cfg.n(), delta: cfg.delta(), temperature: th.temperature() })
        .collect();
    let mut buf = Vec::new();
    write_peaks_csv(&mut buf, &rows)?;
    run.write("peaks.csv", &buf)?;
    run.finish()
}

pub fn scaling(a: &ScalingArgs) -> Result<(), CliError> {
    let n_delta = a.n_delta.ok_or_else(|| CliError::config("scaling needs --n-delta"))?;
    let th = a.common.thermal()?;
    let opts = ScalingOptions {
        lambda_halfwidth: a.halfwidth,
        lambda_steps: a.lambda_steps,
        t_per_spin: a.t_per_spin,
        t_steps: a.t_steps,
        eval: eval_options(th, a.common.theta, a.common.workers),
        peaks: PeakOptions::default(),
    };
    let mut run = Run::start("scaling", &a.common.out, a)?;
    let r = peak_scaling(&a.n_list, n_delta, a.peak, &opts)?;
    run.write("fit.json", fit_json(&r.fit).as_bytes())?;
    let rows: Vec<PeakRow> = r
        .peaks
        .iter()
        .map(|&(n, delta, peak)| PeakRow { peak, n, delta, temperature: th.temperature() })
        .collect();
    let mut buf = Vec::new();
    write_peaks_csv(&mut buf, &rows)?;
    run.write("peaks.csv", &buf)?;
    println!("a = {:?}, b = {:?}, c = {:?}, r2 = {:?}", r.fit.a, r.fit.b, r.fit.c, r.fit.r2);
    run.finish()
}

pub fn symmetry(a: &SymmetryArgs) -> Result<(), CliError> {
    let cfg0 = RingConfig::with_n_delta(a.n0, a.n_delta)?;
    let half = 5.0 * cfg0.delta();
    let lambda = a.lambda.unwrap_or(Range { min: -half, max: half, steps: 150 });
    let t = a.t.unwrap_or(Range { min: 0.0, max: 0.3 * a.n0 as f64, steps: 200 });
    let shifted = grid(lambda, t)?;
    let opts = SymmetryOptions {
        quantity: a.quantity.into(),
        eval: eval_options(a.common.thermal()?, a.common.theta, a.common.workers),
        histogram_range: (a.range.0, a.range.1),
        histogram_bins: a.bins,
        ..Default::default()
    };
    if a.bins == 0 || a.range.0.is_nan() || a.range.1.is_nan() || a.range.1 <= a.range.0 {
        return Err(CliError::config("histogram needs bins > 0 and lo < hi"));
    }
    let mut run = Run::start("symmetry", &a.common.out, a)?;
    let c = symmetry_residual(a.n0, a.alpha, a.n_delta, &shifted, &opts)?;
    let mut buf = Vec::new();
    write_residual_csv(&mut buf, &c)?;
    run.write("residual.csv", &buf)?;
    let mut buf = Vec::new();
    write_histogram_csv(&mut buf, &c)?;
    run.write("histogram.csv", &buf)?;
    println!(
        "lambda_c = {:?}; {:.4} of {} unflagged nodes have |residual| < 0.05",
        critical_lambda(&cfg0),
        c.fraction_within(0.05),
        c.unflagged()
    );
    run.finish()
}

pub fn oracle_check(a: &OracleArgs) -> Result<(), CliError> {
    let mut run = Run::start("oracle-check", &a.out, a)?;
    let report = run_oracle_checks(a.quick, a.seed)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::numerical(e.to_string()))? + "\n";
    run.write("oracle.json", text.as_bytes())?;
    for c in &report.checks {
        let tol = c.tolerance.map_or("report only".to_string(), |t| format!("tol {t:e}"));
        println!(
            "{} {}: max error {:e} over {} samples ({tol})",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            c.max_abs_error,
            c.samples
        );
    }
    let passed = report.all_passed();
    run.finish()?;
    if passed {
        Ok(())
    } else {
        Err(CliError { code: EXIT_NUMERICAL, message: "oracle check failed".into() })
    }
}
