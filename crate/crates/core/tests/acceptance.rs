//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::{FRAC_PI_4, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use isingprobe::oracle::{block_echo_oracle, block_thermal_oracle, finite_difference};
use isingprobe::qfi::{dephased_bloch_with_derivative, qfi_bloch};
use isingprobe::report::write_surface_csv;
use isingprobe::sweep::{EvalOptions, ScalingOptions, SymmetryOptions};
use isingprobe::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn ring(n: usize) -> RingConfig {
    RingConfig::with_n_delta(n, 10.0).unwrap()
}

fn pt(lambda: f64, t: f64) -> GridPoint {
    GridPoint::new(lambda, t).unwrap()
}

/// `(N, lambda, t)` with 100 random points per ring size.
fn oracle_points() -> Vec<(usize, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut pts = Vec::new();
    for n in [4, 8, 16, 100] {
        for _ in 0..100 {
            pts.push((n, rng.random_range(0.5..1.5), rng.random_range(0.0..20.0)));
        }
    }
    pts
}

fn block_ground() -> Outcome {
    let worst = oracle_points()
        .into_iter()
        .map(|(n, l, t)| {
            let cfg = ring(n);
            (loschmidt_ground(&cfg, pt(l, t)).unwrap().l - block_echo_oracle(&cfg, pt(l, t))).abs()
        })
        .fold(0.0, f64::max);
    outcome(worst < 1e-10, format!("max |dL| = {worst:.3e} (tol 1e-10, 400 points)"))
}

fn block_thermal() -> Outcome {
    let mut worst = 0.0f64;
    for beta in [0.1, 1.0, 10.0] {
        let th = ThermalConfig::from_beta(beta).unwrap();
        for (n, l, t) in oracle_points() {
            let cfg = ring(n);
            let closed = loschmidt_thermal(&cfg, pt(l, t), &th).unwrap().l;
            let block = block_thermal_oracle(&cfg, pt(l, t), &th).unwrap();
            worst = worst.max((closed - block).abs());
        }
    }
    outcome(worst < 1e-9, format!("max |dL| = {worst:.3e} (tol 1e-9, 1200 points)"))
}

fn zero_temperature_limit() -> Outcome {
    let cfg = RingConfig::new(100, 0.1).unwrap();
    let th = ThermalConfig::from_beta(1e4).unwrap();
    let mut worst = 0.0f64;
    for i in 0..20 {
        for j in 0..20 {
            let p = pt(0.7 + 0.4 * i as f64 / 19.0, 30.0 * j as f64 / 19.0);
            let g = loschmidt_ground(&cfg, p).unwrap().l;
            let th = loschmidt_thermal(&cfg, p, &th).unwrap().l;
            worst = worst.max((g - th).abs());
        }
    }
    outcome(worst < 1e-6, format!("max |L_T - L_g| = {worst:.3e} at beta 1e4 (tol 1e-6)"))
}

fn derivatives() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut used) = (0.0f64, 0usize);
    let mut tries = 0;
    while used < 200 && tries < 10_000 {
        tries += 1;
        let n = [8, 16, 50, 100][rng.random_range(0..4)];
        let cfg = ring(n);
        let (l, t) = (rng.random_range(0.5..1.5), rng.random_range(0.0..20.0));
        // even draws are ground, odd ones thermal at a random beta
        let th = if used % 2 == 0 {
            ThermalConfig::ground()
        } else {
            ThermalConfig::from_beta([0.1, 1.0, 10.0][rng.random_range(0..3)]).unwrap()
        };
        let Ok(e) = loschmidt_thermal(&cfg, pt(l, t), &th) else { continue };
        if e.l <= 1e-8 {
            continue;
        }
        let fd = finite_difference(
            |x| loschmidt_thermal(&cfg, GridPoint { lambda: x, t }, &th).map_or(f64::NAN, |e| e.l.ln()),
            l,
            1e-5,
        );
        worst = worst.max((e.dlog_l - fd).abs() / e.dlog_l.abs().max(1.0));
        used += 1;
    }
    outcome(
        used == 200 && worst < 1e-6,
        format!("max relative error {worst:.3e} over {used} points (tol 1e-6)"),
    )
}

fn qfi_formulas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // The Bloch route needs 1 - |a|^2 = sin^2(2 theta) (1 - L); like L, the
    // angle factor is kept at least 1% away from a pure state.
    let (mut worst, mut worst_any) = (0.0f64, 0.0f64);
    let mut used = 0;
    while used < 1000 {
        let l = rng.random_range(0.01..0.99);
        let dl = rng.random_range(-10.0..10.0);
        let probe = ProbeState { theta: rng.random_range(0.0..PI), omega: rng.random_range(0.0..2.0 * PI) };
        let direct = qfi_dephasing(l, dl, probe.theta).unwrap().f;
        let Ok(bloch) = qfi_bloch(&dephased_bloch_with_derivative(&probe, l, dl)) else { continue };
        let gap = (direct - bloch.f).abs() / direct.abs().max(f64::MIN_POSITIVE);
        worst_any = worst_any.max(gap);
        if (2.0 * probe.theta).sin().powi(2) >= 0.01 {
            worst = worst.max(gap);
            used += 1;
        }
    }
    let best = qfi_dephasing(0.4, 1.3, FRAC_PI_4).unwrap().f;
    let optimal = (0..=200).all(|i| {
        let theta = PI * i as f64 / 200.0;
        qfi_dephasing(0.4, 1.3, theta).unwrap().f <= best
    });
    outcome(
        worst < 1e-12 && optimal,
        format!(
            "max relative gap {worst:.3e} (tol 1e-12, {used} inputs, sin^2 2theta >= 0.01; \
             {worst_any:.1e} including near-pure draws); pi/4 maximal on theta grid: {optimal}"
        ),
    )
}

const SCALING_N: [usize; 8] = [50, 100, 150, 200, 250, 300, 350, 400];

fn heisenberg_scaling() -> Outcome {
    let r = peak_scaling(&SCALING_N, 10.0, 1, &ScalingOptions::default()).unwrap();
    let f = |n: usize| r.peaks.iter().find(|p| p.0 == n).unwrap().2.f_star;
    let r1 = f(200) / f(100);
    let r2 = f(400) / f(200);
    let ok = r.fit.r2 > 0.999 && r.fit.a > 0.0 && [r1, r2].iter().all(|x| (3.4..=4.6).contains(x));
    outcome(
        ok,
        format!(
            "r2 = {:.8}, a = {:.5}, F(200)/F(100) = {r1:.3}, F(400)/F(200) = {r2:.3}",
            r.fit.r2, r.fit.a
        ),
    )
}

fn criticality() -> Outcome {
    let cfg = RingConfig::new(100, 0.1).unwrap();
    let grid = Grid::new((0.7, 1.1, 200), (0.0, 30.0, 300)).unwrap();
    let s = evaluate_surface(&cfg, &grid, SurfaceKind::QfiGround, &EvalOptions::default()).unwrap();
    let (mut best, mut at) = (f64::NEG_INFINITY, 0.0);
    let (mut left, mut right) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..grid.lambda_steps {
        for j in 0..grid.t_steps {
            let v = s.value(i, j);
            if !v.is_finite() {
                continue;
            }
            let l = grid.lambda(i);
            if v > best {
                (best, at) = (v, l);
            }
            if l > 0.9 {
                right = right.max(v);
            } else if l < 0.9 {
                left = left.max(v);
            }
        }
    }
    let located = (at - 0.9).abs() <= 0.05;
    outcome(
        located && right > left,
        format!(
            "global max F = {best:.2} at lambda = {at:.4} (|lambda - 0.9| <= 0.05: {located}); \
             max right {right:.2} vs left {left:.2}"
        ),
    )
}

fn scaling_symmetry() -> Outcome {
    let g = Grid::new((-0.5, 0.5, 150), (0.0, 30.0, 200)).unwrap();
    let c = symmetry_residual(100, 5.0, 10.0, &g, &SymmetryOptions::default()).unwrap();
    let frac = c.fraction_within(0.05);
    outcome(
        frac >= 0.85,
        format!("{:.2}% of {} unflagged nodes within 0.05 (need 85%)", 100.0 * frac, c.unflagged()),
    )
}

fn thermal_degradation() -> Outcome {
    let ns = [100, 200, 300, 400];
    let temps = [0.0, 0.005, 0.01, 0.015];
    let mut table = Vec::new();
    for temp in temps {
        let opts = ScalingOptions {
            eval: EvalOptions { thermal: ThermalConfig::new(temp).unwrap(), ..Default::default() },
            ..Default::default()
        };
        let r = peak_scaling(&ns, 10.0, 1, &opts).unwrap();
        table.push(r.peaks.iter().map(|p| p.2.f_star).collect::<Vec<_>>());
    }
    let monotone = (0..ns.len()).all(|k| table.windows(2).all(|w| w[1][k] <= w[0][k]));
    let hot = &table[3];
    let ratio = hot[3] / hot[0];
    outcome(
        monotone && ratio < 16.0 * 0.8,
        format!("non-increasing in T: {monotone}; F_T(400)/F_T(100) at T = 0.015 is {ratio:.3} (< 12.8)"),
    )
}

fn degenerate_cases() -> Outcome {
    let mut ok = true;
    let two = RingConfig::new(2, 0.37).unwrap();
    let flat = RingConfig::new(100, 0.0).unwrap();
    let hot = ThermalConfig::new(0.3).unwrap();
    for i in 0..15 {
        for j in 0..15 {
            let p = pt(0.4 + 0.1 * i as f64, 2.0 * j as f64);
            for cfg in [&two, &flat] {
                let e = loschmidt_ground(cfg, p).unwrap();
                ok &= e.l == 1.0 && qfi_ground(cfg, p, FRAC_PI_4).unwrap().f == 0.0;
            }
            let e = loschmidt_thermal(&flat, p, &hot).unwrap();
            ok &= e.l == 1.0 && qfi_thermal(&flat, p, &hot, FRAC_PI_4).unwrap().f == 0.0;
            let z = pt(p.lambda, 0.0);
            let big = RingConfig::new(100, 0.1).unwrap();
            ok &= qfi_ground(&big, z, FRAC_PI_4).unwrap().f == 0.0;
            ok &= qfi_thermal(&big, z, &hot, FRAC_PI_4).unwrap().f == 0.0;
        }
    }
    outcome(ok, "N = 2, delta = 0 and t = 0 give L = 1 and F = 0 exactly".into())
}

fn determinism() -> Outcome {
    let cfg = RingConfig::new(100, 0.1).unwrap();
    let grid = Grid::new((0.7, 1.1, 200), (0.0, 30.0, 300)).unwrap();
    let mut same = true;
    for (kind, th) in [
        (SurfaceKind::QfiGround, ThermalConfig::ground()),
        (SurfaceKind::QfiThermal, ThermalConfig::new(0.01).unwrap()),
    ] {
        let csv = |workers| {
            let opts = EvalOptions { thermal: th, workers, ..Default::default() };
            let s = evaluate_surface(&cfg, &grid, kind, &opts).unwrap();
            let mut buf = Vec::new();
            write_surface_csv(&mut buf, &s).unwrap();
            buf
        };
        same &= csv(1) == csv(4);
    }
    outcome(same, format!("surface CSVs for 1 and 4 workers identical: {same}"))
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria: [Criterion; 11] = [
        (1, "block oracle, ground", secs(10), block_ground),
        (2, "block oracle, thermal", secs(30), block_thermal),
        (3, "zero-temperature limit", secs(5), zero_temperature_limit),
        (4, "analytic derivatives", secs(30), derivatives),
        (5, "QFI formulas", secs(1), qfi_formulas),
        (6, "Heisenberg scaling", secs(300), heisenberg_scaling),
        (7, "criticality localization", secs(60), criticality),
        (8, "scaling symmetry", secs(300), scaling_symmetry),
        (9, "thermal degradation", secs(600), thermal_degradation),
        (10, "degenerate exactness", secs(1), degenerate_cases),
        (11, "determinism", secs(60), determinism),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = took <= budget;
        let pass = out.passed && in_time;
        failed += usize::from(!pass);
        println!(
            "{} [{id:>2}] {name}: {} ({:.2}s, budget {}s)",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
