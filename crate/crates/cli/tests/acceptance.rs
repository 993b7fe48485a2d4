//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so each line is always printed.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use adaptctl::adapt_ct::minmax_solve;
use adaptctl::analysis::{kyl_solve, lyapunov_solve, pe_level, spr_check};
use adaptctl::estimate::{Estimator, RegressionLoop, RegressorSource, RlsEstimatorState, SaEstimatorState, SaNormalizer};
use adaptctl::linalg::{is_symmetric, max_eigenvalue, min_eigenvalue};
use adaptctl::model::TransferFunction;
use adaptctl::sim::{rk4_integrate, simulate_dt, DisturbanceSpec, Trajectory};
use adaptctl_cli::bundled;
use adaptctl_cli::config::validate_value;
use adaptctl_cli::families::MinMaxFamily;
use adaptctl_cli::run::{run_scenario, OutputFormat, RunReport};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn bundled_value(name: &str) -> Value {
    serde_json::from_str(bundled::text(name).expect("bundled scenario")).unwrap()
}

fn run_value(v: &Value, out: &Path) -> Result<RunReport, String> {
    let cfg = validate_value(v).map_err(|e| format!("{}: invalid config {e:?}", v["name"]))?;
    run_scenario(&cfg, out, OutputFormat::Csv).map_err(|e| format!("{}: {e}", v["name"]))
}

/// Runs a config and requires every declared criterion and certificate to pass.
fn run_passing(v: &Value, out: &Path) -> Result<RunReport, String> {
    let r = run_value(v, out)?;
    if let Some(a) = &r.abort {
        return Err(format!("{}: aborted: {a}", r.name));
    }
    for c in &r.criteria {
        ensure(c.passed, format!("{}: {} = {:?} fails {:?} {}", r.name, c.name, c.value, c.op, c.threshold))?;
    }
    for c in &r.certificates {
        ensure(c.passed, format!("{}: certificate {} failed: {}", r.name, c.name, c.detail))?;
    }
    Ok(r)
}

fn metric(r: &RunReport, name: &str) -> f64 {
    r.metrics.get(name).copied().unwrap_or(f64::NAN)
}

fn rand_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0))
}

fn c1_lyapunov_and_kyl(_: &Path) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a9);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = 1 + i % 8;
        let m = rand_matrix(&mut rng, n) * 2.0;
        let shift = m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let a = m - DMatrix::identity(n, n) * (shift + rng.random_range(0.1..2.0));
        let g = rand_matrix(&mut rng, n);
        let q = &g * g.transpose() + DMatrix::identity(n, n);
        let cert = lyapunov_solve(&a, &q).map_err(|e| format!("system {i}: {e}"))?;
        let residual = (a.transpose() * &cert.p + &cert.p * &a + &q).norm();
        worst = worst.max(residual);
        ensure(residual <= 1e-10, format!("system {i} (n = {n}): residual {residual:e}"))?;
        ensure(is_symmetric(&cert.p, 1e-12 * cert.p.norm()), format!("system {i}: P not symmetric"))?;
        ensure(min_eigenvalue(&cert.p) > 0.0, format!("system {i}: P not positive definite"))?;
    }

    // Classified offline from the even polynomial Re N(jω)D(−jω): positive
    // for all ω with a positive ω^(2n−2) coefficient, over a Hurwitz D.
    // (s+2)/(s²+2s+2) is positive real but ω²·Re W(jω) → 0, so not strictly.
    let family: [(&[f64], &[f64], bool); 10] = [
        (&[1.0], &[1.0, 1.0], true),
        (&[0.5, 1.0], &[2.0, 3.0, 1.0], true),
        (&[3.0, 2.0, 1.0], &[2.0, 4.0, 3.0, 1.0], true),
        (&[1.0, 1.0], &[4.0, 3.0, 1.0], true),
        (&[4.0, 3.0, 1.0], &[2.0, 5.0, 4.0, 1.0], true),
        (&[2.0, 1.0], &[2.0, 2.0, 1.0], false),
        (&[1.0, 1.0], &[4.0, 0.2, 1.0], false),
        (&[1.0], &[1.0, 2.0, 1.0], false),
        (&[-1.0, 1.0], &[2.0, 3.0, 1.0], false),
        (&[1.0], &[-1.0, 1.0], false),
    ];
    for (num, den, expected) in family {
        let w = TransferFunction::from_coeffs(num, den).map_err(|e| e.to_string())?;
        let spr = spr_check(&w).map_err(|e| e.to_string())?.is_spr;
        let ss = w.realize().map_err(|e| e.to_string())?;
        let b = ss.b.column(0).into_owned();
        let c = ss.c.row(0).transpose();
        let kyl = kyl_solve(&ss.a, &b, &c);
        if let Ok(p) = &kyl {
            let lhs = ss.a.transpose() * p + p * &ss.a;
            ensure(min_eigenvalue(p) > 0.0, format!("{num:?}/{den:?}: KYL P not positive definite"))?;
            ensure(max_eigenvalue(&((&lhs + lhs.transpose()) * 0.5)) < 0.0, format!("{num:?}/{den:?}: AᵀP + PA not negative"))?;
            ensure((p * &b - &c).norm() <= 1e-8 * c.norm(), format!("{num:?}/{den:?}: Pb ≠ c"))?;
        }
        ensure(
            spr == expected && kyl.is_ok() == expected,
            format!("{num:?}/{den:?}: expected {expected}, spr_check {spr}, kyl {}", kyl.is_ok()),
        )?;
    }
    Ok(format!("max residual {worst:.2e}; 10/10 SPR and KYL verdicts agree"))
}

fn c2_mrac_convergence(out: &Path) -> Check {
    let r = run_passing(&bundled_value("convergence"), out)?;
    let s = run_passing(&bundled_value("convergence_step"), out)?;
    Ok(format!(
        "tail {:.2e}, parameter error {:.2e}; step reference tail {:.2e}",
        metric(&r, "tracking_tail"),
        metric(&r, "parameter_error"),
        metric(&s, "tracking_tail")
    ))
}

fn c3_lyapunov_monotone(out: &Path) -> Check {
    let mut checked = 0;
    for name in [
        "convergence",
        "convergence_step",
        "saturation",
        "minmax",
        "observer",
        "spr_output",
        "passification",
        "speed_gradient",
    ] {
        let mut v = bundled_value(name);
        v["name"] = json!(format!("{name}_every_step"));
        v["sim"]["decimate"] = json!(1);
        v["criteria"] = json!([
            { "metric": "lyapunov_violations", "name": "violations", "channel": "V", "rel_tol": 1e-6, "op": "le", "threshold": 0.0 }
        ]);
        run_passing(&v, out)?;
        checked += 1;
    }
    Ok(format!("no step raises V by more than 1e-6·V(0) in {checked} scenarios"))
}

fn regression(estimator: Estimator, dim: usize, seed: u64, steps: usize) -> Result<Trajectory, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = DVector::from_fn(dim, |_, _| rng.random_range(-3.0..=3.0));
    let mut lp = RegressionLoop::new(truth, estimator, RegressorSource::Uniform { dim, seed }, &DisturbanceSpec::None)
        .map_err(|e| e.to_string())?;
    let run = simulate_dt(&mut lp, steps, 1e12).map_err(|e| e.to_string())?;
    ensure(run.abort.is_none(), format!("aborted: {:?}", run.abort))?;
    Ok(run.trajectory)
}

fn thetas(traj: &Trajectory, dim: usize) -> Result<Vec<DVector<f64>>, String> {
    let names: Vec<String> = (0..dim).map(|i| format!("theta{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    traj.rows(&refs).map_err(|e| e.to_string())
}

fn c4_sa(_: &Path) -> Check {
    let (dim, steps) = (3, 10_500);
    let mut worst_rise = f64::NEG_INFINITY;
    let mut worst_tail = 0.0f64;
    for seed in [1, 2, 3] {
        let sa = SaEstimatorState::new(DVector::zeros(dim), 1.0)
            .map_err(|e| e.to_string())?
            .with_normalizer(SaNormalizer::Projection);
        let traj = regression(Estimator::Sa(sa), dim, seed, steps)?;
        let err = traj.channel("theta_err").map_err(|e| e.to_string())?;
        let rise = err[..=1000].windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        worst_rise = worst_rise.max(rise);
        ensure(rise <= 1e-12, format!("seed {seed}: error grows by {rise:e} within 1000 steps"))?;
        let th = thetas(&traj, dim)?;
        let tail = (10_000..th.len()).map(|k| (&th[k] - &th[k - 5]).norm()).fold(0.0, f64::max);
        worst_tail = worst_tail.max(tail);
        ensure(tail < 1e-6, format!("seed {seed}: ‖θ_k − θ_(k−5)‖ = {tail:e} after 1e4 steps"))?;
    }
    Ok(format!("largest error increase {worst_rise:.1e}, tail increment {worst_tail:.1e}"))
}

fn c5_rls(_: &Path) -> Check {
    let mut worst = 0.0f64;
    let mut worst_rise = f64::NEG_INFINITY;
    for (dim, seed) in [(2, 5), (3, 11), (5, 17), (8, 23)] {
        let rls = RlsEstimatorState::new(DVector::zeros(dim), DMatrix::identity(dim, dim) * 1e10).map_err(|e| e.to_string())?;
        let traj = regression(Estimator::Rls(rls), dim, seed, 10 * dim + 1)?;
        let err = *traj.channel("theta_err").map_err(|e| e.to_string())?.last().unwrap();
        worst = worst.max(err);
        ensure(err < 1e-8, format!("dim {dim}: error {err:e} after {} steps", 10 * dim))?;
        let lmax = traj.channel("gamma_lmax").map_err(|e| e.to_string())?;
        let rise = lmax.windows(2).map(|w| (w[1] - w[0]) / w[0]).fold(f64::NEG_INFINITY, f64::max);
        worst_rise = worst_rise.max(rise);
        ensure(rise <= 1e-12, format!("dim {dim}: λmax(Γ) grew by a relative {rise:e}"))?;
    }
    Ok(format!("largest error after 10·dim steps {worst:.2e}; largest relative λmax(Γ) step {worst_rise:.1e}"))
}

fn c6_str(out: &Path) -> Check {
    let v = bundled_value("str");
    ensure(v["plant"]["a"] == json!([0.8]) && v["plant"]["b"] == json!([1.0]) && v["plant"]["d"] == json!(1), "str plant changed")?;
    let r = run_passing(&v, out)?;
    Ok(format!(
        "tail {:.1e}, square-sum tail {:.1e}, max |y| {:.2}, max |u| {:.2}",
        metric(&r, "tracking_tail"),
        metric(&r, "square_sum_tail"),
        metric(&r, "max_output"),
        metric(&r, "max_input")
    ))
}

fn c7_drift(out: &Path) -> Check {
    let d = bundled_value("drift");
    let s = bundled_value("drift_sigma");
    ensure(d["disturbance"]["vmax"] == json!(0.1), "drift noise bound is not 0.1")?;
    ensure(d["input"] == json!({"kind": "constant", "value": 1.0}), "drift reference is not constant 1")?;
    ensure(s["controller"]["robust"]["sigma"] == json!(0.05), "σ is not 0.05")?;
    let ratio = s["sim"]["horizon"].as_f64().unwrap() / d["sim"]["horizon"].as_f64().unwrap();
    ensure(ratio == 10.0, format!("σ horizon is {ratio}× the drift horizon"))?;
    let rd = run_passing(&d, out)?;
    let rs = run_passing(&s, out)?;
    Ok(format!("drift {:.2} without σ, {:.2} with σ over 10× horizon", metric(&rd, "drift"), metric(&rs, "drift")))
}

fn c8_pe_robust(out: &Path) -> Check {
    let r = run_passing(&bundled_value("pe_robust"), out)?;
    let cert = r
        .certificates
        .iter()
        .find(|c| c.name == "pe_robustness")
        .ok_or("pe_robust declares no robustness certificate")?;
    Ok(format!(
        "ε0 {:.3} > required {:.3}; drift {:.2}, max |x| {:.2}",
        cert.values["epsilon0"],
        cert.values["required"],
        metric(&r, "drift"),
        metric(&r, "max_state")
    ))
}

fn c9_bursting(out: &Path) -> Check {
    let v = bundled_value("bursting");
    ensure(v["plant"] == json!({"a": 0.5, "b": 1.0}), "bursting plant changed")?;
    let r = run_passing(&v, out)?;
    let cert = r.certificates.iter().find(|c| c.name == "closed_loop_gain").ok_or("no closed-loop gain certificate")?;
    let tb = cert.values["theta_burst"];
    ensure((tb - 1.5).abs() < 1e-12, format!("θ_burst = {tb}"))?;
    Ok(format!("burst ratio {:.2e}, tail {:.1e}, θ_burst {tb}", metric(&r, "burst_ratio"), metric(&r, "tracking_tail")))
}

fn c10_saturation(out: &Path) -> Check {
    run_passing(&bundled_value("saturation"), out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5a7);
    let mut worst_x = 0.0f64;
    for i in 0..20 {
        let mut v = bundled_value("saturation");
        v["name"] = json!(format!("saturation_ic{i}"));
        v["initial"] = json!({
            "x0": [rng.random_range(-5.0..=5.0)],
            "xm0": [rng.random_range(-5.0..=5.0)],
            "up0": rng.random_range(-2.0..=2.0),
        });
        v["controller"]["theta0"] = json!([rng.random_range(-3.0..=3.0)]);
        v["controller"]["k0"] = json!(rng.random_range(-1.0..=3.0));
        v["sim"]["horizon"] = json!(50.0);
        v["criteria"] = json!([
            { "metric": "max_abs", "name": "max_u_p", "channels": ["u_p"], "op": "le", "threshold": 2.0 },
            { "metric": "max_abs", "name": "max_u_p_rate", "channels": ["u_p_dot"], "op": "le", "threshold": 5.0 },
            { "metric": "max_abs", "name": "max_state", "channels": ["x0", "theta0", "k"], "op": "lt", "threshold": 100.0 }
        ]);
        let r = run_passing(&v, out)?;
        worst_x = worst_x.max(metric(&r, "max_state"));
    }
    Ok(format!("|u_p| ≤ 2 and |u̇_p| ≤ 5 in all runs; 20 random starts bounded by {worst_x:.2}"))
}

/// 1000 uniform points on the box plus `θ̂`, where `J` vanishes for every `ω`.
fn grid(lo: f64, hi: f64, th_hat: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..1000).map(|i| lo + (hi - lo) * i as f64 / 999.0).collect();
    g.push(th_hat);
    g
}

fn grid_max(fam: MinMaxFamily, grid: &[f64], x: f64, th_hat: f64, sign: f64, w: f64) -> f64 {
    grid.iter()
        .map(|&th| sign * (fam.f(x, th) - fam.f(x, th_hat) + (th_hat - th) * w))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `min_ω max_θ sgn·J(θ, ω)` with the inner maximum over [`grid`] and the
/// outer minimum by ternary search (the grid maximum is convex in `ω`).
fn grid_minmax(fam: MinMaxFamily, lo: f64, hi: f64, x: f64, th_hat: f64, sign: f64) -> (f64, f64) {
    let pts = grid(lo, hi, th_hat);
    let g = |w: f64| grid_max(fam, &pts, x, th_hat, sign, w);
    let (mut a, mut b) = (-1e3, 1e3);
    for _ in 0..400 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if g(m1) < g(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let w = 0.5 * (a + b);
    (g(w), w)
}

fn c11_minmax(out: &Path) -> Check {
    let (lo, hi) = (0.0, 1.0);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for fam in [MinMaxFamily::Exp, MinMaxFamily::Log] {
        let nl = fam.nonlinearity(lo, hi).map_err(|e| e.to_string())?;
        for &x in &[-2.0, -0.7, 0.3, 1.1, 2.5] {
            for &th_hat in &[0.2, 0.35, 0.8] {
                for e_c in [1.0, -1.0] {
                    let sol = minmax_solve(&nl, &DVector::from_element(1, x), &DVector::from_element(1, th_hat), e_c, 1.0)
                        .map_err(|e| e.to_string())?;
                    let (a_grid, w_grid) = grid_minmax(fam, lo, hi, x, th_hat, e_c);
                    let da = (sol.value - a_grid).abs();
                    worst = worst.max(da);
                    ensure(da <= 1e-6, format!("{fam:?} x {x} θ̂ {th_hat} e_c {e_c}: a* {} vs grid {a_grid}", sol.value))?;
                    let convex_branch = (fam == MinMaxFamily::Exp) == (e_c > 0.0);
                    if convex_branch {
                        let dw = (sol.omega[0] - w_grid).abs();
                        worst = worst.max(dw);
                        ensure(dw <= 1e-6, format!("{fam:?} x {x} θ̂ {th_hat}: ω* {} vs grid {w_grid}", sol.omega[0]))?;
                    } else {
                        // The grid cannot resolve ω* in the concave branch; check
                        // that ω* attains the grid min-max value instead.
                        let at_sol = grid_max(fam, &grid(lo, hi, th_hat), x, th_hat, e_c, sol.omega[0]);
                        ensure((at_sol - a_grid).abs() <= 1e-6, format!("{fam:?} x {x} θ̂ {th_hat}: ω* not optimal"))?;
                    }
                    cases += 1;
                }
            }
        }
    }
    let lin = MinMaxFamily::Linear.nonlinearity(-1.0, 2.0).map_err(|e| e.to_string())?;
    for &x in &[-1.5, 0.0, 0.4, 3.0] {
        for e_c in [1.0, -1.0] {
            let sol = minmax_solve(&lin, &DVector::from_element(1, x), &DVector::from_element(1, 0.5), e_c, 1.0)
                .map_err(|e| e.to_string())?;
            ensure(sol.value == 0.0 && sol.omega[0] == x, format!("linear x {x}: a* {}, ω* {}", sol.value, sol.omega[0]))?;
        }
    }
    let mut v = bundled_value("minmax");
    v["criteria"] = json!([
        { "metric": "lyapunov_violations", "name": "violations", "channel": "V", "op": "le", "threshold": 0.0 }
    ]);
    run_passing(&v, out)?;
    Ok(format!("{cases} cases within {worst:.1e} of the grid oracle; linear exact; V nonincreasing"))
}

fn c12_augmented(out: &Path) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa46);
    let mut worst = 0.0f64;
    for i in 0..5 {
        let mut v = bundled_value("augmented");
        v["name"] = json!(format!("augmented_frozen{i}"));
        v["controller"]["frozen"] = json!(true);
        v["controller"]["theta0"] = json!([rng.random_range(-3.0..=3.0), rng.random_range(-3.0..=3.0)]);
        v["sim"]["horizon"] = json!(50.0);
        v["criteria"] = json!([
            { "metric": "max_abs", "name": "max_e2", "channels": ["e2"], "op": "lt", "threshold": 1e-9 }
        ]);
        let r = run_passing(&v, out)?;
        worst = worst.max(metric(&r, "max_e2"));
    }
    Ok(format!("max |e2| {worst:.1e} over 5 constant-θ runs"))
}

fn c13_rk4(_: &Path) -> Check {
    let err = |h: f64| -> Result<f64, String> {
        let steps = (1.0 / h).round() as usize;
        let x = rk4_integrate(|_, x: &DVector<f64>| Ok(-x), &DVector::from_element(1, 1.0), 0.0, h, steps)
            .map_err(|e| e.to_string())?;
        Ok((x[0] - (-1.0f64).exp()).abs())
    };
    let ratio = err(0.1)? / err(0.05)?;
    ensure((14.0..=18.0).contains(&ratio), format!("error ratio {ratio}"))?;
    Ok(format!("error ratio {ratio:.3}"))
}

fn c14_pe_level(_: &Path) -> Check {
    let h = 1e-3;
    let n = (4.0 * PI / h).round() as usize;
    let rec = |f: &dyn Fn(f64) -> Vec<f64>| -> Vec<DVector<f64>> { (0..=n).map(|k| DVector::from_vec(f(k as f64 * h))).collect() };
    let sc = pe_level(&rec(&|t| vec![t.sin(), t.cos()]), h, 2.0 * PI).map_err(|e| e.to_string())?.alpha;
    ensure((sc - PI).abs() <= 1e-6, format!("[sin, cos]: α = {sc}"))?;
    let ones = pe_level(&rec(&|_| vec![1.0, 1.0]), h, 2.0 * PI).map_err(|e| e.to_string())?.alpha;
    ensure(ones == 0.0, format!("[1, 1]: α = {ones}"))?;
    Ok(format!("α[sin, cos] − π = {:.1e}, α[1, 1] = {ones}", sc - PI))
}

fn main() -> ExitCode {
    let checks: [(&str, fn(&Path) -> Check); 14] = [
        ("lyapunov residuals and SPR/KYL agreement", c1_lyapunov_and_kyl),
        ("state MRAC tracking and parameter convergence", c2_mrac_convergence),
        ("Lyapunov function nonincreasing", c3_lyapunov_monotone),
        ("SA estimator monotone and settling", c4_sa),
        ("RLS finite-step identification", c5_rls),
        ("self-tuning regulator tracking", c6_str),
        ("parameter drift and σ-modification", c7_drift),
        ("persistent excitation robustness", c8_pe_robust),
        ("bursting after a pulse", c9_bursting),
        ("saturated MRAC limits and boundedness", c10_saturation),
        ("min-max solution against a grid oracle", c11_minmax),
        ("augmented error with constant parameters", c12_augmented),
        ("RK4 fourth-order convergence", c13_rk4),
        ("PE level of sinusoidal and constant regressors", c14_pe_level),
    ];
    let dir = tempfile::tempdir().expect("temporary output directory");
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| check(dir.path())))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_message(&p))));
        match outcome {
            Ok(detail) => println!("criterion {:2} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:2} FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown panic".into())
}
