//! Acceptance gate. Each criterion prints one `PASS`/`FAIL` line with the
//! measured quantity and its tolerance; the process fails if any criterion
//! does.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use heat_inverse::forward::{make_observations, solve_fd, solve_spectral, NoiseSpec};
use heat_inverse::inverse::{peel_lsq, peel_sequential, system_determinant, system_matrix, PeelOptions, Schedule};
use heat_inverse::presets::{preset, preset_truth};
use heat_inverse::{invert, run_noise_study, GridFn, InversionConfig, StudyConfig, TimeGrid};
use heat_inverse_cli::{ExperimentConfig, LoadedConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: u32, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = budget.is_none_or(|b| elapsed <= b);
    let pass = out.pass && in_time;
    let timing = match budget {
        Some(b) => format!("{:.2}s of {:.0}s", elapsed.as_secs_f64(), b.as_secs_f64()),
        None => format!("{:.2}s", elapsed.as_secs_f64()),
    };
    println!(
        "[{}] {id}. {name}: {} ({timing})",
        if pass { "PASS" } else { "FAIL" },
        out.detail
    );
    pass
}

/// Relative L² error over samples with `t ≥ t_from`.
fn rel_l2(est: &GridFn<f64>, truth: fn(f64) -> f64, t_from: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &v) in est.values().iter().enumerate() {
        let t = est.time(i);
        if t < t_from - 1e-12 {
            continue;
        }
        num += (v - truth(t)).powi(2);
        den += truth(t).powi(2);
    }
    (num / den).sqrt()
}

fn sup_diff(a: &GridFn<f64>, b: &GridFn<f64>) -> f64 {
    a.values().iter().zip(b.values()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn generic_errors(dt: f64) -> (f64, f64, Vec<f64>) {
    let p = preset::<f64>("generic", 16, 6.0, dt).unwrap();
    let obs = make_observations(&p, 1.0, &NoiseSpec::None, 0, 1e-3).unwrap();
    let rec = invert(&obs, &InversionConfig { depth: 2, ..Default::default() }).unwrap();
    let (h, v) = preset_truth("generic").unwrap();
    (rel_l2(&rec.v_hat, v, 0.01), rel_l2(&rec.h_hat, h, 0.01), rec.g_coeffs.sine_amplitudes())
}

fn determinant() -> Outcome {
    let s = (2.0 / PI).sqrt();
    // Rows (f_m'(0), (1, f_m)) with f_m'(0) = m s and (1, f_m) = 2s/m, m odd.
    let oracle = s * (2.0 * s / 3.0) - (2.0 * s) * (3.0 * s);
    let [[a, b], [c, d]] = system_matrix::<f64>();
    let from_matrix = a * d - b * c;
    let det: f64 = system_determinant();
    let target = -32.0 / (3.0 * PI);
    let err = (det - target).abs().max((from_matrix - target).abs()).max((oracle - target).abs());
    Outcome {
        pass: err <= 1e-12,
        detail: format!("det = {det:.15}, -32/(3π) = {target:.15}, |diff| = {err:.1e} (tol 1e-12)"),
    }
}

fn clean_round_trip() -> Outcome {
    let (ev, eh, amps) = generic_errors(1e-3);
    let (d1, d2) = ((amps[0] - 1.0).abs(), (amps[1] - 0.5).abs());
    Outcome {
        pass: ev <= 1e-3 && eh <= 1e-3 && d1 <= 1e-3 && d2 <= 1e-2,
        detail: format!(
            "L2(v) = {ev:.2e}, L2(h) = {eh:.2e} (tol 1e-3); |ĝ1-1| = {d1:.2e} (tol 1e-3), |ĝ2-0.5| = {d2:.2e} (tol 1e-2)"
        ),
    }
}

fn convergence_order() -> Outcome {
    let errs: Vec<(f64, f64)> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| {
            let (v, h, _) = generic_errors(dt);
            (v, h)
        })
        .collect();
    let ratios: Vec<f64> = errs
        .windows(2)
        .flat_map(|w| [w[0].0 / w[1].0, w[0].1 / w[1].1])
        .collect();
    Outcome {
        pass: ratios.iter().all(|r| (3.0..=5.0).contains(r)),
        detail: format!(
            "ratios v: {:.3}, {:.3}; h: {:.3}, {:.3} (range [3, 5])",
            ratios[0], ratios[2], ratios[1], ratios[3]
        ),
    }
}

fn forward_agreement() -> Outcome {
    let p = preset::<f64>("generic", 32, 2.0, 1e-3).unwrap();
    let spec = solve_spectral(&p).unwrap();
    let fd = solve_fd(&p, 512).unwrap();
    let mut err: f64 = 0.0;
    for it in 0..fd.grid.len {
        if fd.grid.time(it) < 0.1 - 1e-12 {
            continue;
        }
        for (ix, &x) in fd.x.iter().enumerate() {
            err = err.max((fd.at(it, ix) - spec.field(x, it)).abs());
        }
    }
    Outcome {
        pass: err <= 1e-3,
        detail: format!("sup |u_fd - u_spectral| on [0, π] × [0.1, 2] = {err:.2e} (tol 1e-3)"),
    }
}

fn peeling_equivalence() -> Outcome {
    let b = [1.0, 0.5, 0.25, 0.125];
    let grid = TimeGrid::from_horizon(10.0, 1e-3).unwrap();
    let q = grid
        .sample(|t| b.iter().enumerate().map(|(k, bk)| bk * (-(((k + 1) * (k + 1)) as f64) * t).exp()).sum())
        .unwrap();
    let opts = PeelOptions {
        refine_sweeps: 100,
        ..PeelOptions::default()
    };
    let seq = peel_sequential(&q, 4, &Schedule::default(), &opts).unwrap();
    let plain = peel_sequential(&q, 4, &Schedule::default(), &PeelOptions::default()).unwrap();
    let lsq = peel_lsq(&q, 4, 0.0).unwrap();
    let max_err = |x: &[f64], y: &[f64]| x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let (es, el, ea) = (max_err(&seq.b_hat, &b), max_err(&lsq.b_hat, &b), max_err(&seq.b_hat, &lsq.b_hat));
    Outcome {
        pass: es <= 1e-6 && el <= 1e-6 && ea <= 1e-6,
        detail: format!(
            "sequential (back-corrected, {} sweeps) {es:.2e}, lsq {el:.2e}, |seq - lsq| {ea:.2e} (tol 1e-6); plain recursion {:.2e}",
            seq.sweeps,
            max_err(&plain.b_hat, &b)
        ),
    }
}

fn ill_posedness() -> Outcome {
    let p = preset::<f64>("fourmode", 16, 6.0, 1e-3).unwrap();
    let study = StudyConfig {
        levels: vec![1e-6, 1e-4],
        trials: 20,
        base_seed: 1,
    };
    let st = run_noise_study(&p, 1.0, &study, &InversionConfig { depth: 4, ..Default::default() }).unwrap();
    let failed: usize = st.summary.iter().map(|s| s.failed).sum();
    let monotone = st
        .summary
        .iter()
        .all(|s| s.b_error_mean.windows(2).all(|w| w[1] >= w[0]));
    let ratio = st.summary[1].h_error_mean / st.summary[0].h_error_mean;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ");
    Outcome {
        pass: failed == 0 && monotone && ratio >= 10.0,
        detail: format!(
            "mean |b̂_m - b_m| @1e-6: [{}], @1e-4: [{}] (non-decreasing: {monotone}); h error ratio {ratio:.1} (≥ 10); failed trials {failed}",
            fmt(&st.summary[0].b_error_mean),
            fmt(&st.summary[1].b_error_mean)
        ),
    }
}

fn run_cli(args: &[&str], cwd: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_heat-inverse"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("c.toml"),
        "preset = \"fourmode\"\nseed = 11\n[problem]\nt_final = 3.0\ndt = 2e-3\n[noise]\nkind = \"relative\"\nlevel = 1e-6\n[inversion]\ndepth = 3\n[study]\nlevels = [0.0, 1e-5]\ntrials = 3\n",
    )
    .unwrap();
    let mut ok = true;
    for run in ["a", "b"] {
        ok &= run_cli(&["simulate", "--config", "c.toml", "--out", run], dir);
        ok &= run_cli(&["invert", &format!("{run}/observations.csv"), "--config", "c.toml", "--out", run], dir);
        ok &= run_cli(&["study", "--config", "c.toml", "--out", run], dir);
    }
    let mut names: Vec<String> = std::fs::read_dir(dir.join("a"))
        .map(|d| d.filter_map(|e| e.ok()).map(|e| e.file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    names.sort();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(dir.join("a").join(n)).ok() != std::fs::read(dir.join("b").join(n)).ok())
        .collect();
    Outcome {
        pass: ok && names.len() >= 11 && differing.is_empty(),
        detail: format!(
            "commands succeeded: {ok}; {} files compared, {} differ {:?}",
            names.len(),
            differing.len(),
            differing
        ),
    }
}

fn even_mode_invisibility() -> Outcome {
    let reconstruct = |coeffs: &str| {
        let cfg = ExperimentConfig::from_toml(&format!("preset = \"decay1\"\n[problem]\ng = {{ coefficients = {coeffs} }}\n")).unwrap();
        let loaded = LoadedConfig {
            config: cfg,
            base_dir: ".".into(),
        };
        let p = loaded.config.build_problem(&loaded.base_dir).unwrap();
        let obs = make_observations(&p, loaded.config.problem.y, &NoiseSpec::None, 0, 1e-3).unwrap();
        invert(&obs, &loaded.config.inversion).unwrap()
    };
    let base = reconstruct("[1.0]");
    let even = reconstruct("[1.0, 0.7]");
    let (dv, dh) = (sup_diff(&base.v_hat, &even.v_hat), sup_diff(&base.h_hat, &even.h_hat));
    Outcome {
        pass: dv < 1e-10 && dh < 1e-10,
        detail: format!("sup |Δv̂| = {dv:.2e}, sup |Δĥ| = {dh:.2e} (tol 1e-10)"),
    }
}

fn main() -> ExitCode {
    let results = [
        check(1, "determinant reproduction", None, determinant),
        check(2, "clean round trip", Some(Duration::from_secs(10)), clean_round_trip),
        check(3, "convergence order", Some(Duration::from_secs(60)), convergence_order),
        check(4, "forward oracle agreement", Some(Duration::from_secs(30)), forward_agreement),
        check(5, "peeling oracle equivalence", None, peeling_equivalence),
        check(6, "ill-posedness exhibit", Some(Duration::from_secs(120)), ill_posedness),
        check(7, "determinism", None, determinism),
        check(8, "even-mode invisibility", None, even_mode_invisibility),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
