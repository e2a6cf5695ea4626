use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use heat_inverse::forward::{make_observations, Compatibility};
use heat_inverse::inverse::expected_determinant;
use heat_inverse::regularize::{score, TrialMetrics};
use heat_inverse::{invert, run_noise_study, NoiseStudy, Reconstruction};
use serde::{Deserialize, Serialize};

use crate::config::{sha256_hex, ExperimentConfig, LoadedConfig, Source};
use crate::error::{CliError, Result};
use crate::series::{emit_observations, fmt_f64, read_observations, sidecar_path, ObservationFile, ObservationMeta};

pub const OBSERVATIONS_CSV: &str = "observations.csv";

/// Sidecar describing how an observation file was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    /// Directory file sources in `config` are relative to.
    pub base_dir: PathBuf,
    pub h: Source,
    pub v: Source,
    pub g: Source,
    /// Eigenbasis coefficients of the true `g` up to the mode truncation.
    pub g_coefficients: Vec<f64>,
    pub compatibility: Compatibility,
    pub observation_min_abs_sin: f64,
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn to_json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

#[derive(Debug)]
pub struct SimulateOutput {
    pub files: Vec<PathBuf>,
    pub observations: ObservationFile,
}

pub fn simulate(loaded: &LoadedConfig) -> Result<SimulateOutput> {
    let cfg = &loaded.config;
    let p = cfg.build_problem(&loaded.base_dir)?;
    let y = cfg.problem.y;
    let observations = make_observations(&p, y, &cfg.noise, cfg.seed, cfg.inversion.safety_threshold)?;
    let point = observations.check_point(cfg.inversion.safety_threshold)?;
    let hash = cfg.hash();
    let file = ObservationFile {
        meta: ObservationMeta {
            config_hash: hash.clone(),
            seed: cfg.seed,
            noise: cfg.noise,
        },
        observations,
    };
    let (h, v, g) = cfg.sources()?;
    let provenance = Provenance {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: hash,
        seed: cfg.seed,
        config: ExperimentConfig {
            output_dir: None,
            ..cfg.clone()
        },
        base_dir: loaded.base_dir.clone(),
        h,
        v,
        g,
        g_coefficients: p.initial_coefficients()?.coeffs,
        compatibility: p.compatibility(),
        observation_min_abs_sin: point.min_abs_sin,
    };
    let dir = cfg.output_dir();
    let csv = write(&dir, OBSERVATIONS_CSV, &emit_observations(&file))?;
    let json = write(&dir, &sidecar_path(Path::new(OBSERVATIONS_CSV)).display().to_string(), &to_json(&provenance))?;
    Ok(SimulateOutput {
        files: vec![csv, json],
        observations: file,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionRecord {
    pub config_hash: String,
    pub seed: u64,
    pub observations_sha256: String,
    pub observations_config_hash: String,
    pub inversion: heat_inverse::InversionConfig,
    pub truth: Option<TrialMetrics>,
    pub reconstruction: Reconstruction<f64>,
}

#[derive(Debug)]
pub struct InvertOutput {
    pub files: Vec<PathBuf>,
    pub record: ReconstructionRecord,
}

/// Ground truth from the sidecar, when it exists and belongs to the data.
fn load_truth(obs_path: &Path, meta: &ObservationMeta) -> Result<Option<(Provenance, heat_inverse::ProblemInstance64)>> {
    let side = sidecar_path(obs_path);
    if !side.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&side).map_err(|e| CliError::io(&side, e))?;
    let prov: Provenance = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: side.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if prov.config_hash != meta.config_hash {
        return Ok(None);
    }
    let p = prov.config.build_problem(&prov.base_dir)?;
    Ok(Some((prov, p)))
}

pub fn invert_file(obs_path: &Path, loaded: &LoadedConfig) -> Result<InvertOutput> {
    let cfg = &loaded.config;
    let bytes = std::fs::read(obs_path).map_err(|e| CliError::io(obs_path, e))?;
    let file = read_observations(obs_path)?;
    let rec = invert(&file.observations, &cfg.inversion)?;
    let truth = match load_truth(obs_path, &file.meta)? {
        Some((_, p)) => {
            let g_true = p.initial_coefficients()?;
            Some(score(&rec, &p, &g_true, file.observations.y))
        }
        None => None,
    };
    let record = ReconstructionRecord {
        config_hash: cfg.hash(),
        seed: file.meta.seed,
        observations_sha256: sha256_hex(&bytes),
        observations_config_hash: file.meta.config_hash.clone(),
        inversion: cfg.inversion.clone(),
        truth,
        reconstruction: rec,
    };
    let dir = cfg.output_dir();
    let files = vec![
        write(&dir, "reconstruction.json", &to_json(&record))?,
        write(&dir, "reconstruction.csv", &reconstruction_csv(&record))?,
        write(&dir, "coefficients.csv", &coefficients_csv(&record))?,
        write(&dir, "report.txt", &report(&record))?,
    ];
    Ok(InvertOutput { files, record })
}

fn provenance_lines(out: &mut String, hash: &str, seed: u64) {
    let _ = writeln!(out, "# config_hash = {hash}");
    let _ = writeln!(out, "# seed = {seed}");
}

fn reconstruction_csv(r: &ReconstructionRecord) -> String {
    let rec = &r.reconstruction;
    let mut out = String::new();
    provenance_lines(&mut out, &r.config_hash, r.seed);
    let _ = writeln!(out, "# observations_sha256 = {}", r.observations_sha256);
    let _ = writeln!(out, "t,v_hat,h_hat");
    for i in 0..rec.v_hat.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(rec.v_hat.time(i)),
            fmt_f64(rec.v_hat.values()[i]),
            fmt_f64(rec.h_hat.values()[i])
        );
    }
    out
}

fn coefficients_csv(r: &ReconstructionRecord) -> String {
    let rec = &r.reconstruction;
    let d = &rec.diagnostics;
    let mut out = String::new();
    provenance_lines(&mut out, &r.config_hash, r.seed);
    let _ = writeln!(out, "m,g_hat,b_hat,divisor,predicted_error,rejected");
    for (k, b) in rec.b_hat.iter().enumerate() {
        let m = k + 1;
        let _ = writeln!(
            out,
            "{m},{},{},{},{},{}",
            fmt_f64(rec.g_coeffs.coeff(m)),
            fmt_f64(*b),
            fmt_f64(d.divisors[k]),
            fmt_f64(d.mode_error_estimate[k]),
            d.rejected_modes.contains(&m)
        );
    }
    out
}

pub fn report(r: &ReconstructionRecord) -> String {
    let rec = &r.reconstruction;
    let d = &rec.diagnostics;
    let mut o = String::new();
    let _ = writeln!(o, "heat-inverse reconstruction report");
    let _ = writeln!(o, "config_hash          {}", r.config_hash);
    let _ = writeln!(o, "seed                 {}", r.seed);
    let _ = writeln!(o, "observations_sha256  {}", r.observations_sha256);
    let _ = writeln!(o);
    let _ = writeln!(o, "[system matrix, modes 1 and 3]");
    let _ = writeln!(o, "determinant          {:.12}", d.determinant);
    let _ = writeln!(o, "expected -32/(3π)    {:.12}", expected_determinant::<f64>());
    let _ = writeln!(o, "|difference|         {:.3e}", (d.determinant - d.determinant_expected).abs());
    let _ = writeln!(o, "g1                   {:.12e}", d.g1);
    let _ = writeln!(o, "g3                   {:.12e}", d.g3);
    let _ = writeln!(o);
    let _ = writeln!(o, "[boundary and source]");
    let _ = writeln!(o, "burn_in samples      {}", d.burn_in);
    let _ = writeln!(
        o,
        "window               [{}, {}] ({} samples)",
        fmt_f64(rec.v_hat.t0()),
        fmt_f64(rec.v_hat.time(rec.v_hat.len().saturating_sub(1))),
        rec.v_hat.len()
    );
    let _ = writeln!(o, "modes for w          {}", d.modes);
    let _ = writeln!(o);
    let p = &d.peel;
    let _ = writeln!(o, "[peeling]");
    let _ = writeln!(o, "method               {:?}", p.method);
    let _ = writeln!(o, "depth                {}", p.depth);
    let _ = writeln!(o, "design condition     {:.6e}", p.design_condition);
    if let Some(c) = p.collocation_condition {
        let _ = writeln!(o, "collocation cond.    {c:.6e}");
    }
    if let Some(s) = p.sigma_estimate {
        let _ = writeln!(o, "noise sigma (q)      {s:.6e}");
    }
    if let Some(rms) = p.residual_rms {
        let _ = writeln!(o, "fit residual rms     {rms:.6e}");
    }
    if !p.times.is_empty() {
        let times: Vec<String> = p.times.iter().map(|t| format!("{t:.6}")).collect();
        let _ = writeln!(o, "times                {}", times.join(" "));
        let _ = writeln!(o, "back-corr. sweeps    {}", p.sweeps);
        let _ = writeln!(o, "fallback schedule    {}", p.used_fallback);
    }
    let amps: Vec<String> = p.amplification.iter().map(|a| format!("{a:.3e}")).collect();
    let _ = writeln!(o, "amplification        {}", amps.join(" "));
    for w in &p.warnings {
        let _ = writeln!(o, "warning              {w}");
    }
    let _ = writeln!(o);
    let _ = writeln!(o, "[initial data]");
    let _ = writeln!(o, "{:>3} {:>22} {:>22} {:>12} {:>12}", "m", "g_hat", "b_hat", "|f_m(y)|", "pred. error");
    for (k, b) in rec.b_hat.iter().enumerate() {
        let m = k + 1;
        let flag = if d.rejected_modes.contains(&m) { "  rejected" } else { "" };
        let _ = writeln!(
            o,
            "{m:>3} {:>22.15e} {:>22.15e} {:>12.4e} {:>12.4e}{flag}",
            rec.g_coeffs.coeff(m),
            b,
            d.divisors[k],
            d.mode_error_estimate[k]
        );
    }
    let _ = writeln!(o, "min |sin(m y)|       {:.6e} at m = {}", d.observation_min_abs_sin, d.observation_argmin);
    let _ = writeln!(o);
    let c = &d.consistency;
    let _ = writeln!(o, "[re-simulation residuals]   max            rms");
    let _ = writeln!(o, "u1                   {:.6e}   {:.6e}", c.u1_max, c.u1_rms);
    let _ = writeln!(o, "u3                   {:.6e}   {:.6e}", c.u3_max, c.u3_rms);
    let _ = writeln!(o, "u(y)                 {:.6e}   {:.6e}", c.uy_max, c.uy_rms);
    if let Some(t) = &r.truth {
        let _ = writeln!(o);
        let _ = writeln!(o, "[errors against the simulated truth]");
        let _ = writeln!(o, "v L2 error           {:.6e}", t.v_error);
        let _ = writeln!(o, "h L2 error           {:.6e}", t.h_error);
        for (k, (g, b)) in t.g_error.iter().zip(&t.b_error).enumerate() {
            let _ = writeln!(o, "mode {:<3}  |dg| {g:.6e}  |db| {b:.6e}", k + 1);
        }
    }
    o
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub config_hash: String,
    pub seed: u64,
    pub study: NoiseStudy,
}

#[derive(Debug)]
pub struct StudyOutput {
    pub files: Vec<PathBuf>,
    pub record: StudyRecord,
}

pub fn study(loaded: &LoadedConfig) -> Result<StudyOutput> {
    let cfg = &loaded.config;
    let p = cfg.build_problem(&loaded.base_dir)?;
    let result = run_noise_study(&p, cfg.problem.y, &cfg.study_config(), &cfg.inversion)?;
    let record = StudyRecord {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        study: result,
    };
    let dir = cfg.output_dir();
    let files = vec![
        write(&dir, "study.json", &to_json(&record))?,
        write(&dir, "study_trials.csv", &study_trials_csv(&record))?,
        write(&dir, "study_modes.csv", &study_modes_csv(&record))?,
        write(&dir, "error_vs_mode.dat", &error_vs_mode_dat(&record))?,
        write(&dir, "error_vs_level.dat", &error_vs_level_dat(&record))?,
    ];
    Ok(StudyOutput { files, record })
}

fn study_trials_csv(r: &StudyRecord) -> String {
    let depth = r.study.depth;
    let mut o = String::new();
    provenance_lines(&mut o, &r.config_hash, r.seed);
    let mut cols = vec!["level".to_string(), "trial".into(), "seed".into(), "v_error".into(), "h_error".into()];
    cols.extend((1..=depth).map(|m| format!("b_error_{m}")));
    cols.extend((1..=depth).map(|m| format!("g_error_{m}")));
    cols.push("failure".into());
    let _ = writeln!(o, "{}", cols.join(","));
    for t in &r.study.trials_detail {
        let mut row = vec![fmt_f64(t.level), t.trial.to_string(), t.seed.to_string()];
        match &t.metrics {
            Some(m) => {
                row.push(fmt_f64(m.v_error));
                row.push(fmt_f64(m.h_error));
                row.extend(m.b_error.iter().map(|v| fmt_f64(*v)));
                row.extend(m.g_error.iter().map(|v| fmt_f64(*v)));
                row.push(String::new());
            }
            None => {
                row.extend(std::iter::repeat_n(String::new(), 2 + 2 * depth));
                let msg = t.failure.clone().unwrap_or_default().replace([',', '\n'], ";");
                row.push(msg);
            }
        }
        let _ = writeln!(o, "{}", row.join(","));
    }
    o
}

fn study_modes_csv(r: &StudyRecord) -> String {
    let mut o = String::new();
    provenance_lines(&mut o, &r.config_hash, r.seed);
    let _ = writeln!(o, "level,m,b_error_mean,b_error_max,g_error_mean,g_error_max");
    for s in &r.study.summary {
        for k in 0..r.study.depth {
            let _ = writeln!(
                o,
                "{},{},{},{},{},{}",
                fmt_f64(s.level),
                k + 1,
                fmt_f64(s.b_error_mean[k]),
                fmt_f64(s.b_error_max[k]),
                fmt_f64(s.g_error_mean[k]),
                fmt_f64(s.g_error_max[k])
            );
        }
    }
    o
}

/// Gnuplot table: one row per mode, one mean-`|b̂_m - b_m|` column per level.
fn error_vs_mode_dat(r: &StudyRecord) -> String {
    let mut o = String::new();
    provenance_lines(&mut o, &r.config_hash, r.seed);
    let levels: Vec<String> = r.study.summary.iter().map(|s| format!("b_err@{}", fmt_f64(s.level))).collect();
    let _ = writeln!(o, "# m {}", levels.join(" "));
    for k in 0..r.study.depth {
        let vals: Vec<String> = r.study.summary.iter().map(|s| format!("{:.10e}", s.b_error_mean[k])).collect();
        let _ = writeln!(o, "{} {}", k + 1, vals.join(" "));
    }
    o
}

/// Gnuplot table: one row per noise level.
fn error_vs_level_dat(r: &StudyRecord) -> String {
    let mut o = String::new();
    provenance_lines(&mut o, &r.config_hash, r.seed);
    let modes: Vec<String> = (1..=r.study.depth).map(|m| format!("b_err_{m}")).collect();
    let _ = writeln!(o, "# level v_err h_err {}", modes.join(" "));
    for s in &r.study.summary {
        let b: Vec<String> = s.b_error_mean.iter().map(|v| format!("{v:.10e}")).collect();
        let _ = writeln!(o, "{:.10e} {:.10e} {:.10e} {}", s.level, s.v_error_mean, s.h_error_mean, b.join(" "));
    }
    o
}
