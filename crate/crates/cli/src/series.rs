//! Text formats for time series: observation CSV files and plain
//! two-column sample files.
//!
//! Observation files carry `# key = value` metadata lines followed by a
//! `t,u1,u3,uy` table. Floats are written in shortest round-trip form, so
//! parsing an emitted file reproduces the values exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use heat_inverse::forward::{NoiseSpec, Observations};
use heat_inverse::GridFn;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const OBSERVATION_COLUMNS: [&str; 4] = ["t", "u1", "u3", "uy"];

/// Provenance carried in the observation file header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMeta {
    pub config_hash: String,
    pub seed: u64,
    pub noise: NoiseSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationFile {
    pub meta: ObservationMeta,
    pub observations: Observations<f64>,
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn emit_observations(file: &ObservationFile) -> String {
    let obs = &file.observations;
    let m = &file.meta;
    let mut out = String::new();
    let noise = serde_json::to_string(&m.noise).expect("noise spec serializes");
    let _ = writeln!(out, "# heat-inverse observations");
    let _ = writeln!(out, "# config_hash = {}", m.config_hash);
    let _ = writeln!(out, "# seed = {}", m.seed);
    let _ = writeln!(out, "# noise = {noise}");
    let _ = writeln!(out, "# y = {}", fmt_f64(obs.y));
    let _ = writeln!(out, "# modes = {}", obs.modes);
    let _ = writeln!(out, "# t0 = {}", fmt_f64(obs.u1.t0()));
    let _ = writeln!(out, "# dt = {}", fmt_f64(obs.u1.dt()));
    let _ = writeln!(out, "{}", OBSERVATION_COLUMNS.join(","));
    for i in 0..obs.u1.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(obs.u1.time(i)),
            fmt_f64(obs.u1.values()[i]),
            fmt_f64(obs.u3.values()[i]),
            fmt_f64(obs.uy.values()[i])
        );
    }
    out
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_float(path: &Path, line: usize, field: &str, text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("`{}` is not a number ({field})", text.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value in {field}")));
    }
    Ok(v)
}

#[derive(Default)]
struct Header {
    config_hash: Option<String>,
    seed: Option<u64>,
    noise: Option<NoiseSpec>,
    y: Option<f64>,
    modes: Option<usize>,
    t0: Option<f64>,
    dt: Option<f64>,
}

pub fn parse_observations(path: &Path, text: &str) -> Result<ObservationFile> {
    let mut header = Header::default();
    let mut columns_seen = false;
    let mut rows: Vec<(usize, [f64; 4])> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(meta) = trimmed.strip_prefix('#') {
            let Some((key, value)) = meta.split_once('=') else {
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "config_hash" => header.config_hash = Some(value.to_string()),
                "seed" => {
                    header.seed = Some(value.parse().map_err(|_| parse_err(path, line, "seed is not an integer"))?)
                }
                "noise" => {
                    header.noise = Some(
                        serde_json::from_str(value).map_err(|e| parse_err(path, line, format!("noise spec: {e}")))?,
                    )
                }
                "y" => header.y = Some(parse_float(path, line, "y", value)?),
                "modes" => {
                    header.modes =
                        Some(value.parse().map_err(|_| parse_err(path, line, "modes is not an integer"))?)
                }
                "t0" => header.t0 = Some(parse_float(path, line, "t0", value)?),
                "dt" => header.dt = Some(parse_float(path, line, "dt", value)?),
                _ => {}
            }
            continue;
        }
        if !columns_seen {
            let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if cols != OBSERVATION_COLUMNS {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected column header `{}`", OBSERVATION_COLUMNS.join(",")),
                ));
            }
            columns_seen = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(parse_err(path, line, format!("expected 4 fields, found {}", fields.len())));
        }
        let mut row = [0.0; 4];
        for (k, f) in fields.iter().enumerate() {
            row[k] = parse_float(path, line, OBSERVATION_COLUMNS[k], f)?;
        }
        rows.push((line, row));
    }
    if !columns_seen {
        return Err(parse_err(path, text.lines().count().max(1), "missing column header"));
    }
    let need = |v: Option<f64>, what: &str| v.ok_or_else(|| parse_err(path, 1, format!("missing `# {what} = ...` header")));
    let y = need(header.y, "y")?;
    let dt = need(header.dt, "dt")?;
    let modes = header
        .modes
        .ok_or_else(|| parse_err(path, 1, "missing `# modes = ...` header"))?;
    if rows.is_empty() {
        return Err(parse_err(path, text.lines().count().max(1), "no data rows"));
    }
    let t0 = header.t0.unwrap_or(rows[0].1[0]);
    for (i, (line, row)) in rows.iter().enumerate() {
        let expected = t0 + i as f64 * dt;
        if (row[0] - expected).abs() > 1e-6 * dt.abs() {
            return Err(CliError::Data {
                path: path.to_path_buf(),
                line: *line,
                message: format!("t = {} does not match the grid t0 + {i}·dt = {expected}", row[0]),
            });
        }
    }
    let column = |k: usize| -> Result<GridFn<f64>> { Ok(GridFn::new(t0, dt, rows.iter().map(|(_, r)| r[k]).collect())?) };
    let observations = Observations::new(column(1)?, column(2)?, column(3)?, y, modes)?;
    Ok(ObservationFile {
        meta: ObservationMeta {
            config_hash: header.config_hash.unwrap_or_default(),
            seed: header.seed.unwrap_or(0),
            noise: header.noise.unwrap_or_default(),
        },
        observations,
    })
}

pub fn read_observations(path: &Path) -> Result<ObservationFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_observations(path, &text)
}

/// Reads `abscissa,value` rows, skipping `#` lines and an optional
/// non-numeric header row.
pub fn read_two_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_two_columns(path, &text)
}

pub fn parse_two_columns(path: &Path, text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut xs, mut vs) = (Vec::new(), Vec::new());
    let mut first_data = true;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 2 {
            return Err(parse_err(path, line, format!("expected 2 fields, found {}", fields.len())));
        }
        if first_data && fields[0].trim().parse::<f64>().is_err() {
            first_data = false;
            continue;
        }
        first_data = false;
        xs.push(parse_float(path, line, "abscissa", fields[0])?);
        vs.push(parse_float(path, line, "value", fields[1])?);
    }
    Ok((xs, vs))
}

/// Path of the provenance sidecar written next to an observation file.
pub fn sidecar_path(observations: &Path) -> PathBuf {
    observations.with_extension("json")
}
