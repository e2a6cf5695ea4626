//! Experiment configuration in TOML.
//!
//! A configuration names the problem data either through a preset or per
//! function, fixes the grid, observation point and noise model, and carries
//! the inversion and study options. Parsing is strict: unknown keys are
//! rejected at every level.

use std::path::{Path, PathBuf};

use heat_inverse::forward::{InitialData, NoiseSpec, ProblemInstance, TimeFn};
use heat_inverse::presets;
use heat_inverse::spectral::{Quadrature, QuadratureRule, SineSeries, DEFAULT_MODES, DEFAULT_OBSERVATION_POINT, DEFAULT_QUADRATURE_POINTS};
use heat_inverse::{InversionConfig, StudyConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::series::read_two_columns;

/// Where one of `h`, `v`, `g` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source {
    /// A named closed form, e.g. `"one_plus_cos"` or `"f1"`.
    Named(String),
    /// Two-column CSV samples (`t,value` or `x,value`), linearly interpolated.
    File { file: PathBuf },
    /// Eigenbasis coefficients `g_m`; only meaningful for `g`.
    Coefficients { coefficients: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<Source>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Source>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<Source>,
    /// Mode truncation `M`.
    pub modes: usize,
    pub t_final: f64,
    pub dt: f64,
    /// Observation point in `(0, π)`.
    pub y: f64,
    pub quadrature_points: usize,
    pub quadrature_rule: QuadratureRule,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            h: None,
            v: None,
            g: None,
            modes: DEFAULT_MODES,
            t_final: 6.0,
            dt: 1e-3,
            y: DEFAULT_OBSERVATION_POINT,
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
            quadrature_rule: QuadratureRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub levels: Vec<f64>,
    pub trials: usize,
}

impl Default for StudySection {
    fn default() -> Self {
        let d = StudyConfig::default();
        Self {
            levels: d.levels,
            trials: d.trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub problem: ProblemConfig,
    pub noise: NoiseSpec,
    pub inversion: InversionConfig,
    pub study: StudySection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

/// A configuration together with the directory relative file sources are
/// resolved against.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config = Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { config, base_dir })
    }

    /// Applies command-line overrides. A preset given on the command line
    /// replaces any per-function sources from the file.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.preset {
            self.preset = Some(p.clone());
            self.problem.h = None;
            self.problem.v = None;
            self.problem.g = None;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = Some(d.clone());
        }
    }

    /// Canonical JSON of everything that affects outputs.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        serde_json::to_string(&c).expect("configuration serializes")
    }

    /// SHA-256 of [`Self::canonical_json`], lowercase hex.
    pub fn hash(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn study_config(&self) -> StudyConfig {
        StudyConfig {
            levels: self.study.levels.clone(),
            trials: self.study.trials,
            base_seed: self.seed,
        }
    }

    /// Source names of `(h, v, g)` after preset resolution.
    pub fn sources(&self) -> Result<(Source, Source, Source)> {
        let parts = match &self.preset {
            Some(name) => Some(presets::preset_parts(name)?),
            None => None,
        };
        let pick = |explicit: &Option<Source>, idx: usize, what: &str| -> Result<Source> {
            if let Some(s) = explicit {
                return Ok(s.clone());
            }
            match parts {
                Some((h, v, g)) => Ok(Source::Named([h, v, g][idx].to_string())),
                None => Err(CliError::Config(format!("no source for `{what}`: set a preset or problem.{what}"))),
            }
        };
        Ok((pick(&self.problem.h, 0, "h")?, pick(&self.problem.v, 1, "v")?, pick(&self.problem.g, 2, "g")?))
    }

    pub fn build_problem(&self, base_dir: &Path) -> Result<ProblemInstance<f64>> {
        let (h, v, g) = self.sources()?;
        let pc = &self.problem;
        let quadrature = Quadrature {
            points: pc.quadrature_points,
            rule: pc.quadrature_rule,
        };
        quadrature
            .nodes_and_weights::<f64>()
            .map_err(|e| CliError::Config(format!("problem quadrature: {e}")))?;
        let p = ProblemInstance::new(
            time_source(&h, base_dir, "h")?,
            time_source(&v, base_dir, "v")?,
            initial_source(&g, base_dir)?,
            pc.t_final,
            pc.dt,
        )?
        .with_modes(pc.modes)?
        .with_quadrature(quadrature);
        Ok(p)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn resolve(base: &Path, file: &Path) -> PathBuf {
    if file.is_absolute() {
        file.to_path_buf()
    } else {
        base.join(file)
    }
}

fn time_source(src: &Source, base: &Path, what: &str) -> Result<TimeFn<f64>> {
    match src {
        Source::Named(n) => Ok(presets::time_function(n)?),
        Source::File { file } => {
            let path = resolve(base, file);
            let (t, vals) = read_two_columns(&path)?;
            let samples = uniform_samples(&path, &t, vals)?;
            Ok(TimeFn::Samples(samples))
        }
        Source::Coefficients { .. } => Err(CliError::Config(format!(
            "problem.{what} cannot be given as eigenbasis coefficients"
        ))),
    }
}

fn initial_source(src: &Source, base: &Path) -> Result<InitialData<f64>> {
    match src {
        Source::Named(n) => Ok(presets::initial_function(n)?),
        Source::Coefficients { coefficients } => {
            if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                return Err(CliError::Config("problem.g coefficients must be finite and non-empty".into()));
            }
            Ok(InitialData::Series(SineSeries::new(coefficients.clone())))
        }
        Source::File { file } => {
            let path = resolve(base, file);
            let (x, vals) = read_two_columns(&path)?;
            let samples = uniform_samples(&path, &x, vals)?;
            let name = format!("samples({})", file.display());
            Ok(InitialData::closed(name, move |x| samples.interpolate(x)))
        }
    }
}

fn uniform_samples(path: &Path, abscissa: &[f64], values: Vec<f64>) -> Result<heat_inverse::GridFn<f64>> {
    if abscissa.len() < 2 {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "at least two samples are required".into(),
        });
    }
    let start = abscissa[0];
    let step = (abscissa[abscissa.len() - 1] - start) / (abscissa.len() - 1) as f64;
    for (i, &a) in abscissa.iter().enumerate() {
        if (a - (start + i as f64 * step)).abs() > 1e-6 * step.abs() {
            return Err(CliError::Data {
                path: path.to_path_buf(),
                line: i + 2,
                message: format!("sample abscissa {a} breaks the uniform spacing {step}"),
            });
        }
    }
    Ok(heat_inverse::GridFn::new(start, step, values)?)
}
