//! Constructive recovery of `(h, v, g)` from the observation triple.
//!
//! Stages, in data-dependency order:
//! 1. `g_1 = u_1(0)`, `g_3 = u_3(0)` ([`extract_g13`]).
//! 2. `v`, `h` pointwise from the differentiated mode-1/mode-3 equations
//!    ([`recover_vh`]).
//! 3. The forced response `w(y, t)` of the recovered inputs ([`compute_w`]),
//!    and `q = u(y, ·) - w = Σ_m g_m f_m(y) e^{-m²t}`.
//! 4. Peeling of `b_m = g_m f_m(y)` from `q` ([`peel_sequential`] or
//!    [`peel_lsq`]).
//! 5. `g_m = b_m / f_m(y)` ([`assemble_g`]).

mod derivative;
mod peel;
mod vh;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{Observations, SpectralSolution};
use crate::grid::GridFn;
use crate::scalar::Real;
use crate::spectral::{
    basis_unchecked, check_observation_point, SineSeries, DEFAULT_SAFETY_THRESHOLD,
};

pub use derivative::{differentiate, DerivativeScheme};
pub use peel::{
    design_condition, exponential_design, peel_lsq, peel_sequential, LsqOutcome, PeelOptions,
    PeelOutcome, Schedule,
};
pub use vh::{
    determinant_tolerance, expected_determinant, extract_g13, recover_vh, system_determinant,
    system_matrix, VhOptions, VhRecovery,
};

/// Forced response at `y` of boundary input `v` and source `h` from zero
/// initial data, summed over `M` modes.
pub fn compute_w<T: Real>(v: &GridFn<T>, h: &GridFn<T>, y: T, modes: usize) -> Result<GridFn<T>> {
    if modes < 1 {
        return Err(Error::Domain("mode truncation must be at least 1".into()));
    }
    let zero = SineSeries::zeros(modes);
    SpectralSolution::evolve(&zero, modes, v, h)?.point_series(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledG<T> {
    pub series: SineSeries<T>,
    /// `|f_m(y)|` for every peeled mode.
    pub divisors: Vec<f64>,
    /// Modes whose divisor fell below the threshold; their coefficient is 0.
    pub rejected: Vec<usize>,
}

pub fn assemble_g<T: Real>(b_hat: &[T], y: T, threshold: T) -> Result<AssembledG<T>> {
    if !(y > T::zero() && y < T::PI()) {
        return Err(Error::Domain(format!("observation point y = {y} outside (0, π)")));
    }
    let mut coeffs = Vec::with_capacity(b_hat.len());
    let mut divisors = Vec::with_capacity(b_hat.len());
    let mut rejected = Vec::new();
    let norm = T::basis_norm();
    for (k, &b) in b_hat.iter().enumerate() {
        let m = k + 1;
        let f = basis_unchecked::<T>(m, y);
        divisors.push(f.abs().to_f64_lossy());
        // Threshold applies to |sin(m y)|, as in the observation-point check.
        if f.abs() < threshold * norm {
            rejected.push(m);
            coeffs.push(T::zero());
        } else {
            coeffs.push(b / f);
        }
    }
    Ok(AssembledG {
        series: SineSeries::new(coeffs),
        divisors,
        rejected,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PeelingMethod {
    #[default]
    Sequential,
    Lsq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InversionConfig {
    pub derivative: DerivativeScheme,
    pub burn_in: usize,
    pub method: PeelingMethod,
    /// Number of initial-data modes to peel.
    pub depth: usize,
    pub schedule: Schedule,
    pub ridge: f64,
    pub refine_sweeps: usize,
    pub amplification_cap: f64,
    pub safety_threshold: f64,
    /// Mode truncation for `w`; defaults to the one recorded with the data.
    pub modes: Option<usize>,
}

impl Default for InversionConfig {
    fn default() -> Self {
        let peel = PeelOptions::default();
        Self {
            derivative: DerivativeScheme::Central,
            burn_in: 2,
            method: PeelingMethod::Sequential,
            depth: 2,
            schedule: Schedule::default(),
            ridge: 0.0,
            refine_sweeps: peel.refine_sweeps,
            amplification_cap: peel.amplification_cap,
            safety_threshold: DEFAULT_SAFETY_THRESHOLD,
            modes: None,
        }
    }
}

impl InversionConfig {
    pub fn peel_options(&self) -> PeelOptions {
        PeelOptions {
            refine_sweeps: self.refine_sweeps,
            amplification_cap: self.amplification_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeelDiagnostics {
    pub method: PeelingMethod,
    pub depth: usize,
    /// Sequential peeling times (empty for least squares).
    pub times: Vec<f64>,
    pub amplification: Vec<f64>,
    pub sigma_estimate: Option<f64>,
    pub used_fallback: bool,
    pub sweeps: usize,
    /// Condition number of the exponential design matrix over the grid.
    pub design_condition: f64,
    pub collocation_condition: Option<f64>,
    pub residual_rms: Option<f64>,
    pub warnings: Vec<String>,
}

/// Misfit between the observations and a forward re-simulation of the
/// reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyResidual {
    pub u1_max: f64,
    pub u3_max: f64,
    pub uy_max: f64,
    pub u1_rms: f64,
    pub u3_rms: f64,
    pub uy_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub determinant: f64,
    pub determinant_expected: f64,
    pub g1: f64,
    pub g3: f64,
    pub burn_in: usize,
    pub modes: usize,
    pub observation_min_abs_sin: f64,
    pub observation_argmin: usize,
    pub peel: PeelDiagnostics,
    pub divisors: Vec<f64>,
    pub rejected_modes: Vec<usize>,
    /// Predicted noise-induced error of each `ĝ_m`.
    pub mode_error_estimate: Vec<f64>,
    pub consistency: ConsistencyResidual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction<T> {
    pub h_hat: GridFn<T>,
    pub v_hat: GridFn<T>,
    pub g_coeffs: SineSeries<T>,
    pub b_hat: Vec<T>,
    /// `q = u(y, ·) - w` the peeling operated on.
    pub q: GridFn<T>,
    pub diagnostics: Diagnostics,
}

fn misfit<T: Real>(a: &GridFn<T>, b: &GridFn<T>) -> (f64, f64) {
    let n = a.len().max(1) as f64;
    let (mx, ss) = a
        .values()
        .iter()
        .zip(b.values())
        .fold((0.0f64, 0.0f64), |(m, s), (&x, &y)| {
            let d = (x - y).to_f64_lossy().abs();
            (m.max(d), s + d * d)
        });
    (mx, (ss / n).sqrt())
}

/// Runs the full recovery pipeline.
pub fn invert<T: Real>(obs: &Observations<T>, cfg: &InversionConfig) -> Result<Reconstruction<T>> {
    let modes = cfg.modes.unwrap_or(obs.modes);
    let threshold = T::lit(cfg.safety_threshold);
    let point = check_observation_point(obs.y, modes, threshold)
        .and_then(|c| c.into_result())
        .map_err(|e| e.at_stage("observation_point"))?;
    if cfg.depth < 1 {
        return Err(Error::Domain("peeling depth must be at least 1".into()).at_stage("config"));
    }

    let (g1, g3) = extract_g13(obs).map_err(|e| e.at_stage("extract_g13"))?;

    let vh_opts = VhOptions {
        scheme: cfg.derivative,
        burn_in: cfg.burn_in,
    };
    let vh = recover_vh(obs, g1, g3, &vh_opts).map_err(|e| e.at_stage("recover_vh"))?;

    let w = compute_w(&vh.v_full, &vh.h_full, obs.y, modes).map_err(|e| e.at_stage("compute_w"))?;
    let q = obs
        .uy
        .zip_with(&w, |u, w| u - w)
        .map_err(|e| e.at_stage("compute_w"))?;

    let design_cond = design_condition(&q, cfg.depth).to_f64_lossy();
    let (b_hat, peel_diag, gains) = match cfg.method {
        PeelingMethod::Sequential => {
            let out = peel_sequential(&q, cfg.depth, &cfg.schedule, &cfg.peel_options())
                .map_err(|e| e.at_stage("peel_sequential"))?;
            let sigma = out.sigma_estimate.unwrap_or(0.0);
            let gains: Vec<f64> = out.amplification.iter().map(|a| sigma * a).collect();
            let diag = PeelDiagnostics {
                method: cfg.method,
                depth: cfg.depth,
                times: out.times,
                amplification: out.amplification,
                sigma_estimate: out.sigma_estimate,
                used_fallback: out.used_fallback,
                sweeps: out.sweeps,
                design_condition: design_cond,
                collocation_condition: Some(out.collocation_condition),
                residual_rms: None,
                warnings: out.warnings,
            };
            (out.b_hat, diag, gains)
        }
        PeelingMethod::Lsq => {
            let out = peel_lsq(&q, cfg.depth, T::lit(cfg.ridge)).map_err(|e| e.at_stage("peel_lsq"))?;
            let gains: Vec<f64> = out.noise_gain.iter().map(|g| g * out.residual_rms).collect();
            let diag = PeelDiagnostics {
                method: cfg.method,
                depth: cfg.depth,
                times: Vec::new(),
                amplification: out.noise_gain.clone(),
                sigma_estimate: Some(out.residual_rms),
                used_fallback: false,
                sweeps: 0,
                design_condition: out.condition,
                collocation_condition: None,
                residual_rms: Some(out.residual_rms),
                warnings: Vec::new(),
            };
            (out.b_hat, diag, gains)
        }
    };

    let assembled = assemble_g(&b_hat, obs.y, threshold).map_err(|e| e.at_stage("assemble_g"))?;
    let mode_error_estimate = gains
        .iter()
        .zip(&assembled.divisors)
        .map(|(g, d)| g / d)
        .collect();

    // Re-simulate with the reconstruction and compare with the data.
    let mut g_full = assembled.series.coeffs.clone();
    g_full.resize(modes.max(3), T::zero());
    // Mode 3 is known from the data even when not peeled.
    if cfg.depth < 3 {
        g_full[2] = g3;
    }
    let resim = SpectralSolution::evolve(&SineSeries::new(g_full), modes.max(3), &vh.v_full, &vh.h_full)
        .map_err(|e| e.at_stage("consistency"))?;
    let u1_sim = resim.amplitude(1).cloned().expect("mode 1");
    let u3_sim = resim.amplitude(3).cloned().expect("mode 3");
    let uy_sim = {
        let trunc = SpectralSolution {
            modes: resim.modes[..modes].to_vec(),
            amplitudes: resim.amplitudes[..modes].to_vec(),
            boundary: resim.boundary.clone(),
        };
        trunc.point_series(obs.y).map_err(|e| e.at_stage("consistency"))?
    };
    let (u1_max, u1_rms) = misfit(&u1_sim, &obs.u1);
    let (u3_max, u3_rms) = misfit(&u3_sim, &obs.u3);
    let (uy_max, uy_rms) = misfit(&uy_sim, &obs.uy);

    let diagnostics = Diagnostics {
        determinant: vh.determinant.to_f64_lossy(),
        determinant_expected: -32.0 / (3.0 * std::f64::consts::PI),
        g1: g1.to_f64_lossy(),
        g3: g3.to_f64_lossy(),
        burn_in: cfg.burn_in,
        modes,
        observation_min_abs_sin: point.min_abs_sin,
        observation_argmin: point.argmin,
        peel: peel_diag,
        divisors: assembled.divisors,
        rejected_modes: assembled.rejected,
        mode_error_estimate,
        consistency: ConsistencyResidual {
            u1_max,
            u3_max,
            uy_max,
            u1_rms,
            u3_rms,
            uy_rms,
        },
    };
    Ok(Reconstruction {
        h_hat: vh.h_hat,
        v_hat: vh.v_hat,
        g_coeffs: assembled.series,
        b_hat,
        q,
        diagnostics,
    })
}

/// Products `b_m = g_m f_m(y)` for a known series.
pub fn peel_targets<T: Real>(g: &SineSeries<T>, y: T, depth: usize) -> Vec<T> {
    (1..=depth).map(|m| g.coeff(m) * basis_unchecked(m, y)).collect()
}
