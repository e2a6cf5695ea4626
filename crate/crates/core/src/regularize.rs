//! Noise-amplification experiments exhibiting the ill-posedness of the
//! recovery: differentiation in the `(v, h)` stage and `e^{m²t}` growth in
//! the peeling stage.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{make_observations, NoiseSpec, ProblemInstance};
use crate::grid::{GridFn, TimeGrid};
use crate::inverse::{exponential_design, invert, peel_targets, InversionConfig, Reconstruction};
use crate::linalg::condition_number;
use crate::scalar::Real;
use crate::spectral::SineSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Relative noise levels, non-negative and ascending.
    pub levels: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            levels: vec![0.0, 1e-6, 1e-4],
            trials: 20,
            base_seed: 0,
        }
    }
}

/// Error of one reconstruction against the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    /// Relative L² error of `v̂` over the recovered window (absolute when `v ≡ 0`).
    pub v_error: f64,
    pub h_error: f64,
    /// `|ĝ_m - g_m|`.
    pub g_error: Vec<f64>,
    /// `|b̂_m - b_m|`.
    pub b_error: Vec<f64>,
    pub design_condition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub level: f64,
    pub trial: usize,
    pub seed: u64,
    pub metrics: Option<TrialMetrics>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: f64,
    pub succeeded: usize,
    pub failed: usize,
    pub g_error_mean: Vec<f64>,
    pub g_error_max: Vec<f64>,
    pub b_error_mean: Vec<f64>,
    pub b_error_max: Vec<f64>,
    pub v_error_mean: f64,
    pub h_error_mean: f64,
    pub design_condition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseStudy {
    pub levels: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub depth: usize,
    pub trials_detail: Vec<TrialRecord>,
    pub summary: Vec<LevelSummary>,
}

/// Seed of trial `trial` at level index `level` (SplitMix64 finalizer).
pub fn trial_seed(base: u64, level: usize, trial: usize) -> u64 {
    let mut z = base
        .wrapping_add((level as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn l2_error<T: Real>(est: &GridFn<T>, truth: impl Fn(f64) -> f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &v) in est.values().iter().enumerate() {
        let t = est.time(i).to_f64_lossy();
        let exact = truth(t);
        num += (v.to_f64_lossy() - exact).powi(2);
        den += exact * exact;
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        (num * est.dt().to_f64_lossy()).sqrt()
    }
}

/// Scores a reconstruction against the true `(h, v, g)`.
pub fn score<T: Real>(rec: &Reconstruction<T>, p: &ProblemInstance<T>, g_true: &SineSeries<T>, y: T) -> TrialMetrics {
    let depth = rec.b_hat.len();
    let b_true = peel_targets(g_true, y, depth);
    TrialMetrics {
        v_error: l2_error(&rec.v_hat, |t| p.v.eval(T::lit(t)).to_f64_lossy()),
        h_error: l2_error(&rec.h_hat, |t| p.h.eval(T::lit(t)).to_f64_lossy()),
        g_error: (1..=depth)
            .map(|m| (rec.g_coeffs.coeff(m) - g_true.coeff(m)).abs().to_f64_lossy())
            .collect(),
        b_error: rec
            .b_hat
            .iter()
            .zip(&b_true)
            .map(|(&a, &b)| (a - b).abs().to_f64_lossy())
            .collect(),
        design_condition: rec.diagnostics.peel.design_condition,
    }
}

pub fn run_noise_study<T: Real>(
    p: &ProblemInstance<T>,
    y: T,
    study: &StudyConfig,
    inversion: &InversionConfig,
) -> Result<NoiseStudy> {
    if study.levels.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::Domain("noise levels must be finite and non-negative".into()));
    }
    if study.levels.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("noise levels must be ascending".into()));
    }
    if study.trials < 1 {
        return Err(Error::Domain("at least one trial per level is required".into()));
    }
    let g_true = p.initial_coefficients()?;
    let threshold = T::lit(inversion.safety_threshold);
    let jobs: Vec<(usize, usize)> = (0..study.levels.len())
        .flat_map(|l| (0..study.trials).map(move |t| (l, t)))
        .collect();
    let trials_detail: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(li, trial)| {
            let level = study.levels[li];
            let seed = trial_seed(study.base_seed, li, trial);
            let noise = if level == 0.0 {
                NoiseSpec::None
            } else {
                NoiseSpec::Relative { level }
            };
            let outcome = make_observations(p, y, &noise, seed, threshold)
                .and_then(|obs| invert(&obs, inversion))
                .map(|rec| score(&rec, p, &g_true, y));
            match outcome {
                Ok(m) => TrialRecord {
                    level,
                    trial,
                    seed,
                    metrics: Some(m),
                    failure: None,
                },
                Err(e) => TrialRecord {
                    level,
                    trial,
                    seed,
                    metrics: None,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();

    let depth = inversion.depth;
    let summary = study
        .levels
        .iter()
        .map(|&level| {
            let rows: Vec<&TrialMetrics> = trials_detail
                .iter()
                .filter(|r| r.level == level)
                .filter_map(|r| r.metrics.as_ref())
                .collect();
            let failed = trials_detail
                .iter()
                .filter(|r| r.level == level && r.metrics.is_none())
                .count();
            let n = rows.len().max(1) as f64;
            let per_mode = |pick: fn(&TrialMetrics) -> &Vec<f64>| -> (Vec<f64>, Vec<f64>) {
                (0..depth)
                    .map(|m| {
                        let vals = rows.iter().map(|r| pick(r)[m]);
                        let sum: f64 = vals.clone().sum();
                        (sum / n, vals.fold(0.0, f64::max))
                    })
                    .unzip()
            };
            let (g_error_mean, g_error_max) = per_mode(|r| &r.g_error);
            let (b_error_mean, b_error_max) = per_mode(|r| &r.b_error);
            LevelSummary {
                level,
                succeeded: rows.len(),
                failed,
                g_error_mean,
                g_error_max,
                b_error_mean,
                b_error_max,
                v_error_mean: rows.iter().map(|r| r.v_error).sum::<f64>() / n,
                h_error_mean: rows.iter().map(|r| r.h_error).sum::<f64>() / n,
                design_condition: rows.iter().map(|r| r.design_condition).sum::<f64>() / n,
            }
        })
        .collect();

    Ok(NoiseStudy {
        levels: study.levels.clone(),
        trials: study.trials,
        base_seed: study.base_seed,
        depth,
        trials_detail,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplificationProfile {
    pub times: Vec<f64>,
    /// `e^{m² t_m}`.
    pub factors: Vec<f64>,
    /// Design-matrix condition number at depths `1..=depth`.
    pub condition_by_depth: Vec<f64>,
}

/// Noise gain of each peeled coefficient for a schedule, and the
/// least-squares conditioning at each depth. Without explicit times the
/// data-free schedule `t_m = T/2` is used.
pub fn amplification_profile<T: Real>(
    grid: &TimeGrid<T>,
    depth: usize,
    times: Option<&[f64]>,
) -> Result<AmplificationProfile> {
    if depth < 1 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    let times: Vec<f64> = match times {
        Some(t) if t.len() == depth => t.to_vec(),
        Some(t) => {
            return Err(Error::Schedule(format!("{} times for depth {depth}", t.len())));
        }
        None => vec![0.5 * (grid.t0 + grid.t_final()).to_f64_lossy(); depth],
    };
    let factors = times
        .iter()
        .enumerate()
        .map(|(k, &t)| (((k + 1) * (k + 1)) as f64 * t).exp())
        .collect();
    let ts: Vec<T> = grid.times().collect();
    let condition_by_depth = (1..=depth)
        .map(|d| condition_number(&exponential_design(&ts, d)).to_f64_lossy())
        .collect();
    Ok(AmplificationProfile {
        times,
        factors,
        condition_by_depth,
    })
}
