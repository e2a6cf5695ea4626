//! Extraction of the coefficients `b_m` of `q(t) = Σ_m b_m e^{-m²t}`.
//!
//! [`peel_sequential`] strips exponentials one at a time: at a scheduled time
//! `t_m`, `b_m = e^{m²t_m} [q(t_m) - Σ_{k<m} b_k e^{-k²t_m}]`. Because the
//! limits `t → ∞` are out of reach on finite data, the neglected modes
//! `k > m` bias each estimate; optional back-correction sweeps re-run the
//! recursion with the current estimates of all other modes subtracted,
//! which removes that bias for modes up to the peeling depth.
//!
//! [`peel_lsq`] fits all coefficients at once by (ridge) least squares over
//! the whole grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFn;
use crate::linalg::{condition_number, ridge_least_squares, solve_square, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// Each `t_m` minimises the predicted error of `b_m`: the bias from mode
    /// `m+1`, estimated by a provisional least-squares fit of depth
    /// `M_peel + 1`, against noise amplification `σ e^{m² t}` plus the
    /// predicted errors of the modes already peeled, carried forward by
    /// `e^{(m²-k²) t}`. Falls back to `t_m = T/2` when the provisional fit
    /// is unavailable.
    Balanced {
        /// Noise standard deviation in `q`; estimated from the provisional
        /// fit residual when absent.
        #[serde(default)]
        noise_sigma: Option<f64>,
        #[serde(default)]
        t_min: f64,
        /// Lower bound on `t_m` in units of the decay time `1/m²`.
        #[serde(default = "default_min_decays")]
        min_decays: f64,
    },
    /// User-supplied `t_m` for `m = 1..M_peel`.
    Explicit { times: Vec<f64> },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Balanced {
            noise_sigma: None,
            t_min: 0.0,
            min_decays: default_min_decays(),
        }
    }
}

fn default_min_decays() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeelOptions {
    /// Maximum back-correction sweeps after the first pass (0 disables).
    pub refine_sweeps: usize,
    /// Amplification `e^{m² t_m}` above which a warning is recorded.
    pub amplification_cap: f64,
}

impl Default for PeelOptions {
    fn default() -> Self {
        Self {
            refine_sweeps: 0,
            amplification_cap: 1e8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeelOutcome<T> {
    pub b_hat: Vec<T>,
    /// Grid times actually used, one per mode.
    pub times: Vec<f64>,
    /// `e^{m² t_m}`.
    pub amplification: Vec<f64>,
    pub sigma_estimate: Option<f64>,
    pub used_fallback: bool,
    pub sweeps: usize,
    /// Condition number of the collocation matrix `e^{-k² t_m}`.
    pub collocation_condition: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsqOutcome<T> {
    pub b_hat: Vec<T>,
    /// Condition number of the design matrix `e^{-k² t_i}`.
    pub condition: f64,
    pub effective_condition: f64,
    pub residual_rms: f64,
    /// `sqrt(diag((AᵀA + ridge I)^{-1}))`, the per-coefficient noise gain.
    pub noise_gain: Vec<f64>,
}

/// Design matrix with entries `e^{-k² t_i}`, `k = 1..depth`.
pub fn exponential_design<T: Real>(times: &[T], depth: usize) -> Matrix<T> {
    Matrix::from_fn(times.len(), depth, |i, k| {
        let kk = T::from_usize_lossy(k + 1);
        (-kk * kk * times[i]).exp()
    })
}

pub fn design_condition<T: Real>(q: &GridFn<T>, depth: usize) -> T {
    let times: Vec<T> = q.grid().times().collect();
    condition_number(&exponential_design(&times, depth))
}

pub fn peel_lsq<T: Real>(q: &GridFn<T>, depth: usize, ridge: T) -> Result<LsqOutcome<T>> {
    if depth < 1 {
        return Err(Error::Domain("peeling depth must be at least 1".into()));
    }
    if q.len() < depth {
        return Err(Error::Precondition(format!(
            "{} samples cannot determine {depth} coefficients",
            q.len()
        )));
    }
    let times: Vec<T> = q.grid().times().collect();
    let a = exponential_design(&times, depth);
    let ls = ridge_least_squares(&a, q.values(), ridge)?;
    let dof = (q.len() - depth).max(1);
    let residual_rms = ls.residual_norm.to_f64_lossy() / (dof as f64).sqrt();
    let gram = Matrix::from_fn(depth, depth, |i, j| {
        let base = (0..a.rows()).fold(T::zero(), |acc, r| acc + a.get(r, i) * a.get(r, j));
        if i == j {
            base + ridge
        } else {
            base
        }
    });
    let noise_gain = (0..depth)
        .map(|j| {
            let mut e = vec![T::zero(); depth];
            e[j] = T::one();
            solve_square(&gram, &e)
                .map(|col| col[j].to_f64_lossy().abs().sqrt())
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    Ok(LsqOutcome {
        b_hat: ls.solution,
        condition: ls.condition.to_f64_lossy(),
        effective_condition: ls.effective_condition.to_f64_lossy(),
        residual_rms,
        noise_gain,
    })
}

struct ResolvedSchedule {
    indices: Vec<usize>,
    sigma: Option<f64>,
    fallback: bool,
}

fn resolve_schedule<T: Real>(q: &GridFn<T>, depth: usize, schedule: &Schedule) -> Result<ResolvedSchedule> {
    let grid = q.grid();
    let t_start = grid.t0.to_f64_lossy();
    let t_end = grid.t_final().to_f64_lossy();
    let slack = 1e-9 * grid.dt.to_f64_lossy();
    match schedule {
        Schedule::Explicit { times } => {
            if times.len() != depth {
                return Err(Error::Schedule(format!(
                    "{} scheduled times for a peeling depth of {depth}",
                    times.len()
                )));
            }
            let mut indices = Vec::with_capacity(depth);
            for (m, &t) in times.iter().enumerate() {
                if !t.is_finite() || t > t_end + slack || t < t_start - slack {
                    return Err(Error::Schedule(format!(
                        "t_{} = {t} outside the data window [{t_start}, {t_end}]",
                        m + 1
                    )));
                }
                indices.push(grid.nearest_index(T::lit(t)));
            }
            Ok(ResolvedSchedule {
                indices,
                sigma: None,
                fallback: false,
            })
        }
        Schedule::Balanced {
            noise_sigma,
            t_min,
            min_decays,
        } => {
            if !(min_decays.is_finite() && *min_decays >= 0.0) || !t_min.is_finite() {
                return Err(Error::Schedule("schedule bounds must be finite and non-negative".into()));
            }
            let provisional = peel_lsq(q, depth + 1, T::zero());
            let Ok(prov) = provisional else {
                let idx = grid.nearest_index(T::lit(0.5 * (t_start + t_end)));
                return Ok(ResolvedSchedule {
                    indices: vec![idx; depth],
                    sigma: *noise_sigma,
                    fallback: true,
                });
            };
            let floor = 4.0 * T::epsilon().to_f64_lossy() * q.max_abs().to_f64_lossy();
            let sigma = noise_sigma.unwrap_or(prov.residual_rms).max(floor).max(f64::MIN_POSITIVE);
            let times: Vec<f64> = grid.times().map(|t| t.to_f64_lossy()).collect();
            let mut predicted: Vec<f64> = Vec::with_capacity(depth);
            let mut indices = Vec::with_capacity(depth);
            for m in 1..=depth {
                let mm = (m * m) as f64;
                let lo = t_min.max(min_decays / mm).max(t_start).min(t_end);
                let next = prov.b_hat[m].abs().to_f64_lossy();
                let gap = ((m + 1) * (m + 1)) as f64 - mm;
                let err = |t: f64| {
                    let carried: f64 = predicted
                        .iter()
                        .enumerate()
                        .map(|(k, e)| e * ((mm - ((k + 1) * (k + 1)) as f64) * t).exp())
                        .sum();
                    next * (-gap * t).exp() + sigma * (mm * t).exp() + carried
                };
                let first = grid.nearest_index(T::lit(lo));
                let first = if times[first] < lo - slack { first + 1 } else { first };
                let (best, best_err) = (first.min(times.len() - 1)..times.len())
                    .map(|i| (i, err(times[i])))
                    .fold((first.min(times.len() - 1), f64::INFINITY), |acc, cur| {
                        if cur.1 < acc.1 {
                            cur
                        } else {
                            acc
                        }
                    });
                predicted.push(best_err);
                indices.push(best);
            }
            Ok(ResolvedSchedule {
                indices,
                sigma: Some(sigma),
                fallback: false,
            })
        }
    }
}

pub fn peel_sequential<T: Real>(
    q: &GridFn<T>,
    depth: usize,
    schedule: &Schedule,
    opts: &PeelOptions,
) -> Result<PeelOutcome<T>> {
    if depth < 1 {
        return Err(Error::Domain("peeling depth must be at least 1".into()));
    }
    if q.is_empty() {
        return Err(Error::Data("empty series".into()));
    }
    let resolved = resolve_schedule(q, depth, schedule)?;
    let grid = q.grid();
    let times: Vec<T> = resolved.indices.iter().map(|&i| grid.time(i)).collect();
    let samples: Vec<T> = resolved.indices.iter().map(|&i| q.values()[i]).collect();
    let lambda = |k: usize| T::from_usize_lossy(k * k);
    // basis[m][k] = e^{-(k+1)² t_m}
    let basis: Vec<Vec<T>> = times
        .iter()
        .map(|&t| (1..=depth).map(|k| (-lambda(k) * t).exp()).collect())
        .collect();
    let gain: Vec<T> = times
        .iter()
        .enumerate()
        .map(|(m, &t)| (lambda(m + 1) * t).exp())
        .collect();

    let update = |b: &mut [T], m: usize, all_others: bool| {
        let upper = if all_others { depth } else { m };
        let mut r = samples[m];
        for k in 0..upper {
            if k != m {
                r = r - b[k] * basis[m][k];
            }
        }
        b[m] = gain[m] * r;
    };

    let mut b = vec![T::zero(); depth];
    for m in 0..depth {
        update(&mut b, m, false);
    }

    let residual = |b: &[T]| -> T {
        (0..depth).fold(T::zero(), |acc, m| {
            let fit = (0..depth).fold(T::zero(), |s, k| s + b[k] * basis[m][k]);
            acc.max((samples[m] - fit).abs())
        })
    };

    let mut distinct = resolved.indices.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let can_refine = distinct.len() == depth && depth > 1;

    let mut warnings = Vec::new();
    let mut sweeps = 0;
    if can_refine && opts.refine_sweeps > 0 {
        let mut best = b.clone();
        let mut best_res = residual(&b);
        for _ in 0..opts.refine_sweeps {
            let before = b.clone();
            for m in 0..depth {
                update(&mut b, m, true);
            }
            sweeps += 1;
            let res = residual(&b);
            if !res.is_finite() || b.iter().any(|v| !v.is_finite()) {
                warnings.push("back-correction diverged; kept best iterate".into());
                break;
            }
            if res <= best_res {
                best_res = res;
                best.clone_from(&b);
            }
            let scale = b.iter().fold(T::min_positive_value(), |a, v| a.max(v.abs()));
            let change = b
                .iter()
                .zip(&before)
                .fold(T::zero(), |a, (x, y)| a.max((*x - *y).abs()));
            if change <= T::lit(4.0) * T::epsilon() * scale {
                break;
            }
        }
        b = best;
    } else if depth > 1 && opts.refine_sweeps > 0 {
        warnings.push("scheduled times coincide; back-correction skipped".into());
    }

    let amplification: Vec<f64> = gain.iter().map(|g| g.to_f64_lossy()).collect();
    for (m, &a) in amplification.iter().enumerate() {
        if a > opts.amplification_cap {
            warnings.push(format!(
                "mode {} amplification e^(m² t) = {a:e} exceeds cap {:e}",
                m + 1,
                opts.amplification_cap
            ));
        }
    }
    let collocation = Matrix::from_fn(depth, depth, |m, k| basis[m][k]);
    Ok(PeelOutcome {
        b_hat: b,
        times: times.iter().map(|t| t.to_f64_lossy()).collect(),
        amplification,
        sigma_estimate: resolved.sigma,
        used_fallback: resolved.fallback,
        sweeps,
        collocation_condition: condition_number(&collocation).to_f64_lossy(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use approx::assert_abs_diff_eq;

    fn exp_sum(b: &[f64], t_final: f64, dt: f64) -> GridFn<f64> {
        let g = TimeGrid::from_horizon(t_final, dt).unwrap();
        g.sample(|t| {
            b.iter()
                .enumerate()
                .map(|(k, bk)| bk * (-(((k + 1) * (k + 1)) as f64) * t).exp())
                .sum()
        })
        .unwrap()
    }

    #[test]
    fn single_exponential_any_time() {
        let b1 = (2.0 / std::f64::consts::PI).sqrt() * 1f64.sin();
        let q = exp_sum(&[b1], 6.0, 1e-2);
        for t in [0.0, 0.5, 2.0, 5.9] {
            let out = peel_sequential(&q, 1, &Schedule::Explicit { times: vec![t] }, &PeelOptions::default())
                .unwrap();
            assert_abs_diff_eq!(out.b_hat[0], b1, epsilon = 1e-13);
        }
    }

    #[test]
    fn zero_signal_gives_zero() {
        let q = exp_sum(&[0.0], 4.0, 1e-2);
        let out = peel_sequential(&q, 3, &Schedule::default(), &PeelOptions::default()).unwrap();
        assert!(out.b_hat.iter().all(|&b| b == 0.0));
        let lsq = peel_lsq(&q, 3, 0.1).unwrap();
        assert!(lsq.b_hat.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn three_term_sum_default_schedule() {
        let b = [1.0, 0.5, 0.25];
        let q = exp_sum(&b, 10.0, 1e-3);
        let seq = peel_sequential(&q, 3, &Schedule::default(), &PeelOptions::default()).unwrap();
        let lsq = peel_lsq(&q, 3, 0.0).unwrap();
        for (k, &bk) in b.iter().enumerate() {
            assert_abs_diff_eq!(seq.b_hat[k], bk, epsilon = 1e-6);
            assert_abs_diff_eq!(seq.b_hat[k], lsq.b_hat[k], epsilon = 1e-6);
        }
    }

    #[test]
    fn four_term_sum_with_back_correction() {
        let b = [1.0, 0.5, 0.25, 0.125];
        let q = exp_sum(&b, 10.0, 1e-3);
        let plain = peel_sequential(&q, 4, &Schedule::default(), &PeelOptions::default()).unwrap();
        let opts = PeelOptions { refine_sweeps: 100, ..PeelOptions::default() };
        let refined = peel_sequential(&q, 4, &Schedule::default(), &opts).unwrap();
        assert_eq!(plain.times, refined.times);
        assert!(refined.sweeps > 0);
        let err = |o: &PeelOutcome<f64>| o.b_hat.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err(&refined) < 1e-8, "{:?}", refined.b_hat);
        assert!(err(&refined) < err(&plain));
    }

    #[test]
    fn balanced_times_respect_decay_floor() {
        let q = exp_sum(&[1.0, 0.5, 0.25, 0.125], 10.0, 1e-3);
        let out = peel_sequential(&q, 4, &Schedule::default(), &PeelOptions::default()).unwrap();
        for (m, &t) in out.times.iter().enumerate() {
            assert!(t >= 1.0 / ((m + 1) * (m + 1)) as f64 - 1e-12);
        }
        for w in out.times.windows(2) {
            assert!(w[0] > w[1], "{:?}", out.times);
        }
    }

    #[test]
    fn first_pass_is_the_plain_recursion() {
        let b = [1.0, 0.5];
        let q = exp_sum(&b, 6.0, 1e-2);
        let times = vec![3.0, 1.0];
        let opts = PeelOptions { refine_sweeps: 0, ..PeelOptions::default() };
        let out = peel_sequential(&q, 2, &Schedule::Explicit { times }, &opts).unwrap();
        let q3 = q.values()[300];
        let b1 = 3f64.exp() * q3;
        let q1 = q.values()[100];
        let b2 = 4f64.exp() * (q1 - b1 * (-1f64).exp());
        assert_eq!(out.b_hat[0], b1);
        assert_abs_diff_eq!(out.b_hat[1], b2, epsilon = 1e-15);
    }

    #[test]
    fn schedule_errors_and_warnings() {
        let q = exp_sum(&[1.0, 0.5], 2.0, 1e-2);
        let late = Schedule::Explicit { times: vec![3.0, 1.0] };
        assert!(matches!(
            peel_sequential(&q, 2, &late, &PeelOptions::default()),
            Err(Error::Schedule(_))
        ));
        let short = Schedule::Explicit { times: vec![1.0] };
        assert!(peel_sequential(&q, 2, &short, &PeelOptions::default()).is_err());
        let opts = PeelOptions { amplification_cap: 10.0, ..PeelOptions::default() };
        let out = peel_sequential(&q, 2, &Schedule::Explicit { times: vec![1.5, 1.9] }, &opts).unwrap();
        assert!(!out.warnings.is_empty());
    }

    #[test]
    fn fallback_when_provisional_fit_impossible() {
        let q = GridFn::new(0.0, 1.0, vec![1.0, 0.5]).unwrap();
        let opts = PeelOptions { refine_sweeps: 10, ..PeelOptions::default() };
        let out = peel_sequential(&q, 2, &Schedule::default(), &opts).unwrap();
        assert!(out.used_fallback);
        assert!(out.warnings.iter().any(|w| w.contains("coincide")));
        assert_eq!(out.times[0], out.times[1]);
    }

    #[test]
    fn lsq_condition_grows_with_depth() {
        let q = exp_sum(&[1.0], 6.0, 1e-2);
        let conds: Vec<f64> = (1..=6).map(|d| peel_lsq(&q, d, 0.0).unwrap().condition).collect();
        for w in conds.windows(2) {
            assert!(w[1] > w[0], "{conds:?}");
        }
        assert!(peel_lsq(&GridFn::new(0.0, 1.0, vec![1.0]).unwrap(), 2, 0.0).is_err());
    }
}
