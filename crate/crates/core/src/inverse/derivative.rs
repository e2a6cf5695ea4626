//! Numerical differentiation of sampled series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFn;
use crate::linalg::{solve_square, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum DerivativeScheme {
    /// Second-order central differences, three-point one-sided at the ends.
    #[default]
    Central,
    /// Derivative of a moving least-squares polynomial fit over
    /// `2 half_window + 1` samples (Savitzky–Golay). Windows are shifted
    /// inward near the ends.
    LocalPolynomial { half_window: usize, order: usize },
}

impl DerivativeScheme {
    pub fn min_points(&self) -> usize {
        match *self {
            DerivativeScheme::Central => 3,
            DerivativeScheme::LocalPolynomial { half_window, .. } => 2 * half_window + 1,
        }
    }
}

pub fn differentiate<T: Real>(f: &GridFn<T>, scheme: &DerivativeScheme) -> Result<GridFn<T>> {
    let n = f.len();
    if n < scheme.min_points() {
        return Err(Error::Precondition(format!(
            "{scheme:?} needs at least {} samples, got {n}",
            scheme.min_points()
        )));
    }
    let u = f.values();
    let dt = f.dt();
    let two = T::lit(2.0);
    let values = match *scheme {
        DerivativeScheme::Central => {
            let mut d = Vec::with_capacity(n);
            d.push((-T::lit(3.0) * u[0] + T::lit(4.0) * u[1] - u[2]) / (two * dt));
            for i in 1..n - 1 {
                d.push((u[i + 1] - u[i - 1]) / (two * dt));
            }
            d.push((T::lit(3.0) * u[n - 1] - T::lit(4.0) * u[n - 2] + u[n - 3]) / (two * dt));
            d
        }
        DerivativeScheme::LocalPolynomial { half_window, order } => {
            if half_window == 0 || order == 0 || order > 2 * half_window {
                return Err(Error::Domain(format!(
                    "local polynomial order {order} needs 1 ≤ order < 2·half_window + 1 = {}",
                    2 * half_window + 1
                )));
            }
            let k = half_window;
            let weights: Vec<Vec<T>> = (0..=2 * k)
                .map(|pos| local_poly_weights::<T>(k, order, pos))
                .collect::<Result<_>>()?;
            let scale = T::from_usize_lossy(k) * dt;
            (0..n)
                .map(|i| {
                    let lo = i.saturating_sub(k).min(n - 1 - 2 * k);
                    let w = &weights[i - lo];
                    w.iter()
                        .zip(&u[lo..=lo + 2 * k])
                        .fold(T::zero(), |acc, (&wj, &uj)| acc + wj * uj)
                        / scale
                })
                .collect()
        }
    };
    GridFn::new(f.t0(), dt, values)
}

/// Weights giving the derivative (in units of the half window) at window
/// position `pos` ∈ `0..=2k` of a degree-`order` least-squares fit.
fn local_poly_weights<T: Real>(k: usize, order: usize, pos: usize) -> Result<Vec<T>> {
    let kk = T::from_usize_lossy(k);
    let tau: Vec<T> = (0..=2 * k)
        .map(|j| (T::from_usize_lossy(j) - kk) / kk)
        .collect();
    let tau0 = (T::from_usize_lossy(pos) - kk) / kk;
    let p = order + 1;
    let gram = Matrix::from_fn(p, p, |r, c| {
        tau.iter().fold(T::zero(), |acc, &t| acc + t.powi((r + c) as i32))
    });
    // d/dτ of τ^r at τ0.
    let dvec: Vec<T> = (0..p)
        .map(|r| {
            if r == 0 {
                T::zero()
            } else {
                T::from_usize_lossy(r) * tau0.powi(r as i32 - 1)
            }
        })
        .collect();
    let c = solve_square(&gram, &dvec)?;
    Ok(tau
        .iter()
        .map(|&t| {
            c.iter()
                .enumerate()
                .fold(T::zero(), |acc, (r, &cr)| acc + cr * t.powi(r as i32))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn central_is_exact_on_quadratics() {
        let g = TimeGrid::new(0.0, 0.1, 20).unwrap();
        let f = g.sample(|t| 3.0 * t * t - t + 2.0).unwrap();
        let d = differentiate(&f, &DerivativeScheme::Central).unwrap();
        for i in 0..g.len {
            assert_abs_diff_eq!(d.values()[i], 6.0 * g.time(i) - 1.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn central_is_second_order() {
        let err = |dt: f64| {
            let g = TimeGrid::from_horizon(2.0, dt).unwrap();
            let f = g.sample(|t| t.sin()).unwrap();
            let d = differentiate(&f, &DerivativeScheme::Central).unwrap();
            (0..g.len).map(|i| (d.values()[i] - g.time(i).cos()).abs()).fold(0.0, f64::max)
        };
        let r = err(0.02) / err(0.01);
        assert!((3.5..4.5).contains(&r), "{r}");
    }

    #[test]
    fn local_polynomial_exact_on_its_degree() {
        let g = TimeGrid::new(0.0, 0.05, 30).unwrap();
        let f = g.sample(|t| t * t * t - 2.0 * t).unwrap();
        let scheme = DerivativeScheme::LocalPolynomial { half_window: 3, order: 3 };
        let d = differentiate(&f, &scheme).unwrap();
        for i in 0..g.len {
            let t = g.time(i);
            assert_abs_diff_eq!(d.values()[i], 3.0 * t * t - 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn short_series_fail() {
        let two = GridFn::new(0.0, 0.1, vec![1.0, 2.0]).unwrap();
        assert!(matches!(differentiate(&two, &DerivativeScheme::Central), Err(Error::Precondition(_))));
        let three = GridFn::new(0.0, 0.1, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(differentiate(&three, &DerivativeScheme::Central).is_ok());
        let sg = DerivativeScheme::LocalPolynomial { half_window: 2, order: 2 };
        assert!(differentiate(&three, &sg).is_err());
        let bad = DerivativeScheme::LocalPolynomial { half_window: 1, order: 3 };
        let long = GridFn::new(0.0, 0.1, vec![0.0; 10]).unwrap();
        assert!(matches!(differentiate(&long, &bad), Err(Error::Domain(_))));
    }
}
