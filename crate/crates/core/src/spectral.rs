//! Dirichlet sine eigenbasis on `[0, π]`.
//!
//! The basis functions are `f_m(x) = sqrt(2/π) sin(m x)`, orthonormal in
//! `L²(0, π)` and vanishing at both ends. Each mode carries the two coupling
//! constants that appear once the heat equation is projected onto it: the
//! source coupling `c_m = (1, f_m)` and the boundary coupling `f_m'(0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_MODES: usize = 16;
pub const DEFAULT_QUADRATURE_POINTS: usize = 2049;
pub const DEFAULT_SAFETY_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_OBSERVATION_POINT: f64 = 1.0;

fn check_position<T: Real>(x: T) -> Result<()> {
    // Allow a few ulps of slack at the right end so that `PI` computed in the
    // target precision is accepted.
    let slack = T::PI() * T::epsilon() * T::lit(4.0);
    if x.is_finite() && x >= -slack && x <= T::PI() + slack {
        Ok(())
    } else {
        Err(Error::Domain(format!("position x = {x} outside [0, π]")))
    }
}

/// `f_m(x) = sqrt(2/π) sin(m x)`.
pub fn eval_basis<T: Real>(m: usize, x: T) -> Result<T> {
    if m < 1 {
        return Err(Error::Domain("mode index must be at least 1".into()));
    }
    check_position(x)?;
    Ok(basis_unchecked(m, x))
}

#[inline]
pub(crate) fn basis_unchecked<T: Real>(m: usize, x: T) -> T {
    T::basis_norm() * (T::from_usize_lossy(m) * x).sin()
}

/// Constants of a single eigenmode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode<T> {
    pub m: usize,
    /// Decay rate `m²`.
    pub lambda: T,
    /// Source coupling `(1, f_m)`; exactly zero for even `m`.
    pub c_m: T,
    /// Boundary coupling `f_m'(0) = m sqrt(2/π)`.
    pub fprime0: T,
}

impl<T: Real> Mode<T> {
    /// Coefficient of `f_m` in the expansion of `1 - x/π`, i.e. `f_m'(0) / m²`.
    ///
    /// Used to sum the boundary-driven part of the series in closed form.
    pub fn lift_coefficient(&self) -> T {
        self.fprime0 / self.lambda
    }

    /// Forcing seen by this mode for boundary value `v` and source `h`.
    #[inline]
    pub fn forcing(&self, v: T, h: T) -> T {
        self.fprime0 * v + self.c_m * h
    }
}

pub fn mode_constants<T: Real>(m: usize) -> Result<Mode<T>> {
    if m < 1 {
        return Err(Error::Domain("mode index must be at least 1".into()));
    }
    let mm = T::from_usize_lossy(m);
    let s = T::basis_norm();
    // 1 - cos(mπ) is 2 for odd m and 0 for even m; evaluate it exactly.
    let c_m = if m % 2 == 1 { T::lit(2.0) * s / mm } else { T::zero() };
    Ok(Mode {
        m,
        lambda: mm * mm,
        c_m,
        fprime0: mm * s,
    })
}

pub fn modes<T: Real>(count: usize) -> Vec<Mode<T>> {
    (1..=count)
        .map(|m| mode_constants(m).expect("m >= 1"))
        .collect()
}

/// Truncated expansion `Σ_{m=1..M} g_m f_m(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineSeries<T> {
    pub coeffs: Vec<T>,
}

impl<T: Real> SineSeries<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(order: usize) -> Self {
        Self {
            coeffs: vec![T::zero(); order],
        }
    }

    /// Series whose synthesis is `Σ a_m sin(m x)`.
    pub fn from_sine_amplitudes(amplitudes: &[T]) -> Self {
        let scale = T::one() / T::basis_norm();
        Self {
            coeffs: amplitudes.iter().map(|&a| a * scale).collect(),
        }
    }

    /// Coefficients with respect to the unnormalized `sin(m x)`.
    pub fn sine_amplitudes(&self) -> Vec<T> {
        self.coeffs.iter().map(|&g| g * T::basis_norm()).collect()
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of mode `m` (1-based); zero beyond the truncation.
    pub fn coeff(&self, m: usize) -> T {
        if m == 0 {
            return T::zero();
        }
        self.coeffs.get(m - 1).copied().unwrap_or_else(T::zero)
    }

    pub fn synthesize(&self, x: T) -> Result<T> {
        check_position(x)?;
        Ok(self.synthesize_unchecked(x))
    }

    pub(crate) fn synthesize_unchecked(&self, x: T) -> T {
        self.coeffs
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, &g)| acc + g * basis_unchecked(i + 1, x))
    }
}

pub fn synthesize<T: Real>(series: &SineSeries<T>, x: T) -> Result<T> {
    series.synthesize(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    /// Composite trapezoid. Second order in general; exact discrete
    /// orthogonality of the sine basis, and spectrally accurate when the odd
    /// periodic extension of the integrand is smooth.
    Trapezoid,
    /// Composite Simpson, fourth order. Needs an odd number of points.
    #[default]
    Simpson,
}

/// Spatial quadrature on a uniform grid of `points` nodes over `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quadrature {
    pub points: usize,
    pub rule: QuadratureRule,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            points: DEFAULT_QUADRATURE_POINTS,
            rule: QuadratureRule::Simpson,
        }
    }
}

impl Quadrature {
    pub fn nodes_and_weights<T: Real>(&self) -> Result<(Vec<T>, Vec<T>)> {
        let n = self.points;
        if n < 3 {
            return Err(Error::Domain(format!("quadrature needs at least 3 points, got {n}")));
        }
        if self.rule == QuadratureRule::Simpson && n.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "Simpson quadrature needs an odd point count, got {n}"
            )));
        }
        let h = T::PI() / T::from_usize_lossy(n - 1);
        let nodes = (0..n).map(|j| h * T::from_usize_lossy(j)).collect();
        let weights = (0..n)
            .map(|j| match self.rule {
                QuadratureRule::Trapezoid => {
                    if j == 0 || j == n - 1 {
                        h / T::lit(2.0)
                    } else {
                        h
                    }
                }
                QuadratureRule::Simpson => {
                    let w = if j == 0 || j == n - 1 {
                        1.0
                    } else if j % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    h * T::lit(w) / T::lit(3.0)
                }
            })
            .collect();
        Ok((nodes, weights))
    }
}

/// Approximates `(fn, f_m)` for `m = 1..order` by composite quadrature.
pub fn project<T: Real>(
    f: impl Fn(T) -> T,
    order: usize,
    quadrature: &Quadrature,
) -> Result<SineSeries<T>> {
    if order < 1 {
        return Err(Error::Domain("truncation order must be at least 1".into()));
    }
    let (nodes, weights) = quadrature.nodes_and_weights::<T>()?;
    let samples: Vec<T> = nodes.iter().map(|&x| f(x)).collect();
    if let Some(j) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!(
            "non-finite function value at quadrature node x = {}",
            nodes[j]
        )));
    }
    let coeffs = (1..=order)
        .map(|m| {
            nodes
                .iter()
                .zip(&weights)
                .zip(&samples)
                .fold(T::zero(), |acc, ((&x, &w), &s)| acc + w * s * basis_unchecked(m, x))
        })
        .collect();
    Ok(SineSeries { coeffs })
}

/// Outcome of screening an observation point against near-zeros of `f_m(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationPointCheck {
    pub y: f64,
    pub modes: usize,
    pub threshold: f64,
    /// `min_{m ≤ M} |sin(m y)|`.
    pub min_abs_sin: f64,
    /// The mode attaining the minimum.
    pub argmin: usize,
    pub safe: bool,
}

impl ObservationPointCheck {
    pub fn into_result(self) -> Result<Self> {
        if self.safe {
            Ok(self)
        } else {
            Err(Error::UnsafeObservationPoint {
                y: self.y,
                mode: self.argmin,
                min_abs_sin: self.min_abs_sin,
                threshold: self.threshold,
            })
        }
    }
}

pub fn check_observation_point<T: Real>(
    y: T,
    order: usize,
    threshold: T,
) -> Result<ObservationPointCheck> {
    if !(y > T::zero() && y < T::PI()) {
        return Err(Error::Domain(format!(
            "observation point y = {y} must lie strictly inside (0, π)"
        )));
    }
    if order < 1 {
        return Err(Error::Domain("truncation order must be at least 1".into()));
    }
    let (argmin, min_abs_sin) = (1..=order)
        .map(|m| (m, (T::from_usize_lossy(m) * y).sin().abs()))
        .fold((1, T::infinity()), |best, cur| if cur.1 < best.1 { cur } else { best });
    Ok(ObservationPointCheck {
        y: y.to_f64_lossy(),
        modes: order,
        threshold: threshold.to_f64_lossy(),
        min_abs_sin: min_abs_sin.to_f64_lossy(),
        argmin,
        safe: min_abs_sin >= threshold,
    })
}
