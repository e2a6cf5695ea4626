//! Uniformly sampled functions of time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A uniform time grid `t0, t0 + dt, ..., t0 + (len - 1) dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T> {
    pub t0: T,
    pub dt: T,
    pub len: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t0: T, dt: T, len: usize) -> Result<Self> {
        if !dt.is_finite() || dt <= T::zero() || !t0.is_finite() {
            return Err(Error::Domain(format!("invalid grid: t0 = {t0}, dt = {dt}")));
        }
        Ok(Self { t0, dt, len })
    }

    /// Grid on `[0, t_final]` with `t_final / dt` steps. The step count must be
    /// integral to within a relative `1e-9`.
    pub fn from_horizon(t_final: T, dt: T) -> Result<Self> {
        if t_final.is_nan() || dt.is_nan() || t_final <= T::zero() || dt <= T::zero() {
            return Err(Error::Domain(format!(
                "horizon and step must be positive (T = {t_final}, dt = {dt})"
            )));
        }
        let steps = t_final / dt;
        let rounded = steps.round();
        let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
        if (steps - rounded).abs() > tol * rounded.max(T::one()) {
            return Err(Error::Domain(format!(
                "T / dt = {steps} is not an integer number of steps"
            )));
        }
        let n = rounded.to_usize().ok_or_else(|| Error::Domain("step count overflow".into()))?;
        Self::new(T::zero(), dt, n + 1)
    }

    #[inline]
    pub fn time(&self, i: usize) -> T {
        self.t0 + self.dt * T::from_usize_lossy(i)
    }

    pub fn t_final(&self) -> T {
        self.time(self.len.saturating_sub(1))
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len).map(move |i| self.time(i))
    }

    /// Index of the sample closest to `t`, clamped to the grid.
    pub fn nearest_index(&self, t: T) -> usize {
        if self.len == 0 {
            return 0;
        }
        let k = ((t - self.t0) / self.dt).round();
        if k <= T::zero() {
            0
        } else {
            k.to_usize().unwrap_or(usize::MAX).min(self.len - 1)
        }
    }

    /// Same start, step and length up to a relative `1e-12` on the step.
    pub fn matches(&self, other: &Self) -> bool {
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
        self.len == other.len
            && (self.dt - other.dt).abs() <= tol * self.dt
            && (self.t0 - other.t0).abs() <= tol * self.dt * T::from_usize_lossy(self.len.max(1))
    }

    pub fn sample(&self, f: impl Fn(T) -> T) -> Result<GridFn<T>> {
        GridFn::new(self.t0, self.dt, self.times().map(f).collect())
    }
}

/// A real function sampled on a [`TimeGrid`]. All samples are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFn<T> {
    t0: T,
    dt: T,
    values: Vec<T>,
}

impl<T: Real> GridFn<T> {
    pub fn new(t0: T, dt: T, values: Vec<T>) -> Result<Self> {
        TimeGrid::new(t0, dt, values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite sample at index {i}")));
        }
        Ok(Self { t0, dt, values })
    }

    pub fn on_grid(grid: &TimeGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of length {}",
                values.len(),
                grid.len
            )));
        }
        Self::new(grid.t0, grid.dt, values)
    }

    pub fn zeros(grid: &TimeGrid<T>) -> Self {
        Self {
            t0: grid.t0,
            dt: grid.dt,
            values: vec![T::zero(); grid.len],
        }
    }

    pub fn grid(&self) -> TimeGrid<T> {
        TimeGrid {
            t0: self.t0,
            dt: self.dt,
            len: self.values.len(),
        }
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn time(&self, i: usize) -> T {
        self.grid().time(i)
    }

    /// Piecewise-linear interpolation; constant extrapolation outside the grid.
    pub fn interpolate(&self, t: T) -> T {
        let n = self.values.len();
        if n == 0 {
            return T::zero();
        }
        let s = (t - self.t0) / self.dt;
        if s <= T::zero() {
            return self.values[0];
        }
        let i = s.floor().to_usize().unwrap_or(usize::MAX);
        if i >= n - 1 {
            return self.values[n - 1];
        }
        let frac = s - T::from_usize_lossy(i);
        self.values[i] + (self.values[i + 1] - self.values[i]) * frac
    }

    pub fn ensure_same_grid(&self, other: &Self, what: &str) -> Result<()> {
        if self.grid().matches(&other.grid()) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: ({}, {}, {}) vs ({}, {}, {})",
                self.t0,
                self.dt,
                self.len(),
                other.t0,
                other.dt,
                other.len()
            )))
        }
    }

    /// Pointwise combination of two functions on an identical grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.ensure_same_grid(other, "zip_with")?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.t0, self.dt, values)
    }

    pub fn map(&self, f: impl Fn(T, T) -> T) -> Result<Self> {
        let grid = self.grid();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(grid.time(i), v))
            .collect();
        Self::new(self.t0, self.dt, values)
    }

    /// Drops `front` samples from the start and `back` from the end.
    pub fn trim(&self, front: usize, back: usize) -> Result<Self> {
        if front + back >= self.len() {
            return Err(Error::Data(format!(
                "cannot trim {front}+{back} samples from a series of length {}",
                self.len()
            )));
        }
        Ok(Self {
            t0: self.time(front),
            dt: self.dt,
            values: self.values[front..self.len() - back].to_vec(),
        })
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_requires_integral_steps() {
        let g = TimeGrid::from_horizon(6.0, 1e-3).unwrap();
        assert_eq!(g.len, 6001);
        assert!((g.t_final() - 6.0f64).abs() < 1e-12);
        assert!(TimeGrid::from_horizon(1.0, 0.3).is_err());
        assert!(TimeGrid::from_horizon(-1.0, 0.1).is_err());
    }

    #[test]
    fn rejects_non_finite_samples() {
        assert!(GridFn::new(0.0, 0.1, vec![1.0, f64::NAN]).is_err());
        assert!(GridFn::new(0.0, 0.1, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn mismatched_grids_do_not_combine() {
        let a = GridFn::new(0.0, 0.1, vec![1.0; 4]).unwrap();
        let b = GridFn::new(0.0, 0.2, vec![1.0; 4]).unwrap();
        let c = GridFn::new(0.1, 0.1, vec![1.0; 4]).unwrap();
        assert!(matches!(a.zip_with(&b, |x, y| x - y), Err(Error::GridMismatch(_))));
        assert!(a.zip_with(&c, |x, y| x - y).is_err());
        assert!(a.zip_with(&a, |x, y| x - y).is_ok());
    }

    #[test]
    fn interpolation_and_trim() {
        let f = GridFn::new(0.0, 0.5, vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(f.interpolate(0.25), 0.5);
        assert_eq!(f.interpolate(0.75), 2.5);
        assert_eq!(f.interpolate(-1.0), 0.0);
        assert_eq!(f.interpolate(7.0), 4.0);
        let t = f.trim(1, 0).unwrap();
        assert_eq!(t.t0(), 0.5);
        assert_eq!(t.values(), &[1.0, 4.0]);
        assert!(f.trim(2, 1).is_err());
    }

    #[test]
    fn nearest_index_clamps() {
        let g = TimeGrid::new(0.0, 0.1, 11).unwrap();
        assert_eq!(g.nearest_index(0.449), 4);
        assert_eq!(g.nearest_index(-3.0), 0);
        assert_eq!(g.nearest_index(50.0), 10);
    }
}
