//! Forward problem: `u_t = u_xx + h(t)` on `[0, π]` with `u(0,t) = v(t)`,
//! `u(π,t) = 0`, `u(x,0) = g(x)`.
//!
//! Two independent solvers are provided: a spectral one built from per-mode
//! Duhamel integrals ([`solve_spectral`]) and a Crank–Nicolson finite
//! difference oracle ([`solve_fd`]).

mod duhamel;
mod fd;
mod modal;
mod observe;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFn, TimeGrid};
use crate::scalar::Real;
use crate::spectral::{project, Quadrature, SineSeries, DEFAULT_MODES};

pub use duhamel::mode_evolve;
pub use fd::{solve_fd, solve_fd_with, FdOptions, FdSolution};
pub use modal::{solve_spectral, SpectralSolution};
pub use observe::{make_observations, NoiseSpec, Observations};

type Closure<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// A function of time, either closed-form or sampled.
#[derive(Clone)]
pub enum TimeFn<T> {
    Closed { name: String, f: Closure<T> },
    Samples(GridFn<T>),
}

impl<T: Real> TimeFn<T> {
    pub fn closed(name: impl Into<String>, f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        TimeFn::Closed {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn constant(c: T) -> Self {
        Self::closed(format!("{c}"), move |_| c)
    }

    pub fn zero() -> Self {
        Self::closed("0", |_| T::zero())
    }

    pub fn eval(&self, t: T) -> T {
        match self {
            TimeFn::Closed { f, .. } => f(t),
            TimeFn::Samples(s) => s.interpolate(t),
        }
    }

    /// Values on `grid`; sampled inputs on a matching grid are used verbatim.
    pub fn sample_on(&self, grid: &TimeGrid<T>) -> Result<GridFn<T>> {
        match self {
            TimeFn::Samples(s) if s.grid().matches(grid) => Ok(s.clone()),
            _ => grid.sample(|t| self.eval(t)),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TimeFn::Closed { name, .. } => name.clone(),
            TimeFn::Samples(s) => format!("samples(len={}, dt={})", s.len(), s.dt()),
        }
    }
}

impl<T: Real> fmt::Debug for TimeFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimeFn({})", self.describe())
    }
}

/// Initial temperature profile.
#[derive(Clone)]
pub enum InitialData<T> {
    Series(SineSeries<T>),
    Closed { name: String, f: Closure<T> },
}

impl<T: Real> InitialData<T> {
    pub fn closed(name: impl Into<String>, f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        InitialData::Closed {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, x: T) -> T {
        match self {
            InitialData::Series(s) => s.synthesize_unchecked(x),
            InitialData::Closed { f, .. } => f(x),
        }
    }

    /// Sine coefficients up to `order`, projecting closed forms by quadrature.
    pub fn coefficients(&self, order: usize, quadrature: &Quadrature) -> Result<SineSeries<T>> {
        match self {
            InitialData::Series(s) => {
                let mut c = s.coeffs.clone();
                c.resize(order, T::zero());
                Ok(SineSeries::new(c))
            }
            InitialData::Closed { f, .. } => project(|x| f(x), order, quadrature),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            InitialData::Series(s) => format!("series{:?}", s.coeffs),
            InitialData::Closed { name, .. } => name.clone(),
        }
    }
}

impl<T: Real> fmt::Debug for InitialData<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InitialData({})", self.describe())
    }
}

/// Corner compatibility between initial and boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Compatibility {
    /// `g(0) - v(0)`.
    pub left_gap: f64,
    /// `g(π)`.
    pub right_gap: f64,
    pub compatible: bool,
}

#[derive(Debug, Clone)]
pub struct ProblemInstance<T: Real> {
    pub h: TimeFn<T>,
    pub v: TimeFn<T>,
    pub g: InitialData<T>,
    pub modes: usize,
    pub t_final: T,
    pub dt: T,
    pub quadrature: Quadrature,
}

impl<T: Real> ProblemInstance<T> {
    pub fn new(h: TimeFn<T>, v: TimeFn<T>, g: InitialData<T>, t_final: T, dt: T) -> Result<Self> {
        let p = Self {
            h,
            v,
            g,
            modes: DEFAULT_MODES,
            t_final,
            dt,
            quadrature: Quadrature::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_modes(mut self, modes: usize) -> Result<Self> {
        self.modes = modes;
        self.validate()?;
        Ok(self)
    }

    pub fn with_quadrature(mut self, quadrature: Quadrature) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes < 1 {
            return Err(Error::Domain("mode truncation M must be at least 1".into()));
        }
        TimeGrid::from_horizon(self.t_final, self.dt).map(|_| ())
    }

    pub fn grid(&self) -> TimeGrid<T> {
        TimeGrid::from_horizon(self.t_final, self.dt).expect("validated on construction")
    }

    pub fn initial_coefficients(&self) -> Result<SineSeries<T>> {
        self.g.coefficients(self.modes, &self.quadrature)
    }

    pub fn compatibility(&self) -> Compatibility {
        let tol = 1e-8;
        let left_gap = (self.g.eval(T::zero()) - self.v.eval(T::zero())).to_f64_lossy();
        let right_gap = self.g.eval(T::PI()).to_f64_lossy();
        Compatibility {
            left_gap,
            right_gap,
            compatible: left_gap.abs() <= tol && right_gap.abs() <= tol,
        }
    }
}
