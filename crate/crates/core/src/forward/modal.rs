use rayon::prelude::*;

use super::{mode_evolve, ProblemInstance};
use crate::error::{Error, Result};
use crate::grid::{GridFn, TimeGrid};
use crate::scalar::Real;
use crate::spectral::{basis_unchecked, modes, Mode, SineSeries};

/// Mode amplitudes `u_m(t)`, `m = 1..M`, together with the boundary input
/// they were driven by.
#[derive(Debug, Clone)]
pub struct SpectralSolution<T> {
    pub modes: Vec<Mode<T>>,
    pub amplitudes: Vec<GridFn<T>>,
    pub boundary: GridFn<T>,
}

impl<T: Real> SpectralSolution<T> {
    /// Evolves every mode from `initial` under forcing `(v, h)`.
    pub fn evolve(initial: &SineSeries<T>, order: usize, v: &GridFn<T>, h: &GridFn<T>) -> Result<Self> {
        v.ensure_same_grid(h, "spectral forcing")?;
        let modes = modes::<T>(order);
        let amplitudes = modes
            .par_iter()
            .map(|mode| mode_evolve(mode, initial.coeff(mode.m), v, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            modes,
            amplitudes,
            boundary: v.clone(),
        })
    }

    pub fn grid(&self) -> TimeGrid<T> {
        self.boundary.grid()
    }

    pub fn amplitude(&self, m: usize) -> Option<&GridFn<T>> {
        self.amplitudes.get(m.checked_sub(1)?)
    }

    /// `u(x, t_i)` from the truncated expansion.
    ///
    /// The boundary-driven part of the series, whose coefficients decay only
    /// like `1/m`, is summed in closed form: `Σ_m (f_m'(0)/m²) f_m(x) = 1 - x/π`.
    /// Only the remainder `u_m - v f_m'(0)/m²` is truncated at `M`.
    pub fn field(&self, x: T, i: usize) -> T {
        let v = self.boundary.values()[i];
        self.modes
            .iter()
            .zip(&self.amplitudes)
            .fold(v * (T::one() - x / T::PI()), |acc, (mode, u)| {
                acc + (u.values()[i] - v * mode.lift_coefficient()) * basis_unchecked(mode.m, x)
            })
    }

    /// Plain partial sum `Σ_{m ≤ M} u_m(t_i) f_m(x)`, without the boundary lift.
    pub fn partial_sum(&self, x: T, i: usize) -> T {
        self.modes
            .iter()
            .zip(&self.amplitudes)
            .fold(T::zero(), |acc, (mode, u)| acc + u.values()[i] * basis_unchecked(mode.m, x))
    }

    /// Time series `u(y, ·)` at a fixed point.
    pub fn point_series(&self, y: T) -> Result<GridFn<T>> {
        if !(y >= T::zero() && y <= T::PI()) {
            return Err(Error::Domain(format!("position {y} outside [0, π]")));
        }
        let grid = self.grid();
        let basis: Vec<T> = self.modes.iter().map(|m| basis_unchecked(m.m, y)).collect();
        let ramp = T::one() - y / T::PI();
        let values = (0..grid.len)
            .map(|i| {
                let v = self.boundary.values()[i];
                self.modes
                    .iter()
                    .zip(&self.amplitudes)
                    .zip(&basis)
                    .fold(v * ramp, |acc, ((mode, u), &b)| {
                        acc + (u.values()[i] - v * mode.lift_coefficient()) * b
                    })
            })
            .collect();
        GridFn::on_grid(&grid, values)
    }
}

/// Spectral solution of a problem instance with `g_m` from projection of `g`.
pub fn solve_spectral<T: Real>(p: &ProblemInstance<T>) -> Result<SpectralSolution<T>> {
    p.validate()?;
    let grid = p.grid();
    let v = p.v.sample_on(&grid)?;
    let h = p.h.sample_on(&grid)?;
    let g = p.initial_coefficients()?;
    SpectralSolution::evolve(&g, p.modes, &v, &h)
}
