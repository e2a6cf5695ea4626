//! Recovery of the first and third initial coefficients, the boundary input
//! and the source from the two observed mode amplitudes.
//!
//! With `F_m = u_m - g_m e^{-m²t}` the projected equations read
//! `f_m'(0) v + c_m h = F_m' + m² F_m` for `m = 1, 3`, a 2×2 system with
//! rows `(f_1'(0), c_1)` and `(f_3'(0), c_3)` and determinant `-32/(3π)`.

use serde::{Deserialize, Serialize};

use super::derivative::{differentiate, DerivativeScheme};
use crate::error::{Error, Result};
use crate::forward::Observations;
use crate::grid::GridFn;
use crate::scalar::Real;
use crate::spectral::{mode_constants, Mode};

/// `-32 / (3π)`.
pub fn expected_determinant<T: Real>() -> T {
    -T::lit(32.0) / (T::lit(3.0) * T::PI())
}

/// Rows `(f_m'(0), c_m)` for `m = 1` and `m = 3`.
pub fn system_matrix<T: Real>() -> [[T; 2]; 2] {
    let m1: Mode<T> = mode_constants(1).expect("m = 1");
    let m3: Mode<T> = mode_constants(3).expect("m = 3");
    [[m1.fprime0, m1.c_m], [m3.fprime0, m3.c_m]]
}

pub fn system_determinant<T: Real>() -> T {
    let a = system_matrix::<T>();
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Tolerance the determinant is checked against: `1e-12` in double
/// precision, a few ulps in lower precisions.
pub fn determinant_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(16.0))
}

/// `(u_1(0), u_3(0))`, the exact initial coefficients of modes 1 and 3.
pub fn extract_g13<T: Real>(obs: &Observations<T>) -> Result<(T, T)> {
    let t0 = obs.u1.t0();
    if t0.abs() > T::epsilon() * obs.u1.dt() {
        return Err(Error::Precondition(format!(
            "observation grid must start at t = 0, starts at {t0}"
        )));
    }
    match (obs.u1.values().first(), obs.u3.values().first()) {
        (Some(&g1), Some(&g3)) => Ok((g1, g3)),
        _ => Err(Error::Data("empty observation series".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VhOptions {
    pub scheme: DerivativeScheme,
    /// Leading samples excluded from the reported recovery.
    pub burn_in: usize,
}

impl Default for VhOptions {
    fn default() -> Self {
        Self {
            scheme: DerivativeScheme::Central,
            burn_in: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VhRecovery<T> {
    /// Boundary input on the observation grid after burn-in.
    pub v_hat: GridFn<T>,
    /// Source on the observation grid after burn-in.
    pub h_hat: GridFn<T>,
    /// `v_hat` on the full grid with burn-in samples linearly extrapolated.
    pub v_full: GridFn<T>,
    pub h_full: GridFn<T>,
    pub determinant: T,
}

/// Solves the 2×2 system pointwise for `(v, h)`.
pub fn recover_vh<T: Real>(obs: &Observations<T>, g1: T, g3: T, opts: &VhOptions) -> Result<VhRecovery<T>> {
    obs.u1.ensure_same_grid(&obs.u3, "u1 vs u3")?;
    let n = obs.u1.len();
    // The retained window must hold a full stencil so that no recovered
    // value depends only on the discarded start-up samples.
    let need = opts.burn_in + opts.scheme.min_points().max(2);
    if n < need {
        return Err(Error::Precondition(format!(
            "derivative stencil needs {} samples after a burn-in of {}, got {n} in total",
            opts.scheme.min_points().max(2),
            opts.burn_in
        )));
    }
    let determinant = system_determinant::<T>();
    let expected = expected_determinant::<T>();
    if (determinant - expected).abs() > determinant_tolerance::<T>() {
        return Err(Error::Precondition(format!(
            "system determinant {determinant} differs from -32/(3π) = {expected}"
        )));
    }
    let [[a1, c1], [a3, c3]] = system_matrix::<T>();
    let nine = T::lit(9.0);
    let f1 = obs.u1.map(|t, u| u - g1 * (-t).exp())?;
    let f3 = obs.u3.map(|t, u| u - g3 * (-nine * t).exp())?;
    let d1 = differentiate(&f1, &opts.scheme)?;
    let d3 = differentiate(&f3, &opts.scheme)?;
    let mut v = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        let r1 = d1.values()[i] + f1.values()[i];
        let r3 = d3.values()[i] + nine * f3.values()[i];
        v.push((r1 * c3 - c1 * r3) / determinant);
        h.push((a1 * r3 - a3 * r1) / determinant);
    }
    let grid = obs.u1.grid();
    let extend = |vals: &mut [T]| {
        let b = opts.burn_in;
        if b == 0 {
            return;
        }
        let (p0, p1) = (vals[b], vals[b + 1]);
        for (i, slot) in vals[..b].iter_mut().enumerate() {
            *slot = p0 - (p1 - p0) * T::from_usize_lossy(b - i);
        }
    };
    let v_raw = GridFn::on_grid(&grid, v)?;
    let h_raw = GridFn::on_grid(&grid, h)?;
    let v_hat = v_raw.trim(opts.burn_in, 0)?;
    let h_hat = h_raw.trim(opts.burn_in, 0)?;
    let mut v_ext = v_raw.into_values();
    let mut h_ext = h_raw.into_values();
    extend(&mut v_ext);
    extend(&mut h_ext);
    Ok(VhRecovery {
        v_hat,
        h_hat,
        v_full: GridFn::on_grid(&grid, v_ext)?,
        h_full: GridFn::on_grid(&grid, h_ext)?,
        determinant,
    })
}
