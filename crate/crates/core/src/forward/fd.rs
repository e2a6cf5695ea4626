//! Crank–Nicolson finite differences on a uniform spatial grid.
//!
//! Boundary values are imposed strongly. The first few steps are replaced by
//! pairs of backward-Euler half steps (Rannacher start-up) so that corner
//! incompatibilities between `g` and `v` do not excite the undamped
//! high-frequency response of Crank–Nicolson.

use super::ProblemInstance;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FdOptions {
    /// Spatial nodes including both boundaries.
    pub nx: usize,
    /// Number of leading time steps taken as two backward-Euler half steps.
    pub startup_steps: usize,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            nx: 512,
            startup_steps: 2,
        }
    }
}

/// Discrete solution `u[i_t][i_x]` on the space-time grid.
#[derive(Debug, Clone)]
pub struct FdSolution<T> {
    pub x: Vec<T>,
    pub grid: TimeGrid<T>,
    u: Vec<Vec<T>>,
}

impl<T: Real> FdSolution<T> {
    pub fn at(&self, it: usize, ix: usize) -> T {
        self.u[it][ix]
    }

    pub fn row(&self, it: usize) -> &[T] {
        &self.u[it]
    }
}

/// Constant tridiagonal system `(1 + 2r) u_j - r (u_{j-1} + u_{j+1})`,
/// factored once.
struct Tridiagonal<T> {
    off: T,
    c_prime: Vec<T>,
    denom: Vec<T>,
}

impl<T: Real> Tridiagonal<T> {
    fn new(n: usize, r: T) -> Self {
        let diag = T::one() + T::lit(2.0) * r;
        let off = -r;
        let mut c_prime = vec![T::zero(); n];
        let mut denom = vec![T::zero(); n];
        for i in 0..n {
            let d = if i == 0 { diag } else { diag - off * c_prime[i - 1] };
            denom[i] = d;
            c_prime[i] = off / d;
        }
        Self { off, c_prime, denom }
    }

    fn solve(&self, rhs: &mut [T]) {
        let n = rhs.len();
        rhs[0] = rhs[0] / self.denom[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.off * rhs[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] = rhs[i] - self.c_prime[i] * rhs[i + 1];
        }
    }
}

pub fn solve_fd<T: Real>(p: &ProblemInstance<T>, nx: usize) -> Result<FdSolution<T>> {
    solve_fd_with(
        p,
        &FdOptions {
            nx,
            ..FdOptions::default()
        },
    )
}

pub fn solve_fd_with<T: Real>(p: &ProblemInstance<T>, opts: &FdOptions) -> Result<FdSolution<T>> {
    p.validate()?;
    let nx = opts.nx;
    if nx < 16 {
        return Err(Error::Domain(format!("finite differences need nx ≥ 16, got {nx}")));
    }
    let grid = p.grid();
    let dt = grid.dt;
    let dx = T::PI() / T::from_usize_lossy(nx - 1);
    let x: Vec<T> = (0..nx).map(|j| dx * T::from_usize_lossy(j)).collect();
    let half = dt / T::lit(2.0);
    // Both schemes share the left-hand operator I - (dt/2) D².
    let r = half / (dx * dx);
    let system = Tridiagonal::new(nx - 2, r);

    let check = |what: &str, v: T, t: T| -> Result<T> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Data(format!("non-finite {what} at t = {t}")))
        }
    };

    let mut u0: Vec<T> = x.iter().map(|&xi| p.g.eval(xi)).collect();
    if let Some(j) = u0.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite initial data at x = {}", x[j])));
    }
    u0[0] = check("boundary value", p.v.eval(T::zero()), T::zero())?;
    u0[nx - 1] = T::zero();

    let mut rows = Vec::with_capacity(grid.len);
    rows.push(u0);
    let mut rhs = vec![T::zero(); nx - 2];

    // Backward Euler over `tau` = dt/2 starting from `prev` at time `t`.
    let be_half = |prev: &[T], t: T, rhs: &mut Vec<T>| -> Result<Vec<T>> {
        let tn = t + half;
        let vn = check("boundary value", p.v.eval(tn), tn)?;
        let hn = check("source", p.h.eval(tn), tn)?;
        for j in 1..nx - 1 {
            rhs[j - 1] = prev[j] + half * hn;
        }
        rhs[0] = rhs[0] + r * vn;
        system.solve(rhs);
        let mut next = Vec::with_capacity(nx);
        next.push(vn);
        next.extend_from_slice(rhs);
        next.push(T::zero());
        Ok(next)
    };

    for n in 1..grid.len {
        let t_prev = grid.time(n - 1);
        let prev = rows.last().expect("initial row");
        let next = if n <= opts.startup_steps {
            let mid = be_half(prev, t_prev, &mut rhs)?;
            be_half(&mid, t_prev + half, &mut rhs)?
        } else {
            let t_next = grid.time(n);
            let v_next = check("boundary value", p.v.eval(t_next), t_next)?;
            let h_sum = check("source", p.h.eval(t_prev), t_prev)?
                + check("source", p.h.eval(t_next), t_next)?;
            for j in 1..nx - 1 {
                let lap = prev[j - 1] - T::lit(2.0) * prev[j] + prev[j + 1];
                rhs[j - 1] = prev[j] + r * lap + half * h_sum;
            }
            rhs[0] = rhs[0] + r * v_next;
            system.solve(&mut rhs);
            let mut next = Vec::with_capacity(nx);
            next.push(v_next);
            next.extend_from_slice(&rhs);
            next.push(T::zero());
            next
        };
        rows.push(next);
    }
    Ok(FdSolution { x, grid, u: rows })
}
