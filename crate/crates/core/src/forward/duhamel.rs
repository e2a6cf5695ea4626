//! Exponential-integrator evolution of a single mode amplitude.
//!
//! Each amplitude obeys `u' + λu = φ(t)`, `u(0) = g_m`, with forcing
//! `φ = f_m'(0) v + c_m h`. Between samples the forcing is taken to be
//! linear, and the resulting ODE is integrated exactly:
//!
//! `u_{n+1} = e^{-z} u_n + Δt [φ₁(-z) φ_n + φ₂(-z) (φ_{n+1} - φ_n)]`, `z = λΔt`.

use crate::error::Result;
use crate::grid::GridFn;
use crate::scalar::Real;
use crate::spectral::Mode;

/// `φ₁(-z) = (1 - e^{-z}) / z` and `φ₂(-z) = (e^{-z} - 1 + z) / z²` for `z ≥ 0`.
pub(crate) fn phi_functions<T: Real>(z: T) -> (T, T) {
    if z < T::one() {
        // Taylor series: φ_k(-z) = Σ_j (-z)^j / (j + k)!
        let mut phi1 = T::zero();
        let mut phi2 = T::zero();
        let mut term1 = T::one(); // (-z)^j / (j+1)!
        let mut term2 = T::lit(0.5); // (-z)^j / (j+2)!
        for j in 0..40 {
            phi1 = phi1 + term1;
            phi2 = phi2 + term2;
            let jj = T::from_usize_lossy(j);
            term1 = term1 * (-z) / (jj + T::lit(2.0));
            term2 = term2 * (-z) / (jj + T::lit(3.0));
            if term1.abs() < T::epsilon() * T::epsilon() {
                break;
            }
        }
        (phi1, phi2)
    } else {
        let em1 = (-z).exp_m1();
        (-em1 / z, (em1 + z) / (z * z))
    }
}

/// Precomputed one-step propagator for a fixed mode and step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Propagator<T> {
    decay: T,
    w_now: T,
    w_next: T,
}

impl<T: Real> Propagator<T> {
    pub(crate) fn new(lambda: T, dt: T) -> Self {
        let z = lambda * dt;
        let (p1, p2) = phi_functions(z);
        Self {
            decay: (-z).exp(),
            w_now: dt * (p1 - p2),
            w_next: dt * p2,
        }
    }

    #[inline]
    pub(crate) fn step(&self, u: T, forcing_now: T, forcing_next: T) -> T {
        self.decay * u + self.w_now * forcing_now + self.w_next * forcing_next
    }
}

/// Evolves one mode amplitude on the grid shared by `v` and `h`.
pub fn mode_evolve<T: Real>(mode: &Mode<T>, g_m: T, v: &GridFn<T>, h: &GridFn<T>) -> Result<GridFn<T>> {
    v.ensure_same_grid(h, "mode_evolve forcing")?;
    let prop = Propagator::new(mode.lambda, v.dt());
    let (vs, hs) = (v.values(), h.values());
    let mut out = Vec::with_capacity(vs.len());
    if !vs.is_empty() {
        out.push(g_m);
    }
    let mut u = g_m;
    let mut f_now = if vs.is_empty() { T::zero() } else { mode.forcing(vs[0], hs[0]) };
    for i in 1..vs.len() {
        let f_next = mode.forcing(vs[i], hs[i]);
        u = prop.step(u, f_now, f_next);
        out.push(u);
        f_now = f_next;
    }
    GridFn::new(v.t0(), v.dt(), out)
}
