//! Recovery of an unknown source `h(t)`, boundary input `v(t)` and initial
//! profile `g(x)` of the heat equation `u_t = u_xx + h(t)` on `[0, π]` from
//! the observations `u_1(t)`, `u_3(t)` and `u(y, t)`.
//!
//! The numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the double-precision instantiation used by the CLI.

pub mod error;
pub mod forward;
pub mod grid;
pub mod inverse;
pub mod linalg;
pub mod presets;
pub mod regularize;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use forward::{
    make_observations, mode_evolve, solve_fd, solve_spectral, InitialData, NoiseSpec, Observations,
    ProblemInstance, SpectralSolution, TimeFn,
};
pub use grid::{GridFn, TimeGrid};
pub use inverse::{invert, InversionConfig, Reconstruction};
pub use regularize::{amplification_profile, run_noise_study, NoiseStudy, StudyConfig};
pub use scalar::Real;
pub use spectral::{
    check_observation_point, eval_basis, mode_constants, project, synthesize, Mode, SineSeries,
};

pub type GridFn64 = GridFn<f64>;
pub type GridFn32 = GridFn<f32>;
pub type TimeGrid64 = TimeGrid<f64>;
pub type SineSeries64 = SineSeries<f64>;
pub type SineSeries32 = SineSeries<f32>;
pub type Mode64 = Mode<f64>;
pub type ProblemInstance64 = ProblemInstance<f64>;
pub type ProblemInstance32 = ProblemInstance<f32>;
pub type Observations64 = Observations<f64>;
pub type Observations32 = Observations<f32>;
pub type Reconstruction64 = Reconstruction<f64>;
