use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{solve_spectral, ProblemInstance, SpectralSolution};
use crate::error::{Error, Result};
use crate::grid::GridFn;
use crate::scalar::Real;
use crate::spectral::{check_observation_point, ObservationPointCheck};

/// Additive i.i.d. Gaussian noise on the observed series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    #[default]
    None,
    /// Standard deviation given directly.
    Absolute { amplitude: f64 },
    /// Standard deviation `level · max_t |series(t)|`, per series.
    Relative { level: f64 },
}

impl NoiseSpec {
    pub fn is_none(&self) -> bool {
        match *self {
            NoiseSpec::None => true,
            NoiseSpec::Absolute { amplitude } => amplitude == 0.0,
            NoiseSpec::Relative { level } => level == 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let a = match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::Absolute { amplitude } => amplitude,
            NoiseSpec::Relative { level } => level,
        };
        if a.is_finite() && a >= 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!("noise amplitude must be non-negative, got {a}")))
        }
    }

    fn sigma_for<T: Real>(&self, clean: &GridFn<T>) -> T {
        match *self {
            NoiseSpec::None => T::zero(),
            NoiseSpec::Absolute { amplitude } => T::lit(amplitude),
            NoiseSpec::Relative { level } => T::lit(level) * clean.max_abs(),
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            NoiseSpec::None => "none".into(),
            NoiseSpec::Absolute { amplitude } => format!("absolute:{amplitude:e}"),
            NoiseSpec::Relative { level } => format!("relative:{level:e}"),
        }
    }
}

/// The observed triple `u_1(t)`, `u_3(t)`, `u(y, t)` on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observations<T> {
    pub u1: GridFn<T>,
    pub u3: GridFn<T>,
    pub uy: GridFn<T>,
    pub y: T,
    /// Mode truncation the data are interpreted with.
    pub modes: usize,
}

impl<T: Real> Observations<T> {
    pub fn new(u1: GridFn<T>, u3: GridFn<T>, uy: GridFn<T>, y: T, modes: usize) -> Result<Self> {
        u1.ensure_same_grid(&u3, "u1 vs u3")?;
        u1.ensure_same_grid(&uy, "u1 vs uy")?;
        if !(y > T::zero() && y < T::PI()) {
            return Err(Error::Domain(format!("observation point y = {y} outside (0, π)")));
        }
        if modes < 1 {
            return Err(Error::Domain("mode truncation must be at least 1".into()));
        }
        Ok(Self { u1, u3, uy, y, modes })
    }

    pub fn check_point(&self, threshold: T) -> Result<ObservationPointCheck> {
        check_observation_point(self.y, self.modes, threshold)
    }
}

pub(crate) fn observe_solution<T: Real>(sol: &SpectralSolution<T>, y: T) -> Result<(GridFn<T>, GridFn<T>, GridFn<T>)> {
    let u1 = sol
        .amplitude(1)
        .cloned()
        .ok_or_else(|| Error::Domain("observations need at least one mode".into()))?;
    let u3 = match sol.amplitude(3) {
        Some(u) => u.clone(),
        None => GridFn::zeros(&sol.grid()),
    };
    let uy = sol.point_series(y)?;
    Ok((u1, u3, uy))
}

/// Simulates the observation triple, optionally corrupted by seeded noise.
///
/// Noise draws are taken in the order `u1`, `u3`, `uy` from a ChaCha8 stream
/// seeded with `seed`, so results are reproducible bit-for-bit.
pub fn make_observations<T: Real>(
    p: &ProblemInstance<T>,
    y: T,
    noise: &NoiseSpec,
    seed: u64,
    threshold: T,
) -> Result<Observations<T>> {
    check_observation_point(y, p.modes, threshold)?.into_result()?;
    noise.validate()?;
    let sol = solve_spectral(p)?;
    let (mut u1, mut u3, mut uy) = observe_solution(&sol, y)?;
    if !noise.is_none() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for series in [&mut u1, &mut u3, &mut uy] {
            let sigma = noise.sigma_for(series);
            let noisy = series
                .values()
                .iter()
                .map(|&v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v + sigma * T::lit(z)
                })
                .collect();
            *series = GridFn::on_grid(&series.grid(), noisy)?;
        }
    }
    Observations::new(u1, u3, uy, y, p.modes)
}
