//! Named closed-form problem data.


use crate::error::{Error, Result};
use crate::forward::{InitialData, ProblemInstance, TimeFn};
use crate::scalar::Real;
use crate::spectral::SineSeries;

pub const PRESET_NAMES: &[&str] = &["decay1", "steady", "source1", "generic", "fourmode"];

pub fn time_function<T: Real>(name: &str) -> Result<TimeFn<T>> {
    Ok(match name {
        "zero" => TimeFn::closed("0", |_| T::zero()),
        "one" => TimeFn::closed("1", |_| T::one()),
        "one_plus_cos" => TimeFn::closed("1 + cos t", |t: T| T::one() + t.cos()),
        "exp_minus_one" => TimeFn::closed("e^{-t} - 1", |t: T| (-t).exp() - T::one()),
        other => return Err(Error::Domain(format!("unknown time function `{other}`"))),
    })
}

pub fn initial_function<T: Real>(name: &str) -> Result<InitialData<T>> {
    Ok(match name {
        "zero" => InitialData::Series(SineSeries::zeros(1)),
        "f1" => InitialData::Series(SineSeries::new(vec![T::one()])),
        "ramp" => InitialData::closed("1 - x/π", |x: T| T::one() - x / T::PI()),
        "sin_x_plus_half_sin_2x" => {
            InitialData::Series(SineSeries::from_sine_amplitudes(&[T::one(), T::lit(0.5)]))
        }
        "four_mode" => InitialData::Series(SineSeries::from_sine_amplitudes(&four_mode_amplitudes())),
        other => return Err(Error::Domain(format!("unknown initial profile `{other}`"))),
    })
}

/// Sine amplitudes `1, 1/2, 1/4, 1/8` of the four-mode initial profile.
pub fn four_mode_amplitudes<T: Real>() -> Vec<T> {
    [1.0, 0.5, 0.25, 0.125].iter().map(|&a| T::lit(a)).collect()
}

/// `(h, v, g)` names of a preset.
pub fn preset_parts(name: &str) -> Result<(&'static str, &'static str, &'static str)> {
    Ok(match name {
        // g = f_1, no forcing.
        "decay1" => ("zero", "zero", "f1"),
        // v ≡ 1 with the matching steady profile 1 - x/π.
        "steady" => ("zero", "one", "ramp"),
        // Unit source from rest.
        "source1" => ("one", "zero", "zero"),
        // Corner compatible: g(0) = v(0) = 0 and g(π) = 0.
        "generic" => ("one_plus_cos", "exp_minus_one", "sin_x_plus_half_sin_2x"),
        "fourmode" => ("one_plus_cos", "exp_minus_one", "four_mode"),
        other => {
            return Err(Error::Domain(format!(
                "unknown preset `{other}` (expected one of {PRESET_NAMES:?})"
            )))
        }
    })
}

pub fn preset<T: Real>(name: &str, modes: usize, t_final: T, dt: T) -> Result<ProblemInstance<T>> {
    let (h, v, g) = preset_parts(name)?;
    ProblemInstance::new(time_function(h)?, time_function(v)?, initial_function(g)?, t_final, dt)?
        .with_modes(modes)
}

pub type Truth = fn(f64) -> f64;

/// Closed-form `h` and `v` of a preset evaluated in `f64`, for error metrics.
pub fn preset_truth(name: &str) -> Result<(Truth, Truth)> {
    fn zero(_: f64) -> f64 {
        0.0
    }
    fn one(_: f64) -> f64 {
        1.0
    }
    fn one_plus_cos(t: f64) -> f64 {
        1.0 + t.cos()
    }
    fn exp_minus_one(t: f64) -> f64 {
        (-t).exp() - 1.0
    }
    let pick = |n: &str| -> Truth {
        match n {
            "one" => one,
            "one_plus_cos" => one_plus_cos,
            "exp_minus_one" => exp_minus_one,
            _ => zero,
        }
    };
    let (h, v, _) = preset_parts(name)?;
    Ok((pick(h), pick(v)))
}
