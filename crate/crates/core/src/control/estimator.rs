use serde::{Deserialize, Serialize};

use crate::airframe::AeroParams;
use crate::error::{Error, Result};
use crate::math::{Attitude, Body, Vec3};

/// Source of the acceleration estimate used to reconstruct `v_a3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AccelSource {
    /// `a = g - acc` from an accelerometer reading `acc = g - a`.
    Accelerometer,
    /// `a = omega x v`, assuming `v` nearly constant in the body frame.
    OmegaCrossV,
    /// `a = 0`.
    #[default]
    Zero,
}

/// Inertial acceleration estimate. `acc` is the accelerometer reading `g - a`,
/// `omega` the inertial-frame angular velocity.
pub fn acceleration_estimate(source: AccelSource, acc: Vec3, omega: Vec3, v: Vec3, g0: f64) -> Vec3 {
    match source {
        AccelSource::Accelerometer => Vec3::new(0.0, 0.0, g0) - acc,
        AccelSource::OmegaCrossV => omega.cross(v),
        AccelSource::Zero => Vec3::zeros(),
    }
}

/// `v_a ~ v_a1 i + v_a3 k` with `v_a3 = m/(c0bar |v_a1|) (g - a).k` and zero sideslip.
pub fn estimate_airvelocity(
    v_a1: f64,
    attitude: &Attitude,
    a_hat: Vec3,
    params: &AeroParams,
    g0: f64,
    eps_speed: f64,
) -> Result<Vec3<Body>> {
    if v_a1.abs() <= eps_speed {
        return Err(Error::DegeneratePitot { v_a1 });
    }
    let g = Vec3::new(0.0, 0.0, g0);
    let v_a3 = params.mass_kg / (params.c0_bar() * v_a1.abs()) * (g - a_hat).dot(attitude.k());
    Ok(Vec3::new(v_a1, 0.0, v_a3))
}
