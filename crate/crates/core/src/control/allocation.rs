use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::math::{skew, Body, SatProfile, Vec3};

use super::Gains;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationParams {
    /// Diagonal of `k_gamma Abar^-1 J`.
    pub gain: [f64; 3],
    pub k_delta: f64,
    pub k_delta_bar: f64,
    pub max_angle: [f64; 3],
    pub rate_limit: f64,
    /// `(diag(Abar), J)` when the gyroscopic feedforward `S(omega) J omega*` is used.
    pub gyro: Option<([f64; 3], Matrix3<f64>)>,
}

impl AllocationParams {
    pub fn from_gains(g: &Gains) -> Self {
        Self {
            gain: g.alloc_gain,
            k_delta: g.k_delta,
            k_delta_bar: g.k_delta_bar,
            max_angle: g.delta_max_rad,
            rate_limit: g.delta_rate_max_radps,
            gyro: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub delta_star: [f64; 3],
    /// Applied mean angle rate over the step.
    pub rate: [f64; 3],
    pub delta: [f64; 3],
}

/// Surface angles tracking `delta* = -(1/|v_a|^2) G (omega - omega*)`, driven by
/// `delta' = -kb delta + kb sat(delta + ubar/kb)` with `ubar` the rate-limited
/// `-k_delta (delta - delta*)`. Inactive channels are driven to zero.
#[allow(clippy::too_many_arguments)]
pub fn surface_allocation(
    omega: Vec3<Body>,
    omega_star: Vec3<Body>,
    airspeed: f64,
    delta: [f64; 3],
    active: [bool; 3],
    params: &AllocationParams,
    eps_speed: f64,
    dt: f64,
) -> Result<Allocation> {
    if airspeed <= eps_speed {
        return Err(Error::AllocationSingular { speed: airspeed });
    }
    let q = airspeed * airspeed;
    let err = omega - omega_star;
    let gyro = match params.gyro {
        Some((eff, j)) => {
            let t = skew(omega.to_na()) * j * omega_star.to_na();
            [t[0] / eff[0], t[1] / eff[1], t[2] / eff[2]]
        }
        None => [0.0; 3],
    };
    let mut out = Allocation { delta_star: [0.0; 3], rate: [0.0; 3], delta };
    for c in 0..3 {
        let star = if active[c] { (gyro[c] - params.gain[c] * err[c]) / q } else { 0.0 };
        let u = (-params.k_delta * (delta[c] - star)).clamp(-params.rate_limit, params.rate_limit);
        let kb = params.k_delta_bar;
        let sat = SatProfile::new(params.max_angle[c])?;
        let f = |d: f64| -kb * d + kb * sat.sat_scalar(d + u / kb);
        let k1 = f(delta[c]);
        let k2 = f(delta[c] + 0.5 * dt * k1);
        let k3 = f(delta[c] + 0.5 * dt * k2);
        let k4 = f(delta[c] + dt * k3);
        let next = delta[c] + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let step = (next - delta[c]).clamp(-params.rate_limit * dt, params.rate_limit * dt);
        out.delta_star[c] = star;
        out.delta[c] = delta[c] + step;
        out.rate[c] = step / dt;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p() -> AllocationParams {
        AllocationParams::from_gains(&Gains::default())
    }

    #[test]
    fn zero_rate_error_gives_zero_target() {
        let w = Vec3::new(0.2, -0.1, 0.3);
        let a = surface_allocation(w, w, 10.0, [0.0; 3], [true; 3], &p(), 0.5, 0.004).unwrap();
        assert_eq!(a.delta_star, [0.0; 3]);
        assert_eq!(a.delta, [0.0; 3]);
    }

    #[test]
    fn gain_substitution_example() {
        let a =
            surface_allocation(Vec3::new(0.1, 0.0, 0.0), Vec3::zeros(), 10.0, [0.0; 3], [true; 3], &p(), 0.5, 0.004)
                .unwrap();
        assert_abs_diff_eq!(a.delta_star[0], -0.045, epsilon = 1e-15);
        assert_eq!((a.delta_star[1], a.delta_star[2]), (0.0, 0.0));
    }

    #[test]
    fn rate_and_angle_limits() {
        let params = p();
        let dt = 0.004;
        let mut d = [0.0; 3];
        for _ in 0..5000 {
            let a = surface_allocation(
                Vec3::new(5.0, -5.0, 5.0),
                Vec3::zeros(),
                6.0,
                d,
                [true, true, false],
                &params,
                0.5,
                dt,
            )
            .unwrap();
            for ((new, old), max) in a.delta.iter().zip(d).zip(params.max_angle) {
                assert!((new - old).abs() <= params.rate_limit * dt + 1e-15);
                assert!(new.abs() <= max);
            }
            d = a.delta;
        }
        assert_eq!(d[2], 0.0);
        // saturated channels settle where delta = sat(delta + rate/kb)
        let sat = SatProfile::new(params.max_angle[0]).unwrap();
        let mut eq = 0.0;
        for _ in 0..10_000 {
            eq = sat.sat_scalar(eq + params.rate_limit / params.k_delta_bar);
        }
        assert_abs_diff_eq!(d[0], -eq, epsilon = 1e-6);
        assert_abs_diff_eq!(d[1], eq, epsilon = 1e-6);
    }

    #[test]
    fn singular_at_low_airspeed() {
        let r = surface_allocation(Vec3::zeros(), Vec3::zeros(), 0.2, [0.0; 3], [true; 3], &p(), 0.5, 0.004);
        assert!(matches!(r, Err(Error::AllocationSingular { .. })));
    }
}
