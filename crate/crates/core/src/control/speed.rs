use crate::airframe::AeroParams;
use crate::error::{Error, Result};
use crate::math::Vec3;

use super::Gains;

/// `gbar = g - (c0bar/m)|v_a| v_a` and `Tbar = T + 2 c1 v_a1 |v_a|`, with `v_a1 = v_a.i`.
pub fn gbar_and_tbar(v_a: Vec3, i: Vec3, thrust: f64, params: &AeroParams, g0: f64) -> (Vec3, f64) {
    let speed = v_a.norm();
    let g = Vec3::new(0.0, 0.0, g0);
    let gbar = g - v_a * (params.c0_bar() / params.mass_kg * speed);
    (gbar, thrust + 2.0 * params.c1_kg_per_m * v_a.dot(i) * speed)
}

/// Inverse of the `Tbar` map.
pub fn thrust_from_tbar(tbar: f64, v_a: Vec3, i: Vec3, params: &AeroParams) -> f64 {
    tbar - 2.0 * params.c1_kg_per_m * v_a.dot(i) * v_a.norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedLoopOutput {
    /// `Tbar` for the inertial-speed loop, `T` for the airspeed loop.
    pub thrust: f64,
    pub e_v: f64,
    pub alpha_e: f64,
}

/// `dI/dt = k_T2 k_T3 (-I + sat(I + e/k_T3))`.
pub fn iev_rate(i_ev: f64, e_v: f64, gains: &Gains) -> f64 {
    let sat = gains.ev_profile();
    gains.k_t2_at(e_v) * gains.k_t3 * (-i_ev + sat.sat_scalar(i_ev + e_v / gains.k_t3))
}

/// RK4 step of the bounded integrator with `e_v` held over the step.
pub fn integrate_iev(i_ev: f64, e_v: f64, gains: &Gains, dt: f64) -> f64 {
    let f = |i: f64| iev_rate(i, e_v, gains);
    let k1 = f(i_ev);
    let k2 = f(i_ev + 0.5 * dt * k1);
    let k3 = f(i_ev + 0.5 * dt * k2);
    let k4 = f(i_ev + dt * k3);
    i_ev + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

fn feedback(e_v: f64, i_ev: f64, gains: &Gains) -> (f64, f64) {
    let alpha_e = gains.ev_profile().alpha((i_ev + e_v / gains.k_t3).abs());
    (gains.k_t1(e_v) * e_v + gains.k_t2_at(e_v) * alpha_e * i_ev, alpha_e)
}

/// Inertial-speed loop:
/// `Tbar = m(-gbar.h + v*' - k_T1 e_v - k_T2 alpha_e I) / (i.h)`.
#[allow(clippy::too_many_arguments)]
pub fn speed_thrust(
    speed: f64,
    v_star: f64,
    v_star_dot: f64,
    h: Vec3,
    i: Vec3,
    gbar: Vec3,
    i_ev: f64,
    gains: &Gains,
    mass: f64,
) -> Result<SpeedLoopOutput> {
    let ih = i.dot(h);
    if ih.abs() <= gains.eps_ih {
        return Err(Error::HeadingSingular { ih });
    }
    let e_v = speed - v_star;
    let (fb, alpha_e) = feedback(e_v, i_ev, gains);
    let tbar = mass * (-gbar.dot(h) + v_star_dot - fb) / ih;
    Ok(SpeedLoopOutput { thrust: tbar, e_v, alpha_e })
}

/// Airspeed loop on `v_a1 = v_a.i`:
/// `T = m(v*' - (g - v_w').i - omega.(i x v_a)) + c0|v_a|v_a1 - m(k_T1 e_v + k_T2 alpha_e I)`.
#[allow(clippy::too_many_arguments)]
pub fn airspeed_thrust(
    v_a: Vec3,
    omega: Vec3,
    v_star: f64,
    v_star_dot: f64,
    i: Vec3,
    wind_rate: Vec3,
    i_ev: f64,
    gains: &Gains,
    params: &AeroParams,
    g0: f64,
) -> SpeedLoopOutput {
    let m = params.mass_kg;
    let g = Vec3::new(0.0, 0.0, g0);
    let v_a1 = v_a.dot(i);
    let t_star =
        m * (v_star_dot - (g - wind_rate).dot(i) - omega.dot(i.cross(v_a))) + params.c0_kg_per_m * v_a.norm() * v_a1;
    let e_v = v_a1 - v_star;
    let (fb, alpha_e) = feedback(e_v, i_ev, gains);
    SpeedLoopOutput { thrust: t_star - m * fb, e_v, alpha_e }
}

/// Clamp to `[t_min, t_max]`; the flag reports a demand below `t_min`, at which
/// point only the heading objective is kept and `v*` follows the measured speed.
pub fn thrust_clamp_policy(t_raw: f64, t_min: f64, t_max: f64) -> (f64, bool) {
    if t_raw < t_min {
        (t_min, true)
    } else {
        (t_raw.min(t_max), false)
    }
}
