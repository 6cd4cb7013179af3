use crate::error::{Error, Result};
use crate::math::{rotate_about, Body, Vec3};

use super::Gains;

/// Desired body triad, its angular velocity and the quantities it was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredFrame {
    pub i: Vec3,
    pub j: Vec3,
    pub k: Vec3,
    /// Angular velocity of the triad; zero until the controller differentiates it.
    pub omega: Vec3,
    pub a_star: Vec3,
    pub gbar: Vec3,
    /// The attack-angle guard replaced `i`.
    pub guarded: bool,
}

impl DesiredFrame {
    pub fn triad(&self) -> [Vec3; 3] {
        [self.i, self.j, self.k]
    }
}

/// `a* = v*' h + |v|(omega_bar_h x h)`, `i = (a* - gbar)/|a* - gbar|`,
/// `j = (v_a x i)/|v_a x i|`, `k = i x j`. Does not use the aircraft attitude.
pub fn desired_frame(
    h: Vec3,
    speed: f64,
    v_star_dot: f64,
    omega_bar_h: Vec3,
    gbar: Vec3,
    v_a: Vec3,
    gains: &Gains,
) -> Result<DesiredFrame> {
    let a_star = h * v_star_dot + omega_bar_h.cross(h) * speed;
    let w = a_star - gbar;
    let wn = w.norm();
    if wn <= gains.eps_acc_mps2 {
        return Err(Error::FrameSingular("|a* - gbar| below threshold"));
    }
    let i = w / wn;
    let c = v_a.cross(i);
    let cn = c.norm();
    if cn <= gains.eps_cross_mps {
        return Err(Error::FrameSingular("|v_a x i| below threshold"));
    }
    let j = c / cn;
    Ok(DesiredFrame { i, j, k: i.cross(j), omega: Vec3::zeros(), a_star, gbar, guarded: false })
}

/// `arcsin(v_a/|v_a| . k)`.
pub fn predicted_attack_angle(k: Vec3, v_a: Vec3) -> f64 {
    (v_a.dot(k) / v_a.norm()).clamp(-1.0, 1.0).asin()
}

/// When the predicted attack angle exceeds `alpha_max`, replace `i` by `v_a/|v_a|`
/// rotated by `alpha_max` about `j`, keep `j`, and recompute `k`.
pub fn attack_angle_guard(desired: &DesiredFrame, v_a: Vec3, alpha_max: f64, eps_speed: f64) -> Result<DesiredFrame> {
    let speed = v_a.norm();
    if speed <= eps_speed {
        return Err(Error::DegenerateAirspeed { speed });
    }
    if predicted_attack_angle(desired.k, v_a) <= alpha_max {
        return Ok(*desired);
    }
    let i = rotate_about(desired.j, alpha_max, v_a / speed)?;
    let i = i / i.norm();
    Ok(DesiredFrame { i, k: i.cross(desired.j), guarded: true, ..*desired })
}

/// `omega_bar = omega_i + (i.omega_j) i` from the rates of the first two axes.
pub fn compose_frame_rate(i: Vec3, i_dot: Vec3, j: Vec3, j_dot: Vec3) -> Vec3 {
    let w_i = i.cross(i_dot);
    let w_j = j.cross(j_dot);
    w_i + i * i.dot(w_j)
}

/// `omega = omega_bar + k_omega (i x ibar + j x jbar + k x kbar)`, in inertial coordinates.
pub fn attitude_omega(actual: &[Vec3; 3], desired: &DesiredFrame, k_omega: f64) -> Vec3 {
    let e = actual[0].cross(desired.i) + actual[1].cross(desired.j) + actual[2].cross(desired.k);
    desired.omega + e * k_omega
}

/// Roll and pitch rates are tracked; the yaw channel is left to passive stability.
pub fn two_axis_reduce(omega_cmd: Vec3<Body>) -> (f64, f64) {
    (omega_cmd.x, omega_cmd.y)
}
