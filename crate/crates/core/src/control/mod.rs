//! Thrust/speed loop, guidance, desired-frame attitude control, surface
//! allocation and the air-velocity estimator.

mod allocation;
mod attitude;
mod controller;
mod estimator;
mod guidance;
mod speed;

pub use allocation::{surface_allocation, Allocation, AllocationParams};
pub use attitude::{
    attack_angle_guard, attitude_omega, compose_frame_rate, desired_frame, predicted_attack_angle, two_axis_reduce,
    DesiredFrame,
};
pub use controller::{
    events, AxisMode, ControlCommand, Controller, ControllerConfig, ControllerMemory, Diagnostics, MeasurementMode,
    Measurements, OutputMode, SpeedMode, SpeedProfile, SpeedStep,
};
pub use estimator::{acceleration_estimate, estimate_airvelocity, AccelSource};
pub use guidance::{guidance_heading, heading_omega, integrate_z, moving_guidance, GuidanceOutput, HeadingOutput};
pub use speed::{
    airspeed_thrust, gbar_and_tbar, iev_rate, integrate_iev, speed_thrust, thrust_clamp_policy, thrust_from_tbar,
    SpeedLoopOutput,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::SatProfile;

/// Every controller gain and guard threshold. Missing keys in a scenario file
/// take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Gains {
    // speed loop
    pub k_t11: f64,
    pub k_t12: f64,
    pub p_exp: f64,
    pub k_t2: f64,
    pub k_t3: f64,
    pub delta_ev_mps: f64,
    // guidance
    pub k1: f64,
    pub mu: f64,
    pub d1: f64,
    pub d2: f64,
    // heading
    pub k_h1: f64,
    pub k_h2: f64,
    pub k_z: f64,
    pub delta_z: f64,
    // attitude
    pub k_omega: f64,
    // surfaces
    pub alloc_gain: [f64; 3],
    pub k_delta: f64,
    pub k_delta_bar: f64,
    pub delta_max_rad: [f64; 3],
    pub delta_rate_max_radps: f64,
    pub gyro_term: bool,
    // guards
    pub t_min_n: f64,
    pub t_max_n: f64,
    pub alpha_max_rad: f64,
    pub eps_ih: f64,
    pub eps_acc_mps2: f64,
    pub eps_cross_mps: f64,
    pub eps_speed_mps: f64,
    /// Clamp on finite-difference angular rates.
    pub max_ff_rate_radps: f64,
    /// Low-pass time constant on the differentiated `omega_h*`; 0 disables the filter.
    pub ff_rate_tau_s: f64,
    /// Time constant of the filtered `d|v|/dt` used when the speed objective is dropped.
    pub speed_rate_tau_s: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            k_t11: 1.8,
            k_t12: 0.0,
            p_exp: 2.0,
            k_t2: 0.9,
            k_t3: 1.0,
            delta_ev_mps: 2.0,
            k1: 1.0,
            mu: 0.5,
            d1: 1.0,
            d2: 0.5,
            k_h1: 1.4,
            k_h2: 0.49,
            k_z: 10.0,
            delta_z: 0.5,
            k_omega: 7.0,
            alloc_gain: [45.0, 60.0, 45.0],
            k_delta: 50.0,
            k_delta_bar: 50.0,
            delta_max_rad: [0.35; 3],
            delta_rate_max_radps: 1.0,
            gyro_term: false,
            t_min_n: 0.0,
            t_max_n: 20.0,
            alpha_max_rad: 0.4,
            eps_ih: 0.1,
            eps_acc_mps2: 0.5,
            eps_cross_mps: 0.5,
            eps_speed_mps: 0.5,
            max_ff_rate_radps: 3.0,
            ff_rate_tau_s: 0.0,
            speed_rate_tau_s: 0.2,
        }
    }
}

impl Gains {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k_t11", self.k_t11),
            ("k_t2", self.k_t2),
            ("k_t3", self.k_t3),
            ("delta_ev_mps", self.delta_ev_mps),
            ("k1", self.k1),
            ("k_h1", self.k_h1),
            ("k_h2", self.k_h2),
            ("k_z", self.k_z),
            ("delta_z", self.delta_z),
            ("k_omega", self.k_omega),
            ("k_delta", self.k_delta),
            ("k_delta_bar", self.k_delta_bar),
            ("delta_rate_max_radps", self.delta_rate_max_radps),
            ("alpha_max_rad", self.alpha_max_rad),
            ("eps_ih", self.eps_ih),
            ("eps_speed_mps", self.eps_speed_mps),
            ("max_ff_rate_radps", self.max_ff_rate_radps),
            ("speed_rate_tau_s", self.speed_rate_tau_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.k_t12 < 0.0 || (self.k_t12 > 0.0 && self.p_exp <= 1.0) {
            return Err(Error::InvalidParameter("k_t12 >= 0 and, when used, p_exp > 1".into()));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::InvalidParameter("mu must lie in (0, 1)".into()));
        }
        for d in [self.d1, self.d2] {
            if !(d > 0.0 && d <= 1.0) {
                return Err(Error::InvalidParameter("d1, d2 must lie in (0, 1]".into()));
            }
        }
        if self.alloc_gain.iter().chain(self.delta_max_rad.iter()).any(|&g| !(g > 0.0)) {
            return Err(Error::InvalidParameter("allocation gains and angle bounds must be positive".into()));
        }
        if !(self.ff_rate_tau_s >= 0.0 && self.ff_rate_tau_s.is_finite()) {
            return Err(Error::InvalidParameter("ff_rate_tau_s must be non-negative".into()));
        }
        if self.t_min_n > self.t_max_n {
            return Err(Error::InvalidParameter("t_min_n must not exceed t_max_n".into()));
        }
        Ok(())
    }

    /// `k_T1(e) = k_T11 + k_T12 |e|^p`.
    pub fn k_t1(&self, e: f64) -> f64 {
        self.k_t11 + self.k_t12 * e.abs().powf(self.p_exp)
    }

    /// Integral gain scaled with `k_T1(e)` so that their ratio stays constant.
    pub fn k_t2_at(&self, e: f64) -> f64 {
        self.k_t2 * self.k_t1(e) / self.k_t11
    }

    pub fn ev_profile(&self) -> SatProfile {
        SatProfile::new(self.delta_ev_mps).expect("validated")
    }

    pub fn z_profile(&self) -> SatProfile {
        SatProfile::new(self.delta_z).expect("validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        Gains::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        let g = Gains { mu: 1.0, ..Gains::default() };
        assert!(g.validate().is_err());
        let g = Gains { d2: 0.0, ..Gains::default() };
        assert!(g.validate().is_err());
        let g = Gains { k_t12: 0.5, p_exp: 1.0, ..Gains::default() };
        assert!(g.validate().is_err());
        let g = Gains { t_min_n: 5.0, t_max_n: 1.0, ..Gains::default() };
        assert!(g.validate().is_err());
    }

    #[test]
    fn ratio_kept_constant() {
        let g = Gains { k_t12: 0.3, ..Gains::default() };
        for e in [0.0, 0.5, 3.0, 40.0] {
            assert!((g.k_t1(e) / g.k_t2_at(e) - g.k_t11 / g.k_t2).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let g: Gains = toml::from_str("k_omega = 5.0\nmu = 0.3").unwrap();
        assert_eq!(g.k_omega, 5.0);
        assert_eq!(g.mu, 0.3);
        assert_eq!(g.k_h1, 1.4);
    }
}
