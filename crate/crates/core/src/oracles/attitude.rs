use nalgebra::{Quaternion, UnitQuaternion};
use serde::Serialize;

use crate::control::{attitude_omega, DesiredFrame};
use crate::math::{triad_angle, Attitude, Vec3};

use super::monitor::{fit_log_slope, LogFit, LyapunovTrace};

/// Attitude loop alone: the body rate equals the command exactly.
#[derive(Debug, Clone)]
pub struct AttitudeRun {
    pub theta: Vec<f64>,
    pub tan2: LyapunovTrace,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttitudeDecay {
    pub fit: Option<LogFit>,
    /// Extremes of the per-step log slope while `theta~` is above the floor.
    pub slope_min: f64,
    pub slope_max: f64,
    pub expected: f64,
    pub final_theta: f64,
}

impl AttitudeDecay {
    /// All per-step slopes and the fit within `rel` of the expected rate.
    pub fn within(&self, rel: f64) -> bool {
        let lo = self.expected * (1.0 + rel);
        let hi = self.expected * (1.0 - rel);
        let in_band = |s: f64| s >= lo && s <= hi;
        self.fit.is_some_and(|f| in_band(f.slope)) && in_band(self.slope_min) && in_band(self.slope_max)
    }
}

/// Desired frame `D(t) = exp(t [w_d]x) D0`, body driven by `omega = w_d + k_omega sum(b_i x d_i)`.
pub fn attitude_run(
    initial: Attitude,
    desired0: Attitude,
    w_d: Vec3,
    k_omega: f64,
    t_end: f64,
    dt: f64,
) -> AttitudeRun {
    let rot_d = |t: f64| UnitQuaternion::from_scaled_axis(w_d.to_na() * t) * desired0.0;
    let omega = |q: &Quaternion<f64>, t: f64| -> Quaternion<f64> {
        let body = Attitude(UnitQuaternion::new_normalize(*q));
        let d = Attitude(rot_d(t)).triad();
        let df = DesiredFrame {
            i: d[0],
            j: d[1],
            k: d[2],
            omega: w_d,
            a_star: Vec3::zeros(),
            gbar: Vec3::zeros(),
            guarded: false,
        };
        let w = attitude_omega(&body.triad(), &df, k_omega);
        // inertial rate: q' = w q / 2
        Quaternion::from_imag(w.to_na()) * q * 0.5
    };
    let steps = (t_end / dt).round() as usize;
    let mut q = *initial.0.quaternion();
    let mut theta = Vec::with_capacity(steps + 1);
    let mut t_axis = Vec::with_capacity(steps + 1);
    let mut record = |q: &Quaternion<f64>, t: f64| {
        let body = Attitude(UnitQuaternion::new_normalize(*q));
        theta.push(triad_angle(&body.triad(), &Attitude(rot_d(t)).triad()));
        t_axis.push(t);
    };
    record(&q, 0.0);
    for k in 0..steps {
        let t = k as f64 * dt;
        let k1 = omega(&q, t);
        let k2 = omega(&(q + k1 * (0.5 * dt)), t + 0.5 * dt);
        let k3 = omega(&(q + k2 * (0.5 * dt)), t + 0.5 * dt);
        let k4 = omega(&(q + k3 * dt), t + dt);
        q += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        q = q.normalize();
        record(&q, t + dt);
    }
    let tan2 = LyapunovTrace { t: t_axis, v: theta.iter().map(|a| (0.5 * a).tan().powi(2)).collect() };
    AttitudeRun { theta, tan2, dt }
}

/// Log-slope of `tan^2(theta~/2)` while `theta~ >= floor`, against `-4 k_omega`.
pub fn attitude_decay(run: &AttitudeRun, k_omega: f64, floor: f64) -> AttitudeDecay {
    let n = run.theta.iter().position(|&a| a < floor).unwrap_or(run.theta.len());
    let (t, v) = (&run.tan2.t[..n], &run.tan2.v[..n]);
    let mut slope_min = f64::INFINITY;
    let mut slope_max = f64::NEG_INFINITY;
    for k in 1..n {
        let s = (v[k].ln() - v[k - 1].ln()) / (t[k] - t[k - 1]);
        slope_min = slope_min.min(s);
        slope_max = slope_max.max(s);
    }
    AttitudeDecay {
        fit: fit_log_slope(t, v, 0.0),
        slope_min,
        slope_max,
        expected: -4.0 * k_omega,
        final_theta: *run.theta.last().unwrap_or(&f64::NAN),
    }
}
