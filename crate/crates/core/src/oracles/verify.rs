use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::airframe::{glide_metrics, AeroParams, G0};
use crate::control::Gains;
use crate::error::Result;
use crate::math::{rotate_about, Attitude, Vec3};
use crate::path::{a2_threshold_speed, Curve};

use super::attitude::{attitude_decay, attitude_run};
use super::heading::{
    companion, eigen_disagreement, heading_run, linearized_heading_matrix, linearized_heading_poles, squared_quadratic,
    QuadRoots,
};
use super::lemma1::{check_lemma1, fuzz_grid};
use super::monitor::monotone_tol;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(VerifyCheck { name: name.to_string(), passed, detail });
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {:<22} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

pub fn check_glide(params: &AeroParams) -> VerifyCheck {
    let g = glide_metrics(params, G0);
    let passed = (g.glide_ratio - 6.5).abs() <= 0.1 && (g.glide_speed - 15.9).abs() <= 0.1;
    VerifyCheck {
        name: "glide".into(),
        passed,
        detail: format!(
            "ratio {:.3} (exact {:.3}), speed {:.3} m/s",
            g.glide_ratio, g.glide_ratio_exact, g.glide_speed
        ),
    }
}

pub fn check_heading_poles(k_h1: f64, k_h2: f64) -> Result<VerifyCheck> {
    let p = linearized_heading_poles(k_h1, k_h2)?;
    let expect = -0.5 * k_h1;
    let root_ok = match p.stable {
        QuadRoots::Double(r) => (r - expect).abs() <= 1e-10,
        _ => false,
    };
    let unstable_ok = matches!(p.unstable, QuadRoots::Real(a, _) if a > 0.0);
    let e_lin = eigen_disagreement(&linearized_heading_matrix(k_h1, k_h2, true), &p.stable)
        .max(eigen_disagreement(&linearized_heading_matrix(k_h1, k_h2, false), &p.unstable));
    let e_comp = eigen_disagreement(&companion(squared_quadratic(k_h1, k_h2)), &p.stable);
    Ok(VerifyCheck {
        name: "heading poles".into(),
        passed: root_ok && unstable_ok && e_lin <= 1e-10 && e_comp <= 1e-10,
        detail: format!("stable {:?}, unstable {:?}, eigen gap {:.1e}/{:.1e}", p.stable, p.unstable, e_lin, e_comp),
    })
}

pub fn check_lemma_grid(cases: usize, seed: u64) -> VerifyCheck {
    let failures: Vec<String> = fuzz_grid(cases, seed)
        .into_par_iter()
        .enumerate()
        .filter_map(|(n, (sys, x0, y0))| {
            let tr = match sys.integrate(&x0, &y0, 40.0, 2e-3) {
                Ok(tr) => tr,
                Err(e) => return Some(format!("case {n}: {e}")),
            };
            let r = check_lemma1(&sys, &tr);
            let bad: Vec<String> =
                r.checks.iter().filter(|c| !c.passed).map(|c| format!("({}) {}", c.property, c.detail)).collect();
            (!bad.is_empty()).then(|| format!("case {n}: {}", bad.join("; ")))
        })
        .collect();
    VerifyCheck {
        name: "lemma grid".into(),
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{cases} cases, all properties hold")
        } else {
            format!("{} of {cases} failed: {}", failures.len(), failures.join(" | "))
        },
    }
}

pub fn check_attitude_decay(k_omega: f64) -> VerifyCheck {
    let init = Attitude::from_euler(0.9, -0.5, 2.2);
    let fixed =
        attitude_decay(&attitude_run(init, Attitude::identity(), Vec3::zeros(), k_omega, 2.0, 1e-3), k_omega, 1e-4);
    let moving = attitude_decay(
        &attitude_run(init, Attitude::identity(), Vec3::new(0.3, -0.2, 0.8), k_omega, 2.0, 1e-3),
        k_omega,
        1e-4,
    );
    VerifyCheck {
        name: "attitude decay".into(),
        passed: fixed.within(0.05) && moving.within(0.05),
        detail: format!(
            "expected {:.2}; fixed frame slope [{:.3}, {:.3}], rotating frame [{:.3}, {:.3}]",
            fixed.expected, fixed.slope_min, fixed.slope_max, moving.slope_min, moving.slope_max
        ),
    }
}

pub fn check_near_pi_escape(k_omega: f64) -> VerifyCheck {
    let init = Attitude::from_axis_angle(Vec3::new(0.0, 0.6, 0.8), PI - 1e-6);
    let run = attitude_run(init, Attitude::identity(), Vec3::zeros(), k_omega, 5.0, 1e-3);
    let end = *run.theta.last().unwrap_or(&f64::NAN);
    let t_escape = run.theta.iter().position(|&a| a < PI / 2.0).map(|k| k as f64 * run.dt);
    VerifyCheck {
        name: "near-pi escape".into(),
        passed: end < 1e-4,
        detail: format!("theta0 = pi - 1e-6, below pi/2 at {t_escape:?} s, final {end:.2e}"),
    }
}

pub fn check_heading_v0(gains: &Gains) -> Result<VerifyCheck> {
    let run = heading_run(Vec3::new(-0.8, 0.55, -0.2), Vec3::e1(), Vec3::new(0.0, 0.1, 0.25), gains, 40.0, 1e-3)?;
    let rep = run.v0.check_nonincreasing(monotone_tol(run.dt));
    Ok(VerifyCheck {
        name: "heading V0".into(),
        passed: rep.passed() && run.final_angle < 1e-3,
        detail: format!(
            "worst excess {:.2e} at t = {:.3}, final angle {:.2e}",
            rep.worst_excess, rep.at_t, run.final_angle
        ),
    })
}

/// Circle of radius 50 m tilted `incline` from horizontal; the highest speed at
/// which the second trim condition degenerates somewhere on it.
pub fn inclined_circle_threshold(params: &AeroParams, incline: f64) -> Result<f64> {
    let normal = rotate_about(Vec3::e2(), incline, Vec3::e3())?;
    let c = Curve::circle(Vec3::new(0.0, 0.0, -100.0), 50.0, normal)?;
    Ok(a2_threshold_speed(&c, params, G0, 7200))
}

pub fn check_a2_threshold(params: &AeroParams) -> Result<VerifyCheck> {
    let v = inclined_circle_threshold(params, 15f64.to_radians())?;
    Ok(VerifyCheck {
        name: "A2 threshold".into(),
        passed: (v - 2.25).abs() <= 0.01,
        detail: format!("{v:.4} m/s on a 15 deg circle"),
    })
}

/// All analytic and reduced-model checks, with the default airframe and gains.
pub fn run_verify() -> Result<VerifyReport> {
    let params = AeroParams::default();
    let gains = Gains::default();
    let mut r = VerifyReport::default();
    r.checks.push(check_glide(&params));
    r.checks.push(check_heading_poles(gains.k_h1, gains.k_h2)?);
    r.checks.push(check_heading_v0(&gains)?);
    r.checks.push(check_attitude_decay(gains.k_omega));
    r.checks.push(check_near_pi_escape(gains.k_omega));
    r.checks.push(check_a2_threshold(&params)?);
    r.checks.push(check_lemma_grid(100, 7));
    Ok(r)
}
