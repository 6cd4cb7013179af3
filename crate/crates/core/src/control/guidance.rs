use crate::error::{Error, Result};
use crate::math::{SatProfile, Vec3};
use crate::path::{PathError, PathFrame};

use super::Gains;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceOutput {
    pub h_star: Vec3,
    /// Angular velocity of `h*`; the guidance law itself leaves it at zero and
    /// the controller fills it from its differentiator.
    pub omega_h_star: Vec3,
    pub theta_h: f64,
    pub sin_theta_h: f64,
    pub l: Vec3,
    pub ybar: [f64; 2],
}

/// Desired heading `h* = sin(theta) l + cos(theta) sign u` with
/// `ybar = k1 D sat(y) / |v|`, `sin(theta) = |ybar|`, `l = -(ybar1 u_bar + ybar2 u_bbar)/|ybar|`.
///
/// When `ybar = 0` the direction `l` is irrelevant; `prev_l` (or `u_bar`) is reported.
pub fn guidance_heading(
    err: &PathError,
    frame: &PathFrame,
    speed: f64,
    sign_vu: f64,
    prev_l: Option<Vec3>,
    gains: &Gains,
) -> Result<GuidanceOutput> {
    if speed <= gains.eps_speed_mps {
        return Err(Error::DegenerateSpeed { speed });
    }
    let dmax = gains.d1.max(gains.d2);
    let delta_h = gains.mu * speed / (gains.k1 * dmax);
    let sat = SatProfile::new(delta_h)?;
    let a = sat.alpha(err.y1.hypot(err.y2));
    let scale = gains.k1 * a / speed;
    let ybar = [scale * gains.d1 * err.y1, scale * gains.d2 * err.y2];
    let norm = ybar[0].hypot(ybar[1]).min(gains.mu);
    let (l, sin_t) = if norm > 0.0 {
        let raw = -(frame.u_bar * ybar[0] + frame.u_bbar * ybar[1]);
        (raw / raw.norm(), norm)
    } else {
        (prev_l.unwrap_or(frame.u_bar), 0.0)
    };
    let cos_t = (1.0 - sin_t * sin_t).sqrt();
    Ok(GuidanceOutput {
        h_star: l * sin_t + frame.u * (cos_t * sign_vu),
        omega_h_star: Vec3::zeros(),
        theta_h: sin_t.atan2(cos_t),
        sin_theta_h: sin_t,
        l,
        ybar,
    })
}

/// Inertial heading that makes `v - v_c` point along `h*`:
/// `h*_c = P(v_c)/|v| + sqrt(1 - |P(v_c)|^2/|v|^2) h*`, `P` the projection orthogonal to `h*`.
pub fn moving_guidance(h_star: Vec3, v_c: Vec3, speed: f64) -> Result<Vec3> {
    let carrier = v_c.norm();
    if speed <= carrier {
        return Err(Error::CarrierTooFast { carrier, speed });
    }
    if carrier == 0.0 {
        return Ok(h_star);
    }
    let perp = v_c - h_star * h_star.dot(v_c);
    let r = perp / speed;
    Ok(r + h_star * (1.0 - r.norm_squared()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadingOutput {
    pub omega_bar_h: Vec3,
    pub h_tilde: Vec3,
    pub alpha_h: f64,
    pub z_dot: Vec3,
}

/// `omega_bar_h = omega_h* + k_h1 h~ + k_h2 alpha_h z`, `h~ = h x h*`, and the
/// rate of the bounded integral `z' = omega_h* x z + k_z(-z + sat(z + h~/k_z))`.
pub fn heading_omega(h: Vec3, h_star: Vec3, omega_h_star: Vec3, z: Vec3, gains: &Gains) -> HeadingOutput {
    let h_tilde = h.cross(h_star);
    let sat = gains.z_profile();
    let arg = z + h_tilde / gains.k_z;
    let alpha_h = sat.alpha(arg.norm());
    HeadingOutput {
        omega_bar_h: omega_h_star + h_tilde * gains.k_h1 + z * (gains.k_h2 * alpha_h),
        h_tilde,
        alpha_h,
        z_dot: omega_h_star.cross(z) + (sat.sat(arg) - z) * gains.k_z,
    }
}

/// RK4 step of `z` with `h~` and `omega_h*` held over the step.
pub fn integrate_z(z: Vec3, h_tilde: Vec3, omega_h_star: Vec3, gains: &Gains, dt: f64) -> Vec3 {
    let sat = gains.z_profile();
    let f = |z: Vec3| omega_h_star.cross(z) + (sat.sat(z + h_tilde / gains.k_z) - z) * gains.k_z;
    let k1 = f(z);
    let k2 = f(z + k1 * (0.5 * dt));
    let k3 = f(z + k2 * (0.5 * dt));
    let k4 = f(z + k3 * dt);
    z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{closest_point, Curve};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn line_frame() -> PathFrame {
        Curve::line(Vec3::zeros(), Vec3::e1()).unwrap().frame_at(0.0, 0)
    }

    #[test]
    fn on_path_heading_is_tangent() {
        let f = line_frame();
        let e = PathError { y1: 0.0, y2: 0.0, margin: 1.0 };
        let out = guidance_heading(&e, &f, 10.0, 1.0, None, &Gains::default()).unwrap();
        assert_eq!(out.theta_h, 0.0);
        assert_eq!(out.h_star, f.u);
        assert_eq!(out.l, f.u_bar);
        let back = guidance_heading(&e, &f, 10.0, -1.0, Some(Vec3::e3()), &Gains::default()).unwrap();
        assert_eq!(back.h_star, -f.u);
        assert_eq!(back.l, Vec3::e3());
    }

    #[test]
    fn far_from_path_approach_angle() {
        let g = Gains { d1: 1.0, d2: 1.0, ..Gains::default() };
        let f = line_frame();
        let e = PathError { y1: 1e7, y2: -2e7, margin: 1.0 };
        let out = guidance_heading(&e, &f, 10.0, 1.0, None, &g).unwrap();
        assert_abs_diff_eq!(out.sin_theta_h, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(out.theta_h, 30f64.to_radians(), epsilon = 1e-8);
        // heading points back toward the path
        assert!(out.h_star.dot(e.offset(&f)) < 0.0);
    }

    #[test]
    fn degenerate_speed() {
        let e = PathError { y1: 1.0, y2: 0.0, margin: 1.0 };
        assert!(matches!(
            guidance_heading(&e, &line_frame(), 0.1, 1.0, None, &Gains::default()),
            Err(Error::DegenerateSpeed { .. })
        ));
    }

    #[test]
    fn moving_guidance_cases() {
        let h = Vec3::new(0.6, 0.8, 0.0);
        assert_eq!(moving_guidance(h, Vec3::zeros(), 10.0).unwrap(), h);
        let par = moving_guidance(h, h * 3.0, 10.0).unwrap();
        assert!((par - h).norm() < 1e-15);
        assert!(matches!(moving_guidance(h, Vec3::new(11.0, 0.0, 0.0), 10.0), Err(Error::CarrierTooFast { .. })));
        // relative velocity points along h*
        let vc = Vec3::new(0.0, -3.0, 1.0);
        let hc = moving_guidance(h, vc, 10.0).unwrap();
        let rel = hc * 10.0 - vc;
        assert!((rel / rel.norm() - h).norm() < 1e-12);
    }

    #[test]
    fn converged_heading_passes_feedforward() {
        let h = Vec3::new(0.0, 1.0, 0.0);
        let w = Vec3::new(0.1, -0.2, 0.3);
        let out = heading_omega(h, h, w, Vec3::zeros(), &Gains::default());
        assert_eq!(out.omega_bar_h, w);
    }

    #[test]
    fn z_stays_bounded() {
        let g = Gains::default();
        let mut z = Vec3::zeros();
        let ht = Vec3::new(0.9, -0.4, 0.1);
        for _ in 0..10_000 {
            z = integrate_z(z, ht, Vec3::new(0.0, 0.0, 0.5), &g, 0.004);
            assert!(z.norm() <= g.delta_z + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn sin_theta_never_exceeds_mu(y1 in -1e6..1e6f64, y2 in -1e6..1e6f64, speed in 0.6..60.0f64, mu in 0.05..0.95f64) {
            let g = Gains { mu, ..Gains::default() };
            let f = line_frame();
            let e = PathError { y1, y2, margin: 1.0 };
            let out = guidance_heading(&e, &f, speed, 1.0, None, &g).unwrap();
            prop_assert!(out.sin_theta_h <= mu);
            prop_assert!((out.h_star.norm() - 1.0).abs() < 1e-12);
            prop_assert!(out.l.dot(f.u).abs() < 1e-12);
        }

        #[test]
        fn carrier_heading_is_unit(hx in -1.0..1.0f64, hy in -1.0..1.0f64, cx in -5.0..5.0f64, cy in -5.0..5.0f64, cz in -5.0..5.0f64) {
            let h = Vec3::new(hx, hy, 0.3);
            let h = h / h.norm();
            let hc = moving_guidance(h, Vec3::new(cx, cy, cz), 10.0).unwrap();
            prop_assert!((hc.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn circle_guidance_points_inward(x in 55.0..400.0f64, y in -3.0..3.0f64) {
            let c = Curve::circle(Vec3::zeros(), 50.0, Vec3::e3()).unwrap();
            let p = Vec3::new(x, y, 0.0);
            let (f, e) = closest_point(&c, p, None).unwrap();
            let out = guidance_heading(&e, &f, 10.0, 1.0, None, &Gains::default()).unwrap();
            prop_assert!(out.h_star.dot(f.q - p) > 0.0);
        }
    }
}
