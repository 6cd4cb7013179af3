use nalgebra::{Complex, Matrix4};
use serde::Serialize;

use crate::control::{heading_omega, Gains};
use crate::error::{Error, Result};
use crate::math::{rotate_about, Vec3};

use super::monitor::LyapunovTrace;

/// Roots of a real monic quadratic `l^2 + b l + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum QuadRoots {
    Real(f64, f64),
    /// Exact double root; chosen when the discriminant is within rounding of zero.
    Double(f64),
    Complex {
        re: f64,
        im: f64,
    },
}

impl QuadRoots {
    pub fn solve(b: f64, c: f64) -> Self {
        let disc = b * b - 4.0 * c;
        let scale = (b * b).max(4.0 * c.abs());
        if disc.abs() <= 8.0 * f64::EPSILON * scale {
            return QuadRoots::Double(-0.5 * b);
        }
        if disc > 0.0 {
            // avoid cancellation in the smaller root
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            let (r1, r2) = if q == 0.0 { (0.0, -b) } else { (q, c / q) };
            QuadRoots::Real(r1.max(r2), r1.min(r2))
        } else {
            QuadRoots::Complex { re: -0.5 * b, im: 0.5 * (-disc).sqrt() }
        }
    }

    pub fn as_complex(&self) -> [Complex<f64>; 2] {
        match *self {
            QuadRoots::Real(a, b) => [Complex::new(a, 0.0), Complex::new(b, 0.0)],
            QuadRoots::Double(a) => [Complex::new(a, 0.0); 2],
            QuadRoots::Complex { re, im } => [Complex::new(re, im), Complex::new(re, -im)],
        }
    }

    pub fn max_re(&self) -> f64 {
        self.as_complex().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Poles of the heading loop linearized at `h = h*` (stable) and `h = -h*` (unstable),
/// with `z` unsaturated and `h*` fixed. Each quadratic root has multiplicity two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeadingPoles {
    /// `l^2 + k_h1 l + k_h2`
    pub stable: QuadRoots,
    /// `l^2 - k_h1 l - k_h2`
    pub unstable: QuadRoots,
}

pub fn linearized_heading_poles(k_h1: f64, k_h2: f64) -> Result<HeadingPoles> {
    if !(k_h1 > 0.0 && k_h2 > 0.0) {
        return Err(Error::InvalidParameter("heading gains must be positive".into()));
    }
    Ok(HeadingPoles { stable: QuadRoots::solve(k_h1, k_h2), unstable: QuadRoots::solve(-k_h1, -k_h2) })
}

/// State matrix of the linearization in `(e, z)` with `e` the two tangent components
/// of `h x h*`: `e' = -s(k_h1 e + k_h2 z)`, `z' = e`, `s = +1` at `h*` and `-1` at `-h*`.
pub fn linearized_heading_matrix(k_h1: f64, k_h2: f64, stable: bool) -> Matrix4<f64> {
    let s = if stable { 1.0 } else { -1.0 };
    #[rustfmt::skip]
    let a = Matrix4::new(
        -s * k_h1, 0.0, -s * k_h2, 0.0,
        0.0, -s * k_h1, 0.0, -s * k_h2,
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
    );
    a
}

/// Companion matrix of the monic quartic with coefficients `c[0] + c[1] l + ... + c[3] l^3 + l^4`.
pub fn companion(c: [f64; 4]) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    for k in 0..3 {
        m[(k + 1, k)] = 1.0;
    }
    for k in 0..4 {
        m[(k, 3)] = -c[k];
    }
    m
}

/// Coefficients of `(l^2 + b l + c)^2`.
pub fn squared_quadratic(b: f64, c: f64) -> [f64; 4] {
    [c * c, 2.0 * b * c, b * b + 2.0 * c, 2.0 * b]
}

/// Replace each group of values closer than `tol` to its first member by the group mean.
fn cluster_means(vals: &[Complex<f64>], tol: f64) -> Vec<Complex<f64>> {
    let mut clusters: Vec<Vec<Complex<f64>>> = Vec::new();
    'outer: for &z in vals {
        for c in clusters.iter_mut() {
            if (c[0] - z).norm() < tol {
                c.push(z);
                continue 'outer;
            }
        }
        clusters.push(vec![z]);
    }
    clusters
        .iter()
        .flat_map(|c| {
            let mean = c.iter().sum::<Complex<f64>>() / c.len() as f64;
            std::iter::repeat_n(mean, c.len())
        })
        .collect()
}

/// Largest distance between the analytic roots (each counted twice) and the
/// eigenvalues of `m`, after replacing each cluster of nearly equal values by its
/// mean on both sides. A root of multiplicity `n` is only resolved to about
/// `eps^(1/n)` individually by an eigensolver, while the cluster mean stays
/// accurate to rounding.
pub fn eigen_disagreement(m: &Matrix4<f64>, roots: &QuadRoots) -> f64 {
    let ev: Vec<Complex<f64>> = m.complex_eigenvalues().iter().cloned().collect();
    let scale = ev.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-3 * scale;
    let got = cluster_means(&ev, tol);
    let want: Vec<Complex<f64>> = roots.as_complex().iter().flat_map(|&r| [r, r]).collect();
    let mut want = cluster_means(&want, tol);
    let mut worst = 0.0f64;
    for z in got {
        let (k, d) = want
            .iter()
            .enumerate()
            .map(|(k, a)| (k, (a - z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("four roots");
        worst = worst.max(d);
        want.swap_remove(k);
    }
    worst
}

/// Outcome of the kinematic heading run.
#[derive(Debug, Clone)]
pub struct HeadingRun {
    pub v0: LyapunovTrace,
    pub final_angle: f64,
    pub dt: f64,
}

/// `h' = omega_bar_h x h` with the exact heading law and bounded integral, `h*`
/// rotating at the constant rate `omega_star` (perpendicular to `h*`). The attitude
/// loop is taken as perfect, so the heading perturbation vanishes.
pub fn heading_run(
    h0: Vec3,
    h_star0: Vec3,
    omega_star: Vec3,
    gains: &Gains,
    t_end: f64,
    dt: f64,
) -> Result<HeadingRun> {
    let h_star_at = |t: f64| -> Result<Vec3> {
        let w = omega_star.norm();
        if w == 0.0 {
            Ok(h_star0)
        } else {
            rotate_about(omega_star / w, w * t, h_star0)
        }
    };
    let f = |t: f64, h: Vec3, z: Vec3| -> Result<(Vec3, Vec3)> {
        let hs = h_star_at(t)?;
        let o = heading_omega(h, hs, omega_star, z, gains);
        Ok((o.omega_bar_h.cross(h), o.z_dot))
    };
    let v0 = |t: f64, h: Vec3, z: Vec3| -> Result<f64> {
        // 1 - h.h* written without cancellation
        Ok(0.5 * (h - h_star_at(t)?).norm_squared() + 0.5 * gains.k_h2 * z.norm_squared())
    };
    let steps = (t_end / dt).round() as usize;
    let (mut h, mut z) = (h0 / h0.norm(), Vec3::zeros());
    let mut trace = LyapunovTrace { t: vec![0.0], v: vec![v0(0.0, h, z)?] };
    for k in 0..steps {
        let t = k as f64 * dt;
        let (a1, b1) = f(t, h, z)?;
        let (a2, b2) = f(t + 0.5 * dt, h + a1 * (0.5 * dt), z + b1 * (0.5 * dt))?;
        let (a3, b3) = f(t + 0.5 * dt, h + a2 * (0.5 * dt), z + b2 * (0.5 * dt))?;
        let (a4, b4) = f(t + dt, h + a3 * dt, z + b3 * dt)?;
        h += (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (dt / 6.0);
        h = h / h.norm();
        z += (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (dt / 6.0);
        trace.t.push(t + dt);
        trace.v.push(v0(t + dt, h, z)?);
    }
    let final_angle = h.dot(h_star_at(t_end)?).clamp(-1.0, 1.0).acos();
    Ok(HeadingRun { v0: trace, final_angle, dt })
}
