use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::SatProfile;

use super::monitor::{fit_log_slope, LogFit};

/// Additive term `mu` of the `x` equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Perturbation {
    None,
    /// `mu = k_mu (|x| + c)^q sin(w t) e`, so `|mu| <= k_mu (|x| + c)^q`.
    Bounded {
        k_mu: f64,
        c: f64,
        q: f64,
        freq_radps: f64,
    },
    /// `mu = m exp(-rate t) e`.
    Decaying {
        m: f64,
        rate: f64,
    },
}

/// Reference system
/// `x' = -k1(x) x - k2(x) a y + mu`, `y' = k2(x) k3 (-y + a (y + x/k3))`,
/// `a = alpha(|y + x/k3|)` with the saturation level `delta_y`,
/// `k1(x) = k11 + k12 |x|^p` and `k1/k2` sliding between `ratio.0` and `ratio.1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1System {
    pub dim: usize,
    pub k11: f64,
    pub k12: f64,
    pub p: f64,
    pub ratio: (f64, f64),
    pub k3: f64,
    pub delta_y: f64,
    pub perturbation: Perturbation,
}

#[derive(Debug, Clone)]
pub struct Lemma1Trace {
    pub t: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
    pub dt: f64,
    /// `false` if the state stopped being finite before the end.
    pub complete: bool,
}

impl Lemma1System {
    pub fn new(
        dim: usize,
        (k11, k12, p): (f64, f64, f64),
        ratio: (f64, f64),
        k3: f64,
        delta_y: f64,
        perturbation: Perturbation,
    ) -> Result<Self> {
        let s = Self { dim, k11, k12, p, ratio, k3, delta_y, perturbation };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.dim == 0 {
            return bad("dimension must be at least 1");
        }
        if !(self.k11 > 0.0 && self.k3 > 0.0 && self.delta_y > 0.0 && self.p > 0.0) {
            return bad("k11, k3, delta_y and p must be positive");
        }
        if !(self.ratio.0 > 0.0 && self.ratio.0 <= self.ratio.1 && self.ratio.1.is_finite()) {
            return bad("need 0 < r1 <= r2 < inf");
        }
        if self.k12 < 0.0 {
            return bad("k12 must be non-negative");
        }
        if let Perturbation::Bounded { k_mu, c, q, .. } = self.perturbation {
            if !(k_mu >= 0.0 && c >= 0.0 && q > 0.0) {
                return bad("perturbation bound needs k_mu >= 0, c >= 0, q > 0");
            }
            // growth of mu must be dominated by k12 |x|^p
            if !(self.k12 > 0.0 && self.p > (q - 1.0).max(0.0)) {
                return bad("persistent perturbation needs k12 > 0 and p > max(0, q - 1)");
            }
        }
        Ok(())
    }

    pub fn k1(&self, xn: f64) -> f64 {
        self.k11 + self.k12 * xn.powf(self.p)
    }

    pub fn k2(&self, xn: f64) -> f64 {
        let (r1, r2) = self.ratio;
        self.k1(xn) / (r1 + (r2 - r1) * xn / (1.0 + xn))
    }

    fn direction(&self) -> DVector<f64> {
        DVector::from_element(self.dim, 1.0 / (self.dim as f64).sqrt())
    }

    pub fn mu(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        let m = match self.perturbation {
            Perturbation::None => 0.0,
            Perturbation::Bounded { k_mu, c, q, freq_radps } => k_mu * (x.norm() + c).powf(q) * (freq_radps * t).sin(),
            Perturbation::Decaying { m, rate } => m * (-rate * t).exp(),
        };
        self.direction() * m
    }

    pub fn rhs(&self, x: &DVector<f64>, y: &DVector<f64>, t: f64) -> (DVector<f64>, DVector<f64>) {
        let sat = SatProfile::new(self.delta_y).expect("validated");
        let xn = x.norm();
        let (k1, k2) = (self.k1(xn), self.k2(xn));
        let arg = y + x / self.k3;
        let a = sat.alpha(arg.norm());
        let dx = -x * k1 - y * (k2 * a) + self.mu(x, t);
        let dy = (arg * a - y) * (k2 * self.k3);
        (dx, dy)
    }

    /// Rough spectral radius of the Jacobian at `|x|`, for step size selection.
    fn stiffness(&self, xn: f64) -> f64 {
        let (k1, k2) = (self.k1(xn), self.k2(xn));
        let growth = match self.perturbation {
            Perturbation::Bounded { k_mu, c, q, .. } => k_mu * q * (xn + c).powf(q - 1.0).max(1.0),
            _ => 0.0,
        };
        k1 * (1.0 + self.p) + k2 * (1.0 + self.k3) + growth
    }

    fn rk4_step(&self, x: &mut DVector<f64>, y: &mut DVector<f64>, t: f64, h: f64) {
        let (a1, b1) = self.rhs(x, y, t);
        let (a2, b2) = self.rhs(&(&*x + &a1 * (h / 2.0)), &(&*y + &b1 * (h / 2.0)), t + h / 2.0);
        let (a3, b3) = self.rhs(&(&*x + &a2 * (h / 2.0)), &(&*y + &b2 * (h / 2.0)), t + h / 2.0);
        let (a4, b4) = self.rhs(&(&*x + &a3 * h), &(&*y + &b3 * h), t + h);
        *x += (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
        *y += (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (h / 6.0);
    }

    /// RK4 from `(x0, y0)` over `[0, t_end]`, sampled every `dt`. Each sample interval
    /// is split into equal substeps short enough for the local stiffness.
    pub fn integrate(&self, x0: &[f64], y0: &[f64], t_end: f64, dt: f64) -> Result<Lemma1Trace> {
        if x0.len() != self.dim || y0.len() != self.dim {
            return Err(Error::InvalidParameter(format!("initial state must have dimension {}", self.dim)));
        }
        let steps = (t_end / dt).round() as usize;
        let mut x = DVector::from_column_slice(x0);
        let mut y = DVector::from_column_slice(y0);
        let mut tr = Lemma1Trace { t: vec![0.0], x: vec![x.clone()], y: vec![y.clone()], dt, complete: true };
        for k in 0..steps {
            let t = k as f64 * dt;
            let sub = ((dt * self.stiffness(x.norm()) / 0.5).ceil() as usize).max(1);
            let h = dt / sub as f64;
            for j in 0..sub {
                self.rk4_step(&mut x, &mut y, t + j as f64 * h, h);
            }
            if !(x.iter().chain(y.iter()).all(|v| v.is_finite())) {
                tr.complete = false;
                break;
            }
            tr.t.push(t + dt);
            tr.x.push(x.clone());
            tr.y.push(y.clone());
        }
        Ok(tr)
    }

    /// Largest `eps` for which the cross-term Lyapunov candidate is guaranteed to decrease
    /// (unperturbed case), halved for margin.
    pub fn lyapunov_eps(&self) -> f64 {
        let r = self.ratio.0;
        let bound = 4.0 * r / ((r + self.k3).powi(2) + 4.0);
        0.5 * bound.min(self.k3).min(1.0)
    }

    /// `|x|` beyond which `L0 = (|x|^2 + |y|^2)/2` decreases whatever `y`.
    pub fn x_radius(&self) -> f64 {
        let (k_mu, c, q) = match self.perturbation {
            Perturbation::None => return 0.0,
            Perturbation::Bounded { k_mu, c, q, .. } => (k_mu, c, q),
            Perturbation::Decaying { m, .. } => (m.abs(), 1.0, 0.0),
        };
        // L0' <= -(k11 s + k12 s^(p+1)) s + k_mu s (s + c)^q with s = |x|
        let f = |s: f64| self.k11 * s + self.k12 * s.powf(self.p + 1.0) - k_mu * (s + c).powf(q);
        let mut hi = 1.0;
        while f(hi) <= 0.0 {
            hi *= 2.0;
        }
        // largest root: scan down from hi on a fine grid, then bisect
        let n = 4096;
        let mut lo = 0.0;
        for i in (0..n).rev() {
            let s = hi * i as f64 / n as f64;
            if f(s) <= 0.0 {
                lo = s;
                break;
            }
        }
        let mut up = lo + hi / n as f64;
        for _ in 0..100 {
            let mid = 0.5 * (lo + up);
            if f(mid) <= 0.0 {
                lo = mid;
            } else {
                up = mid;
            }
        }
        up
    }

    /// Slowest decay rate of the unsaturated linearization `x' = -k11 x - k2 y`, `y' = k2 x`
    /// at `x = 0` (a positive number).
    pub fn linear_rate(&self) -> f64 {
        let k1 = self.k11;
        let k2 = self.k2(0.0);
        let disc = k1 * k1 - 4.0 * k2 * k2;
        if disc >= 0.0 {
            0.5 * (k1 - disc.sqrt())
        } else {
            0.5 * k1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    /// Property number, 1 to 5.
    pub property: u8,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub checks: Vec<PropertyCheck>,
}

impl Lemma1Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(property: u8, passed: bool, detail: String) -> PropertyCheck {
    PropertyCheck { property, passed, detail }
}

/// Log-linear fit of the state norm over the last two thirds of the trace, measured
/// in the modal coordinates of the linearization at the origin so a lightly damped
/// oscillation shows no ripple.
pub fn decay_fit(sys: &Lemma1System, tr: &Lemma1Trace) -> Option<LogFit> {
    let k1 = sys.k11;
    let k2 = sys.k2(0.0);
    let disc = k1 * k1 - 4.0 * k2 * k2;
    // columns of T with A T = T J, A = [[-k1, -k2], [k2, 0]]
    let t_mat = if disc < 0.0 {
        nalgebra::Matrix2::new(-0.5 * k1, 0.5 * (-disc).sqrt(), k2, 0.0)
    } else if disc > 1e-6 * k1 * k1 {
        let (l1, l2) = (0.5 * (-k1 + disc.sqrt()), 0.5 * (-k1 - disc.sqrt()));
        nalgebra::Matrix2::new(l1, l2, k2, k2)
    } else {
        nalgebra::Matrix2::identity()
    };
    let inv = t_mat.try_inverse()?;
    let norm = |k: usize| {
        (0..sys.dim).map(|i| (inv * nalgebra::Vector2::new(tr.x[k][i], tr.y[k][i])).norm_squared()).sum::<f64>().sqrt()
    };
    let n = tr.t.len();
    let stride = ((0.1 / tr.dt).round() as usize).max(1);
    let (mut t, mut v) = (Vec::new(), Vec::new());
    for k in (n / 3..n).step_by(stride) {
        let m = norm(k);
        if m < 1e-250 {
            break;
        }
        t.push(tr.t[k]);
        v.push(m);
    }
    fit_log_slope(&t, &v, 0.0)
}

/// Evaluate the lemma's properties on a trace. Property 4 is checked only for
/// `mu = 0` and property 5 only when `mu` is absent or decays.
pub fn check_lemma1(sys: &Lemma1System, tr: &Lemma1Trace) -> Lemma1Report {
    let mut out = Vec::new();
    let ny: Vec<f64> = tr.y.iter().map(|y| y.norm()).collect();
    let nx: Vec<f64> = tr.x.iter().map(|x| x.norm()).collect();
    let d = sys.delta_y;
    let tol = 10.0 * tr.dt * tr.dt;

    // (1) |y| never grows while above delta_y, and ends below it
    let mut grow = 0.0f64;
    for k in 1..ny.len() {
        if ny[k - 1] > d {
            grow = grow.max(ny[k] - ny[k - 1] - tol * ny[k - 1]);
        }
    }
    let y_end = *ny.last().unwrap_or(&f64::NAN);
    out.push(check(
        1,
        grow <= 0.0 && y_end <= d * (1.0 + 1e-3),
        format!("max growth above bound {grow:.3e}, final |y| {y_end:.4} vs {d:.4}"),
    ));

    // (2) |x| bounded by the level set argument on L0
    let ymax = ny[0].max(d);
    let kx = sys.x_radius();
    let bound = (nx[0] * nx[0] + ny[0] * ny[0]).max(kx * kx + ymax * ymax).sqrt();
    let xmax = nx.iter().cloned().fold(0.0, f64::max);
    out.push(check(2, xmax <= bound * (1.0 + 1e-6), format!("max |x| {xmax:.4} vs bound {bound:.4}")));

    // (3) the solution exists on the whole horizon
    out.push(check(3, tr.complete, format!("reached t = {:.3}", tr.t.last().unwrap_or(&0.0))));

    // (4) L_eps decreasing when mu = 0
    if sys.perturbation == Perturbation::None {
        let eps = sys.lyapunov_eps();
        let l: Vec<f64> =
            tr.x.iter().zip(&tr.y).map(|(x, y)| 0.5 * (x.norm_squared() + y.norm_squared()) + eps * x.dot(y)).collect();
        let worst = l.windows(2).map(|w| w[1] - w[0] - tol * w[0].abs()).fold(f64::NEG_INFINITY, f64::max);
        out.push(check(4, worst <= 0.0, format!("eps {eps:.4}, worst increase {worst:.3e}")));
    }

    // (5) exponential convergence when mu vanishes exponentially
    if !matches!(sys.perturbation, Perturbation::Bounded { .. }) {
        let fit = decay_fit(sys, tr);
        let ok = fit.is_some_and(|f| f.slope < 0.0 && f.r2 > 0.99);
        out.push(check(5, ok, format!("{fit:?}")));
    }
    Lemma1Report { checks: out }
}

/// Deterministic grid of `n` admissible systems and initial conditions, cycling
/// through the three perturbation classes. Initial `|y0| = 10 delta_y`. Draws whose
/// `x_radius` exceeds 30 are redrawn.
pub fn fuzz_grid(n: usize, seed: u64) -> Vec<(Lemma1System, Vec<f64>, Vec<f64>)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let dim = rng.gen_range(1..=3);
        let k11 = rng.gen_range(0.5..3.0);
        let k12 = rng.gen_range(0.01..1.0);
        let p: f64 = [1.0, 2.0, 3.0][rng.gen_range(0..3)];
        let r1 = rng.gen_range(0.5..3.0);
        let r2 = r1 * rng.gen_range(1.0..2.0);
        let k3 = rng.gen_range(0.5..5.0);
        let delta_y = rng.gen_range(0.5..3.0);
        let pert = match out.len() % 3 {
            0 => Perturbation::None,
            1 => {
                let q = rng.gen_range(0.2..(p + 1.0).min(3.0));
                Perturbation::Bounded {
                    k_mu: rng.gen_range(0.1..2.0),
                    c: rng.gen_range(0.0..2.0),
                    q,
                    freq_radps: rng.gen_range(0.2..3.0),
                }
            }
            _ => Perturbation::Decaying { m: rng.gen_range(-5.0..5.0), rate: rng.gen_range(0.05..1.0) },
        };
        let Ok(sys) = Lemma1System::new(dim, (k11, k12, p), (r1, r2), k3, delta_y, pert) else { continue };
        // admissible but numerically intractable: |x| may pass 1e40 before k12 |x|^p wins
        if sys.x_radius() > 30.0 {
            continue;
        }
        let unit = |rng: &mut rand_chacha::ChaCha8Rng| {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-3);
            v.into_iter().map(|a| a / n).collect::<Vec<_>>()
        };
        let y0: Vec<f64> = unit(&mut rng).into_iter().map(|a| a * 10.0 * delta_y).collect();
        let xs = rng.gen_range(0.0..20.0);
        let x0: Vec<f64> = unit(&mut rng).into_iter().map(|a| a * xs).collect();
        out.push((sys, x0, y0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain() -> Lemma1System {
        Lemma1System::new(1, (1.8, 0.0, 2.0), (3.0, 3.0), 1.0, 2.0, Perturbation::None).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        let pert = Perturbation::Bounded { k_mu: 1.0, c: 1.0, q: 4.0, freq_radps: 1.0 };
        assert!(Lemma1System::new(1, (1.0, 0.5, 2.0), (1.0, 1.0), 1.0, 1.0, pert).is_err());
        let mild = Perturbation::Bounded { k_mu: 1.0, c: 1.0, q: 1.0, freq_radps: 1.0 };
        assert!(Lemma1System::new(1, (1.0, 0.0, 2.0), (1.0, 1.0), 1.0, 1.0, mild).is_err());
        assert!(Lemma1System::new(1, (1.0, 0.1, 2.0), (1.0, 1.0), 1.0, 1.0, mild).is_ok());
        assert!(Lemma1System::new(1, (1.0, 0.1, 2.0), (2.0, 1.0), 1.0, 1.0, Perturbation::None).is_err());
        assert!(Lemma1System::new(0, (1.0, 0.1, 2.0), (1.0, 1.0), 1.0, 1.0, Perturbation::None).is_err());
    }

    #[test]
    fn unsaturated_decay_matches_linearization() {
        let s = plain();
        let tr = s.integrate(&[0.1], &[0.0], 40.0, 1e-3).unwrap();
        let fit = decay_fit(&s, &tr).unwrap();
        // k2 = 0.6: two real poles, the slow one dominates
        let expect = -s.linear_rate();
        assert!((fit.slope - expect).abs() < 0.02 * expect.abs(), "{fit:?} vs {expect}");
    }

    #[test]
    fn plain_system_passes_all() {
        let s = plain();
        let tr = s.integrate(&[5.0], &[20.0], 40.0, 1e-3).unwrap();
        let r = check_lemma1(&s, &tr);
        assert_eq!(r.checks.len(), 5);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn checker_flags_a_broken_integral() {
        // negative saturation level would let y run away; emulate by a trace that grows
        let s = plain();
        let mut tr = s.integrate(&[0.0], &[1.0], 1.0, 1e-2).unwrap();
        for (k, y) in tr.y.iter_mut().enumerate() {
            y[0] = 3.0 + k as f64 * 0.01;
        }
        let r = check_lemma1(&s, &tr);
        assert!(!r.checks[0].passed);
    }

    #[test]
    fn x_radius_bounds_the_growth_term() {
        let s = Lemma1System::new(
            1,
            (0.5, 0.1, 2.0),
            (1.0, 1.0),
            1.0,
            1.0,
            Perturbation::Bounded { k_mu: 2.0, c: 1.0, q: 2.0, freq_radps: 1.0 },
        )
        .unwrap();
        let kx = s.x_radius();
        let f = |v: f64| 0.5 * v + 0.1 * v.powi(3) - 2.0 * (v + 1.0).powi(2);
        assert!(f(kx) > 0.0 && f(kx * 0.999) <= 1e-9, "{kx}");
        assert!(f(kx * 1.5) > 0.0 && f(kx * 10.0) > 0.0);
    }
}
