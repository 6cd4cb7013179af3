use serde::Serialize;

use crate::sim::LogRecord;

/// A scalar Lyapunov candidate sampled along a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LyapunovTrace {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotoneReport {
    /// Largest increase over one sample beyond the tolerance; `<= 0` when monotone.
    pub worst_excess: f64,
    pub at_t: f64,
    pub samples: usize,
}

impl MonotoneReport {
    pub fn passed(&self) -> bool {
        self.worst_excess <= 0.0
    }
}

impl LyapunovTrace {
    pub fn from_fn(t: &[f64], f: impl Fn(usize) -> f64) -> Self {
        Self { t: t.to_vec(), v: (0..t.len()).map(f).collect() }
    }

    /// Heading functional `V0 = (1 - cos h_err) + k_h2 |z|^2 / 2`, with `1 - cos` as `2 sin^2(h_err/2)`.
    pub fn heading_v0(records: &[LogRecord], k_h2: f64) -> Self {
        Self {
            t: records.iter().map(|r| r.t).collect(),
            v: records.iter().map(|r| 2.0 * (0.5 * r.h_err).sin().powi(2) + 0.5 * k_h2 * r.z_norm * r.z_norm).collect(),
        }
    }

    /// `V0 + eps z . h~`.
    pub fn heading_v_eps(records: &[LogRecord], k_h2: f64, eps: f64) -> Self {
        let mut tr = Self::heading_v0(records, k_h2);
        for (v, r) in tr.v.iter_mut().zip(records) {
            *v += eps * r.z_htilde;
        }
        tr
    }

    /// `tan^2(theta~/2)` of the attitude error.
    pub fn attitude_tan2(records: &[LogRecord]) -> Self {
        Self {
            t: records.iter().map(|r| r.t).collect(),
            v: records.iter().map(|r| (0.5 * r.theta_tilde).tan().powi(2)).collect(),
        }
    }

    /// Speed loop `L0 = (e_v^2 + i_ev^2) / 2`.
    pub fn speed_l0(records: &[LogRecord]) -> Self {
        Self {
            t: records.iter().map(|r| r.t).collect(),
            v: records.iter().map(|r| 0.5 * (r.e_v * r.e_v + r.i_ev * r.i_ev)).collect(),
        }
    }

    /// Restrict to `t0 <= t <= t1`.
    pub fn window(&self, t0: f64, t1: f64) -> Self {
        let keep: Vec<usize> = (0..self.t.len()).filter(|&k| self.t[k] >= t0 && self.t[k] <= t1).collect();
        Self { t: keep.iter().map(|&k| self.t[k]).collect(), v: keep.iter().map(|&k| self.v[k]).collect() }
    }

    /// Finite-difference slope, one value per interval.
    pub fn slope(&self) -> Vec<f64> {
        self.t.windows(2).zip(self.v.windows(2)).map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0])).collect()
    }

    /// Nonincreasing up to `rel_tol |V|` per sample, plus a rounding floor of a
    /// few ulps of the largest value.
    pub fn check_nonincreasing(&self, rel_tol: f64) -> MonotoneReport {
        let floor = 8.0 * f64::EPSILON * self.v.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut rep = MonotoneReport { worst_excess: f64::NEG_INFINITY, at_t: f64::NAN, samples: self.v.len() };
        for k in 1..self.v.len() {
            let ex = self.v[k] - self.v[k - 1] - rel_tol * self.v[k - 1].abs() - floor;
            if ex > rep.worst_excess || ex.is_nan() {
                rep.worst_excess = if ex.is_nan() { f64::INFINITY } else { ex };
                rep.at_t = self.t[k];
            }
        }
        if self.v.len() < 2 {
            rep.worst_excess = 0.0;
        }
        rep
    }

    pub fn fit_log_slope(&self, floor: f64) -> Option<LogFit> {
        fit_log_slope(&self.t, &self.v, floor)
    }
}

/// Default per-sample tolerance for a step `dt`.
pub fn monotone_tol(dt: f64) -> f64 {
    10.0 * dt * dt
}

/// Least-squares fit of `ln v = intercept + slope t` over the samples with `v > floor`.
pub fn fit_log_slope(t: &[f64], v: &[f64], floor: f64) -> Option<LogFit> {
    let pts: Vec<(f64, f64)> =
        t.iter().zip(v).filter(|(_, &v)| v > floor && v > 0.0 && v.is_finite()).map(|(&t, &v)| (t, v.ln())).collect();
    let n = pts.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(LogFit { slope, intercept: my - slope * mt, r2, points: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exponential() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * (-1.7 * t).exp()).collect();
        let f = fit_log_slope(&t, &v, 0.0).unwrap();
        assert!((f.slope + 1.7).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
        assert!(f.r2 > 0.999_999);
    }

    #[test]
    fn monotone_detects_bump() {
        let t: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let mut tr = LyapunovTrace::from_fn(&t, |k| 10.0 - k as f64);
        assert!(tr.check_nonincreasing(0.0).passed());
        tr.v[5] = 9.0;
        let r = tr.check_nonincreasing(0.0);
        assert!(!r.passed());
        assert_eq!(r.at_t, 5.0);
    }

    #[test]
    fn window_and_slope() {
        let t: Vec<f64> = (0..11).map(|k| k as f64 * 0.5).collect();
        let tr = LyapunovTrace::from_fn(&t, |k| 2.0 * t[k]);
        let w = tr.window(1.0, 3.0);
        assert_eq!(w.t, vec![1.0, 1.5, 2.0, 2.5, 3.0]);
        assert!(w.slope().iter().all(|s| (s - 2.0).abs() < 1e-12));
    }
}
