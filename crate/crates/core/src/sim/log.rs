use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One row per controller step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub t: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub v_z: f64,
    pub speed: f64,
    pub v_a1: f64,
    pub alpha: f64,
    pub beta: f64,
    pub y1: f64,
    pub y2: f64,
    pub y_norm: f64,
    /// Angle between the body and desired triads.
    pub theta_tilde: f64,
    pub e_v: f64,
    pub i_ev: f64,
    pub z_norm: f64,
    pub thrust: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub events: u32,
    pub segment: usize,
    /// Angle between `h` and `h*_c`.
    pub h_err: f64,
    /// `z . h~`, the cross term of the perturbed heading Lyapunov function.
    pub z_htilde: f64,
    pub sin_theta_h: f64,
    pub ydot1: f64,
    pub ydot2: f64,
    pub alpha_pred: f64,
    pub v_a2: f64,
}

pub fn write_csv<W: Write>(records: &[LogRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<LogRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|x| x.map_err(Into::into)).collect()
}

/// Settling of one visit to a path segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentVisit {
    pub segment: usize,
    pub start_s: f64,
    pub end_s: f64,
    /// Time from entry until `|y|` stays below the threshold for the rest of the visit.
    pub settle_s: Option<f64>,
    /// Largest `|y|` after settling.
    pub steady_max_y_m: Option<f64>,
    /// Largest `|beta|` after settling.
    pub steady_max_beta_rad: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub duration_s: f64,
    pub steps: usize,
    pub aborted: Option<String>,
    pub steady_mean_y_m: f64,
    pub steady_rms_y_m: f64,
    pub steady_max_y_m: f64,
    pub steady_max_beta_rad: f64,
    pub max_beta_rad: f64,
    pub thrust_saturation_duty: f64,
    /// Last time `|y|` exceeded the threshold, if ever.
    pub convergence_time_s: Option<f64>,
    pub convergence_threshold_m: f64,
    pub visits: Vec<SegmentVisit>,
}

impl Summary {
    pub fn from_records(name: &str, records: &[LogRecord], threshold: f64, aborted: Option<String>) -> Self {
        use crate::control::events;
        let n = records.len();
        let duration = records.last().map_or(0.0, |r| r.t);
        let steady = &records[((n as f64) * 0.8) as usize..];
        let m = steady.len().max(1) as f64;
        let max_abs = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, |a: f64, b: f64| a.max(b.abs()));
        let sat = records.iter().filter(|r| r.events & (events::THRUST_LOW | events::THRUST_HIGH) != 0).count();
        let convergence = records.iter().rev().find(|r| r.y_norm >= threshold).map(|r| r.t);
        Summary {
            name: name.to_string(),
            duration_s: duration,
            steps: n,
            aborted,
            steady_mean_y_m: steady.iter().map(|r| r.y_norm).sum::<f64>() / m,
            steady_rms_y_m: (steady.iter().map(|r| r.y_norm * r.y_norm).sum::<f64>() / m).sqrt(),
            steady_max_y_m: max_abs(&mut steady.iter().map(|r| r.y_norm)),
            steady_max_beta_rad: max_abs(&mut steady.iter().map(|r| r.beta)),
            max_beta_rad: max_abs(&mut records.iter().map(|r| r.beta)),
            thrust_saturation_duty: if n == 0 { 0.0 } else { sat as f64 / n as f64 },
            convergence_time_s: convergence,
            convergence_threshold_m: threshold,
            visits: segment_visits(records, threshold),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}

/// Split the log into maximal runs on one segment and measure each run's settling.
pub fn segment_visits(records: &[LogRecord], threshold: f64) -> Vec<SegmentVisit> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=records.len() {
        if k == records.len() || records[k].segment != records[start].segment {
            let run = &records[start..k];
            let t0 = run[0].t;
            let last_bad = run.iter().rposition(|r| r.y_norm >= threshold);
            let settled = match last_bad {
                None => Some(0),
                Some(i) if i + 1 < run.len() => Some(i + 1),
                Some(_) => None,
            };
            let tail = settled.map(|i| &run[i..]);
            out.push(SegmentVisit {
                segment: run[0].segment,
                start_s: t0,
                end_s: run[run.len() - 1].t,
                settle_s: settled.map(|i| run[i].t - t0),
                steady_max_y_m: tail.map(|t| t.iter().fold(0.0, |a: f64, r| a.max(r.y_norm))),
                steady_max_beta_rad: tail.map(|t| t.iter().fold(0.0, |a: f64, r| a.max(r.beta.abs()))),
            });
            start = k;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, y: f64, seg: usize) -> LogRecord {
        let mut r: LogRecord = blank();
        r.t = t;
        r.y_norm = y;
        r.segment = seg;
        r
    }

    fn blank() -> LogRecord {
        LogRecord {
            t: 0.0,
            p_x: 0.0,
            p_y: 0.0,
            p_z: 0.0,
            v_x: 0.0,
            v_y: 0.0,
            v_z: 0.0,
            speed: 0.0,
            v_a1: 0.0,
            alpha: 0.0,
            beta: 0.0,
            y1: 0.0,
            y2: 0.0,
            y_norm: 0.0,
            theta_tilde: 0.0,
            e_v: 0.0,
            i_ev: 0.0,
            z_norm: 0.0,
            thrust: 0.0,
            delta1: 0.0,
            delta2: 0.0,
            delta3: 0.0,
            events: 0,
            segment: 0,
            h_err: 0.0,
            z_htilde: 0.0,
            sin_theta_h: 0.0,
            ydot1: 0.0,
            ydot2: 0.0,
            alpha_pred: 0.0,
            v_a2: 0.0,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut r = rec(0.1, 1.0 / 3.0, 2);
        r.p_x = std::f64::consts::PI * 1e-7;
        r.events = 17;
        let mut buf = Vec::new();
        write_csv(&[r, rec(0.2, 2e-300, 3)], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,p_x,p_y,p_z,v_x,v_y,v_z,speed,v_a1,alpha,beta,y1,y2,y_norm,theta_tilde,e_v,i_ev,z_norm,thrust,delta1,delta2,delta3,events,segment"));
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(back[0], r);
        assert_eq!(back[1].y_norm, 2e-300);
    }

    #[test]
    fn visits_and_settling() {
        let recs: Vec<_> = (0..30)
            .map(|k| {
                let t = k as f64;
                let seg = (k / 10) as usize;
                let y = if k % 10 < 3 { 5.0 } else { 0.5 };
                rec(t, y, seg)
            })
            .collect();
        let v = segment_visits(&recs, 1.5);
        assert_eq!(v.len(), 3);
        assert_eq!(v[1].segment, 1);
        assert_eq!(v[1].settle_s, Some(3.0));
        assert_eq!(v[1].steady_max_y_m, Some(0.5));
        let s = Summary::from_records("x", &recs, 1.5, None);
        assert_eq!(s.convergence_time_s, Some(22.0));
        assert_eq!(s.steps, 30);
    }
}
