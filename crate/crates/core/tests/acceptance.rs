//! End-to-end acceptance checks, one line per criterion.

use std::path::PathBuf;
use std::process::ExitCode;
use std::thread;
use std::time::Instant;

use pathfollow::airframe::AeroParams;
use pathfollow::control::{moving_guidance, Gains};
use pathfollow::math::Vec3;
use pathfollow::oracles::fit_log_slope;
use pathfollow::oracles::verify::{
    check_a2_threshold, check_attitude_decay, check_glide, check_heading_poles, check_heading_v0, check_lemma_grid,
    check_near_pi_escape,
};
use pathfollow::sim::{run_scenario, LogRecord, Scenario, CONVERGENCE_THRESHOLD_M};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn scenario(name: &str) -> Scenario {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"));
    Scenario::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn shipped() -> Vec<Scenario> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v.iter().filter(|p| p.extension().is_some_and(|e| e == "toml")).map(|p| Scenario::load(p).unwrap()).collect()
}

/// Segment visits that begin once the aircraft first reached the path. A final visit
/// cut off by the end of the run before it could settle is skipped.
fn mission_visits(records: &[LogRecord]) -> (Vec<pathfollow::sim::SegmentVisit>, f64) {
    let reached = records.iter().find(|r| r.y_norm < CONVERGENCE_THRESHOLD_M).map_or(f64::INFINITY, |r| r.t);
    let end = records.last().map_or(0.0, |r| r.t);
    let visits = pathfollow::sim::segment_visits(records, CONVERGENCE_THRESHOLD_M)
        .into_iter()
        .filter(|v| v.start_s > reached)
        .filter(|v| !(v.settle_s.is_none() && v.end_s >= end && v.end_s - v.start_s < 30.0))
        .collect();
    (visits, reached)
}

fn c2_mission() -> Outcome {
    let sc = scenario("racetrack_mission");
    let t0 = Instant::now();
    let run = run_scenario(&sc).expect("mission runs");
    let wall = t0.elapsed().as_secs_f64();
    let (visits, reached) = mission_visits(&run.records);
    let worst_settle = visits.iter().map(|v| v.settle_s.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let worst_y = visits.iter().map(|v| v.steady_max_y_m.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let late_y = visits
        .iter()
        .flat_map(|v| {
            let mid = 0.5 * (v.start_s + v.end_s);
            run.records.iter().filter(move |r| r.t >= mid && r.t < v.end_s).map(|r| r.y_norm)
        })
        .fold(0.0, f64::max);
    let passed =
        run.summary.aborted.is_none() && visits.len() >= 6 && worst_settle < 30.0 && worst_y < 1.5 && wall < 60.0;
    outcome(
        passed,
        format!(
            "{} visits after reaching the path at {reached:.1} s; worst settle {worst_settle:.2} s, worst steady |y| {worst_y:.3} m, second-half |y| {late_y:.3} m, {wall:.1} s wall",
            visits.len()
        ),
    )
}

fn c6_speed_loop() -> Outcome {
    let sc = scenario("planar_speed_step");
    let run = run_scenario(&sc).expect("speed step runs");
    let r = &run.records;
    let gains = &sc.gains;
    let lateral = r.iter().map(|x| x.v_a2.abs()).fold(0.0, f64::max);
    // log-linear decay from the post-transient peak down to the numerical floor
    let k_peak =
        (0..r.len()).filter(|&k| r[k].t >= 1.0).max_by(|&a, &b| r[a].e_v.abs().total_cmp(&r[b].e_v.abs())).unwrap();
    let k_end = (k_peak..r.len()).find(|&k| r[k].e_v.abs() < 1e-6).unwrap_or(r.len());
    let t: Vec<f64> = r[k_peak..k_end].iter().map(|x| x.t).collect();
    let v: Vec<f64> = r[k_peak..k_end].iter().map(|x| x.e_v.abs()).collect();
    let fit = fit_log_slope(&t, &v, 0.0);
    let late = &r[r.len() / 2..];
    let i_max = late.iter().map(|x| x.i_ev.abs()).fold(0.0, f64::max);
    let passed = lateral == 0.0 && fit.is_some_and(|f| f.r2 > 0.99 && f.slope < 0.0) && i_max <= gains.delta_ev_mps;
    outcome(
        passed,
        format!(
            "max |v_a2| {lateral:.1e}; e_v fit over [{:.1}, {:.1}] s: {}; late max |I_ev| {i_max:.2e} <= {}",
            t.first().unwrap_or(&0.0),
            t.last().unwrap_or(&0.0),
            fit.map_or("none".to_string(), |f| format!("slope {:.3}/s R2 {:.4}", f.slope, f.r2)),
            gains.delta_ev_mps
        ),
    )
}

fn c7_guidance_bounds() -> Outcome {
    const SETTLE_S: f64 = 5.0;
    let mut worst = (0.0f64, String::new());
    let mut sin_max = (0.0f64, String::new());
    let mut ok = true;
    let mut errors = Vec::new();
    for sc in shipped() {
        let run = match run_scenario(&sc) {
            Ok(r) => r,
            Err(e) => {
                errors.push(format!("{}: {e}", sc.name));
                continue;
            }
        };
        let g = &sc.gains;
        let dmax = g.d1.max(g.d2);
        let mut start = (usize::MAX, 0.0);
        for r in &run.records {
            if r.sin_theta_h > g.mu {
                ok = false;
            }
            if r.sin_theta_h > sin_max.0 {
                sin_max = (r.sin_theta_h, sc.name.clone());
            }
            if r.segment != start.0 {
                start = (r.segment, r.t);
            }
            // ultimately: away from the start of the run and from segment switches
            if r.t - start.1 < SETTLE_S || r.t < 2.0 * SETTLE_S {
                continue;
            }
            let cap = g.mu * r.speed * 1.05;
            for (yd, d) in [(r.ydot1, g.d1), (r.ydot2, g.d2)] {
                let ratio = yd.abs() / (d / dmax * cap);
                if ratio > worst.0 {
                    worst = (ratio, sc.name.clone());
                }
            }
        }
    }
    let passed = ok && worst.0 <= 1.0 && errors.is_empty();
    outcome(
        passed,
        format!(
            "worst |ydot_i| / bound {:.3} ({}); max sin theta_h {:.4} ({}) vs mu; {}",
            worst.0,
            worst.1,
            sin_max.0,
            sin_max.1,
            if errors.is_empty() { "all scenarios ran".to_string() } else { errors.join("; ") }
        ),
    )
}

fn c9_balanced() -> Outcome {
    let sc = scenario("racetrack_mission");
    let run = run_scenario(&sc).expect("mission runs");
    let (visits, _) = mission_visits(&run.records);
    let beta = visits.iter().map(|v| v.steady_max_beta_rad.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    // lateral air speed over the same settled windows
    let mut va2 = 0.0f64;
    for v in &visits {
        let from = v.start_s + v.settle_s.unwrap_or(0.0);
        for r in run.records.iter().filter(|r| r.t >= from && r.t < v.end_s) {
            va2 = va2.max(r.v_a2.abs());
        }
    }
    let passed = beta.to_degrees() < 2.0 && va2 < 0.5;
    outcome(passed, format!("steady max |beta| {:.3} deg, steady max |v_a2| {va2:.3} m/s", beta.to_degrees()))
}

fn c10_attack_guard() -> Outcome {
    let sc = scenario("steep_climb_guard");
    let run = run_scenario(&sc).expect("climb runs");
    let a_max = sc.gains.alpha_max_rad;
    let t_conv = run.records.iter().find(|r| r.theta_tilde < 1e-2).map(|r| r.t);
    let worst = match t_conv {
        Some(tc) => run.records.iter().filter(|r| r.t >= tc).map(|r| r.alpha_pred).fold(f64::NEG_INFINITY, f64::max),
        None => f64::INFINITY,
    };
    let guarded = run.records.iter().filter(|r| r.events & pathfollow::control::events::ATTACK_GUARD != 0).count();
    let passed = worst <= a_max + 0.01 && guarded > 0;
    outcome(
        passed,
        format!(
            "attitude converged at {:?} s; max predicted attack angle {worst:.4} rad vs {a_max} + 0.01; guard active in {guarded} steps",
            t_conv
        ),
    )
}

fn c11_moving_path() -> Outcome {
    let sc = scenario("moving_circle");
    let run = run_scenario(&sc).expect("moving circle runs");
    let steady = run.summary.steady_max_y_m;
    // with no carrier motion the corrected heading is the plain one, bit for bit
    let mut exact = true;
    for k in 0..200 {
        let a = k as f64 * 0.37;
        let b = (k as f64 * 0.11).sin() * 1.4;
        let h = Vec3::new(a.cos() * b.cos(), a.sin() * b.cos(), b.sin());
        for s in [0.6, 10.0, 37.5] {
            match moving_guidance(h, Vec3::zeros(), s) {
                Ok(hc) => exact &= hc.to_array().map(f64::to_bits) == h.to_array().map(f64::to_bits),
                Err(_) => exact = false,
            }
        }
    }
    outcome(steady < 1.5 && exact, format!("steady max |y| {steady:.4} m; h*_c == h* bitwise at v_c = 0: {exact}"))
}

fn main() -> ExitCode {
    let params = AeroParams::default();
    let gains = Gains::default();
    type Job = Box<dyn FnOnce() -> Outcome + Send>;
    let jobs: Vec<(&str, Job)> = vec![
        (
            "glide metrics",
            Box::new(move || {
                let c = check_glide(&AeroParams::default());
                outcome(c.passed, c.detail)
            }),
        ),
        ("racetrack mission", Box::new(c2_mission)),
        (
            "linearized heading poles",
            Box::new(move || {
                let c = check_heading_poles(1.4, 0.49).expect("valid gains");
                outcome(c.passed, c.detail)
            }),
        ),
        (
            "attitude decay",
            Box::new(move || {
                let c = check_attitude_decay(7.0);
                let e = check_near_pi_escape(7.0);
                outcome(c.passed && e.passed, format!("{}; {}", c.detail, e.detail))
            }),
        ),
        (
            "heading V0 monotone",
            Box::new(move || {
                let c = check_heading_v0(&gains).expect("heading run");
                outcome(c.passed, c.detail)
            }),
        ),
        ("speed loop", Box::new(c6_speed_loop)),
        ("guidance bounds", Box::new(c7_guidance_bounds)),
        (
            "lemma oracle grid",
            Box::new(|| {
                let t0 = Instant::now();
                let c = check_lemma_grid(100, 7);
                let wall = t0.elapsed().as_secs_f64();
                outcome(c.passed && wall < 30.0, format!("{}; {wall:.1} s wall", c.detail))
            }),
        ),
        ("balanced flight", Box::new(c9_balanced)),
        ("attack-angle guard", Box::new(c10_attack_guard)),
        ("moving path", Box::new(c11_moving_path)),
        (
            "A2 threshold speed",
            Box::new(move || {
                let c = check_a2_threshold(&params).expect("circle builds");
                outcome(c.passed, c.detail)
            }),
        ),
    ];
    let handles: Vec<_> = jobs.into_iter().map(|(name, job)| (name, thread::spawn(job))).collect();
    let mut failed = 0;
    for (k, (name, h)) in handles.into_iter().enumerate() {
        let o = h.join().unwrap_or_else(|e| outcome(false, format!("panicked: {e:?}")));
        if !o.passed {
            failed += 1;
        }
        println!("{} {:>2} {:<26} {}", if o.passed { "PASS" } else { "FAIL" }, k + 1, name, o.detail);
    }
    println!("acceptance: {} of 12 passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
