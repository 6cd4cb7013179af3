//! Record a run and check the heading and attitude Lyapunov candidates along it.
use pathfollow::oracles::{monotone_tol, LyapunovTrace};
use pathfollow::sim::{run_scenario, Scenario};

fn main() -> pathfollow::Result<()> {
    let sc = Scenario::load(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/surface_line.toml"))?;
    let run = run_scenario(&sc)?;
    let tol = monotone_tol(sc.dt_controller_s);

    let v0 = LyapunovTrace::heading_v0(&run.records, sc.gains.k_h2);
    let att = LyapunovTrace::attitude_tan2(&run.records);
    println!("heading V0 start {:.3e} end {:.3e}", v0.v[0], v0.v.last().unwrap());
    // the closed loop carries the attitude error into the heading loop, so small
    // rises during the transient are expected here
    println!("heading V0 monotone: {:?}", v0.check_nonincreasing(tol));
    println!("attitude tan^2 fit over first 5 s: {:?}", att.window(0.0, 5.0).fit_log_slope(1e-12));
    Ok(())
}
