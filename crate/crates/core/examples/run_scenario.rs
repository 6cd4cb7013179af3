//! Fly a scenario file and print its summary.
//!
//! cargo run --release --example run_scenario -- scenarios/racetrack_mission.toml
use pathfollow::sim::{run_scenario, Scenario};

fn main() -> pathfollow::Result<()> {
    let file = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/racetrack_mission.toml").into());
    let sc = Scenario::load(&file)?;
    let run = run_scenario(&sc)?;
    print!("{}", run.summary.to_toml());
    for v in run.summary.visits.iter().take(6) {
        println!("segment {} from {:.1} s settled after {:?} s", v.segment, v.start_s, v.settle_s);
    }
    Ok(())
}
