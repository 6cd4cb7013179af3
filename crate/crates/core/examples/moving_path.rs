//! Follow a circle carried by a steady wind-like drift and compare the carrier-frame
//! heading with the inertial one.
use pathfollow::control::moving_guidance;
use pathfollow::sim::{run_scenario, Scenario};

fn main() -> pathfollow::Result<()> {
    let sc = Scenario::load(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/moving_circle.toml"))?;
    let run = run_scenario(&sc)?;
    println!("steady max |y| {:.3} m over the last fifth", run.summary.steady_max_y_m);

    let h = pathfollow::math::Vec3::e2();
    for vc in [0.0, 2.0, 5.0] {
        let hc = moving_guidance(h, pathfollow::math::Vec3::new(vc, 0.0, 0.0), 12.0)?;
        println!("carrier {vc:.0} m/s east: commanded ({:+.3} {:+.3} {:+.3})", hc.x, hc.y, hc.z);
    }
    Ok(())
}
