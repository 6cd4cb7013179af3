//! Attitude error decay under the rate law, from a large initial error.
use pathfollow::math::{Attitude, Vec3};
use pathfollow::oracles::{attitude_decay, attitude_run};

fn main() {
    let k = 7.0;
    let run = attitude_run(
        Attitude::from_euler(2.0, -0.8, 1.5),
        Attitude::identity(),
        Vec3::new(0.0, 0.0, 0.4),
        k,
        2.0,
        1e-4,
    );
    let d = attitude_decay(&run, k, 1e-6);
    println!("initial error {:.3} rad, final {:.2e} rad", run.theta[0], d.final_theta);
    println!("log slope {:?} (expected {:.1})", d.fit.map(|f| f.slope), d.expected);
}
