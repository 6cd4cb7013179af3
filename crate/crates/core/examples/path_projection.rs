//! Closest-point projection onto a line, a circle and a racetrack.
use pathfollow::math::Vec3;
use pathfollow::path::{closest_point, racetrack, Curve};

fn main() -> pathfollow::Result<()> {
    let p = Vec3::new(60.0, 10.0, -105.0);
    let curves = [
        ("line", Curve::line(Vec3::new(0.0, 0.0, -100.0), Vec3::e1())?),
        ("circle", Curve::circle(Vec3::new(0.0, 0.0, -100.0), 50.0, Vec3::e3())?),
        ("racetrack", racetrack(200.0, 50.0, 0.0, 100.0)?),
    ];
    for (name, c) in &curves {
        let (f, e) = closest_point(c, p, None)?;
        println!(
            "{name:<10} s {:8.3} seg {} q ({:7.2} {:7.2} {:7.2}) y ({:7.3} {:7.3}) |y| {:.3} curvature {:.4}",
            f.s,
            f.segment,
            f.q.x,
            f.q.y,
            f.q.z,
            e.y1,
            e.y2,
            e.norm(),
            f.curvature()
        );
    }
    Ok(())
}
