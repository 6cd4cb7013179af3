//! Walk a frame around a flat racetrack by parallel transport, handing the
//! triad from one segment to the next, and compare it with the closed-form frames.
use pathfollow::path::{advance_frame, racetrack, Curve};

fn main() -> pathfollow::Result<()> {
    let c = racetrack(200.0, 50.0, 0.0, 100.0)?;
    let Curve::Composite { segments, .. } = &c else { unreachable!() };
    let ds: f64 = 0.5;
    let mut f = c.frame_at(0.0, 0);
    let (mut worst_ortho, mut worst_tangent): (f64, f64) = (0.0, 0.0);
    let mut end = 0.0;
    for (k, seg) in segments.iter().enumerate() {
        f.segment = k;
        end += seg.length();
        while f.s < end - 1e-9 {
            f = advance_frame(&f, ds.min(end - f.s), &c)?;
            worst_ortho = worst_ortho.max(f.orthonormality_error());
            worst_tangent = worst_tangent.max((f.u - c.frame_at(f.s, k).u).norm());
        }
        println!("end of segment {k} at s {:7.1}: u ({:+.3} {:+.3} {:+.3})", f.s, f.u.x, f.u.y, f.u.z);
    }
    let start = c.frame_at(0.0, 0);
    println!("lap {end:.1} m");
    println!("worst orthonormality error {worst_ortho:.2e}, worst tangent error {worst_tangent:.2e}");
    println!("normal after one lap vs start: {:.2e}", (f.u_bar - start.u_bar).norm());
    Ok(())
}
