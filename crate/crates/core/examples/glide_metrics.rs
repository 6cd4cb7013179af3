//! Best-glide figures for the default airframe and a heavier variant.
use pathfollow::airframe::{glide_metrics, AeroParams, G0};

fn main() -> pathfollow::Result<()> {
    for p in [AeroParams::default(), AeroParams::new(3.0, 0.006, 0.5)?] {
        let m = glide_metrics(&p, G0);
        println!(
            "mass {:.1} kg: glide ratio {:.3} (exact {:.3}), speed {:.2} m/s, sink {:.2} m/s",
            p.mass_kg, m.glide_ratio, m.glide_ratio_exact, m.glide_speed, m.sink_rate
        );
    }
    Ok(())
}
