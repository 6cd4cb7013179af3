//! Run every shipped scenario in parallel into a temporary directory.
use pathfollow::sim::{expand, run_batch};

fn main() -> pathfollow::Result<()> {
    let files = expand(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/*.toml"))?;
    let out = std::env::temp_dir().join("pathfollow-batch");
    for (f, r) in run_batch(&files, &out, 4)? {
        match r {
            Ok(s) => println!(
                "{:<22} |y| max {:.3} m, beta max {:.2} deg",
                s.name,
                s.steady_max_y_m,
                s.steady_max_beta_rad.to_degrees()
            ),
            Err(e) => println!("{}: {e}", f.display()),
        }
    }
    println!("logs in {}", out.display());
    Ok(())
}
