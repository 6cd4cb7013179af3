//! Integrate a handful of perturbed saturated-integrator systems and check each property.
use pathfollow::oracles::{check_lemma1, fuzz_grid};

fn main() -> pathfollow::Result<()> {
    for (sys, x0, y0) in fuzz_grid(6, 3) {
        let tr = sys.integrate(&x0, &y0, 40.0, 2e-3)?;
        let rep = check_lemma1(&sys, &tr);
        println!("dim {} {:?}: {}", sys.dim, sys.perturbation, if rep.passed() { "ok" } else { "FAILED" });
        for c in &rep.checks {
            println!("  ({}) {}", c.property, c.detail);
        }
    }
    Ok(())
}
