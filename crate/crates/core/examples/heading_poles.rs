//! Linearized heading-loop poles for a few gain pairs, checked against an eigensolver.
use pathfollow::oracles::heading::{eigen_disagreement, linearized_heading_matrix};
use pathfollow::oracles::linearized_heading_poles;

fn main() -> pathfollow::Result<()> {
    for (k1, k2) in [(1.4, 0.49), (1.0, 2.0), (3.0, 0.5)] {
        let p = linearized_heading_poles(k1, k2)?;
        let gap = eigen_disagreement(&linearized_heading_matrix(k1, k2, true), &p.stable);
        println!("k_h1 {k1} k_h2 {k2}: stable {:?} unstable {:?} eigen gap {gap:.1e}", p.stable, p.unstable);
    }
    Ok(())
}
