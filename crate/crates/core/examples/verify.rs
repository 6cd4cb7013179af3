//! Run the full set of numerical checks, as `pathfollow verify` does.
fn main() -> pathfollow::Result<()> {
    let rep = pathfollow::oracles::run_verify()?;
    print!("{rep}");
    std::process::exit(if rep.passed() { 0 } else { 1 });
}
