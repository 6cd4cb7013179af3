use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::log::{write_csv, Summary};
use super::runner::{run_scenario, Run};
use super::scenario::Scenario;

/// Run a scenario and write `log.csv` and `summary.toml` into `out_dir`.
pub fn run_to_dir(sc: &Scenario, out_dir: &Path) -> Result<Run> {
    let run = run_scenario(sc)?;
    fs::create_dir_all(out_dir)?;
    write_csv(&run.records, fs::File::create(out_dir.join("log.csv"))?)?;
    fs::write(out_dir.join("summary.toml"), run.summary.to_toml())?;
    Ok(run)
}

/// Scenario files matching a glob pattern, sorted.
pub fn expand(pattern: &str) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> =
        glob::glob(pattern).map_err(|e| Error::Scenario(e.to_string()))?.filter_map(|p| p.ok()).collect();
    v.sort();
    Ok(v)
}

/// Run every file in parallel on `threads` workers; each result lands in
/// `out_dir/<scenario name>/`.
pub fn run_batch(files: &[PathBuf], out_dir: &Path, threads: usize) -> Result<Vec<(PathBuf, Result<Summary>)>> {
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().map_err(|e| Error::Io(e.to_string()))?;
    Ok(pool.install(|| {
        files
            .par_iter()
            .map(|f| {
                let r =
                    Scenario::load(f).and_then(|sc| run_to_dir(&sc, &out_dir.join(&sc.name))).map(|run| run.summary);
                (f.clone(), r)
            })
            .collect()
    }))
}
