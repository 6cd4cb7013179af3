use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};

use pathfollow::airframe::{glide_metrics, AeroParams, G0};
use pathfollow::oracles::run_verify;
use pathfollow::sim::{expand, run_batch, run_to_dir, Scenario};
use pathfollow::{Error, Result};

/// Scenarios compiled into the binary, usable by name with `run --scenario`.
const BUILTIN: &[(&str, &str)] = &[
    ("racetrack_mission", include_str!("../../scenarios/racetrack_mission.toml")),
    ("straight_line_trim", include_str!("../../scenarios/straight_line_trim.toml")),
    ("moving_circle", include_str!("../../scenarios/moving_circle.toml")),
    ("steep_climb_guard", include_str!("../../scenarios/steep_climb_guard.toml")),
    ("planar_speed_step", include_str!("../../scenarios/planar_speed_step.toml")),
    ("surface_line", include_str!("../../scenarios/surface_line.toml")),
    ("two_axis_circle", include_str!("../../scenarios/two_axis_circle.toml")),
    ("noisy_racetrack", include_str!("../../scenarios/noisy_racetrack.toml")),
];

#[derive(Parser)]
#[command(name = "pathfollow", version, about = "Fixed-wing path following simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write log.csv and summary.toml.
    Run {
        /// Scenario file, or the name of a built-in scenario.
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the scenario's noise seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario's duration in seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Run every scenario file matching a glob, in parallel.
    Batch {
        #[arg(long)]
        scenarios: String,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the numerical stability checks.
    Verify,
    /// Glide metrics of an airframe.
    Metrics {
        /// TOML file with `mass_kg`, `c0_kg_per_m`, `c1_kg_per_m` (and optionally `inertia_kgm2`).
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = G0)]
        g0: f64,
    },
    /// List the built-in scenarios.
    List,
}

fn load_scenario(s: &str) -> Result<Scenario> {
    if let Some((_, text)) = BUILTIN.iter().find(|(n, _)| *n == s) {
        return Scenario::from_toml(text);
    }
    Scenario::load(s)
}

fn run(scenario: &str, out: &Path, seed: Option<u64>, duration: Option<f64>) -> Result<bool> {
    let mut sc = load_scenario(scenario)?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    if let Some(d) = duration {
        sc.duration_s = d;
    }
    sc.validate()?;
    let dir = out.join(&sc.name);
    let run = run_to_dir(&sc, &dir)?;
    print!("{}", run.summary.to_toml());
    info!("wrote {}", dir.display());
    if let Some(reason) = &run.summary.aborted {
        error!("aborted: {reason}");
        return Ok(false);
    }
    Ok(true)
}

fn batch(pattern: &str, parallel: usize, out: &Path) -> Result<bool> {
    let files = expand(pattern)?;
    if files.is_empty() {
        return Err(Error::Scenario(format!("no scenario matches {pattern}")));
    }
    let mut ok = true;
    for (f, r) in run_batch(&files, out, parallel)? {
        match r {
            Ok(s) if s.aborted.is_none() => println!(
                "ok      {:<28} steady max |y| {:.3} m, converged at {:?} s",
                s.name, s.steady_max_y_m, s.convergence_time_s
            ),
            Ok(s) => {
                ok = false;
                println!("aborted {:<28} {}", s.name, s.aborted.unwrap_or_default());
            }
            Err(e) => {
                ok = false;
                println!("error   {:<28} {e}", f.display());
            }
        }
    }
    Ok(ok)
}

fn metrics(params: Option<&Path>, g0: f64) -> Result<bool> {
    let p = match params {
        Some(f) => {
            let p: AeroParams =
                toml::from_str(&std::fs::read_to_string(f)?).map_err(|e| Error::Scenario(e.to_string()))?;
            p.validate()?;
            p
        }
        None => AeroParams::default(),
    };
    let m = glide_metrics(&p, g0);
    println!("mass_kg            {:>10.4}", p.mass_kg);
    println!("c0_kg_per_m        {:>10.4}", p.c0_kg_per_m);
    println!("c1_kg_per_m        {:>10.4}", p.c1_kg_per_m);
    println!("c0bar_kg_per_m     {:>10.4}", p.c0_bar());
    println!("glide_ratio        {:>10.4}", m.glide_ratio);
    println!("glide_ratio_exact  {:>10.4}", m.glide_ratio_exact);
    println!("glide_speed_mps    {:>10.4}", m.glide_speed);
    println!("sink_rate_mps      {:>10.4}", m.sink_rate);
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Run { scenario, out, seed, duration } => run(&scenario, &out, seed, duration),
        Cmd::Batch { scenarios, parallel, out } => batch(&scenarios, parallel, &out),
        Cmd::Verify => run_verify().map(|r| {
            print!("{r}");
            r.passed()
        }),
        Cmd::Metrics { params, g0 } => metrics(params.as_deref(), g0),
        Cmd::List => {
            for (n, text) in BUILTIN {
                let d = Scenario::from_toml(text).map(|s| s.description).unwrap_or_default();
                println!("{n:<20} {}", d.lines().next().unwrap_or(""));
            }
            Ok(true)
        }
    };
    match r {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            error!("{e}");
            ExitCode::from(2)
        }
    }
}
