//! Reference systems and monitors used to check the controller numerically.

pub mod attitude;
pub mod heading;
pub mod lemma1;
pub mod monitor;
pub mod verify;

pub use attitude::{attitude_decay, attitude_run, AttitudeDecay, AttitudeRun};
pub use heading::{heading_run, linearized_heading_poles, HeadingPoles, HeadingRun, QuadRoots};
pub use lemma1::{check_lemma1, fuzz_grid, Lemma1Report, Lemma1System, Lemma1Trace, Perturbation};
pub use monitor::{fit_log_slope, monotone_tol, LogFit, LyapunovTrace, MonotoneReport};
pub use verify::{run_verify, VerifyCheck, VerifyReport};
