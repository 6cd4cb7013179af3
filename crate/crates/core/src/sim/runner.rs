use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::airframe::{acceleration, flow_angles, step_dynamics, AircraftState, Plant, PlantInput, RotationInput};
use crate::control::{events, ControlCommand, Controller, ControllerMemory, Diagnostics, Measurements};
use crate::error::{Error, Result};
use crate::math::{Attitude, Body, Vec3};

use super::log::{LogRecord, Summary};
use super::scenario::{NoiseSpec, Scenario};

/// `|y|` below which a segment counts as converged in summaries.
pub const CONVERGENCE_THRESHOLD_M: f64 = 1.5;
/// Longest stretch of held commands tolerated before the run is aborted.
const MAX_HOLD_S: f64 = 1.0;

/// State of the loop at one controller sample, handed to observers.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub t: f64,
    pub state: &'a AircraftState,
    pub measurements: &'a Measurements,
    pub memory: &'a ControllerMemory,
    /// `None` when the controller could not evaluate and the previous command was held.
    pub diagnostics: Option<&'a Diagnostics>,
    pub command: &'a ControlCommand,
}

#[derive(Debug, Clone)]
pub struct Run {
    pub records: Vec<LogRecord>,
    pub summary: Summary,
    pub final_state: AircraftState,
}

struct Noise {
    rng: ChaCha8Rng,
    spec: NoiseSpec,
}

impl Noise {
    fn gauss(&mut self, sd: f64) -> f64 {
        if sd > 0.0 {
            Normal::new(0.0, sd).expect("finite sd").sample(&mut self.rng)
        } else {
            0.0
        }
    }

    fn vec<F: crate::math::Frame>(&mut self, sd: f64) -> Vec3<F> {
        Vec3::new(self.gauss(sd), self.gauss(sd), self.gauss(sd))
    }
}

fn measure(
    state: &AircraftState,
    sc: &Scenario,
    plant: &Plant,
    thrust: f64,
    t: f64,
    noise: &mut Option<Noise>,
) -> Measurements {
    let v_a = state.air_velocity(&sc.wind, t);
    let accel = plant.gravity() - acceleration(state, thrust, &sc.wind, plant, t);
    let mut m = Measurements {
        t,
        p: state.p,
        v: state.v,
        attitude: state.attitude,
        omega: state.omega,
        v_a1: v_a.x,
        v_a,
        accel,
    };
    if let Some(n) = noise {
        let s = n.spec;
        m.p += n.vec(s.position_m);
        m.v += n.vec(s.velocity_mps);
        let tilt: Vec3 = n.vec(s.attitude_rad);
        m.attitude = Attitude(nalgebra::UnitQuaternion::from_scaled_axis(tilt.to_na()) * m.attitude.0);
        m.omega += n.vec::<Body>(s.omega_radps);
        m.v_a1 += n.gauss(s.pitot_mps);
        m.accel += n.vec(s.accel_mps2);
        m.v_a = m.attitude.to_body(m.v - sc.wind.velocity(t));
    }
    m
}

fn record(
    t: f64,
    state: &AircraftState,
    sc: &Scenario,
    d: &Diagnostics,
    cmd: &ControlCommand,
    events: u32,
) -> LogRecord {
    let v_a = state.air_velocity(&sc.wind, t);
    let (alpha, beta) = flow_angles(v_a).map_or((f64::NAN, f64::NAN), |a| (a.alpha, a.beta));
    let delta = match cmd.rotation {
        RotationInput::Surfaces(s) => s,
        _ => d.delta,
    };
    let rates = d.rates.map_or([f64::NAN; 2], |r| [r.y1_dot, r.y2_dot]);
    let speed = state.v.norm();
    LogRecord {
        t,
        p_x: state.p.x,
        p_y: state.p.y,
        p_z: state.p.z,
        v_x: state.v.x,
        v_y: state.v.y,
        v_z: state.v.z,
        speed,
        v_a1: v_a.x,
        alpha,
        beta,
        y1: d.err.y1,
        y2: d.err.y2,
        y_norm: d.err.norm(),
        theta_tilde: d.attitude_error,
        e_v: d.e_v,
        i_ev: d.i_ev,
        z_norm: d.z_norm,
        thrust: cmd.thrust,
        delta1: delta[0],
        delta2: delta[1],
        delta3: delta[2],
        events,
        segment: d.frame.segment,
        h_err: d.h.cross(d.h_star_c).norm().atan2(d.h.dot(d.h_star_c)),
        z_htilde: d.z.dot(d.heading.h_tilde),
        sin_theta_h: d.guidance.sin_theta_h,
        ydot1: rates[0],
        ydot2: rates[1],
        alpha_pred: d.alpha_pred,
        v_a2: v_a.y,
    }
}

pub fn run_scenario(sc: &Scenario) -> Result<Run> {
    run_scenario_with(sc, |_| {})
}

/// Closed-loop run: the plant advances at `dt_plant_s` with the controller
/// output held between controller samples. Validation and start-up failures
/// are returned as errors; a non-finite state or a prolonged loss of the
/// controller ends the run early with `summary.aborted` set.
pub fn run_scenario_with(sc: &Scenario, mut observe: impl FnMut(&StepView)) -> Result<Run> {
    sc.validate()?;
    let sub = sc.substeps()?;
    let plant = sc.plant()?;
    let ctrl: Controller = sc.controller()?;
    let mut noise =
        (!sc.plant.noise.is_off()).then(|| Noise { rng: ChaCha8Rng::seed_from_u64(sc.seed), spec: sc.plant.noise });
    let steps = (sc.duration_s / sc.dt_controller_s).round() as usize;
    let mut state = sc.initial_state();
    let mut mem = ControllerMemory::default();
    let mut records = Vec::with_capacity(steps + 1);
    let mut last: Option<(ControlCommand, Diagnostics)> = None;
    let mut held_steps = 0usize;
    let mut aborted = None;

    for k in 0..=steps {
        let t = k as f64 * sc.dt_controller_s;
        let thrust = last.map_or(0.0, |(c, _)| c.thrust);
        let m = measure(&state, sc, &plant, thrust, t, &mut noise);
        let (cmd, diag, ev) = match ctrl.step(&mut mem, &m) {
            Ok((c, d)) => {
                held_steps = 0;
                (c, d, d.events)
            }
            Err(e) => {
                let Some((c, d)) = last else { return Err(e) };
                held_steps += 1;
                if held_steps as f64 * sc.dt_controller_s > MAX_HOLD_S {
                    aborted = Some(format!("controller unavailable for {MAX_HOLD_S} s: {e}"));
                    break;
                }
                (c, d, events::COMMAND_HELD)
            }
        };
        records.push(record(t, &state, sc, &diag, &cmd, ev));
        observe(&StepView {
            t,
            state: &state,
            measurements: &m,
            memory: &mem,
            diagnostics: (ev & events::COMMAND_HELD == 0).then_some(&diag),
            command: &cmd,
        });
        last = Some((cmd, diag));
        if k == steps {
            break;
        }
        let input = PlantInput { thrust: cmd.thrust, rotation: cmd.rotation };
        let mut next = state;
        let mut failed = None;
        for s in 0..sub {
            let ts = t + s as f64 * sc.dt_plant_s;
            match step_dynamics(&next, &input, &sc.wind, &plant, ts, sc.dt_plant_s) {
                Ok(x) => next = x,
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = failed {
            aborted = Some(e.to_string());
            break;
        }
        state = next;
    }
    if aborted.is_none() && !state.is_finite() {
        aborted = Some(Error::NonFiniteState.to_string());
    }
    let summary = Summary::from_records(&sc.name, &records, CONVERGENCE_THRESHOLD_M, aborted);
    Ok(Run { records, summary, final_state: state })
}
