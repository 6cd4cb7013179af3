//! Simulated plant: aerodynamic force model, wind, glide metrics and the
//! Newton-Euler rigid-body integrator.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Attitude, Body, Vec3};

pub const G0: f64 = 9.81;
/// Below this air speed the flow angles are undefined.
pub const EPS_SPEED: f64 = 0.5;

/// Transversal aerodynamic term `O(v_a)` multiplying the lateral air speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LateralModel {
    /// `O = -c0 |v_a| j` (disc-shaped body).
    #[default]
    Disc,
    /// `O = -coef |v_a| j`, a side force from a vertical fin.
    Fin { coef_kg_per_m: f64 },
    /// `O = 0`.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeroParams {
    pub mass_kg: f64,
    /// Body-frame inertia matrix, row-major.
    #[serde(default = "default_inertia")]
    pub inertia_kgm2: [[f64; 3]; 3],
    pub c0_kg_per_m: f64,
    pub c1_kg_per_m: f64,
    #[serde(default)]
    pub lateral: LateralModel,
}

fn default_inertia() -> [[f64; 3]; 3] {
    AeroParams::default().inertia_kgm2
}

impl Default for AeroParams {
    /// 2 kg, 1.5 m span model. The inertia is a plausible guess for that size,
    /// not a measured value.
    fn default() -> Self {
        Self {
            mass_kg: 2.0,
            inertia_kgm2: [[0.02, 0.0, 0.0], [0.0, 0.04, 0.0], [0.0, 0.0, 0.05]],
            c0_kg_per_m: 0.006,
            c1_kg_per_m: 0.5,
            lateral: LateralModel::Disc,
        }
    }
}

impl AeroParams {
    pub fn new(mass_kg: f64, c0: f64, c1: f64) -> Result<Self> {
        let p = Self { mass_kg, c0_kg_per_m: c0, c1_kg_per_m: c1, ..Self::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.mass_kg > 0.0 && self.mass_kg.is_finite()) {
            return bad("mass must be positive");
        }
        if !(self.c0_kg_per_m > 0.0 && self.c1_kg_per_m >= 0.0) {
            return bad("aerodynamic coefficients must satisfy c0 > 0, c1 >= 0");
        }
        let j = self.inertia();
        if (j - j.transpose()).amax() > 1e-12 {
            return bad("inertia must be symmetric");
        }
        if j.cholesky().is_none() {
            return bad("inertia must be positive definite");
        }
        Ok(())
    }

    /// `c0 + 2 c1`.
    pub fn c0_bar(&self) -> f64 {
        self.c0_kg_per_m + 2.0 * self.c1_kg_per_m
    }

    pub fn inertia(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.inertia_kgm2[r][c])
    }

    /// Copy with scaled coefficients and optionally a different lateral term.
    pub fn perturbed(&self, c0_scale: f64, c1_scale: f64, lateral: Option<LateralModel>) -> Self {
        Self {
            c0_kg_per_m: self.c0_kg_per_m * c0_scale,
            c1_kg_per_m: self.c1_kg_per_m * c1_scale,
            lateral: lateral.unwrap_or(self.lateral),
            ..self.clone()
        }
    }

    fn lateral_term(&self, speed: f64) -> Vec3<Body> {
        match self.lateral {
            LateralModel::Disc => Vec3::e2() * (-self.c0_kg_per_m * speed),
            LateralModel::Fin { coef_kg_per_m } => Vec3::e2() * (-coef_kg_per_m * speed),
            LateralModel::None => Vec3::zeros(),
        }
    }
}

/// Aerodynamic force in body coordinates:
/// `-(c0 v1 i + c0bar v3 k)|v_a| + v2 O(v_a)`.
pub fn aero_force(v_a: Vec3<Body>, params: &AeroParams) -> Vec3<Body> {
    let speed = v_a.norm();
    let drag_lift = Vec3::new(-params.c0_kg_per_m * v_a.x * speed, 0.0, -params.c0_bar() * v_a.z * speed);
    drag_lift + params.lateral_term(speed) * v_a.y
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlideMetrics {
    /// `(1 - c0/c0bar) / (2 sqrt(c0/c0bar))`.
    pub glide_ratio_exact: f64,
    /// `0.5 sqrt(c0bar/c0)`.
    pub glide_ratio: f64,
    pub glide_speed: f64,
    pub sink_rate: f64,
}

pub fn glide_metrics(params: &AeroParams, g0: f64) -> GlideMetrics {
    let c0 = params.c0_kg_per_m;
    let cb = params.c0_bar();
    let r = c0 / cb;
    let glide_ratio = 0.5 * (cb / c0).sqrt();
    let glide_speed = (params.mass_kg * g0).sqrt() / (c0 * cb).powf(0.25);
    GlideMetrics {
        glide_ratio_exact: (1.0 - r) / (2.0 * r.sqrt()),
        glide_ratio,
        glide_speed,
        sink_rate: glide_speed / glide_ratio,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gust {
    pub amplitude_mps: Vec3,
    pub period_s: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

/// Constant wind plus an optional sinusoidal gust (bounded and smooth in time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct WindField {
    #[serde(default)]
    pub constant_mps: Vec3,
    #[serde(default)]
    pub gust: Option<Gust>,
}

impl WindField {
    pub fn constant(v: Vec3) -> Self {
        Self { constant_mps: v, gust: None }
    }

    pub fn velocity(&self, t: f64) -> Vec3 {
        match self.gust {
            Some(g) => {
                let w = std::f64::consts::TAU / g.period_s;
                self.constant_mps + g.amplitude_mps * (w * t + g.phase_rad).sin()
            }
            None => self.constant_mps,
        }
    }

    pub fn rate(&self, t: f64) -> Vec3 {
        match self.gust {
            Some(g) => {
                let w = std::f64::consts::TAU / g.period_s;
                g.amplitude_mps * (w * (w * t + g.phase_rad).cos())
            }
            None => Vec3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AircraftState {
    pub p: Vec3,
    pub v: Vec3,
    pub attitude: Attitude,
    /// Body angular velocity in body coordinates.
    pub omega: Vec3<Body>,
}

impl AircraftState {
    pub fn is_finite(&self) -> bool {
        self.p.is_finite()
            && self.v.is_finite()
            && self.omega.is_finite()
            && self.attitude.0.coords.iter().all(|c| c.is_finite())
    }

    /// Air velocity in body coordinates.
    pub fn air_velocity(&self, wind: &WindField, t: f64) -> Vec3<Body> {
        self.attitude.to_body(self.v - wind.velocity(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirData {
    pub v_a: Vec3<Body>,
    /// Attack angle `arcsin(v3/|v_a|)`.
    pub alpha: f64,
    /// Sideslip angle `atan2(v2, v1)`.
    pub beta: f64,
}

/// Air velocity with attack and sideslip angles.
pub fn air_state(state: &AircraftState, wind: &WindField, t: f64) -> Result<AirData> {
    let v_a = state.air_velocity(wind, t);
    flow_angles(v_a)
}

pub fn flow_angles(v_a: Vec3<Body>) -> Result<AirData> {
    let speed = v_a.norm();
    if speed <= EPS_SPEED {
        return Err(Error::DegenerateAirspeed { speed });
    }
    Ok(AirData { v_a, alpha: (v_a.z / speed).clamp(-1.0, 1.0).asin(), beta: v_a.y.atan2(v_a.x) })
}

/// Torque production by control surfaces plus passive aerodynamic moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceModel {
    /// Diagonal of `Abar`: torque per radian per (m/s)^2 for aileron, elevator, rudder.
    pub effectiveness: [f64; 3],
    /// Passive rate damping, torque per (rad/s) per (m/s).
    #[serde(default)]
    pub rate_damping: [f64; 3],
    /// Yaw torque per (m/s)^2 aligning the nose with the air flow (vertical tail).
    #[serde(default)]
    pub weathercock: f64,
    /// Rate mode only: passive yaw rate `k v_a2 / |v_a|` (1/s) added to the imposed
    /// body rate, the rate-mode counterpart of the vertical tail.
    #[serde(default)]
    pub yaw_alignment_per_s: f64,
}

impl Default for SurfaceModel {
    fn default() -> Self {
        let j = AeroParams::default().inertia_kgm2;
        let k_gamma = 15.0;
        Self {
            effectiveness: [k_gamma * j[0][0] / 45.0, k_gamma * j[1][1] / 60.0, k_gamma * j[2][2] / 45.0],
            rate_damping: [0.0; 3],
            weathercock: 0.0,
            yaw_alignment_per_s: 0.0,
        }
    }
}

impl SurfaceModel {
    pub fn torque(&self, deflection: [f64; 3], v_a: Vec3<Body>, omega: Vec3<Body>) -> Vec3<Body> {
        let speed = v_a.norm();
        let q = speed * speed;
        let t = |i: usize| q * self.effectiveness[i] * deflection[i] - speed * self.rate_damping[i] * omega[i];
        Vec3::new(t(0), t(1), t(2) + self.weathercock * speed * v_a.y)
    }
}

/// The simulated aircraft: its true aerodynamic parameters and moment model.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub aero: AeroParams,
    pub surfaces: SurfaceModel,
    pub g0: f64,
    inertia: Matrix3<f64>,
    inertia_inv: Matrix3<f64>,
}

impl Plant {
    pub fn new(aero: AeroParams, surfaces: SurfaceModel, g0: f64) -> Result<Self> {
        aero.validate()?;
        let inertia = aero.inertia();
        let inertia_inv = inertia.try_inverse().ok_or_else(|| Error::InvalidParameter("singular inertia".into()))?;
        Ok(Self { aero, surfaces, g0, inertia, inertia_inv })
    }

    pub fn gravity(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.g0)
    }
}

/// Rotational input held over one plant step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RotationInput {
    /// Angular velocity imposed directly (backstepping assumption).
    BodyRate(Vec3<Body>),
    /// Torque in body coordinates.
    Torque(Vec3<Body>),
    /// Aileron, elevator, rudder angles; torque from the plant's surface model.
    Surfaces([f64; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantInput {
    pub thrust: f64,
    pub rotation: RotationInput,
}

/// Inertial acceleration `g + (F_a + T i)/m`.
pub fn acceleration(state: &AircraftState, thrust: f64, wind: &WindField, plant: &Plant, t: f64) -> Vec3 {
    let v_a = state.air_velocity(wind, t);
    let f = aero_force(v_a, &plant.aero) + Vec3::e1() * thrust;
    plant.gravity() + state.attitude.to_inertial(f) / plant.aero.mass_kg
}

#[derive(Clone, Copy)]
struct Deriv {
    p: Vec3,
    v: Vec3,
    q: Quaternion<f64>,
    w: Vector3<f64>,
}

fn torque_of(input: RotationInput, state: &AircraftState, wind: &WindField, plant: &Plant, t: f64) -> Vec3<Body> {
    match input {
        RotationInput::Torque(g) => g,
        RotationInput::Surfaces(d) => plant.surfaces.torque(d, state.air_velocity(wind, t), state.omega),
        RotationInput::BodyRate(_) => Vec3::zeros(),
    }
}

fn derivative(state: &AircraftState, input: &PlantInput, wind: &WindField, plant: &Plant, t: f64) -> Deriv {
    let a = acceleration(state, input.thrust, wind, plant, t);
    let w = state.omega.to_na();
    let q_dot = state.attitude.0.quaternion() * Quaternion::from_imag(w) * 0.5;
    let gamma = torque_of(input.rotation, state, wind, plant, t).to_na();
    let w_dot = plant.inertia_inv * (gamma - w.cross(&(plant.inertia * w)));
    Deriv { p: state.v, v: a, q: q_dot, w: w_dot }
}

fn offset(s: &AircraftState, d: &Deriv, h: f64) -> AircraftState {
    let q = s.attitude.0.quaternion() + d.q * h;
    AircraftState {
        p: s.p + d.p * h,
        v: s.v + d.v * h,
        attitude: Attitude(UnitQuaternion::new_normalize(q)),
        omega: Vec3::from_na(s.omega.to_na() + d.w * h),
    }
}

/// One fixed-step RK4 step of the rigid-body dynamics.
pub fn step_dynamics(
    state: &AircraftState,
    input: &PlantInput,
    wind: &WindField,
    plant: &Plant,
    t: f64,
    dt: f64,
) -> Result<AircraftState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let next = match input.rotation {
        RotationInput::BodyRate(w) => {
            let k = plant.surfaces.yaw_alignment_per_s;
            let v_a = state.air_velocity(wind, t);
            let speed = v_a.norm();
            let w = if k != 0.0 && speed > EPS_SPEED { w + Vec3::e3() * (k * v_a.y / speed) } else { w };
            step_rate_mode(state, input.thrust, w, wind, plant, t, dt)
        }
        _ => {
            let k1 = derivative(state, input, wind, plant, t);
            let k2 = derivative(&offset(state, &k1, dt / 2.0), input, wind, plant, t + dt / 2.0);
            let k3 = derivative(&offset(state, &k2, dt / 2.0), input, wind, plant, t + dt / 2.0);
            let k4 = derivative(&offset(state, &k3, dt), input, wind, plant, t + dt);
            let c = dt / 6.0;
            let q = state.attitude.0.quaternion() + (k1.q + k2.q * 2.0 + k3.q * 2.0 + k4.q) * c;
            AircraftState {
                p: state.p + (k1.p + k2.p * 2.0 + k3.p * 2.0 + k4.p) * c,
                v: state.v + (k1.v + k2.v * 2.0 + k3.v * 2.0 + k4.v) * c,
                attitude: Attitude(UnitQuaternion::new_normalize(q)),
                omega: Vec3::from_na(state.omega.to_na() + (k1.w + k2.w * 2.0 + k3.w * 2.0 + k4.w) * c),
            }
        }
    };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::NonFiniteState)
    }
}

/// Rate mode: the attitude follows the exact exponential of the held body rate,
/// translational states are integrated by RK4 along it.
fn step_rate_mode(
    state: &AircraftState,
    thrust: f64,
    omega: Vec3<Body>,
    wind: &WindField,
    plant: &Plant,
    t: f64,
    dt: f64,
) -> AircraftState {
    let at = |tau: f64, p: Vec3, v: Vec3| AircraftState { p, v, attitude: state.attitude.advance(omega, tau), omega };
    let acc = |s: &AircraftState, tau: f64| acceleration(s, thrust, wind, plant, t + tau);
    let s1 = at(0.0, state.p, state.v);
    let a1 = acc(&s1, 0.0);
    let s2 = at(dt / 2.0, state.p + s1.v * (dt / 2.0), state.v + a1 * (dt / 2.0));
    let a2 = acc(&s2, dt / 2.0);
    let s3 = at(dt / 2.0, state.p + s2.v * (dt / 2.0), state.v + a2 * (dt / 2.0));
    let a3 = acc(&s3, dt / 2.0);
    let s4 = at(dt, state.p + s3.v * dt, state.v + a3 * dt);
    let a4 = acc(&s4, dt);
    let c = dt / 6.0;
    let mut attitude = state.attitude.advance(omega, dt);
    attitude.renormalize();
    AircraftState {
        p: state.p + (s1.v + s2.v * 2.0 + s3.v * 2.0 + s4.v) * c,
        v: state.v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * c,
        attitude,
        omega,
    }
}

/// Trimmed level flight along `i0` at air speed `speed` in still air: returns
/// the state and the thrust that keep it steady.
pub fn level_trim(params: &AeroParams, g0: f64, speed: f64, altitude: f64) -> (AircraftState, f64) {
    // seed from the lift-only balance c1 sin(2a) V^2 = m g0
    let weight = params.mass_kg * g0;
    let lift = |a: f64| params.c1_kg_per_m * (2.0 * a).sin() * speed * speed;
    let (mut lo, mut hi) = (0.0, std::f64::consts::FRAC_PI_4);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lift(mid) < weight {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (alpha, thrust) = solve_level_trim(params, g0, speed, 0.5 * (lo + hi));
    let state = AircraftState {
        p: Vec3::new(0.0, 0.0, -altitude),
        v: Vec3::new(speed, 0.0, 0.0),
        attitude: Attitude::from_euler(0.0, alpha, 0.0),
        omega: Vec3::zeros(),
    };
    (state, thrust)
}

/// Newton solve of the level-flight force balance for `(alpha, T)`.
fn solve_level_trim(params: &AeroParams, g0: f64, speed: f64, alpha0: f64) -> (f64, f64) {
    let m = params.mass_kg;
    // body frame pitched up by alpha: v_a = V (cos a, 0, sin a)
    let residual = |a: f64| -> (f64, f64) {
        let v_a = Vec3::<Body>::new(speed * a.cos(), 0.0, speed * a.sin());
        let f = aero_force(v_a, params);
        // inertial force (x forward, z down), pitch-up rotation by a about j
        let (s, c) = a.sin_cos();
        let fx = f.x * c + f.z * s;
        let fz = -f.x * s + f.z * c + m * g0;
        // thrust contributes (T c, -T s); choose T from the x-balance
        let thrust = -fx / c;
        (thrust, fz - thrust * s)
    };
    let mut a = alpha0;
    for _ in 0..50 {
        let (_, r) = residual(a);
        let h = 1e-7;
        let d = (residual(a + h).1 - residual(a - h).1) / (2.0 * h);
        let step = r / d;
        a -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    (a, residual(a).0)
}
