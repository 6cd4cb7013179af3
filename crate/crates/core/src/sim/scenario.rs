use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::airframe::{level_trim, AeroParams, AircraftState, LateralModel, Plant, SurfaceModel, WindField, G0};
use crate::control::{
    AxisMode, Controller, ControllerConfig, Gains, MeasurementMode, OutputMode, SpeedMode, SpeedProfile,
};
use crate::error::{Error, Result};
use crate::math::{Attitude, Body, Vec3};
use crate::path::{racetrack, Carrier, Curve, CurveSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// Closed oval made of straights and half circles, optionally with an inclined second half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RacetrackSpec {
    pub straight_m: f64,
    pub radius_m: f64,
    #[serde(default)]
    pub incline_deg: f64,
    pub altitude_m: f64,
}

/// Either an explicit curve or a racetrack, plus an optional carrier motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    #[serde(default)]
    pub curve: Option<Curve>,
    #[serde(default)]
    pub racetrack: Option<RacetrackSpec>,
    #[serde(default)]
    pub carrier: Option<Carrier>,
}

impl PathSpec {
    pub fn resolve(&self) -> Result<CurveSpec> {
        let curve = match (&self.curve, &self.racetrack) {
            (Some(c), None) => c.clone(),
            (None, Some(r)) => racetrack(r.straight_m, r.radius_m, r.incline_deg.to_radians(), r.altitude_m)?,
            _ => return Err(Error::Scenario("path needs exactly one of `curve` or `racetrack`".into())),
        };
        curve.validate()?;
        Ok(CurveSpec { curve, carrier: self.carrier })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialSpec {
    /// Wings-level level-flight trim at `airspeed_mps`, heading `heading_deg` from x,
    /// carried along by the wind at `t = 0`.
    Trim {
        airspeed_mps: f64,
        position_m: Vec3,
        #[serde(default)]
        heading_deg: f64,
    },
    State {
        position_m: Vec3,
        velocity_mps: Vec3,
        /// Roll, pitch, yaw.
        #[serde(default)]
        euler_deg: [f64; 3],
        #[serde(default)]
        omega_radps: Vec3<Body>,
    },
}

impl InitialSpec {
    pub fn resolve(&self, aero: &AeroParams, g0: f64, wind: &WindField) -> AircraftState {
        match *self {
            InitialSpec::Trim { airspeed_mps, position_m, heading_deg } => {
                let (s, _) = level_trim(aero, g0, airspeed_mps, -position_m.z);
                let yaw = Attitude::from_axis_angle(Vec3::e3(), heading_deg.to_radians());
                AircraftState {
                    p: position_m,
                    v: Vec3::from_na(yaw.0 * s.v.to_na()) + wind.velocity(0.0),
                    attitude: Attitude(yaw.0 * s.attitude.0),
                    omega: Vec3::zeros(),
                }
            }
            InitialSpec::State { position_m, velocity_mps, euler_deg, omega_radps } => {
                let [r, p, y] = euler_deg.map(f64::to_radians);
                AircraftState {
                    p: position_m,
                    v: velocity_mps,
                    attitude: Attitude::from_euler(r, p, y),
                    omega: omega_radps,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetpointSpec {
    #[serde(default)]
    pub mode: SpeedMode,
    pub initial_mps: f64,
    #[serde(default)]
    pub steps: Vec<crate::control::SpeedStep>,
}

/// Standard deviations of additive Gaussian measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct NoiseSpec {
    pub position_m: f64,
    pub velocity_mps: f64,
    pub attitude_rad: f64,
    pub omega_radps: f64,
    pub pitot_mps: f64,
    pub accel_mps2: f64,
}

impl NoiseSpec {
    pub fn is_off(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantSpec {
    /// Aircraft parameters known to the controller; the plant may deviate from them.
    pub aero: AeroParams,
    pub c0_scale: f64,
    pub c1_scale: f64,
    /// Lateral force model of the simulated plant, when it differs from `aero.lateral`.
    pub lateral: Option<LateralModel>,
    pub surfaces: SurfaceModel,
    pub g0: f64,
    pub noise: NoiseSpec,
}

impl Default for PlantSpec {
    fn default() -> Self {
        Self {
            aero: AeroParams::default(),
            c0_scale: 1.0,
            c1_scale: 1.0,
            lateral: None,
            surfaces: SurfaceModel::default(),
            g0: G0,
            noise: NoiseSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerSpec {
    pub axes: AxisMode,
    pub output: OutputMode,
    pub measurement: MeasurementMode,
    pub sign_vu: f64,
    pub wind_rate_estimate_mps2: Vec3,
    /// Feed `S(omega) J omega*` forward using the plant surface effectiveness.
    pub gyro_feedforward: bool,
    /// Desired-frame rate feedforward; defaults to on with true air data, off when estimated.
    pub frame_feedforward: Option<bool>,
}

impl Default for ControllerSpec {
    fn default() -> Self {
        Self {
            axes: AxisMode::ThreeAxis,
            output: OutputMode::BodyRate,
            measurement: MeasurementMode::TrueState,
            sign_vu: 1.0,
            wind_rate_estimate_mps2: Vec3::zeros(),
            gyro_feedforward: false,
            frame_feedforward: None,
        }
    }
}

/// A complete closed-loop run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub duration_s: f64,
    #[serde(default = "default_dt_plant")]
    pub dt_plant_s: f64,
    #[serde(default = "default_dt_controller")]
    pub dt_controller_s: f64,
    #[serde(default)]
    pub seed: u64,
    pub path: PathSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub wind: WindField,
    pub setpoint: SetpointSpec,
    #[serde(default)]
    pub gains: Gains,
    #[serde(default)]
    pub plant: PlantSpec,
    #[serde(default)]
    pub controller: ControllerSpec,
}

fn default_dt_plant() -> f64 {
    0.001
}

fn default_dt_controller() -> f64 {
    0.004
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Scenario(e.to_string()))
    }

    /// Plant steps per controller step.
    pub fn substeps(&self) -> Result<usize> {
        let r = self.dt_controller_s / self.dt_plant_s;
        let n = r.round();
        if !(self.dt_plant_s > 0.0) || n < 1.0 || (r - n).abs() > 1e-9 * r.max(1.0) {
            return Err(Error::Scenario("dt_controller_s must be a positive integer multiple of dt_plant_s".into()));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Scenario(format!("unsupported scenario version {}", self.version)));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::Scenario("duration_s must be positive".into()));
        }
        self.substeps()?;
        self.path.resolve()?;
        self.gains.validate()?;
        self.plant.aero.validate()?;
        if !(self.plant.c0_scale > 0.0 && self.plant.c1_scale >= 0.0) {
            return Err(Error::Scenario("perturbation factors must be positive".into()));
        }
        if !(self.setpoint.initial_mps > 0.0) {
            return Err(Error::Scenario("setpoint must be positive".into()));
        }
        if let Some(g) = self.wind.gust {
            if !(g.period_s > 0.0) {
                return Err(Error::Scenario("gust period must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn plant(&self) -> Result<Plant> {
        let p = &self.plant;
        Plant::new(p.aero.perturbed(p.c0_scale, p.c1_scale, p.lateral), p.surfaces, p.g0)
    }

    pub fn controller(&self) -> Result<Controller> {
        let c = &self.controller;
        let setpoint = SpeedProfile { initial_mps: self.setpoint.initial_mps, steps: self.setpoint.steps.clone() };
        let mut cfg = ControllerConfig::new(self.plant.aero.clone(), setpoint);
        cfg.gains = self.gains.clone();
        cfg.g0 = self.plant.g0;
        cfg.dt = self.dt_controller_s;
        cfg.sign_vu = c.sign_vu;
        cfg.speed_mode = self.setpoint.mode;
        cfg.axes = c.axes;
        cfg.output = c.output;
        cfg.measurement = c.measurement;
        cfg.wind_rate_estimate = c.wind_rate_estimate_mps2;
        cfg.frame_feedforward = c.frame_feedforward.unwrap_or(c.measurement == MeasurementMode::TrueState);
        if c.gyro_feedforward {
            cfg.gains.gyro_term = true;
            cfg.surface_effectiveness = Some(self.plant.surfaces.effectiveness);
        }
        Controller::new(cfg, self.path.resolve()?)
    }

    pub fn initial_state(&self) -> AircraftState {
        let aero = self.plant.aero.perturbed(self.plant.c0_scale, self.plant.c1_scale, self.plant.lateral);
        self.initial.resolve(&aero, self.plant.g0, &self.wind)
    }
}
