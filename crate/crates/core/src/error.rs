use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector expected to be unit length has norm {norm}")]
    NonUnitVector { norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point lies on the circle axis; closest point is not unique")]
    CircleAxisDegenerate,

    #[error("closest-point Newton iteration did not converge after {iterations} iterations")]
    NewtonNoConvergence { iterations: usize },

    #[error("projection is ill-posed: well-posedness margin {margin} below threshold")]
    IllPosedProjection { margin: f64 },

    #[error("a hint abscissa is required to project onto this curve")]
    MissingHint,

    #[error("air speed {speed} m/s too small to define flow angles")]
    DegenerateAirspeed { speed: f64 },

    #[error("inertial speed {speed} m/s too small for guidance")]
    DegenerateSpeed { speed: f64 },

    #[error("non-finite value in simulated state")]
    NonFiniteState,

    #[error("thrust direction nearly orthogonal to heading (i.h = {ih})")]
    HeadingSingular { ih: f64 },

    #[error("carrier speed {carrier} m/s not below aircraft speed {speed} m/s")]
    CarrierTooFast { carrier: f64, speed: f64 },

    #[error("desired frame is singular: {0}")]
    FrameSingular(&'static str),

    #[error("surface allocation singular at air speed {speed} m/s")]
    AllocationSingular { speed: f64 },

    #[error("pitot reading {v_a1} m/s too small for air-velocity estimation")]
    DegeneratePitot { v_a1: f64 },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
