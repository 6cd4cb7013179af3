//! Frame-tagged 3-vectors, projections, rotations and the smooth vector
//! saturation used by every bounded integrator in the controller.
//!
//! Vectors carry their coordinate frame as a type parameter, so mixing
//! inertial and body coordinates in a dot or cross product does not compile.
//! Conversions go through [`Attitude`].

use std::fmt;
use std::marker::PhantomData;
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Deviation from unit norm accepted silently.
pub const UNIT_TOL: f64 = 1e-9;
/// Deviation from unit norm repaired by renormalization; beyond this is an error.
pub const UNIT_RENORM_TOL: f64 = 1e-6;

pub trait Frame: Copy + Clone + Default + fmt::Debug + PartialEq + Send + Sync + 'static {
    const NAME: &'static str;
}

/// Inertial frame, `k0` pointing down.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Inertial;

/// Aircraft-fixed frame `(i, j, k)`: longitudinal, lateral, normal to the zero-lift plane.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Body;

impl Frame for Inertial {
    const NAME: &'static str = "inertial";
}

impl Frame for Body {
    const NAME: &'static str = "body";
}

#[derive(Clone, Copy, PartialEq)]
pub struct Vec3<F: Frame = Inertial> {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    frame: PhantomData<F>,
}

impl<F: Frame> Default for Vec3<F> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<F: Frame> fmt::Debug for Vec3<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {}, {})", F::NAME, self.x, self.y, self.z)
    }
}

impl<F: Frame> Vec3<F> {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z, frame: PhantomData }
    }

    pub const fn zeros() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub const fn e1() -> Self {
        Self::new(1.0, 0.0, 0.0)
    }

    pub const fn e2() -> Self {
        Self::new(0.0, 1.0, 0.0)
    }

    pub const fn e3() -> Self {
        Self::new(0.0, 0.0, 1.0)
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn to_na(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_na(v: Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y).hypot(self.z)
    }

    /// `None` when the norm is below `eps`.
    pub fn try_normalize(self, eps: f64) -> Option<Self> {
        let n = self.norm();
        (n > eps && n.is_finite()).then(|| self / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    /// Reinterpret the coordinates in another frame. Only meaningful when the
    /// caller knows the frames coincide (e.g. an attitude-free oracle).
    pub fn retag<G: Frame>(self) -> Vec3<G> {
        Vec3::new(self.x, self.y, self.z)
    }
}

impl<F: Frame> Index<usize> for Vec3<F> {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<F: Frame> Add for Vec3<F> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<F: Frame> Sub for Vec3<F> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<F: Frame> AddAssign for Vec3<F> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<F: Frame> SubAssign for Vec3<F> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<F: Frame> Neg for Vec3<F> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<F: Frame> Mul<f64> for Vec3<F> {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<F: Frame> Mul<Vec3<F>> for f64 {
    type Output = Vec3<F>;
    fn mul(self, v: Vec3<F>) -> Vec3<F> {
        v * self
    }
}

impl<F: Frame> Div<f64> for Vec3<F> {
    type Output = Self;
    fn div(self, s: f64) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<F: Frame> Serialize for Vec3<F> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de, F: Frame> Deserialize<'de> for Vec3<F> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        <[f64; 3]>::deserialize(d).map(Self::from_array)
    }
}

/// Check that `u` is a unit vector, renormalizing small drift.
pub fn ensure_unit<F: Frame>(u: Vec3<F>) -> Result<Vec3<F>> {
    let n = u.norm();
    let dev = (n - 1.0).abs();
    if dev <= UNIT_TOL {
        Ok(u)
    } else if dev <= UNIT_RENORM_TOL {
        Ok(u / n)
    } else {
        Err(Error::NonUnitVector { norm: n })
    }
}

/// Projection on the plane orthogonal to the unit vector `u`: `x - (u.x) u`.
pub fn project_perp<F: Frame>(u: Vec3<F>, x: Vec3<F>) -> Result<Vec3<F>> {
    let u = ensure_unit(u)?;
    Ok(x - u * u.dot(x))
}

/// Rodrigues rotation of `x` by `angle` about the unit `axis`.
pub fn rotate_about<F: Frame>(axis: Vec3<F>, angle: f64, x: Vec3<F>) -> Result<Vec3<F>> {
    let a = ensure_unit(axis)?;
    let (s, c) = angle.sin_cos();
    Ok(x * c + a.cross(x) * s + a * (a.dot(x) * (1.0 - c)))
}

/// Scalar profile `alpha^Delta` of the smooth saturation `sat(y) = alpha(|y|) y`.
#[allow(unpredictable_function_pointer_comparisons)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SatShape {
    /// `(Delta/x) tanh(x/Delta)`.
    #[default]
    Tanh,
    /// `(1 + (x/Delta)^4)^(-1/4)`; flat to fourth order at the origin.
    Quartic,
    /// User profile as a function of `x/Delta`; must satisfy the class constraints.
    #[serde(skip)]
    Custom(fn(f64) -> f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatProfile {
    pub delta: f64,
    #[serde(default)]
    pub shape: SatShape,
}

impl SatProfile {
    pub fn new(delta: f64) -> Result<Self> {
        Self::with_shape(delta, SatShape::Tanh)
    }

    pub fn with_shape(delta: f64, shape: SatShape) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("saturation bound must be positive, got {delta}")));
        }
        Ok(Self { delta, shape })
    }

    /// `alpha^Delta(x)` for `x >= 0`.
    pub fn alpha(&self, x: f64) -> f64 {
        let r = x.abs() / self.delta;
        match self.shape {
            SatShape::Tanh => {
                if r < 1e-4 {
                    1.0 - r * r / 3.0
                } else {
                    r.tanh() / r
                }
            }
            SatShape::Quartic => (1.0 + r.powi(4)).powf(-0.25),
            SatShape::Custom(f) => f(r),
        }
    }

    pub fn sat_scalar(&self, y: f64) -> f64 {
        self.alpha(y.abs()) * y
    }

    pub fn sat<F: Frame>(&self, y: Vec3<F>) -> Vec3<F> {
        y * self.alpha(y.norm())
    }

    /// Saturation of an arbitrary-dimension real vector, in place.
    pub fn sat_slice(&self, y: &mut [f64]) {
        let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let a = self.alpha(n);
        y.iter_mut().for_each(|v| *v *= a);
    }
}

/// `alpha^Delta(|y|) y` for a real vector of any length.
pub fn smooth_sat(y: &[f64], profile: &SatProfile) -> Vec<f64> {
    let mut out = y.to_vec();
    profile.sat_slice(&mut out);
    out
}

/// Skew matrix `S(w)` with `S(w) x = w x x`.
pub fn skew(w: Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Aircraft orientation: rotation taking body coordinates to inertial ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attitude(pub UnitQuaternion<f64>);

impl Default for Attitude {
    fn default() -> Self {
        Self::identity()
    }
}

impl Attitude {
    pub fn identity() -> Self {
        Self(UnitQuaternion::identity())
    }

    pub fn from_euler(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self(UnitQuaternion::from_euler_angles(roll, pitch, yaw))
    }

    /// Attitude whose body axes are the given inertial triad (must be orthonormal, right-handed).
    pub fn from_triad(i: Vec3, j: Vec3, k: Vec3) -> Self {
        let m = Matrix3::from_columns(&[i.to_na(), j.to_na(), k.to_na()]);
        let rot = nalgebra::Rotation3::from_matrix(&m);
        Self(UnitQuaternion::from_rotation_matrix(&rot))
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        match nalgebra::Unit::try_new(axis.to_na(), 1e-12) {
            Some(a) => Self(UnitQuaternion::from_axis_angle(&a, angle)),
            None => Self::identity(),
        }
    }

    pub fn i(&self) -> Vec3 {
        self.to_inertial(Vec3::e1())
    }

    pub fn j(&self) -> Vec3 {
        self.to_inertial(Vec3::e2())
    }

    pub fn k(&self) -> Vec3 {
        self.to_inertial(Vec3::e3())
    }

    pub fn triad(&self) -> [Vec3; 3] {
        let m = self.matrix();
        [0, 1, 2].map(|c| Vec3::new(m[(0, c)], m[(1, c)], m[(2, c)]))
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        self.0.to_rotation_matrix().into_inner()
    }

    pub fn to_inertial(&self, v: Vec3<Body>) -> Vec3 {
        Vec3::from_na(self.0.transform_vector(&v.to_na()))
    }

    pub fn to_body(&self, v: Vec3) -> Vec3<Body> {
        Vec3::from_na(self.0.inverse_transform_vector(&v.to_na()))
    }

    /// Attitude after rotating for `dt` at constant body rate `omega`.
    pub fn advance(&self, omega: Vec3<Body>, dt: f64) -> Self {
        let dq = UnitQuaternion::from_scaled_axis(omega.to_na() * dt);
        Self(self.0 * dq)
    }

    pub fn renormalize(&mut self) {
        self.0.renormalize();
    }

    /// Largest entry of `R^T R - I`.
    pub fn orthonormality_error(&self) -> f64 {
        let m = self.matrix();
        (m.transpose() * m - Matrix3::identity()).amax()
    }
}

/// Angle between two orthonormal triads, accurate for small and large angles.
pub fn triad_angle(a: &[Vec3; 3], b: &[Vec3; 3]) -> f64 {
    let trace = a[0].dot(b[0]) + a[1].dot(b[1]) + a[2].dot(b[2]);
    let sum = a[0].cross(b[0]) + a[1].cross(b[1]) + a[2].cross(b[2]);
    // |sum| = 2 sin(theta), trace = 1 + 2 cos(theta)
    (0.5 * sum.norm()).atan2(0.5 * (trace - 1.0))
}

/// Gram-Schmidt repair of a nearly orthonormal right-handed triad, keeping the first vector's direction.
pub fn orthonormalize(t: [Vec3; 3]) -> [Vec3; 3] {
    let a = t[0] / t[0].norm();
    let b = t[1] - a * a.dot(t[1]);
    let b = b / b.norm();
    [a, b, a.cross(b)]
}
