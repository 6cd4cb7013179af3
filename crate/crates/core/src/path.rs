//! Curves, parallel transport frames, closest-point projection and the
//! path-relative error kinematics.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::airframe::AeroParams;
use crate::error::{Error, Result};
use crate::math::{ensure_unit, project_perp, rotate_about, Vec3};

/// Smallest admissible well-posedness margin `1 - g1 y1 - g2 y2`.
pub const EPS_MARGIN: f64 = 0.1;
const EPS_AXIS: f64 = 1e-9;
const NEWTON_MAX_ITER: usize = 60;
const JOINT_TOL: f64 = 1e-6;

/// One piece of a composite path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Segment {
    Line {
        start_m: Vec3,
        direction: Vec3,
        length_m: f64,
    },
    /// Arc traversed positively about `normal`, starting at `center + radius * start_radial`.
    Arc {
        center_m: Vec3,
        radius_m: f64,
        normal: Vec3,
        start_radial: Vec3,
        sweep_rad: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Curve {
    Line {
        origin_m: Vec3,
        direction: Vec3,
    },
    /// Circle traversed positively about `normal`; `normal` is also the frame's second normal.
    Circle {
        center_m: Vec3,
        radius_m: f64,
        normal: Vec3,
    },
    Helix {
        axis_point_m: Vec3,
        axis: Vec3,
        radius_m: f64,
        pitch_m: f64,
        reference: Vec3,
    },
    Composite {
        segments: Vec<Segment>,
        /// Wrap from the last segment to the first.
        #[serde(default)]
        closed: bool,
        /// Accept tangent discontinuities at the joints.
        #[serde(default)]
        allow_kinks: bool,
    },
}

/// Translating motion of the path: `offset(t) = v0 t + a t^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Carrier {
    pub velocity_mps: Vec3,
    #[serde(default)]
    pub acceleration_mps2: Vec3,
}

impl Carrier {
    pub fn velocity(&self, t: f64) -> Vec3 {
        self.velocity_mps + self.acceleration_mps2 * t
    }

    pub fn acceleration(&self, _t: f64) -> Vec3 {
        self.acceleration_mps2
    }

    pub fn offset(&self, t: f64) -> Vec3 {
        self.velocity_mps * t + self.acceleration_mps2 * (0.5 * t * t)
    }
}

/// A curve plus its optional carrier motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub curve: Curve,
    #[serde(default)]
    pub carrier: Option<Carrier>,
}

impl CurveSpec {
    pub fn fixed(curve: Curve) -> Self {
        Self { curve, carrier: None }
    }

    pub fn carrier_velocity(&self, t: f64) -> Vec3 {
        self.carrier.map_or(Vec3::zeros(), |c| c.velocity(t))
    }

    /// Projection of `p` at time `t`, accounting for the carrier displacement.
    pub fn closest_point(&self, p: Vec3, t: f64, hint: Option<PathHint>) -> Result<(PathFrame, PathError)> {
        let offset = self.carrier.map_or(Vec3::zeros(), |c| c.offset(t));
        let (mut frame, err) = closest_point(&self.curve, p - offset, hint)?;
        frame.q += offset;
        Ok((frame, err))
    }

    /// Velocity relative to the path: `v - v_c`.
    pub fn relative_velocity(&self, v: Vec3, t: f64) -> Vec3 {
        v - self.carrier_velocity(t)
    }
}

/// Point-on-curve state: position, parallel transport frame `(u, u_bar, u_bbar)`
/// with `u_bar x u_bbar = u`, the frame curvatures and the arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathFrame {
    pub q: Vec3,
    pub u: Vec3,
    pub u_bar: Vec3,
    pub u_bbar: Vec3,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Arc length; cumulative over segments for composites.
    pub s: f64,
    /// Active segment (0 for single curves).
    pub segment: usize,
}

impl PathFrame {
    pub fn hint(&self) -> PathHint {
        PathHint { s: self.s, segment: self.segment }
    }

    pub fn curvature(&self) -> f64 {
        self.gamma1.hypot(self.gamma2)
    }

    pub fn orthonormality_error(&self) -> f64 {
        let t = [self.u_bar, self.u_bbar, self.u];
        let mut e: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let target = if a == b { 1.0 } else { 0.0 };
                e = e.max((t[a].dot(t[b]) - target).abs());
            }
        }
        e.max((self.u_bar.cross(self.u_bbar) - self.u).max_abs())
    }
}

/// Warm start for projection: previous arc length and active segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathHint {
    pub s: f64,
    pub segment: usize,
}

impl PathHint {
    pub fn at(s: f64) -> Self {
        Self { s, segment: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathError {
    pub y1: f64,
    pub y2: f64,
    /// `1 - g1 y1 - g2 y2`.
    pub margin: f64,
}

impl PathError {
    pub fn norm(&self) -> f64 {
        self.y1.hypot(self.y2)
    }

    /// `p - q = y1 u_bar + y2 u_bbar`.
    pub fn offset(&self, frame: &PathFrame) -> Vec3 {
        frame.u_bar * self.y1 + frame.u_bbar * self.y2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRates {
    pub s_dot: f64,
    pub y1_dot: f64,
    pub y2_dot: f64,
}

/// Position, unit tangent and curvature vector `dT/ds` at an arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: Vec3,
    pub t: Vec3,
    pub k: Vec3,
}

fn unit(v: Vec3, what: &str) -> Result<Vec3> {
    ensure_unit(v).map_err(|_| Error::InvalidParameter(format!("{what} must be a unit vector")))
}

fn perp_reference(n: Vec3) -> Vec3 {
    let x = Vec3::e1();
    let cand = if n.cross(x).norm() > 0.5 { x } else { Vec3::e2() };
    let r = cand - n * n.dot(cand);
    r / r.norm()
}

/// Line frame with `u_bbar` the normalized vertical-most direction orthogonal to `u`.
fn line_normals(u: Vec3) -> (Vec3, Vec3) {
    let down = Vec3::e3();
    let w = down - u * u.dot(down);
    let u_bbar = match w.try_normalize(1e-9) {
        Some(w) => w,
        None => perp_reference(u),
    };
    (u_bbar.cross(u), u_bbar)
}

impl Segment {
    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { length_m, .. } => length_m,
            Segment::Arc { radius_m, sweep_rad, .. } => radius_m * sweep_rad,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Segment::Line { direction, length_m, .. } => {
                unit(direction, "segment direction")?;
                if !(length_m > 0.0) {
                    return Err(Error::InvalidParameter("segment length must be positive".into()));
                }
            }
            Segment::Arc { radius_m, normal, start_radial, sweep_rad, .. } => {
                let n = unit(normal, "arc normal")?;
                let e = unit(start_radial, "arc start radial")?;
                if n.dot(e).abs() > 1e-9 {
                    return Err(Error::InvalidParameter("arc start radial must be orthogonal to the normal".into()));
                }
                if !(radius_m > 0.0) || !(sweep_rad > 0.0 && sweep_rad < TAU) {
                    return Err(Error::InvalidParameter("arc needs radius > 0 and sweep in (0, 2 pi)".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> CurvePoint {
        match *self {
            Segment::Line { start_m, direction, .. } => {
                CurvePoint { x: start_m + direction * s, t: direction, k: Vec3::zeros() }
            }
            Segment::Arc { center_m, radius_m, normal, start_radial, .. } => {
                arc_eval(center_m, radius_m, normal, start_radial, s)
            }
        }
    }

    /// Unbounded local projection; the returned arc length may fall outside `[0, length]`.
    fn project(&self, p: Vec3) -> Result<(PathFrame, PathError)> {
        match *self {
            Segment::Line { start_m, direction, .. } => Ok(line_projection(start_m, direction, p)),
            Segment::Arc { center_m, radius_m, normal, start_radial, sweep_rad } => {
                let (frame, err, phi) = circle_projection(center_m, radius_m, normal, start_radial, p)?;
                // unwrap the angle around the middle of the arc
                let mid = 0.5 * sweep_rad;
                let phi = mid + (phi - mid + PI).rem_euclid(TAU) - PI;
                Ok((PathFrame { s: radius_m * phi, ..frame }, err))
            }
        }
    }

    fn frame_at(&self, s: f64) -> PathFrame {
        let cp = self.eval(s);
        let (u_bar, u_bbar, g1) = match *self {
            Segment::Line { direction, .. } => {
                let (a, b) = line_normals(direction);
                (a, b, 0.0)
            }
            Segment::Arc { center_m, radius_m, normal, .. } => {
                let r = (cp.x - center_m) / radius_m;
                (-r, normal, 1.0 / radius_m)
            }
        };
        PathFrame { q: cp.x, u: cp.t, u_bar, u_bbar, gamma1: g1, gamma2: 0.0, s, segment: 0 }
    }

    fn end_point(&self) -> CurvePoint {
        self.eval(self.length())
    }
}

fn arc_eval(c: Vec3, r: f64, n: Vec3, e: Vec3, s: f64) -> CurvePoint {
    let (sn, cs) = (s / r).sin_cos();
    let f = n.cross(e);
    let radial = e * cs + f * sn;
    CurvePoint { x: c + radial * r, t: n.cross(radial), k: -radial / r }
}

fn line_projection(origin: Vec3, u: Vec3, p: Vec3) -> (PathFrame, PathError) {
    let s = u.dot(p - origin);
    let q = origin + u * s;
    let (u_bar, u_bbar) = line_normals(u);
    let d = p - q;
    let frame = PathFrame { q, u, u_bar, u_bbar, gamma1: 0.0, gamma2: 0.0, s, segment: 0 };
    (frame, PathError { y1: d.dot(u_bar), y2: d.dot(u_bbar), margin: 1.0 })
}

/// Circle closed forms; also returns the angle of the radial direction from `e` in `[0, 2 pi)`.
fn circle_projection(c: Vec3, r: f64, n: Vec3, e: Vec3, p: Vec3) -> Result<(PathFrame, PathError, f64)> {
    let w = (p - c).cross(n).cross(n);
    let wn = w.norm();
    if wn < EPS_AXIS * r.max(1.0) {
        return Err(Error::CircleAxisDegenerate);
    }
    let u_bar = w / wn;
    let u = u_bar.cross(n);
    let q = c - u_bar * r;
    let d = p - q;
    let y1 = d.dot(u_bar);
    let y2 = d.dot(n);
    let radial = -u_bar;
    let phi = radial.dot(n.cross(e)).atan2(radial.dot(e)).rem_euclid(TAU);
    let frame = PathFrame { q, u, u_bar, u_bbar: n, gamma1: 1.0 / r, gamma2: 0.0, s: r * phi, segment: 0 };
    Ok((frame, PathError { y1, y2, margin: 1.0 - y1 / r }, phi))
}

struct HelixGeom {
    c: Vec3,
    a: Vec3,
    e: Vec3,
    f: Vec3,
    r: f64,
    b: f64,
    len: f64,
}

impl HelixGeom {
    fn new(c: Vec3, a: Vec3, r: f64, pitch: f64, e: Vec3) -> Self {
        let b = pitch / TAU;
        Self { c, a, e, f: a.cross(e), r, b, len: r.hypot(b) }
    }

    fn kappa(&self) -> f64 {
        self.r / (self.len * self.len)
    }

    fn tau(&self) -> f64 {
        self.b / (self.len * self.len)
    }

    fn eval(&self, s: f64) -> CurvePoint {
        let phi = s / self.len;
        let (sn, cs) = phi.sin_cos();
        let radial = self.e * cs + self.f * sn;
        let along = self.f * cs - self.e * sn;
        CurvePoint {
            x: self.c + radial * self.r + self.a * (self.b * phi),
            t: (along * self.r + self.a * self.b) / self.len,
            k: -radial * (self.r / (self.len * self.len)),
        }
    }

    /// Closed-form transport frame, rotating against the Frenet normal at rate `tau`.
    fn frame_at(&self, s: f64) -> PathFrame {
        let cp = self.eval(s);
        let n = cp.k / cp.k.norm();
        let bn = cp.t.cross(n);
        let (sn, cs) = (self.tau() * s).sin_cos();
        let u_bar = n * cs - bn * sn;
        let u_bbar = n * sn + bn * cs;
        let kappa = self.kappa();
        PathFrame {
            q: cp.x,
            u: cp.t,
            u_bar,
            u_bbar,
            gamma1: kappa * (self.tau() * s).cos(),
            gamma2: kappa * (self.tau() * s).sin(),
            s,
            segment: 0,
        }
    }
}

impl Curve {
    /// Single straight line.
    pub fn line(origin: Vec3, direction: Vec3) -> Result<Self> {
        let c = Curve::Line { origin_m: origin, direction };
        c.validate()?;
        Ok(c)
    }

    pub fn circle(center: Vec3, radius: f64, normal: Vec3) -> Result<Self> {
        let c = Curve::Circle { center_m: center, radius_m: radius, normal };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Curve::Line { direction, .. } => {
                unit(*direction, "line direction")?;
            }
            Curve::Circle { radius_m, normal, .. } => {
                unit(*normal, "circle normal")?;
                if !(*radius_m > 0.0) {
                    return Err(Error::InvalidParameter("circle radius must be positive".into()));
                }
            }
            Curve::Helix { axis, radius_m, reference, .. } => {
                let a = unit(*axis, "helix axis")?;
                let e = unit(*reference, "helix reference")?;
                if a.dot(e).abs() > 1e-9 {
                    return Err(Error::InvalidParameter("helix reference must be orthogonal to the axis".into()));
                }
                if !(*radius_m > 0.0) {
                    return Err(Error::InvalidParameter("helix radius must be positive".into()));
                }
            }
            Curve::Composite { segments, closed, allow_kinks } => {
                if segments.is_empty() {
                    return Err(Error::InvalidParameter("composite path needs at least one segment".into()));
                }
                for s in segments {
                    s.validate()?;
                }
                let n = segments.len();
                let joints = if *closed { n } else { n - 1 };
                for i in 0..joints {
                    let a = segments[i].end_point();
                    let b = segments[(i + 1) % n].eval(0.0);
                    if (a.x - b.x).norm() > JOINT_TOL {
                        return Err(Error::InvalidParameter(format!(
                            "segments {i} and {} do not connect",
                            (i + 1) % n
                        )));
                    }
                    if !allow_kinks && (a.t - b.t).norm() > JOINT_TOL {
                        return Err(Error::InvalidParameter(format!(
                            "tangent discontinuity between segments {i} and {}",
                            (i + 1) % n
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn helix(&self) -> Option<HelixGeom> {
        match *self {
            Curve::Helix { axis_point_m, axis, radius_m, pitch_m, reference } => {
                Some(HelixGeom::new(axis_point_m, axis, radius_m, pitch_m, reference))
            }
            _ => None,
        }
    }

    /// Arc-length offsets of the composite segments (a single 0 otherwise).
    fn offsets(&self) -> Vec<f64> {
        match self {
            Curve::Composite { segments, .. } => {
                let mut acc = 0.0;
                segments
                    .iter()
                    .map(|s| {
                        let o = acc;
                        acc += s.length();
                        o
                    })
                    .collect()
            }
            _ => vec![0.0],
        }
    }

    /// Total length for composites and circles; `None` for unbounded curves.
    pub fn length(&self) -> Option<f64> {
        match self {
            Curve::Composite { segments, .. } => Some(segments.iter().map(Segment::length).sum()),
            Curve::Circle { radius_m, .. } => Some(TAU * radius_m),
            _ => None,
        }
    }

    pub fn segment_count(&self) -> usize {
        match self {
            Curve::Composite { segments, .. } => segments.len(),
            _ => 1,
        }
    }

    /// Position, tangent and curvature vector at arc length `s` on `segment`.
    pub fn eval(&self, s: f64, segment: usize) -> CurvePoint {
        match self {
            Curve::Line { origin_m, direction } => {
                CurvePoint { x: *origin_m + *direction * s, t: *direction, k: Vec3::zeros() }
            }
            Curve::Circle { center_m, radius_m, normal } => {
                arc_eval(*center_m, *radius_m, *normal, perp_reference(*normal), s)
            }
            Curve::Helix { .. } => self.helix().unwrap().eval(s),
            Curve::Composite { segments, .. } => {
                let offs = self.offsets();
                segments[segment].eval(s - offs[segment])
            }
        }
    }

    /// Closed-form frame at arc length `s` on `segment`.
    pub fn frame_at(&self, s: f64, segment: usize) -> PathFrame {
        match self {
            Curve::Line { origin_m, direction } => {
                let (u_bar, u_bbar) = line_normals(*direction);
                PathFrame {
                    q: *origin_m + *direction * s,
                    u: *direction,
                    u_bar,
                    u_bbar,
                    gamma1: 0.0,
                    gamma2: 0.0,
                    s,
                    segment: 0,
                }
            }
            Curve::Circle { radius_m, normal, center_m } => {
                let cp = self.eval(s, 0);
                let r = (cp.x - *center_m) / *radius_m;
                PathFrame {
                    q: cp.x,
                    u: cp.t,
                    u_bar: -r,
                    u_bbar: *normal,
                    gamma1: 1.0 / radius_m,
                    gamma2: 0.0,
                    s,
                    segment: 0,
                }
            }
            Curve::Helix { .. } => self.helix().unwrap().frame_at(s),
            Curve::Composite { segments, .. } => {
                let off = self.offsets()[segment];
                PathFrame { s, segment, ..segments[segment].frame_at(s - off) }
            }
        }
    }
}

/// Closest point of `p` on `curve`.
///
/// Lines and circles use closed forms, helices a damped Newton iteration seeded at
/// the hint. Composites project on the hinted segment and move forward while the
/// local arc length exceeds the segment length; they never move back.
pub fn closest_point(curve: &Curve, p: Vec3, hint: Option<PathHint>) -> Result<(PathFrame, PathError)> {
    let (frame, err) = match curve {
        Curve::Line { origin_m, direction } => line_projection(*origin_m, *direction, p),
        Curve::Circle { center_m, radius_m, normal } => {
            let (f, e, _) = circle_projection(*center_m, *radius_m, *normal, perp_reference(*normal), p)?;
            (f, e)
        }
        Curve::Helix { .. } => {
            let h = hint.ok_or(Error::MissingHint)?;
            let geom = curve.helix().unwrap();
            let s = newton_project(|s| geom.eval(s), p, h.s, 0.25 / geom.kappa())?;
            let frame = geom.frame_at(s);
            let d = p - frame.q;
            let (y1, y2) = (d.dot(frame.u_bar), d.dot(frame.u_bbar));
            (frame, PathError { y1, y2, margin: 1.0 - frame.gamma1 * y1 - frame.gamma2 * y2 })
        }
        Curve::Composite { segments, closed, .. } => composite_projection(curve, segments, *closed, p, hint)?,
    };
    if err.margin <= EPS_MARGIN {
        return Err(Error::IllPosedProjection { margin: err.margin });
    }
    Ok((frame, err))
}

fn composite_projection(
    curve: &Curve,
    segments: &[Segment],
    closed: bool,
    p: Vec3,
    hint: Option<PathHint>,
) -> Result<(PathFrame, PathError)> {
    let offs = curve.offsets();
    let n = segments.len();
    let mut seg = match hint {
        Some(h) => h.segment.min(n - 1),
        None => nearest_segment(segments, p),
    };
    let mut result = segments[seg].project(p)?;
    for _ in 0..n {
        if result.0.s <= segments[seg].length() {
            break;
        }
        let next = if seg + 1 < n {
            seg + 1
        } else if closed {
            0
        } else {
            break;
        };
        seg = next;
        result = segments[seg].project(p)?;
    }
    let (frame, err) = result;
    Ok((PathFrame { s: offs[seg] + frame.s, segment: seg, ..frame }, err))
}

fn nearest_segment(segments: &[Segment], p: Vec3) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, s) in segments.iter().enumerate() {
        let d = match s.project(p) {
            Ok((f, _)) => {
                let local = f.s.clamp(0.0, s.length());
                (p - s.eval(local).x).norm()
            }
            Err(_) => f64::INFINITY,
        };
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Damped Newton iteration on `f(s) = (p - X(s)).T(s)` with `f' = -1 + (p - X).K`.
pub fn newton_project(eval: impl Fn(f64) -> CurvePoint, p: Vec3, s0: f64, max_step: f64) -> Result<f64> {
    let mut s = s0;
    for _ in 0..NEWTON_MAX_ITER {
        let cp = eval(s);
        let d = p - cp.x;
        let f = d.dot(cp.t);
        let df = -1.0 + d.dot(cp.k);
        // a non-negative slope means we are not near a local minimum of the distance
        let step = if df < -1e-3 { -f / df } else { f };
        let step = step.clamp(-max_step, max_step);
        s += step;
        if step.abs() <= 1e-12 * (1.0 + s.abs()) {
            return Ok(s);
        }
    }
    Err(Error::NewtonNoConvergence { iterations: NEWTON_MAX_ITER })
}

/// Transport the frame by `ds` along the curve with RK4 on
/// `du/ds = g1 u_bar + g2 u_bbar`, `du_bar/ds = -g1 u`, `du_bbar/ds = -g2 u`,
/// with `g1, g2` read from the curve's curvature vector.
pub fn advance_frame(frame: &PathFrame, ds: f64, curve: &Curve) -> Result<PathFrame> {
    if !ds.is_finite() {
        return Err(Error::InvalidParameter("non-finite arc-length step".into()));
    }
    let seg = frame.segment;
    let k_at = |s: f64| curve.eval(s, seg).k;
    let rhs = |s: f64, t: &[Vec3; 3]| -> [Vec3; 3] {
        let k = k_at(s);
        let (g1, g2) = (k.dot(t[1]), k.dot(t[2]));
        [t[1] * g1 + t[2] * g2, -t[0] * g1, -t[0] * g2]
    };
    let add = |a: &[Vec3; 3], b: &[Vec3; 3], h: f64| [a[0] + b[0] * h, a[1] + b[1] * h, a[2] + b[2] * h];
    let steps = ((ds.abs() / 0.5).ceil() as usize).max(1);
    let h = ds / steps as f64;
    let mut s = frame.s;
    let mut t = [frame.u, frame.u_bar, frame.u_bbar];
    for _ in 0..steps {
        let k1 = rhs(s, &t);
        let k2 = rhs(s + h / 2.0, &add(&t, &k1, h / 2.0));
        let k3 = rhs(s + h / 2.0, &add(&t, &k2, h / 2.0));
        let k4 = rhs(s + h, &add(&t, &k3, h));
        for i in 0..3 {
            t[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
        // keep u, then u_bar, and close the triad with u_bbar = u x u_bar
        let u = t[0] / t[0].norm();
        let ub = t[1] - u * u.dot(t[1]);
        let ub = ub / ub.norm();
        t = [u, ub, u.cross(ub)];
        s += h;
    }
    let k = k_at(s);
    Ok(PathFrame {
        q: curve.eval(s, seg).x,
        u: t[0],
        u_bar: t[1],
        u_bbar: t[2],
        gamma1: k.dot(t[1]),
        gamma2: k.dot(t[2]),
        s,
        segment: seg,
    })
}

/// `s_dot = (u.v_rel)/margin`, `y1_dot = v_rel.u_bar`, `y2_dot = v_rel.u_bbar`.
pub fn path_rates(frame: &PathFrame, err: &PathError, v_rel: Vec3) -> Result<PathRates> {
    if err.margin <= EPS_MARGIN {
        return Err(Error::IllPosedProjection { margin: err.margin });
    }
    Ok(PathRates {
        s_dot: frame.u.dot(v_rel) / err.margin,
        y1_dot: v_rel.dot(frame.u_bar),
        y2_dot: v_rel.dot(frame.u_bbar),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrimConditions {
    pub a1: bool,
    pub a2: bool,
}

/// Sufficient conditions for a well-defined desired frame along the path at speed `v_star`.
pub fn check_trim_conditions(
    frame: &PathFrame,
    v_star: f64,
    params: &AeroParams,
    g0: f64,
    eps1: f64,
    eps2: f64,
) -> TrimConditions {
    let g = Vec3::new(0.0, 0.0, g0);
    let v2 = v_star * v_star;
    let a1 = g.cross(frame.u) - (frame.u_bbar * frame.gamma1 - frame.u_bar * frame.gamma2) * v2;
    let a2 = params.c0_bar() / params.mass_kg * v2 - g.dot(frame.u);
    TrimConditions { a1: a1.norm() > eps1, a2: a2.abs() > eps2 }
}

/// Speed at which the second trim condition degenerates on this frame, found by
/// bisection of `(c0bar/m) v^2 - g.u`. `None` when the path does not descend.
pub fn a2_degenerate_speed(frame: &PathFrame, params: &AeroParams, g0: f64) -> Option<f64> {
    let gu = g0 * frame.u.z;
    if gu <= 0.0 {
        return None;
    }
    let f = |v: f64| params.c0_bar() / params.mass_kg * v * v - gu;
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Largest degenerate speed over `samples` frames spread along the curve.
pub fn a2_threshold_speed(curve: &Curve, params: &AeroParams, g0: f64, samples: usize) -> f64 {
    let len = curve.length().unwrap_or(1000.0);
    let offs = curve.offsets();
    let mut best: f64 = 0.0;
    for i in 0..samples {
        let s = len * i as f64 / samples as f64;
        let seg = offs.iter().rposition(|&o| o <= s).unwrap_or(0);
        let frame = curve.frame_at(s, seg);
        if let Some(v) = a2_degenerate_speed(&frame, params, g0) {
            best = best.max(v);
        }
    }
    best
}

/// Racetrack of two `straight_m` lines joined by half-circles of `radius_m`.
///
/// The half on `x > 0` is horizontal; the half on `x < 0` is tilted upward by
/// `incline_rad` about the `y` axis, which gives slope kinks at the two joints.
pub fn racetrack(straight_m: f64, radius_m: f64, incline_rad: f64, altitude_m: f64) -> Result<Curve> {
    let (l, r) = (straight_m, radius_m);
    let base = Vec3::new(0.0, 0.0, -altitude_m);
    let tilt = |v: Vec3| rotate_about(Vec3::e2(), -incline_rad, v);
    let down = Vec3::e3();
    let segments = vec![
        Segment::Line { start_m: base + Vec3::new(0.0, -r, 0.0), direction: Vec3::e1(), length_m: l },
        Segment::Arc {
            center_m: base + Vec3::new(l, 0.0, 0.0),
            radius_m: r,
            normal: down,
            start_radial: -Vec3::e2(),
            sweep_rad: PI,
        },
        Segment::Line { start_m: base + Vec3::new(l, r, 0.0), direction: -Vec3::e1(), length_m: l },
        Segment::Line { start_m: base + Vec3::new(0.0, r, 0.0), direction: tilt(-Vec3::e1())?, length_m: l },
        Segment::Arc {
            center_m: base + tilt(Vec3::new(-l, 0.0, 0.0))?,
            radius_m: r,
            normal: tilt(down)?,
            start_radial: Vec3::e2(),
            sweep_rad: PI,
        },
        Segment::Line { start_m: base + tilt(Vec3::new(-l, -r, 0.0))?, direction: tilt(Vec3::e1())?, length_m: l },
    ];
    let c = Curve::Composite { segments, closed: true, allow_kinks: incline_rad != 0.0 };
    c.validate()?;
    Ok(c)
}

/// Unit vector orthogonal to `u`, used when a direction is otherwise undefined.
pub fn any_perpendicular(u: Vec3) -> Result<Vec3> {
    let w = project_perp(u, Vec3::e3())?;
    Ok(w.try_normalize(1e-9).unwrap_or_else(|| perp_reference(u)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn circle50() -> Curve {
        Curve::circle(Vec3::zeros(), 50.0, Vec3::e3()).unwrap()
    }

    #[test]
    fn line_projection_example() {
        let c = Curve::line(Vec3::zeros(), Vec3::e1()).unwrap();
        let (f, e) = closest_point(&c, Vec3::new(3.0, 4.0, 0.0), None).unwrap();
        assert!(close(f.q, Vec3::new(3.0, 0.0, 0.0), 1e-15));
        assert!(close(f.u_bar, Vec3::e2(), 1e-15));
        assert_eq!((e.y1, e.y2, e.margin), (4.0, 0.0, 1.0));
        assert_eq!(f.s, 3.0);
    }

    #[test]
    fn circle_projection_example() {
        let (f, e) = closest_point(&circle50(), Vec3::new(60.0, 0.0, 0.0), None).unwrap();
        assert!(close(f.u_bar, Vec3::new(-1.0, 0.0, 0.0), 1e-15));
        assert!(close(f.u, Vec3::e2(), 1e-15));
        assert!(close(f.q, Vec3::new(50.0, 0.0, 0.0), 1e-12));
        assert_abs_diff_eq!(e.y1, -10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.margin, 1.2, epsilon = 1e-12);
        assert_eq!((f.gamma1, f.gamma2), (1.0 / 50.0, 0.0));
    }

    #[test]
    fn on_curve_has_zero_error() {
        let (_, e) = closest_point(&circle50(), Vec3::new(0.0, 50.0, 0.0), None).unwrap();
        assert!(e.norm() < 1e-12);
        assert_abs_diff_eq!(e.margin, 1.0, epsilon = 1e-12);
        let l = Curve::line(Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.6, 0.0, 0.8)).unwrap();
        let (_, e) = closest_point(&l, Vec3::new(1.6, 2.0, 3.8), None).unwrap();
        assert!(e.norm() < 1e-12);
    }

    #[test]
    fn circle_errors() {
        assert_eq!(closest_point(&circle50(), Vec3::new(0.0, 0.0, 7.0), None), Err(Error::CircleAxisDegenerate));
        assert!(matches!(
            closest_point(&circle50(), Vec3::new(4.0, 0.0, 0.0), None),
            Err(Error::IllPosedProjection { .. })
        ));
        assert!(Curve::circle(Vec3::zeros(), -1.0, Vec3::e3()).is_err());
        assert!(Curve::line(Vec3::zeros(), Vec3::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn helix_needs_hint() {
        let h = Curve::Helix {
            axis_point_m: Vec3::zeros(),
            axis: Vec3::e3(),
            radius_m: 30.0,
            pitch_m: 20.0,
            reference: Vec3::e1(),
        };
        assert_eq!(closest_point(&h, Vec3::new(31.0, 0.0, 0.0), None), Err(Error::MissingHint));
        let (f, e) = closest_point(&h, Vec3::new(31.0, 0.0, 0.0), Some(PathHint::at(0.0))).unwrap();
        assert!(f.s.abs() < 1e-9);
        assert!(f.u.dot(e.offset(&f)).abs() < 1e-9);
    }

    #[test]
    fn line_frame_is_invariant_under_transport() {
        let c = Curve::line(Vec3::zeros(), Vec3::new(0.0, 0.6, 0.8)).unwrap();
        let f0 = c.frame_at(0.0, 0);
        let f = advance_frame(&f0, 1234.5, &c).unwrap();
        assert!(close(f.u, f0.u, 1e-15) && close(f.u_bar, f0.u_bar, 1e-15) && close(f.u_bbar, f0.u_bbar, 1e-15));
    }

    #[test]
    fn circle_frame_returns_after_one_turn() {
        let c = circle50();
        let f0 = c.frame_at(0.0, 0);
        let mut f = f0;
        for _ in 0..100 {
            f = advance_frame(&f, TAU * 50.0 / 100.0, &c).unwrap();
        }
        assert!(close(f.u, f0.u, 1e-6) && close(f.u_bar, f0.u_bar, 1e-6) && close(f.u_bbar, f0.u_bbar, 1e-6));
        let closed = c.frame_at(17.0, 0);
        let moved = advance_frame(&f0, 17.0, &c).unwrap();
        assert!(close(moved.u_bar, closed.u_bar, 1e-9));
        assert_abs_diff_eq!(moved.gamma1, 1.0 / 50.0, epsilon = 1e-9);
        assert_abs_diff_eq!(moved.gamma2, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn helix_transport_matches_constant_torsion_formula() {
        let (r, pitch) = (30.0, 20.0);
        let h = Curve::Helix {
            axis_point_m: Vec3::zeros(),
            axis: Vec3::e3(),
            radius_m: r,
            pitch_m: pitch,
            reference: Vec3::e1(),
        };
        let b: f64 = pitch / TAU;
        let l2 = r * r + b * b;
        let (kappa, tau) = (r / l2, b / l2);
        let mut f = h.frame_at(0.0, 0);
        for step in 1..=400 {
            f = advance_frame(&f, 0.5, &h).unwrap();
            let s = 0.5 * step as f64;
            assert_abs_diff_eq!(f.gamma1, kappa * (tau * s).cos(), epsilon = 1e-9);
            assert_abs_diff_eq!(f.gamma2, kappa * (tau * s).sin(), epsilon = 1e-9);
            assert_abs_diff_eq!(f.curvature(), kappa, epsilon = 1e-9);
        }
        let closed = h.frame_at(200.0, 0);
        assert!(close(f.u_bar, closed.u_bar, 1e-7));
    }

    #[test]
    fn transport_stays_orthonormal() {
        let h = Curve::Helix {
            axis_point_m: Vec3::zeros(),
            axis: Vec3::e3(),
            radius_m: 10.0,
            pitch_m: 40.0,
            reference: Vec3::e2(),
        };
        let mut f = h.frame_at(0.0, 0);
        for _ in 0..10_000 {
            f = advance_frame(&f, 0.37, &h).unwrap();
        }
        assert!(f.orthonormality_error() < 1e-9);
    }

    #[test]
    fn closed_forms_agree_with_newton() {
        let circle = circle50();
        let line = Curve::line(Vec3::new(1.0, 1.0, 1.0), Vec3::new(0.0, 0.8, -0.6)).unwrap();
        let pts = [Vec3::new(60.0, 10.0, 3.0), Vec3::new(-20.0, 35.0, -4.0), Vec3::new(5.0, -70.0, 9.0)];
        for p in pts {
            let (f, _) = closest_point(&circle, p, None).unwrap();
            let s = newton_project(|s| circle.eval(s, 0), p, f.s + 3.0, 10.0).unwrap();
            assert!((circle.eval(s, 0).x - f.q).norm() < 1e-8);
            let (f, _) = closest_point(&line, p, None).unwrap();
            let s = newton_project(|s| line.eval(s, 0), p, 0.0, 1e6).unwrap();
            assert!((line.eval(s, 0).x - f.q).norm() < 1e-8);
        }
    }

    #[test]
    fn path_rate_examples() {
        let c = circle50();
        let f = c.frame_at(0.0, 0);
        let e = PathError { y1: 25.0, y2: 0.0, margin: 1.0 - 25.0 / 50.0 };
        let r = path_rates(&f, &e, f.u * 10.0).unwrap();
        assert_abs_diff_eq!(r.s_dot, 20.0, epsilon = 1e-12);
        let line = Curve::line(Vec3::zeros(), Vec3::e1()).unwrap();
        let f = line.frame_at(0.0, 0);
        let r = path_rates(&f, &PathError { y1: 0.0, y2: 0.0, margin: 1.0 }, f.u * 12.0).unwrap();
        assert_eq!((r.s_dot, r.y1_dot, r.y2_dot), (12.0, 0.0, 0.0));
    }

    #[test]
    fn co_moving_carrier_has_zero_rates() {
        let v = Vec3::new(3.0, -2.0, 1.0);
        let spec = CurveSpec {
            curve: circle50(),
            carrier: Some(Carrier { velocity_mps: v, acceleration_mps2: Vec3::zeros() }),
        };
        let (f, e) = spec.closest_point(Vec3::new(55.0, 5.0, 0.0) + v * 4.0, 4.0, None).unwrap();
        let r = path_rates(&f, &e, spec.relative_velocity(v, 4.0)).unwrap();
        assert_eq!((r.s_dot, r.y1_dot, r.y2_dot), (0.0, 0.0, 0.0));
    }

    #[test]
    fn trim_condition_examples() {
        let p = AeroParams::default();
        let line = Curve::line(Vec3::zeros(), Vec3::e1()).unwrap();
        let t = check_trim_conditions(&line.frame_at(0.0, 0), 10.0, &p, 9.81, 1e-3, 1e-3);
        assert!(t.a1 && t.a2);
        let vertical = Curve::line(Vec3::zeros(), Vec3::e3()).unwrap();
        let v = (p.mass_kg * 9.81 / p.c0_bar()).sqrt();
        let t = check_trim_conditions(&vertical.frame_at(0.0, 0), v, &p, 9.81, 1e-3, 1e-3);
        assert!(!t.a2);
        assert!(!t.a1);
    }

    #[test]
    fn inclined_circle_threshold() {
        let p = AeroParams::default();
        let nu = 15f64.to_radians();
        let n = rotate_about(Vec3::e2(), nu, Vec3::e3()).unwrap();
        let c = Curve::circle(Vec3::zeros(), 50.0, n).unwrap();
        let v = a2_threshold_speed(&c, &p, 9.81, 3600);
        let exact = (p.mass_kg * 9.81 * nu.sin() / p.c0_bar()).sqrt();
        assert!((v - exact).abs() < 1e-4, "{v} vs {exact}");
        let f = c.frame_at(0.0, 0);
        assert!(check_trim_conditions(&f, 10.0, &p, 9.81, 1e-3, 1e-3).a2);
    }

    #[test]
    fn racetrack_geometry() {
        let c = racetrack(100.0, 50.0, 15f64.to_radians(), 100.0).unwrap();
        assert_eq!(c.segment_count(), 6);
        assert_abs_diff_eq!(c.length().unwrap(), 400.0 + TAU * 50.0, epsilon = 1e-9);
        let tilted = c.eval(c.offsets()[4] + 25.0 * PI, 4).x;
        assert!(tilted.z < -100.0 - 30.0, "apex must be higher: {tilted:?}");
        let flat = match &c {
            Curve::Composite { segments, .. } => {
                Curve::Composite { segments: segments.clone(), closed: true, allow_kinks: false }
            }
            _ => unreachable!(),
        };
        assert!(flat.validate().is_err());
    }

    #[test]
    fn composite_switches_forward_only() {
        let c = racetrack(100.0, 50.0, 0.0, 0.0).unwrap();
        let (f, _) = closest_point(&c, Vec3::new(50.0, -52.0, 0.0), None).unwrap();
        assert_eq!(f.segment, 0);
        assert_abs_diff_eq!(f.s, 50.0, epsilon = 1e-12);
        // past the end of the first straight: moves to the arc
        let (f, e) =
            closest_point(&c, Vec3::new(100.0 + 50.0 * 0.02f64.sin(), -50.0 * 0.02f64.cos(), 0.0), Some(f.hint()))
                .unwrap();
        assert_eq!(f.segment, 1);
        assert!(e.norm() < 1e-9);
        // hinted on the arc, a point behind its start is still projected on the arc
        let (f, _) = closest_point(&c, Vec3::new(99.0, -50.0, 0.0), Some(f.hint())).unwrap();
        assert_eq!(f.segment, 1);
        assert!(f.s < 100.0);
        // wrap from the last segment to the first
        let last = PathHint { s: 700.0, segment: 5 };
        let (f, _) = closest_point(&c, Vec3::new(1.0, -50.0, 0.0), Some(last)).unwrap();
        assert_eq!(f.segment, 0);
        assert_abs_diff_eq!(f.s, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn composite_frames_continuous_on_flat_track() {
        let c = racetrack(100.0, 50.0, 0.0, 0.0).unwrap();
        let offs = c.offsets();
        for seg in 0..6 {
            let next = (seg + 1) % 6;
            let len = match &c {
                Curve::Composite { segments, .. } => segments[seg].length(),
                _ => unreachable!(),
            };
            let a = c.frame_at(offs[seg] + len, seg);
            let b = c.frame_at(offs[next], next);
            assert!(close(a.q, b.q, 1e-9) && close(a.u, b.u, 1e-9) && close(a.u_bar, b.u_bar, 1e-9));
        }
    }

    proptest! {
        #[test]
        fn error_is_orthogonal_to_tangent(x in -200.0..200.0f64, y in -200.0..200.0f64, z in -50.0..50.0f64) {
            let p = Vec3::new(x, y, z);
            let curves = [circle50(), Curve::line(Vec3::new(3.0, 0.0, 1.0), Vec3::new(0.0, 0.6, 0.8)).unwrap()];
            for c in curves.iter() {
                if let Ok((f, e)) = closest_point(c, p, None) {
                    prop_assert!(e.offset(&f).dot(f.u).abs() < 1e-9 * (1.0 + p.norm()));
                    prop_assert!((f.q + e.offset(&f) - p).norm() < 1e-9 * (1.0 + p.norm()));
                    prop_assert!(f.orthonormality_error() < 1e-12);
                }
            }
        }

        #[test]
        fn helix_curvature_recovered(r in 1.0..80.0f64, pitch in -60.0..60.0f64, s in -300.0..300.0f64) {
            let h = Curve::Helix { axis_point_m: Vec3::zeros(), axis: Vec3::e3(), radius_m: r, pitch_m: pitch, reference: Vec3::e1() };
            let b = pitch / TAU;
            let f = h.frame_at(s, 0);
            prop_assert!((f.curvature() - r / (r * r + b * b)).abs() < 1e-9);
            prop_assert!(f.orthonormality_error() < 1e-12);
        }
    }
}
