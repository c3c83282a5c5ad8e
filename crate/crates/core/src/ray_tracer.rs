//! Linear ray theory in the plane.
//!
//! Each point of a front moves with the ray equations
//!
//! ```text
//! dx/dt = m cos θ,   dy/dt = m sin θ,   dθ/dt = (−sin θ ∂x + cos θ ∂y) m
//! ```
//!
//! integrated with fixed-step RK4. Points keep their index across
//! snapshots, so index `i` is the ray `ξ = ξ_i`.

use std::f64::consts::PI;

use crate::error::{KclError, Result};
use crate::numerics::{rk4_step, unwrap_near, wrap_angle};

/// Normal speed field `m(x, y)` with its gradient.
pub trait SpeedField2: Sync {
    fn speed(&self, x: f64, y: f64) -> f64;
    fn gradient(&self, x: f64, y: f64) -> (f64, f64);
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantSpeed(pub f64);

impl SpeedField2 for ConstantSpeed {
    fn speed(&self, _x: f64, _y: f64) -> f64 {
        self.0
    }

    fn gradient(&self, _x: f64, _y: f64) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// `m(r) = 1 + ε r` about the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialSpeed {
    pub epsilon: f64,
}

impl SpeedField2 for RadialSpeed {
    fn speed(&self, x: f64, y: f64) -> f64 {
        1.0 + self.epsilon * x.hypot(y)
    }

    fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let r = x.hypot(y);
        if r == 0.0 {
            (0.0, 0.0)
        } else {
            (self.epsilon * x / r, self.epsilon * y / r)
        }
    }
}

/// `m(x, y) = m0 + a x + b y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearSpeed {
    pub m0: f64,
    pub a: f64,
    pub b: f64,
}

impl SpeedField2 for LinearSpeed {
    fn speed(&self, x: f64, y: f64) -> f64 {
        self.m0 + self.a * x + self.b * y
    }

    fn gradient(&self, _x: f64, _y: f64) -> (f64, f64) {
        (self.a, self.b)
    }
}

/// A point on a front with the angle of its normal (and ray).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayPoint {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl RayPoint {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: wrap_angle(theta) }
    }

    pub fn normal(&self) -> (f64, f64) {
        (self.theta.cos(), self.theta.sin())
    }
}

/// An ordered polyline of front points, nominally uniform in `ξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Front2 {
    pub points: Vec<RayPoint>,
    pub xi_spacing: f64,
}

impl Front2 {
    pub fn new(points: Vec<RayPoint>, xi_spacing: f64) -> Result<Self> {
        if points.len() < 3 {
            return Err(KclError::InvalidInput("a front needs at least 3 points".into()));
        }
        if !(xi_spacing > 0.0) {
            return Err(KclError::InvalidInput("xi_spacing must be positive".into()));
        }
        Ok(Self { points, xi_spacing })
    }

    /// Circle of radius `r` about `(cx, cy)` with outward normals, sampled
    /// at `θ = 2πk/n`.
    pub fn circle(cx: f64, cy: f64, r: f64, n: usize) -> Result<Self> {
        let dxi = 2.0 * PI / n as f64;
        let pts = (0..n)
            .map(|k| {
                let th = k as f64 * dxi;
                RayPoint::new(cx + r * th.cos(), cy + r * th.sin(), th)
            })
            .collect();
        Self::new(pts, dxi)
    }

    /// Arc length of the polyline.
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y)).sum()
    }

    /// Applies a rigid rotation by `angle` about the origin.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let points = self
            .points
            .iter()
            .map(|p| RayPoint::new(c * p.x - s * p.y, s * p.x + c * p.y, p.theta + angle))
            .collect();
        Self { points, xi_spacing: self.xi_spacing }
    }
}

/// Fronts at successive times, with the speed recorded at every point.
#[derive(Clone, Debug)]
pub struct RayHistory {
    pub times: Vec<f64>,
    pub fronts: Vec<Front2>,
    pub speeds: Vec<Vec<f64>>,
}

fn checked_speed(field: &dyn SpeedField2, x: f64, y: f64) -> Result<f64> {
    let m = field.speed(x, y);
    if !(m > 0.0) {
        return Err(KclError::InvalidSpeed { speed: m, x, y });
    }
    Ok(m)
}

/// Advances one ray point by `dt` with RK4.
pub fn ray_step(p: &RayPoint, field: &dyn SpeedField2, dt: f64) -> Result<RayPoint> {
    let mut bad = None;
    let y = rk4_step(&[p.x, p.y, p.theta], dt, |s| {
        let m = field.speed(s[0], s[1]);
        if !(m > 0.0) && bad.is_none() {
            bad = Some(KclError::InvalidSpeed { speed: m, x: s[0], y: s[1] });
        }
        let (mx, my) = field.gradient(s[0], s[1]);
        let (sn, cs) = s[2].sin_cos();
        [m * cs, m * sn, -sn * mx + cs * my]
    });
    if let Some(e) = bad {
        return Err(e);
    }
    Ok(RayPoint::new(y[0], y[1], y[2]))
}

/// Traces every point of `front0` to `t_end`, recording each step.
pub fn trace_rays(front0: &Front2, field: &dyn SpeedField2, t_end: f64, dt: f64) -> Result<RayHistory> {
    if !(dt > 0.0) {
        return Err(KclError::InvalidInput("dt must be positive".into()));
    }
    let speeds_of = |f: &Front2| f.points.iter().map(|p| checked_speed(field, p.x, p.y)).collect::<Result<Vec<_>>>();
    let mut history = RayHistory { times: vec![0.0], speeds: vec![speeds_of(front0)?], fronts: vec![front0.clone()] };
    let mut front = front0.clone();
    let mut t = 0.0;
    while t < t_end * (1.0 - 1e-14) {
        let h = dt.min(t_end - t);
        let points = front.points.iter().map(|p| ray_step(p, field, h)).collect::<Result<Vec<_>>>()?;
        front = Front2 { points, xi_spacing: front.xi_spacing };
        t = if h == t_end - t { t_end } else { t + h };
        history.times.push(t);
        history.speeds.push(speeds_of(&front)?);
        history.fronts.push(front.clone());
    }
    Ok(history)
}

/// Smallest distance between neighbouring ray points at each snapshot.
pub fn min_neighbor_distance(front: &Front2) -> f64 {
    front.points.windows(2).map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y)).fold(f64::INFINITY, f64::min)
}

/// First snapshot time at which two neighbouring rays have crossed,
/// detected as a reversal of their order along the initial tangent.
pub fn first_crossing_time(history: &RayHistory) -> Option<f64> {
    let f0 = &history.fronts[0];
    let tangents: Vec<(f64, f64)> = f0.points.windows(2).map(|w| (w[1].x - w[0].x, w[1].y - w[0].y)).collect();
    for (t, front) in history.times.iter().zip(&history.fronts) {
        let crossed = front.points.windows(2).zip(&tangents).any(|(w, tan)| {
            (w[1].x - w[0].x) * tan.0 + (w[1].y - w[0].y) * tan.1 <= 0.0
        });
        if crossed {
            return Some(*t);
        }
    }
    None
}

/// Angle of the segment normal, `direction − π/2`.
fn segment_normal(a: &RayPoint, b: &RayPoint) -> f64 {
    (b.y - a.y).atan2(b.x - a.x) - 0.5 * PI
}

/// Angle jump between adjacent segments above which a vertex is a corner.
pub const CORNER_THRESHOLD: f64 = 0.05;

/// One Huygens step with constant speed: every point moves `m dt` along
/// its normal, and each interior corner is replaced by the circular arc of
/// radius `m dt` about the corner spanning the normals of its two sides.
pub fn huygens_step(front: &Front2, m_const: f64, dt: f64) -> Front2 {
    let radius = m_const * dt;
    let pts = &front.points;
    let mut out = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        if i > 0 && i + 1 < pts.len() {
            let before = segment_normal(&pts[i - 1], p);
            let after = unwrap_near(segment_normal(p, &pts[i + 1]), before);
            let jump = after - before;
            if jump.abs() > CORNER_THRESHOLD {
                let pieces = ((jump.abs() / CORNER_THRESHOLD).ceil() as usize).max(2);
                for k in 0..=pieces {
                    let phi = before + jump * k as f64 / pieces as f64;
                    out.push(RayPoint::new(p.x + radius * phi.cos(), p.y + radius * phi.sin(), phi));
                }
                continue;
            }
        }
        let (nx, ny) = p.normal();
        out.push(RayPoint::new(p.x + radius * nx, p.y + radius * ny, p.theta));
    }
    Front2 { points: out, xi_spacing: front.xi_spacing }
}

/// Maximum residuals of the ray-coordinate equations `g_t = m θ_ξ` and
/// `θ_t = −m_ξ / g` evaluated by central differences on a ray history.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub metric_residual: f64,
    pub angle_residual: f64,
}

fn metrics_of(front: &Front2) -> Result<Vec<f64>> {
    let p = &front.points;
    let h = front.xi_spacing;
    let mut g = vec![f64::NAN; p.len()];
    for i in 1..p.len() - 1 {
        let gi = (p[i + 1].x - p[i - 1].x).hypot(p[i + 1].y - p[i - 1].y) / (2.0 * h);
        if !(gi > 1e-12) {
            return Err(KclError::SingularFront);
        }
        g[i] = gi;
    }
    // neighbour order reversal also means the front has folded
    for w in p.windows(2) {
        let (tx, ty) = (-w[0].theta.sin(), w[0].theta.cos());
        if (w[1].x - w[0].x) * tx + (w[1].y - w[0].y) * ty <= 0.0 {
            return Err(KclError::SingularFront);
        }
    }
    Ok(g)
}

pub fn check_ray_kcl_consistency(history: &RayHistory) -> Result<ConsistencyReport> {
    let k_len = history.fronts.len();
    if k_len < 3 {
        return Err(KclError::InvalidInput("consistency check needs at least 3 snapshots".into()));
    }
    let metrics = history.fronts.iter().map(metrics_of).collect::<Result<Vec<_>>>()?;
    let mut report = ConsistencyReport { metric_residual: 0.0, angle_residual: 0.0 };
    for k in 1..k_len - 1 {
        let dt2 = history.times[k + 1] - history.times[k - 1];
        let front = &history.fronts[k];
        let h2 = 2.0 * front.xi_spacing;
        let m = &history.speeds[k];
        let p = &front.points;
        for i in 2..p.len() - 2 {
            let g = metrics[k][i];
            let g_t = (metrics[k + 1][i] - metrics[k - 1][i]) / dt2;
            let th = p[i].theta;
            let theta_t = (unwrap_near(history.fronts[k + 1].points[i].theta, th)
                - unwrap_near(history.fronts[k - 1].points[i].theta, th))
                / dt2;
            let theta_xi = (unwrap_near(p[i + 1].theta, th) - unwrap_near(p[i - 1].theta, th)) / h2;
            let m_xi = (m[i + 1] - m[i - 1]) / h2;
            report.metric_residual = report.metric_residual.max((g_t - m[i] * theta_xi).abs());
            report.angle_residual = report.angle_residual.max((theta_t + m_xi / g).abs());
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight_front(n: usize) -> Front2 {
        let pts = (0..n).map(|i| RayPoint::new(0.0, i as f64 * 0.1, 0.0)).collect();
        Front2::new(pts, 0.1).unwrap()
    }

    #[test]
    fn front_validation() {
        assert!(Front2::new(vec![RayPoint::new(0.0, 0.0, 0.0); 2], 0.1).is_err());
        assert!(Front2::new(vec![RayPoint::new(0.0, 0.0, 0.0); 3], 0.0).is_err());
    }

    #[test]
    fn constant_speed_rays_are_straight() {
        let f0 = Front2::circle(0.3, -0.2, 0.7, 40).unwrap();
        let h = trace_rays(&f0, &ConstantSpeed(1.3), 1.0, 0.05).unwrap();
        for (front, t) in h.fronts.iter().zip(&h.times) {
            for (p, q) in front.points.iter().zip(&f0.points) {
                assert!((p.theta - q.theta).abs() < 1e-12);
                let (nx, ny) = q.normal();
                // distance from the straight line through q along its normal
                let off = (p.x - q.x) * ny - (p.y - q.y) * nx;
                assert!(off.abs() < 1e-12);
                assert!(((p.x - q.x) * nx + (p.y - q.y) * ny - 1.3 * t).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn expanding_circle_radius() {
        let f0 = Front2::circle(1.0, 2.0, 1.0, 64).unwrap();
        let h = trace_rays(&f0, &ConstantSpeed(1.0), 1.0, 0.01).unwrap();
        assert_eq!(*h.times.last().unwrap(), 1.0);
        let err = h.fronts.last().unwrap().points.iter().map(|p| ((p.x - 1.0).hypot(p.y - 2.0) - 2.0).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn invalid_speed_is_reported() {
        let f0 = straight_front(5);
        // the front starts where m ≤ 0
        let field = LinearSpeed { m0: -0.5, a: 0.0, b: 1.0 };
        let err = trace_rays(&f0, &field, 2.0, 0.1).unwrap_err();
        assert!(matches!(err, KclError::InvalidSpeed { .. }));
    }

    #[test]
    fn concave_wedge_develops_crossing() {
        // corner at the origin, normals tilted towards the axis from both sides
        let theta0: f64 = 0.4;
        let n = 41;
        let pts: Vec<RayPoint> = (0..n)
            .map(|i| {
                let s = (i as f64 - 20.0) * 0.05;
                let th = if s < 0.0 { theta0 } else if s > 0.0 { -theta0 } else { 0.0 };
                let (tx, ty) = (-th.sin(), th.cos());
                RayPoint::new(s.abs() * if s < 0.0 { -tx } else { tx }, s.abs() * if s < 0.0 { -ty } else { ty }, th)
            })
            .collect();
        let f0 = Front2::new(pts, 0.05).unwrap();
        let h = trace_rays(&f0, &ConstantSpeed(1.0), 2.0, 0.01).unwrap();
        let tc = first_crossing_time(&h).expect("rays must cross");
        assert!(tc > 0.0 && tc < 1.0, "{tc}");
        assert!(min_neighbor_distance(h.fronts.last().unwrap()) < min_neighbor_distance(&f0));
    }

    #[test]
    fn huygens_straight_and_circle() {
        let f = huygens_step(&straight_front(10), 1.0, 0.5);
        assert_eq!(f.points.len(), 10);
        for (i, p) in f.points.iter().enumerate() {
            assert!((p.x - 0.5).abs() < 1e-15 && (p.y - 0.1 * i as f64).abs() < 1e-15);
        }
        let c = Front2::circle(0.0, 0.0, 1.0, 256).unwrap();
        let f = huygens_step(&c, 2.0, 0.25);
        assert_eq!(f.points.len(), 256);
        assert!(f.points.iter().all(|p| (p.x.hypot(p.y) - 1.5).abs() < 1e-14));
    }

    #[test]
    fn huygens_corner_arc() {
        // convex corner at the origin: normals open from -0.6 to +0.6
        let mut pts = Vec::new();
        for i in (1..=5).rev() {
            let s = i as f64 * 0.1;
            pts.push(RayPoint::new(-s * 0.6f64.sin(), -s * 0.6f64.cos(), -0.6));
        }
        pts.push(RayPoint::new(0.0, 0.0, 0.0));
        for i in 1..=5 {
            let s = i as f64 * 0.1;
            pts.push(RayPoint::new(-s * 0.6f64.sin(), s * 0.6f64.cos(), 0.6));
        }
        let f0 = Front2::new(pts, 0.1).unwrap();
        let f = huygens_step(&f0, 1.0, 0.3);
        let arc: Vec<&RayPoint> = f.points.iter().filter(|p| (p.x.hypot(p.y) - 0.3).abs() < 1e-14).collect();
        assert!(arc.len() >= 3);
        assert!((arc.first().unwrap().theta + 0.6).abs() < 1e-12);
        assert!((arc.last().unwrap().theta - 0.6).abs() < 1e-12);
    }

    #[test]
    fn consistency_straight_front() {
        let h = trace_rays(&straight_front(12), &ConstantSpeed(1.0), 0.5, 0.05).unwrap();
        let r = check_ray_kcl_consistency(&h).unwrap();
        assert!(r.metric_residual < 1e-10 && r.angle_residual < 1e-10);
    }

    #[test]
    fn consistency_needs_three_snapshots() {
        let h = trace_rays(&straight_front(12), &ConstantSpeed(1.0), 0.05, 0.05).unwrap();
        assert!(check_ray_kcl_consistency(&h).is_err());
    }
}
