//! Physical front from a ray-coordinate state.
//!
//! Points sit on cell faces. Starting from the anchor at `ξ = xi_min`,
//! each cell contributes `Δξ g (−sin θ, cos θ)` with its own values.

use super::{Boundary2, KclState2};
use crate::numerics::unwrap_near;
use crate::ray_tracer::{Front2, RayPoint};

/// One face sample of the reconstructed front.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontSample {
    pub xi: f64,
    pub x: f64,
    pub y: f64,
    pub m: f64,
    pub theta: f64,
    pub g: f64,
}

/// Face values of `(m, θ, g)`: averages of the adjacent cells, with `θ`
/// unwrapped against the cell to the right.
fn face_values(state: &KclState2, j: usize) -> (f64, f64, f64) {
    let n = state.len();
    let (l, r) = if j == 0 || j == n {
        match state.boundary {
            Boundary2::Periodic => (n - 1, 0),
            Boundary2::Extrapolate if j == 0 => (0, 0),
            Boundary2::Extrapolate => (n - 1, n - 1),
        }
    } else {
        (j - 1, j)
    };
    let th_r = state.theta[r];
    let th_l = unwrap_near(state.theta[l], th_r);
    let mut theta = 0.5 * (th_l + th_r);
    if j == n {
        // keep the last face continuous with the cells it closes
        theta = unwrap_near(theta, state.theta[n - 1]);
    }
    (0.5 * (state.m[l] + state.m[r]), theta, 0.5 * (state.g[l] + state.g[r]))
}

/// The `N + 1` face samples of the front through `anchor`.
pub fn reconstruct_samples(state: &KclState2, anchor: [f64; 2]) -> Vec<FrontSample> {
    let n = state.len();
    let d = state.xi_spacing;
    let mut out = Vec::with_capacity(n + 1);
    let (mut x, mut y) = (anchor[0], anchor[1]);
    for j in 0..=n {
        let (m, theta, g) = face_values(state, j);
        out.push(FrontSample { xi: state.xi_min + j as f64 * d, x, y, m, theta, g });
        if j < n {
            let (s, c) = state.theta[j].sin_cos();
            x -= d * state.g[j] * s;
            y += d * state.g[j] * c;
        }
    }
    out
}

pub fn reconstruct_front(state: &KclState2, anchor: [f64; 2]) -> Front2 {
    let points = reconstruct_samples(state, anchor).iter().map(|s| RayPoint::new(s.x, s.y, s.theta)).collect();
    Front2 { points, xi_spacing: state.xi_spacing }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn straight_front() {
        let s = KclState2::new(0.0, 0.5, vec![1.0; 4], vec![0.0; 4], vec![2.0; 4], Boundary2::Extrapolate).unwrap();
        let p = reconstruct_samples(&s, [1.0, -2.0]);
        assert_eq!(p.len(), 5);
        for (j, q) in p.iter().enumerate() {
            assert_eq!((q.x, q.y), (1.0, -2.0 + j as f64));
        }
    }

    #[test]
    fn circle_closes_and_faces_sit_on_it() {
        let n = 256;
        let d = 2.0 * PI / n as f64;
        let theta: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * d).collect();
        let s = KclState2::new(0.0, d, vec![1.0; n], theta, vec![1.0; n], Boundary2::Periodic).unwrap();
        let p = reconstruct_samples(&s, [1.0, 0.0]);
        let last = p[n];
        assert!((last.x - 1.0).abs() < 1e-12 && last.y.abs() < 1e-12);
        // midpoint-rule chords scale the polygon about the anchor by
        // d / (2 sin(d/2)) = 1 + d²/24 + ...
        for q in &p {
            assert!((q.x.hypot(q.y) - 1.0).abs() < d * d / 10.0);
            assert!((q.theta - q.y.atan2(q.x)).sin().abs() < d * d);
        }
        assert!((p[0].theta).abs() < 1e-15);
        assert!((p[n].theta - 2.0 * PI).abs() < 1e-12);
    }
}
