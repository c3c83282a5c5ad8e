//! Finite-volume solver for the 2-D kinematical conservation laws
//!
//! ```text
//! (g sin θ)_t + (m cos θ)_ξ = 0,
//! (g cos θ)_t − (m sin θ)_ξ = 0,
//! ```
//!
//! in ray coordinates `(ξ, t)`. Cells are rays; the state stores `m`, `θ`
//! and the metric `g` per cell, and the update acts on the conserved pair
//! `h = (g sin θ, g cos θ)` with a local Lax–Friedrichs flux.
//!
//! The dissipation coefficient and the time step come from the numerical
//! radius of the flux Jacobian. In the intrinsic frame `(∂/∂g, ∂/∂θ / g)`
//! the Jacobian is `[[0, −m/g], [dm/dg, 0]]`, whose numerical radius is
//! `(m/g + |dm/dg|)/2`. It bounds the spectral radius from above and does
//! not vanish for the nilpotent constant-`m` case. `dm/dg` is taken from
//! the closure by central differences.

mod kinks;
mod reconstruct;

pub use kinks::{detect_kinks, jump_residual, kink_speed, plateau_states, plateau_states_at, sample_state, track_kinks, KinkRecord, KinkTrack, PlateauState, DEFAULT_KINK_THRESHOLD};
pub use reconstruct::{reconstruct_front, reconstruct_samples, FrontSample};

use serde::{Deserialize, Serialize};

use crate::closure::Closure;
use crate::error::{KclError, Result};
use crate::numerics::unwrap_near;

/// Boundary treatment in `ξ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary2 {
    Periodic,
    /// Zero-order extrapolation into ghost cells.
    Extrapolate,
}

/// Spatial reconstruction of the finite-volume update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Piecewise constant states, forward Euler.
    #[default]
    FirstOrder,
    /// Minmod-limited linear reconstruction of `(h1, h2, m)` with a
    /// two-stage strong-stability-preserving Runge–Kutta step.
    Muscl,
}

/// Safety factor applied to the speed bound in the time step.
pub const SPEED_SAFETY: f64 = 1.2;
/// Floor for the speed bound.
pub const SPEED_FLOOR: f64 = 1e-12;
pub const DEFAULT_CFL: f64 = 0.45;
/// Smallest admissible step as a fraction of `cfl Δξ`. Fronts that focus
/// without forming a kink drive `g` and the step to zero.
pub const DT_FLOOR: f64 = 1e-4;

/// Cellwise 2-D KCL state on a uniform `ξ` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KclState2 {
    pub xi_min: f64,
    pub xi_spacing: f64,
    pub m: Vec<f64>,
    pub theta: Vec<f64>,
    pub g: Vec<f64>,
    pub boundary: Boundary2,
    pub time: f64,
}

impl KclState2 {
    /// Validates positivity of `g` and `m` and that `θ` has no jumps of π
    /// or more between neighbouring cells.
    pub fn new(xi_min: f64, xi_spacing: f64, m: Vec<f64>, theta: Vec<f64>, g: Vec<f64>, boundary: Boundary2) -> Result<Self> {
        let n = m.len();
        if n < 3 || theta.len() != n || g.len() != n {
            return Err(KclError::InvalidInput("state needs at least 3 cells and equal-length m, theta, g".into()));
        }
        if !(xi_spacing > 0.0) {
            return Err(KclError::InvalidInput("xi_spacing must be positive".into()));
        }
        if let Some(cell) = g.iter().position(|&v| !(v > 0.0)) {
            return Err(KclError::MetricCollapse { cell });
        }
        if m.iter().any(|&v| !(v > 0.0)) {
            return Err(KclError::InvalidInput("m must be positive in every cell".into()));
        }
        if theta.windows(2).any(|w| !((w[1] - w[0]).abs() < std::f64::consts::PI)) {
            return Err(KclError::InvalidInput("theta must be unwrapped between neighbouring cells".into()));
        }
        Ok(Self { xi_min, xi_spacing, m, theta, g, boundary, time: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_min + self.len() as f64 * self.xi_spacing
    }

    pub fn xi_center(&self, i: usize) -> f64 {
        self.xi_min + (i as f64 + 0.5) * self.xi_spacing
    }

    /// Replaces `θ` by `θ + angle` in every cell.
    pub fn rotated(&self, angle: f64) -> Self {
        let mut s = self.clone();
        s.theta.iter_mut().for_each(|t| *t += angle);
        s
    }

    /// Arc length `Σ g Δξ`.
    pub fn arc_length(&self) -> f64 {
        self.g.iter().sum::<f64>() * self.xi_spacing
    }

    /// Speed bound `(m/g + |dm/dg|)/2` per cell.
    pub fn speed_bounds(&self, closure: &Closure) -> Result<Vec<f64>> {
        (0..self.len())
            .map(|i| Ok(0.5 * (self.m[i] / self.g[i] + closure.dm_dmeasure(i, self.g[i])?.abs())))
            .collect()
    }
}

/// The conserved densities `h1 = g sin θ`, `h2 = g cos θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConservedPair {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
}

pub fn to_conserved(state: &KclState2) -> ConservedPair {
    let (h1, h2) = state.theta.iter().zip(&state.g).map(|(t, g)| (g * t.sin(), g * t.cos())).unzip();
    ConservedPair { h1, h2 }
}

/// Inverse of [`to_conserved`]: `g = |h|`, `θ = atan2(h1, h2)`, unwrapped
/// along the cells. `template` supplies the grid, boundary and time.
pub fn from_conserved(pair: &ConservedPair, m: &[f64], template: &KclState2) -> Result<KclState2> {
    let n = pair.h1.len();
    if pair.h2.len() != n || m.len() != n || template.len() != n {
        return Err(KclError::InvalidInput("length mismatch in from_conserved".into()));
    }
    let mut g = Vec::with_capacity(n);
    let mut theta: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let gi = pair.h1[i].hypot(pair.h2[i]);
        if !(gi > 0.0) {
            return Err(KclError::MetricCollapse { cell: i });
        }
        let raw = pair.h1[i].atan2(pair.h2[i]);
        theta.push(match theta.last() {
            Some(&prev) => unwrap_near(raw, prev),
            None => raw,
        });
        g.push(gi);
    }
    Ok(KclState2 { m: m.to_vec(), theta, g, ..template.clone() })
}

/// Fluxes `(m cos θ, −m sin θ)` per cell.
pub fn kcl_flux(state: &KclState2) -> (Vec<f64>, Vec<f64>) {
    state.theta.iter().zip(&state.m).map(|(t, m)| (m * t.cos(), -m * t.sin())).unzip()
}

/// Time step `cfl Δξ / λ_max` with `λ_max = 1.2 max_i w_i`.
pub fn stable_dt(state: &KclState2, bounds: &[f64], cfl: f64) -> Result<f64> {
    let lmax = SPEED_SAFETY * bounds.iter().cloned().fold(0.0, f64::max);
    if lmax <= SPEED_FLOOR {
        let h = to_conserved(state);
        let uniform = h.h1.windows(2).all(|w| w[0] == w[1]) && h.h2.windows(2).all(|w| w[0] == w[1]);
        if !uniform {
            return Err(KclError::DegenerateSystem);
        }
    }
    let dt = cfl * state.xi_spacing / lmax.max(SPEED_FLOOR);
    if dt < DT_FLOOR * cfl * state.xi_spacing {
        return Err(KclError::TimeStepUnderflow { time: state.time });
    }
    Ok(dt)
}

fn check_cfl(cfl: f64) -> Result<()> {
    if cfl > 0.0 && cfl < 1.0 {
        Ok(())
    } else {
        Err(KclError::InvalidInput(format!("cfl must lie in (0, 1), got {cfl}")))
    }
}

/// Cell values including `ghosts` ghost cells on each side.
fn padded(values: &[f64], boundary: Boundary2, ghosts: usize) -> Vec<f64> {
    let n = values.len();
    (0..n + 2 * ghosts)
        .map(|k| {
            let i = k as isize - ghosts as isize;
            match boundary {
                Boundary2::Periodic => values[i.rem_euclid(n as isize) as usize],
                Boundary2::Extrapolate => values[i.clamp(0, n as isize - 1) as usize],
            }
        })
        .collect()
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Face fluxes of `(h1, h2)`; entry `j` is the face between cells `j−1`
/// and `j`, for `j = 0..=n`.
fn face_fluxes(h1: &[f64], h2: &[f64], m: &[f64], bounds: &[f64], boundary: Boundary2, scheme: Scheme) -> (Vec<f64>, Vec<f64>) {
    let n = h1.len();
    let ghosts = 2;
    let (p1, p2, pm, pw) = (padded(h1, boundary, ghosts), padded(h2, boundary, ghosts), padded(m, boundary, ghosts), padded(bounds, boundary, ghosts));
    let slope = |v: &[f64], k: usize| match scheme {
        Scheme::FirstOrder => 0.0,
        Scheme::Muscl => minmod(v[k] - v[k - 1], v[k + 1] - v[k]),
    };
    let flux = |a: f64, b: f64, mm: f64| {
        let g = a.hypot(b);
        (mm * b / g, -mm * a / g)
    };
    let mut f1 = Vec::with_capacity(n + 1);
    let mut f2 = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let (l, r) = (j + ghosts - 1, j + ghosts);
        let (a_l, b_l, m_l) = (p1[l] + 0.5 * slope(&p1, l), p2[l] + 0.5 * slope(&p2, l), pm[l] + 0.5 * slope(&pm, l));
        let (a_r, b_r, m_r) = (p1[r] - 0.5 * slope(&p1, r), p2[r] - 0.5 * slope(&p2, r), pm[r] - 0.5 * slope(&pm, r));
        let alpha = pw[l].max(pw[r]);
        let (fl1, fl2) = flux(a_l, b_l, m_l);
        let (fr1, fr2) = flux(a_r, b_r, m_r);
        f1.push(0.5 * (fl1 + fr1) - 0.5 * alpha * (a_r - a_l));
        f2.push(0.5 * (fl2 + fr2) - 0.5 * alpha * (b_r - b_l));
    }
    (f1, f2)
}

/// Euler stage `h − dt/Δξ (F_{i+1/2} − F_{i−1/2})`.
fn euler_stage(state: &KclState2, h: &ConservedPair, bounds: &[f64], dt: f64, scheme: Scheme) -> ConservedPair {
    let (f1, f2) = face_fluxes(&h.h1, &h.h2, &state.m, bounds, state.boundary, scheme);
    let r = dt / state.xi_spacing;
    let n = h.h1.len();
    ConservedPair {
        h1: (0..n).map(|i| h.h1[i] - r * (f1[i + 1] - f1[i])).collect(),
        h2: (0..n).map(|i| h.h2[i] - r * (f2[i + 1] - f2[i])).collect(),
    }
}

/// Recovers `(g, θ, m)` from updated conserved data, unwrapping each `θ`
/// against the same ray's previous value.
fn recover(pair: &ConservedPair, previous: &KclState2, closure: &Closure, time: f64) -> Result<KclState2> {
    let n = previous.len();
    let mut next = previous.clone();
    for i in 0..n {
        let g = pair.h1[i].hypot(pair.h2[i]);
        if !(g > 0.0) || !g.is_finite() {
            return Err(KclError::MetricCollapse { cell: i });
        }
        next.g[i] = g;
        next.theta[i] = unwrap_near(pair.h1[i].atan2(pair.h2[i]), previous.theta[i]);
        next.m[i] = closure.m_at(i, g)?;
    }
    next.time = time;
    Ok(next)
}

/// One conservative update with the default first-order scheme.
pub fn step(state: &KclState2, closure: &Closure, cfl: f64) -> Result<KclState2> {
    step_with(state, closure, cfl, Scheme::FirstOrder, f64::INFINITY)
}

/// One update with the given scheme, with the time step capped at `dt_cap`.
pub fn step_with(state: &KclState2, closure: &Closure, cfl: f64, scheme: Scheme, dt_cap: f64) -> Result<KclState2> {
    check_cfl(cfl)?;
    let bounds = state.speed_bounds(closure)?;
    let dt = stable_dt(state, &bounds, cfl)?.min(dt_cap);
    if !(dt > 0.0) {
        return Err(KclError::TimeStepUnderflow { time: state.time });
    }
    let h0 = to_conserved(state);
    let time = state.time + dt;
    match scheme {
        Scheme::FirstOrder => recover(&euler_stage(state, &h0, &bounds, dt, scheme), state, closure, time),
        Scheme::Muscl => {
            let h1 = euler_stage(state, &h0, &bounds, dt, scheme);
            let s1 = recover(&h1, state, closure, time)?;
            let b1 = s1.speed_bounds(closure)?;
            let h2 = euler_stage(&s1, &h1, &b1, dt, scheme);
            let avg = ConservedPair {
                h1: h0.h1.iter().zip(&h2.h1).map(|(a, b)| 0.5 * (a + b)).collect(),
                h2: h0.h2.iter().zip(&h2.h2).map(|(a, b)| 0.5 * (a + b)).collect(),
            };
            recover(&avg, state, closure, time)
        }
    }
}

/// Velocity `m (cos θ, sin θ)` of the ray through `ξ = xi_min`.
pub fn anchor_velocity(state: &KclState2) -> [f64; 2] {
    let n = state.len();
    let (m, th) = match state.boundary {
        Boundary2::Periodic => {
            let th_last = unwrap_near(state.theta[n - 1], state.theta[0]);
            (0.5 * (state.m[0] + state.m[n - 1]), 0.5 * (state.theta[0] + th_last))
        }
        Boundary2::Extrapolate => (state.m[0], state.theta[0]),
    };
    [m * th.cos(), m * th.sin()]
}

/// `(∫h1 dξ, ∫h2 dξ)` over `[xi_l, xi_r]` by the midpoint rule, with
/// partially covered cells weighted by their overlap.
pub fn conserved_integral(state: &KclState2, xi_l: f64, xi_r: f64) -> Result<(f64, f64)> {
    let tol = 1e-12 * state.xi_spacing;
    if !(xi_l < xi_r) {
        return Err(KclError::EmptyRange);
    }
    if xi_l < state.xi_min - tol || xi_r > state.xi_max() + tol {
        return Err(KclError::InvalidInput(format!("range [{xi_l}, {xi_r}] outside the grid")));
    }
    let h = to_conserved(state);
    let mut acc = (0.0, 0.0);
    for i in 0..state.len() {
        let a = state.xi_min + i as f64 * state.xi_spacing;
        let w = ((a + state.xi_spacing).min(xi_r) - a.max(xi_l)).max(0.0);
        acc.0 += w * h.h1[i];
        acc.1 += w * h.h2[i];
    }
    Ok(acc)
}

/// Driver settings for [`evolve`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub cfl: f64,
    pub snap_every: f64,
    pub scheme: Scheme,
    pub kink_threshold: f64,
    /// Minimum number of snapshots for a kink track to count as persistent.
    pub min_track_len: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { cfl: DEFAULT_CFL, snap_every: 0.1, scheme: Scheme::FirstOrder, kink_threshold: DEFAULT_KINK_THRESHOLD, min_track_len: 5 }
    }
}

/// A state together with the physical position of the `ξ = xi_min` ray.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot2 {
    pub state: KclState2,
    pub anchor: [f64; 2],
}

impl Snapshot2 {
    pub fn front(&self) -> crate::ray_tracer::Front2 {
        reconstruct_front(&self.state, self.anchor)
    }
}

#[derive(Clone, Debug)]
pub struct Evolution2 {
    pub snapshots: Vec<Snapshot2>,
    pub kinks: Vec<KinkRecord>,
    pub tracks: Vec<KinkTrack>,
    pub steps: usize,
}

impl Evolution2 {
    pub fn last(&self) -> &Snapshot2 {
        self.snapshots.last().unwrap()
    }

    pub fn persistent_tracks(&self, min_len: usize) -> Vec<&KinkTrack> {
        self.tracks.iter().filter(|t| t.points.len() >= min_len).collect()
    }
}

/// Steps `state0` to `t_end`, taking snapshots every `snap_every` (and at
/// `t_end`), integrating the anchor ray alongside and detecting kinks in
/// each snapshot.
pub fn evolve(state0: &KclState2, anchor0: [f64; 2], closure: &Closure, t_end: f64, opts: &EvolveOptions) -> Result<Evolution2> {
    check_cfl(opts.cfl)?;
    if !(t_end > state0.time) {
        return Err(KclError::InvalidInput(format!("t_end = {t_end} must exceed the start time {}", state0.time)));
    }
    if !(opts.snap_every > 0.0) {
        return Err(KclError::InvalidInput("snap_every must be positive".into()));
    }
    let mut state = state0.clone();
    let mut anchor = anchor0;
    let mut snapshots = vec![Snapshot2 { state: state.clone(), anchor }];
    let mut steps = 0;
    let mut k = 1usize;
    loop {
        let target = (state0.time + k as f64 * opts.snap_every).min(t_end);
        while state.time < target {
            let next = step_with(&state, closure, opts.cfl, opts.scheme, target - state.time)?;
            let dt = next.time - state.time;
            let v0 = anchor_velocity(&state);
            let v = match opts.scheme {
                Scheme::FirstOrder => v0,
                Scheme::Muscl => {
                    let v1 = anchor_velocity(&next);
                    [0.5 * (v0[0] + v1[0]), 0.5 * (v0[1] + v1[1])]
                }
            };
            anchor = [anchor[0] + dt * v[0], anchor[1] + dt * v[1]];
            state = next;
            // land exactly on the snapshot time
            if (target - state.time).abs() <= 1e-12 * target.abs().max(1.0) {
                state.time = target;
            }
            steps += 1;
        }
        snapshots.push(Snapshot2 { state: state.clone(), anchor });
        if target >= t_end {
            break;
        }
        k += 1;
    }
    let mut kinks: Vec<KinkRecord> = snapshots.iter().flat_map(|s| detect_kinks(&s.state, opts.kink_threshold)).collect();
    let tracks = track_kinks(&mut kinks, state0, opts.snap_every);
    Ok(Evolution2 { snapshots, kinks, tracks, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closure::ClosureKind;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn uniform(n: usize, m: f64, theta: f64, g: f64, boundary: Boundary2) -> KclState2 {
        KclState2::new(0.0, 1.0 / n as f64, vec![m; n], vec![theta; n], vec![g; n], boundary).unwrap()
    }

    #[test]
    fn conserved_examples() {
        let s = uniform(4, 1.0, 0.0, 1.0, Boundary2::Periodic);
        let c = to_conserved(&s);
        assert_eq!((c.h1[0], c.h2[0]), (0.0, 1.0));
        let s = uniform(4, 1.0, FRAC_PI_2, 2.0, Boundary2::Periodic);
        let c = to_conserved(&s);
        assert_eq!(c.h1[0], 2.0);
        assert!(c.h2[0].abs() < 1e-15);
    }

    #[test]
    fn from_conserved_examples() {
        let t = uniform(3, 1.0, 0.0, 1.0, Boundary2::Periodic);
        let pair = ConservedPair { h1: vec![0.0, 1.0, -1.0], h2: vec![1.0, 0.0, -1.0] };
        // spatial unwrapping carries the third angle past π
        let s = from_conserved(&pair, &[1.0; 3], &t).unwrap();
        assert_eq!((s.theta[0], s.g[0]), (0.0, 1.0));
        assert_eq!((s.theta[1], s.g[1]), (FRAC_PI_2, 1.0));
        assert!((s.g[2] - 2f64.sqrt()).abs() < 1e-15);
        let single = ConservedPair { h1: vec![-1.0; 3], h2: vec![-1.0; 3] };
        let s = from_conserved(&single, &[1.0; 3], &t).unwrap();
        assert!((s.theta[0] + 3.0 * FRAC_PI_4).abs() < 1e-15);
        let zero = ConservedPair { h1: vec![0.0, 1.0, 1.0], h2: vec![0.0, 1.0, 1.0] };
        assert_eq!(from_conserved(&zero, &[1.0; 3], &t), Err(KclError::MetricCollapse { cell: 0 }));
    }

    #[test]
    fn conserved_round_trip() {
        let n = 50;
        let theta: Vec<f64> = (0..n).map(|i| -2.0 + 0.09 * i as f64).collect();
        let g: Vec<f64> = (0..n).map(|i| 0.5 + (i as f64 * 0.3).sin().abs()).collect();
        let s = KclState2::new(0.0, 0.1, vec![1.3; n], theta, g, Boundary2::Extrapolate).unwrap();
        let back = from_conserved(&to_conserved(&s), &s.m, &s).unwrap();
        for i in 0..n {
            assert!((back.theta[i] - s.theta[i]).abs() < 1e-14);
            assert!((back.g[i] - s.g[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn flux_examples() {
        let s = KclState2::new(0.0, 0.1, vec![1.0, 2.0, 1.2], vec![0.0, FRAC_PI_2, FRAC_PI_4], vec![1.0; 3], Boundary2::Periodic).unwrap();
        let (f1, f2) = kcl_flux(&s);
        assert_eq!((f1[0], f2[0]), (1.0, 0.0));
        assert!(f1[1].abs() < 1e-15 && f2[1] == -2.0);
        assert!((f1[2] - 0.848_528_137_423_857).abs() < 1e-14);
        assert!((f2[2] + 0.848_528_137_423_857).abs() < 1e-14);
    }

    #[test]
    fn state_validation() {
        assert!(KclState2::new(0.0, 0.1, vec![1.0; 3], vec![0.0; 3], vec![1.0, 0.0, 1.0], Boundary2::Periodic).is_err());
        assert!(KclState2::new(0.0, 0.1, vec![1.0, -1.0, 1.0], vec![0.0; 3], vec![1.0; 3], Boundary2::Periodic).is_err());
        assert!(KclState2::new(0.0, 0.1, vec![1.0; 3], vec![0.0, 3.5, 0.0], vec![1.0; 3], Boundary2::Periodic).is_err());
        assert!(KclState2::new(0.0, 0.1, vec![1.0; 2], vec![0.0; 2], vec![1.0; 2], Boundary2::Periodic).is_err());
    }

    #[test]
    fn uniform_state_is_fixed_point() {
        for boundary in [Boundary2::Periodic, Boundary2::Extrapolate] {
            for kind in [ClosureKind::ConstantM, ClosureKind::Wnlrt] {
                let s = uniform(32, 1.2, 0.4, 1.5, boundary);
                let c = Closure::init(kind, &s.g, &s.m).unwrap();
                for scheme in [Scheme::FirstOrder, Scheme::Muscl] {
                    let mut t = s.clone();
                    for _ in 0..20 {
                        t = step_with(&t, &c, 0.45, scheme, f64::INFINITY).unwrap();
                    }
                    for i in 0..32 {
                        assert!((t.theta[i] - 0.4).abs() < 1e-14);
                        assert!((t.g[i] - 1.5).abs() < 1e-14);
                        assert!((t.m[i] - 1.2).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn step_rejects_bad_cfl() {
        let s = uniform(8, 1.0, 0.0, 1.0, Boundary2::Periodic);
        let c = Closure::ConstantM { m0: 1.0 };
        assert!(step(&s, &c, 1.5).is_err());
    }

    #[test]
    fn speed_bound_constant_closure() {
        let s = uniform(4, 2.0, 0.1, 4.0, Boundary2::Periodic);
        let c = Closure::ConstantM { m0: 2.0 };
        assert_eq!(s.speed_bounds(&c).unwrap(), vec![0.25; 4]);
        let dt = stable_dt(&s, &[0.25; 4], 0.45).unwrap();
        assert!((dt - 0.45 * 0.25 / (1.2 * 0.25)).abs() < 1e-15);
    }

    #[test]
    fn conserved_integral_examples() {
        let s = KclState2::new(0.0, 0.25, vec![1.0; 4], vec![0.0; 4], vec![1.0; 4], Boundary2::Extrapolate).unwrap();
        assert_eq!(conserved_integral(&s, 0.0, 1.0).unwrap(), (0.0, 1.0));
        let (_, b) = conserved_integral(&s, 0.1, 0.6).unwrap();
        assert!((b - 0.5).abs() < 1e-15);
        assert_eq!(conserved_integral(&s, 0.5, 0.5), Err(KclError::EmptyRange));
        assert!(conserved_integral(&s, -1.0, 0.5).is_err());
    }

    #[test]
    fn anchor_velocity_periodic_wrap() {
        let n = 16;
        let d = 2.0 * PI / n as f64;
        let theta: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * d).collect();
        let s = KclState2::new(0.0, d, vec![1.0; n], theta, vec![1.0; n], Boundary2::Periodic).unwrap();
        let v = anchor_velocity(&s);
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15);
    }

    #[test]
    fn evolve_snapshot_times() {
        let s = uniform(16, 1.0, 0.0, 1.0, Boundary2::Periodic);
        let c = Closure::ConstantM { m0: 1.0 };
        let opts = EvolveOptions { snap_every: 0.25, ..Default::default() };
        let e = evolve(&s, [0.0, 0.0], &c, 1.0, &opts).unwrap();
        let times: Vec<f64> = e.snapshots.iter().map(|s| s.state.time).collect();
        assert_eq!(times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!((e.last().anchor[0] - 1.0).abs() < 1e-14);
        assert!(e.kinks.is_empty());
        assert!(evolve(&s, [0.0, 0.0], &c, 0.0, &opts).is_err());
    }

    #[test]
    fn focusing_circle_stops() {
        // clockwise in ξ with inward normals, so the front focuses at t = 1
        let n = 64;
        let d = 2.0 * PI / n as f64;
        let theta: Vec<f64> = (0..n).map(|i| PI - (i as f64 + 0.5) * d).collect();
        let s = KclState2::new(0.0, d, vec![1.0; n], theta, vec![1.0; n], Boundary2::Periodic).unwrap();
        let e = evolve(&s, [1.0, 0.0], &Closure::ConstantM { m0: 1.0 }, 2.0, &EvolveOptions::default());
        assert!(matches!(e, Err(KclError::TimeStepUnderflow { .. } | KclError::MetricCollapse { .. })), "{e:?}");
    }
}
