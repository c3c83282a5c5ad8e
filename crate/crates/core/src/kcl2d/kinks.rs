//! Kink detection, tracking and jump conditions.
//!
//! A kink is flagged at interface `j` (between cells `j` and `j+1`) when
//! `|θ_{j+2} − θ_{j−1}|` exceeds the threshold and is a local maximum over
//! the interfaces `j−2..=j+2`. The kink position is refined within the
//! cell by a parabola through the detector values. Plateau states are read
//! three cells either side of the interface. Jumps are `left − right`.

use super::{Boundary2, KclState2};
use crate::error::{KclError, Result};
use crate::numerics::{least_squares_line, unwrap_near};

pub const DEFAULT_KINK_THRESHOLD: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlateauState {
    pub m: f64,
    pub theta: f64,
    pub g: f64,
}

impl PlateauState {
    pub fn new(m: f64, theta: f64, g: f64) -> Self {
        Self { m, theta, g }
    }

    fn density(&self) -> [f64; 2] {
        [self.g * self.theta.sin(), self.g * self.theta.cos()]
    }

    fn flux(&self) -> [f64; 2] {
        [self.m * self.theta.cos(), -self.m * self.theta.sin()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KinkRecord {
    pub time: f64,
    pub xi: f64,
    pub interface: usize,
    pub left: PlateauState,
    pub right: PlateauState,
    pub theta_jump: f64,
    pub m_jump: f64,
    pub g_jump: f64,
    /// `dξ/dt` of the track containing this record, zero until tracked.
    pub speed_k: f64,
    pub track: Option<usize>,
}

/// A kink followed across consecutive snapshots. `points` holds
/// `(time, ξ)` with `ξ` unwrapped across a periodic boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct KinkTrack {
    pub points: Vec<(f64, f64)>,
    pub records: Vec<usize>,
    pub speed: f64,
}

impl KinkTrack {
    pub fn first_time(&self) -> f64 {
        self.points[0].0
    }

    pub fn last_time(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }
}

fn cell_index(state: &KclState2, k: isize) -> usize {
    let n = state.len() as isize;
    match state.boundary {
        Boundary2::Periodic => k.rem_euclid(n) as usize,
        Boundary2::Extrapolate => k.clamp(0, n - 1) as usize,
    }
}

/// `θ` at cells `j+lo ..= j+hi`, unwrapped outward from cell `j`.
fn theta_window(state: &KclState2, j: isize, lo: isize, hi: isize) -> Vec<f64> {
    let at = |k: isize| state.theta[cell_index(state, j + k)];
    let mut out = vec![0.0; (hi - lo + 1) as usize];
    let base = (-lo) as usize;
    out[base] = at(0);
    for k in 1..=hi {
        out[base + k as usize] = unwrap_near(at(k), out[base + k as usize - 1]);
    }
    for k in (lo..0).rev() {
        out[(k - lo) as usize] = unwrap_near(at(k), out[(k - lo) as usize + 1]);
    }
    out
}

fn interfaces(state: &KclState2) -> std::ops::Range<usize> {
    match state.boundary {
        Boundary2::Periodic => 0..state.len(),
        Boundary2::Extrapolate => 0..state.len() - 1,
    }
}

/// Detector `(|θ_{j+2} − θ_{j−1}|, |θ_{j+1} − θ_j|)`; the second entry
/// breaks ties on sharp steps.
fn detector(state: &KclState2, j: usize) -> (f64, f64) {
    let w = theta_window(state, j as isize, -1, 2);
    ((w[3] - w[0]).abs(), (w[2] - w[1]).abs())
}

/// Detector ordering; spans equal to rounding fall back to the single
/// jump.
fn exceeds(a: (f64, f64), b: (f64, f64)) -> bool {
    if (a.0 - b.0).abs() > 1e-9 * a.0.max(b.0) {
        a.0 > b.0
    } else {
        a.1 > b.1
    }
}

/// Left and right plateau states for interface `j`.
pub fn plateau_states(state: &KclState2, interface: usize) -> (PlateauState, PlateauState) {
    let j = interface as isize;
    let w = theta_window(state, j, -2, 3);
    let (l, r) = (cell_index(state, j - 2), cell_index(state, j + 3));
    (PlateauState::new(state.m[l], w[0], state.g[l]), PlateauState::new(state.m[r], w[5], state.g[r]))
}

/// `(m, θ, g)` at `xi`, linear between cell centers. `θ` is unwrapped
/// near `theta_near`.
pub fn sample_state(state: &KclState2, xi: f64, theta_near: f64) -> PlateauState {
    let s = (xi - state.xi_min) / state.xi_spacing - 0.5;
    let k = s.floor();
    let w = s - k;
    let (a, b) = (cell_index(state, k as isize), cell_index(state, k as isize + 1));
    let w = if state.boundary == Boundary2::Extrapolate && a == b { 0.0 } else { w };
    let ta = unwrap_near(state.theta[a], theta_near);
    let tb = unwrap_near(state.theta[b], ta);
    let lerp = |x: f64, y: f64| x + w * (y - x);
    PlateauState::new(lerp(state.m[a], state.m[b]), lerp(ta, tb), lerp(state.g[a], state.g[b]))
}

/// Plateau states sampled `offset` either side of `xi`, for kinks whose
/// smeared profile is wider than the default three-cell stencil.
pub fn plateau_states_at(state: &KclState2, xi: f64, offset: f64) -> (PlateauState, PlateauState) {
    let near = sample_state(state, xi, 0.0).theta;
    (sample_state(state, xi - offset, near), sample_state(state, xi + offset, near))
}

/// Vertex offset, in cells, of the parabola through three detector values.
fn parabola_offset(before: f64, at: f64, after: f64) -> f64 {
    let curvature = before - 2.0 * at + after;
    if curvature < 0.0 {
        (0.5 * (before - after) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

/// Kinks in a single state; `speed_k` is left at zero.
pub fn detect_kinks(state: &KclState2, threshold: f64) -> Vec<KinkRecord> {
    let range = interfaces(state);
    let keys: Vec<(f64, f64)> = range.clone().map(|j| detector(state, j)).collect();
    let count = keys.len() as isize;
    let periodic = state.boundary == Boundary2::Periodic;
    let neighbour = |j: isize, d: isize| -> Option<(f64, f64)> {
        let k = j + d;
        if periodic {
            Some(keys[k.rem_euclid(count) as usize])
        } else if (0..count).contains(&k) {
            Some(keys[k as usize])
        } else {
            None
        }
    };
    let mut out = Vec::new();
    for j in range {
        let key = keys[j];
        if !(key.0 > threshold) {
            continue;
        }
        let ji = j as isize;
        let is_max = (1..=2).all(|d| {
            let before = neighbour(ji, -d).is_none_or(|k| exceeds(key, k));
            let after = neighbour(ji, d).is_none_or(|k| !exceeds(k, key));
            before && after
        });
        if !is_max {
            continue;
        }
        let (left, right) = plateau_states(state, j);
        let offset = match (neighbour(ji, -1), neighbour(ji, 1)) {
            (Some(b), Some(a)) => parabola_offset(b.0, key.0, a.0),
            _ => 0.0,
        };
        out.push(KinkRecord {
            time: state.time,
            xi: state.xi_min + (j as f64 + 1.0 + offset) * state.xi_spacing,
            interface: j,
            left,
            right,
            theta_jump: left.theta - right.theta,
            m_jump: left.m - right.m,
            g_jump: left.g - right.g,
            speed_k: 0.0,
            track: None,
        });
    }
    out
}

/// Kink speed `K = [H]·[F] / |[H]|²` and the residual `|K [H] − [F]|`.
pub fn kink_speed(left: PlateauState, right: PlateauState) -> Result<(f64, f64)> {
    let (hl, hr, fl, fr) = (left.density(), right.density(), left.flux(), right.flux());
    let dh = [hl[0] - hr[0], hl[1] - hr[1]];
    let df = [fl[0] - fr[0], fl[1] - fr[1]];
    let norm2 = dh[0] * dh[0] + dh[1] * dh[1];
    let scale = hl[0].hypot(hl[1]).max(hr[0].hypot(hr[1]));
    if norm2.sqrt() <= 1e-14 * scale {
        return Err(KclError::NoKink);
    }
    let k = (dh[0] * df[0] + dh[1] * df[1]) / norm2;
    Ok((k, jump_residual(left, right, k)))
}

/// `|K [H] − [F]|` for a given kink speed `K`.
pub fn jump_residual(left: PlateauState, right: PlateauState, k: f64) -> f64 {
    let (hl, hr, fl, fr) = (left.density(), right.density(), left.flux(), right.flux());
    (k * (hl[0] - hr[0]) - (fl[0] - fr[0])).hypot(k * (hl[1] - hr[1]) - (fl[1] - fr[1]))
}

/// Links records from consecutive snapshots into tracks by greedy
/// nearest matching, then stores each track's least-squares speed in its
/// records. `grid` supplies the domain and boundary.
pub fn track_kinks(records: &mut [KinkRecord], grid: &KclState2, snap_every: f64) -> Vec<KinkTrack> {
    let length = grid.xi_max() - grid.xi_min;
    let periodic = grid.boundary == Boundary2::Periodic;
    let diff = |a: f64, b: f64| {
        let d = b - a;
        if periodic {
            d - length * (d / length).round()
        } else {
            d
        }
    };
    let gate = 8.0 * grid.xi_spacing + snap_every;
    let mut tracks: Vec<KinkTrack> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let time = records[start].time;
        let end = start + records[start..].iter().take_while(|r| r.time == time).count();
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for &t in &open {
            let (_, last_xi) = *tracks[t].points.last().unwrap();
            for (ri, r) in records.iter().enumerate().take(end).skip(start) {
                let d = diff(last_xi, r.xi).abs();
                if d <= gate {
                    pairs.push((d, t, ri));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut used_track = vec![false; tracks.len()];
        let mut used_rec = vec![false; end - start];
        let mut next_open = Vec::new();
        for (_, t, ri) in pairs {
            if used_track[t] || used_rec[ri - start] {
                continue;
            }
            used_track[t] = true;
            used_rec[ri - start] = true;
            let (_, last_xi) = *tracks[t].points.last().unwrap();
            tracks[t].points.push((time, last_xi + diff(last_xi, records[ri].xi)));
            tracks[t].records.push(ri);
            next_open.push(t);
        }
        for ri in start..end {
            if !used_rec[ri - start] {
                next_open.push(tracks.len());
                tracks.push(KinkTrack { points: vec![(time, records[ri].xi)], records: vec![ri], speed: 0.0 });
            }
        }
        open = next_open;
        start = end;
    }
    for (ti, track) in tracks.iter_mut().enumerate() {
        let (ts, xs): (Vec<f64>, Vec<f64>) = track.points.iter().cloned().unzip();
        track.speed = least_squares_line(&ts, &xs).map_or(0.0, |(s, _)| s);
        for &ri in &track.records {
            records[ri].speed_k = track.speed;
            records[ri].track = Some(ti);
        }
    }
    tracks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_state(n: usize, jump_at: usize, th_l: f64, th_r: f64) -> KclState2 {
        let theta = (0..n).map(|i| if i <= jump_at { th_l } else { th_r }).collect();
        KclState2::new(-1.0, 2.0 / n as f64, vec![1.0; n], theta, vec![1.0; n], Boundary2::Extrapolate).unwrap()
    }

    #[test]
    fn symmetric_kink_speed() {
        let (k, res) = kink_speed(PlateauState::new(1.0, 0.3, 1.0), PlateauState::new(1.0, -0.3, 1.0)).unwrap();
        assert!(k.abs() < 1e-15);
        // these states satisfy only one of the two jump conditions
        assert!((res - 2.0 * 0.3f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn no_kink_for_equal_states() {
        let s = PlateauState::new(1.1, 0.2, 1.3);
        assert_eq!(kink_speed(s, s), Err(KclError::NoKink));
    }

    #[test]
    fn sharp_step_detected_at_interface() {
        let s = step_state(40, 19, 0.6, -0.6);
        let k = detect_kinks(&s, DEFAULT_KINK_THRESHOLD);
        assert_eq!(k.len(), 1);
        assert_eq!(k[0].interface, 19);
        assert!((k[0].xi - 0.0).abs() < 1e-14);
        assert!((k[0].theta_jump - 1.2).abs() < 1e-15);
    }

    #[test]
    fn parabola_vertex() {
        assert_eq!(parabola_offset(1.0, 2.0, 1.0), 0.0);
        // y = −(x − 0.25)² through x = −1, 0, 1
        let f = |x: f64| -(x - 0.25) * (x - 0.25);
        assert!((parabola_offset(f(-1.0), f(0.0), f(1.0)) - 0.25).abs() < 1e-15);
        assert_eq!(parabola_offset(1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn sampling_interpolates_and_unwraps() {
        let n = 10;
        let theta = (0..n).map(|i| if i < 5 { 3.0 } else { 3.2 }).collect();
        let g = (0..n).map(|i| 1.0 + i as f64).collect();
        let s = KclState2::new(0.0, 1.0, vec![1.0; n], theta, g, Boundary2::Periodic).unwrap();
        let p = sample_state(&s, 2.0, 0.0);
        assert!((p.g - 2.5).abs() < 1e-15 && p.theta == 3.0);
        let q = sample_state(&s, 5.0, -3.0);
        assert!((q.theta - (3.1 - 2.0 * std::f64::consts::PI)).abs() < 1e-14);
        // wraps past the last center
        assert!((sample_state(&s, 9.75, 0.0).g - (10.0 - 0.25 * 9.0)).abs() < 1e-14);
    }

    #[test]
    fn smooth_state_has_no_kinks() {
        let n = 256;
        let theta = (0..n).map(|i| 0.3 * (std::f64::consts::TAU * (i as f64 + 0.5) / n as f64).sin()).collect();
        let s = KclState2::new(0.0, 1.0 / n as f64, vec![1.0; n], theta, vec![1.0; n], Boundary2::Periodic).unwrap();
        assert!(detect_kinks(&s, DEFAULT_KINK_THRESHOLD).is_empty());
    }

    #[test]
    fn tracking_links_moving_kink() {
        let grid = step_state(100, 49, 0.5, -0.5);
        let mut recs = Vec::new();
        for k in 0..6 {
            let mut s = step_state(100, 40 + 2 * k, 0.5, -0.5);
            s.time = 0.1 * k as f64;
            recs.extend(detect_kinks(&s, DEFAULT_KINK_THRESHOLD));
        }
        let tracks = track_kinks(&mut recs, &grid, 0.1);
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].points.len(), 6);
        // two cells of 0.02 per 0.1 time units
        assert!((tracks[0].speed - 0.4).abs() < 1e-10);
        assert!(recs.iter().all(|r| (r.speed_k - 0.4).abs() < 1e-10));
    }
}
