//! 3-D kinematical conservation laws for smooth fronts.
//!
//! The state holds `U = g₁u` and `V = g₂v` per cell of a `(ξ₁, ξ₂)`
//! lattice. With `n = U×V / |U×V|` the laws read
//!
//! ```text
//! U_t − (m n)_{ξ₁} = 0,    V_t − (m n)_{ξ₂} = 0,
//! ```
//!
//! and `V_{ξ₁} − U_{ξ₂} = 0` holds for all time if it holds initially.
//! Fluxes are local Lax–Friedrichs per direction. The dissipation and the
//! time step use the numerical radius of a finite-difference flux
//! Jacobian (largest eigenvalue magnitude of its symmetric part), which
//! stays positive where the Jacobian itself is nilpotent.
//!
//! The solver covers the smooth regime only: [`evolve3`] stops with
//! [`KclError::SmoothnessLost`] once normals three cells apart differ by
//! more than [`SMOOTHNESS_LIMIT`].

use nalgebra::{Matrix3, Vector3};

use crate::closure::Closure;
use crate::error::{KclError, Result};
use crate::numerics::rk4_step;

pub type Vec3 = Vector3<f64>;

pub const SPEED_SAFETY: f64 = 1.2;
pub const SMOOTHNESS_LIMIT: f64 = 0.5;
const FRAME_TOL: f64 = 1e-10;

/// Boundary treatment in one lattice direction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Boundary3 {
    #[default]
    Periodic,
    /// Linear extrapolation into one ghost layer.
    LinearExtrapolate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid3 {
    pub n: [usize; 2],
    pub xi_min: [f64; 2],
    pub spacing: [f64; 2],
    pub boundary: [Boundary3; 2],
}

impl Grid3 {
    pub fn periodic(n1: usize, n2: usize, xi_min: [f64; 2], xi_max: [f64; 2]) -> Result<Self> {
        Self::new([n1, n2], xi_min, xi_max, [Boundary3::Periodic; 2])
    }

    pub fn new(n: [usize; 2], xi_min: [f64; 2], xi_max: [f64; 2], boundary: [Boundary3; 2]) -> Result<Self> {
        if n[0] < 4 || n[1] < 4 {
            return Err(KclError::InvalidInput("3-D grid needs at least 4 cells per direction".into()));
        }
        if !(xi_max[0] > xi_min[0] && xi_max[1] > xi_min[1]) {
            return Err(KclError::InvalidInput("3-D grid needs xi_max > xi_min".into()));
        }
        let spacing = [(xi_max[0] - xi_min[0]) / n[0] as f64, (xi_max[1] - xi_min[1]) / n[1] as f64];
        Ok(Self { n, xi_min, spacing, boundary })
    }

    pub fn cells(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n[0] + i
    }

    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [self.xi_min[0] + (i as f64 + 0.5) * self.spacing[0], self.xi_min[1] + (j as f64 + 0.5) * self.spacing[1]]
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing[0] * self.spacing[1]
    }

    /// Flat indices of line `line` along direction `dir`.
    fn line(&self, dir: usize, line: usize) -> Vec<usize> {
        match dir {
            0 => (0..self.n[0]).map(|i| self.index(i, line)).collect(),
            _ => (0..self.n[1]).map(|j| self.index(line, j)).collect(),
        }
    }

    fn lines(&self, dir: usize) -> usize {
        self.n[1 - dir]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KclState3 {
    pub grid: Grid3,
    pub u: Vec<Vec3>,
    pub v: Vec<Vec3>,
    pub m: Vec<f64>,
    pub time: f64,
}

/// `u × v / |u × v|`; fails for parallel inputs.
pub fn normal3(u: &Vec3, v: &Vec3) -> Result<Vec3> {
    cell_normal(u, v, 0)
}

fn cell_normal(u: &Vec3, v: &Vec3, cell: usize) -> Result<Vec3> {
    let c = u.cross(v);
    let norm = c.norm();
    if !(norm > FRAME_TOL * u.norm() * v.norm()) {
        return Err(KclError::DegenerateFrame { cell });
    }
    Ok(c / norm)
}

impl KclState3 {
    pub fn new(grid: Grid3, u: Vec<Vec3>, v: Vec<Vec3>, m: Vec<f64>) -> Result<Self> {
        let n = grid.cells();
        if u.len() != n || v.len() != n || m.len() != n {
            return Err(KclError::InvalidInput("U, V and m must have one entry per cell".into()));
        }
        if m.iter().any(|&x| !(x > 0.0)) {
            return Err(KclError::InvalidInput("m must be positive in every cell".into()));
        }
        let s = Self { grid, u, v, m, time: 0.0 };
        s.normals()?;
        Ok(s)
    }

    /// Unit normals, validating both metrics and the frame.
    pub fn normals(&self) -> Result<Vec<Vec3>> {
        (0..self.u.len())
            .map(|k| {
                if !(self.u[k].norm() > 0.0 && self.v[k].norm() > 0.0) {
                    return Err(KclError::MetricCollapse { cell: k });
                }
                cell_normal(&self.u[k], &self.v[k], k)
            })
            .collect()
    }

    /// Ray-tube area `|U × V|` per cell.
    pub fn areas(&self) -> Vec<f64> {
        self.u.iter().zip(&self.v).map(|(a, b)| a.cross(b).norm()).collect()
    }

    pub fn sum_u(&self) -> Vec3 {
        self.u.iter().sum()
    }

    pub fn sum_v(&self) -> Vec3 {
        self.v.iter().sum()
    }
}

/// Flux `−m n` of direction `dir` with the other tangent held fixed.
fn flux_of(closure: &Closure, cell: usize, q: &Vec3, other: &Vec3, dir: usize) -> Result<Vec3> {
    let (u, v) = if dir == 0 { (q, other) } else { (other, q) };
    let c = u.cross(v);
    let area = c.norm();
    if !(area > FRAME_TOL * u.norm() * v.norm()) {
        return Err(KclError::DegenerateFrame { cell });
    }
    Ok(-closure.m_at(cell, area)? * c / area)
}

/// Numerical radius of `∂(−m n)/∂q` in direction `dir`.
fn numerical_radius(closure: &Closure, cell: usize, q: &Vec3, other: &Vec3, dir: usize) -> Result<f64> {
    let h = 1e-7 * q.norm();
    let mut jac = Matrix3::zeros();
    for c in 0..3 {
        let mut e = Vec3::zeros();
        e[c] = h;
        let col = (flux_of(closure, cell, &(q + e), other, dir)? - flux_of(closure, cell, &(q - e), other, dir)?) / (2.0 * h);
        jac.set_column(c, &col);
    }
    let sym = 0.5 * (jac + jac.transpose());
    Ok(sym.symmetric_eigenvalues().iter().fold(0.0f64, |a, x| a.max(x.abs())))
}

/// Values along a line padded with one ghost on each side.
fn pad_line<T>(vals: &[T], boundary: Boundary3, extrapolate: impl Fn(&T, &T) -> T) -> Vec<T>
where
    T: Clone,
{
    let n = vals.len();
    let (lo, hi) = match boundary {
        Boundary3::Periodic => (vals[n - 1].clone(), vals[0].clone()),
        Boundary3::LinearExtrapolate => (extrapolate(&vals[0], &vals[1]), extrapolate(&vals[n - 1], &vals[n - 2])),
    };
    let mut out = Vec::with_capacity(n + 2);
    out.push(lo);
    out.extend_from_slice(vals);
    out.push(hi);
    out
}

fn lin(a: &Vec3, b: &Vec3) -> Vec3 {
    2.0 * a - b
}

/// Per-direction speed bound of every cell.
fn speed_bounds(state: &KclState3, closure: &Closure) -> Result<[Vec<f64>; 2]> {
    let n = state.grid.cells();
    let mut out = [Vec::with_capacity(n), Vec::with_capacity(n)];
    for k in 0..n {
        out[0].push(numerical_radius(closure, k, &state.u[k], &state.v[k], 0)?);
        out[1].push(numerical_radius(closure, k, &state.v[k], &state.u[k], 1)?);
    }
    Ok(out)
}

/// Stable time step `cfl / Σ_d (λ_d / Δξ_d)` with `λ_d = 1.2 max` bound.
fn stable_dt(grid: &Grid3, bounds: &[Vec<f64>; 2], cfl: f64) -> Result<f64> {
    let rate: f64 = (0..2).map(|d| SPEED_SAFETY * bounds[d].iter().cloned().fold(0.0, f64::max) / grid.spacing[d]).sum();
    if !(rate > 0.0) {
        return Err(KclError::DegenerateSystem);
    }
    Ok(cfl / rate)
}

/// One conservative forward-Euler update.
pub fn step3(state: &KclState3, closure: &Closure, cfl: f64) -> Result<KclState3> {
    step3_capped(state, closure, cfl, f64::INFINITY)
}

pub fn step3_capped(state: &KclState3, closure: &Closure, cfl: f64, dt_cap: f64) -> Result<KclState3> {
    if !(cfl > 0.0 && cfl < 1.0) {
        return Err(KclError::InvalidInput(format!("cfl must lie in (0, 1), got {cfl}")));
    }
    let grid = &state.grid;
    let normals = state.normals()?;
    let bounds = speed_bounds(state, closure)?;
    let dt = stable_dt(grid, &bounds, cfl)?.min(dt_cap);
    if !(dt > 0.0) {
        return Err(KclError::TimeStepUnderflow { time: state.time });
    }
    let flux: Vec<Vec3> = normals.iter().zip(&state.m).map(|(n, m)| -m * n).collect();
    let mut next = state.clone();
    for dir in 0..2 {
        let (src, dst) = if dir == 0 { (&state.u, &mut next.u) } else { (&state.v, &mut next.v) };
        let r = dt / grid.spacing[dir];
        for line in 0..grid.lines(dir) {
            let idx = grid.line(dir, line);
            let q: Vec<Vec3> = idx.iter().map(|&k| src[k]).collect();
            let f: Vec<Vec3> = idx.iter().map(|&k| flux[k]).collect();
            let a: Vec<f64> = idx.iter().map(|&k| bounds[dir][k]).collect();
            let (q, f, a) = (pad_line(&q, grid.boundary[dir], lin), pad_line(&f, grid.boundary[dir], lin), pad_line(&a, grid.boundary[dir], |x, _| *x));
            // face p sits between padded cells p and p+1
            let faces: Vec<Vec3> = (0..idx.len() + 1).map(|p| 0.5 * (f[p] + f[p + 1]) - 0.5 * a[p].max(a[p + 1]) * (q[p + 1] - q[p])).collect();
            for (c, &k) in idx.iter().enumerate() {
                dst[k] = src[k] - r * (faces[c + 1] - faces[c]);
            }
        }
    }
    next.time = state.time + dt;
    let areas = next.areas();
    for k in 0..grid.cells() {
        if !(next.u[k].norm() > 0.0 && next.v[k].norm() > 0.0) || !next.u[k].iter().chain(next.v[k].iter()).all(|x| x.is_finite()) {
            return Err(KclError::MetricCollapse { cell: k });
        }
        next.m[k] = closure.m_at(k, areas[k])?;
    }
    next.normals()?;
    Ok(next)
}

/// Central-difference `V_{ξ₁} − U_{ξ₂}` per cell and its max norm.
/// Extrapolated boundaries fall back to one-sided differences.
pub fn solenoidal_residual(state: &KclState3) -> (Vec<Vec3>, f64) {
    let g = &state.grid;
    let deriv = |vals: &[Vec3], dir: usize, i: usize, j: usize| -> Vec3 {
        let (pos, n) = if dir == 0 { (i, g.n[0]) } else { (j, g.n[1]) };
        let at = |p: usize| if dir == 0 { vals[g.index(p, j)] } else { vals[g.index(i, p)] };
        let h = g.spacing[dir];
        match g.boundary[dir] {
            Boundary3::Periodic => (at((pos + 1) % n) - at((pos + n - 1) % n)) / (2.0 * h),
            Boundary3::LinearExtrapolate if pos == 0 => (at(1) - at(0)) / h,
            Boundary3::LinearExtrapolate if pos == n - 1 => (at(n - 1) - at(n - 2)) / h,
            Boundary3::LinearExtrapolate => (at(pos + 1) - at(pos - 1)) / (2.0 * h),
        }
    };
    let mut field = Vec::with_capacity(g.cells());
    for j in 0..g.n[1] {
        for i in 0..g.n[0] {
            field.push(deriv(&state.v, 0, i, j) - deriv(&state.u, 1, i, j));
        }
    }
    let max = field.iter().map(|r| r.norm()).fold(0.0, f64::max);
    (field, max)
}

/// Surface through the cell centers.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMesh {
    pub n: [usize; 2],
    /// Row-then-column positions, indexed like the grid.
    pub points: Vec<Vec3>,
    /// Largest distance between row-first and column-first integration.
    pub loop_defect: f64,
    /// `max` over nodes of `Σ |curl| ΔA` over the boxes the two paths enclose.
    pub defect_bound: f64,
}

/// Path-integrates `U` along the first row and then `V` up every column,
/// with the trapezoid rule between cell centers. The column-first path is
/// computed as well; the two differ by the box curl `V_{ξ₁} − U_{ξ₂}`
/// summed over the enclosed boxes.
pub fn reconstruct_surface(state: &KclState3, anchor: Vec3) -> SurfaceMesh {
    let g = &state.grid;
    let [n1, n2] = g.n;
    let [d1, d2] = g.spacing;
    let (u, v) = (&state.u, &state.v);
    let k = |i: usize, j: usize| g.index(i, j);
    let mut row_first = vec![Vec3::zeros(); g.cells()];
    let mut col_first = vec![Vec3::zeros(); g.cells()];
    row_first[0] = anchor;
    col_first[0] = anchor;
    for i in 1..n1 {
        row_first[k(i, 0)] = row_first[k(i - 1, 0)] + 0.5 * d1 * (u[k(i - 1, 0)] + u[k(i, 0)]);
    }
    for j in 1..n2 {
        col_first[k(0, j)] = col_first[k(0, j - 1)] + 0.5 * d2 * (v[k(0, j - 1)] + v[k(0, j)]);
    }
    for i in 0..n1 {
        for j in 1..n2 {
            row_first[k(i, j)] = row_first[k(i, j - 1)] + 0.5 * d2 * (v[k(i, j - 1)] + v[k(i, j)]);
        }
    }
    for j in 0..n2 {
        for i in 1..n1 {
            col_first[k(i, j)] = col_first[k(i - 1, j)] + 0.5 * d1 * (u[k(i - 1, j)] + u[k(i, j)]);
        }
    }
    // |box curl| ΔA, accumulated as a 2-D prefix sum
    let mut acc = vec![0.0; n1 * n2];
    for j in 1..n2 {
        for i in 1..n1 {
            let dv = 0.5 * (v[k(i, j - 1)] + v[k(i, j)]) - 0.5 * (v[k(i - 1, j - 1)] + v[k(i - 1, j)]);
            let du = 0.5 * (u[k(i - 1, j)] + u[k(i, j)]) - 0.5 * (u[k(i - 1, j - 1)] + u[k(i, j - 1)]);
            let curl = (dv / d1 - du / d2).norm();
            acc[k(i, j)] = curl * d1 * d2 + acc[k(i - 1, j)] + acc[k(i, j - 1)] - acc[k(i - 1, j - 1)];
        }
    }
    let loop_defect = row_first.iter().zip(&col_first).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let defect_bound = acc.iter().cloned().fold(0.0, f64::max);
    SurfaceMesh { n: g.n, points: row_first, loop_defect, defect_bound }
}

/// Speed field for 3-D rays.
pub trait SpeedField3: Sync {
    fn speed(&self, x: &Vec3) -> f64;
    fn gradient(&self, x: &Vec3) -> Vec3;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantSpeed3(pub f64);

impl SpeedField3 for ConstantSpeed3 {
    fn speed(&self, _: &Vec3) -> f64 {
        self.0
    }

    fn gradient(&self, _: &Vec3) -> Vec3 {
        Vec3::zeros()
    }
}

/// `m = m0 + a·x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearSpeed3 {
    pub m0: f64,
    pub a: Vec3,
}

impl SpeedField3 for LinearSpeed3 {
    fn speed(&self, x: &Vec3) -> f64 {
        self.m0 + self.a.dot(x)
    }

    fn gradient(&self, _: &Vec3) -> Vec3 {
        self.a
    }
}

/// RK4 step of `x' = m n`, `n' = −(∇m − n ⟨n, ∇m⟩)`; `n` is renormalized.
pub fn ray_step3(x: &Vec3, n: &Vec3, field: &dyn SpeedField3, dt: f64) -> (Vec3, Vec3) {
    let y = [x[0], x[1], x[2], n[0], n[1], n[2]];
    let out = rk4_step(&y, dt, |y| {
        let (p, d) = (Vec3::new(y[0], y[1], y[2]), Vec3::new(y[3], y[4], y[5]));
        let m = field.speed(&p);
        let grad = field.gradient(&p);
        let dn = -(grad - d * d.dot(&grad));
        [m * d[0], m * d[1], m * d[2], dn[0], dn[1], dn[2]]
    });
    (Vec3::new(out[0], out[1], out[2]), Vec3::new(out[3], out[4], out[5]).normalize())
}

/// Largest angle between normals three cells apart along either direction.
pub fn max_normal_turn(state: &KclState3) -> Result<f64> {
    let g = &state.grid;
    let normals = state.normals()?;
    let mut worst = 0.0f64;
    for j in 0..g.n[1] {
        for i in 0..g.n[0] {
            let here = normals[g.index(i, j)];
            let ahead = [(i + 3, j, 0), (i, j + 3, 1)];
            for (a, b, dir) in ahead {
                let (p, lim) = if dir == 0 { (a, g.n[0]) } else { (b, g.n[1]) };
                let p = match g.boundary[dir] {
                    Boundary3::Periodic => p % lim,
                    Boundary3::LinearExtrapolate if p >= lim => continue,
                    Boundary3::LinearExtrapolate => p,
                };
                let other = if dir == 0 { normals[g.index(p, j)] } else { normals[g.index(i, p)] };
                worst = worst.max(here.dot(&other).clamp(-1.0, 1.0).acos());
            }
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot3 {
    pub state: KclState3,
    /// Position of the ray through cell `(0, 0)`.
    pub anchor: Vec3,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct Evolution3 {
    pub snapshots: Vec<Snapshot3>,
    pub steps: usize,
}

/// Steps to `t_end` with snapshots every `snap_every`. The anchor ray is
/// moved with `m n` of cell `(0, 0)`.
pub fn evolve3(state0: &KclState3, anchor0: Vec3, closure: &Closure, t_end: f64, cfl: f64, snap_every: f64) -> Result<Evolution3> {
    if !(t_end > state0.time) || !(snap_every > 0.0) {
        return Err(KclError::InvalidInput("need t_end after the start time and positive snap_every".into()));
    }
    let mut state = state0.clone();
    let mut anchor = anchor0;
    let residual = |s: &KclState3| solenoidal_residual(s).1;
    let mut snapshots = vec![Snapshot3 { state: state.clone(), anchor, residual: residual(&state) }];
    let mut steps = 0;
    let mut k = 1usize;
    loop {
        let target = (state0.time + k as f64 * snap_every).min(t_end);
        while state.time < target {
            let n0 = state.normals()?[0];
            let next = step3_capped(&state, closure, cfl, target - state.time)?;
            anchor += (next.time - state.time) * state.m[0] * n0;
            state = next;
            if (target - state.time).abs() <= 1e-12 * target.abs().max(1.0) {
                state.time = target;
            }
            steps += 1;
            let turn = max_normal_turn(&state)?;
            if turn > SMOOTHNESS_LIMIT {
                return Err(KclError::SmoothnessLost { time: state.time, angle: turn });
            }
        }
        snapshots.push(Snapshot3 { state: state.clone(), anchor, residual: residual(&state) });
        if target >= t_end {
            break;
        }
        k += 1;
    }
    Ok(Evolution3 { snapshots, steps })
}
