//! Scalar conservation laws `H(u)_t + F(u)_x = 0` in one space dimension.
//!
//! The law is held as a pair of maps (density `H`, flux `F`) with their
//! derivatives. Shock speeds follow the jump relation `S [H] = [F]`, and
//! admissibility is the Lax condition `a(u_r) < S < a(u_l)` with
//! `a = F'/H'`. [`evolve_scalar`] advances cell averages of `u` with a
//! first-order monotone scheme: the exact Godunov flux when `F` is convex,
//! local Lax–Friedrichs otherwise.

use std::fmt;
use std::sync::Arc;

use crate::error::{KclError, Result};
use crate::numerics::least_squares_line;

/// A real map shared between threads.
pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Shape of the flux, which selects the numerical flux.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluxShape {
    /// `F` convex in `u`: exact Godunov flux.
    Convex,
    /// No structure assumed: local Lax–Friedrichs flux.
    General,
}

/// A scalar conservation law given by its density and flux maps.
#[derive(Clone)]
pub struct ScalarClaw {
    density: ScalarMap,
    flux: ScalarMap,
    density_deriv: ScalarMap,
    flux_deriv: ScalarMap,
    shape: FluxShape,
}

impl fmt::Debug for ScalarClaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarClaw").field("shape", &self.shape).finish_non_exhaustive()
    }
}

impl ScalarClaw {
    pub fn new<H, F, DH, DF>(density: H, flux: F, density_deriv: DH, flux_deriv: DF, shape: FluxShape) -> Self
    where
        H: Fn(f64) -> f64 + Send + Sync + 'static,
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        DH: Fn(f64) -> f64 + Send + Sync + 'static,
        DF: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            density: Arc::new(density),
            flux: Arc::new(flux),
            density_deriv: Arc::new(density_deriv),
            flux_deriv: Arc::new(flux_deriv),
            shape,
        }
    }

    /// Inviscid Burgers: `H = u`, `F = u²/2`.
    pub fn burgers() -> Self {
        Self::new(|u| u, |u| 0.5 * u * u, |_| 1.0, |u| u, FluxShape::Convex)
    }

    /// Linear advection with speed `c`: `H = u`, `F = c u`.
    pub fn linear_advection(c: f64) -> Self {
        Self::new(|u| u, move |u| c * u, |_| 1.0, move |_| c, FluxShape::Convex)
    }

    /// `H = u`, `F = u³/3`. Convex only for `u ≥ 0`, so it uses the general flux.
    pub fn cubic() -> Self {
        Self::new(|u| u, |u| u * u * u / 3.0, |_| 1.0, |u| u * u, FluxShape::General)
    }

    pub fn shape(&self) -> FluxShape {
        self.shape
    }

    pub fn density(&self, u: f64) -> f64 {
        (self.density)(u)
    }

    pub fn flux(&self, u: f64) -> f64 {
        (self.flux)(u)
    }

    pub fn density_deriv(&self, u: f64) -> f64 {
        (self.density_deriv)(u)
    }

    pub fn flux_deriv(&self, u: f64) -> f64 {
        (self.flux_deriv)(u)
    }

    /// Characteristic speed `a(u) = F'(u) / H'(u)`.
    pub fn char_speed(&self, u: f64) -> f64 {
        self.flux_deriv(u) / self.density_deriv(u)
    }

    /// Checks `H' ≠ 0` and that the derivative maps agree with central
    /// differences of `H` and `F` at the given points. The tolerance is
    /// relative above magnitude one and absolute below.
    pub fn check_derivatives(&self, samples: &[f64], rel_tol: f64) -> Result<()> {
        for &u in samples {
            let dh = self.density_deriv(u);
            if dh == 0.0 || !dh.is_finite() {
                return Err(KclError::InvalidInput(format!("H'({u}) must be nonzero")));
            }
            let step = 1e-5 * u.abs().max(1.0);
            let pairs = [
                ("H'", dh, (self.density(u + step) - self.density(u - step)) / (2.0 * step)),
                ("F'", self.flux_deriv(u), (self.flux(u + step) - self.flux(u - step)) / (2.0 * step)),
            ];
            for (name, exact, fd) in pairs {
                let scale = exact.abs().max(fd.abs()).max(1.0);
                if (exact - fd).abs() > rel_tol * scale {
                    return Err(KclError::InvalidInput(format!(
                        "{name}({u}) = {exact} disagrees with finite difference {fd}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary1 {
    Periodic,
    /// Zero-order extrapolation.
    Outflow,
}

/// Uniform cell-centred grid on `[x_min, x_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1 {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
    pub boundary: Boundary1,
}

impl Grid1 {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize, boundary: Boundary1) -> Result<Self> {
        if !(x_min < x_max) {
            return Err(KclError::InvalidInput(format!("grid needs x_min < x_max, got [{x_min}, {x_max}]")));
        }
        if n_cells < 2 {
            return Err(KclError::InvalidInput("grid needs at least 2 cells".into()));
        }
        Ok(Self { x_min, x_max, n_cells, boundary })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }
}

/// Jump speed `S = [F] / [H]` of a discontinuity between `u_l` and `u_r`.
pub fn rh_speed(claw: &ScalarClaw, u_l: f64, u_r: f64) -> Result<f64> {
    let jump_h = claw.density(u_l) - claw.density(u_r);
    if jump_h == 0.0 {
        return Err(KclError::NoJump);
    }
    Ok((claw.flux(u_l) - claw.flux(u_r)) / jump_h)
}

/// Lax entropy condition `a(u_r) < S < a(u_l)`, strict on both sides.
///
/// Only meaningful when `a` is increasing between the two states; the
/// caller is responsible for that.
pub fn lax_admissible(claw: &ScalarClaw, u_l: f64, u_r: f64, speed: f64) -> bool {
    claw.char_speed(u_r) < speed && speed < claw.char_speed(u_l)
}

/// Godunov flux for a convex `F`, taking the min/max of `F` over the
/// states between `u_l` and `u_r`.
pub fn godunov_flux(claw: &ScalarClaw, u_l: f64, u_r: f64) -> f64 {
    let (lo, hi) = if u_l <= u_r { (u_l, u_r) } else { (u_r, u_l) };
    if claw.density(u_l) <= claw.density(u_r) {
        min_convex(claw, lo, hi)
    } else {
        claw.flux(lo).max(claw.flux(hi))
    }
}

fn min_convex(claw: &ScalarClaw, lo: f64, hi: f64) -> f64 {
    if claw.flux_deriv(lo) >= 0.0 {
        return claw.flux(lo);
    }
    if claw.flux_deriv(hi) <= 0.0 {
        return claw.flux(hi);
    }
    // sonic point: F' changes sign inside (lo, hi)
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if claw.flux_deriv(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    claw.flux(0.5 * (a + b))
}

/// Local Lax–Friedrichs flux.
pub fn llf_flux(claw: &ScalarClaw, u_l: f64, u_r: f64) -> f64 {
    let alpha = claw.char_speed(u_l).abs().max(claw.char_speed(u_r).abs());
    0.5 * (claw.flux(u_l) + claw.flux(u_r)) - 0.5 * alpha * (claw.density(u_r) - claw.density(u_l))
}

fn numerical_flux(claw: &ScalarClaw, u_l: f64, u_r: f64) -> f64 {
    match claw.shape {
        FluxShape::Convex => godunov_flux(claw, u_l, u_r),
        FluxShape::General => llf_flux(claw, u_l, u_r),
    }
}

/// Every time level of an [`evolve_scalar`] run.
#[derive(Clone, Debug)]
pub struct ScalarHistory {
    pub grid: Grid1,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Cumulative `∫ (F_left − F_right) dt` through the domain boundary.
    pub boundary_inflow: Vec<f64>,
}

impl ScalarHistory {
    pub fn last(&self) -> (f64, &[f64]) {
        (*self.times.last().unwrap(), self.states.last().unwrap())
    }
}

/// Default CFL number of the scalar solver.
pub const DEFAULT_CFL: f64 = 0.45;

/// Advances cell values of `u` to `t_end`. `H` is recovered from `u`
/// through Newton iterations on the updated cell densities.
pub fn evolve_scalar(claw: &ScalarClaw, grid: &Grid1, u0: &[f64], t_end: f64, cfl: f64) -> Result<ScalarHistory> {
    if !(cfl > 0.0 && cfl < 1.0) {
        return Err(KclError::InvalidInput(format!("cfl must lie in (0, 1), got {cfl}")));
    }
    if u0.len() != grid.n_cells {
        return Err(KclError::InvalidInput(format!("{} initial values for {} cells", u0.len(), grid.n_cells)));
    }
    if u0.iter().any(|u| !u.is_finite()) {
        return Err(KclError::InvalidInput("initial data must be finite".into()));
    }
    let n = grid.n_cells;
    let dx = grid.dx();
    let mut u = u0.to_vec();
    let mut t = 0.0;
    let mut inflow = 0.0;
    let mut history = ScalarHistory { grid: *grid, times: vec![0.0], states: vec![u.clone()], boundary_inflow: vec![0.0] };
    let mut faces = vec![0.0; n + 1];
    while t < t_end {
        let amax = u.iter().map(|&v| claw.char_speed(v).abs()).fold(0.0, f64::max);
        let remaining = t_end - t;
        let dt = if amax > 0.0 { (cfl * dx / amax).min(remaining) } else { remaining };
        if !(dt.is_finite() && dt > 1e-14 * t_end.max(1.0)) {
            return Err(KclError::TimeStepUnderflow { time: t });
        }
        for (j, face) in faces.iter_mut().enumerate() {
            let (ul, ur) = match grid.boundary {
                Boundary1::Periodic => (u[(j + n - 1) % n], u[j % n]),
                Boundary1::Outflow => (u[j.saturating_sub(1)], u[j.min(n - 1)]),
            };
            *face = numerical_flux(claw, ul, ur);
        }
        if grid.boundary == Boundary1::Outflow {
            inflow += dt * (faces[0] - faces[n]);
        }
        for i in 0..n {
            let h_new = claw.density(u[i]) - dt / dx * (faces[i + 1] - faces[i]);
            u[i] = invert_density(claw, h_new, u[i]);
        }
        t = if dt == remaining { t_end } else { t + dt };
        history.times.push(t);
        history.states.push(u.clone());
        history.boundary_inflow.push(inflow);
    }
    Ok(history)
}

fn invert_density(claw: &ScalarClaw, target: f64, guess: f64) -> f64 {
    let mut u = guess;
    for _ in 0..50 {
        let r = claw.density(u) - target;
        let step = r / claw.density_deriv(u);
        u -= step;
        if step.abs() <= 1e-15 * u.abs().max(1.0) {
            break;
        }
    }
    u
}

/// Discrete total `Σ H(u_i) Δx`.
pub fn total_density(claw: &ScalarClaw, grid: &Grid1, u: &[f64]) -> f64 {
    u.iter().map(|&v| claw.density(v)).sum::<f64>() * grid.dx()
}

pub fn total_variation(u: &[f64]) -> f64 {
    u.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Position of the steepest discrete gradient, refined by a parabola
/// through the neighbouring interface jumps.
pub fn locate_shock(grid: &Grid1, u: &[f64]) -> f64 {
    let jumps: Vec<f64> = u.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let (j, _) = jumps
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
    let mut offset = 0.0;
    if j > 0 && j + 1 < jumps.len() {
        let (a, b, c) = (jumps[j - 1], jumps[j], jumps[j + 1]);
        let curv = a - 2.0 * b + c;
        if curv < 0.0 {
            offset = (0.5 * (a - c) / curv).clamp(-0.5, 0.5);
        }
    }
    grid.x_min + (j as f64 + 1.0 + offset) * grid.dx()
}

/// Shock trajectory (time, position) over the last half of a run.
pub fn shock_trajectory(history: &ScalarHistory) -> Vec<(f64, f64)> {
    let t_end = *history.times.last().unwrap();
    history
        .times
        .iter()
        .zip(&history.states)
        .filter(|(t, _)| **t >= 0.5 * t_end)
        .map(|(t, u)| (*t, locate_shock(&history.grid, u)))
        .collect()
}

/// Least-squares shock speed over the last half of the run.
pub fn fit_shock_speed(history: &ScalarHistory) -> Option<f64> {
    let traj = shock_trajectory(history);
    let (ts, xs): (Vec<f64>, Vec<f64>) = traj.into_iter().unzip();
    least_squares_line(&ts, &xs).map(|(s, _)| s)
}

/// Characteristic speeds `(q − a, q, q + a)` of the polytropic Euler
/// equations, with `a² = γ p / ρ`.
pub fn euler_char_speeds(rho: f64, q: f64, p: f64, gamma: f64) -> Result<(f64, f64, f64)> {
    if !(rho > 0.0 && p > 0.0 && gamma > 0.0) || !q.is_finite() {
        return Err(KclError::InvalidThermodynamicState);
    }
    let a = (gamma * p / rho).sqrt();
    Ok((q - a, q, q + a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn riemann(grid: &Grid1, ul: f64, ur: f64) -> Vec<f64> {
        grid.centers().into_iter().map(|x| if x < 0.0 { ul } else { ur }).collect()
    }

    #[test]
    fn rh_speed_examples() {
        assert_eq!(rh_speed(&ScalarClaw::burgers(), 1.0, 0.0).unwrap(), 0.5);
        let adv = ScalarClaw::linear_advection(-0.7);
        assert!((rh_speed(&adv, 3.0, -2.0).unwrap() + 0.7).abs() < 1e-15);
        let s = rh_speed(&ScalarClaw::cubic(), 2.0, 1.0).unwrap();
        assert!((s - 7.0 / 3.0).abs() < 1e-15);
        assert_eq!(rh_speed(&ScalarClaw::burgers(), 1.0, 1.0), Err(KclError::NoJump));
        assert_eq!(KclError::NoJump.to_string(), "no jump in conserved density");
    }

    #[test]
    fn lax_examples() {
        let b = ScalarClaw::burgers();
        assert!(lax_admissible(&b, 1.0, 0.0, 0.5));
        assert!(!lax_admissible(&b, 0.0, 1.0, 0.5));
        assert!(!lax_admissible(&b, 1.0, 0.0, 1.0));
    }

    #[test]
    fn lax_matches_compressive_jumps_for_burgers() {
        let b = ScalarClaw::burgers();
        let vals: Vec<f64> = (-10..=10).map(|k| k as f64 * 0.25).collect();
        for &ul in &vals {
            for &ur in &vals {
                if ul == ur {
                    continue;
                }
                let s = rh_speed(&b, ul, ur).unwrap();
                assert_eq!(lax_admissible(&b, ul, ur, s), ul > ur, "ul={ul} ur={ur}");
            }
        }
    }

    #[test]
    fn derivative_check() {
        let samples = [-1.5, -0.2, 0.0, 0.7, 2.0];
        ScalarClaw::burgers().check_derivatives(&samples, 1e-6).unwrap();
        ScalarClaw::cubic().check_derivatives(&samples, 1e-6).unwrap();
        let bad = ScalarClaw::new(|u| u, |u| u * u, |_| 1.0, |u| u, FluxShape::Convex);
        assert!(bad.check_derivatives(&samples, 1e-6).is_err());
        let flat = ScalarClaw::new(|_| 1.0, |u| u, |_| 0.0, |_| 1.0, FluxShape::Convex);
        assert!(flat.check_derivatives(&samples, 1e-6).is_err());
    }

    #[test]
    fn godunov_flux_cases() {
        let b = ScalarClaw::burgers();
        // transonic rarefaction picks the sonic value
        assert!(godunov_flux(&b, -1.0, 1.0).abs() < 1e-30);
        assert_eq!(godunov_flux(&b, 1.0, 2.0), 0.5);
        assert_eq!(godunov_flux(&b, -2.0, -1.0), 0.5);
        // shock: max of the endpoint fluxes
        assert_eq!(godunov_flux(&b, 1.0, -3.0), 4.5);
        assert_eq!(godunov_flux(&b, 2.0, 0.0), 2.0);
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1::new(1.0, 1.0, 10, Boundary1::Outflow).is_err());
        assert!(Grid1::new(0.0, 1.0, 1, Boundary1::Outflow).is_err());
        let g = Grid1::new(0.0, 1.0, 4, Boundary1::Periodic).unwrap();
        assert_eq!(g.centers(), vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn constant_state_is_fixed_point() {
        let grid = Grid1::new(-1.0, 1.0, 50, Boundary1::Periodic).unwrap();
        let u0 = vec![0.8; 50];
        let h = evolve_scalar(&ScalarClaw::burgers(), &grid, &u0, 1.0, 0.45).unwrap();
        assert!(h.last().1.iter().all(|&u| (u - 0.8).abs() < 1e-15));
        let h = evolve_scalar(&ScalarClaw::cubic(), &grid, &u0, 1.0, 0.45).unwrap();
        assert!(h.last().1.iter().all(|&u| (u - 0.8).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_cfl() {
        let grid = Grid1::new(-1.0, 1.0, 10, Boundary1::Outflow).unwrap();
        let u0 = vec![0.0; 10];
        assert!(evolve_scalar(&ScalarClaw::burgers(), &grid, &u0, 1.0, 1.0).is_err());
        assert!(evolve_scalar(&ScalarClaw::burgers(), &grid, &u0, 1.0, 0.0).is_err());
    }

    #[test]
    fn burgers_shock_position() {
        let grid = Grid1::new(-1.0, 2.0, 400, Boundary1::Outflow).unwrap();
        let h = evolve_scalar(&ScalarClaw::burgers(), &grid, &riemann(&grid, 1.0, 0.0), 1.0, 0.45).unwrap();
        let x = locate_shock(&grid, h.last().1);
        assert!((x - 0.5).abs() <= grid.dx(), "shock at {x}");
    }

    #[test]
    fn burgers_rarefaction_l1_error() {
        let grid = Grid1::new(-1.0, 2.0, 400, Boundary1::Outflow).unwrap();
        let h = evolve_scalar(&ScalarClaw::burgers(), &grid, &riemann(&grid, 0.0, 1.0), 1.0, 0.45).unwrap();
        let exact = |x: f64| x.clamp(0.0, 1.0);
        let err: f64 = grid.centers().iter().zip(h.last().1).map(|(x, u)| (u - exact(*x)).abs()).sum::<f64>() * grid.dx();
        assert!(err < 0.02, "L1 error {err}");
    }

    #[test]
    fn total_density_changes_by_boundary_flux_only() {
        let grid = Grid1::new(-1.0, 2.0, 120, Boundary1::Outflow).unwrap();
        let claw = ScalarClaw::burgers();
        let u0: Vec<f64> = grid.centers().iter().map(|x| 0.5 + (3.0 * x).sin()).collect();
        let h = evolve_scalar(&claw, &grid, &u0, 0.8, 0.45).unwrap();
        let m0 = total_density(&claw, &grid, &u0);
        for (u, inflow) in h.states.iter().zip(&h.boundary_inflow) {
            let m = total_density(&claw, &grid, u);
            assert!((m - m0 - inflow).abs() < 1e-12, "{m} vs {}", m0 + inflow);
        }
    }

    #[test]
    fn euler_speed_examples() {
        assert_eq!(euler_char_speeds(1.4, 0.0, 1.0, 1.4).unwrap(), (-1.0, 0.0, 1.0));
        assert_eq!(euler_char_speeds(1.0, 5.0, 1.0, 1.0).unwrap(), (4.0, 5.0, 6.0));
        let (c1, c2, c3) = euler_char_speeds(2.0, 0.0, 2.0, 2.0).unwrap();
        let r2 = 2f64.sqrt();
        assert!((c1 + r2).abs() < 1e-15 && c2 == 0.0 && (c3 - r2).abs() < 1e-15);
        assert_eq!(euler_char_speeds(0.0, 0.0, 1.0, 1.4), Err(KclError::InvalidThermodynamicState));
        assert_eq!(euler_char_speeds(1.0, 0.0, -1.0, 1.4), Err(KclError::InvalidThermodynamicState));
    }

    /// Normal-shock relations for a polytropic gas, used only to build
    /// Rankine–Hugoniot states independently of the solver.
    fn forward_shock(rho_r: f64, q_r: f64, p_r: f64, gamma: f64, mach: f64) -> (f64, f64, f64, f64) {
        let a_r = (gamma * p_r / rho_r).sqrt();
        let s = q_r + mach * a_r;
        let m2 = mach * mach;
        let rho_l = rho_r * (gamma + 1.0) * m2 / ((gamma - 1.0) * m2 + 2.0);
        let p_l = p_r * (1.0 + 2.0 * gamma / (gamma + 1.0) * (m2 - 1.0));
        let q_l = s - (s - q_r) * rho_r / rho_l;
        (rho_l, q_l, p_l, s)
    }

    #[test]
    fn forward_shock_speed_ordering() {
        for &gamma in &[1.2, 1.4, 5.0 / 3.0] {
            for &mach in &[1.01, 1.2, 2.0, 5.0] {
                for &q_r in &[-1.0, 0.0, 0.7] {
                    let (rho_r, p_r) = (1.3, 0.9);
                    let (rho_l, q_l, p_l, s) = forward_shock(rho_r, q_r, p_r, gamma, mach);
                    // the oracle state satisfies the mass and momentum jump relations
                    assert!((s * (rho_l - rho_r) - (rho_l * q_l - rho_r * q_r)).abs() < 1e-12);
                    let mom = |r: f64, q: f64, p: f64| r * q * q + p;
                    assert!((s * (rho_l * q_l - rho_r * q_r) - (mom(rho_l, q_l, p_l) - mom(rho_r, q_r, p_r))).abs() < 1e-10);
                    let (_, _, c3_r) = euler_char_speeds(rho_r, q_r, p_r, gamma).unwrap();
                    let (_, _, c3_l) = euler_char_speeds(rho_l, q_l, p_l, gamma).unwrap();
                    assert!(c3_r < s && s < c3_l, "gamma={gamma} M={mach}");
                }
            }
        }
    }
}
