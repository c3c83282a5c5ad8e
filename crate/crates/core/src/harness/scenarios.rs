use std::f64::consts::{PI, TAU};

use super::{HarnessError, ScenarioConfig, ScenarioKind};
use crate::closure::Closure;
use crate::kcl2d::{Boundary2, KclState2};
use crate::kcl3d::{Grid3, KclState3, Vec3};
use crate::scalar_claw::{Boundary1, Grid1, ScalarClaw};

/// A 2-D front ready for [`crate::kcl2d::evolve`].
#[derive(Clone, Debug)]
pub struct FrontSetup {
    pub state: KclState2,
    pub anchor: [f64; 2],
    pub closure: Closure,
    /// The analytic initial curve sampled at the cell faces.
    pub curve: Vec<[f64; 2]>,
}

#[derive(Clone, Debug)]
pub struct SurfaceSetup {
    pub state: KclState3,
    pub anchor: Vec3,
    pub closure: Closure,
    /// The analytic initial surface sampled at the lattice nodes,
    /// `(n1 + 1) × (n2 + 1)`, first index fastest.
    pub nodes: Vec<Vec3>,
}

#[derive(Clone)]
pub struct ScalarSetup {
    pub claw: ScalarClaw,
    pub grid: Grid1,
    pub u0: Vec<f64>,
}

pub enum InitialState {
    Front(FrontSetup),
    Surface(SurfaceSetup),
    Scalar(ScalarSetup),
}

fn front(config: &ScenarioConfig, state: KclState2, anchor: [f64; 2], curve: Vec<[f64; 2]>) -> Result<FrontSetup, HarnessError> {
    let kind = config.closure.expect("resolved config has a closure");
    let closure = Closure::init(kind, &state.g, &state.m).map_err(HarnessError::solver("closure"))?;
    Ok(FrontSetup { state, anchor, closure, curve })
}

/// Initial data for the configured scenario.
pub fn build_initial(config: &ScenarioConfig) -> Result<InitialState, HarnessError> {
    let c = config.resolve()?;
    let n = c.cells.unwrap();
    let m0 = c.m0.unwrap_or(1.0);
    let state_err = |e| HarnessError::Solver { module: "harness", source: e };
    match c.scenario {
        ScenarioKind::ExpandingCircle => {
            let d = TAU / n as f64;
            let theta: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * d).collect();
            let state = KclState2::new(0.0, d, vec![m0; n], theta, vec![c.r0; n], Boundary2::Periodic).map_err(state_err)?;
            let curve = (0..=n).map(|j| [c.r0 * (j as f64 * d).cos(), c.r0 * (j as f64 * d).sin()]).collect();
            Ok(InitialState::Front(front(&c, state, [c.r0, 0.0], curve)?))
        }
        ScenarioKind::Wedge => {
            if n % 2 != 0 {
                return Err(HarnessError::config("cells", "wedge needs an even cell count so the corner sits on a face"));
            }
            let (th, l) = (c.wedge_angle, c.wedge_half_length);
            let d = 2.0 * l / n as f64;
            let theta = (0..n).map(|i| if i < n / 2 { th } else { -th }).collect();
            let state = KclState2::new(-l, d, vec![m0; n], theta, vec![1.0; n], Boundary2::Extrapolate).map_err(state_err)?;
            let curve = (0..=n)
                .map(|j| {
                    let s = -l + j as f64 * d;
                    [s.abs() * th.sin(), s * th.cos()]
                })
                .collect();
            Ok(InitialState::Front(front(&c, state, [l * th.sin(), -l * th.cos()], curve)?))
        }
        ScenarioKind::SinusoidalShock => {
            let amp = c.amplitude;
            let d = 4.0 / n as f64;
            let slope = |y: f64| amp * PI / 2.0 * (PI * y / 2.0).sin();
            let centers: Vec<f64> = (0..n).map(|i| -2.0 + (i as f64 + 0.5) * d).collect();
            let theta = centers.iter().map(|&y| (-slope(y)).atan2(1.0)).collect();
            let g = centers.iter().map(|&y| slope(y).hypot(1.0)).collect();
            let state = KclState2::new(-2.0, d, vec![m0; n], theta, g, Boundary2::Periodic).map_err(state_err)?;
            let curve = (0..=n)
                .map(|j| {
                    let y = -2.0 + j as f64 * d;
                    [amp - amp * (PI * y / 2.0).cos(), y]
                })
                .collect();
            Ok(InitialState::Front(front(&c, state, [2.0 * amp, -2.0], curve)?))
        }
        ScenarioKind::PeriodicPulse3d => {
            let (kappa, a, b) = (c.kappa, c.a, c.b);
            let grid = Grid3::periodic(n, n, [-a, -b], [a, b]).map_err(state_err)?;
            let height = |x1: f64, x2: f64| kappa * (2.0 - (PI * x1 / a).cos() - (PI * x2 / b).cos());
            let (mut u, mut v) = (Vec::with_capacity(n * n), Vec::with_capacity(n * n));
            for j in 0..n {
                for i in 0..n {
                    let [x1, x2] = grid.center(i, j);
                    u.push(Vec3::new(1.0, 0.0, kappa * PI / a * (PI * x1 / a).sin()));
                    v.push(Vec3::new(0.0, 1.0, kappa * PI / b * (PI * x2 / b).sin()));
                }
            }
            let state = KclState3::new(grid.clone(), u, v, vec![m0; n * n]).map_err(state_err)?;
            let kind = c.closure.unwrap();
            let closure = Closure::init(kind, &state.areas(), &state.m).map_err(HarnessError::solver("closure"))?;
            let [x1, x2] = grid.center(0, 0);
            let anchor = Vec3::new(x1, x2, height(x1, x2));
            let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
            for j in 0..=n {
                for i in 0..=n {
                    let (x1, x2) = (-a + i as f64 * grid.spacing[0], -b + j as f64 * grid.spacing[1]);
                    nodes.push(Vec3::new(x1, x2, height(x1, x2)));
                }
            }
            Ok(InitialState::Surface(SurfaceSetup { state, anchor, closure, nodes }))
        }
        ScenarioKind::BurgersRiemann => {
            let grid = Grid1::new(-1.0, 2.0, n, Boundary1::Outflow).map_err(HarnessError::solver("scalar_claw"))?;
            let u0 = grid.centers().iter().map(|&x| if x < 0.0 { c.u_l } else { c.u_r }).collect();
            Ok(InitialState::Scalar(ScalarSetup { claw: ScalarClaw::burgers(), grid, u0 }))
        }
    }
}
