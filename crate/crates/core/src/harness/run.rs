use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::io::{write_file, KINK_COLUMNS};
use super::{build_initial, FrontRow, FrontSetup, HarnessError, InitialState, KinkRow, Manifest, ScalarRow, ScalarSetup, ScenarioConfig, SurfaceRow, SurfaceSetup};
use super::{FRONT_COLUMNS, SCALAR_COLUMNS, SURFACE_COLUMNS};
use crate::kcl2d::{self, conserved_integral, reconstruct_samples, EvolveOptions};
use crate::kcl3d::{self, max_normal_turn, reconstruct_surface, solenoidal_residual};
use crate::numerics::wrap_angle;
use crate::ray_tracer::{trace_rays, ConstantSpeed, RadialSpeed, SpeedField2};
use crate::scalar_claw::{evolve_scalar, fit_shock_speed, locate_shock, total_density, total_variation};

/// What a run produced.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

struct Output<'a> {
    dir: &'a Path,
    files: Vec<String>,
    summary: BTreeMap<String, f64>,
}

impl Output<'_> {
    fn csv<I: IntoIterator<Item = Vec<f64>>>(&mut self, name: String, columns: &[&str], rows: I) -> Result<(), HarnessError> {
        write_file(&self.dir.join(&name), columns, rows)?;
        self.files.push(name);
        Ok(())
    }

    fn note(&mut self, key: &str, value: f64) {
        if value.is_finite() {
            self.summary.insert(key.to_string(), value);
        }
    }
}

/// Runs the configured scenario and writes its outputs under `config.out`.
pub fn run(config: &ScenarioConfig) -> Result<RunSummary, HarnessError> {
    let start = Instant::now();
    let c = config.resolve()?;
    std::fs::create_dir_all(&c.out).map_err(|source| HarnessError::Io { path: c.out.clone(), source })?;
    let mut out = Output { dir: &c.out, files: Vec::new(), summary: BTreeMap::new() };
    let steps = match build_initial(&c)? {
        InitialState::Front(setup) => run_front(&c, setup, &mut out)?,
        InitialState::Surface(setup) => run_surface(&c, setup, &mut out)?,
        InitialState::Scalar(setup) => run_scalar(&c, setup, &mut out)?,
    };
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: c.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        steps,
        files: out.files,
        summary: out.summary,
    };
    let path = c.out.join("manifest.json");
    std::fs::write(&path, manifest.to_json() + "\n").map_err(|source| HarnessError::Io { path, source })?;
    Ok(RunSummary { out_dir: c.out.clone(), manifest })
}

fn run_front(c: &ScenarioConfig, setup: FrontSetup, out: &mut Output) -> Result<usize, HarnessError> {
    let opts = EvolveOptions {
        cfl: c.cfl,
        snap_every: c.snap_every.unwrap(),
        scheme: c.scheme,
        kink_threshold: c.kink_threshold,
        min_track_len: 5,
    };
    let t_end = c.t_end.unwrap();
    let evo = kcl2d::evolve(&setup.state, setup.anchor, &setup.closure, t_end, &opts).map_err(HarnessError::solver("kcl2d"))?;
    let s0 = &evo.snapshots[0].state;
    let g0 = s0.g.iter().sum::<f64>();
    let mut metrics = Vec::new();
    for (k, snap) in evo.snapshots.iter().enumerate() {
        let s = &snap.state;
        let t = s.time;
        let samples = reconstruct_samples(s, snap.anchor);
        let rows = samples.iter().map(|p| FrontRow { t, xi: p.xi, x: p.x, y: p.y, m: p.m, theta: p.theta, g: p.g }.values());
        out.csv(format!("front_{k:04}.csv"), FRONT_COLUMNS, rows)?;
        let (h1, h2) = conserved_integral(s, s.xi_min, s.xi_max()).map_err(HarnessError::solver("kcl2d"))?;
        let max_theta = s.theta.iter().map(|&th| wrap_angle(th).abs()).fold(0.0, f64::max);
        let kinks = evo.kinks.iter().filter(|r| r.time == t).count();
        metrics.push(vec![t, h1, h2, s.arc_length(), s.g.iter().sum::<f64>() / g0, max_theta, kinks as f64]);
    }
    let kink_rows = evo.kinks.iter().map(|r| KinkRow { time: r.time, xi: r.xi, theta_jump: r.theta_jump, m_jump: r.m_jump, g_jump: r.g_jump, speed_k: r.speed_k }.values());
    out.csv("kinks.csv".into(), KINK_COLUMNS, kink_rows)?;
    let cols = ["t", "int_h1", "int_h2", "arc_length", "g_mean_ratio", "max_abs_theta", "kink_count"];
    out.note("g_mean_ratio", metrics.last().unwrap()[4]);
    out.note("max_abs_theta", metrics.last().unwrap()[5]);
    out.csv("metrics.csv".into(), &cols, metrics)?;

    // rays: ξ = const traces through the snapshots
    let n = s0.len();
    let stride = (n / 32).max(1);
    let mut rays = Vec::new();
    for j in (0..=n).step_by(stride) {
        for snap in &evo.snapshots {
            let p = reconstruct_samples(&snap.state, snap.anchor)[j];
            rays.push(vec![j as f64, snap.state.time, p.xi, p.x, p.y]);
        }
    }
    out.csv("rays.csv".into(), &["ray", "t", "xi", "x", "y"], rays)?;

    out.note("persistent_kinks", evo.persistent_tracks(opts.min_track_len).len() as f64);
    if let Some(first) = evo.kinks.first() {
        out.note("first_kink_time", first.time);
    }
    if c.trace_rays {
        trace_front(c, &evo.snapshots[0], t_end, out)?;
    }
    Ok(evo.steps)
}

fn trace_front(c: &ScenarioConfig, snap: &kcl2d::Snapshot2, t_end: f64, out: &mut Output) -> Result<(), HarnessError> {
    let snap_every = c.snap_every.unwrap();
    let sub = (snap_every / 0.01).ceil().max(1.0) as usize;
    let field: Box<dyn SpeedField2> = if c.ray_epsilon == 0.0 { Box::new(ConstantSpeed(c.m0.unwrap())) } else { Box::new(RadialSpeed { epsilon: c.ray_epsilon }) };
    let history = trace_rays(&snap.front(), field.as_ref(), t_end, snap_every / sub as f64).map_err(HarnessError::solver("ray_tracer"))?;
    let mut rows = Vec::new();
    for (k, (t, front)) in history.times.iter().zip(&history.fronts).enumerate() {
        if k % sub == 0 || k + 1 == history.times.len() {
            rows.extend(front.points.iter().enumerate().map(|(i, p)| vec![*t, i as f64, p.x, p.y, p.theta]));
        }
    }
    out.csv("raytrace.csv".into(), &["t", "index", "x", "y", "theta"], rows)
}

fn run_surface(c: &ScenarioConfig, setup: SurfaceSetup, out: &mut Output) -> Result<usize, HarnessError> {
    let evo = kcl3d::evolve3(&setup.state, setup.anchor, &setup.closure, c.t_end.unwrap(), c.cfl, c.snap_every.unwrap()).map_err(HarnessError::solver("kcl3d"))?;
    let mut metrics = Vec::new();
    for (k, snap) in evo.snapshots.iter().enumerate() {
        let s = &snap.state;
        let mesh = reconstruct_surface(s, snap.anchor);
        let normals = s.normals().map_err(HarnessError::solver("kcl3d"))?;
        let (res, res_max) = solenoidal_residual(s);
        let mut rows = Vec::with_capacity(s.grid.cells());
        for j in 0..s.grid.n[1] {
            for i in 0..s.grid.n[0] {
                let idx = s.grid.index(i, j);
                let [xi1, xi2] = s.grid.center(i, j);
                let (p, n) = (mesh.points[idx], normals[idx]);
                rows.push(SurfaceRow { t: s.time, xi1, xi2, x: p[0], y: p[1], z: p[2], m: s.m[idx], n1: n[0], n2: n[1], n3: n[2], sol_res: res[idx].norm() }.values());
            }
        }
        out.csv(format!("surface_{k:04}.csv"), SURFACE_COLUMNS, rows)?;
        let (su, sv) = (s.sum_u() * s.grid.cell_area(), s.sum_v() * s.grid.cell_area());
        let tilt = normals.iter().map(|n| (n - kcl3d::Vec3::z()).norm()).fold(0.0, f64::max);
        let turn = max_normal_turn(s).map_err(HarnessError::solver("kcl3d"))?;
        metrics.push(vec![s.time, su[0], su[1], su[2], sv[0], sv[1], sv[2], res_max, mesh.loop_defect, mesh.defect_bound, tilt, turn]);
    }
    let cols = ["t", "int_u1", "int_u2", "int_u3", "int_v1", "int_v2", "int_v3", "sol_res_max", "loop_defect", "defect_bound", "max_normal_tilt", "max_normal_turn"];
    let last = metrics.last().unwrap().clone();
    out.note("sol_res_growth", last[7] - metrics[0][7]);
    out.note("loop_defect", last[8]);
    out.note("max_normal_tilt", last[10]);
    out.csv("metrics.csv".into(), &cols, metrics)?;
    Ok(evo.steps)
}

fn run_scalar(c: &ScenarioConfig, setup: ScalarSetup, out: &mut Output) -> Result<usize, HarnessError> {
    let t_end = c.t_end.unwrap();
    let snap_every = c.snap_every.unwrap();
    let history = evolve_scalar(&setup.claw, &setup.grid, &setup.u0, t_end, c.cfl).map_err(HarnessError::solver("scalar_claw"))?;
    let centers = setup.grid.centers();
    // first stored level at or after each snapshot time
    let mut picks = vec![0];
    let mut k = 1;
    for (idx, &t) in history.times.iter().enumerate().skip(1) {
        if t >= k as f64 * snap_every * (1.0 - 1e-12) || idx + 1 == history.times.len() {
            picks.push(idx);
            while k as f64 * snap_every <= t * (1.0 + 1e-12) {
                k += 1;
            }
        }
    }
    let mut metrics = Vec::new();
    for (s, &idx) in picks.iter().enumerate() {
        let (t, u) = (history.times[idx], &history.states[idx]);
        out.csv(format!("scalar_{s:04}.csv"), SCALAR_COLUMNS, centers.iter().zip(u).map(|(&x, &u)| ScalarRow { t, x, u }.values()))?;
        metrics.push(vec![t, total_density(&setup.claw, &setup.grid, u), total_variation(u), history.boundary_inflow[idx], locate_shock(&setup.grid, u)]);
    }
    out.csv("metrics.csv".into(), &["t", "total_density", "total_variation", "boundary_inflow", "shock_x"], metrics)?;
    let shock = history.times.iter().zip(&history.states).skip(1).map(|(&t, u)| vec![t, locate_shock(&setup.grid, u)]);
    out.csv("shock.csv".into(), &["t", "x_shock"], shock)?;
    if let Some(speed) = fit_shock_speed(&history) {
        out.note("shock_speed", speed);
    }
    Ok(history.times.len() - 1)
}
