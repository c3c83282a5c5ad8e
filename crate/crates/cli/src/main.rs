use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use kcl_core::closure::ClosureKind;
use kcl_core::harness::{run, HarnessError, Overrides, ScenarioConfig, ScenarioKind};

/// Run a KCL scenario and write snapshots, kinks, metrics and a manifest.
#[derive(Debug, Parser)]
#[command(name = "kcl", version)]
struct Args {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// expanding_circle, wedge, sinusoidal_shock, periodic_pulse3d or burgers_riemann.
    #[arg(long)]
    scenario: Option<ScenarioKind>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    /// constant_m or wnlrt.
    #[arg(long)]
    closure: Option<ClosureKind>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "snap-every")]
    snap_every: Option<f64>,
}

fn config_from(args: &Args) -> Result<ScenarioConfig, HarnessError> {
    let mut config = match (&args.config, args.scenario) {
        (Some(path), _) => ScenarioConfig::load(path)?,
        (None, Some(kind)) => ScenarioConfig::new(kind),
        (None, None) => return Err(HarnessError::Config { field: "scenario".into(), message: "give --config or --scenario".into() }),
    };
    config.apply(&Overrides {
        scenario: args.scenario,
        cells: args.cells,
        t_end: args.t_end,
        cfl: args.cfl,
        closure: args.closure,
        out: args.out.clone(),
        snap_every: args.snap_every,
    });
    config.resolve()
}

fn main() -> ExitCode {
    let args = Args::parse();
    match config_from(&args).and_then(|c| run(&c)) {
        Ok(summary) => {
            let m = &summary.manifest;
            println!("{} finished: {} steps, {} files in {}", m.config.scenario.name(), m.steps, m.files.len() + 1, summary.out_dir.display());
            for (key, value) in &m.summary {
                println!("  {key} = {value}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
