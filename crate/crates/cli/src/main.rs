use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crcurv::commands;
use crcurv::report::{to_json, CalibrationBlock, FailureReport};
use crcurv::{CliError, Mode, Result, RunConfig};

#[derive(Parser)]
#[command(name = "crcurv", version, about = "Existence criterion for prescribed Webster curvature on the CR 3-sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Curvature K as an expression in x1, y1, x2, y2.
    #[arg(long)]
    k_expr: Option<String>,
    /// Abstract critical-data file (TOML).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Quadrature refinement levels.
    #[arg(long)]
    refine: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Geometric,
    Abstract,
}

#[derive(Subcommand)]
enum Command {
    /// Compute and print the calibrated constants.
    Calibrate(Common),
    /// Run the full criterion and print the report.
    Analyze(Common),
    /// Run the bubble and expansion checks.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Write the sampled H profiles here as CSV.
        #[arg(long)]
        profile_csv: Option<PathBuf>,
    },
    /// Integrate the reduced flow for one tuple or for every tuple.
    Flow {
        #[command(flatten)]
        common: Common,
        /// Comma-separated labels, e.g. y0,y1.
        #[arg(long, value_delimiter = ',')]
        tuple: Option<Vec<String>>,
        /// Trajectory CSV for a single tuple, or a directory otherwise.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write the critical data of a geometric K as an abstract file.
    ExportAbstract(Common),
}

fn resolve(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = c.mode {
        cfg.mode = match m {
            ModeArg::Geometric => Mode::Geometric,
            ModeArg::Abstract => Mode::Abstract,
        };
    }
    if let Some(e) = &c.k_expr {
        cfg.k_expr = Some(e.clone());
        cfg.family = None;
    }
    if let Some(d) = &c.data {
        cfg.data = Some(d.clone());
        if c.mode.is_none() && c.k_expr.is_none() {
            cfg.mode = Mode::Abstract;
        }
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(r) = c.refine {
        cfg.refine = r;
    }
    if let Some(o) = &c.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Calibrate(c) => {
            let cfg = resolve(&c)?;
            let calib = commands::calibrate(&cfg)?;
            commands::write_output(cfg.out.as_deref(), &to_json(&CalibrationBlock::from_calibration(&calib))?)
        }
        Command::Analyze(c) => {
            let cfg = resolve(&c)?;
            let report = commands::analyze(&cfg)?;
            commands::write_output(cfg.out.as_deref(), &to_json(&report)?)
        }
        Command::Verify { common, profile_csv } => {
            let cfg = resolve(&common)?;
            let out = commands::verify(&cfg)?;
            if let Some(p) = &profile_csv {
                let f = std::fs::File::create(p).map_err(|source| CliError::Write { path: p.clone(), source })?;
                commands::write_profile_csv(f, &out.profiles)?;
            }
            commands::write_output(cfg.out.as_deref(), &to_json(&out.report)?)?;
            if !out.report.pass {
                let failed: Vec<&str> =
                    out.report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
                return Err(CliError::Verification(failed.join(", ")));
            }
            Ok(())
        }
        Command::Flow { common, tuple, csv } => {
            let cfg = resolve(&common)?;
            let out = commands::flow(&cfg, tuple.as_deref())?;
            if let Some(p) = &csv {
                if tuple.is_some() {
                    let f = std::fs::File::create(p).map_err(|source| CliError::Write { path: p.clone(), source })?;
                    commands::write_trajectory_csv(f, &out.trajectories[0])?;
                } else {
                    std::fs::create_dir_all(p).map_err(|source| CliError::Write { path: p.clone(), source })?;
                    for (s, t) in out.report.classifications.iter().zip(&out.trajectories) {
                        let path = p.join(format!("flow_{}.csv", s.labels.join("_")));
                        let f = std::fs::File::create(&path).map_err(|source| CliError::Write { path: path.clone(), source })?;
                        commands::write_trajectory_csv(f, t)?;
                    }
                }
            }
            commands::write_output(cfg.out.as_deref(), &to_json(&out.report)?)
        }
        Command::ExportAbstract(c) => {
            let cfg = resolve(&c)?;
            let file = commands::export_abstract(&cfg)?;
            commands::write_output(cfg.out.as_deref(), &file.to_toml())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Ok(j) = to_json(&FailureReport::from_error(&e)) {
                eprint!("{j}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
