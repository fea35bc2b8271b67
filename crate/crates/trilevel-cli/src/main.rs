use std::path::PathBuf;

use clap::{Parser, Subcommand};
use trilevel::sweep::EngineKind;
use trilevel_cli::commands::{self, CliError, Overrides};
use trilevel_cli::config::OutFormat;

#[derive(Parser)]
#[command(
    name = "trilevel",
    version,
    about = "Steady-state thermodynamics of a driven three-level heat engine"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate one working point and print its steady-state report.
    Steady {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_engine)]
        engine: Option<EngineKind>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan the (omega20, lam) box and write per-observable grid files.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_engine)]
        engine: Option<EngineKind>,
        /// Grid resolution as NxM (omega20 count x lam count).
        #[arg(long, value_parser = parse_grid)]
        grid: Option<(usize, usize)>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_format)]
        format: Option<OutFormat>,
    },
    /// Run the L9 orthogonal design with range and variance analysis.
    Doe {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_engine)]
        engine: Option<EngineKind>,
        /// Grid resolution as NxM (omega20 count x lam count).
        #[arg(long, value_parser = parse_grid)]
        grid: Option<(usize, usize)>,
        /// Analyze a stored case table instead of running the engine;
        /// "table4" selects the bundled reference table.
        #[arg(long)]
        fixture: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_format)]
        format: Option<OutFormat>,
    },
    /// Self-check the implementation and the active configuration.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_engine)]
        engine: Option<EngineKind>,
        /// Grid resolution as NxM (omega20 count x lam count).
        #[arg(long, value_parser = parse_grid)]
        grid: Option<(usize, usize)>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_engine(s: &str) -> Result<EngineKind, String> {
    match s {
        "kinetic" => Ok(EngineKind::Kinetic),
        "gkls" => Ok(EngineKind::Gkls),
        _ => Err(format!("unknown engine {s:?} (expected kinetic or gkls)")),
    }
}

fn parse_format(s: &str) -> Result<OutFormat, String> {
    match s {
        "csv" => Ok(OutFormat::Csv),
        "json" => Ok(OutFormat::Json),
        _ => Err(format!("unknown format {s:?} (expected csv or json)")),
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid {s:?} is not of the form NxM"))?;
    let n = a.parse::<usize>().map_err(|e| format!("grid {s:?}: {e}"))?;
    let m = b.parse::<usize>().map_err(|e| format!("grid {s:?}: {e}"))?;
    if n == 0 || m == 0 {
        return Err(format!("grid {s:?} must have positive counts"));
    }
    Ok((n, m))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Steady { config, engine, out } => {
            let ov = Overrides {
                engine,
                out,
                ..Default::default()
            };
            let cfg = commands::load_config(config.as_deref(), &ov)?;
            commands::cmd_steady(&cfg)
        }
        Cmd::Sweep {
            config,
            engine,
            grid,
            out,
            format,
        } => {
            let ov = Overrides {
                engine,
                format,
                out,
                ..Default::default()
            };
            let cfg = commands::load_config(config.as_deref(), &ov)?;
            commands::cmd_sweep(&cfg, grid)
        }
        Cmd::Doe {
            config,
            engine,
            grid,
            fixture,
            out,
            format,
        } => {
            let ov = Overrides {
                engine,
                format,
                out,
                ..Default::default()
            };
            let cfg = commands::load_config(config.as_deref(), &ov)?;
            commands::cmd_doe(&cfg, fixture.as_deref(), grid)
        }
        Cmd::Validate {
            config,
            engine,
            grid,
            seed,
        } => {
            let ov = Overrides {
                engine,
                seed,
                ..Default::default()
            };
            let cfg = commands::load_config(config.as_deref(), &ov)?;
            commands::cmd_validate(&cfg, grid)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}
