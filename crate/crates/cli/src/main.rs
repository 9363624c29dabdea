//! `tfdw`: runs the lattice TFDW and liquid-drop experiments and writes CSV
//! tables, SVG plots and a manifest per run.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 usage error,
//! 3 numerical or I/O failure.

mod commands;
mod config;
mod error;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde_json::Value;

use tfdw_core::{DistanceKind, InitKind, Schedule};

use config::{
    from_file, load_config_value, out_dir, DropConfig, DropScalingConfig, PsiDecayConfig,
    ScanConfig, TfdwConfig, VerifyConfig,
};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "tfdw",
    version,
    about = "Lattice TFDW and liquid-drop experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ball formulas, lp monotonicity, HLS and truncation suites.
    VerifyLemmas(VerifyArgs),
    /// Energy of the cone family as the cone widens.
    PsiDecay(PsiArgs),
    /// One mass-constrained minimization.
    Tfdw(TfdwArgs),
    /// Subadditivity and splitting tables over a mass grid.
    TfdwScan(ScanArgs),
    /// Liquid-drop search at one volume.
    Drop(DropArgs),
    /// Liquid-drop searches over a list of volumes.
    DropScaling(DropScalingArgs),
}

#[derive(Args)]
struct Common {
    /// JSON config file or manifest of an earlier run; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: runs/<command>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Coulomb kernel metric: euclidean or graph.
    #[arg(long, value_parser = parse_kind)]
    kind: Option<DistanceKind>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ball_radius: Option<u64>,
    #[arg(long)]
    lp_instances: Option<usize>,
    #[arg(long)]
    hls_instances: Option<usize>,
    #[arg(long)]
    truncation_instances: Option<usize>,
    /// Offset added to the ball volume formula, to check that failures are caught.
    #[arg(long, hide = true, allow_negative_numbers = true)]
    ball_fault: Option<i64>,
}

#[derive(Args)]
struct PsiArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n_max: Option<u64>,
    /// Excess mass carried by the cone.
    #[arg(long)]
    mass: Option<f64>,
}

#[derive(Args)]
struct MinimizeArgs {
    /// Window half-width L; the box is [-L, L-1]^3.
    #[arg(long = "box")]
    half_width: Option<usize>,
    /// ball-cone, gaussian, random or file:<path>.
    #[arg(long)]
    init: Option<String>,
    /// Seed for --init random.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    step0: Option<f64>,
}

#[derive(Args)]
struct TfdwArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    minimize: MinimizeArgs,
    #[arg(long)]
    mass: Option<f64>,
    /// Mass threshold for the concentration radius [default: mass/2].
    #[arg(long)]
    c0: Option<f64>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    minimize: MinimizeArgs,
    /// Comma-separated masses, or LO..HI:N for N log-spaced masses.
    #[arg(long)]
    masses: Option<String>,
    /// Comma-separated split fractions m1/m in (0,1).
    #[arg(long, value_delimiter = ',')]
    splits: Option<Vec<f64>>,
    /// Distance between the two clusters along the first axis.
    #[arg(long)]
    separation: Option<i64>,
}

#[derive(Args)]
struct ScheduleArgs {
    /// anneal or greedy.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    cooling: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Let the search visit disconnected sets.
    #[arg(long)]
    allow_disconnected: bool,
}

#[derive(Args)]
struct DropArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long)]
    volume: Option<usize>,
}

#[derive(Args)]
struct DropScalingArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, value_delimiter = ',')]
    volumes: Option<Vec<usize>>,
    /// Allowed excess of the separated union over the sum of its parts.
    #[arg(long)]
    slack: Option<f64>,
}

fn parse_kind(s: &str) -> Result<DistanceKind, String> {
    s.parse().map_err(|e: tfdw_core::Error| e.to_string())
}

fn config_value(common: &Common, command: &str) -> Result<Option<Value>, CliError> {
    common
        .config
        .as_deref()
        .map(|p| load_config_value(p, command))
        .transpose()
}

fn has_key(value: Option<&Value>, path: &[&str]) -> bool {
    let mut cur = value;
    for key in path {
        cur = cur.and_then(|v| v.get(key));
    }
    cur.is_some()
}

fn parse_masses(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("cannot parse masses {s:?}"));
    if let Some((range, n)) = s.split_once(':') {
        let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
        let (lo, hi): (f64, f64) = (
            lo.trim().parse().map_err(|_| bad())?,
            hi.trim().parse().map_err(|_| bad())?,
        );
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err(bad());
        }
        return Ok(tfdw_core::minimizer::log_grid(lo, hi, n));
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| bad()))
        .collect()
}

fn parse_init(s: &str, seed: Option<u64>) -> Result<InitKind, CliError> {
    Ok(match s {
        "ball-cone" => InitKind::BallCone,
        "gaussian" => InitKind::GaussianLike,
        "random" => InitKind::Random {
            seed: seed.unwrap_or(0),
        },
        other => match other.strip_prefix("file:") {
            Some(path) => InitKind::File { path: path.into() },
            None => {
                return Err(CliError::Usage(format!(
                    "unknown --init {other:?} (expected ball-cone, gaussian, random or file:<path>)"
                )))
            }
        },
    })
}

fn apply_minimize(
    cfg: &mut tfdw_core::MinimizeConfig,
    args: &MinimizeArgs,
    kind: Option<DistanceKind>,
) -> Result<(), CliError> {
    if let Some(v) = kind {
        cfg.kind = v;
    }
    if let Some(v) = args.half_width {
        cfg.half_width = v;
    }
    if let Some(init) = &args.init {
        cfg.init = parse_init(init, args.seed)?;
    } else if let (Some(seed), InitKind::Random { .. }) = (args.seed, &cfg.init) {
        cfg.init = InitKind::Random { seed };
    }
    if let Some(v) = args.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = args.tol {
        cfg.tol_residual = v;
    }
    if let Some(v) = args.step0 {
        cfg.step0 = v;
    }
    cfg.validate()?;
    Ok(())
}

fn apply_schedule(
    schedule: &mut Schedule,
    connected_only: &mut bool,
    args: &ScheduleArgs,
) -> Result<(), CliError> {
    match args.schedule.as_deref() {
        None => {}
        Some("anneal") if !matches!(schedule, Schedule::Anneal { .. }) => {
            *schedule = Schedule::anneal(schedule.seed())
        }
        Some("greedy") if !matches!(schedule, Schedule::Greedy { .. }) => {
            *schedule = Schedule::Greedy {
                restarts: 4,
                seed: schedule.seed(),
            }
        }
        Some("anneal" | "greedy") => {}
        Some(other) => {
            return Err(CliError::Usage(format!(
                "unknown --schedule {other:?} (expected anneal or greedy)"
            )))
        }
    }
    match schedule {
        Schedule::Anneal {
            t0,
            cooling,
            sweeps,
            seed,
        } => {
            *t0 = args.t0.unwrap_or(*t0);
            *cooling = args.cooling.unwrap_or(*cooling);
            *sweeps = args.sweeps.unwrap_or(*sweeps);
            *seed = args.seed.unwrap_or(*seed);
        }
        Schedule::Greedy { restarts, seed } => {
            *restarts = args.restarts.unwrap_or(*restarts);
            *seed = args.seed.unwrap_or(*seed);
        }
    }
    if args.allow_disconnected {
        *connected_only = false;
    }
    schedule.validate()?;
    Ok(())
}

/// Usage error for a missing flag, printed with the subcommand synopsis.
fn missing(subcommand: &str, flag: &str) -> ! {
    let mut cmd = Cli::command();
    cmd.build();
    let sub = cmd
        .find_subcommand_mut(subcommand)
        .expect("known subcommand");
    sub.error(
        clap::error::ErrorKind::MissingRequiredArgument,
        format!("{flag} is required (on the command line or in --config)"),
    )
    .exit()
}

fn run(cli: Cli) -> Result<(commands::Failures, PathBuf), CliError> {
    let dir_for = |common: &Common, name: &str| out_dir(common.out.clone(), name);
    match cli.command {
        Command::VerifyLemmas(a) => {
            let file = config_value(&a.common, "verify-lemmas")?;
            let mut cfg: VerifyConfig = from_file(file.as_ref())?;
            cfg.kind = a.common.kind.unwrap_or(cfg.kind);
            cfg.seed = a.seed.unwrap_or(cfg.seed);
            cfg.ball_radius = a.ball_radius.unwrap_or(cfg.ball_radius);
            cfg.lp_instances = a.lp_instances.unwrap_or(cfg.lp_instances);
            cfg.hls_instances = a.hls_instances.unwrap_or(cfg.hls_instances);
            cfg.truncation_instances = a.truncation_instances.unwrap_or(cfg.truncation_instances);
            cfg.ball_fault = a.ball_fault.unwrap_or(cfg.ball_fault);
            let dir = dir_for(&a.common, "verify-lemmas")?;
            Ok((commands::verify_lemmas(&cfg, &dir)?, dir))
        }
        Command::PsiDecay(a) => {
            let file = config_value(&a.common, "psi-decay")?;
            let mut cfg: PsiDecayConfig = from_file(file.as_ref())?;
            cfg.kind = a.common.kind.unwrap_or(cfg.kind);
            cfg.n_max = a.n_max.unwrap_or(cfg.n_max);
            cfg.mass = a.mass.unwrap_or(cfg.mass);
            let dir = dir_for(&a.common, "psi-decay")?;
            Ok((commands::psi_decay(&cfg, &dir)?, dir))
        }
        Command::Tfdw(a) => {
            let file = config_value(&a.common, "tfdw")?;
            if a.mass.is_none() && !has_key(file.as_ref(), &["minimize", "mass"]) {
                missing("tfdw", "--mass");
            }
            let mut cfg: TfdwConfig = from_file(file.as_ref())?;
            cfg.minimize.mass = a.mass.unwrap_or(cfg.minimize.mass);
            cfg.c0 = a.c0.or(cfg.c0);
            apply_minimize(&mut cfg.minimize, &a.minimize, a.common.kind)?;
            let dir = dir_for(&a.common, "tfdw")?;
            Ok((commands::tfdw(&cfg, &dir)?, dir))
        }
        Command::TfdwScan(a) => {
            let file = config_value(&a.common, "tfdw-scan")?;
            let mut cfg: ScanConfig = from_file(file.as_ref())?;
            if let Some(m) = &a.masses {
                cfg.masses = parse_masses(m)?;
            }
            cfg.splits = a.splits.clone().unwrap_or(cfg.splits);
            cfg.separation = a.separation.unwrap_or(cfg.separation);
            apply_minimize(&mut cfg.minimize, &a.minimize, a.common.kind)?;
            let dir = dir_for(&a.common, "tfdw-scan")?;
            Ok((commands::tfdw_scan(&cfg, &dir)?, dir))
        }
        Command::Drop(a) => {
            let file = config_value(&a.common, "drop")?;
            if a.volume.is_none() && !has_key(file.as_ref(), &["volume"]) {
                missing("drop", "--volume");
            }
            let mut cfg: DropConfig = from_file(file.as_ref())?;
            cfg.kind = a.common.kind.unwrap_or(cfg.kind);
            cfg.volume = a.volume.unwrap_or(cfg.volume);
            apply_schedule(&mut cfg.schedule, &mut cfg.connected_only, &a.schedule)?;
            let dir = dir_for(&a.common, "drop")?;
            Ok((commands::drop(&cfg, &dir)?, dir))
        }
        Command::DropScaling(a) => {
            let file = config_value(&a.common, "drop-scaling")?;
            let mut cfg: DropScalingConfig = from_file(file.as_ref())?;
            cfg.kind = a.common.kind.unwrap_or(cfg.kind);
            cfg.volumes = a.volumes.clone().unwrap_or(cfg.volumes);
            cfg.slack = a.slack.unwrap_or(cfg.slack);
            apply_schedule(&mut cfg.schedule, &mut cfg.connected_only, &a.schedule)?;
            let dir = dir_for(&a.common, "drop-scaling")?;
            Ok((commands::drop_scaling(&cfg, &dir)?, dir))
        }
    }
}

fn report(dir: &Path, failures: &[String]) -> ExitCode {
    println!("outputs in {}", dir.display());
    if failures.is_empty() {
        return ExitCode::SUCCESS;
    }
    for f in failures {
        eprintln!("FAILED {f}");
    }
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((failures, dir)) => report(&dir, &failures),
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
