//! One function per subcommand. Each writes its outputs and manifest into
//! the run directory and returns the list of failed assertions.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use tfdw_core::liquid_drop::{ScalingStudy, SCALING_CSV_HEADER};
use tfdw_core::minimizer::{
    mass_growth_sweep, sign_changes, SubadditivityRow, SPLITTING_CSV_HEADER,
    SUBADDITIVITY_CSV_HEADER, TRAJECTORY_CSV_HEADER,
};
use tfdw_core::spread::PSI_CSV_HEADER;
use tfdw_core::verify::{run_all, SuiteSizes, SUITE_CSV_HEADER};
use tfdw_core::{
    concentration_radius, exact_enumeration_oracle, minimize, minimize_drop, psi_energy_report,
    scaling_study, splitting_advantage, DropSet, Error, InitKind, SearchOptions, Termination,
};

use crate::config::{
    DropConfig, DropScalingConfig, Manifest, PsiDecayConfig, ScanConfig, TfdwConfig, VerifyConfig,
};
use crate::error::CliError;
use crate::plot::{line_chart, Series};

pub type Failures = Vec<String>;

fn csv_writer(dir: &Path, name: &str, header: &[&str]) -> Result<csv::Writer<File>, CliError> {
    let mut w = csv::Writer::from_path(dir.join(name))?;
    w.write_record(header)?;
    Ok(w)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Run(e.to_string()))?;
    fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

pub fn verify_lemmas(cfg: &VerifyConfig, dir: &Path) -> Result<Failures, CliError> {
    Manifest::new("verify-lemmas", cfg.seed, cfg)?.write(dir)?;
    let sizes = SuiteSizes {
        ball_radius: cfg.ball_radius,
        lp: cfg.lp_instances,
        hls: cfg.hls_instances,
        truncation: cfg.truncation_instances,
    };
    let summaries = run_all(sizes, cfg.seed, cfg.kind, cfg.ball_fault);
    let mut w = csv_writer(dir, "lemmas.csv", &SUITE_CSV_HEADER)?;
    let mut failures = Vec::new();
    for s in &summaries {
        w.write_record(s.csv_record())?;
        println!(
            "{:<22} {:>7} instances  {:>3} violations  max ratio {:.6}",
            s.check, s.instances, s.violations, s.max_ratio
        );
        if !s.passed() {
            failures.push(format!("{}: {} violations", s.check, s.violations));
            for example in &s.examples {
                failures.push(format!("{}: {example}", s.check));
            }
        }
    }
    w.flush()?;
    Ok(failures)
}

pub fn psi_decay(cfg: &PsiDecayConfig, dir: &Path) -> Result<Failures, CliError> {
    if cfg.n_max < 2 {
        return Err(CliError::Usage(format!(
            "--n-max must be >= 2, got {}",
            cfg.n_max
        )));
    }
    if !(cfg.mass > 0.0 && cfg.mass.is_finite()) {
        return Err(CliError::Usage(format!(
            "--mass must be positive, got {}",
            cfg.mass
        )));
    }
    Manifest::new("psi-decay", 0, cfg)?.write(dir)?;
    let report = psi_energy_report(cfg.n_max, cfg.mass, cfg.kind)?;
    let mut w = csv_writer(dir, "psi_decay.csv", &PSI_CSV_HEADER)?;
    for rec in report.csv_records() {
        w.write_record(rec)?;
    }
    w.flush()?;

    let log_series = |label: &str, f: fn(&tfdw_core::spread::PsiEnergyRow) -> f64| Series {
        label: label.to_string(),
        points: report
            .rows
            .iter()
            .map(|r| ((r.n as f64).log10(), f(r).log10()))
            .collect(),
    };
    line_chart(
        &dir.join("psi_decay.svg"),
        &format!("cone energy terms, mass {}, {} kernel", cfg.mass, cfg.kind),
        "log10 n",
        "log10 term",
        &[
            log_series("kinetic", |r| r.kinetic),
            log_series("tf", |r| r.tf),
            log_series("dirac", |r| r.dirac),
            log_series("coulomb", |r| r.coulomb),
        ],
    )?;
    let last = report.rows.last().expect("n_max >= 2");
    println!("n = {}: total {:.6e}", last.n, last.total);
    Ok(report
        .monotonicity_violations()
        .into_iter()
        .map(|v| v.reason)
        .collect())
}

pub fn tfdw(cfg: &TfdwConfig, dir: &Path) -> Result<Failures, CliError> {
    let seed = match cfg.minimize.init {
        InitKind::Random { seed } => seed,
        _ => 0,
    };
    Manifest::new("tfdw", seed, cfg)?.write(dir)?;
    let report = match minimize(&cfg.minimize) {
        Ok(r) => r,
        Err(Error::Numerical {
            iteration,
            reason,
            last_valid,
        }) => {
            last_valid.write_to(
                BufWriter::new(File::create(dir.join("field_last_valid.txt"))?),
                cfg.minimize.kind,
            )?;
            return Err(CliError::Run(format!(
                "non-finite energy at iteration {iteration}: {reason}"
            )));
        }
        Err(e) => return Err(e.into()),
    };
    let mut w = csv_writer(dir, "trajectory.csv", &TRAJECTORY_CSV_HEADER)?;
    for p in &report.trajectory {
        w.write_record(p.csv_record())?;
    }
    w.flush()?;
    report.field().write_to(
        BufWriter::new(File::create(dir.join("field.txt"))?),
        cfg.minimize.kind,
    )?;

    let mut w = csv_writer(dir, "mass_profile.csv", &["r", "S"])?;
    for &(r, s) in &report.s_profile {
        w.write_record([r.to_string(), fmt(s)])?;
    }
    w.flush()?;
    let sweep = mass_growth_sweep(report.field());
    let mut w = csv_writer(
        dir,
        "mass_growth.csv",
        &["r", "R", "lhs", "lhs_union", "rhs", "holds"],
    )?;
    for g in &sweep {
        w.write_record([
            g.r.to_string(),
            g.big_r.to_string(),
            fmt(g.lhs),
            fmt(g.lhs_union),
            fmt(g.rhs),
            g.holds.to_string(),
        ])?;
    }
    w.flush()?;

    let c0 = cfg.c0.unwrap_or(cfg.minimize.mass / 2.0);
    let concentration = concentration_radius(report.field(), c0)?;
    write_json(
        dir,
        "summary.json",
        &json!({
            "termination": report.termination,
            "iterations": report.iterations,
            "energy": report.energy,
            "residual": report.residual,
            "max_mass_drift": report.max_mass_drift,
            "max_value": report.max_value,
            "boundary_mass_fraction": report.boundary_mass_fraction,
            "center": report.center.coords(),
            "concentration": concentration,
        }),
    )?;
    println!(
        "{:?} after {} iterations: E = {:.10}, residual {:.2e}, R0 = {:?}",
        report.termination,
        report.iterations,
        report.energy.total,
        report.residual,
        concentration.r0
    );
    if report.termination != Termination::Converged {
        return Err(CliError::Run(format!(
            "minimizer stopped with {:?} at residual {:e}",
            report.termination, report.residual
        )));
    }
    Ok(sweep
        .iter()
        .filter(|g| !g.holds)
        .map(|g| {
            format!(
                "annulus mass inequality fails at r = {}, R = {}",
                g.r, g.big_r
            )
        })
        .collect())
}

pub fn tfdw_scan(cfg: &ScanConfig, dir: &Path) -> Result<Failures, CliError> {
    if cfg.masses.is_empty() || cfg.splits.is_empty() {
        return Err(CliError::Usage(
            "--masses and --splits must be nonempty".into(),
        ));
    }
    Manifest::new("tfdw-scan", 0, cfg)?.write(dir)?;
    let mut sub = csv_writer(dir, "subadditivity.csv", &SUBADDITIVITY_CSV_HEADER)?;
    let mut split = csv_writer(dir, "splitting.csv", &SPLITTING_CSV_HEADER)?;
    let mut advantages = Vec::with_capacity(cfg.masses.len());
    let mut unconverged = 0;
    for &m in &cfg.masses {
        let rec = splitting_advantage(m, cfg.separation, &cfg.minimize, &cfg.splits)?;
        unconverged += rec
            .runs
            .iter()
            .filter(|r| r.termination != Termination::Converged)
            .count();
        let energy = |mass: f64| {
            rec.runs
                .iter()
                .find(|r| r.mass == mass)
                .map(|r| r.energy.total)
                .expect("every split mass was minimized")
        };
        for &f in &cfg.splits {
            let m1 = f * m;
            let row = SubadditivityRow {
                m1,
                i_m1: energy(m1),
                i_rest: energy(m - m1),
                i_m: energy(m),
                gap: energy(m1) + energy(m - m1) - energy(m),
            };
            sub.write_record([
                fmt(m),
                fmt(row.m1),
                fmt(row.i_m1),
                fmt(row.i_rest),
                fmt(row.i_m),
                fmt(row.gap),
            ])?;
        }
        split.write_record([
            fmt(m),
            rec.separation.to_string(),
            fmt(rec.e_single),
            fmt(rec.e_split_best),
            fmt(rec.best_m1),
            fmt(rec.advantage),
        ])?;
        println!(
            "m = {m:<10.4} advantage {:+.4e} (best m1 {:.4})",
            rec.advantage, rec.best_m1
        );
        advantages.push(rec.advantage);
    }
    sub.flush()?;
    split.flush()?;
    line_chart(
        &dir.join("splitting.svg"),
        &format!(
            "splitting advantage, {} kernel, half-width {}",
            cfg.minimize.kind, cfg.minimize.half_width
        ),
        "log10 m",
        "E(one cluster) - E(two clusters)",
        &[
            Series {
                label: "advantage".into(),
                points: cfg
                    .masses
                    .iter()
                    .zip(&advantages)
                    .map(|(m, a)| (m.log10(), *a))
                    .collect(),
            },
            Series {
                label: "zero".into(),
                points: vec![
                    (cfg.masses[0].log10(), 0.0),
                    (cfg.masses[cfg.masses.len() - 1].log10(), 0.0),
                ],
            },
        ],
    )?;
    let changes = sign_changes(&advantages);
    println!("{changes} sign change(s) along the mass grid");
    for (w, a) in cfg.masses.windows(2).zip(advantages.windows(2)) {
        if (a[0] > 0.0) != (a[1] > 0.0) {
            println!("crossover between m = {} and m = {}", w[0], w[1]);
        }
    }
    if unconverged > 0 {
        println!("warning: {unconverged} minimization(s) stopped before the residual tolerance");
    }
    Ok(Vec::new())
}

fn search_options(connected_only: bool) -> SearchOptions {
    SearchOptions { connected_only }
}

pub fn drop(cfg: &DropConfig, dir: &Path) -> Result<Failures, CliError> {
    if cfg.volume == 0 {
        return Err(CliError::Usage("--volume must be >= 1".into()));
    }
    Manifest::new("drop", cfg.schedule.seed(), cfg)?.write(dir)?;
    let report = minimize_drop(
        cfg.volume,
        cfg.kind,
        cfg.schedule,
        search_options(cfg.connected_only),
    )?;
    report
        .best
        .write_to(BufWriter::new(File::create(dir.join("drop.txt"))?))?;
    let mut w = csv_writer(
        dir,
        "trace.csv",
        &["sweep", "temperature", "current", "best"],
    )?;
    for t in &report.trace {
        w.write_record([
            t.sweep.to_string(),
            fmt(t.temperature),
            fmt(t.current),
            fmt(t.best),
        ])?;
    }
    w.flush()?;
    let mut failures = Vec::new();
    let oracle = if cfg.volume <= 6 {
        let exact = exact_enumeration_oracle(cfg.volume, cfg.kind)?;
        if (exact.energy.total - report.energy.total).abs() > 1e-9 {
            failures.push(format!(
                "search found {} but the enumerated optimum is {}",
                report.energy.total, exact.energy.total
            ));
        }
        Some(exact.energy.total)
    } else {
        None
    };
    write_json(
        dir,
        "energy.json",
        &json!({
            "volume": cfg.volume,
            "kind": cfg.kind,
            "energy": report.energy,
            "connected": report.connected,
            "diameter": report.best.diameter(),
            "proposed": report.proposed,
            "accepted": report.accepted,
            "best_any_total": report.best_any_total,
            "enumerated_optimum": oracle,
        }),
    )?;
    println!(
        "V = {}: perimeter {}, coulomb {:.6}, total {:.6}, connected {}",
        cfg.volume,
        report.energy.perimeter,
        report.energy.coulomb,
        report.energy.total,
        report.connected
    );
    if cfg.connected_only && !report.connected {
        failures.push("best set is not connected".into());
    }
    Ok(failures)
}

pub fn drop_scaling(cfg: &DropScalingConfig, dir: &Path) -> Result<Failures, CliError> {
    if cfg.volumes.is_empty() || cfg.volumes.contains(&0) {
        return Err(CliError::Usage(
            "--volumes must be a nonempty list of positive sizes".into(),
        ));
    }
    Manifest::new("drop-scaling", cfg.schedule.seed(), cfg)?.write(dir)?;
    let study = scaling_study(
        &cfg.volumes,
        cfg.kind,
        cfg.schedule,
        search_options(cfg.connected_only),
        cfg.slack,
    )?;
    let mut w = csv_writer(dir, "drop_scaling.csv", &SCALING_CSV_HEADER)?;
    for row in &study.rows {
        w.write_record(row.csv_record())?;
        DropSet::new(&row.cells, cfg.kind)?.write_to(BufWriter::new(File::create(
            dir.join(format!("drop_{}.txt", row.volume)),
        )?))?;
    }
    w.flush()?;
    let mut w = csv_writer(
        dir,
        "drop_subadditivity.csv",
        &[
            "V0",
            "V1",
            "E_V0",
            "E_V1",
            "E_union",
            "E_connected_whole",
            "slack",
            "holds",
        ],
    )?;
    for s in &study.subadditivity {
        w.write_record([
            s.v0.to_string(),
            s.v1.to_string(),
            fmt(s.e_v0),
            fmt(s.e_v1),
            fmt(s.e_union),
            s.e_connected_whole.map(fmt).unwrap_or_default(),
            fmt(s.slack),
            s.holds.to_string(),
        ])?;
    }
    w.flush()?;
    let column = |f: fn(&tfdw_core::liquid_drop::ScalingRow) -> f64| -> Vec<(f64, f64)> {
        study
            .rows
            .iter()
            .map(|r| ((r.volume as f64).log10(), f(r)))
            .collect()
    };
    line_chart(
        &dir.join("drop_scaling.svg"),
        &format!("liquid drop optima, {} kernel", cfg.kind),
        "log10 V",
        "normalized energy",
        &[
            Series {
                label: "total / V".into(),
                points: column(|r| r.total_over_v),
            },
            Series {
                label: "coulomb / (V ln V)".into(),
                points: column(|r| r.coulomb_over_v_log_v),
            },
        ],
    )?;
    for r in &study.rows {
        println!(
            "V = {:<5} total/V {:.4}  coulomb/(V ln V) {:.4}  connected {}  chain bound {}",
            r.volume, r.total_over_v, r.coulomb_over_v_log_v, r.connected, r.chain.holds
        );
    }
    println!(
        "max/min: total/V {:.3}, coulomb/(V ln V) {:.3}",
        ScalingStudy::spread(study.rows.iter().map(|r| r.total_over_v)),
        ScalingStudy::spread(study.rows.iter().map(|r| r.coulomb_over_v_log_v)),
    );
    let mut failures = Vec::new();
    for r in &study.rows {
        if cfg.connected_only && !r.connected {
            failures.push(format!("V = {}: best set is not connected", r.volume));
        }
        if r.connected && !r.chain.holds {
            failures.push(format!(
                "V = {}: pair-count bound {} exceeds coulomb {}",
                r.volume, r.chain.bound, r.chain.coulomb
            ));
        }
    }
    for s in study.subadditivity.iter().filter(|s| !s.holds) {
        failures.push(format!(
            "E({}) + E({}) + {} < separated union energy {}",
            s.v0, s.v1, s.slack, s.e_union
        ));
    }
    Ok(failures)
}
