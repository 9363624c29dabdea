//! Constrained minimization of the TFDW energy at fixed mass `Σφ² = m` on a
//! finite window, the subadditivity and splitting scans built on it, and the
//! mass-concentration diagnostics of minimizers.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coulomb::ConvolutionPlan;
use crate::error::{Error, Result};
use crate::field::{FieldGrid, Grid};
use crate::lattice::{BoxDomain, DistanceKind, LatticePoint};
use crate::numeric::CompensatedSum;
use crate::spread::SpreadFamilyParams;
use crate::tfdw::{energy, tangent_residual, EnergyBreakdown, Functional};

/// How the first iterate is built; every choice is rescaled to the target mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitKind {
    /// The cone `ψ_n` with `n = ⌈L/2⌉`.
    BallCone,
    /// `exp(-|x|²/(2σ²))` with `σ = L/4`.
    GaussianLike,
    /// Independent uniform values on the window.
    Random { seed: u64 },
    /// A field file, resampled onto the window.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeConfig {
    /// The window is `[-L, L-1]³`.
    pub half_width: usize,
    pub mass: f64,
    pub kind: DistanceKind,
    pub init: InitKind,
    pub max_iters: usize,
    pub step0: f64,
    pub tol_residual: f64,
    pub backtrack: f64,
    pub armijo: f64,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            half_width: 12,
            mass: 0.5,
            kind: DistanceKind::Euclidean,
            init: InitKind::BallCone,
            max_iters: 20_000,
            step0: 0.1,
            tol_residual: 1e-6,
            backtrack: 0.5,
            armijo: 1e-4,
        }
    }
}

impl MinimizeConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::domain(msg));
        if self.half_width < 2 {
            return fail(format!("half-width must be >= 2, got {}", self.half_width));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return fail(format!(
                "mass must be positive and finite, got {}",
                self.mass
            ));
        }
        if !(self.step0 > 0.0 && self.tol_residual > 0.0) {
            return fail("step0 and tol_residual must be positive".into());
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return fail(format!(
                "backtrack factor must lie in (0,1), got {}",
                self.backtrack
            ));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return fail(format!(
                "Armijo constant must lie in (0,1), got {}",
                self.armijo
            ));
        }
        Ok(())
    }

    pub fn window(&self) -> Result<BoxDomain> {
        BoxDomain::centered_window(self.half_width)
    }

    pub fn with_mass(&self, mass: f64) -> Self {
        Self {
            mass,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Termination {
    Converged,
    MaxIters,
    /// No step size passed the descent test.
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iter: usize,
    pub energy: EnergyBreakdown,
    /// Accepted step size; zero for the initial point.
    pub step: f64,
    pub residual: f64,
}

pub const TRAJECTORY_CSV_HEADER: [&str; 8] = [
    "iter", "total", "kinetic", "tf", "dirac", "coulomb", "step", "residual",
];

impl TrajectoryPoint {
    pub fn csv_record(&self) -> [String; 8] {
        [
            self.iter.to_string(),
            format!("{:e}", self.energy.total),
            format!("{:e}", self.energy.kinetic),
            format!("{:e}", self.energy.tf_term),
            format!("{:e}", self.energy.dirac_term),
            format!("{:e}", self.energy.coulomb),
            format!("{:e}", self.step),
            format!("{:e}", self.residual),
        ]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeReport {
    #[serde(skip)]
    pub field: Option<FieldGrid>,
    pub mass: f64,
    pub kind: DistanceKind,
    pub trajectory: Vec<TrajectoryPoint>,
    pub energy: EnergyBreakdown,
    pub initial_energy: EnergyBreakdown,
    pub residual: f64,
    pub iterations: usize,
    pub boundary_mass_fraction: f64,
    /// Largest `|Σφ² - m|` seen over all accepted iterates.
    pub max_mass_drift: f64,
    pub max_value: f64,
    /// Mass argmax, used as the centre of the diagnostics.
    pub center: LatticePoint,
    /// `(r, S(r))` with `S(r)` the mass in the graph ball of radius `r` about `center`.
    pub s_profile: Vec<(u64, f64)>,
    pub r0: Option<u64>,
    pub termination: Termination,
}

impl MinimizeReport {
    pub fn field(&self) -> &FieldGrid {
        self.field.as_ref().expect("report carries its field")
    }

    /// Whether the recorded totals never increase.
    pub fn trajectory_is_monotone(&self) -> bool {
        self.trajectory
            .windows(2)
            .all(|w| w[1].energy.total <= w[0].energy.total)
    }
}

/// `φ · √(m / Σφ²)`.
pub fn projection_mass(phi: &FieldGrid, m: f64) -> Result<FieldGrid> {
    if !(m > 0.0) {
        return Err(Error::domain(format!(
            "target mass must be positive, got {m}"
        )));
    }
    if phi.mass() == 0.0 {
        return Err(Error::domain(
            "degenerate projection: the field is identically zero",
        ));
    }
    phi.scaled((m / phi.mass()).sqrt())
}

fn project_values(values: &mut [f64], m: f64) -> Result<()> {
    let mut acc = CompensatedSum::new();
    acc.extend(values.iter().map(|v| v * v));
    let current = acc.value();
    if !(current > 0.0) || !current.is_finite() {
        return Err(Error::domain(
            "degenerate projection: the field is identically zero",
        ));
    }
    let s = (m / current).sqrt();
    values.iter_mut().for_each(|v| *v *= s);
    Ok(())
}

fn initial_field(cfg: &MinimizeConfig, window: BoxDomain) -> Result<FieldGrid> {
    let l = cfg.half_width as f64;
    let raw = match &cfg.init {
        InitKind::BallCone => {
            let n = (cfg.half_width as u64).div_ceil(2);
            let params = SpreadFamilyParams::new(n, cfg.mass)?;
            FieldGrid::from_fn(window, |p| params.value(p))?
        }
        InitKind::GaussianLike => {
            let sigma2 = (l / 4.0).powi(2);
            FieldGrid::from_fn(window, |p| (-(p.norm2_sq() as f64) / (2.0 * sigma2)).exp())?
        }
        InitKind::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            FieldGrid::from_fn(window, |_| rng.gen::<f64>())?
        }
        InitKind::File { path } => {
            let file = std::fs::File::open(path)?;
            let (phi, _) = FieldGrid::read_from(std::io::BufReader::new(file))?;
            FieldGrid::new(phi.grid().resample(window))?
        }
    };
    projection_mass(&raw, cfg.mass)
}

/// Projected gradient descent `φ ← Π_m(max(0, φ - t g))` with Armijo
/// backtracking from `step0` at every iteration.
pub fn minimize(cfg: &MinimizeConfig) -> Result<MinimizeReport> {
    cfg.validate()?;
    let window = cfg.window()?;
    let start = initial_field(cfg, window)?;
    minimize_from(cfg, start)
}

/// [`minimize`] from a given first iterate on the configured window.
pub fn minimize_from(cfg: &MinimizeConfig, start: FieldGrid) -> Result<MinimizeReport> {
    cfg.validate()?;
    let window = cfg.window()?;
    if start.domain() != window {
        return Err(Error::domain(format!(
            "initial field box {} differs from window {window}",
            start.domain()
        )));
    }
    let m = cfg.mass;
    let functional = Functional::new(window, cfg.kind)?;
    let mut phi = projection_mass(&start, m)?.into_grid();
    let mut eval = functional.evaluate_grid(&phi)?;
    if !eval.energy.is_finite() {
        return Err(Error::Numerical {
            iteration: 0,
            reason: "initial energy is not finite".into(),
            last_valid: Box::new(FieldGrid::new(phi)?),
        });
    }
    let mut g = functional.gradient_with_potential(&phi, &eval.potential)?;
    let mut residual = tangent_residual(&phi, m, &g)?;
    let initial_energy = eval.energy;
    let mut trajectory = vec![TrajectoryPoint {
        iter: 0,
        energy: eval.energy,
        step: 0.0,
        residual,
    }];
    let mut max_mass_drift = (phi.dot(&phi) - m).abs();
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;
    let mut trial = phi.clone();

    for iter in 1..=cfg.max_iters {
        if residual <= cfg.tol_residual {
            termination = Termination::Converged;
            break;
        }
        let mut t = cfg.step0;
        let mut accepted = None;
        while t > 1e-18 {
            {
                let tv = trial.values_mut();
                for ((out, &p), &gv) in tv.iter_mut().zip(phi.values()).zip(g.values()) {
                    *out = (p - t * gv).max(0.0);
                }
                if project_values(tv, m).is_err() {
                    t *= cfg.backtrack;
                    continue;
                }
            }
            let candidate = functional.evaluate_grid(&trial)?;
            if !candidate.energy.is_finite() {
                return Err(Error::Numerical {
                    iteration: iter,
                    reason: format!("non-finite energy at step size {t:e}"),
                    last_valid: Box::new(FieldGrid::new(phi)?),
                });
            }
            let mut dir = CompensatedSum::new();
            for ((&a, &b), &gv) in trial.values().iter().zip(phi.values()).zip(g.values()) {
                dir.add(gv * (a - b));
            }
            let bound = eval.energy.total + cfg.armijo * dir.value();
            if candidate.energy.total <= bound && candidate.energy.total <= eval.energy.total {
                accepted = Some(candidate);
                break;
            }
            t *= cfg.backtrack;
        }
        let Some(candidate) = accepted else {
            termination = Termination::Stalled;
            break;
        };
        std::mem::swap(&mut phi, &mut trial);
        eval = candidate;
        g = functional.gradient_with_potential(&phi, &eval.potential)?;
        residual = tangent_residual(&phi, m, &g)?;
        max_mass_drift = max_mass_drift.max((phi.dot(&phi) - m).abs());
        iterations = iter;
        trajectory.push(TrajectoryPoint {
            iter,
            energy: eval.energy,
            step: t,
            residual,
        });
    }
    if termination == Termination::MaxIters && residual <= cfg.tol_residual {
        termination = Termination::Converged;
    }

    let field = FieldGrid::new(phi)?;
    let center = field.grid().argmax();
    let s_profile = mass_profile(&field, center);
    let r0 = concentration_radius(&field, m / 2.0)?.r0;
    Ok(MinimizeReport {
        mass: m,
        kind: cfg.kind,
        energy: eval.energy,
        initial_energy,
        residual,
        iterations,
        boundary_mass_fraction: field.boundary_mass_fraction(),
        max_mass_drift,
        max_value: field.max_value(),
        center,
        s_profile,
        r0,
        termination,
        trajectory,
        field: Some(field),
    })
}

/// Largest graph distance from `center` to a cell of the box.
fn max_distance(domain: BoxDomain, center: LatticePoint) -> u64 {
    let (lo, hi) = (domain.lo().coords(), domain.hi().coords());
    let c = center.coords();
    (0..3)
        .map(|i| (c[i] - lo[i]).abs().max((hi[i] - c[i]).abs()) as u64)
        .sum()
}

/// `(r, S(r))` for `r = 0..` the farthest cell, `S(r) = Σ_{B_r(center)} φ²`.
pub fn mass_profile(phi: &FieldGrid, center: LatticePoint) -> Vec<(u64, f64)> {
    let domain = phi.domain();
    let r_max = max_distance(domain, center);
    let mut shells = vec![CompensatedSum::new(); r_max as usize + 1];
    for (p, &v) in domain.points().zip(phi.values()) {
        shells[p.graph_distance(center) as usize].add(v * v);
    }
    let mut acc = CompensatedSum::new();
    shells
        .iter()
        .enumerate()
        .map(|(r, s)| {
            acc.add(s.value());
            (r as u64, acc.value())
        })
        .collect()
}

/// Evaluate `S` from a profile, saturating past its end.
fn s_at(profile: &[(u64, f64)], r: u64) -> f64 {
    let i = (r as usize).min(profile.len() - 1);
    profile[i].1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassGrowthRecord {
    pub r: u64,
    pub big_r: u64,
    /// Mass on the shells `r` and `r+1`, i.e. in `B_{r+1} \ B_{r-1}`.
    pub lhs: f64,
    /// Mass in `B_{r+1} ∪ B_r = B_{r+1}`, the literal reading of the display.
    pub lhs_union: f64,
    /// `S(r) (S(R) - S(r+1)) / (3(R + r))`.
    pub rhs: f64,
    pub holds: bool,
    pub holds_union: bool,
}

fn growth_record(profile: &[(u64, f64)], r: u64, big_r: u64) -> MassGrowthRecord {
    let s = |k: u64| s_at(profile, k);
    let lhs = s(r + 1) - s(r - 1);
    let lhs_union = s(r + 1);
    let rhs = s(r) * (s(big_r) - s(r + 1)) / (3.0 * (big_r + r) as f64);
    // Shell masses are differences of cumulative sums; allow for their round-off.
    let slack = 1e-14 * s(big_r).max(1.0);
    MassGrowthRecord {
        r,
        big_r,
        lhs,
        lhs_union,
        rhs,
        holds: lhs + slack >= rhs,
        holds_union: lhs_union + slack >= rhs,
    }
}

/// Annulus-mass inequality about the mass argmax, for `R > r + 1 >= 2`.
pub fn mass_growth_check(phi: &FieldGrid, r: u64, big_r: u64) -> Result<MassGrowthRecord> {
    if r < 1 || big_r <= r + 1 {
        return Err(Error::domain(format!(
            "need R > r + 1 >= 2, got r = {r}, R = {big_r}"
        )));
    }
    let center = phi.grid().argmax();
    Ok(growth_record(&mass_profile(phi, center), r, big_r))
}

/// [`mass_growth_check`] for every admissible `(r, R)` up to the farthest cell.
pub fn mass_growth_sweep(phi: &FieldGrid) -> Vec<MassGrowthRecord> {
    let center = phi.grid().argmax();
    let profile = mass_profile(phi, center);
    let r_max = profile.len() as u64 - 1;
    let mut out = Vec::new();
    for r in 1..r_max {
        for big_r in r + 2..=r_max {
            out.push(growth_record(&profile, r, big_r));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub c0: f64,
    pub r0: Option<u64>,
    /// Centre of a ball of radius `r0` carrying mass `>= c0`.
    pub center: Option<LatticePoint>,
    pub captured: f64,
    /// Mass in the ball of radius `2 r0` about the same centre.
    pub doubled_mass: f64,
    /// Whether `m <= 2 Σ_{B_{2R₀}} φ²`.
    pub doubling_holds: bool,
}

/// Largest ball mass over centres in the box, with its centre.
fn best_ball(phi: &FieldGrid, rho: &Grid, radius: u64) -> Result<(LatticePoint, f64)> {
    let plan = ConvolutionPlan::new(
        phi.domain(),
        |v| {
            if v.norm1() <= radius {
                1.0
            } else {
                0.0
            }
        },
    )?;
    let sums = plan.apply(rho)?;
    let mut best = (phi.domain().lo(), f64::NEG_INFINITY);
    for (p, &s) in phi.domain().points().zip(sums.values()) {
        if s > best.1 {
            best = (p, s);
        }
    }
    Ok(best)
}

/// Smallest `R` such that some ball of radius `R` centred in the box holds
/// mass `>= c0`, found by bisection on FFT ball sums.
pub fn concentration_radius(phi: &FieldGrid, c0: f64) -> Result<ConcentrationReport> {
    if !(c0 > 0.0) {
        return Err(Error::domain(format!("C0 must be positive, got {c0}")));
    }
    let none = ConcentrationReport {
        c0,
        r0: None,
        center: None,
        captured: 0.0,
        doubled_mass: 0.0,
        doubling_holds: false,
    };
    let m = phi.mass();
    let tol = 1e-12 * m.max(1.0);
    if c0 > m + tol {
        return Ok(none);
    }
    let rho = phi.density().grid().clone();
    let reaches = |r: u64| -> Result<Option<(LatticePoint, f64)>> {
        let (p, s) = best_ball(phi, &rho, r)?;
        Ok((s + tol >= c0).then_some((p, s)))
    };
    let diam = phi.domain().graph_diameter();
    let Some(mut hit) = reaches(diam)? else {
        return Ok(none);
    };
    let (mut lo, mut hi) = (0u64, diam);
    if let Some(h0) = reaches(0)? {
        hi = 0;
        hit = h0;
    }
    // Invariant: radius `hi` reaches c0; radius `lo` does not (unless hi = 0).
    while hi > lo + 1 {
        let mid = lo + (hi - lo) / 2;
        match reaches(mid)? {
            Some(h) => {
                hi = mid;
                hit = h;
            }
            None => lo = mid,
        }
    }
    let (center, captured) = hit;
    let doubled: f64 = phi
        .domain()
        .points()
        .zip(phi.values())
        .filter(|(p, _)| p.graph_distance(center) <= 2 * hi)
        .map(|(_, v)| v * v)
        .sum();
    Ok(ConcentrationReport {
        c0,
        r0: Some(hi),
        center: Some(center),
        captured,
        doubled_mass: doubled,
        doubling_holds: m <= 2.0 * doubled + tol,
    })
}

/// Runs [`minimize`] once per distinct mass, in parallel.
fn minimize_masses(
    template: &MinimizeConfig,
    masses: &[f64],
) -> Result<BTreeMap<u64, MinimizeReport>> {
    let mut distinct: Vec<f64> = masses.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let runs: Vec<Result<(u64, MinimizeReport)>> = distinct
        .par_iter()
        .map(|&m| minimize(&template.with_mass(m)).map(|r| (m.to_bits(), r)))
        .collect();
    runs.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityRow {
    pub m1: f64,
    pub i_m1: f64,
    pub i_rest: f64,
    pub i_m: f64,
    /// `I(m₁) + I(m - m₁) - I(m)`; positive values indicate strict subadditivity.
    pub gap: f64,
}

pub const SUBADDITIVITY_CSV_HEADER: [&str; 6] =
    ["m", "m1", "i_m1", "i_rest", "i_m", "gap_indicator"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubadditivityScan {
    pub mass: f64,
    pub rows: Vec<SubadditivityRow>,
    /// One minimization per distinct mass, in ascending mass order.
    pub runs: Vec<MinimizeReport>,
}

pub fn subadditivity_scan(
    m: f64,
    splits: &[f64],
    template: &MinimizeConfig,
) -> Result<SubadditivityScan> {
    if let Some(bad) = splits.iter().find(|&&m1| !(m1 > 0.0 && m1 < m)) {
        return Err(Error::domain(format!("split {bad} is not inside (0, {m})")));
    }
    let mut masses = vec![m];
    for &m1 in splits {
        masses.push(m1);
        masses.push(m - m1);
    }
    let runs = minimize_masses(template, &masses)?;
    let i = |x: f64| runs[&x.to_bits()].energy.total;
    let rows = splits
        .iter()
        .map(|&m1| {
            let (a, b, c) = (i(m1), i(m - m1), i(m));
            SubadditivityRow {
                m1,
                i_m1: a,
                i_rest: b,
                i_m: c,
                gap: a + b - c,
            }
        })
        .collect();
    Ok(SubadditivityScan {
        mass: m,
        rows,
        runs: runs.into_values().collect(),
    })
}

/// Energy of two fields placed `separation` apart along `e₁`, rescaled to total mass `m`.
pub fn two_cluster_energy(
    first: &FieldGrid,
    second: &FieldGrid,
    separation: i64,
    m: f64,
    kind: DistanceKind,
) -> Result<EnergyBreakdown> {
    let shifted = second.translated(LatticePoint::E1.scale(separation));
    let union = first.domain().union(&shifted.domain());
    let a = first.embed(union)?;
    let b = shifted.embed(union)?;
    let combined = Grid::from_values(
        union,
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x + y)
            .collect(),
    )?;
    let combined = projection_mass(&FieldGrid::new(combined)?, m)?;
    energy(&combined, kind)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub m1: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplittingRecord {
    pub mass: f64,
    pub separation: i64,
    pub e_single: f64,
    pub e_split_best: f64,
    pub best_m1: f64,
    /// `E_single - E_split_best`; positive when two clusters beat one.
    pub advantage: f64,
    pub candidates: Vec<SplitCandidate>,
    pub runs: Vec<MinimizeReport>,
}

pub const SPLITTING_CSV_HEADER: [&str; 6] = [
    "m",
    "separation",
    "e_single",
    "e_split_best",
    "best_m1",
    "advantage_indicator",
];

/// Compare one minimizer at mass `m` against the best pair of independently
/// minimized clusters at masses `f m` and `(1-f) m` for `f` in `fractions`.
pub fn splitting_advantage(
    m: f64,
    separation: i64,
    template: &MinimizeConfig,
    fractions: &[f64],
) -> Result<SplittingRecord> {
    if fractions.is_empty() {
        return Err(Error::domain("at least one split fraction is required"));
    }
    if let Some(bad) = fractions.iter().find(|&&f| !(f > 0.0 && f < 1.0)) {
        return Err(Error::domain(format!(
            "split fraction {bad} is not inside (0,1)"
        )));
    }
    let mut masses = vec![m];
    for &f in fractions {
        masses.push(f * m);
        masses.push(m - f * m);
    }
    let runs = minimize_masses(template, &masses)?;
    let e_single = runs[&m.to_bits()].energy.total;
    let mut candidates = Vec::with_capacity(fractions.len());
    for &f in fractions {
        let m1 = f * m;
        let a = runs[&m1.to_bits()].field();
        let b = runs[&(m - m1).to_bits()].field();
        let e = two_cluster_energy(a, b, separation, m, template.kind)?;
        candidates.push(SplitCandidate {
            m1,
            energy: e.total,
        });
    }
    let best = candidates
        .iter()
        .copied()
        .min_by(|a, b| a.energy.total_cmp(&b.energy))
        .expect("nonempty");
    Ok(SplittingRecord {
        mass: m,
        separation,
        e_single,
        e_split_best: best.energy,
        best_m1: best.m1,
        advantage: e_single - best.energy,
        candidates,
        runs: runs.into_values().collect(),
    })
}

/// Number of sign changes of `values`, ignoring exact zeros.
pub fn sign_changes(values: &[f64]) -> usize {
    let signs: Vec<bool> = values
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| *v > 0.0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// `n` points geometrically spaced from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::sphere;

    fn delta(value: f64) -> FieldGrid {
        FieldGrid::from_fn(BoxDomain::cube(3), |p| {
            if p == LatticePoint::ORIGIN {
                value
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn projection_examples() {
        let d = delta(2.0);
        let p = projection_mass(&d, 1.0).unwrap();
        assert!((p.get(LatticePoint::ORIGIN) - 1.0).abs() < 1e-15);
        let same = projection_mass(&p, 1.0).unwrap();
        assert_eq!(same.values(), p.values());
        let f = FieldGrid::from_fn(BoxDomain::cube(1), |q| q.norm1() as f64).unwrap();
        let quad = projection_mass(&f, 4.0 * f.mass()).unwrap();
        for (a, b) in quad.values().iter().zip(f.values()) {
            assert!((a - 2.0 * b).abs() < 1e-14);
        }
        assert!(projection_mass(&FieldGrid::zeros(BoxDomain::cube(1)), 1.0).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = MinimizeConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.mass = 0.0;
        assert!(minimize(&cfg).is_err());
        cfg.mass = 0.5;
        cfg.half_width = 1;
        assert!(cfg.validate().is_err());
        cfg.half_width = 4;
        cfg.backtrack = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn small_run_descends_and_keeps_mass() {
        let cfg = MinimizeConfig {
            half_width: 4,
            mass: 0.3,
            max_iters: 200,
            ..Default::default()
        };
        let report = minimize(&cfg).unwrap();
        assert!(report.trajectory_is_monotone());
        assert!(report.energy.total < report.initial_energy.total);
        assert!(report.max_mass_drift <= 1e-10 * cfg.mass);
        assert!(report.field().values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn concentration_examples() {
        let d = delta(1.0);
        assert_eq!(concentration_radius(&d, 0.5).unwrap().r0, Some(0));
        assert_eq!(concentration_radius(&d, 2.0).unwrap().r0, None);

        let shell = sphere(LatticePoint::ORIGIN, 5);
        let w = 1.0 / (shell.len() as f64).sqrt();
        let phi = FieldGrid::from_fn(BoxDomain::cube(6), |p| if p.norm1() == 5 { w } else { 0.0 })
            .unwrap();
        let rep = concentration_radius(&phi, 0.5).unwrap();
        assert_eq!(rep.r0, Some(5));
        assert!(rep.doubling_holds);
    }

    #[test]
    fn concentration_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let domain = BoxDomain::with_dims(LatticePoint::new(-2, -1, 0), [5, 4, 3]).unwrap();
        let phi = FieldGrid::from_fn(domain, |_| rng.gen::<f64>().powi(4)).unwrap();
        for c0 in [0.05, 0.3, 0.7].map(|f| f * phi.mass()) {
            let brute = (0..=domain.graph_diameter()).find(|&r| {
                domain.points().any(|c| {
                    let s: f64 = domain
                        .points()
                        .filter(|p| p.graph_distance(c) <= r)
                        .map(|p| phi.get(p).powi(2))
                        .sum();
                    s >= c0
                })
            });
            assert_eq!(concentration_radius(&phi, c0).unwrap().r0, brute);
        }
    }

    #[test]
    fn growth_trivial_when_supported_inside() {
        let phi =
            FieldGrid::from_fn(BoxDomain::cube(6), |p| 3.0 - p.norm1().min(3) as f64).unwrap();
        let rec = mass_growth_check(&phi, 2, 5).unwrap();
        assert_eq!(rec.rhs, 0.0);
        assert!(rec.holds);
        assert!(mass_growth_check(&phi, 0, 5).is_err());
        assert!(mass_growth_check(&phi, 2, 3).is_err());
    }

    #[test]
    fn sign_change_counting() {
        assert_eq!(sign_changes(&[-1.0, -0.5, 0.2, 3.0]), 1);
        assert_eq!(sign_changes(&[-1.0, 0.5, -0.2]), 2);
        assert_eq!(sign_changes(&[1.0, 0.0, 2.0]), 0);
        let g = log_grid(0.1, 50.0, 10);
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[9], 50.0);
    }
}
