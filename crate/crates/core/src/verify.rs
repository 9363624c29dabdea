//! Randomized and exact checks of the functional inequalities used by the
//! energy: ball combinatorics, ℓᵖ monotonicity, the discrete
//! Hardy-Littlewood-Sobolev bound and the truncation comparison.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coulomb::pairing_direct;
use crate::error::{Error, Result};
use crate::field::{kinetic_energy, FieldGrid};
use crate::lattice::{
    ball, ball_volume_formula, graph_gradient_sq, set_boundary, sphere_size_formula, BoxDomain,
    DistanceKind, LatticePoint,
};
use crate::numeric::{nonneg_pow, CompensatedSum};
use crate::tfdw::{energy, local_terms, PHI_CAP};

/// Summary line of one randomized or exhaustive check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub check: String,
    pub instances: usize,
    pub violations: usize,
    pub max_ratio: f64,
    pub seed: u64,
    /// Human-readable description of the first few violating inputs.
    pub examples: Vec<String>,
}

pub const SUITE_CSV_HEADER: [&str; 5] = ["check", "instances", "violations", "max_ratio", "seed"];

impl SuiteSummary {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn csv_record(&self) -> [String; 5] {
        [
            self.check.clone(),
            self.instances.to_string(),
            self.violations.to_string(),
            format!("{:e}", self.max_ratio),
            self.seed.to_string(),
        ]
    }
}

const MAX_EXAMPLES: usize = 5;

fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Outcome of one instance: ratio, whether it holds, and its inputs if not.
type Outcome = (f64, bool, Option<String>);

fn summarize(check: &str, seed: u64, outcomes: Vec<Outcome>) -> SuiteSummary {
    let mut summary = SuiteSummary {
        check: check.to_string(),
        instances: outcomes.len(),
        violations: 0,
        max_ratio: 0.0,
        seed,
        examples: Vec::new(),
    };
    for (ratio, holds, example) in outcomes {
        summary.max_ratio = summary.max_ratio.max(ratio);
        if !holds {
            summary.violations += 1;
            if summary.examples.len() < MAX_EXAMPLES {
                summary.examples.extend(example);
            }
        }
    }
    summary
}

/// Enumerated ball and sphere sizes against their closed forms for `R = 1..=r_max`.
/// `volume_offset` is added to the closed form and exists to exercise the
/// failure path.
pub fn ball_formula_check(r_max: u64, volume_offset: i64) -> SuiteSummary {
    let outcomes = (1..=r_max)
        .into_par_iter()
        .map(|r| {
            let cells = ball(LatticePoint::ORIGIN, r);
            let shell = set_boundary(&cells).len() as u64;
            let volume = cells.len() as i64;
            let formula = ball_volume_formula(r) as i64 + volume_offset;
            let holds = volume == formula && shell == sphere_size_formula(r);
            let example = (!holds).then(|| {
                format!(
                    "R={r}: |B_R|={volume} vs formula {formula}, |dB_R|={shell} vs formula {}",
                    sphere_size_formula(r)
                )
            });
            (volume as f64 / formula as f64, holds, example)
        })
        .collect();
    summarize("ball_formula", 0, outcomes)
}

/// `‖u‖_p` in root form, scaled by the maximum for stability.
pub fn lp_norm(u: &[f64], p: f64) -> f64 {
    let max = u.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    if max == 0.0 {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    for &x in u {
        acc.add(nonneg_pow(x.abs() / max, p));
    }
    max * acc.value().powf(1.0 / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpRecord {
    /// `‖u‖_q`.
    pub lhs: f64,
    /// `‖u‖_p`.
    pub rhs: f64,
    pub holds: bool,
}

/// `‖u‖_q ≤ ‖u‖_p` for `q ≥ p ≥ 1`, with absolute slack `1e-12`.
pub fn lp_monotonicity_check(u: &[f64], p: f64, q: f64) -> Result<LpRecord> {
    if !(p >= 1.0) || !(q >= p) || !q.is_finite() {
        return Err(Error::domain(format!("need q >= p >= 1, got p={p}, q={q}")));
    }
    let lhs = lp_norm(u, q);
    let rhs = lp_norm(u, p);
    Ok(LpRecord {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    })
}

/// Random vectors of 1..=64 values in `[0,1]`, `p ~ U[1,10]`, `q ~ U[p,10]`.
pub fn lp_suite(instances: usize, seed: u64) -> SuiteSummary {
    let outcomes = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(seed, i);
            let len = rng.gen_range(1..=64);
            let u: Vec<f64> = (0..len).map(|_| rng.gen::<f64>()).collect();
            let p = rng.gen_range(1.0..10.0);
            let q = rng.gen_range(p..=10.0);
            let rec = lp_monotonicity_check(&u, p, q).expect("valid exponents");
            let ratio = if rec.rhs > 0.0 {
                rec.lhs / rec.rhs
            } else {
                0.0
            };
            let example = (!rec.holds).then(|| format!("instance {i}: p={p}, q={q}, u={u:?}"));
            (ratio, rec.holds, example)
        })
        .collect();
    summarize("lp_monotonicity", seed, outcomes)
}

/// A point of `ℤᴺ`, `N ≤ 4`; unused trailing coordinates are zero.
pub type HlsPoint = [i64; 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HlsInstance {
    pub dim: usize,
    pub alpha: f64,
    pub r: f64,
    pub s: f64,
    pub kind: DistanceKind,
    pub f: Vec<(HlsPoint, f64)>,
    pub g: Vec<(HlsPoint, f64)>,
    pub seed: u64,
}

impl HlsInstance {
    /// `1/r + 1/s + (N-α)/N ≥ 2` with `N ∈ 2..=4`, `α ∈ (0,N)`, `r,s > 1`.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim as f64;
        if !(2..=4).contains(&self.dim) {
            return Err(Error::domain(format!(
                "dimension must be 2..=4, got {}",
                self.dim
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < n) {
            return Err(Error::domain(format!(
                "alpha must lie in (0, N), got {}",
                self.alpha
            )));
        }
        if !(self.r > 1.0 && self.s > 1.0) {
            return Err(Error::domain("exponents r, s must exceed 1"));
        }
        let lhs = 1.0 / self.r + 1.0 / self.s + (n - self.alpha) / n;
        if lhs < 2.0 - 1e-12 {
            return Err(Error::domain(format!(
                "inadmissible exponents: 1/r + 1/s + (N-alpha)/N = {lhs} < 2"
            )));
        }
        if self
            .f
            .iter()
            .chain(&self.g)
            .any(|&(_, v)| !(v >= 0.0) || !v.is_finite())
        {
            return Err(Error::domain("f and g must be finite and nonnegative"));
        }
        Ok(())
    }

    fn distance(&self, x: &HlsPoint, y: &HlsPoint) -> f64 {
        let d = (0..self.dim).map(|i| (x[i] - y[i]) as f64);
        match self.kind {
            DistanceKind::Graph => d.map(f64::abs).sum(),
            DistanceKind::Euclidean => d.map(|t| t * t).sum::<f64>().sqrt(),
        }
    }
}

/// `Σ_{x≠y} f(x)g(y)/|x-y|^{N-α} / (‖f‖_r ‖g‖_s)`; zero when either norm vanishes.
pub fn hls_ratio(inst: &HlsInstance) -> Result<f64> {
    inst.validate()?;
    let power = inst.dim as f64 - inst.alpha;
    let mut acc = CompensatedSum::new();
    for (x, fx) in &inst.f {
        for (y, gy) in &inst.g {
            if x != y {
                acc.add(fx * gy / inst.distance(x, y).powf(power));
            }
        }
    }
    let fv: Vec<f64> = inst.f.iter().map(|&(_, v)| v).collect();
    let gv: Vec<f64> = inst.g.iter().map(|&(_, v)| v).collect();
    let denom = lp_norm(&fv, inst.r) * lp_norm(&gv, inst.s);
    Ok(if denom > 0.0 {
        acc.value() / denom
    } else {
        0.0
    })
}

const HLS_WINDOW: i64 = 6;
const HLS_MAX_SUPPORT: usize = 16;

fn random_support(rng: &mut ChaCha8Rng) -> Vec<(HlsPoint, f64)> {
    let len = rng.gen_range(1..=HLS_MAX_SUPPORT);
    let mut points: Vec<HlsPoint> = Vec::with_capacity(len);
    while points.len() < len {
        let p = [
            rng.gen_range(0..HLS_WINDOW),
            rng.gen_range(0..HLS_WINDOW),
            rng.gen_range(0..HLS_WINDOW),
            0,
        ];
        if !points.contains(&p) {
            points.push(p);
        }
    }
    points.into_iter().map(|p| (p, rng.gen::<f64>())).collect()
}

/// Random admissible instances with `N = 3`, `α = 2`: `1/r ~ U(2/3,1)`,
/// `1/s ~ U[5/3 - 1/r, 1)`, supports of 1..=16 distinct points in a 6³
/// window, values `U[0,1]`. The ratio is bounded if the inequality holds; the
/// suite counts non-finite ratios as violations and records the running max.
pub fn hls_suite(instances: usize, seed: u64, kind: DistanceKind) -> SuiteSummary {
    let outcomes = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(seed, i);
            let inv_r = rng.gen_range(2.0 / 3.0..1.0);
            let inv_s = rng.gen_range(5.0 / 3.0 - inv_r..1.0);
            let inst = HlsInstance {
                dim: 3,
                alpha: 2.0,
                r: 1.0 / inv_r,
                s: 1.0 / inv_s,
                kind,
                f: random_support(&mut rng),
                g: random_support(&mut rng),
                seed,
            };
            match hls_ratio(&inst) {
                Ok(ratio) if ratio.is_finite() => (ratio, true, None),
                Ok(ratio) => (0.0, false, Some(format!("instance {i}: ratio {ratio}"))),
                Err(e) => (0.0, false, Some(format!("instance {i}: {e}"))),
            }
        })
        .collect();
    summarize(&format!("hls_{kind}"), seed, outcomes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationRecord {
    pub e_full: f64,
    pub e_truncated: f64,
    pub f_sum_full: f64,
    pub f_sum_truncated: f64,
    pub kinetic_full: f64,
    pub kinetic_truncated: f64,
    pub coulomb_full: f64,
    pub coulomb_truncated: f64,
    /// Largest ratio `|∇φ₁|²(x)/|∇φ|²(x)` over the box and its outer layer.
    pub max_gradient_ratio: f64,
    pub cap_binds: bool,
    pub holds: bool,
}

/// Cap `φ` at `(4/5)^{3/2}` and compare the three energy pieces.
pub fn truncation_comparison(phi: &FieldGrid, kind: DistanceKind) -> Result<TruncationRecord> {
    let capped = FieldGrid::new(phi.grid().map(|v| v.min(PHI_CAP)))?;
    let cap_binds = phi.values().iter().any(|&v| v > PHI_CAP);
    let (tf, dirac) = local_terms(phi.values());
    let (tf1, dirac1) = local_terms(capped.values());
    let f_sum_full = tf - dirac;
    let f_sum_truncated = tf1 - dirac1;
    let kinetic_full = kinetic_energy(phi.grid());
    let kinetic_truncated = kinetic_energy(capped.grid());
    let coulomb_full = pairing_direct(&phi.density(), &phi.density(), kind)?;
    let coulomb_truncated = pairing_direct(&capped.density(), &capped.density(), kind)?;
    let domain = phi.grid().domain();
    let outer = BoxDomain::new(
        domain.lo() - LatticePoint::new(1, 1, 1),
        domain.hi() + LatticePoint::new(1, 1, 1),
    )?;
    let mut max_gradient_ratio = 0.0f64;
    let mut pointwise = true;
    for p in outer.points() {
        let full = graph_gradient_sq(phi.grid(), p);
        let cut = graph_gradient_sq(capped.grid(), p);
        pointwise &= cut <= full;
        if full > 0.0 {
            max_gradient_ratio = max_gradient_ratio.max(cut / full);
        }
    }
    let le = |a: f64, b: f64| a <= b + 1e-12 * b.abs().max(1.0);
    let strict_f = !cap_binds || f_sum_truncated < f_sum_full;
    let holds = pointwise
        && strict_f
        && le(f_sum_truncated, f_sum_full)
        && le(kinetic_truncated, kinetic_full)
        && le(coulomb_truncated, coulomb_full);
    Ok(TruncationRecord {
        e_full: energy(phi, kind)?.total,
        e_truncated: energy(&capped, kind)?.total,
        f_sum_full,
        f_sum_truncated,
        kinetic_full,
        kinetic_truncated,
        coulomb_full,
        coulomb_truncated,
        max_gradient_ratio,
        cap_binds,
        holds,
    })
}

/// Random fields on a 4³ box: each cell independently exceeds the cap with
/// probability 1/10 (value `U(cap, 1.5 cap]`), otherwise `U[0, cap]`.
/// The recorded ratio is the largest of kinetic and Coulomb truncated/full.
pub fn truncation_suite(instances: usize, seed: u64, kind: DistanceKind) -> SuiteSummary {
    let domain = BoxDomain::with_dims(LatticePoint::ORIGIN, [4, 4, 4]).expect("valid box");
    let outcomes = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(seed, i);
            let values: Vec<f64> = (0..domain.len())
                .map(|_| {
                    if rng.gen_bool(0.1) {
                        PHI_CAP * (1.0 + 0.5 * (1.0 - rng.gen::<f64>()))
                    } else {
                        PHI_CAP * rng.gen::<f64>()
                    }
                })
                .collect();
            let phi = FieldGrid::from_values(domain, values.clone()).expect("nonnegative field");
            match truncation_comparison(&phi, kind) {
                Ok(rec) => {
                    let ratio = (rec.kinetic_truncated / rec.kinetic_full)
                        .max(rec.coulomb_truncated / rec.coulomb_full);
                    let example =
                        (!rec.holds).then(|| format!("instance {i}: {rec:?}, values={values:?}"));
                    (ratio, rec.holds, example)
                }
                Err(e) => (0.0, false, Some(format!("instance {i}: {e}"))),
            }
        })
        .collect();
    summarize(&format!("truncation_{kind}"), seed, outcomes)
}

/// Sizes of the randomized suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteSizes {
    pub ball_radius: u64,
    pub lp: usize,
    pub hls: usize,
    pub truncation: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        Self {
            ball_radius: 30,
            lp: 100_000,
            hls: 100_000,
            truncation: 10_000,
        }
    }
}

/// Every check in order: ball formulas, ℓᵖ, HLS, truncation.
pub fn run_all(
    sizes: SuiteSizes,
    seed: u64,
    kind: DistanceKind,
    volume_offset: i64,
) -> Vec<SuiteSummary> {
    vec![
        ball_formula_check(sizes.ball_radius, volume_offset),
        lp_suite(sizes.lp, seed),
        hls_suite(sizes.hls, seed, kind),
        truncation_suite(sizes.truncation, seed, kind),
    ]
}

/// Field with a single atom of height `value` at the origin of a 3³ box.
pub fn atom_field(value: f64) -> Result<FieldGrid> {
    let domain = BoxDomain::cube(1);
    FieldGrid::from_fn(domain, |p| {
        if p == LatticePoint::ORIGIN {
            value
        } else {
            0.0
        }
    })
}
