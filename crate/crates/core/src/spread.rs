//! The cone family `ψ_n(x) = (n - ℓ + 1) d` for `ℓ = |x|₁ <= n`, normalized so
//! that `Σ ψ_n² = excess_mass`, and the sequences that control its energy.
//!
//! Every term of `E(ψ_n)` tends to zero as `n` grows: spreading a fixed amount
//! of mass costs nothing in the limit.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::coulomb::{octant_multiplicity, EvenOctantPlan};
use crate::error::{Error, Result};
use crate::field::FieldGrid;
use crate::lattice::{sphere_size_formula, BoxDomain, DistanceKind, LatticePoint};
use crate::numeric::{nonneg_pow, CompensatedSum};
use crate::tfdw::EnergyBreakdown;

pub type Rational = Ratio<i128>;

fn check_index(n: u64) -> Result<()> {
    if n < 1 {
        return Err(Error::domain("sequence index n must be >= 1"));
    }
    Ok(())
}

/// `a_n = ⅔(2n³ + 9n² + 16n + 9)`.
pub fn seq_a(n: u64) -> Result<Rational> {
    check_index(n)?;
    let n = n as i128;
    Ok(Rational::new(
        2 * (2 * n.pow(3) + 9 * n * n + 16 * n + 9),
        3,
    ))
}

/// `a_n` as the sum `Σ_{ℓ=1}^{n+1} (4ℓ² + 2)`.
pub fn seq_a_direct(n: u64) -> Result<Rational> {
    check_index(n)?;
    Ok(Rational::from_integer(
        (1..=n as i128 + 1).map(|l| 4 * l * l + 2).sum(),
    ))
}

/// `b_n = (2n⁵ + 10n⁴ + 30n³ + 50n² + 43n + 15)/15`.
pub fn seq_b(n: u64) -> Result<Rational> {
    check_index(n)?;
    let n = n as i128;
    Ok(Rational::new(
        2 * n.pow(5) + 10 * n.pow(4) + 30 * n.pow(3) + 50 * n * n + 43 * n + 15,
        15,
    ))
}

/// `b_n` as the sum `Σ_{ℓ=1}^{n} (n-ℓ+1)²(4ℓ²+2) + (n+1)²`, which is `Σ ψ_n² / d²`.
pub fn seq_b_direct(n: u64) -> Result<Rational> {
    check_index(n)?;
    let n = n as i128;
    let shells: i128 = (1..=n).map(|l| (n - l + 1).pow(2) * (4 * l * l + 2)).sum();
    Ok(Rational::from_integer(shells + (n + 1).pow(2)))
}

fn weighted_shell_sum(n: u64, exponent: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for l in 1..=n {
        let w = (n - l + 1) as f64;
        acc.add(w * w * ((4 * l * l + 2) as f64).powf(exponent));
    }
    acc.value()
}

/// `c_n = Σ_{ℓ=1}^{n} (n-ℓ+1)² (4ℓ²+2)^{3/5}`.
pub fn seq_c(n: u64) -> Result<f64> {
    check_index(n)?;
    Ok(weighted_shell_sum(n, 0.6))
}

/// `⅓(n+1)³(4n²+2)^{3/5} >= c_n`.
pub fn seq_c_bound(n: u64) -> Result<f64> {
    check_index(n)?;
    let m = n as f64;
    Ok((m + 1.0).powi(3) / 3.0 * (4.0 * m * m + 2.0).powf(0.6))
}

/// `d_n = (n+1)²`.
pub fn seq_d(n: u64) -> Result<u64> {
    check_index(n)?;
    Ok((n + 1) * (n + 1))
}

/// `e_n = Σ_{ℓ=1}^{n} (n-ℓ+1)² (4ℓ²+2)^{5/6}`.
pub fn seq_e(n: u64) -> Result<f64> {
    check_index(n)?;
    Ok(weighted_shell_sum(n, 5.0 / 6.0))
}

/// `⅓(n+1)³(4n²+2)^{5/6} >= e_n`.
pub fn seq_e_bound(n: u64) -> Result<f64> {
    check_index(n)?;
    let m = n as f64;
    Ok((m + 1.0).powi(3) / 3.0 * (4.0 * m * m + 2.0).powf(5.0 / 6.0))
}

fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadFamilyParams {
    n: u64,
    excess_mass: f64,
    d: f64,
}

impl SpreadFamilyParams {
    pub fn new(n: u64, excess_mass: f64) -> Result<Self> {
        check_index(n)?;
        if !(excess_mass > 0.0) || !excess_mass.is_finite() {
            return Err(Error::domain(format!(
                "excess mass must be positive and finite, got {excess_mass}"
            )));
        }
        let b = to_f64(seq_b(n)?);
        Ok(Self {
            n,
            excess_mass,
            d: (excess_mass / b).sqrt(),
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn excess_mass(&self) -> f64 {
        self.excess_mass
    }

    /// Cone slope `d`, with `d² b_n = excess_mass`.
    pub fn d(&self) -> f64 {
        self.d
    }

    /// `ψ_n` at graph distance `l` from the origin.
    pub fn value_at_distance(&self, l: u64) -> f64 {
        if l > self.n {
            0.0
        } else {
            (self.n - l + 1) as f64 * self.d
        }
    }

    pub fn value(&self, p: LatticePoint) -> f64 {
        self.value_at_distance(p.norm1())
    }
}

/// `ψ_n` on `domain`, which must contain the ball of radius `n + 1`.
pub fn build_psi(params: &SpreadFamilyParams, domain: BoxDomain) -> Result<FieldGrid> {
    let r = params.n as i64 + 1;
    let extremes = [
        LatticePoint::new(r, 0, 0),
        LatticePoint::new(-r, 0, 0),
        LatticePoint::new(0, r, 0),
        LatticePoint::new(0, -r, 0),
        LatticePoint::new(0, 0, r),
        LatticePoint::new(0, 0, -r),
    ];
    if let Some(p) = extremes.iter().find(|p| !domain.contains(**p)) {
        return Err(Error::Sizing {
            dims: domain.dims().to_vec(),
            reason: format!("box {domain} misses {p} of the ball of radius {r}"),
        });
    }
    FieldGrid::from_fn(domain, |p| params.value(p))
}

/// `ψ_n` on the smallest cube holding the ball of radius `n + 1`.
pub fn build_psi_default(params: &SpreadFamilyParams) -> Result<FieldGrid> {
    build_psi(params, BoxDomain::cube(params.n + 1))
}

/// Energy of `ψ_n` using its symmetry: local terms shell by shell, the kinetic
/// term over one octant, and the Coulomb term by even DCT-I convolution.
pub fn psi_energy(params: &SpreadFamilyParams, kind: DistanceKind) -> Result<EnergyBreakdown> {
    let n = params.n;
    let mut tf = CompensatedSum::new();
    let mut dirac = CompensatedSum::new();
    for l in 0..=n {
        let v = params.value_at_distance(l);
        let count = sphere_size_formula(l) as f64;
        tf.add(count * nonneg_pow(v, 10.0 / 3.0));
        dirac.add(count * nonneg_pow(v, 8.0 / 3.0));
    }

    // Γ(x) summed over Z³; only points with ℓ <= n + 1 touch the support.
    let mut kinetic = CompensatedSum::new();
    let r = n as i64 + 1;
    for a in 0..=r {
        for b in 0..=(r - a) {
            for c in 0..=(r - a - b) {
                let p = LatticePoint::new(a, b, c);
                let centre = params.value(p);
                let gamma: f64 = p
                    .neighbors()
                    .iter()
                    .map(|&q| {
                        let diff = params.value(q) - centre;
                        diff * diff
                    })
                    .sum::<f64>()
                    * 0.5;
                kinetic.add(octant_multiplicity(p) as f64 * gamma);
            }
        }
    }

    let support = n as usize;
    let plan = EvenOctantPlan::new([support; 3], kind)?;
    let rho: Vec<f64> = (0..plan.octant_len())
        .map(|i| {
            let v = params.value(plan.point_at(i));
            v * v
        })
        .collect();
    let phi = plan.potential(&rho)?;
    let mut coulomb = CompensatedSum::new();
    for (i, (&r, &u)) in rho.iter().zip(&phi).enumerate() {
        if r != 0.0 {
            coulomb.add(octant_multiplicity(plan.point_at(i)) as f64 * r * u);
        }
    }

    Ok(EnergyBreakdown::from_terms(
        kinetic.value(),
        tf.value(),
        dirac.value(),
        coulomb.value(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiEnergyRow {
    pub n: u64,
    pub kinetic: f64,
    pub tf: f64,
    pub dirac: f64,
    pub coulomb: f64,
    pub total: f64,
    pub a_over_b: f64,
    pub e_over_b: f64,
}

impl PsiEnergyRow {
    fn terms(&self) -> [(&'static str, f64); 4] {
        [
            ("kinetic", self.kinetic),
            ("tf", self.tf),
            ("dirac", self.dirac),
            ("coulomb", self.coulomb),
        ]
    }
}

/// A decay check that failed, naming the term and index.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayViolation {
    pub n: u64,
    pub term: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiEnergyReport {
    pub excess_mass: f64,
    pub kind: DistanceKind,
    pub rows: Vec<PsiEnergyRow>,
}

pub const PSI_CSV_HEADER: [&str; 8] = [
    "n", "kinetic", "tf", "dirac", "coulomb", "total", "a_over_b", "e_over_b",
];

impl PsiEnergyReport {
    /// Strict decrease of every term from `n = 3` on.
    pub fn monotonicity_violations(&self) -> Vec<DecayViolation> {
        let mut out = Vec::new();
        for pair in self.rows.windows(2) {
            let (prev, cur) = (&pair[0], &pair[1]);
            if cur.n < 3 {
                continue;
            }
            for ((term, a), (_, b)) in prev.terms().iter().zip(cur.terms().iter()) {
                if !(b < a) {
                    out.push(DecayViolation {
                        n: cur.n,
                        term,
                        reason: format!(
                            "{term}({}) = {b:e} is not below {term}({}) = {a:e}",
                            cur.n, prev.n
                        ),
                    });
                }
            }
        }
        out
    }

    /// Terms at the last row that are not below `fraction` of their value at `n = 1`.
    pub fn residual_violations(&self, fraction: f64) -> Vec<DecayViolation> {
        let (Some(first), Some(last)) = (self.rows.first(), self.rows.last()) else {
            return Vec::new();
        };
        first
            .terms()
            .iter()
            .zip(last.terms().iter())
            .filter(|((_, a), (_, b))| !(*b < fraction * *a))
            .map(|((term, a), (_, b))| DecayViolation {
                n: last.n,
                term,
                reason: format!("{term}({}) = {b:e} is not below {fraction} x {a:e}", last.n),
            })
            .collect()
    }

    /// Rows of the table as CSV records in [`PSI_CSV_HEADER`] order.
    pub fn csv_records(&self) -> Vec<[String; 8]> {
        self.rows
            .iter()
            .map(|r| {
                [
                    r.n.to_string(),
                    format!("{:e}", r.kinetic),
                    format!("{:e}", r.tf),
                    format!("{:e}", r.dirac),
                    format!("{:e}", r.coulomb),
                    format!("{:e}", r.total),
                    format!("{:e}", r.a_over_b),
                    format!("{:e}", r.e_over_b),
                ]
            })
            .collect()
    }
}

/// Energy of `ψ_n` for `n = 1..=n_max` at fixed excess mass.
pub fn psi_energy_report(
    n_max: u64,
    excess_mass: f64,
    kind: DistanceKind,
) -> Result<PsiEnergyReport> {
    if n_max < 1 {
        return Err(Error::domain("n_max must be >= 1"));
    }
    let mut rows = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let params = SpreadFamilyParams::new(n, excess_mass)?;
        let e = psi_energy(&params, kind)?;
        let b = to_f64(seq_b(n)?);
        rows.push(PsiEnergyRow {
            n,
            kinetic: e.kinetic,
            tf: e.tf_term,
            dirac: e.dirac_term,
            coulomb: e.coulomb,
            total: e.total,
            a_over_b: to_f64(seq_a(n)?) / b,
            e_over_b: seq_e(n)? / b,
        });
    }
    Ok(PsiEnergyReport {
        excess_mass,
        kind,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ball_volume_formula;
    use crate::tfdw::energy;

    #[test]
    fn small_sequence_values() {
        assert_eq!(seq_a(1).unwrap(), Rational::from_integer(24));
        assert_eq!(seq_b(1).unwrap(), Rational::from_integer(10));
        assert_eq!(seq_b(2).unwrap(), Rational::from_integer(51));
        assert_eq!(seq_b_direct(2).unwrap(), Rational::from_integer(51));
        assert_eq!(seq_d(3).unwrap(), 16);
        assert!(seq_a(0).is_err());
        assert!(seq_c(0).is_err());
    }

    #[test]
    fn closed_forms_are_integers() {
        for n in 1..=50 {
            assert!(seq_a(n).unwrap().is_integer());
            assert!(seq_b(n).unwrap().is_integer());
        }
    }

    #[test]
    fn c_and_e_below_bounds() {
        for n in 1..=200 {
            assert!(seq_c(n).unwrap() <= seq_c_bound(n).unwrap());
            assert!(seq_e(n).unwrap() <= seq_e_bound(n).unwrap());
        }
    }

    #[test]
    fn psi_one_values() {
        let p = SpreadFamilyParams::new(1, 10.0).unwrap();
        assert!((p.d() - 1.0).abs() < 1e-15);
        let psi = build_psi_default(&p).unwrap();
        assert!((psi.get(LatticePoint::ORIGIN) - 2.0).abs() < 1e-15);
        assert!((psi.get(LatticePoint::E3) - 1.0).abs() < 1e-15);
        assert!((psi.mass() - 10.0).abs() < 1e-12);
        let e = energy(&psi, DistanceKind::Euclidean).unwrap();
        assert!((e.kinetic - 36.0).abs() < 1e-12);
    }

    #[test]
    fn psi_two_values() {
        let p = SpreadFamilyParams::new(2, 51.0).unwrap();
        let psi = build_psi_default(&p).unwrap();
        for (pt, v) in [
            (LatticePoint::ORIGIN, 3.0),
            (LatticePoint::E1, 2.0),
            (LatticePoint::new(1, -1, 0), 1.0),
            (LatticePoint::new(0, 0, 3), 0.0),
        ] {
            assert!((psi.get(pt) - v).abs() < 1e-14);
        }
        let support = psi.values().iter().filter(|&&v| v > 0.0).count() as u64;
        assert_eq!(support, ball_volume_formula(2));
    }

    #[test]
    fn build_rejects_small_box() {
        let p = SpreadFamilyParams::new(3, 1.0).unwrap();
        assert!(matches!(
            build_psi(&p, BoxDomain::cube(3)),
            Err(Error::Sizing { .. })
        ));
        assert!(SpreadFamilyParams::new(3, 0.0).is_err());
    }

    #[test]
    fn symmetric_energy_matches_grid_energy() {
        for kind in DistanceKind::ALL {
            for n in [1u64, 2, 5, 8] {
                let p = SpreadFamilyParams::new(n, 3.0).unwrap();
                let fast = psi_energy(&p, kind).unwrap();
                let grid = energy(&build_psi_default(&p).unwrap(), kind).unwrap();
                for (a, b) in [
                    (fast.kinetic, grid.kinetic),
                    (fast.tf_term, grid.tf_term),
                    (fast.dirac_term, grid.dirac_term),
                    (fast.coulomb, grid.coulomb),
                ] {
                    assert!(
                        (a - b).abs() <= 1e-11 * b.abs().max(1e-300),
                        "n={n}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn short_report_has_no_trend_failures() {
        let r = psi_energy_report(2, 10.0, DistanceKind::Euclidean).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.monotonicity_violations().is_empty());
    }
}
