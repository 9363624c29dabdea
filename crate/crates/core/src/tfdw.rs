//! The lattice TFDW energy
//! `E(φ) = Σ|∇φ|² + Σφ^{10/3} - Σφ^{8/3} + Σ_{x≠y} φ²(x)φ²(y)/|x-y|`
//! and its first variation.

use serde::{Deserialize, Serialize};

use crate::coulomb::CoulombPlan;
use crate::error::{Error, Result};
use crate::field::{kinetic_energy, FieldGrid, Grid};
use crate::lattice::{BoxDomain, DistanceKind};
use crate::numeric::{nonneg_pow, CompensatedSum};

/// Minimizer of [`f_local`], `(4/5)³`.
pub const F_ARGMIN: f64 = 0.512;
/// `min F = -(4/5)⁴/5`.
pub const F_MIN: f64 = -0.4096 / 5.0;
/// `(4/5)^{3/2}`, the pointwise bound on minimizers.
pub const PHI_CAP: f64 = 0.715_541_752_799_933;

/// `F(s) = s^{5/3} - s^{4/3}`.
pub fn f_local(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::domain(format!("F is defined for s >= 0, got {s}")));
    }
    Ok(nonneg_pow(s, 5.0 / 3.0) - nonneg_pow(s, 4.0 / 3.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    /// `Σ φ^{10/3}`
    pub tf_term: f64,
    /// `Σ φ^{8/3}`, entering with a minus sign.
    pub dirac_term: f64,
    pub coulomb: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn from_terms(kinetic: f64, tf_term: f64, dirac_term: f64, coulomb: f64) -> Self {
        Self {
            kinetic,
            tf_term,
            dirac_term,
            coulomb,
            total: kinetic + tf_term - dirac_term + coulomb,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.kinetic,
            self.tf_term,
            self.dirac_term,
            self.coulomb,
            self.total,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// `(Σ φ^{10/3}, Σ φ^{8/3})`.
pub fn local_terms(values: &[f64]) -> (f64, f64) {
    let mut tf = CompensatedSum::new();
    let mut dirac = CompensatedSum::new();
    for &v in values {
        let s = nonneg_pow(v, 2.0 / 3.0);
        let v2 = v * v;
        // v^{10/3} = v² · v^{4/3}, v^{8/3} = v² · v^{2/3}
        tf.add(v2 * s * s);
        dirac.add(v2 * s);
    }
    (tf.value(), dirac.value())
}

/// `Δφ = 6φ - Σ_{neighbours} φ` on the box, with φ zero outside.
pub fn laplacian_grid(grid: &Grid) -> Grid {
    let [n1, n2, n3] = grid.domain().dims();
    let v = grid.values();
    let mut out = vec![0.0; v.len()];
    let s1 = n2 * n3;
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                let c = (i * n2 + j) * n3 + k;
                let mut nb = 0.0;
                if i > 0 {
                    nb += v[c - s1];
                }
                if i + 1 < n1 {
                    nb += v[c + s1];
                }
                if j > 0 {
                    nb += v[c - n3];
                }
                if j + 1 < n2 {
                    nb += v[c + n3];
                }
                if k > 0 {
                    nb += v[c - 1];
                }
                if k + 1 < n3 {
                    nb += v[c + 1];
                }
                out[c] = 6.0 * v[c] - nb;
            }
        }
    }
    Grid::from_values(grid.domain(), out).expect("same length")
}

/// Energy together with the Coulomb potential `Φ` of `φ²` it was computed from.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub energy: EnergyBreakdown,
    pub potential: Grid,
}

/// Energy and gradient evaluator bound to one box and kernel; reuses its FFT plan.
#[derive(Debug)]
pub struct Functional {
    plan: CoulombPlan,
}

impl Functional {
    pub fn new(domain: BoxDomain, kind: DistanceKind) -> Result<Self> {
        Ok(Self {
            plan: CoulombPlan::new(domain, kind)?,
        })
    }

    pub fn domain(&self) -> BoxDomain {
        self.plan.domain()
    }

    pub fn kind(&self) -> DistanceKind {
        self.plan.kind()
    }

    fn check(&self, phi: &Grid) -> Result<()> {
        if phi.domain() != self.domain() {
            return Err(Error::domain(format!(
                "field box {} differs from functional box {}",
                phi.domain(),
                self.domain()
            )));
        }
        Ok(())
    }

    /// Energy of a field given by its raw (nonnegative) values.
    pub fn evaluate_grid(&self, phi: &Grid) -> Result<Evaluation> {
        self.check(phi)?;
        let rho = phi.map(|v| v * v);
        let potential = self.plan.potential(&rho)?;
        let coulomb = potential.dot(&rho);
        let kinetic = kinetic_energy(phi);
        let (tf, dirac) = local_terms(phi.values());
        Ok(Evaluation {
            energy: EnergyBreakdown::from_terms(kinetic, tf, dirac, coulomb),
            potential,
        })
    }

    pub fn evaluate(&self, phi: &FieldGrid) -> Result<Evaluation> {
        self.evaluate_grid(phi.grid())
    }

    pub fn energy(&self, phi: &FieldGrid) -> Result<EnergyBreakdown> {
        Ok(self.evaluate(phi)?.energy)
    }

    /// Gradient at `phi` given the potential of `phi²` from [`Self::evaluate`].
    pub fn gradient_with_potential(&self, phi: &Grid, potential: &Grid) -> Result<Grid> {
        self.check(phi)?;
        self.check(potential)?;
        let lap = laplacian_grid(phi);
        let values = phi
            .values()
            .iter()
            .zip(lap.values())
            .zip(potential.values())
            .map(|((&v, &l), &u)| {
                let s = nonneg_pow(v, 2.0 / 3.0);
                // v^{7/3} = v · v^{4/3}, v^{5/3} = v · v^{2/3}
                2.0 * l + (10.0 / 3.0) * v * s * s - (8.0 / 3.0) * v * s + 4.0 * v * u
            })
            .collect();
        Grid::from_values(phi.domain(), values)
    }

    pub fn gradient(&self, phi: &FieldGrid) -> Result<Grid> {
        let eval = self.evaluate(phi)?;
        self.gradient_with_potential(phi.grid(), &eval.potential)
    }
}

/// All four terms of the energy; the Coulomb term counts ordered pairs.
pub fn energy(phi: &FieldGrid, kind: DistanceKind) -> Result<EnergyBreakdown> {
    Functional::new(phi.domain(), kind)?.energy(phi)
}

/// Unconstrained first variation
/// `g = 2Δφ + (10/3)φ^{7/3} - (8/3)φ^{5/3} + 4φΦ`, `Φ` the potential of `φ²`.
pub fn el_gradient(phi: &FieldGrid, kind: DistanceKind) -> Result<Grid> {
    Functional::new(phi.domain(), kind)?.gradient(phi)
}

/// `‖g - (⟨g,φ⟩/m) φ‖₂`: the part of `g` tangent to the sphere `Σφ² = m`.
pub fn constrained_residual(phi: &FieldGrid, g: &Grid) -> Result<f64> {
    tangent_residual(phi.grid(), phi.mass(), g)
}

pub(crate) fn tangent_residual(phi: &Grid, mass: f64, g: &Grid) -> Result<f64> {
    if !(mass > 0.0) {
        return Err(Error::domain("constrained residual needs positive mass"));
    }
    if phi.domain() != g.domain() {
        return Err(Error::domain("gradient and field live on different boxes"));
    }
    let lambda = g.dot(phi) / mass;
    let mut acc = CompensatedSum::new();
    for (&gv, &pv) in g.values().iter().zip(phi.values()) {
        let r = gv - lambda * pv;
        acc.add(r * r);
    }
    Ok(acc.value().max(0.0).sqrt())
}
