//! Lattice Thomas-Fermi-Dirac-von Weizsäcker energy on ℤ³: the functional,
//! its Coulomb term, spreading test functions, a mass-constrained minimizer,
//! the lattice liquid-drop model and inequality checks.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coulomb;
pub mod error;
pub mod field;
pub mod lattice;
pub mod liquid_drop;
pub mod minimizer;
pub mod numeric;
pub mod spread;
pub mod tfdw;
pub mod verify;

pub use coulomb::{
    pairing, pairing_direct, potential_direct, potential_fast, CoulombPlan, EvenOctantPlan,
};
pub use error::{Error, Result};
pub use field::{kinetic_energy, DensityGrid, FieldGrid, Grid};
pub use lattice::{ball, sphere, BoxDomain, DistanceKind, LatticePoint};
pub use liquid_drop::{
    drop_energy, exact_enumeration_oracle, minimize_drop, scaling_study, DropEnergy, DropSet,
    Schedule, SearchOptions, SwapMove,
};
pub use minimizer::{
    concentration_radius, mass_growth_check, minimize, splitting_advantage, subadditivity_scan,
    InitKind, MinimizeConfig, MinimizeReport, Termination,
};
pub use spread::{psi_energy, psi_energy_report, SpreadFamilyParams};
pub use tfdw::{constrained_residual, el_gradient, energy, f_local, EnergyBreakdown, Functional};
pub use verify::{
    hls_ratio, lp_monotonicity_check, truncation_comparison, HlsInstance, SuiteSummary,
};
