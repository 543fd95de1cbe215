//! Functionals, balance-law residuals, inequality checks and decay fits.

mod checks;
mod functionals;
mod potential;
mod record;
mod series;

pub use checks::{
    default_sigma, dissipation_domination_check, energy_density_e0, equivalence_check,
    jc_bounds_check, sigma_max, DissipationDomination, EnergyDensity, Equivalence, JcBounds,
};
pub use functionals::{
    averages, dissipation, evaluate, interacting_energy, lyapunov, total_energy,
    AlignmentSample, Averages, BalanceTerms, Evaluation, Functionals, InteractingEnergy, Lyapunov,
};
pub use potential::{
    excess_pressure, pressure_potential, pressure_potential_bounds,
    pressure_potential_quadrature, PotentialBounds, BOUNDS_SCAN_POINTS,
};
pub use record::{
    alignment_target, identity_residuals, DiagnosticsContext, DiagnosticsRecord, Flag,
    IdentityResiduals, Totals,
};
pub use series::{
    alignment_check, characteristic_lower_bound_check, decay_fit, fit_exponential,
    AlignmentSeries, CharacteristicBound, DecayFit, Series, DEFAULT_TRANSIENT_FRACTION,
    MIN_FIT_SAMPLES,
};
