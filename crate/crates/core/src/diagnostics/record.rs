use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::checks::default_sigma;
use super::functionals::{
    averages, evaluate, total_energy, AlignmentSample, Averages, BalanceTerms, Evaluation,
    Functionals,
};
use crate::dynamics::{FluidParams, State};
use crate::error::{Error, Result};
use crate::spectral::bogovskii_constant;

/// Conditions attached to a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Flag {
    FloorActive,
    VacuumBreach,
    FluidVacuumBreach,
    Blowup,
    GradientSteepening,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Flag::FloorActive => "floor_active",
            Flag::VacuumBreach => "vacuum_breach",
            Flag::FluidVacuumBreach => "fluid_vacuum_breach",
            Flag::Blowup => "blowup",
            Flag::GradientSteepening => "gradient_steepening",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Flag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "floor_active" => Flag::FloorActive,
            "vacuum_breach" => Flag::VacuumBreach,
            "fluid_vacuum_breach" => Flag::FluidVacuumBreach,
            "blowup" => Flag::Blowup,
            "gradient_steepening" => Flag::GradientSteepening,
            _ => return Err(Error::InvalidState(format!("unknown flag {s:?}"))),
        })
    }
}

/// Conserved totals (grid means).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub mass_rho: f64,
    pub mass_n: f64,
    pub momentum: Vec<f64>,
}

/// Per-unit-time residuals of the balance laws over one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    pub mass_rho: f64,
    pub mass_n: f64,
    /// Largest component of the momentum drift rate.
    pub momentum: f64,
    pub energy_balance: f64,
    pub esigma_balance: f64,
    pub asym_i: f64,
    pub asym_ii: f64,
    pub asym_iii: f64,
    /// `𝓓` at the midpoint, for normalizing `energy_balance`.
    pub dissipation_mid: f64,
    /// `𝓓^σ` at the midpoint, for normalizing `esigma_balance`.
    pub dsigma_mid: f64,
}

/// Centered residuals from the states at `t`, `t + dt` and the midpoint.
pub fn identity_residuals(
    start: &BalanceTerms,
    end: &BalanceTerms,
    mid: &BalanceTerms,
    dt: f64,
) -> IdentityResiduals {
    let half_rate = |a: f64, b: f64| 0.5 * (b - a) / dt;
    let momentum = start
        .momentum
        .iter()
        .zip(&end.momentum)
        .map(|(a, b)| ((b - a) / dt).abs())
        .fold(0.0, f64::max);
    let asym = |i: usize| half_rate(start.asym_value[i], end.asym_value[i]) + mid.asym_rate[i];
    IdentityResiduals {
        mass_rho: (end.mass_rho - start.mass_rho) / dt,
        mass_n: (end.mass_n - start.mass_n) / dt,
        momentum,
        energy_balance: half_rate(start.energy_excess, end.energy_excess) + mid.dissipation,
        esigma_balance: half_rate(start.e_sigma, end.e_sigma) + mid.d_sigma,
        asym_i: asym(0),
        asym_ii: asym(1),
        asym_iii: asym(2),
        dissipation_mid: mid.dissipation,
        dsigma_mid: mid.d_sigma,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub averages: Averages,
    pub functionals: Functionals,
    pub totals: Totals,
    pub identity_residuals: IdentityResiduals,
    pub sigma_terms: [f64; 10],
    pub alignment: AlignmentSample,
    pub flags: BTreeSet<Flag>,
}

impl DiagnosticsRecord {
    pub fn from_evaluation(t: f64, ev: Evaluation, residuals: IdentityResiduals) -> Self {
        let mut flags = BTreeSet::new();
        if ev.floor_active {
            flags.insert(Flag::FloorActive);
        }
        Self {
            t,
            totals: Totals {
                mass_rho: ev.balance.mass_rho,
                mass_n: ev.balance.mass_n,
                momentum: ev.balance.momentum,
            },
            averages: ev.averages,
            functionals: ev.functionals,
            identity_residuals: residuals,
            sigma_terms: ev.sigma_terms,
            alignment: ev.alignment,
            flags,
        }
    }
}

/// Run-wide constants fixed at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsContext {
    pub params: FluidParams,
    pub sigma: f64,
    pub c_star: f64,
    pub floor: f64,
    /// `E(0)`.
    pub e0: f64,
    pub initial: Averages,
    /// Common velocity both phases are expected to align to.
    pub alignment_target: Vec<f64>,
}

impl DiagnosticsContext {
    pub fn new(
        initial: &State,
        params: &FluidParams,
        sigma_override: Option<f64>,
        floor: f64,
    ) -> Result<Self> {
        let c_star = bogovskii_constant(initial.grid());
        let sigma = match sigma_override {
            Some(s) if s >= 0.0 && s.is_finite() => s,
            Some(s) => return Err(Error::InvalidParams(format!("sigma must be >= 0, got {s}"))),
            None => default_sigma(initial, params, c_star),
        };
        let avg = averages(initial)?;
        Ok(Self {
            params: *params,
            sigma,
            c_star,
            floor,
            e0: total_energy(initial, params)?,
            alignment_target: alignment_target(&avg),
            initial: avg,
        })
    }

    pub fn evaluate(&self, state: &State) -> Result<Evaluation> {
        evaluate(state, &self.params, self.sigma, self.floor, &self.alignment_target)
    }
}

/// `(ρ_c m_c + j_c)/(1 + ρ_c)`, the momentum-weighted common velocity.
pub fn alignment_target(avg: &Averages) -> Vec<f64> {
    avg.m_c
        .iter()
        .zip(&avg.j_c)
        .map(|(m, j)| (avg.rho_c * m + j) / (1.0 + avg.rho_c))
        .collect()
}
