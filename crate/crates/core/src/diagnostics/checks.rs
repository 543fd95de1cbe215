//! Inequalities with explicit constants, evaluated on a single state.

use serde::{Deserialize, Serialize};

use super::functionals::{averages, dissipation, interacting_energy, lyapunov};
use super::potential::{excess_pressure, pressure_potential_bounds};
use crate::dynamics::{FluidParams, State, DEFAULT_VACUUM_FLOOR};
use crate::error::{Error, Result};

/// Relative slack granted to inequalities for round-off.
const REL_TOL: f64 = 1e-10;

/// Largest `n+1` on the grid.
fn n_bar(state: &State) -> f64 {
    1.0 + state.n.max()
}

/// Pressure comparison constants over `[0, max(n̄, 1)]`.
fn pressure_bounds(state: &State, gamma: f64) -> (f64, f64) {
    let r_bar = n_bar(state).max(1.0 + 1e-6);
    let b = pressure_potential_bounds(1.0, r_bar, gamma);
    (b.c1, b.c2)
}

/// Largest σ keeping the lower equivalence constant positive:
/// `min(1/n̄, 2C₁/C*)`.
pub fn sigma_max(state: &State, params: &FluidParams, c_star: f64) -> f64 {
    let (c1, _) = pressure_bounds(state, params.gamma);
    (1.0 / n_bar(state)).min(2.0 * c1 / c_star)
}

/// Default σ: `min(0.01, ½σ_max)`.
pub fn default_sigma(state: &State, params: &FluidParams, c_star: f64) -> f64 {
    0.01f64.min(0.5 * sigma_max(state, params, c_star))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JcBounds {
    pub ok: bool,
    /// `E₀ − |j_c|²`.
    pub slack_jc: f64,
    /// `ρ_c∫ρ|u−v|² − |j_c'|²`.
    pub slack_jc_rate: f64,
}

/// `|j_c|² ≤ E₀` and `|j_c'|² ≤ ρ_c∫ρ|u−v|²`.
pub fn jc_bounds_check(state: &State, params: &FluidParams, e0: f64) -> Result<JcBounds> {
    let avg = averages(state)?;
    let u = state.particle_velocity(DEFAULT_VACUUM_FLOOR).velocity;
    let v = state.fluid_velocity()?;
    let rho = state.rho.values();
    let len = rho.len() as f64;
    let drag = if params.drag_on { 1.0 } else { 0.0 };
    let mut rate = vec![0.0; u.dim()];
    let mut drag_sq = 0.0;
    for (c, r) in rate.iter_mut().enumerate() {
        let (uc, vc) = (u.component(c).values(), v.component(c).values());
        for i in 0..rho.len() {
            let w = uc[i] - vc[i];
            *r += rho[i] * w;
            drag_sq += rho[i] * w * w;
        }
        *r *= drag / len;
    }
    drag_sq *= drag / len;
    let jc_sq: f64 = avg.j_c.iter().map(|x| x * x).sum();
    let rate_sq: f64 = rate.iter().map(|x| x * x).sum();
    let slack_jc = e0 - jc_sq;
    let slack_jc_rate = avg.rho_c * drag_sq - rate_sq;
    let tol = |scale: f64| -REL_TOL * scale.abs().max(1.0);
    Ok(JcBounds {
        ok: slack_jc >= tol(e0) && slack_jc_rate >= tol(avg.rho_c * drag_sq),
        slack_jc,
        slack_jc_rate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationDomination {
    pub c_explicit: f64,
    pub l_p: f64,
    pub d: f64,
    pub ok: bool,
}

/// `𝓛_p ≤ C𝓓` with `C = 2/min(1,ρ_c) · max(1, 2c_p(3(ρ_c n̄ + ρ̄) + n̄)/μ')`,
/// `c_p = 1` and `μ' = min(μ, 2μ+λ)`, the coercivity constant of the
/// viscous part.
pub fn dissipation_domination_check(
    state: &State,
    params: &FluidParams,
) -> Result<DissipationDomination> {
    let avg = averages(state)?;
    let nb = n_bar(state);
    let rb = state.rho.max();
    let mu_eff = params.mu.min(params.longitudinal_viscosity());
    let c_p = 1.0;
    let c_explicit = 2.0 / avg.rho_c.min(1.0)
        * 1f64.max(2.0 * c_p * (3.0 * (avg.rho_c * nb + rb) + nb) / mu_eff);
    let l_p = lyapunov(state, params)?.l_p;
    let d = dissipation(state, params)?;
    Ok(DissipationDomination {
        c_explicit,
        l_p,
        d,
        ok: l_p <= c_explicit * d * (1.0 + REL_TOL) + 1e-300,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equivalence {
    pub c1: f64,
    pub c2: f64,
    pub l: f64,
    pub e_sigma: f64,
    pub ok: bool,
}

/// `c₁𝓛 ≤ 𝓔^σ ≤ c₂𝓛` with
/// `c₁ = min{1−σn̄, ρ_c/(ρ_c+1), 2C₁−σC*}` and
/// `c₂ = max{1+σn̄, ρ_c/(ρ_c+1), 2C₂+σC*}`.
pub fn equivalence_check(
    state: &State,
    params: &FluidParams,
    sigma: f64,
    c_star: f64,
) -> Result<Equivalence> {
    let avg = averages(state)?;
    let nb = n_bar(state);
    let (p1, p2) = pressure_bounds(state, params.gamma);
    let w = avg.rho_c / (avg.rho_c + 1.0);
    let c1 = (1.0 - sigma * nb).min(w).min(2.0 * p1 - sigma * c_star);
    let c2 = (1.0 + sigma * nb).max(w).max(2.0 * p2 + sigma * c_star);
    let l = lyapunov(state, params)?.l;
    let e_sigma = interacting_energy(state, params, sigma)?.e_sigma;
    let slack = REL_TOL * l + 1e-300;
    Ok(Equivalence {
        c1,
        c2,
        l,
        e_sigma,
        ok: c1 > 0.0 && c1 * l <= e_sigma + slack && e_sigma <= c2 * l + slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyDensity {
    pub integral: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

/// `E⁰(n,v) = 1/(γ−1)((1+n)^γ − 1 − γn) + ½(1+n)|v|²`: its integral and the
/// extremes of `E⁰/(n² + |v|²)` over grid points with a non-negligible
/// denominator.
pub fn energy_density_e0(state: &State, params: &FluidParams) -> Result<EnergyDensity> {
    let n_inf = state.n.max_abs();
    if n_inf > 0.5 {
        return Err(Error::HypothesisViolated(format!(
            "max |n| = {n_inf} exceeds 1/2"
        )));
    }
    let v = state.fluid_velocity()?;
    let n = state.n.values();
    let mut integral = 0.0;
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max = f64::NEG_INFINITY;
    for (i, &ni) in n.iter().enumerate() {
        let v2: f64 = v.components().iter().map(|c| c.values()[i].powi(2)).sum();
        let e = excess_pressure(ni, params.gamma) + 0.5 * (1.0 + ni) * v2;
        integral += e;
        let den = ni * ni + v2;
        if den > 1e-14 {
            ratio_min = ratio_min.min(e / den);
            ratio_max = ratio_max.max(e / den);
        }
    }
    Ok(EnergyDensity {
        integral: integral / n.len() as f64,
        ratio_min,
        ratio_max,
    })
}
