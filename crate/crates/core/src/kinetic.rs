//! One-dimensional particle solver for the kinetic equation
//! `∂_t f + ξ ∂_x f + ∂_ξ((v − ξ) f) = 0` coupled to the compressible
//! Navier–Stokes fluid through the deposited drag `m − ρv`.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{fluid_rates, sound_speed_max, FluidParams, State};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField, VectorField};
use crate::integrator::{TimeConfig, LAST_STEP_SLACK};
use crate::spectral::Spectrum;

/// Particles per parallel work unit; fixed so reductions are reproducible.
const CHUNK: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleEnsemble {
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ParticleEnsemble {
    pub fn new(positions: Vec<f64>, velocities: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != velocities.len() || positions.len() != weights.len() {
            return Err(Error::InvalidState("particle arrays differ in length".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidState("particle weights must be positive".into()));
        }
        if positions.iter().chain(&velocities).any(|x| !x.is_finite()) {
            return Err(Error::InvalidState("non-finite particle data".into()));
        }
        Ok(Self {
            positions: positions.into_iter().map(|x| x.rem_euclid(TAU)).collect(),
            velocities,
            weights,
        })
    }

    pub fn empty() -> Self {
        Self {
            positions: Vec::new(),
            velocities: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `Σ wᵢ`, the physical integral of the deposited density.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ wᵢ ξᵢ`.
    pub fn total_momentum(&self) -> f64 {
        self.weights.iter().zip(&self.velocities).map(|(w, x)| w * x).sum()
    }
}

/// Quiet start: `np` particles at cell centres `xᵢ = (i+½)2π/np` with
/// weight `ρ₀(xᵢ)·2π/np` and velocity `u₀(xᵢ)`.
pub fn mono_kinetic(
    rho0: impl Fn(f64) -> f64,
    u0: impl Fn(f64) -> f64,
    np: usize,
) -> Result<ParticleEnsemble> {
    let h = TAU / np as f64;
    let positions: Vec<f64> = (0..np).map(|i| (i as f64 + 0.5) * h).collect();
    let weights = positions.iter().map(|&x| rho0(x) * h).collect();
    let velocities = positions.iter().map(|&x| u0(x)).collect();
    ParticleEnsemble::new(positions, velocities, weights)
}

/// Trigonometric interpolant of a 1D grid field, evaluated off-grid.
fn fourier_eval(f: &RealField) -> impl Fn(f64) -> f64 + Sync {
    let grid = f.grid();
    let n = grid.points_per_axis();
    let spec = Spectrum::of(f);
    let coeffs: Vec<(f64, f64, f64)> = spec
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            // split the Nyquist bin evenly so the interpolant stays real
            let w = if grid.is_nyquist(i) { 0.0 } else { 1.0 };
            (grid.wavenumber(i) as f64, w * c.re / n as f64, w * c.im / n as f64)
        })
        .collect();
    move |x: f64| coeffs.iter().map(|&(k, re, im)| re * (k * x).cos() - im * (k * x).sin()).sum()
}

/// Mono-kinetic ensemble sampling the band-limited interpolants of `ρ` and `u = m/ρ`.
pub fn mono_kinetic_from_state(state: &State, np: usize) -> Result<ParticleEnsemble> {
    let grid = state.grid();
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid("the kinetic solver is one-dimensional".into()));
    }
    let rho = fourier_eval(&state.rho);
    let m = fourier_eval(state.m.component(0));
    let h = TAU / np as f64;
    let positions: Vec<f64> = (0..np).map(|i| (i as f64 + 0.5) * h).collect();
    let (weights, velocities): (Vec<f64>, Vec<f64>) = positions
        .par_iter()
        .map(|&x| {
            let r = rho(x);
            (r * h, m(x) / r)
        })
        .unzip();
    ParticleEnsemble::new(positions, velocities, weights)
}

/// Grid moments of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub rho: RealField,
    pub m: VectorField,
    /// `ρθ = ½∫|ξ − u|² f dξ`.
    pub theta_rho: RealField,
    /// `∫(ξ − u)² f dξ` (the 1D pressure tensor).
    pub sigma_hat: RealField,
    /// `½∫(ξ − u)³ f dξ`.
    pub q_hat: RealField,
}

/// Linear (cloud-in-cell) weights: node index and weight for both neighbours.
fn cic(x: f64, dx: f64, n: usize) -> (usize, usize, f64, f64) {
    let s = x / dx;
    let j = s.floor();
    let frac = s - j;
    let j0 = (j as i64).rem_euclid(n as i64) as usize;
    (j0, (j0 + 1) % n, 1.0 - frac, frac)
}

fn deposit_sums(ens: &ParticleEnsemble, grid: GridSpec, f: impl Fn(usize) -> f64 + Sync) -> Vec<f64> {
    let n = grid.points_per_axis();
    let dx = grid.dx();
    let partial: Vec<Vec<f64>> = (0..ens.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; n];
            for p in c * CHUNK..((c + 1) * CHUNK).min(ens.len()) {
                let (j0, j1, w0, w1) = cic(ens.positions[p], dx, n);
                let q = f(p);
                acc[j0] += w0 * q;
                acc[j1] += w1 * q;
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; n];
    for acc in partial {
        for (o, a) in out.iter_mut().zip(acc) {
            *o += a;
        }
    }
    out.iter_mut().for_each(|o| *o /= dx);
    out
}

/// Cloud-in-cell deposition onto the nodes `x_j = j·dx`.
///
/// Fluctuation moments use the node velocity `u_j = m_j/ρ_j` (0 where no
/// particle contributes).
pub fn deposit(ens: &ParticleEnsemble, grid: GridSpec) -> Result<MomentSet> {
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid("the kinetic solver is one-dimensional".into()));
    }
    let n = grid.points_per_axis();
    let dx = grid.dx();
    let rho = deposit_sums(ens, grid, |p| ens.weights[p]);
    let m = deposit_sums(ens, grid, |p| ens.weights[p] * ens.velocities[p]);
    let u: Vec<f64> = rho
        .iter()
        .zip(&m)
        .map(|(&r, &mm)| if r > 0.0 { mm / r } else { 0.0 })
        .collect();
    // second and third central moments need the node velocity of each neighbour
    let mut c2 = vec![0.0; n];
    let mut c3 = vec![0.0; n];
    for p in 0..ens.len() {
        let (j0, j1, w0, w1) = cic(ens.positions[p], dx, n);
        let w = ens.weights[p];
        let xi = ens.velocities[p];
        for (j, s) in [(j0, w0), (j1, w1)] {
            let d = xi - u[j];
            c2[j] += w * s * d * d;
            c3[j] += w * s * d * d * d;
        }
    }
    let theta: Vec<f64> = c2.iter().map(|c| 0.5 * c / dx).collect();
    Ok(MomentSet {
        rho: RealField::from_values(grid, rho)?,
        m: VectorField::from_components(vec![RealField::from_values(grid, m)?])?,
        sigma_hat: RealField::from_values(grid, theta.iter().map(|t| 2.0 * t).collect())?,
        theta_rho: RealField::from_values(grid, theta)?,
        q_hat: RealField::from_values(grid, c3.iter().map(|c| 0.5 * c / dx).collect())?,
    })
}

/// `∫ρθ + ∫|q̂|`, the terms dropped by the mono-kinetic closure.
pub fn closure_gap(moments: &MomentSet) -> f64 {
    let dx = moments.rho.grid().cell_volume();
    let th: f64 = moments.theta_rho.values().iter().sum();
    let q: f64 = moments.q_hat.values().iter().map(|x| x.abs()).sum();
    (th + q) * dx
}

/// Periodic linear interpolation of a 1D grid field.
fn interp(v: &[f64], dx: f64, x: f64) -> f64 {
    let (j0, j1, w0, w1) = cic(x, dx, v.len());
    w0 * v[j0] + w1 * v[j1]
}

/// Midpoint-rule update of `x' = ξ`, `ξ' = v(x) − ξ` with `v` frozen and
/// linearly interpolated.
pub fn push(ens: &ParticleEnsemble, v: &RealField, dt: f64) -> ParticleEnsemble {
    let dx = v.grid().dx();
    let vv = v.values();
    let (positions, velocities): (Vec<f64>, Vec<f64>) = ens
        .positions
        .par_iter()
        .zip(&ens.velocities)
        .map(|(&x, &xi)| {
            let xm = x + 0.5 * dt * xi;
            let xim = xi + 0.5 * dt * (interp(vv, dx, x) - xi);
            let xn = (x + dt * xim).rem_euclid(TAU);
            let xin = xi + dt * (interp(vv, dx, xm) - xim);
            (xn, xin)
        })
        .unzip();
    ParticleEnsemble {
        positions,
        velocities,
        weights: ens.weights.clone(),
    }
}

/// Fluid unknowns of the kinetic coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub n: RealField,
    pub j: VectorField,
}

impl FluidState {
    pub fn velocity(&self) -> Result<VectorField> {
        crate::dynamics::fluid_velocity(&self.n, &self.j)
    }
}

/// Momentum source `m − ρv` for the fluid, or zero without drag.
fn drag_source(moments: &MomentSet, v: &VectorField, params: &FluidParams) -> VectorField {
    if !params.drag_on {
        return VectorField::zeros(v.grid());
    }
    let s = moments
        .m
        .component(0)
        .zip_map(&moments.rho.zip_map(v.component(0), |r, w| r * w).expect("same grid"), |a, b| {
            a - b
        })
        .expect("same grid");
    VectorField::from_components(vec![s]).expect("one component")
}

fn fluid_stage(
    f: &FluidState,
    moments: &MomentSet,
    params: &FluidParams,
) -> Result<(RealField, VectorField)> {
    let v = f.velocity().map_err(|e| match e {
        Error::NonPositiveDensity { min } => Error::FluidVacuumBreach { min },
        other => other,
    })?;
    let src = drag_source(moments, &v, params);
    fluid_rates(&f.n, &f.j, &v, Some(&src), params)
}

/// Classical RK4 step of the fluid with frozen particle moments.
fn fluid_step(f: &FluidState, moments: &MomentSet, params: &FluidParams, dt: f64) -> Result<FluidState> {
    let shifted = |c: f64, k: &(RealField, VectorField)| {
        let mut g = f.clone();
        g.n.axpy(c, &k.0);
        g.j.axpy(c, &k.1);
        g
    };
    let k1 = fluid_stage(f, moments, params)?;
    let k2 = fluid_stage(&shifted(0.5 * dt, &k1), moments, params)?;
    let k3 = fluid_stage(&shifted(0.5 * dt, &k2), moments, params)?;
    let k4 = fluid_stage(&shifted(dt, &k3), moments, params)?;
    let mut out = f.clone();
    for (c, k) in [(dt / 6.0, &k1), (dt / 3.0, &k2), (dt / 3.0, &k3), (dt / 6.0, &k4)] {
        out.n.axpy(c, &k.0);
        out.j.axpy(c, &k.1);
    }
    if !(out.n.is_finite() && out.j.is_finite()) {
        return Err(Error::Blowup("fluid state in kinetic run".into()));
    }
    let mean = out.n.mean();
    out.n.add_constant(-mean);
    let min_q = 1.0 + out.n.min();
    if min_q <= 0.0 {
        return Err(Error::FluidVacuumBreach { min: min_q });
    }
    Ok(out)
}

fn kinetic_dt(ens: &ParticleEnsemble, f: &FluidState, params: &FluidParams, cfg: &TimeConfig) -> Result<f64> {
    let dx = f.n.grid().dx();
    let v = f.velocity()?;
    let xi_max = ens.velocities.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let probe = State {
        rho: RealField::zeros(f.n.grid()),
        m: VectorField::zeros(f.n.grid()),
        n: f.n.clone(),
        j: f.j.clone(),
    };
    let speed = xi_max.max(v.component(0).max_abs()) + sound_speed_max(&probe, params)?;
    if !speed.is_finite() {
        return Err(Error::DegenerateState(format!("max speed is {speed}")));
    }
    let adv = cfg.cfl_advective * dx / speed;
    let diff = cfg.cfl_diffusive * dx * dx / params.longitudinal_viscosity();
    Ok(adv.min(diff).min(cfg.dt_max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticRecord {
    pub t: f64,
    pub moments: MomentSet,
    pub fluid: FluidState,
    pub closure_gap: f64,
    /// `Σ wᵢξᵢ + ∫j` (physical measure).
    pub total_momentum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticRunResult {
    pub records: Vec<KineticRecord>,
    pub ensemble: ParticleEnsemble,
    pub fluid: FluidState,
    pub steps: usize,
}

fn record(t: f64, ens: &ParticleEnsemble, fluid: &FluidState) -> Result<KineticRecord> {
    let moments = deposit(ens, fluid.n.grid())?;
    Ok(KineticRecord {
        t,
        closure_gap: closure_gap(&moments),
        total_momentum: ens.total_momentum() + fluid.j.component(0).integral(),
        moments,
        fluid: fluid.clone(),
    })
}

/// Strang-split coupled run: half push, deposit, fluid RK4 step with the
/// deposited drag, half push. Records at `t = 0`, at every requested time in
/// `(0, t_end)` and at `t_end`; steps are shortened to land on them.
pub fn kinetic_run(
    ensemble: &ParticleEnsemble,
    fluid: &FluidState,
    params: &FluidParams,
    cfg: &TimeConfig,
    sample_times: &[f64],
) -> Result<KineticRunResult> {
    params.validate()?;
    cfg.validate()?;
    let grid = fluid.n.grid();
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid("the kinetic solver is one-dimensional".into()));
    }
    fluid.j.same_grid(grid)?;
    let mut stops: Vec<f64> = sample_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < cfg.t_end)
        .collect();
    stops.push(cfg.t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut ens = ensemble.clone();
    let mut fl = fluid.clone();
    let mut records = vec![record(0.0, &ens, &fl)?];
    let mut t = 0.0;
    let mut steps = 0;
    for &stop in &stops {
        while t < stop {
            let mut dt = kinetic_dt(&ens, &fl, params, cfg)?;
            let last = t + dt * (1.0 + LAST_STEP_SLACK) >= stop;
            if last {
                dt = stop - t;
            }
            let v0 = fl.velocity()?;
            ens = push(&ens, v0.component(0), 0.5 * dt);
            let moments = deposit(&ens, grid)?;
            fl = fluid_step(&fl, &moments, params, dt)?;
            let v1 = fl.velocity()?;
            ens = push(&ens, v1.component(0), 0.5 * dt);
            t = if last { stop } else { t + dt };
            steps += 1;
        }
        if stop > 0.0 {
            records.push(record(t, &ens, &fl)?);
        }
    }
    Ok(KineticRunResult {
        records,
        ensemble: ens,
        fluid: fl,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize) -> GridSpec {
        GridSpec::new(1, n).unwrap()
    }

    #[test]
    fn relaxation_in_constant_field() {
        let grid = g(16);
        let v = RealField::constant(grid, 0.5);
        let mut e = ParticleEnsemble::new(vec![1.0, 4.0], vec![1.5, -0.5], vec![1.0, 1.0]).unwrap();
        for _ in 0..1000 {
            e = push(&e, &v, 1e-3);
        }
        let decay = (-1.0f64).exp();
        assert!((e.velocities[0] - (0.5 + decay)).abs() < 1e-7);
        assert!((e.velocities[1] - (0.5 - decay)).abs() < 1e-7);
    }

    #[test]
    fn equilibrium_characteristic() {
        let grid = g(16);
        let v = RealField::constant(grid, 0.3);
        let mut e = ParticleEnsemble::new(vec![1.0], vec![0.3], vec![1.0]).unwrap();
        for _ in 0..100 {
            e = push(&e, &v, 1e-2);
        }
        assert!((e.velocities[0] - 0.3).abs() < 1e-15);
        assert!((e.positions[0] - 1.3).abs() < 1e-13);
    }

    #[test]
    fn deposition_conserves_mass_and_momentum() {
        let grid = g(32);
        let e = mono_kinetic(|x| 1.0 + 0.3 * x.sin(), |x| x.cos(), 1000).unwrap();
        let m = deposit(&e, grid).unwrap();
        assert!((m.rho.integral() - e.total_mass()).abs() < 1e-12);
        assert!((m.m.component(0).integral() - e.total_momentum()).abs() < 1e-12);
        assert!((e.total_mass() - TAU).abs() < 1e-12);
    }

    #[test]
    fn node_particle_and_bimodal_pair() {
        let grid = g(16);
        let x = 3.0 * grid.dx();
        let e = ParticleEnsemble::new(vec![x], vec![0.0], vec![0.7]).unwrap();
        assert!((deposit(&e, grid).unwrap().rho.integral() - 0.7).abs() < 1e-15);

        let e = ParticleEnsemble::new(vec![x, x], vec![1.0, -1.0], vec![0.5, 0.5]).unwrap();
        let m = deposit(&e, grid).unwrap();
        assert!(m.m.component(0).max_abs() < 1e-15);
        assert!((m.theta_rho.integral() - 0.5).abs() < 1e-14);
        assert!((m.sigma_hat.integral() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mono_kinetic_closure_gap_shrinks() {
        let gap = |n: usize, np: usize| {
            let e = mono_kinetic(|x| 1.0 + 0.2 * x.cos(), |x| 0.3 * x.sin(), np).unwrap();
            closure_gap(&deposit(&e, g(n)).unwrap())
        };
        let (a, b) = (gap(16, 4000), gap(32, 16000));
        assert!(b < a, "{a} {b}");
    }

    #[test]
    fn bimodal_gap_is_half_the_mass() {
        let grid = g(16);
        let np = 2000;
        let h = TAU / np as f64;
        let pos: Vec<f64> = (0..np).map(|i| (i / 2) as f64 * 2.0 * h).collect();
        let vel: Vec<f64> = (0..np).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let e = ParticleEnsemble::new(pos, vel, vec![h; np]).unwrap();
        let gap = closure_gap(&deposit(&e, grid).unwrap());
        assert!((gap - 0.5 * e.total_mass()).abs() < 1e-12);
    }

    #[test]
    fn empty_ensemble_leaves_fluid_alone() {
        let grid = g(16);
        let params = FluidParams::new(2.0, 1.0, 0.0).unwrap();
        let n = RealField::from_fn(grid, |x| 0.05 * x[0].cos());
        let fluid = FluidState {
            j: VectorField::zeros(grid),
            n,
        };
        let cfg = TimeConfig::new(0.1, 1e-2);
        let r = kinetic_run(&ParticleEnsemble::empty(), &fluid, &params, &cfg, &[]).unwrap();
        assert_eq!(r.records.len(), 2);
        assert!(r.records[1].moments.rho.max_abs() == 0.0);
    }
}
