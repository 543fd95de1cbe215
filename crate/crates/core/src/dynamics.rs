//! Constitutive laws and the semi-discrete right-hand side of the coupled
//! pressureless-Euler / isentropic Navier–Stokes system in conservative
//! variables `(ρ, m = ρu, n, j = (n+1)v)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField, VectorField};
use crate::spectral::Spectrum;

/// Floor on ρ used when recovering `u = m/ρ`.
pub const DEFAULT_VACUUM_FLOOR: f64 = 1e-8;

/// Tolerance on `|mean(n)|` for an admissible state.
pub const MEAN_N_TOL: f64 = 1e-8;

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidParams {
    pub gamma: f64,
    pub mu: f64,
    pub lam: f64,
    #[serde(default = "default_true")]
    pub drag_on: bool,
}

impl FluidParams {
    pub fn new(gamma: f64, mu: f64, lam: f64) -> Result<Self> {
        let p = Self {
            gamma,
            mu,
            lam,
            drag_on: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_drag(mut self, drag_on: bool) -> Self {
        self.drag_on = drag_on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 1.0) {
            return Err(Error::InvalidParams(format!("gamma must be > 1, got {}", self.gamma)));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::InvalidParams(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.lam.is_finite() && self.lam + 2.0 * self.mu > 0.0) {
            return Err(Error::InvalidParams(format!(
                "lam + 2 mu must be > 0, got lam = {}",
                self.lam
            )));
        }
        Ok(())
    }

    /// `2μ + λ`, the coefficient of the longitudinal viscous term.
    pub fn longitudinal_viscosity(&self) -> f64 {
        2.0 * self.mu + self.lam
    }
}

/// The evolved unknowns at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub rho: RealField,
    pub m: VectorField,
    pub n: RealField,
    pub j: VectorField,
}

/// Time derivatives of every component of a [`State`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateRates {
    pub d_rho: RealField,
    pub d_m: VectorField,
    pub d_n: RealField,
    pub d_j: VectorField,
}

impl State {
    pub fn new(rho: RealField, m: VectorField, n: RealField, j: VectorField) -> Result<Self> {
        let grid = rho.grid();
        n.same_grid(&rho)?;
        m.same_grid(grid)?;
        j.same_grid(grid)?;
        Ok(Self { rho, m, n, j })
    }

    /// Builds the conservative variables from primitive ones.
    pub fn from_primitive(
        rho: RealField,
        u: &VectorField,
        n: RealField,
        v: &VectorField,
    ) -> Result<Self> {
        let m = times(&rho, u)?;
        let q = n.map(|x| 1.0 + x);
        let j = times(&q, v)?;
        Self::new(rho, m, n, j)
    }

    pub fn grid(&self) -> GridSpec {
        self.rho.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.n.is_finite() && self.m.is_finite() && self.j.is_finite()
    }

    /// Checks positivity, finiteness and the zero mean of `n`.
    pub fn check_invariants(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::Blowup("state".into()));
        }
        let min_rho = self.rho.min();
        if min_rho < 0.0 {
            return Err(Error::InvalidState(format!("min rho = {min_rho:e} < 0")));
        }
        let min_q = 1.0 + self.n.min();
        if min_q <= 0.0 {
            return Err(Error::NonPositiveDensity { min: min_q });
        }
        let mean_n = self.n.mean();
        if mean_n.abs() > MEAN_N_TOL {
            return Err(Error::InvalidState(format!("mean(n) = {mean_n:e}")));
        }
        Ok(())
    }

    /// `self += c · rates`.
    pub fn axpy(&mut self, c: f64, rates: &StateRates) {
        self.rho.axpy(c, &rates.d_rho);
        self.m.axpy(c, &rates.d_m);
        self.n.axpy(c, &rates.d_n);
        self.j.axpy(c, &rates.d_j);
    }

    /// Linear combination `a·x + b·y` of two states on the same grid.
    pub fn combine(a: f64, x: &State, b: f64, y: &State) -> State {
        let mut out = x.clone();
        out.rho = x.rho.scaled(a);
        out.rho.axpy(b, &y.rho);
        out.n = x.n.scaled(a);
        out.n.axpy(b, &y.n);
        out.m = x.m.scaled(a);
        out.m.axpy(b, &y.m);
        out.j = x.j.scaled(a);
        out.j.axpy(b, &y.j);
        out
    }

    /// Particle velocity `u = m / max(ρ, floor)`.
    pub fn particle_velocity(&self, floor: f64) -> Primitive {
        primitive_velocity(&self.rho, &self.m, floor)
    }

    /// Fluid velocity `v = j/(n+1)`.
    pub fn fluid_velocity(&self) -> Result<VectorField> {
        fluid_velocity(&self.n, &self.j)
    }
}

fn times(s: &RealField, v: &VectorField) -> Result<VectorField> {
    let comps = v
        .components()
        .iter()
        .map(|c| s.zip_map(c, |a, b| a * b))
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(comps)
}

pub(crate) fn fluid_velocity(n: &RealField, j: &VectorField) -> Result<VectorField> {
    let min_q = 1.0 + n.min();
    if min_q.is_nan() || min_q <= 0.0 {
        return Err(Error::NonPositiveDensity { min: min_q });
    }
    let q = n.map(|x| 1.0 + x);
    let comps = j
        .components()
        .iter()
        .map(|c| c.zip_map(&q, |a, b| a / b))
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(comps)
}

/// `p(1+n) = (1+n)^γ`.
pub fn pressure(n: &RealField, params: &FluidParams) -> Result<RealField> {
    let min_q = 1.0 + n.min();
    if min_q.is_nan() || min_q <= 0.0 {
        return Err(Error::NonPositiveDensity { min: min_q });
    }
    Ok(n.map(|x| (1.0 + x).powf(params.gamma)))
}

/// Lamé operator `Lv = −μΔv − (μ+λ)∇(∇·v)`.
pub fn lame(v: &VectorField, params: &FluidParams) -> VectorField {
    let spectra: Vec<Spectrum> = v.components().iter().map(Spectrum::of).collect();
    let comps = lame_spectral(&spectra, params)
        .iter()
        .map(Spectrum::to_real)
        .collect();
    VectorField::from_components(comps).expect("same shape")
}

fn lame_spectral(v_hat: &[Spectrum], params: &FluidParams) -> Vec<Spectrum> {
    let grid = v_hat[0].grid();
    let mut div = Spectrum::zeros(grid);
    for (a, s) in v_hat.iter().enumerate() {
        div.add_assign(&s.derivative(a));
    }
    v_hat
        .iter()
        .enumerate()
        .map(|(i, s)| {
            // −μ Δ v_i, with Δ = −Σk² (Nyquist bins use the derivative convention)
            let mut out = s.apply(|k, idx| {
                let k2: f64 = (0..grid.dim())
                    .filter(|&a| !grid.is_nyquist(grid.axis_index(idx, a)))
                    .map(|a| (k[a] * k[a]) as f64)
                    .sum();
                num_complex::Complex64::new(params.mu * k2, 0.0)
            });
            let mut gd = div.derivative(i);
            gd.scale(-(params.mu + params.lam));
            out.add_assign(&gd);
            out
        })
        .collect()
}

/// Velocity recovered from a density/momentum pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub velocity: VectorField,
    /// True when some grid point had density below the floor.
    pub floor_active: bool,
}

pub fn primitive_velocity(density: &RealField, momentum: &VectorField, floor: f64) -> Primitive {
    let floor_active = density.values().iter().any(|&r| r < floor);
    let safe = density.map(|r| r.max(floor));
    let comps = momentum
        .components()
        .iter()
        .map(|c| c.zip_map(&safe, |a, b| a / b).expect("same grid"))
        .collect();
    Primitive {
        velocity: VectorField::from_components(comps).expect("same shape"),
        floor_active,
    }
}

/// Spectral divergence of the dealiased tensor `a ⊗ b`, component `i` = `Σ_k ∂_k(a_i b_k)`.
fn flux_divergence(a: &VectorField, b: &VectorField) -> Vec<Spectrum> {
    let grid = a.grid();
    a.components()
        .iter()
        .map(|ai| {
            let mut acc = Spectrum::zeros(grid);
            for (k, bk) in b.components().iter().enumerate() {
                let prod = ai.zip_map(bk, |x, y| x * y).expect("same grid");
                acc.add_assign(&Spectrum::of(&prod).truncated().derivative(k));
            }
            acc
        })
        .collect()
}

fn negated_divergence(v: &VectorField) -> RealField {
    let mut acc = Spectrum::zeros(v.grid());
    for (a, c) in v.components().iter().enumerate() {
        acc.add_assign(&Spectrum::of(c).derivative(a));
    }
    acc.scale(-1.0);
    acc.to_real()
}

/// Rates of the fluid phase `(d_n, d_j)` given its velocity and an optional
/// momentum source added to `d_j` (the drag exerted by the particles).
pub fn fluid_rates(
    n: &RealField,
    j: &VectorField,
    v: &VectorField,
    source: Option<&VectorField>,
    params: &FluidParams,
) -> Result<(RealField, VectorField)> {
    let grid = n.grid();
    let d_n = negated_divergence(j);
    let p_hat = Spectrum::of(&pressure(n, params)?).truncated();
    let flux = flux_divergence(j, v);
    let v_hat: Vec<Spectrum> = v.components().iter().map(Spectrum::of).collect();
    let lv = lame_spectral(&v_hat, params);
    let mut comps = Vec::with_capacity(grid.dim());
    for (i, (fi, li)) in flux.into_iter().zip(lv).enumerate() {
        let mut acc = fi;
        acc.add_assign(&p_hat.derivative(i));
        acc.add_assign(&li);
        acc.scale(-1.0);
        let mut c = acc.to_real();
        if let Some(s) = source {
            c.axpy(1.0, s.component(i));
        }
        comps.push(c);
    }
    Ok((d_n, VectorField::from_components(comps)?))
}

/// Rates of the particle phase `(d_ρ, d_m)` without the drag term.
fn particle_transport(m: &VectorField, u: &VectorField) -> (RealField, VectorField) {
    let d_rho = negated_divergence(m);
    let comps = flux_divergence(m, u)
        .into_iter()
        .map(|mut s| {
            s.scale(-1.0);
            s.to_real()
        })
        .collect();
    (d_rho, VectorField::from_components(comps).expect("same shape"))
}

/// Drag force density `ρ(u − v)` (zero when drag is switched off).
pub fn drag_force(rho: &RealField, u: &VectorField, v: &VectorField, params: &FluidParams) -> VectorField {
    if !params.drag_on {
        return VectorField::zeros(rho.grid());
    }
    let comps = u
        .components()
        .iter()
        .zip(v.components())
        .map(|(ui, vi)| {
            let rel = ui.zip_map(vi, |a, b| a - b).expect("same grid");
            rho.zip_map(&rel, |r, w| r * w).expect("same grid")
        })
        .collect();
    VectorField::from_components(comps).expect("same shape")
}

/// Semi-discrete right-hand side with the default vacuum floor.
pub fn rhs(state: &State, params: &FluidParams) -> Result<StateRates> {
    rhs_with_floor(state, params, DEFAULT_VACUUM_FLOOR).map(|(r, _)| r)
}

/// Right-hand side and whether the vacuum floor was needed to recover `u`.
pub fn rhs_with_floor(
    state: &State,
    params: &FluidParams,
    floor: f64,
) -> Result<(StateRates, bool)> {
    let prim = state.particle_velocity(floor);
    let u = &prim.velocity;
    let v = state.fluid_velocity()?;
    let drag = drag_force(&state.rho, u, &v, params);
    let (d_rho, mut d_m) = particle_transport(&state.m, u);
    d_m.axpy(-1.0, &drag);
    let (d_n, d_j) = fluid_rates(&state.n, &state.j, &v, Some(&drag), params)?;
    Ok((
        StateRates {
            d_rho,
            d_m,
            d_n,
            d_j,
        },
        prim.floor_active,
    ))
}

/// Largest sound speed `sqrt(γ(1+n)^{γ−1})` on the grid.
pub fn sound_speed_max(state: &State, params: &FluidParams) -> Result<f64> {
    let min_q = 1.0 + state.n.min();
    if min_q.is_nan() || min_q <= 0.0 {
        return Err(Error::NonPositiveDensity { min: min_q });
    }
    let max_q = 1.0 + state.n.max();
    Ok((params.gamma * max_q.powf(params.gamma - 1.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1() -> GridSpec {
        GridSpec::new(1, 32).unwrap()
    }

    fn params(gamma: f64, mu: f64, lam: f64) -> FluidParams {
        FluidParams::new(gamma, mu, lam).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(FluidParams::new(1.0, 1.0, 0.0).is_err());
        assert!(FluidParams::new(1.4, 0.0, 0.0).is_err());
        assert!(FluidParams::new(1.4, 1.0, -2.0).is_err());
        assert!(FluidParams::new(1.4, 1.0, -1.5).is_ok());
    }

    #[test]
    fn pressure_cases() {
        let g = g1();
        let p = pressure(&RealField::zeros(g), &params(2.0, 1.0, 0.0)).unwrap();
        assert!(p.values().iter().all(|&x| (x - 1.0).abs() < 1e-15));
        let p = pressure(&RealField::constant(g, 0.1), &params(2.0, 1.0, 0.0)).unwrap();
        assert!(p.values().iter().all(|&x| (x - 1.21).abs() < 1e-14));
        let n = RealField::from_fn(g, |x| 0.05 * x[0].cos());
        let p = pressure(&n, &params(1.4, 1.0, 0.0)).unwrap();
        for (pi, ni) in p.values().iter().zip(n.values()) {
            assert!((pi - (1.0 + ni).powf(1.4)).abs() < 1e-15);
        }
        assert!(matches!(
            pressure(&RealField::constant(g, -1.0), &params(2.0, 1.0, 0.0)),
            Err(Error::NonPositiveDensity { .. })
        ));
    }

    #[test]
    fn lame_cases() {
        let g = g1();
        let c = VectorField::constant(g, &[2.0]);
        assert!(lame(&c, &params(2.0, 1.0, 0.0)).component(0).max_abs() < 1e-13);

        let v = VectorField::from_components(vec![RealField::from_fn(g, |x| x[0].sin())]).unwrap();
        let lv = lame(&v, &params(2.0, 1.0, 0.0));
        // 1D: L = −(2μ+λ)∂²
        for (l, x) in lv.component(0).values().iter().zip(v.component(0).values()) {
            assert!((l - 2.0 * x).abs() < 1e-12);
        }

        let g2 = GridSpec::new(2, 16).unwrap();
        let v = VectorField::from_components(vec![
            RealField::from_fn(g2, |x| x[1].sin()),
            RealField::zeros(g2),
        ])
        .unwrap();
        let lv = lame(&v, &params(2.0, 1.0, 1.0));
        for (l, x) in lv.component(0).values().iter().zip(v.component(0).values()) {
            assert!((l - x).abs() < 1e-12);
        }
        assert!(lv.component(1).max_abs() < 1e-12);
    }

    #[test]
    fn primitive_velocity_cases() {
        let g = g1();
        let p = primitive_velocity(
            &RealField::constant(g, 1.0),
            &VectorField::constant(g, &[2.0]),
            1e-8,
        );
        assert!(!p.floor_active);
        assert!(p.velocity.component(0).values().iter().all(|&u| u == 2.0));

        let p = primitive_velocity(&RealField::zeros(g), &VectorField::zeros(g), 1e-8);
        assert!(p.floor_active);
        assert_eq!(p.velocity.component(0).max_abs(), 0.0);

        let rho = RealField::from_fn(g, |x| 1.0 + 0.1 * x[0].cos());
        let m = VectorField::from_components(vec![RealField::from_fn(g, |x| x[0].sin())]).unwrap();
        let p = primitive_velocity(&rho, &m, 1e-8);
        let x = g.coords(5)[0];
        assert!((p.velocity.component(0).values()[5] - x.sin() / (1.0 + 0.1 * x.cos())).abs() < 1e-15);
    }

    #[test]
    fn sound_speed_cases() {
        let g = g1();
        let s = State::new(
            RealField::constant(g, 1.0),
            VectorField::zeros(g),
            RealField::zeros(g),
            VectorField::zeros(g),
        )
        .unwrap();
        assert!((sound_speed_max(&s, &params(2.0, 1.0, 0.0)).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((sound_speed_max(&s, &params(1.4, 1.0, 0.0)).unwrap() - 1.4f64.sqrt()).abs() < 1e-15);
        let mut s2 = s.clone();
        s2.n = RealField::from_fn(g, |x| 0.1 * x[0].cos());
        assert!((sound_speed_max(&s2, &params(2.0, 1.0, 0.0)).unwrap() - 2.2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn uniform_states() {
        let g = GridSpec::new(2, 16).unwrap();
        let p = params(2.0, 1.0, 0.0);
        let one = RealField::constant(g, 1.0);
        let zero = RealField::zeros(g);
        let eq = State::from_primitive(
            one.clone(),
            &VectorField::constant(g, &[0.3, -0.2]),
            zero.clone(),
            &VectorField::constant(g, &[0.3, -0.2]),
        )
        .unwrap();
        let r = rhs(&eq, &p).unwrap();
        assert!(r.d_rho.max_abs() < 1e-14 && r.d_n.max_abs() < 1e-14);
        assert!(r.d_m.magnitude().max() < 1e-14 && r.d_j.magnitude().max() < 1e-14);

        let drag = State::from_primitive(
            one,
            &VectorField::constant(g, &[1.0, 0.5]),
            zero,
            &VectorField::constant(g, &[0.0, 2.0]),
        )
        .unwrap();
        let r = rhs(&drag, &p).unwrap();
        for (a, expect) in [(0usize, -1.0), (1, 1.5)] {
            assert!(r.d_m.component(a).values().iter().all(|&x| (x - expect).abs() < 1e-13));
            assert!(r.d_j.component(a).values().iter().all(|&x| (x + expect).abs() < 1e-13));
        }
        assert!(r.d_rho.max_abs() < 1e-14 && r.d_n.max_abs() < 1e-14);
    }
}
