//! Explicit Runge–Kutta time stepping with CFL control and run orchestration.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    identity_residuals, DiagnosticsContext, DiagnosticsRecord, Evaluation, Flag,
    IdentityResiduals,
};
use crate::dynamics::{rhs_with_floor, sound_speed_max, FluidParams, State, DEFAULT_VACUUM_FLOOR};
use crate::error::{Error, Result};
use crate::grid::VectorField;
use crate::spectral::gradient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Scheme {
    #[default]
    #[serde(rename = "RK4")]
    Rk4,
    #[serde(rename = "SSP_RK3")]
    SspRk3,
}

fn d_cfl_adv() -> f64 {
    0.4
}
fn d_cfl_diff() -> f64 {
    0.25
}
fn d_record_every() -> usize {
    1
}
fn d_steepening() -> f64 {
    10.0
}
fn d_floor() -> f64 {
    DEFAULT_VACUUM_FLOOR
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    #[serde(default = "d_cfl_adv")]
    pub cfl_advective: f64,
    #[serde(default = "d_cfl_diff")]
    pub cfl_diffusive: f64,
    pub dt_max: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "d_record_every")]
    pub record_every: usize,
    /// Stop once `max|∇u|` exceeds this multiple of its initial value.
    #[serde(default = "d_steepening")]
    pub steepening_factor: f64,
    #[serde(default = "d_floor")]
    pub vacuum_floor: f64,
}

impl TimeConfig {
    pub fn new(t_end: f64, dt_max: f64) -> Self {
        Self {
            t_end,
            cfl_advective: d_cfl_adv(),
            cfl_diffusive: d_cfl_diff(),
            dt_max,
            scheme: Scheme::Rk4,
            record_every: 1,
            steepening_factor: d_steepening(),
            vacuum_floor: d_floor(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, v: f64| Error::InvalidParams(format!("{name} = {v} is out of range"));
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(bad("t_end", self.t_end));
        }
        for (name, v) in [
            ("cfl_advective", self.cfl_advective),
            ("cfl_diffusive", self.cfl_diffusive),
            ("dt_max", self.dt_max),
            ("steepening_factor", self.steepening_factor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(bad(name, v));
            }
        }
        if !(self.vacuum_floor.is_finite() && self.vacuum_floor >= 0.0) {
            return Err(bad("vacuum_floor", self.vacuum_floor));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParams("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    VacuumBreach,
    FluidVacuumBreach,
    Blowup,
    GradientSteepening,
}

impl RunStatus {
    fn from_error(e: &Error) -> Self {
        match e {
            Error::VacuumBreach { .. } => RunStatus::VacuumBreach,
            Error::FluidVacuumBreach { .. } | Error::NonPositiveDensity { .. } => {
                RunStatus::FluidVacuumBreach
            }
            _ => RunStatus::Blowup,
        }
    }

    fn flag(self) -> Option<Flag> {
        match self {
            RunStatus::Completed => None,
            RunStatus::VacuumBreach => Some(Flag::VacuumBreach),
            RunStatus::FluidVacuumBreach => Some(Flag::FluidVacuumBreach),
            RunStatus::Blowup => Some(Flag::Blowup),
            RunStatus::GradientSteepening => Some(Flag::GradientSteepening),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub final_state: State,
    pub records: Vec<DiagnosticsRecord>,
    pub status: RunStatus,
    pub context: DiagnosticsContext,
    pub steps: usize,
    pub floor_ever_active: bool,
    /// Largest `|mean(n)|` removed by a single re-projection.
    pub max_reprojection: f64,
    /// Error that stopped the run, if any.
    pub failure: Option<Error>,
}

/// Receives every record together with the state it describes.
pub trait RecordHook {
    fn on_record(&mut self, state: &State, record: &DiagnosticsRecord);
}

impl<F: FnMut(&State, &DiagnosticsRecord)> RecordHook for F {
    fn on_record(&mut self, state: &State, record: &DiagnosticsRecord) {
        self(state, record)
    }
}

/// A step landing within this fraction of `dt` of a stop time is stretched
/// to end on it, so accumulated round-off in `t` never leaves a sliver step.
pub(crate) const LAST_STEP_SLACK: f64 = 1e-6;

/// Hook that ignores records.
pub struct NoHook;

impl RecordHook for NoHook {
    fn on_record(&mut self, _: &State, _: &DiagnosticsRecord) {}
}

fn max_magnitude(v: &VectorField) -> f64 {
    v.magnitude().max()
}

/// `min(cfl_a·dx/(max(|u|,|v|) + c_s), cfl_d·dx²/(2μ+λ), dt_max)`.
pub fn compute_dt(state: &State, params: &FluidParams, cfg: &TimeConfig) -> Result<f64> {
    let dx = state.grid().dx();
    let u = state.particle_velocity(cfg.vacuum_floor).velocity;
    let v = state.fluid_velocity()?;
    let speed = max_magnitude(&u).max(max_magnitude(&v)) + sound_speed_max(state, params)?;
    if !speed.is_finite() {
        return Err(Error::DegenerateState(format!("max speed is {speed}")));
    }
    let adv = cfg.cfl_advective * dx / speed;
    let diff = cfg.cfl_diffusive * dx * dx / params.longitudinal_viscosity();
    Ok(adv.min(diff).min(cfg.dt_max))
}

/// Result of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: State,
    /// Some stage needed the vacuum floor to recover `u`.
    pub floor_active: bool,
    /// `|mean(n)|` removed after the step.
    pub reprojection: f64,
}

/// Advances by `dt` with the default vacuum floor.
pub fn step(state: &State, params: &FluidParams, dt: f64, scheme: Scheme) -> Result<State> {
    step_with_floor(state, params, dt, scheme, DEFAULT_VACUUM_FLOOR).map(|o| o.state)
}

fn stage_rhs(s: &State, params: &FluidParams, floor: f64, any_floor: &mut bool) -> Result<crate::dynamics::StateRates> {
    let (r, f) = rhs_with_floor(s, params, floor).map_err(|e| match e {
        Error::NonPositiveDensity { min } => Error::FluidVacuumBreach { min },
        other => other,
    })?;
    *any_floor |= f;
    Ok(r)
}

pub fn step_with_floor(
    state: &State,
    params: &FluidParams,
    dt: f64,
    scheme: Scheme,
    floor: f64,
) -> Result<StepOutcome> {
    let mut fl = false;
    let mut next = match scheme {
        Scheme::Rk4 => {
            let k1 = stage_rhs(state, params, floor, &mut fl)?;
            let mut s = state.clone();
            s.axpy(0.5 * dt, &k1);
            let k2 = stage_rhs(&s, params, floor, &mut fl)?;
            let mut s = state.clone();
            s.axpy(0.5 * dt, &k2);
            let k3 = stage_rhs(&s, params, floor, &mut fl)?;
            let mut s = state.clone();
            s.axpy(dt, &k3);
            let k4 = stage_rhs(&s, params, floor, &mut fl)?;
            let mut out = state.clone();
            out.axpy(dt / 6.0, &k1);
            out.axpy(dt / 3.0, &k2);
            out.axpy(dt / 3.0, &k3);
            out.axpy(dt / 6.0, &k4);
            out
        }
        Scheme::SspRk3 => {
            let mut s1 = state.clone();
            s1.axpy(dt, &stage_rhs(state, params, floor, &mut fl)?);
            let mut t1 = s1.clone();
            t1.axpy(dt, &stage_rhs(&s1, params, floor, &mut fl)?);
            let s2 = State::combine(0.75, state, 0.25, &t1);
            let mut t2 = s2.clone();
            t2.axpy(dt, &stage_rhs(&s2, params, floor, &mut fl)?);
            State::combine(1.0 / 3.0, state, 2.0 / 3.0, &t2)
        }
    };
    if !next.is_finite() {
        return Err(Error::Blowup("state after step".into()));
    }
    let mean_n = next.n.mean();
    next.n.add_constant(-mean_n);
    let min_q = 1.0 + next.n.min();
    if min_q <= 0.0 {
        return Err(Error::FluidVacuumBreach { min: min_q });
    }
    let min_rho = next.rho.min();
    if min_rho < floor {
        return Err(Error::VacuumBreach { min: min_rho });
    }
    Ok(StepOutcome {
        state: next,
        floor_active: fl,
        reprojection: mean_n.abs(),
    })
}

/// States at each of the increasing `times`, stepping with the CFL rule
/// and shortening steps to land on every requested time exactly.
pub fn integrate_to_times(
    initial: &State,
    params: &FluidParams,
    cfg: &TimeConfig,
    times: &[f64],
) -> Result<Vec<State>> {
    params.validate()?;
    cfg.validate()?;
    initial.check_invariants()?;
    let mut state = initial.clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &stop in times {
        if stop < t {
            return Err(Error::InvalidParams("sample times must be increasing".into()));
        }
        while t < stop {
            let mut dt = compute_dt(&state, params, cfg)?;
            let last = t + dt * (1.0 + LAST_STEP_SLACK) >= stop;
            if last {
                dt = stop - t;
            }
            state = step_with_floor(&state, params, dt, cfg.scheme, cfg.vacuum_floor)?.state;
            t = if last { stop } else { t + dt };
        }
        out.push(state.clone());
    }
    Ok(out)
}

/// `max_x |∇u|` (Frobenius norm of the gradient tensor).
fn grad_u_max(state: &State, floor: f64) -> f64 {
    let u = state.particle_velocity(floor).velocity;
    let grads: Vec<VectorField> = u.components().iter().map(gradient).collect();
    let len = state.grid().len();
    (0..len)
        .map(|i| {
            grads
                .iter()
                .flat_map(|g| g.components().iter().map(move |c| c.values()[i].powi(2)))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// Runs without a hook; see [`run_with_hook`].
pub fn run(
    initial: &State,
    params: &FluidParams,
    cfg: &TimeConfig,
    sigma_override: Option<f64>,
) -> Result<RunResult> {
    run_with_hook(initial, params, cfg, sigma_override, &mut NoHook)
}

/// Integrates to `cfg.t_end`, emitting records at `t = 0`, every
/// `record_every` steps and at the final time.
///
/// Each record carries the balance residuals of the step that produced it
/// (the first step for the record at `t = 0`). Invalid input is an error;
/// failures during the run end it early with a non-`Completed` status.
pub fn run_with_hook(
    initial: &State,
    params: &FluidParams,
    cfg: &TimeConfig,
    sigma_override: Option<f64>,
    hook: &mut dyn RecordHook,
) -> Result<RunResult> {
    params.validate()?;
    cfg.validate()?;
    initial.check_invariants()?;
    let floor = cfg.vacuum_floor;
    let ctx = DiagnosticsContext::new(initial, params, sigma_override, floor)?;
    let ev0 = ctx.evaluate(initial)?;
    let ceiling = cfg.steepening_factor * ev0.functionals.grad_u_max.max(1e-8);

    let mut state = initial.clone();
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let mut pending_first: Option<Evaluation> = Some(ev0);
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut floor_ever_active = false;
    let mut floor_since_record = false;
    let mut max_reprojection: f64 = 0.0;
    let mut status = RunStatus::Completed;
    let mut failure = None;

    let mut push = |records: &mut Vec<DiagnosticsRecord>, s: &State, rec: DiagnosticsRecord| {
        hook.on_record(s, &rec);
        records.push(rec);
    };

    while t < cfg.t_end {
        let attempt = (|| -> Result<(f64, bool, StepOutcome)> {
            let mut dt = compute_dt(&state, params, cfg)?;
            let last = t + dt * (1.0 + LAST_STEP_SLACK) >= cfg.t_end;
            if last {
                dt = cfg.t_end - t;
            }
            let out = step_with_floor(&state, params, dt, cfg.scheme, floor)?;
            Ok((dt, last, out))
        })();
        let (dt, last, out) = match attempt {
            Ok(x) => x,
            Err(e) => {
                status = RunStatus::from_error(&e);
                failure = Some(e);
                break;
            }
        };
        steps += 1;
        floor_ever_active |= out.floor_active;
        floor_since_record |= out.floor_active;
        max_reprojection = max_reprojection.max(out.reprojection);
        let t_new = if last { cfg.t_end } else { t + dt };
        let steep = grad_u_max(&out.state, floor) > ceiling;
        let scheduled = last || steps.is_multiple_of(cfg.record_every) || steep;

        if scheduled || pending_first.is_some() {
            let eval = (|| -> Result<(Evaluation, Evaluation, Evaluation)> {
                let mid = step_with_floor(&state, params, 0.5 * dt, cfg.scheme, floor)?;
                let start = match pending_first.take() {
                    Some(e) => e,
                    None => ctx.evaluate(&state)?,
                };
                Ok((start, ctx.evaluate(&mid.state)?, ctx.evaluate(&out.state)?))
            })();
            let (start, mid, end) = match eval {
                Ok(x) => x,
                Err(e) => {
                    status = RunStatus::from_error(&e);
                    failure = Some(e);
                    break;
                }
            };
            let res = identity_residuals(&start.balance, &end.balance, &mid.balance, dt);
            if records.is_empty() {
                let rec = DiagnosticsRecord::from_evaluation(0.0, start, res);
                push(&mut records, &state, rec);
            }
            if scheduled {
                let mut rec = DiagnosticsRecord::from_evaluation(t_new, end, res);
                if floor_since_record {
                    rec.flags.insert(Flag::FloorActive);
                }
                floor_since_record = false;
                if steep {
                    rec.flags.insert(Flag::GradientSteepening);
                }
                push(&mut records, &out.state, rec);
            }
        }
        state = out.state;
        t = t_new;
        if steep {
            status = RunStatus::GradientSteepening;
            break;
        }
    }

    if let Some(e) = pending_first.take() {
        // no step was taken: the run ended at t = 0
        let rec = DiagnosticsRecord::from_evaluation(0.0, e, IdentityResiduals::default());
        push(&mut records, &state, rec);
    }
    if let Some(flag) = status.flag() {
        let last_t = records.last().map(|r| r.t).unwrap_or(-1.0);
        if last_t < t {
            if let Ok(ev) = ctx.evaluate(&state) {
                let rec = DiagnosticsRecord::from_evaluation(t, ev, IdentityResiduals::default());
                push(&mut records, &state, rec);
            }
        }
        if let Some(r) = records.last_mut() {
            r.flags.insert(flag);
        }
    }
    Ok(RunResult {
        final_state: state,
        records,
        status,
        context: ctx,
        steps,
        floor_ever_active,
        max_reprojection,
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, RealField};

    fn p() -> FluidParams {
        FluidParams::new(2.0, 1.0, 0.0).unwrap()
    }

    fn uniform(grid: GridSpec, a: f64, b: f64) -> State {
        State::from_primitive(
            RealField::constant(grid, 1.0),
            &VectorField::constant(grid, &[a]),
            RealField::zeros(grid),
            &VectorField::constant(grid, &[b]),
        )
        .unwrap()
    }

    #[test]
    fn dt_formula() {
        let g = GridSpec::new(1, 64).unwrap();
        let s = uniform(g, 0.0, 0.0);
        let cfg = TimeConfig::new(1.0, 1e-2);
        let dx = g.dx();
        let expect = (0.4 * dx / 2f64.sqrt()).min(0.25 * dx * dx / 2.0).min(1e-2);
        assert!((compute_dt(&s, &p(), &cfg).unwrap() - expect).abs() < 1e-18);
        let cfg = TimeConfig::new(1.0, 1e-6);
        assert_eq!(compute_dt(&s, &p(), &cfg).unwrap(), 1e-6);
    }

    #[test]
    fn dt_scaling_with_resolution() {
        let mut cfg = TimeConfig::new(1.0, 1.0);
        let coarse = uniform(GridSpec::new(1, 32).unwrap(), 0.0, 0.0);
        let fine = uniform(GridSpec::new(1, 64).unwrap(), 0.0, 0.0);
        cfg.cfl_diffusive = 1e9;
        let r = compute_dt(&coarse, &p(), &cfg).unwrap() / compute_dt(&fine, &p(), &cfg).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        cfg.cfl_diffusive = 0.25;
        cfg.cfl_advective = 1e9;
        let r = compute_dt(&coarse, &p(), &cfg).unwrap() / compute_dt(&fine, &p(), &cfg).unwrap();
        assert!((r - 4.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_drag_matches_exponential() {
        let g = GridSpec::new(1, 8).unwrap();
        for scheme in [Scheme::Rk4, Scheme::SspRk3] {
            let mut s = uniform(g, 1.0, 0.0);
            for _ in 0..1000 {
                s = step(&s, &p(), 1e-3, scheme).unwrap();
            }
            let u = s.m.component(0).values()[0];
            let v = s.j.component(0).values()[0];
            let exact = (-2.0f64).exp();
            let tol = if scheme == Scheme::Rk4 { 1e-9 } else { 1e-6 };
            assert!(((u - v) - exact).abs() <= tol * exact, "{scheme:?}: {}", u - v);
        }
    }

    #[test]
    fn equilibrium_is_fixed() {
        let g = GridSpec::new(1, 16).unwrap();
        let s = uniform(g, 0.3, 0.3);
        let t = step(&s, &p(), 1e-2, Scheme::Rk4).unwrap();
        for (a, b) in s.m.component(0).values().iter().zip(t.m.component(0).values()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(t.n.max_abs() < 1e-15);
    }

    #[test]
    fn zero_end_time_gives_single_record() {
        let g = GridSpec::new(1, 16).unwrap();
        let r = run(&uniform(g, 0.1, 0.0), &p(), &TimeConfig::new(0.0, 1e-2), None).unwrap();
        assert_eq!(r.status, RunStatus::Completed);
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.records[0].t, 0.0);
    }

    #[test]
    fn negative_density_is_fluid_vacuum() {
        let g = GridSpec::new(1, 16).unwrap();
        let mut s = uniform(g, 0.0, 0.0);
        s.n = RealField::from_fn(g, |x| 0.9 * x[0].cos());
        s.j = VectorField::from_components(vec![RealField::from_fn(g, |x| -5.0 * x[0].sin())]).unwrap();
        let mut cfg = TimeConfig::new(5.0, 0.05);
        cfg.cfl_advective = 1.0;
        cfg.cfl_diffusive = 1.0;
        let r = run(&s, &p(), &cfg, None).unwrap();
        assert_ne!(r.status, RunStatus::Completed);
        assert!(!r.records.last().unwrap().flags.is_empty());
    }
}
