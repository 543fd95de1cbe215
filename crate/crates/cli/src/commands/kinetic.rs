use std::io::Write;

use spray_core::dynamics::State;
use spray_core::integrator::integrate_to_times;
use spray_core::kinetic::{kinetic_run, mono_kinetic_from_state, FluidState, KineticRecord};
use spray_core::{GridSpec, RealField};

use super::{initial_state, CommandOptions};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::records::write_text;

/// Hydro versus kinetic comparison at one resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticLevel {
    pub points: usize,
    pub particles: usize,
    pub dt_max: f64,
    pub times: Vec<f64>,
    /// `‖ρ_kin − ρ_hydro‖` (normalized L²) at each sample time.
    pub rho_err: Vec<f64>,
    pub m_err: Vec<f64>,
    /// `‖ρ_hydro − mean ρ_hydro‖`, the hydro perturbation size.
    pub rho_pert: Vec<f64>,
    pub m_pert: Vec<f64>,
    /// `∫ρθ` of the deposited particles.
    pub theta_gap: Vec<f64>,
    /// `∫ρθ + ∫|q̂|`.
    pub closure_gap: Vec<f64>,
    pub kinetic_steps: usize,
}

impl KineticLevel {
    /// Errors relative to the hydro perturbation at the last sample time,
    /// as `(rho, m)`.
    pub fn relative_error(&self) -> (f64, f64) {
        let k = self.times.len() - 1;
        (
            self.rho_err[k] / self.rho_pert[k],
            self.m_err[k] / self.m_pert[k],
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticComparison {
    pub coarse: KineticLevel,
    pub fine: Option<KineticLevel>,
}

impl KineticComparison {
    /// Fine over coarse errors at the last sample time, as `(rho, m)`.
    pub fn error_ratio(&self) -> Option<(f64, f64)> {
        let f = self.fine.as_ref()?;
        let k = self.coarse.times.len() - 1;
        Some((
            f.rho_err[k] / self.coarse.rho_err[k],
            f.m_err[k] / self.coarse.m_err[k],
        ))
    }

    /// Fine over coarse `∫ρθ` at the last sample time.
    pub fn theta_gap_ratio(&self) -> Option<f64> {
        let f = self.fine.as_ref()?;
        let k = self.coarse.times.len() - 1;
        Some(f.theta_gap[k] / self.coarse.theta_gap[k])
    }
}

fn rms(f: &RealField) -> f64 {
    f.inner_mean(f).sqrt()
}

fn rms_diff(a: &RealField, b: &RealField) -> CliResult<f64> {
    Ok(rms(&a.zip_map(b, |x, y| x - y)?))
}

fn rms_fluct(f: &RealField) -> f64 {
    let mean = f.mean();
    rms(&f.map(|x| x - mean))
}

fn level(cfg: &RunConfig, initial: &State, particles: usize, times: &[f64]) -> CliResult<KineticLevel> {
    let mut tc = cfg.time;
    tc.t_end = *times.last().expect("sample times validated non-empty");
    let hydro = integrate_to_times(initial, &cfg.params, &tc, times)?;
    let ens = mono_kinetic_from_state(initial, particles)?;
    let fluid = FluidState {
        n: initial.n.clone(),
        j: initial.j.clone(),
    };
    let kin = kinetic_run(&ens, &fluid, &cfg.params, &tc, times)?;
    let mut out = KineticLevel {
        points: initial.grid().points_per_axis(),
        particles,
        dt_max: tc.dt_max,
        times: times.to_vec(),
        rho_err: Vec::new(),
        m_err: Vec::new(),
        rho_pert: Vec::new(),
        m_pert: Vec::new(),
        theta_gap: Vec::new(),
        closure_gap: Vec::new(),
        kinetic_steps: kin.steps,
    };
    let dx = initial.grid().cell_volume();
    for (&t, h) in times.iter().zip(&hydro) {
        let rec: &KineticRecord = kin
            .records
            .iter()
            .find(|r| r.t == t)
            .ok_or_else(|| CliError::Run(format!("kinetic run has no record at t = {t}")))?;
        let (hm, km) = (h.m.component(0), rec.moments.m.component(0));
        out.rho_err.push(rms_diff(&rec.moments.rho, &h.rho)?);
        out.m_err.push(rms_diff(km, hm)?);
        out.rho_pert.push(rms_fluct(&h.rho));
        out.m_pert.push(rms_fluct(hm));
        out.theta_gap.push(rec.moments.theta_rho.values().iter().sum::<f64>() * dx);
        out.closure_gap.push(rec.closure_gap);
    }
    Ok(out)
}

/// Runs both solvers from the same initial data and, if `kinetic.refine`
/// is set, again at `(2N, 4Np, dt_max/2)`.
pub fn kinetic_compare(cfg: &RunConfig) -> CliResult<KineticComparison> {
    if cfg.grid.dim() != 1 {
        return Err(CliError::Config("\"grid.dim\": kinetic-compare needs dim = 1".into()));
    }
    let kc = cfg
        .kinetic
        .as_ref()
        .ok_or_else(|| CliError::Config("missing key \"kinetic\"".into()))?;
    let times: Vec<f64> = kc.sample_times.iter().copied().filter(|&t| t > 0.0).collect();
    if times.is_empty() {
        return Err(CliError::Config("\"kinetic.sample_times\": need a time > 0".into()));
    }
    let initial = initial_state(cfg)?;
    let coarse = level(cfg, &initial, kc.particles, &times)?;
    let fine = if kc.refine {
        let mut fcfg = cfg.clone();
        fcfg.grid = GridSpec::new(1, 2 * cfg.grid.points_per_axis())
            .map_err(|e| CliError::Config(e.to_string()))?;
        fcfg.time.dt_max = 0.5 * cfg.time.dt_max;
        let fine_initial = initial_state(&fcfg)?;
        Some(level(&fcfg, &fine_initial, 4 * kc.particles, &times)?)
    } else {
        None
    };
    Ok(KineticComparison { coarse, fine })
}

fn report(cmp: &KineticComparison) -> String {
    let mut s = String::from(
        "level,N,Np,t,rho_err,m_err,rho_pert,m_pert,theta_gap,closure_gap\n",
    );
    let levels = std::iter::once(("coarse", &cmp.coarse)).chain(cmp.fine.iter().map(|f| ("fine", f)));
    for (name, l) in levels {
        for k in 0..l.times.len() {
            s.push_str(&format!(
                "{name},{},{},{:?},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                l.points,
                l.particles,
                l.times[k],
                l.rho_err[k],
                l.m_err[k],
                l.rho_pert[k],
                l.m_pert[k],
                l.theta_gap[k],
                l.closure_gap[k]
            ));
        }
    }
    s
}

/// `kinetic-compare`: writes `kinetic_compare.csv` and prints it with the
/// refinement ratios.
pub fn cmd_kinetic_compare(
    cfg: &RunConfig,
    opts: &CommandOptions,
    out: &mut dyn Write,
) -> CliResult<KineticComparison> {
    let cfg = opts.apply(cfg);
    let cmp = kinetic_compare(&cfg)?;
    let text = report(&cmp);
    write_text(&opts.resolve("kinetic_compare.csv"), &text)?;
    let _ = out.write_all(text.as_bytes());
    let (rr, rm) = cmp.coarse.relative_error();
    let _ = writeln!(out, "# relative error at final time: rho {rr:e}, m {rm:e}");
    if let (Some((a, b)), Some(g)) = (cmp.error_ratio(), cmp.theta_gap_ratio()) {
        let _ = writeln!(out, "# refinement ratio: rho {a:e}, m {b:e}, theta_gap {g:e}");
    }
    Ok(cmp)
}
