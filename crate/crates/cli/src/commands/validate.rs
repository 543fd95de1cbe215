use std::io::Write;

use spray_core::diagnostics::{
    characteristic_lower_bound_check, dissipation_domination_check, equivalence_check,
    jc_bounds_check, DiagnosticsContext, DiagnosticsRecord,
};
use spray_core::dynamics::{FluidParams, State};
use spray_core::integrator::{RecordHook, RunResult, RunStatus};

use super::{execute_run, initial_state, CommandOptions};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// One line of the validation report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable bound, e.g. `<= 1e-8`.
    pub bound: String,
    pub pass: bool,
}

impl Check {
    fn le(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("<= {bound:e}"),
            pass: value <= bound,
        }
    }

    fn ge(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!(">= {bound:e}"),
            pass: value >= bound,
        }
    }

    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        format!("{},{:e},{},{}", self.name, self.value, self.bound, status)
    }
}

/// Per-record inequality checks that need the full state: the `j_c`
/// bounds, `𝓛_p ≤ C𝓓` and `c₁𝓛 ≤ 𝓔^σ ≤ c₂𝓛`.
#[derive(Debug, Clone)]
pub struct InequalitySuite {
    params: FluidParams,
    sigma: f64,
    c_star: f64,
    e0: f64,
    pub records: usize,
    /// Smallest of both `j_c` slacks, relative to `max(1, scale)`.
    pub min_jc_slack: f64,
    pub jc_ok: bool,
    /// Largest `𝓛_p / (C𝓓)`.
    pub max_dissipation_ratio: f64,
    pub dissipation_ok: bool,
    /// Smallest of `(𝓔^σ − c₁𝓛)/𝓛` and `(c₂𝓛 − 𝓔^σ)/𝓛`.
    pub min_equivalence_margin: f64,
    pub equivalence_ok: bool,
    pub errors: Vec<String>,
}

impl InequalitySuite {
    pub fn new(ctx: &DiagnosticsContext) -> Self {
        Self {
            params: ctx.params,
            sigma: ctx.sigma,
            c_star: ctx.c_star,
            e0: ctx.e0,
            records: 0,
            min_jc_slack: f64::INFINITY,
            jc_ok: true,
            max_dissipation_ratio: 0.0,
            dissipation_ok: true,
            min_equivalence_margin: f64::INFINITY,
            equivalence_ok: true,
            errors: Vec::new(),
        }
    }

    pub fn ok(&self) -> bool {
        self.jc_ok && self.dissipation_ok && self.equivalence_ok && self.errors.is_empty()
    }

    fn check(&mut self, state: &State) -> spray_core::Result<()> {
        let jc = jc_bounds_check(state, &self.params, self.e0)?;
        self.jc_ok &= jc.ok;
        self.min_jc_slack = self
            .min_jc_slack
            .min(jc.slack_jc / self.e0.abs().max(1.0))
            .min(jc.slack_jc_rate);
        let dd = dissipation_domination_check(state, &self.params)?;
        self.dissipation_ok &= dd.ok;
        if dd.l_p > 0.0 {
            self.max_dissipation_ratio =
                self.max_dissipation_ratio.max(dd.l_p / (dd.c_explicit * dd.d));
        }
        let eq = equivalence_check(state, &self.params, self.sigma, self.c_star)?;
        self.equivalence_ok &= eq.ok;
        if eq.l > 0.0 {
            let m = ((eq.e_sigma - eq.c1 * eq.l) / eq.l).min((eq.c2 * eq.l - eq.e_sigma) / eq.l);
            self.min_equivalence_margin = self.min_equivalence_margin.min(m);
        }
        Ok(())
    }
}

impl RecordHook for InequalitySuite {
    fn on_record(&mut self, state: &State, record: &DiagnosticsRecord) {
        self.records += 1;
        if let Err(e) = self.check(state) {
            self.errors.push(format!("t = {}: {e}", record.t));
        }
    }
}

fn max_relative_increase(records: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
    records
        .windows(2)
        .map(|w| {
            let (a, b) = (f(&w[0]), f(&w[1]));
            if b > a {
                (b - a) / a.abs().max(1e-300)
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Residual relative to its dissipation rate; residuals below `1e-15`
/// count as zero.
fn max_relative_residual(records: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> (f64, f64)) -> f64 {
    records
        .iter()
        .map(|r| {
            let (res, rate) = f(r);
            if res.abs() <= 1e-15 {
                0.0
            } else {
                res.abs() / rate.abs().max(1e-300)
            }
        })
        .fold(0.0, f64::max)
}

fn run_checks(result: &RunResult, suite: &InequalitySuite, initial: &State) -> Vec<Check> {
    let recs = &result.records;
    let first = recs.first();
    let completed = result.status == RunStatus::Completed;
    let mut checks = vec![Check {
        name: "status_completed".into(),
        value: if completed { 1.0 } else { 0.0 },
        bound: "== 1".into(),
        pass: completed,
    }];
    let m0 = first.map_or(1.0, |r| r.totals.mass_rho);
    let mass_drift = recs
        .iter()
        .map(|r| (r.totals.mass_rho - m0).abs() / m0.abs())
        .fold(0.0, f64::max);
    checks.push(Check::le("mass_rho_drift", mass_drift, 1e-8));
    let mean_n = recs.iter().map(|r| r.totals.mass_n.abs()).fold(0.0, f64::max);
    checks.push(Check::le("mean_n", mean_n, 1e-8));
    let p0 = first.map(|r| r.totals.momentum.clone()).unwrap_or_default();
    let p0_norm = p0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = p0_norm
        .max(initial.m.magnitude().mean() + initial.j.magnitude().mean())
        .max(1e-300);
    let mom_drift = recs
        .iter()
        .map(|r| {
            r.totals
                .momentum
                .iter()
                .zip(&p0)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
                / scale
        })
        .fold(0.0, f64::max);
    checks.push(Check::le("momentum_drift", mom_drift, 1e-6));
    checks.push(Check::le("mean_n_reprojection", result.max_reprojection, 1e-10));
    checks.push(Check::le(
        "energy_balance_residual",
        max_relative_residual(recs, |r| (r.identity_residuals.energy_balance, r.identity_residuals.dissipation_mid)),
        1e-6,
    ));
    checks.push(Check::le(
        "esigma_balance_residual",
        max_relative_residual(recs, |r| (r.identity_residuals.esigma_balance, r.identity_residuals.dsigma_mid)),
        1e-6,
    ));
    checks.push(Check::le(
        "energy_monotone",
        max_relative_increase(recs, |r| r.functionals.e),
        1e-12,
    ));
    checks.push(Check::le(
        "esigma_monotone",
        max_relative_increase(recs, |r| r.functionals.e_sigma),
        1e-9,
    ));
    let finite_or_zero = |x: f64| if x.is_finite() { x } else { 0.0 };
    let mut jc = Check::ge("jc_bounds", finite_or_zero(suite.min_jc_slack), -1e-10);
    jc.pass &= suite.jc_ok;
    checks.push(jc);
    let mut dd = Check::le("dissipation_domination", suite.max_dissipation_ratio, 1.0);
    dd.pass &= suite.dissipation_ok;
    checks.push(dd);
    let mut eq = Check::ge(
        "energy_equivalence",
        finite_or_zero(suite.min_equivalence_margin),
        -1e-10,
    );
    eq.pass &= suite.equivalence_ok;
    checks.push(eq);
    checks.push(Check {
        name: "inequality_evaluation_errors".into(),
        value: suite.errors.len() as f64,
        bound: "== 0".into(),
        pass: suite.errors.is_empty(),
    });
    let cb = characteristic_lower_bound_check(recs);
    let min_margin = cb.margins.iter().copied().fold(f64::INFINITY, f64::min);
    let mut c = Check::ge("characteristic_lower_bound", finite_or_zero(min_margin), 0.0);
    c.pass &= cb.ok;
    checks.push(c);
    checks.push(Check {
        name: "vacuum_floor_inactive".into(),
        value: if result.floor_ever_active { 1.0 } else { 0.0 },
        bound: "== 0".into(),
        pass: !result.floor_ever_active,
    });
    checks
}

/// Runs `cfg` and evaluates every check on the resulting records.
pub fn validation_checks(cfg: &RunConfig, opts: &CommandOptions) -> CliResult<(RunResult, Vec<Check>)> {
    let applied = opts.apply(cfg);
    let initial = initial_state(&applied)?;
    let ctx = DiagnosticsContext::new(
        &initial,
        &applied.params,
        applied.sigma_override,
        applied.time.vacuum_floor,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let mut suite = InequalitySuite::new(&ctx);
    let result = execute_run(&applied, opts, Some(&mut suite))?;
    let checks = run_checks(&result, &suite, &initial);
    Ok((result, checks))
}

/// `validate`: one CSV line per check; fails if any check fails.
pub fn cmd_validate(cfg: &RunConfig, opts: &CommandOptions, out: &mut dyn Write) -> CliResult<Vec<Check>> {
    let (_, checks) = validation_checks(cfg, opts)?;
    let _ = writeln!(out, "check,value,bound,status");
    for c in &checks {
        let _ = writeln!(out, "{}", c.line());
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(checks)
    } else {
        Err(CliError::Validation(failed.join(", ")))
    }
}
