use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spray_core::spectral::{
    bogovskii, bogovskii_constant, divergence, gradient, laplacian, norms, poisson_mean_zero,
    vector_norms, DEFAULT_MEAN_TOL,
};
use spray_core::{GridSpec, RealField};

use super::{Check, CommandOptions};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const BOGOVSKII_FIELDS: usize = 50;
const MODES_PER_FIELD: usize = 6;

/// Worst cases over the random fields.
#[derive(Debug, Clone, PartialEq)]
pub struct BogovskiiSuite {
    pub fields: usize,
    /// `max ‖Δφ − f‖/‖f‖`.
    pub poisson_residual: f64,
    /// `max ‖∇·𝓑[f] − f‖/‖f‖`.
    pub divergence_residual: f64,
    /// `min ‖∇f‖/‖f‖`; the Poincaré inequality asks for `≥ 1`.
    pub poincare_ratio: f64,
    /// `max ‖𝓑[f]‖_{H¹}/‖f‖`.
    pub h1_ratio: f64,
    pub c_star: f64,
}

impl BogovskiiSuite {
    pub fn checks(&self) -> Vec<Check> {
        let le = |name: &str, value: f64, bound: f64| Check {
            name: name.into(),
            value,
            bound: format!("<= {bound:e}"),
            pass: value <= bound,
        };
        vec![
            le("poisson_residual", self.poisson_residual, 1e-10),
            le("bogovskii_divergence_residual", self.divergence_residual, 1e-10),
            Check {
                name: "poincare_ratio".into(),
                value: self.poincare_ratio,
                bound: ">= 1".into(),
                pass: self.poincare_ratio >= 1.0 - 1e-12,
            },
            le("bogovskii_h1_ratio", self.h1_ratio, self.c_star * (1.0 + 1e-12)),
        ]
    }
}

/// Mean-zero field made of a few random Fourier modes strictly below the
/// dealiasing cutoff.
pub fn random_mean_zero_field(grid: GridSpec, rng: &mut ChaCha8Rng) -> RealField {
    let kmax = ((grid.points_per_axis() / 3) as i64 - 1).max(1);
    let dim = grid.dim();
    let mut waves = Vec::with_capacity(MODES_PER_FIELD);
    while waves.len() < MODES_PER_FIELD {
        let mut k = [0i64; 3];
        for c in k.iter_mut().take(dim) {
            *c = rng.gen_range(-kmax..=kmax);
        }
        if k.iter().all(|&c| c == 0) {
            continue;
        }
        let amp: f64 = rng.gen_range(-1.0..1.0);
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        waves.push((k, amp, phase));
    }
    let mut f = RealField::from_fn(grid, |x| {
        waves
            .iter()
            .map(|(k, a, p)| {
                let arg: f64 = x.iter().zip(k).map(|(xi, ki)| xi * *ki as f64).sum();
                a * (arg + p).cos()
            })
            .sum()
    });
    let mean = f.mean();
    f.add_constant(-mean);
    f
}

pub fn bogovskii_suite(grid: GridSpec, seed: u64, fields: usize) -> CliResult<BogovskiiSuite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = BogovskiiSuite {
        fields,
        poisson_residual: 0.0,
        divergence_residual: 0.0,
        poincare_ratio: f64::INFINITY,
        h1_ratio: 0.0,
        c_star: bogovskii_constant(grid),
    };
    for _ in 0..fields {
        let f = random_mean_zero_field(grid, &mut rng);
        let fl2 = norms(&f).l2;
        let phi = poisson_mean_zero(&f, DEFAULT_MEAN_TOL)?;
        let lap_res = laplacian(&phi).zip_map(&f, |a, b| a - b)?;
        s.poisson_residual = s.poisson_residual.max(norms(&lap_res).l2 / fl2);
        let b = bogovskii(&f)?;
        let div_res = divergence(&b).zip_map(&f, |a, b| a - b)?;
        s.divergence_residual = s.divergence_residual.max(norms(&div_res).l2 / fl2);
        s.poincare_ratio = s.poincare_ratio.min(vector_norms(&gradient(&f)).l2 / fl2);
        s.h1_ratio = s.h1_ratio.max(vector_norms(&b).h1 / fl2);
    }
    Ok(s)
}

/// `bogovskii-test`: the Poisson/Bogovskii suite on the configured grid.
pub fn cmd_bogovskii_test(cfg: &RunConfig, opts: &CommandOptions, out: &mut dyn Write) -> CliResult<BogovskiiSuite> {
    let seed = opts.seed.unwrap_or(cfg.initial_data.seed);
    let suite = bogovskii_suite(cfg.grid, seed, BOGOVSKII_FIELDS)?;
    let checks = suite.checks();
    let _ = writeln!(out, "check,value,bound,status");
    for c in &checks {
        let _ = writeln!(out, "{}", c.line());
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(suite)
    } else {
        Err(CliError::Validation(failed.join(", ")))
    }
}
