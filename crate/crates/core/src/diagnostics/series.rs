//! Checks over a sequence of records.

use serde::{Deserialize, Serialize};

use super::record::DiagnosticsRecord;
use crate::error::{Error, Result};

/// Minimum number of records a decay fit accepts.
pub const MIN_FIT_SAMPLES: usize = 10;

/// Fraction of the record span skipped by the default fit window.
pub const DEFAULT_TRANSIENT_FRACTION: f64 = 0.2;

/// Functional selected for a decay fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Series {
    E,
    D,
    L,
    LP,
    EScript,
    ESigma,
}

impl Series {
    pub fn value(self, r: &DiagnosticsRecord) -> f64 {
        let f = &r.functionals;
        match self {
            Series::E => f.e,
            Series::D => f.d,
            Series::L => f.l,
            Series::LP => f.l_p,
            Series::EScript => f.e_script,
            Series::ESigma => f.e_sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub lambda_hat: f64,
    pub c_hat: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Least-squares fit of `value ≈ c e^{−λt}` on `(t, ln value)`.
pub fn fit_exponential(samples: &[(f64, f64)]) -> Result<DecayFit> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::NotEnoughSamples {
            needed: MIN_FIT_SAMPLES,
            got: samples.len(),
        });
    }
    if samples.iter().any(|&(_, v)| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::NonPositiveValues);
    }
    let k = samples.len() as f64;
    let tm = samples.iter().map(|s| s.0).sum::<f64>() / k;
    let ym = samples.iter().map(|s| s.1.ln()).sum::<f64>() / k;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(t, v) in samples {
        let (dx, dy) = (t - tm, v.ln() - ym);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateState("all samples share one time".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        lambda_hat: -slope,
        c_hat: intercept.exp(),
        r_squared,
        window: (samples[0].0, samples[samples.len() - 1].0),
    })
}

/// Fits the chosen functional over `window` (inclusive), or by default over
/// records after the first 20% of the time span.
pub fn decay_fit(
    records: &[DiagnosticsRecord],
    series: Series,
    window: Option<(f64, f64)>,
) -> Result<DecayFit> {
    let (lo, hi) = match window {
        Some(w) => w,
        None => {
            let (Some(first), Some(last)) = (records.first(), records.last()) else {
                return Err(Error::NotEnoughSamples {
                    needed: MIN_FIT_SAMPLES,
                    got: 0,
                });
            };
            let span = last.t - first.t;
            (first.t + DEFAULT_TRANSIENT_FRACTION * span, last.t)
        }
    };
    let samples: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.t >= lo && r.t <= hi)
        .map(|r| (r.t, series.value(r)))
        .collect();
    fit_exponential(&samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicBound {
    pub ok: bool,
    /// `min_rho(t) − (δ₀ e^{−∫‖∇u‖_∞} − tol)` per record.
    pub margins: Vec<f64>,
}

/// Lower density bound along characteristics,
/// `min ρ(t) ≥ δ₀ exp(−∫₀ᵗ ‖∇·u‖_∞)`, with `‖∇·u‖_∞ ≤ √d · grad_u_max`
/// and the time integral accumulated by the trapezoidal rule.
pub fn characteristic_lower_bound_check(records: &[DiagnosticsRecord]) -> CharacteristicBound {
    let Some(first) = records.first() else {
        return CharacteristicBound {
            ok: true,
            margins: Vec::new(),
        };
    };
    let dim_factor = (first.averages.m_c.len() as f64).sqrt();
    let delta0 = first.functionals.min_rho;
    let tol = 1e-6 * delta0;
    let mut accum = 0.0;
    let mut margins = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            let p = &records[i - 1];
            accum += 0.5
                * (r.t - p.t)
                * dim_factor
                * (r.functionals.grad_u_max + p.functionals.grad_u_max);
        }
        margins.push(r.functionals.min_rho - (delta0 * (-accum).exp() - tol));
    }
    CharacteristicBound {
        ok: margins.iter().all(|&m| m >= 0.0),
        margins,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSeries {
    pub t: Vec<f64>,
    pub u_dist: Vec<f64>,
    pub v_dist: Vec<f64>,
    pub mcjc_dist: Vec<f64>,
}

impl AlignmentSeries {
    /// Final-to-initial ratios of the three distances (`0` when both vanish).
    pub fn reduction(&self) -> [f64; 3] {
        let ratio = |s: &[f64]| match (s.first(), s.last()) {
            (Some(&a), Some(&b)) if a > 0.0 => b / a,
            (Some(_), Some(&b)) if b == 0.0 => 0.0,
            _ => f64::INFINITY,
        };
        [ratio(&self.u_dist), ratio(&self.v_dist), ratio(&self.mcjc_dist)]
    }
}

/// Distance series to the common velocity fixed by the initial averages.
pub fn alignment_check(records: &[DiagnosticsRecord]) -> AlignmentSeries {
    AlignmentSeries {
        t: records.iter().map(|r| r.t).collect(),
        u_dist: records.iter().map(|r| r.alignment.u_dist).collect(),
        v_dist: records.iter().map(|r| r.alignment.v_dist).collect(),
        mcjc_dist: records.iter().map(|r| r.alignment.mcjc_dist).collect(),
    }
}
