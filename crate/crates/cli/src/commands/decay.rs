use std::io::Write;

use rayon::prelude::*;
use spray_core::diagnostics::{decay_fit, Series};
use spray_core::integrator::{run, RunStatus};
use spray_core::Error;

use super::{initial_state, CommandOptions};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::records::write_text;

/// One amplitude of a decay study. Fit fields are `NaN` when no fit was
/// possible; `note` says why.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub amplitude: f64,
    pub l0: f64,
    pub lambda_hat: f64,
    pub r_squared: f64,
    pub u_dist: f64,
    pub v_dist: f64,
    pub mcjc_dist: f64,
    pub status: String,
    pub note: String,
}

impl DecayRow {
    fn failed(amplitude: f64, status: &str, note: String) -> Self {
        Self {
            amplitude,
            l0: f64::NAN,
            lambda_hat: f64::NAN,
            r_squared: f64::NAN,
            u_dist: f64::NAN,
            v_dist: f64::NAN,
            mcjc_dist: f64::NAN,
            status: status.into(),
            note,
        }
    }

    pub fn fitted(&self) -> bool {
        self.note.is_empty()
    }
}

fn fit_note(e: &Error) -> String {
    match e {
        Error::NonPositiveValues => "NonPositiveValues".into(),
        Error::NotEnoughSamples { needed, got } => format!("NotEnoughSamples ({got} < {needed})"),
        other => other.to_string(),
    }
}

fn study_row(cfg: &RunConfig, amplitude: f64) -> DecayRow {
    let mut cfg = cfg.clone();
    cfg.initial_data = cfg.initial_data.with_amplitude(amplitude);
    let initial = match initial_state(&cfg) {
        Ok(s) => s,
        Err(e) => return DecayRow::failed(amplitude, "InadmissibleInit", e.to_string()),
    };
    let result = match run(&initial, &cfg.params, &cfg.time, cfg.sigma_override) {
        Ok(r) => r,
        Err(e) => return DecayRow::failed(amplitude, "Error", e.to_string()),
    };
    let recs = &result.records;
    let (first, last) = (&recs[0], &recs[recs.len() - 1]);
    let mut row = DecayRow {
        amplitude,
        l0: first.functionals.l,
        lambda_hat: f64::NAN,
        r_squared: f64::NAN,
        u_dist: last.alignment.u_dist,
        v_dist: last.alignment.v_dist,
        mcjc_dist: last.alignment.mcjc_dist,
        status: format!("{:?}", result.status),
        note: String::new(),
    };
    if result.status != RunStatus::Completed {
        row.note = result.failure.map(|e| e.to_string()).unwrap_or_default();
        return row;
    }
    match decay_fit(recs, Series::L, None) {
        Ok(fit) => {
            row.lambda_hat = fit.lambda_hat;
            row.r_squared = fit.r_squared;
        }
        Err(e) => row.note = fit_note(&e),
    }
    row
}

/// One run per amplitude, in parallel; rows keep the input order and a
/// failing amplitude does not stop the others.
pub fn decay_study(cfg: &RunConfig, amplitudes: &[f64]) -> Vec<DecayRow> {
    amplitudes.par_iter().map(|&a| study_row(cfg, a)).collect()
}

pub fn decay_study_csv(rows: &[DecayRow]) -> String {
    let mut out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record([
            "amplitude", "L0", "lambda_hat", "r_squared", "u_dist_final", "v_dist_final",
            "mcjc_dist_final", "status", "note",
        ])
        .expect("in-memory write");
        for r in rows {
            let f = |x: f64| format!("{x:?}");
            w.write_record([
                f(r.amplitude),
                f(r.l0),
                f(r.lambda_hat),
                f(r.r_squared),
                f(r.u_dist),
                f(r.v_dist),
                f(r.mcjc_dist),
                r.status.clone(),
                r.note.clone(),
            ])
            .expect("in-memory write");
        }
        w.flush().expect("in-memory write");
    }
    String::from_utf8(out).expect("utf-8 output")
}

/// `decay-study`: amplitudes from the command line, else from the config.
pub fn cmd_decay_study(cfg: &RunConfig, opts: &CommandOptions, out: &mut dyn Write) -> CliResult<Vec<DecayRow>> {
    let cfg = opts.apply(cfg);
    let amplitudes = opts
        .amplitudes
        .clone()
        .or_else(|| cfg.decay_study.as_ref().map(|d| d.amplitudes.clone()))
        .ok_or_else(|| CliError::Config("\"decay_study.amplitudes\": no amplitudes given".into()))?;
    let rows = decay_study(&cfg, &amplitudes);
    let text = decay_study_csv(&rows);
    write_text(&opts.resolve("decay_study.csv"), &text)?;
    let _ = out.write_all(text.as_bytes());
    Ok(rows)
}
