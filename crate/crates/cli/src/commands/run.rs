use std::io::Write;

use spray_core::diagnostics::DiagnosticsRecord;
use spray_core::dynamics::State;
use spray_core::integrator::{run_with_hook, RecordHook, RunResult, RunStatus};

use super::{initial_state, CommandOptions};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::records::{plot_data_csv, write_records, write_text};
use crate::snapshot::SnapshotWriter;

struct SnapshotHook {
    writer: SnapshotWriter,
    every: usize,
    seen: usize,
    error: Option<CliError>,
}

impl RecordHook for SnapshotHook {
    fn on_record(&mut self, state: &State, record: &DiagnosticsRecord) {
        if self.error.is_none() && self.seen.is_multiple_of(self.every) {
            if let Err(e) = self.writer.write(state, record.t) {
                self.error = Some(e);
            }
        }
        self.seen += 1;
    }
}

/// Runs `cfg`, writing records (and snapshots, plot data if requested)
/// under `opts.out`. `extra` sees every record as well.
pub fn execute_run(
    cfg: &RunConfig,
    opts: &CommandOptions,
    extra: Option<&mut dyn RecordHook>,
) -> CliResult<RunResult> {
    let cfg = opts.apply(cfg);
    let initial = initial_state(&cfg)?;
    let mut snaps = match &cfg.outputs.snapshots_path {
        Some(p) => Some(SnapshotHook {
            writer: SnapshotWriter::new(&opts.resolve(p), cfg.grid)?,
            every: cfg.outputs.snapshot_every.unwrap_or(1),
            seen: 0,
            error: None,
        }),
        None => None,
    };
    let mut extra = extra;
    let mut hook = |s: &State, r: &DiagnosticsRecord| {
        if let Some(h) = snaps.as_mut() {
            h.on_record(s, r);
        }
        if let Some(h) = extra.as_deref_mut() {
            h.on_record(s, r);
        }
    };
    let result = run_with_hook(&initial, &cfg.params, &cfg.time, cfg.sigma_override, &mut hook)
        .map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(e) = snaps.and_then(|h| h.error) {
        return Err(e);
    }
    let dim = cfg.grid.dim();
    write_records(&opts.resolve(&cfg.outputs.records_path), &result.records, dim)?;
    if opts.emit_plot_data {
        write_text(&opts.resolve("plot_data.csv"), &plot_data_csv(&result.records))?;
    }
    Ok(result)
}

/// `run`: integrates and writes records; fails with a run error unless the
/// run completed.
pub fn cmd_run(cfg: &RunConfig, opts: &CommandOptions, out: &mut dyn Write) -> CliResult<RunResult> {
    let result = execute_run(cfg, opts, None)?;
    let _ = writeln!(
        out,
        "status {:?} steps {} records {} -> {}",
        result.status,
        result.steps,
        result.records.len(),
        opts.resolve(&cfg.outputs.records_path).display()
    );
    if result.status != RunStatus::Completed {
        let why = result
            .failure
            .as_ref()
            .map(|e| e.to_string())
            .unwrap_or_else(|| format!("{:?}", result.status));
        return Err(CliError::Run(why));
    }
    Ok(result)
}
