//! Subcommand implementations. Each command returns structured results
//! and writes its human-readable report to a caller-supplied sink.

mod bogovskii;
mod decay;
mod kinetic;
mod run;
mod validate;

use std::path::{Path, PathBuf};

use spray_core::dynamics::State;
use spray_core::init::{generate_initial, InitKind};

pub use bogovskii::{bogovskii_suite, cmd_bogovskii_test, BogovskiiSuite, BOGOVSKII_FIELDS};
pub use decay::{cmd_decay_study, decay_study, decay_study_csv, DecayRow};
pub use kinetic::{cmd_kinetic_compare, kinetic_compare, KineticComparison, KineticLevel};
pub use run::{cmd_run, execute_run};
pub use validate::{cmd_validate, validation_checks, Check, InequalitySuite};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::snapshot::load_snapshot;

/// Options shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct CommandOptions {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub emit_plot_data: bool,
    pub amplitudes: Option<Vec<f64>>,
}

impl CommandOptions {
    pub fn with_out(out: &Path) -> Self {
        Self {
            out: out.to_path_buf(),
            ..Self::default()
        }
    }

    /// `path` relative to the output directory (absolute paths unchanged).
    pub fn resolve(&self, path: &str) -> PathBuf {
        self.out.join(path)
    }

    /// The config with command-line overrides applied.
    pub fn apply(&self, cfg: &RunConfig) -> RunConfig {
        let mut cfg = cfg.clone();
        if let Some(seed) = self.seed {
            cfg.initial_data.seed = seed;
        }
        cfg
    }
}

/// Initial state of a run, loading snapshot data when requested.
pub fn initial_state(cfg: &RunConfig) -> CliResult<State> {
    let spec = &cfg.initial_data;
    if spec.kind == InitKind::FromSnapshot {
        let path = spec.snapshot.as_deref().unwrap_or_default();
        let (state, _) = load_snapshot(Path::new(path))?;
        if state.grid() != cfg.grid {
            return Err(crate::error::CliError::Config(format!(
                "\"initial_data.snapshot\": grid {:?} does not match \"grid\" {:?}",
                state.grid(),
                cfg.grid
            )));
        }
        return Ok(state);
    }
    generate_initial(spec, cfg.grid)
        .map_err(|e| crate::error::CliError::Config(format!("\"initial_data\": {e}")))
}
