//! JSON run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use spray_core::dynamics::FluidParams;
use spray_core::init::{InitKind, InitSpec};
use spray_core::integrator::TimeConfig;
use spray_core::GridSpec;

use crate::error::{io_err, CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

fn d_records() -> String {
    "records.csv".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "d_records")]
    pub records_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots_path: Option<String>,
    /// Write a snapshot every this many records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            records_path: d_records(),
            snapshots_path: None,
            snapshot_every: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayStudyConfig {
    pub amplitudes: Vec<f64>,
}

fn d_particles() -> usize {
    100_000
}
fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticConfig {
    #[serde(default = "d_particles")]
    pub particles: usize,
    pub sample_times: Vec<f64>,
    /// Also run at `(2N, 4Np, dt_max/2)` and report error ratios.
    #[serde(default = "d_true")]
    pub refine: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub grid: GridSpec,
    pub params: FluidParams,
    pub time: TimeConfig,
    pub initial_data: InitSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_override: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_study: Option<DecayStudyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinetic: Option<KineticConfig>,
}

/// Turns "missing field `x`" at `path` into a message naming `path.x`.
fn describe(path: &str, inner: &serde_json::Error) -> String {
    let msg = inner.to_string();
    if let Some(rest) = msg.strip_prefix("missing field `") {
        if let Some(end) = rest.find('`') {
            let field = &rest[..end];
            let key = if path.is_empty() || path == "." {
                field.to_string()
            } else {
                format!("{path}.{field}")
            };
            return format!("missing key \"{key}\"");
        }
    }
    if path.is_empty() || path == "." {
        msg
    } else {
        format!("at \"{path}\": {msg}")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(describe(&path, e.inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> CliResult<()> {
        let key = |k: &str, m: String| CliError::Config(format!("\"{k}\": {m}"));
        if self.schema != SCHEMA_VERSION {
            return Err(key(
                "schema",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema),
            ));
        }
        self.params.validate().map_err(|e| key("params", e.to_string()))?;
        self.time.validate().map_err(|e| key("time", e.to_string()))?;
        if let Some(s) = self.sigma_override {
            if !(s.is_finite() && s >= 0.0) {
                return Err(key("sigma_override", format!("must be >= 0, got {s}")));
            }
        }
        let init = &self.initial_data;
        if !(init.base_rho.is_finite() && init.base_rho > 0.0) {
            return Err(key(
                "initial_data.base_rho",
                format!("must be > 0, got {}", init.base_rho),
            ));
        }
        if init.kind == InitKind::FromSnapshot && init.snapshot.is_none() {
            return Err(key(
                "initial_data.snapshot",
                "required when kind is from_snapshot".into(),
            ));
        }
        if self.outputs.records_path.is_empty() {
            return Err(key("outputs.records_path", "must not be empty".into()));
        }
        if self.outputs.snapshot_every == Some(0) {
            return Err(key("outputs.snapshot_every", "must be >= 1".into()));
        }
        if let Some(d) = &self.decay_study {
            if let Some(a) = d.amplitudes.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
                return Err(key(
                    "decay_study.amplitudes",
                    format!("amplitudes must be finite and >= 0, got {a}"),
                ));
            }
        }
        if let Some(k) = &self.kinetic {
            if k.particles == 0 {
                return Err(key("kinetic.particles", "must be >= 1".into()));
            }
            if k.sample_times.is_empty() {
                return Err(key("kinetic.sample_times", "must not be empty".into()));
            }
            let sorted = k.sample_times.windows(2).all(|w| w[0] < w[1]);
            if !sorted || k.sample_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return Err(key(
                    "kinetic.sample_times",
                    "must be finite, non-negative and increasing".into(),
                ));
            }
        }
        Ok(())
    }

    /// The reference configuration: 1D, N = 64, γ = 2, μ = 1, λ = 0,
    /// single mode of amplitude 0.05, RK4 to t = 20.
    pub fn reference() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            grid: GridSpec::new(1, 64).expect("valid grid"),
            params: FluidParams::new(2.0, 1.0, 0.0).expect("valid params"),
            time: TimeConfig::new(20.0, 0.01),
            initial_data: InitSpec::single_mode(0.05),
            sigma_override: None,
            outputs: Outputs::default(),
            decay_study: Some(DecayStudyConfig {
                amplitudes: vec![0.01, 0.02, 0.05],
            }),
            kinetic: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_round_trips() {
        let cfg = RunConfig::reference();
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn missing_gamma_is_named() {
        let mut v: serde_json::Value = serde_json::from_str(&RunConfig::reference().to_json()).unwrap();
        v["params"].as_object_mut().unwrap().remove("gamma");
        let err = RunConfig::from_json(&v.to_string()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("params.gamma"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let mut v: serde_json::Value = serde_json::from_str(&RunConfig::reference().to_json()).unwrap();
        v["time"]["cfl"] = 0.5.into();
        let err = RunConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("time"), "{err}");
        assert!(err.to_string().contains("cfl"), "{err}");
    }

    #[test]
    fn wrong_schema_rejected() {
        let mut cfg = RunConfig::reference();
        cfg.schema = 2;
        assert!(RunConfig::from_json(&cfg.to_json()).unwrap_err().to_string().contains("schema"));
    }

    #[test]
    fn invalid_values_name_their_key() {
        let mut cfg = RunConfig::reference();
        cfg.params.mu = -1.0;
        assert!(cfg.validate().unwrap_err().to_string().contains("params"));
        let mut cfg = RunConfig::reference();
        cfg.initial_data.kind = InitKind::FromSnapshot;
        assert!(cfg.validate().unwrap_err().to_string().contains("initial_data.snapshot"));
    }
}
