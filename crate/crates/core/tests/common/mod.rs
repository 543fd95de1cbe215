#![allow(dead_code)]

use spray_core::dynamics::{FluidParams, State};
use spray_core::init::{generate_initial, InitKind, InitSpec};
use spray_core::GridSpec;

pub fn params() -> FluidParams {
    FluidParams::new(2.0, 1.0, 0.0).unwrap()
}

/// Seeded multi-mode state with every amplitude equal to `amp`.
pub fn random_state(dim: usize, n: usize, seed: u64, amp: f64) -> State {
    let mut spec = InitSpec::single_mode(amp);
    spec.kind = InitKind::MultiMode;
    spec.seed = seed;
    generate_initial(&spec, GridSpec::new(dim, n).unwrap()).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}
