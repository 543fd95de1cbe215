use std::f64::consts::TAU;

use spray_core::kinetic::{closure_gap, deposit, mono_kinetic, push, ParticleEnsemble};
use spray_core::{GridSpec, RealField};

fn ensemble() -> ParticleEnsemble {
    mono_kinetic(|x| 1.0 + 0.3 * x.sin(), |x| 0.2 * (2.0 * x).cos(), 1000).unwrap()
}

#[test]
fn deposit_keeps_mass_and_momentum() {
    let g = GridSpec::new(1, 32).unwrap();
    let e = ensemble();
    let mo = deposit(&e, g).unwrap();
    let vol = g.cell_volume();
    let mass: f64 = mo.rho.values().iter().sum::<f64>() * vol;
    let mom: f64 = mo.m.component(0).values().iter().sum::<f64>() * vol;
    assert!((mass - e.total_mass()).abs() < 1e-12 * mass);
    assert!((mass - TAU).abs() < 1e-10);
    assert!((mom - e.total_momentum()).abs() < 1e-12);
}

#[test]
fn cold_uniform_flow_has_no_closure_gap() {
    let g = GridSpec::new(1, 16).unwrap();
    let e = mono_kinetic(|_| 1.0, |_| 0.4, 160).unwrap();
    assert!(closure_gap(&deposit(&e, g).unwrap()) < 1e-14);
}

#[test]
fn push_relaxes_to_fluid_velocity() {
    let g = GridSpec::new(1, 16).unwrap();
    let v = RealField::constant(g, 0.5);
    let mut e = mono_kinetic(|_| 1.0, |_| 0.0, 64).unwrap();
    let x0 = e.positions.clone();
    let dt = 1e-3;
    for _ in 0..1000 {
        e = push(&e, &v, dt);
    }
    // ξ(t) = 0.5(1 − e^{−t}) at t = 1
    let exact = 0.5 * (1.0 - (-1.0f64).exp());
    for (xi, (x, x0)) in e.velocities.iter().zip(e.positions.iter().zip(&x0)) {
        assert!((xi - exact).abs() < 1e-6);
        let disp = 0.5 * (1.0 + (-1.0f64).exp() - 1.0);
        let dx = (x - x0).rem_euclid(TAU);
        assert!((dx - disp).abs() < 1e-6, "{dx} {disp}");
    }
}

#[test]
fn invalid_ensembles_rejected() {
    assert!(ParticleEnsemble::new(vec![0.0], vec![0.0, 1.0], vec![1.0]).is_err());
    assert!(ParticleEnsemble::new(vec![0.0], vec![0.0], vec![-1.0]).is_err());
    assert!(ParticleEnsemble::new(vec![f64::NAN], vec![0.0], vec![1.0]).is_err());
}
