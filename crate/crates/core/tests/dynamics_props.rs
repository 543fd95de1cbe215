mod common;

use common::{params, random_state};
use proptest::prelude::*;
use spray_core::dynamics::{drag_force, rhs, FluidParams, State};
use spray_core::{GridSpec, RealField, VectorField};

fn mean_abs_max(f: &RealField) -> f64 {
    f.mean().abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn semi_discrete_conservation(dim in 1usize..=3, seed in any::<u64>(), amp in 0.001f64..0.2) {
        let s = random_state(dim, 16, seed, amp);
        let r = rhs(&s, &params()).unwrap();
        prop_assert!(mean_abs_max(&r.d_rho) < 1e-14);
        prop_assert!(mean_abs_max(&r.d_n) < 1e-14);
        let total: Vec<f64> = r.d_m.mean().iter().zip(r.d_j.mean()).map(|(a, b)| a + b).collect();
        prop_assert!(total.iter().all(|t| t.abs() < 1e-13), "{total:?}");
    }

    #[test]
    fn drag_is_antisymmetric(dim in 1usize..=3, seed in any::<u64>(), amp in 0.001f64..0.2) {
        let s = random_state(dim, 16, seed, amp);
        let p = params();
        let u = s.particle_velocity(0.0).velocity;
        let v = s.fluid_velocity().unwrap();
        let f_pv = drag_force(&s.rho, &u, &v, &p);
        let f_vp = drag_force(&s.rho, &v, &u, &p);
        let mut sum = f_pv.clone();
        sum.axpy(1.0, &f_vp);
        prop_assert!(sum.magnitude().max() == 0.0);
        // the force does negative work on the relative velocity
        let mut rel = u.clone();
        rel.axpy(-1.0, &v);
        prop_assert!(f_pv.inner_mean(&rel) >= 0.0);
    }

    #[test]
    fn no_drag_decouples_phases(seed in any::<u64>(), other in any::<u64>(), amp in 0.001f64..0.1) {
        let p = params().with_drag(false);
        let a = random_state(2, 16, seed, amp);
        let b = random_state(2, 16, other, amp);
        // same particles, different fluid
        let mixed = State::new(a.rho.clone(), a.m.clone(), b.n.clone(), b.j.clone()).unwrap();
        let ra = rhs(&a, &p).unwrap();
        let rm = rhs(&mixed, &p).unwrap();
        prop_assert_eq!(&ra.d_rho, &rm.d_rho);
        prop_assert_eq!(&ra.d_m, &rm.d_m);
        let rb = rhs(&b, &p).unwrap();
        prop_assert_eq!(&rb.d_n, &rm.d_n);
        prop_assert_eq!(&rb.d_j, &rm.d_j);
    }
}

#[test]
fn equilibrium_is_stationary() {
    for dim in 1..=3 {
        let g = GridSpec::new(dim, 8).unwrap();
        let s = State::new(
            RealField::constant(g, 1.3),
            VectorField::zeros(g),
            RealField::zeros(g),
            VectorField::zeros(g),
        )
        .unwrap();
        let r = rhs(&s, &FluidParams::new(1.4, 0.5, 0.1).unwrap()).unwrap();
        assert_eq!(r.d_rho.max_abs(), 0.0);
        assert_eq!(r.d_n.max_abs(), 0.0);
        assert_eq!(r.d_m.magnitude().max(), 0.0);
        assert_eq!(r.d_j.magnitude().max(), 0.0);
    }
}

#[test]
fn uniform_drag_rates() {
    // ρ = 1, u = a, n = 0, v = b: m' = −(a−b), j' = a−b
    let g = GridSpec::new(1, 8).unwrap();
    let (a, b) = (0.7, -0.2);
    let s = State::from_primitive(
        RealField::constant(g, 1.0),
        &VectorField::constant(g, &[a]),
        RealField::zeros(g),
        &VectorField::constant(g, &[b]),
    )
    .unwrap();
    let r = rhs(&s, &params()).unwrap();
    for (&dm, &dj) in r.d_m.component(0).values().iter().zip(r.d_j.component(0).values()) {
        assert!((dm + (a - b)).abs() < 1e-14);
        assert!((dj - (a - b)).abs() < 1e-14);
    }
}
