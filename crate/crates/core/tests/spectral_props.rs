use proptest::prelude::*;
use spray_core::spectral::{
    bogovskii, bogovskii_constant, dealias, ddx, divergence, gradient, laplacian, norms,
    poisson_mean_zero, vector_norms, Spectrum, DEFAULT_MEAN_TOL,
};
use spray_core::{Error, GridSpec, RealField};

fn grid_for(dim: usize) -> GridSpec {
    GridSpec::new(dim, [0, 32, 16, 8][dim]).unwrap()
}

/// Sum of cosines with wavevectors below the dealiasing cutoff, mean removed.
fn band_limited(grid: GridSpec, waves: &[([i64; 3], f64, f64)]) -> RealField {
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

fn waves(dim: usize) -> impl Strategy<Value = Vec<([i64; 3], f64, f64)>> {
    let kmax = (grid_for(dim).points_per_axis() / 3) as i64 - 1;
    prop::collection::vec(
        (
            prop::array::uniform3(-kmax..=kmax),
            -1.0f64..1.0,
            0.0f64..std::f64::consts::TAU,
        ),
        1..5,
    )
    .prop_map(move |ws| {
        ws.into_iter()
            .map(|(mut k, a, p)| {
                for c in k.iter_mut().skip(dim) {
                    *c = 0;
                }
                if k.iter().all(|&c| c == 0) {
                    k[0] = 1;
                }
                (k, a, p)
            })
            .collect()
    })
}

fn dim_and_waves() -> impl Strategy<Value = (usize, Vec<([i64; 3], f64, f64)>)> {
    (1usize..=3).prop_flat_map(|d| (Just(d), waves(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval((dim, ws) in dim_and_waves()) {
        let f = band_limited(grid_for(dim), &ws);
        let physical = f.inner_mean(&f) * f.grid().volume();
        let spectral = Spectrum::of(&f).l2_norm().powi(2);
        prop_assert!((physical - spectral).abs() <= 1e-12 * physical.max(1e-300));
    }

    #[test]
    fn poisson_inverts_laplacian((dim, ws) in dim_and_waves()) {
        let f = band_limited(grid_for(dim), &ws);
        let phi = poisson_mean_zero(&f, DEFAULT_MEAN_TOL).unwrap();
        prop_assert!(phi.mean().abs() < 1e-14);
        let res = laplacian(&phi).zip_map(&f, |a, b| a - b).unwrap();
        prop_assert!(norms(&res).l2 <= 1e-10 * norms(&f).l2);
    }

    #[test]
    fn bogovskii_is_right_inverse_of_divergence((dim, ws) in dim_and_waves()) {
        let f = band_limited(grid_for(dim), &ws);
        let b = bogovskii(&f).unwrap();
        let res = divergence(&b).zip_map(&f, |a, b| a - b).unwrap();
        prop_assert!(norms(&res).l2 <= 1e-10 * norms(&f).l2);
        let c_star = bogovskii_constant(f.grid());
        prop_assert!(vector_norms(&b).h1 <= c_star * norms(&f).l2 * (1.0 + 1e-12));
    }

    #[test]
    fn bogovskii_field_is_curl_free(ws in waves(2)) {
        let f = band_limited(grid_for(2), &ws);
        let b = bogovskii(&f).unwrap();
        let curl = ddx(b.component(1), 0).unwrap()
            .zip_map(&ddx(b.component(0), 1).unwrap(), |a, c| a - c)
            .unwrap();
        prop_assert!(curl.max_abs() <= 1e-12 * norms(&f).l2.max(1.0));
    }

    #[test]
    fn poincare((dim, ws) in dim_and_waves()) {
        let f = band_limited(grid_for(dim), &ws);
        prop_assert!(norms(&f).l2 <= vector_norms(&gradient(&f)).l2 * (1.0 + 1e-12));
    }

    #[test]
    fn dealias_is_a_projection((dim, ws) in dim_and_waves(), extra in 0.0f64..1.0) {
        let g = grid_for(dim);
        let low = band_limited(g, &ws);
        let n = g.points_per_axis() as f64;
        let k_high = (n / 2.0 - 1.0).floor();
        let f = low.zip_map(&RealField::from_fn(g, |x| extra * (k_high * x[0]).cos()), |a, b| a + b).unwrap();
        let once = dealias(&f);
        let twice = dealias(&once);
        let diff = once.zip_map(&twice, |a, b| a - b).unwrap();
        prop_assert!(diff.max_abs() <= 1e-13);
        let kept = once.zip_map(&low, |a, b| a - b).unwrap();
        prop_assert!(kept.max_abs() <= 1e-12);
    }

    #[test]
    fn derivative_of_single_mode(k in 1i64..10, a in -2.0f64..2.0, p in 0.0f64..6.0) {
        let g = grid_for(1);
        let f = RealField::from_fn(g, |x| a * (k as f64 * x[0] + p).sin());
        let d = ddx(&f, 0).unwrap();
        let exact = RealField::from_fn(g, |x| a * k as f64 * (k as f64 * x[0] + p).cos());
        let err = d.zip_map(&exact, |x, y| x - y).unwrap();
        prop_assert!(err.max_abs() <= 1e-11 * (1.0 + a.abs() * k as f64));
    }
}

#[test]
fn nonzero_mean_rejected() {
    let g = grid_for(2);
    let f = RealField::constant(g, 1.0);
    assert!(matches!(poisson_mean_zero(&f, DEFAULT_MEAN_TOL), Err(Error::MeanNotZero { .. })));
    assert!(matches!(bogovskii(&f), Err(Error::MeanNotZero { .. })));
}

#[test]
fn bogovskii_constant_is_sqrt_two() {
    for dim in 1..=3 {
        let c = bogovskii_constant(grid_for(dim));
        assert!((c - 2f64.sqrt()).abs() < 1e-12, "dim {dim}: {c}");
    }
}
