//! Fourier differentiation, 2/3-rule dealiasing, the mean-zero Poisson solve
//! and the Bogovskii right inverse of the divergence on the periodic grid.
//!
//! Transforms are unnormalized forward / `1/N^dim`-scaled inverse complex FFTs
//! applied axis by axis. Odd derivatives zero the Nyquist bin of the
//! differentiated axis so the discrete derivative stays real and skew-adjoint.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField, VectorField};

/// Relative tolerance on `|mean f| / ‖f‖` accepted by the Poisson solve.
pub const DEFAULT_MEAN_TOL: f64 = 1e-10;

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> PlanPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

fn transform(grid: GridSpec, data: &mut [Complex64], forward: bool) {
    let n = grid.points_per_axis();
    let (fwd, inv) = plans(n);
    let fft = if forward { fwd } else { inv };
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut line = vec![Complex64::default(); n];
    for axis in 0..grid.dim() {
        let stride = grid.stride(axis);
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (i, l) in line.iter_mut().enumerate() {
                    *l = data[base + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, l) in line.iter().enumerate() {
                    data[base + i * stride] = *l;
                }
            }
        }
    }
}

/// Fourier coefficients of a real field, unnormalized (`f̂_k = Σ f_j e^{-ik·x_j}`).
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn of(f: &RealField) -> Self {
        let grid = f.grid();
        let mut coeffs: Vec<Complex64> =
            f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        transform(grid, &mut coeffs, true);
        Self { grid, coeffs }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Back to physical space, keeping the real part.
    pub fn to_real(&self) -> RealField {
        let mut data = self.coeffs.clone();
        transform(self.grid, &mut data, false);
        let scale = 1.0 / self.grid.len() as f64;
        let values = data.into_iter().map(|c| c.re * scale).collect();
        RealField::from_values(self.grid, values).expect("length preserved")
    }

    fn wavevector(&self, idx: usize) -> [i64; 3] {
        let mut k = [0; 3];
        for (axis, ka) in k.iter_mut().enumerate().take(self.grid.dim()) {
            *ka = self.grid.wavenumber(self.grid.axis_index(idx, axis));
        }
        k
    }

    /// Multiplies each coefficient by `symbol(k)`.
    pub fn apply(&self, symbol: impl Fn([i64; 3], usize) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| c * symbol(self.wavevector(idx), idx))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    /// Spectral derivative along `axis` (Nyquist bin of that axis zeroed).
    pub fn derivative(&self, axis: usize) -> Self {
        let grid = self.grid;
        self.apply(|k, idx| {
            if grid.is_nyquist(grid.axis_index(idx, axis)) {
                Complex64::default()
            } else {
                Complex64::new(0.0, k[axis] as f64)
            }
        })
    }

    /// Zeroes every mode with some `|k_axis| > N/3`.
    pub fn truncated(&self) -> Self {
        let cutoff = self.grid.points_per_axis() as f64 / 3.0;
        let dim = self.grid.dim();
        self.apply(|k, _| {
            if k[..dim].iter().any(|&ka| (ka.abs() as f64) > cutoff) {
                Complex64::default()
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
    }

    pub fn add_assign(&mut self, other: &Spectrum) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for a in &mut self.coeffs {
            *a *= c;
        }
    }

    /// `sqrt(Σ|f̂_k|²)/N^dim · sqrt(volume)`, the L² norm via Parseval.
    pub fn l2_norm(&self) -> f64 {
        let n = self.grid.len() as f64;
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (sum / (n * n) * self.grid.volume()).sqrt()
    }
}

/// Squared discrete Laplacian symbol `Σ k_a²`, consistent with the Nyquist
/// convention of [`ddx`] so that `divergence ∘ gradient == laplacian`.
fn k_squared(grid: GridSpec, k: [i64; 3], idx: usize) -> f64 {
    (0..grid.dim())
        .filter(|&a| !grid.is_nyquist(grid.axis_index(idx, a)))
        .map(|a| (k[a] * k[a]) as f64)
        .sum()
}

pub fn ddx(f: &RealField, axis: usize) -> Result<RealField> {
    f.grid().check_axis(axis)?;
    Ok(Spectrum::of(f).derivative(axis).to_real())
}

pub fn gradient(f: &RealField) -> VectorField {
    let spec = Spectrum::of(f);
    let comps = (0..f.grid().dim())
        .map(|a| spec.derivative(a).to_real())
        .collect();
    VectorField::from_components(comps).expect("one component per axis")
}

pub fn divergence(v: &VectorField) -> RealField {
    let grid = v.grid();
    let mut acc = Spectrum::zeros(grid);
    for (a, c) in v.components().iter().enumerate() {
        acc.add_assign(&Spectrum::of(c).derivative(a));
    }
    acc.to_real()
}

pub fn laplacian(f: &RealField) -> RealField {
    let grid = f.grid();
    Spectrum::of(f)
        .apply(|k, idx| Complex64::new(-k_squared(grid, k, idx), 0.0))
        .to_real()
}

pub fn vector_laplacian(v: &VectorField) -> VectorField {
    let comps = v.components().iter().map(laplacian).collect();
    VectorField::from_components(comps).expect("same shape")
}

/// Gradient tensor `∂_k v_i`, indexed `[i][k]`.
pub fn velocity_gradient(v: &VectorField) -> Vec<VectorField> {
    v.components().iter().map(gradient).collect()
}

/// 2/3-rule projection.
pub fn dealias(f: &RealField) -> RealField {
    Spectrum::of(f).truncated().to_real()
}

fn check_mean(f: &RealField, tol: f64) -> Result<()> {
    let mean = f.mean();
    let norm = norms(f).l2;
    // ‖f‖ on the physical torus; compare against the normalized mean scaled alike.
    let mean_l2 = mean.abs() * f.grid().volume().sqrt();
    if mean_l2 > tol * norm && mean != 0.0 {
        return Err(Error::MeanNotZero { mean, norm });
    }
    Ok(())
}

/// Solves `Δφ = f − mean(f)` with `mean(φ) = 0`.
pub fn poisson_mean_zero(f: &RealField, tol: f64) -> Result<RealField> {
    check_mean(f, tol)?;
    Ok(poisson_unchecked(f))
}

fn poisson_unchecked(f: &RealField) -> RealField {
    let grid = f.grid();
    Spectrum::of(f)
        .apply(|k, idx| {
            let k2 = k_squared(grid, k, idx);
            if k2 == 0.0 {
                Complex64::default()
            } else {
                Complex64::new(-1.0 / k2, 0.0)
            }
        })
        .to_real()
}

/// `𝓑[f] = ∇φ` with `Δφ = f`, a right inverse of the divergence on mean-zero data.
pub fn bogovskii(f: &RealField) -> Result<VectorField> {
    bogovskii_with_tol(f, DEFAULT_MEAN_TOL)
}

pub fn bogovskii_with_tol(f: &RealField, tol: f64) -> Result<VectorField> {
    check_mean(f, tol)?;
    Ok(bogovskii_unchecked(f))
}

pub(crate) fn bogovskii_unchecked(f: &RealField) -> VectorField {
    let grid = f.grid();
    let phi = Spectrum::of(f).apply(|k, idx| {
        let k2 = k_squared(grid, k, idx);
        if k2 == 0.0 {
            Complex64::default()
        } else {
            Complex64::new(-1.0 / k2, 0.0)
        }
    });
    let comps = (0..grid.dim())
        .map(|a| phi.derivative(a).to_real())
        .collect();
    VectorField::from_components(comps).expect("one component per axis")
}

/// Supremum of `‖𝓑[f]‖_{H¹}/‖f‖_{L²}` over single Fourier modes below the
/// dealiasing cutoff. The operator is diagonal in Fourier space, so the
/// supremum over modes is the operator norm on band-limited fields.
pub fn bogovskii_constant(grid: GridSpec) -> f64 {
    let cutoff = (grid.points_per_axis() as f64 / 3.0).floor() as i64;
    let mut best: f64 = 0.0;
    for k in 1..=cutoff {
        let f = RealField::from_fn(grid, |x| (k as f64 * x[0]).cos());
        let b = bogovskii_unchecked(&f);
        best = best.max(vector_norms(&b).h1 / norms(&f).l2);
    }
    best
}

/// L², H¹ and grid-max norms on the physical torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
    pub linf_grid: f64,
}

pub fn norms(f: &RealField) -> Norms {
    let vol = f.grid().volume();
    let l2sq = f.inner_mean(f) * vol;
    let grad = gradient(f);
    let gsq = grad.inner_mean(&grad) * vol;
    Norms {
        l2: l2sq.sqrt(),
        h1: (l2sq + gsq).sqrt(),
        linf_grid: f.max_abs(),
    }
}

pub fn vector_norms(v: &VectorField) -> Norms {
    let parts: Vec<Norms> = v.components().iter().map(norms).collect();
    Norms {
        l2: parts.iter().map(|p| p.l2 * p.l2).sum::<f64>().sqrt(),
        h1: parts.iter().map(|p| p.h1 * p.h1).sum::<f64>().sqrt(),
        linf_grid: v.magnitude().max(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g1(n: usize) -> GridSpec {
        GridSpec::new(1, n).unwrap()
    }

    fn max_diff(a: &RealField, b: &RealField) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn derivative_of_sine() {
        let g = g1(32);
        let f = RealField::from_fn(g, |x| x[0].sin());
        let d = ddx(&f, 0).unwrap();
        let exact = RealField::from_fn(g, |x| x[0].cos());
        assert!(max_diff(&d, &exact) < 1e-13);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let g = GridSpec::new(2, 16).unwrap();
        let d = ddx(&RealField::constant(g, 4.2), 1).unwrap();
        assert!(d.max_abs() < 1e-13);
    }

    #[test]
    fn mixed_mode_derivative() {
        let g = GridSpec::new(2, 32).unwrap();
        let f = RealField::from_fn(g, |x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos());
        let d = ddx(&f, 1).unwrap();
        let exact = RealField::from_fn(g, |x| -2.0 * (3.0 * x[0]).sin() * (2.0 * x[1]).sin());
        assert!(max_diff(&d, &exact) < 1e-12);
    }

    #[test]
    fn axis_out_of_range() {
        let f = RealField::zeros(g1(8));
        assert_eq!(
            ddx(&f, 1),
            Err(Error::AxisOutOfRange { axis: 1, dim: 1 })
        );
    }

    #[test]
    fn laplacian_eigenfunction() {
        let g = g1(16);
        let f = RealField::from_fn(g, |x| x[0].sin());
        assert!(max_diff(&laplacian(&f), &f.scaled(-1.0)) < 1e-13);
    }

    #[test]
    fn gradient_of_separable_modes() {
        let g = GridSpec::new(2, 16).unwrap();
        let f = RealField::from_fn(g, |x| x[0].cos() + x[1].cos());
        let grad = gradient(&f);
        let ex = RealField::from_fn(g, |x| -x[0].sin());
        let ey = RealField::from_fn(g, |x| -x[1].sin());
        assert!(max_diff(grad.component(0), &ex) < 1e-13);
        assert!(max_diff(grad.component(1), &ey) < 1e-13);
    }

    #[test]
    fn divergence_of_constant_vector() {
        let g = GridSpec::new(3, 8).unwrap();
        let v = VectorField::constant(g, &[1.0, -2.0, 3.0]);
        assert!(divergence(&v).max_abs() < 1e-13);
    }

    #[test]
    fn dealias_cases() {
        let g = g1(16);
        let low = RealField::from_fn(g, |x| (5.0 * x[0]).cos() + x[0].sin());
        assert!(max_diff(&dealias(&low), &low) < 1e-13);
        for n in [8, 16, 64] {
            let g = g1(n);
            let k = (n / 2 - 1) as f64;
            let high = RealField::from_fn(g, |x| (k * x[0]).cos());
            assert!(dealias(&high).max_abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn poisson_single_modes() {
        let g = GridSpec::new(2, 16).unwrap();
        let f = RealField::from_fn(g, |x| x[0].cos());
        let phi = poisson_mean_zero(&f, DEFAULT_MEAN_TOL).unwrap();
        assert!(max_diff(&phi, &f.scaled(-1.0)) < 1e-13);

        let f = RealField::from_fn(g, |x| (2.0 * x[0]).cos() + x[1].cos());
        let phi = poisson_mean_zero(&f, DEFAULT_MEAN_TOL).unwrap();
        let exact = RealField::from_fn(g, |x| -(2.0 * x[0]).cos() / 4.0 - x[1].cos());
        assert!(max_diff(&phi, &exact) < 1e-13);

        let zero = poisson_mean_zero(&RealField::zeros(g), DEFAULT_MEAN_TOL).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn poisson_rejects_nonzero_mean() {
        let f = RealField::from_fn(g1(16), |x| 1.0 + x[0].cos());
        assert!(matches!(
            poisson_mean_zero(&f, DEFAULT_MEAN_TOL),
            Err(Error::MeanNotZero { .. })
        ));
        assert!(matches!(bogovskii(&f), Err(Error::MeanNotZero { .. })));
    }

    #[test]
    fn bogovskii_of_cosine() {
        let g = GridSpec::new(2, 16).unwrap();
        let f = RealField::from_fn(g, |x| x[0].cos());
        let b = bogovskii(&f).unwrap();
        let ex = RealField::from_fn(g, |x| x[0].sin());
        assert!(max_diff(b.component(0), &ex) < 1e-13);
        assert!(b.component(1).max_abs() < 1e-13);
        assert!(vector_norms(&bogovskii(&RealField::zeros(g)).unwrap()).l2 == 0.0);
    }

    #[test]
    fn bogovskii_divergence_form_bound() {
        // f = ∇·g with g = (sin x, 0); ‖𝓑[f]‖ / ‖g‖ = 1 on a pure mode.
        let g = GridSpec::new(2, 16).unwrap();
        let gfield = VectorField::from_components(vec![
            RealField::from_fn(g, |x| x[0].sin()),
            RealField::zeros(g),
        ])
        .unwrap();
        let f = divergence(&gfield);
        let b = bogovskii(&f).unwrap();
        let ratio = vector_norms(&b).l2 / vector_norms(&gfield).l2;
        assert!(ratio <= 1.0 + 1e-8, "ratio {ratio}");
    }

    #[test]
    fn bogovskii_constant_is_sqrt_two() {
        let c = bogovskii_constant(g1(32));
        assert!((c - 2f64.sqrt()).abs() < 1e-12, "{c}");
    }

    #[test]
    fn norms_of_simple_fields() {
        let g = g1(32);
        let s = norms(&RealField::from_fn(g, |x| x[0].sin()));
        assert!((s.l2 - PI.sqrt()).abs() < 1e-13);
        assert!((s.h1 - (2.0 * PI).sqrt()).abs() < 1e-13);
        assert!((s.linf_grid - 1.0).abs() < 1e-2);
        let c = norms(&RealField::constant(g, -3.0));
        assert!((c.l2 - 3.0 * (2.0 * PI).sqrt()).abs() < 1e-12);
    }
}
