//! The pressure potential `f(r; r0) = r ∫_{r0}^{r} (h^γ − r0^γ)/h² dh`.
//!
//! Integrating gives the Bregman divergence of `r ↦ r^γ/(γ−1)`:
//! `f(r; r0) = (r^γ − r0^γ − γ r0^{γ−1}(r − r0)) / (γ − 1)`,
//! which is evaluated with a series near `r = r0` to avoid cancellation.

/// Scan resolution used by [`pressure_potential_bounds`].
pub const BOUNDS_SCAN_POINTS: usize = 10_000;

/// `(1+δ)^γ − 1 − γδ`, accurate for small `|δ|`.
fn bregman_unit(delta: f64, gamma: f64) -> f64 {
    if delta.abs() < 0.1 {
        // Σ_{k≥2} C(γ,k) δ^k
        let mut coeff = gamma * (gamma - 1.0) / 2.0;
        let mut pow = delta * delta;
        let mut sum = 0.0;
        for k in 2..60 {
            let term = coeff * pow;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
            coeff *= (gamma - k as f64) / (k as f64 + 1.0);
            pow *= delta;
        }
        sum
    } else {
        (gamma * delta.ln_1p()).exp_m1() - gamma * delta
    }
}

/// `f(r; r0)` in closed form. Requires `r ≥ 0`, `r0 > 0`, `γ > 1`.
pub fn pressure_potential(r: f64, r0: f64, gamma: f64) -> f64 {
    let delta = r / r0 - 1.0;
    r0.powf(gamma) * bregman_unit(delta, gamma) / (gamma - 1.0)
}

/// Excess pressure energy density `((1+n)^γ − 1 − γn)/(γ−1) = f(1+n; 1)`.
pub fn excess_pressure(n: f64, gamma: f64) -> f64 {
    bregman_unit(n, gamma) / (gamma - 1.0)
}

/// `(1+n)^γ − 1` without cancellation for small `n`.
pub(crate) fn pressure_minus_one(n: f64, gamma: f64) -> f64 {
    (gamma * n.ln_1p()).exp_m1()
}

/// `f(r; r0)` by adaptive Gauss–Kronrod quadrature of the defining integral.
pub fn pressure_potential_quadrature(r: f64, r0: f64, gamma: f64) -> f64 {
    if r == r0 {
        return 0.0;
    }
    if r == 0.0 {
        // r·∫ tends to r0^γ as r → 0
        return r0.powf(gamma);
    }
    let r0g = r0.powf(gamma);
    let integrand = |h: f64| (h.powf(gamma) - r0g) / (h * h);
    let (a, b, sign) = if r > r0 { (r0, r, 1.0) } else { (r, r0, -1.0) };
    r * sign * adaptive_gk(&integrand, a, b, 1e-13, 50)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_K15: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const GK_G7: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_K15[7] * fc;
    let mut g = GK_G7[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += GK_K15[i] * s;
        if i % 2 == 1 {
            g += GK_G7[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adaptive_gk(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, depth: u32) -> f64 {
    let (whole, err) = gk15(f, a, b);
    if depth == 0 || err <= rel_tol * whole.abs().max(1e-300) || err < 1e-300 {
        return whole;
    }
    let m = 0.5 * (a + b);
    adaptive_gk(f, a, m, rel_tol, depth - 1) + adaptive_gk(f, m, b, rel_tol, depth - 1)
}

/// Extremes of `f(r; r0)/(r − r0)²` over `r ∈ [0, r_bar]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialBounds {
    pub c1: f64,
    pub c2: f64,
}

/// Brute-force scan of the quadratic-comparison ratio on a uniform grid of
/// [`BOUNDS_SCAN_POINTS`] points, plus its limit `γ r0^{γ−2}/2` at `r → r0`.
pub fn pressure_potential_bounds(r0: f64, r_bar: f64, gamma: f64) -> PotentialBounds {
    let limit = 0.5 * gamma * r0.powf(gamma - 2.0);
    let mut c1 = limit;
    let mut c2 = limit;
    for i in 0..BOUNDS_SCAN_POINTS {
        let r = r_bar * i as f64 / (BOUNDS_SCAN_POINTS - 1) as f64;
        let d = r - r0;
        if d.abs() < 1e-12 * r0 {
            continue;
        }
        let ratio = pressure_potential(r, r0, gamma) / (d * d);
        c1 = c1.min(ratio);
        c2 = c2.max(ratio);
    }
    PotentialBounds { c1, c2 }
}
