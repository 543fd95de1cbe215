//! Band-limited trigonometric initial data.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    UniformDrag,
    SingleMode,
    MultiMode,
    FromSnapshot,
}

/// One real number per unknown.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerField {
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub u: f64,
    #[serde(default)]
    pub n: f64,
    #[serde(default)]
    pub v: f64,
}

impl PerField {
    pub fn uniform(a: f64) -> Self {
        Self {
            rho: a,
            u: a,
            n: a,
            v: a,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn three() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub kind: InitKind,
    /// Perturbation amplitudes. For `uniform_drag`, `u` and `v` are the
    /// constant velocities along the first axis.
    #[serde(default)]
    pub amplitudes: PerField,
    #[serde(default)]
    pub phases: PerField,
    #[serde(default = "one")]
    pub base_rho: f64,
    /// Constant velocity offsets added to `u` and `v` along the first axis.
    #[serde(default)]
    pub offsets: PerField,
    /// Number of random modes per component for `multi_mode`.
    #[serde(default = "three")]
    pub modes: usize,
    /// Largest wavenumber per axis for `multi_mode`.
    #[serde(default = "three")]
    pub max_wavenumber: usize,
    #[serde(default)]
    pub seed: u64,
    /// Snapshot index file for `from_snapshot`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<String>,
}

impl InitSpec {
    pub fn single_mode(amplitude: f64) -> Self {
        Self {
            kind: InitKind::SingleMode,
            amplitudes: PerField::uniform(amplitude),
            phases: PerField::default(),
            base_rho: 1.0,
            offsets: PerField::default(),
            modes: 3,
            max_wavenumber: 3,
            seed: 0,
            snapshot: None,
        }
    }

    pub fn uniform_drag(u: f64, v: f64) -> Self {
        Self {
            kind: InitKind::UniformDrag,
            amplitudes: PerField {
                rho: 0.0,
                u,
                n: 0.0,
                v,
            },
            ..Self::single_mode(0.0)
        }
    }

    /// Same spec with every perturbation amplitude set to `a`.
    pub fn with_amplitude(&self, a: f64) -> Self {
        Self {
            amplitudes: PerField::uniform(a),
            ..self.clone()
        }
    }
}

/// Sum of `modes` random cosines of unit total weight on `grid`.
struct RandomSeries {
    waves: Vec<([i64; 3], f64, f64)>,
}

impl RandomSeries {
    fn draw(rng: &mut ChaCha8Rng, dim: usize, modes: usize, kmax: i64) -> Self {
        let mut waves = Vec::with_capacity(modes);
        while waves.len() < modes {
            let mut k = [0i64; 3];
            for c in k.iter_mut().take(dim) {
                *c = rng.gen_range(-kmax..=kmax);
            }
            if k.iter().all(|&c| c == 0) {
                continue;
            }
            let phase = rng.gen_range(0.0..TAU);
            let weight = rng.gen_range(0.5..1.0);
            waves.push((k, phase, weight));
        }
        let total: f64 = waves.iter().map(|w| w.2).sum();
        for w in &mut waves {
            w.2 /= total;
        }
        Self { waves }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.waves
            .iter()
            .map(|(k, ph, w)| {
                let arg: f64 = x.iter().zip(k).map(|(xi, ki)| xi * *ki as f64).sum();
                w * (arg + ph).cos()
            })
            .sum()
    }
}

fn e1(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> VectorField {
    let mut comps = vec![RealField::from_fn(grid, f)];
    comps.extend((1..grid.dim()).map(|_| RealField::zeros(grid)));
    VectorField::from_components(comps).expect("same grid")
}

/// Builds the initial state described by `spec`.
pub fn generate_initial(spec: &InitSpec, grid: GridSpec) -> Result<State> {
    let a = spec.amplitudes;
    let ph = spec.phases;
    let off = spec.offsets;
    let all = [
        a.rho, a.u, a.n, a.v, ph.rho, ph.u, ph.n, ph.v, off.u, off.v, spec.base_rho,
    ];
    if all.iter().any(|x| !x.is_finite()) {
        return Err(Error::InadmissibleInit("non-finite parameter".into()));
    }
    if !(spec.base_rho > 0.0) {
        return Err(Error::InadmissibleInit(format!(
            "base_rho must be > 0, got {}",
            spec.base_rho
        )));
    }
    let (rho, u, mut n, v) = match spec.kind {
        InitKind::UniformDrag => (
            RealField::constant(grid, spec.base_rho),
            e1(grid, |_| a.u + off.u),
            RealField::zeros(grid),
            e1(grid, |_| a.v + off.v),
        ),
        InitKind::SingleMode => (
            RealField::from_fn(grid, |x| spec.base_rho + a.rho * (x[0] + ph.rho).cos()),
            e1(grid, |x| a.u * (x[0] + ph.u).sin() + off.u),
            RealField::from_fn(grid, |x| a.n * (x[0] + ph.n).cos()),
            e1(grid, |x| a.v * (x[0] + ph.v).sin() + off.v),
        ),
        InitKind::MultiMode => {
            if spec.modes == 0 || spec.max_wavenumber == 0 {
                return Err(Error::InadmissibleInit(
                    "multi_mode needs modes >= 1 and max_wavenumber >= 1".into(),
                ));
            }
            let kmax = spec.max_wavenumber as i64;
            if 3 * kmax > grid.points_per_axis() as i64 {
                return Err(Error::InadmissibleInit(format!(
                    "max_wavenumber {kmax} is not resolved below the dealiasing cutoff"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let dim = grid.dim();
            let mut draw = || RandomSeries::draw(&mut rng, dim, spec.modes, kmax);
            let sr = draw();
            let rho = RealField::from_fn(grid, |x| spec.base_rho + a.rho * sr.eval(x));
            let su: Vec<RandomSeries> = (0..dim).map(|_| draw()).collect();
            let sn = draw();
            let sv: Vec<RandomSeries> = (0..dim).map(|_| draw()).collect();
            let vec_field = |s: &[RandomSeries], amp: f64, offset: f64| {
                let comps = s
                    .iter()
                    .enumerate()
                    .map(|(c, s)| {
                        let o = if c == 0 { offset } else { 0.0 };
                        RealField::from_fn(grid, |x| amp * s.eval(x) + o)
                    })
                    .collect();
                VectorField::from_components(comps).expect("same grid")
            };
            (
                rho,
                vec_field(&su, a.u, off.u),
                RealField::from_fn(grid, |x| a.n * sn.eval(x)),
                vec_field(&sv, a.v, off.v),
            )
        }
        InitKind::FromSnapshot => {
            return Err(Error::InadmissibleInit(
                "from_snapshot data must be loaded from files".into(),
            ))
        }
    };
    let mean_n = n.mean();
    n.add_constant(-mean_n);
    let min_rho = rho.min();
    if !(min_rho > 0.0) {
        return Err(Error::InadmissibleInit(format!("min rho0 = {min_rho} is not positive")));
    }
    let min_q = 1.0 + n.min();
    if !(min_q > 0.0) {
        return Err(Error::InadmissibleInit(format!("min(1+n0) = {min_q} is not positive")));
    }
    State::from_primitive(rho, &u, n, &v)
}
