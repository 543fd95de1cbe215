//! Integral functionals of a state. Integrals are taken with respect to the
//! normalized measure on the torus, i.e. as grid means.

use serde::{Deserialize, Serialize};

use super::potential::{excess_pressure, pressure_minus_one};
use crate::dynamics::{FluidParams, State, MEAN_N_TOL};
use crate::error::{Error, Result};
use crate::grid::{RealField, VectorField};
use crate::spectral::{bogovskii_unchecked, divergence, gradient, velocity_gradient};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    /// Total particle mass.
    pub rho_c: f64,
    /// Mass-weighted mean particle velocity.
    pub m_c: Vec<f64>,
    /// Total fluid momentum.
    pub j_c: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub e: f64,
    pub d: f64,
    pub l: f64,
    pub l_p: f64,
    pub e_script: f64,
    pub e_sigma: f64,
    pub d_sigma: f64,
    pub e0_integral: f64,
    pub sigma: f64,
    pub min_rho: f64,
    pub min_n1: f64,
    pub grad_u_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lyapunov {
    pub l: f64,
    pub l_p: f64,
}

/// `𝓔`, `𝓔^σ`, `𝓓^σ` and the ten terms `I₁ … I₁₀` of `𝓓^σ`.
///
/// `I₁..I₃` are the viscous and drag parts of `𝓓`; `I₄..I₁₀` already carry
/// the factor `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractingEnergy {
    pub e_script: f64,
    pub e_sigma: f64,
    pub d_sigma: f64,
    pub terms: [f64; 10],
}

/// Time-differentiated quantities and their claimed rates, used to form the
/// centered residuals of the balance laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceTerms {
    /// `E − 2/(γ−1) − 2γ/(γ−1)∫n`: energy minus terms fixed by mass conservation.
    pub energy_excess: f64,
    pub dissipation: f64,
    pub e_sigma: f64,
    pub d_sigma: f64,
    /// Quantities differentiated in the three asymptotic identities.
    pub asym_value: [f64; 3],
    /// Their rates: `½ d/dt asym_value[i] + asym_rate[i] = 0`.
    pub asym_rate: [f64; 3],
    pub mass_rho: f64,
    pub mass_n: f64,
    pub momentum: Vec<f64>,
}

fn vals(v: &VectorField) -> Vec<&[f64]> {
    v.components().iter().map(RealField::values).collect()
}

fn grid_mean(len: usize, f: impl Fn(usize) -> f64) -> f64 {
    (0..len).map(f).sum::<f64>() / len as f64
}

pub fn averages(state: &State) -> Result<Averages> {
    let rho_c = state.rho.mean();
    if !(rho_c > 0.0) {
        return Err(Error::ZeroMass(rho_c));
    }
    Ok(Averages {
        rho_c,
        m_c: state.m.mean().iter().map(|x| x / rho_c).collect(),
        j_c: state.j.mean(),
    })
}

/// Velocities, averages and pointwise pieces shared by all functionals.
struct Kinematics<'a> {
    state: &'a State,
    params: FluidParams,
    avg: Averages,
    u: VectorField,
    v: VectorField,
    len: usize,
    dim: usize,
    /// 1 with drag on, 0 without.
    drag: f64,
}

impl<'a> Kinematics<'a> {
    fn new(state: &'a State, params: &FluidParams, floor: f64) -> Result<Self> {
        let avg = averages(state)?;
        let v = state.fluid_velocity()?;
        let u = state.particle_velocity(floor).velocity;
        let grid = state.grid();
        Ok(Self {
            state,
            params: *params,
            avg,
            u,
            v,
            len: grid.len(),
            dim: grid.dim(),
            drag: if params.drag_on { 1.0 } else { 0.0 },
        })
    }

    fn kinetic(&self) -> (f64, f64) {
        let (m, u, j, v) = (vals(&self.state.m), vals(&self.u), vals(&self.state.j), vals(&self.v));
        let dim = self.dim;
        let p = grid_mean(self.len, |i| (0..dim).map(|c| m[c][i] * u[c][i]).sum());
        let f = grid_mean(self.len, |i| (0..dim).map(|c| j[c][i] * v[c][i]).sum());
        (p, f)
    }

    fn pressure_excess(&self) -> f64 {
        let g = self.params.gamma;
        grid_mean(self.len, |i| excess_pressure(self.state.n.values()[i], g))
    }

    /// `E − 2/(γ−1)` without the term `2γ/(γ−1)∫n`, which is constant
    /// by mass conservation and would only add the round-off of `mean(n)`
    /// to the energy balance.
    fn energy_excess(&self) -> f64 {
        let (p, f) = self.kinetic();
        p + f + 2.0 * self.pressure_excess()
    }

    fn energy(&self) -> f64 {
        let g = self.params.gamma;
        self.energy_excess() + 2.0 * g / (g - 1.0) * self.state.n.mean() + 2.0 / (g - 1.0)
    }

    /// `(‖∇v‖², ‖∇·v‖², ∫ρ|u−v|²)`, the last one zero when drag is off.
    fn dissipation_parts(&self, grad_v: &[VectorField]) -> (f64, f64, f64) {
        let dim = self.dim;
        let g: Vec<Vec<&[f64]>> = grad_v.iter().map(vals).collect();
        let grad_sq = grid_mean(self.len, |i| {
            (0..dim).map(|a| (0..dim).map(|k| g[a][k][i].powi(2)).sum::<f64>()).sum()
        });
        let div_sq = grid_mean(self.len, |i| (0..dim).map(|a| g[a][a][i]).sum::<f64>().powi(2));
        let (u, v, rho) = (vals(&self.u), vals(&self.v), self.state.rho.values());
        let drag_sq = self.drag
            * grid_mean(self.len, |i| {
                rho[i] * (0..dim).map(|c| (u[c][i] - v[c][i]).powi(2)).sum::<f64>()
            });
        (grad_sq, div_sq, drag_sq)
    }

    fn dissipation(&self, grad_v: &[VectorField]) -> f64 {
        let (gs, ds, dr) = self.dissipation_parts(grad_v);
        self.params.mu * gs + (self.params.mu + self.params.lam) * ds + dr
    }

    /// `(∫ρ|u−m_c|², ∫(n+1)|v−j_c|², |m_c−j_c|², ∫n²)`.
    fn lyapunov_parts(&self) -> [f64; 4] {
        let dim = self.dim;
        let (u, v) = (vals(&self.u), vals(&self.v));
        let (rho, n) = (self.state.rho.values(), self.state.n.values());
        let (mc, jc) = (&self.avg.m_c, &self.avg.j_c);
        let a1 = grid_mean(self.len, |i| {
            rho[i] * (0..dim).map(|c| (u[c][i] - mc[c]).powi(2)).sum::<f64>()
        });
        let a2 = grid_mean(self.len, |i| {
            (1.0 + n[i]) * (0..dim).map(|c| (v[c][i] - jc[c]).powi(2)).sum::<f64>()
        });
        let a3 = (0..dim).map(|c| (mc[c] - jc[c]).powi(2)).sum();
        let a4 = grid_mean(self.len, |i| n[i] * n[i]);
        [a1, a2, a3, a4]
    }

    fn e_script(&self, parts: &[f64; 4]) -> f64 {
        let rc = self.avg.rho_c;
        parts[0] + parts[1] + 2.0 * self.pressure_excess() + rc / (1.0 + rc) * parts[2]
    }

    /// `j_c' = ∫ρ(u − v)`.
    fn jc_rate(&self) -> Vec<f64> {
        let (u, v, rho) = (vals(&self.u), vals(&self.v), self.state.rho.values());
        (0..self.dim)
            .map(|c| self.drag * grid_mean(self.len, |i| rho[i] * (u[c][i] - v[c][i])))
            .collect()
    }

    fn bogovskii_n(&self) -> Result<VectorField> {
        let mean = self.state.n.mean();
        if mean.abs() > MEAN_N_TOL {
            let norm = self.state.n.values().iter().map(|x| x * x).sum::<f64>().sqrt();
            return Err(Error::MeanNotZero { mean, norm });
        }
        let mut n0 = self.state.n.clone();
        n0.add_constant(-mean);
        Ok(bogovskii_unchecked(&n0))
    }

    fn interacting(&self, sigma: f64, grad_v: &[VectorField]) -> Result<InteractingEnergy> {
        let dim = self.dim;
        let len = self.len;
        let mu = self.params.mu;
        let mu_lam = self.params.mu + self.params.lam;
        let parts = self.lyapunov_parts();
        let e_script = self.e_script(&parts);
        let (gs, ds, dr) = self.dissipation_parts(grad_v);
        let mut terms = [0.0; 10];
        terms[0] = mu * gs;
        terms[1] = mu_lam * ds;
        terms[2] = dr;
        if sigma == 0.0 {
            return Ok(InteractingEnergy {
                e_script,
                e_sigma: e_script,
                d_sigma: terms.iter().sum(),
                terms,
            });
        }
        let gamma = self.params.gamma;
        let b = self.bogovskii_n()?;
        let grad_b = velocity_gradient(&b);
        let div_j = divergence(&self.state.j);
        let b_div_j = bogovskii_unchecked(&div_j);

        let (u, v, j) = (vals(&self.u), vals(&self.v), vals(&self.state.j));
        let (bv, bdj) = (vals(&b), vals(&b_div_j));
        let gb: Vec<Vec<&[f64]>> = grad_b.iter().map(vals).collect();
        let gv: Vec<Vec<&[f64]>> = grad_v.iter().map(vals).collect();
        let (rho, n, dj) = (self.state.rho.values(), self.state.n.values(), div_j.values());
        let jc = &self.avg.j_c;
        let jc_rate = self.jc_rate();

        let cross = grid_mean(len, |i| {
            (1.0 + n[i]) * (0..dim).map(|c| (v[c][i] - jc[c]) * bv[c][i]).sum::<f64>()
        });
        let e_sigma = e_script - 2.0 * sigma * cross;

        terms[3] = sigma
            * grid_mean(len, |i| {
                let mut s = 0.0;
                for a in 0..dim {
                    for k in 0..dim {
                        s += j[a][i] * v[k][i] * gb[a][k][i];
                    }
                }
                s
            });
        terms[4] = sigma * grid_mean(len, |i| n[i] * pressure_minus_one(n[i], gamma));
        terms[5] = -sigma
            * mu
            * grid_mean(len, |i| {
                let mut s = 0.0;
                for a in 0..dim {
                    for k in 0..dim {
                        s += gv[a][k][i] * gb[a][k][i];
                    }
                }
                s
            });
        terms[6] = -sigma
            * mu_lam
            * grid_mean(len, |i| (0..dim).map(|a| gv[a][a][i]).sum::<f64>() * n[i]);
        terms[7] = sigma
            * self.drag
            * grid_mean(len, |i| {
                rho[i] * (0..dim).map(|c| (u[c][i] - v[c][i]) * bv[c][i]).sum::<f64>()
            });
        terms[8] = -sigma
            * grid_mean(len, |i| {
                (1.0 + n[i]) * (0..dim).map(|c| (v[c][i] - jc[c]) * bdj[c][i]).sum::<f64>()
            });
        terms[9] = -sigma
            * grid_mean(len, |i| {
                (0..dim)
                    .map(|c| (-dj[i] * jc[c] + (1.0 + n[i]) * jc_rate[c]) * bv[c][i])
                    .sum::<f64>()
            });
        Ok(InteractingEnergy {
            e_script,
            e_sigma,
            d_sigma: terms.iter().sum(),
            terms,
        })
    }

    /// Rates of the three asymptotic identities, each written as
    /// `½ d/dt value + rate = 0`.
    fn asym(&self, grad_v: &[VectorField]) -> ([f64; 3], [f64; 3]) {
        let dim = self.dim;
        let parts = self.lyapunov_parts();
        let (gs, ds, _) = self.dissipation_parts(grad_v);
        let (u, v, rho) = (vals(&self.u), vals(&self.v), self.state.rho.values());
        let (mc, jc) = (&self.avg.m_c, &self.avg.j_c);
        let rc = self.avg.rho_c;
        let r1 = self.drag
            * grid_mean(self.len, |i| {
                rho[i] * (0..dim).map(|c| (u[c][i] - mc[c]) * (u[c][i] - v[c][i])).sum::<f64>()
            });
        let r2 = self.params.mu * gs + (self.params.mu + self.params.lam) * ds
            - self.drag
                * grid_mean(self.len, |i| {
                    rho[i]
                        * (0..dim)
                            .map(|c| (v[c][i] - jc[c]) * (u[c][i] - v[c][i]))
                            .sum::<f64>()
                });
        let jr = self.jc_rate();
        let r3 = (1.0 + rc) / rc * (0..dim).map(|c| (mc[c] - jc[c]) * jr[c]).sum::<f64>();
        let values = [parts[0], parts[1] + 2.0 * self.pressure_excess(), parts[2]];
        (values, [r1, r2, r3])
    }

    fn grad_u_max(&self) -> f64 {
        let gu: Vec<VectorField> = self.u.components().iter().map(gradient).collect();
        let g: Vec<Vec<&[f64]>> = gu.iter().map(vals).collect();
        let dim = self.dim;
        (0..self.len)
            .map(|i| {
                (0..dim)
                    .map(|a| (0..dim).map(|k| g[a][k][i].powi(2)).sum::<f64>())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    fn e0_integral(&self) -> f64 {
        let dim = self.dim;
        let v = vals(&self.v);
        let n = self.state.n.values();
        let g = self.params.gamma;
        grid_mean(self.len, |i| {
            excess_pressure(n[i], g)
                + 0.5 * (1.0 + n[i]) * (0..dim).map(|c| v[c][i].powi(2)).sum::<f64>()
        })
    }
}

/// `E = ∫ρ|u|² + (n+1)|v|² + 2/(γ−1)∫(n+1)^γ`, the functional whose decay
/// rate is `2𝓓`.
pub fn total_energy(state: &State, params: &FluidParams) -> Result<f64> {
    let k = Kinematics::new(state, params, crate::dynamics::DEFAULT_VACUUM_FLOOR)?;
    Ok(k.energy())
}

/// `𝓓 = μ‖∇v‖² + (μ+λ)‖∇·v‖² + ∫ρ|u−v|²`.
pub fn dissipation(state: &State, params: &FluidParams) -> Result<f64> {
    let k = Kinematics::new(state, params, crate::dynamics::DEFAULT_VACUUM_FLOOR)?;
    Ok(k.dissipation(&velocity_gradient(&k.v)))
}

pub fn lyapunov(state: &State, params: &FluidParams) -> Result<Lyapunov> {
    let k = Kinematics::new(state, params, crate::dynamics::DEFAULT_VACUUM_FLOOR)?;
    let p = k.lyapunov_parts();
    Ok(Lyapunov {
        l: p.iter().sum(),
        l_p: p[0] + p[1] + p[2],
    })
}

pub fn interacting_energy(
    state: &State,
    params: &FluidParams,
    sigma: f64,
) -> Result<InteractingEnergy> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParams(format!("sigma must be >= 0, got {sigma}")));
    }
    let k = Kinematics::new(state, params, crate::dynamics::DEFAULT_VACUUM_FLOOR)?;
    k.interacting(sigma, &velocity_gradient(&k.v))
}

/// Grid-max distances of `u` and `v` to a constant vector, and `|m_c − j_c|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSample {
    pub u_dist: f64,
    pub v_dist: f64,
    pub mcjc_dist: f64,
}

/// Everything the record stream needs from one state.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub averages: Averages,
    pub functionals: Functionals,
    pub sigma_terms: [f64; 10],
    pub balance: BalanceTerms,
    pub alignment: AlignmentSample,
    pub floor_active: bool,
}

/// Evaluates all functionals of `state` in one pass.
pub fn evaluate(
    state: &State,
    params: &FluidParams,
    sigma: f64,
    floor: f64,
    target: &[f64],
) -> Result<Evaluation> {
    let floor_active = state.rho.values().iter().any(|&r| r < floor);
    let k = Kinematics::new(state, params, floor)?;
    let grad_v = velocity_gradient(&k.v);
    let parts = k.lyapunov_parts();
    let inter = k.interacting(sigma, &grad_v)?;
    let d = k.dissipation(&grad_v);
    let energy_excess = k.energy_excess();
    let (asym_value, asym_rate) = k.asym(&grad_v);
    let functionals = Functionals {
        e: k.energy(),
        d,
        l: parts.iter().sum(),
        l_p: parts[0] + parts[1] + parts[2],
        e_script: inter.e_script,
        e_sigma: inter.e_sigma,
        d_sigma: inter.d_sigma,
        e0_integral: k.e0_integral(),
        sigma,
        min_rho: state.rho.min(),
        min_n1: 1.0 + state.n.min(),
        grad_u_max: k.grad_u_max(),
    };
    let dist = |w: &VectorField| {
        let c = vals(w);
        (0..k.len)
            .map(|i| {
                (0..k.dim)
                    .map(|a| (c[a][i] - target[a]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    };
    let alignment = AlignmentSample {
        u_dist: dist(&k.u),
        v_dist: dist(&k.v),
        mcjc_dist: (0..k.dim)
            .map(|c| (k.avg.m_c[c] - k.avg.j_c[c]).powi(2))
            .sum::<f64>()
            .sqrt(),
    };
    let momentum = state
        .m
        .mean()
        .iter()
        .zip(state.j.mean())
        .map(|(a, b)| a + b)
        .collect();
    let balance = BalanceTerms {
        energy_excess,
        dissipation: d,
        e_sigma: inter.e_sigma,
        d_sigma: inter.d_sigma,
        asym_value,
        asym_rate,
        mass_rho: state.rho.mean(),
        mass_n: state.n.mean(),
        momentum,
    };
    Ok(Evaluation {
        averages: k.avg,
        functionals,
        sigma_terms: inter.terms,
        balance,
        alignment,
        floor_active,
    })
}
