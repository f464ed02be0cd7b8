//! The interval functional
//! `q(μ) = ∫(V + ln(1−x²)) dμ − c β ∬ ln|x−y| dμ dμ + ∫ ln(dμ/dx) dμ`
//! with `c = INTERVAL_INTERACTION`.
//!
//! Minimizers have a non-integrable `(1−x²)^{−1}` profile corrected only
//! logarithmically at the edges, so the density is carried in the variable
//! `s = artanh x` as `h(s) = ρ(x)(1−x²)`. Then `∫ρ ln ρ + ∫ln(1−x²)dμ = ∫h ln h ds`
//! and `h` decays like `1/(2cβ s²)`. Nodes are uniform in `t = asinh s`, which
//! resolves both the bulk and the slowly decaying tails.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{check_beta, check_delta, damped_fixed_point, oscillation, FreeEnergyBreakdown, SolverParams};
use crate::error::{GgeError, Result};
use crate::potential::{Domain, Potential};

/// Coefficient `c` of the logarithmic interaction at speed `n` for the weight
/// `Π_{i<j}|x_i − x_j|^{2β/n}`: `(2β/n)(n²/2)∬ = βn∬`.
pub const INTERVAL_INTERACTION: f64 = 1.0;

/// Mass allowed to fall outside the grid on either side.
const TAIL_MASS: f64 = 1e-10;
const MIN_S_MAX: f64 = 1e8;
const MAX_S_MAX: f64 = 1e15;
/// `ζ'(−2) = −ζ(3)/(4π²)`.
const ZETA_PRIME_MINUS_TWO: f64 = -0.030448457058393270;

fn ln_cosh(s: f64) -> f64 {
    let a = s.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

fn ln_abs_sinh(d: f64) -> f64 {
    let a = d.abs();
    if a < 20.0 {
        a.sinh().ln()
    } else {
        a - std::f64::consts::LN_2 + (-(-2.0 * a).exp()).ln_1p()
    }
}

/// Node positions and quadrature weights for `∫ f ds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalNodes {
    pub s_max: f64,
    pub dt: f64,
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub weights: Vec<f64>,
}

impl IntervalNodes {
    pub fn new(m: usize, s_max: f64) -> Result<Self> {
        if m < 8 || m % 2 != 0 {
            return Err(GgeError::Shape(format!("grid size must be even and at least 8, got {m}")));
        }
        let half = s_max.asinh();
        let dt = 2.0 * half / m as f64;
        let t: Vec<f64> = (0..m).map(|i| -half + (i as f64 + 0.5) * dt).collect();
        let s: Vec<f64> = t.iter().map(|t| t.sinh()).collect();
        let x = s.iter().map(|s| s.tanh()).collect();
        let weights = t.iter().map(|t| dt * t.cosh()).collect();
        Ok(IntervalNodes { s_max, dt, t, s, x, weights })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `ln|x_i − x_j|`, with the diagonal replaced by the corrected
    /// trapezoid weight `ln(Δt/2π) + ln|dx/dt|` for a logarithmic singularity.
    fn kernel_entry(&self, i: usize, j: usize) -> f64 {
        let (si, sj) = (self.s[i], self.s[j]);
        if i == j {
            (self.dt / (2.0 * PI)).ln() + ln_cosh(self.t[i]) - 2.0 * ln_cosh(si)
        } else if si * sj <= 0.0 {
            (self.x[i].abs() + self.x[j].abs()).ln()
        } else {
            ln_abs_sinh(si - sj) - ln_cosh(si) - ln_cosh(sj)
        }
    }
}

/// Nodes plus the dense logarithmic kernel.
#[derive(Debug, Clone)]
pub struct IntervalGrid {
    nodes: IntervalNodes,
    kernel: Vec<f64>,
}

impl IntervalGrid {
    pub fn new(m: usize, s_max: f64) -> Result<Self> {
        let nodes = IntervalNodes::new(m, s_max)?;
        let mut kernel = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..=i {
                let k = nodes.kernel_entry(i, j);
                kernel[i * m + j] = k;
                kernel[j * m + i] = k;
            }
        }
        // next Euler–Maclaurin term for ∫ln|t−t_i| F dt, a second difference of F weighted by ζ'(−2)
        let c = ZETA_PRIME_MINUS_TWO;
        for i in 0..m {
            kernel[i * m + i] -= 2.0 * c;
            if i + 1 < m {
                kernel[i * m + i + 1] += c;
                kernel[(i + 1) * m + i] += c;
            }
        }
        Ok(IntervalGrid { nodes, kernel })
    }

    /// Grid wide enough that the `1/(2cβ s²)` tails leave out at most `TAIL_MASS`.
    pub fn for_beta(m: usize, beta: f64) -> Result<Self> {
        Self::new(m, s_max_for(beta)?)
    }

    pub fn nodes(&self) -> &IntervalNodes {
        &self.nodes
    }

    /// `U_i = ∫ ln|x_i − y| h(s) ds` for node values `h`.
    pub fn log_potential(&self, h: &[f64]) -> Vec<f64> {
        let m = self.nodes.len();
        let wh: Vec<f64> = h.iter().zip(&self.nodes.weights).map(|(h, w)| h * w).collect();
        (0..m).map(|i| self.kernel[i * m..(i + 1) * m].iter().zip(&wh).map(|(k, v)| k * v).sum()).collect()
    }

    /// `∬ ln|x − y| dμ dμ`.
    pub fn double_log(&self, h: &[f64]) -> f64 {
        let u = self.log_potential(h);
        u.iter().zip(h).zip(&self.nodes.weights).map(|((u, h), w)| u * h * w).sum()
    }
}

fn s_max_for(beta: f64) -> Result<f64> {
    let tail = 1.0 / (2.0 * INTERVAL_INTERACTION * beta);
    let s_max = (tail / TAIL_MASS).max(MIN_S_MAX);
    if s_max > MAX_S_MAX {
        return Err(GgeError::Diagnostic(format!(
            "beta = {beta} too small: edge mass decays like {tail:.3e}/s and cannot be resolved"
        )));
    }
    Ok(s_max)
}

/// Probability density on the interval stored as `h(s) = ρ(x)(1−x²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalDensity {
    pub nodes: IntervalNodes,
    pub h: Vec<f64>,
}

impl IntervalDensity {
    /// Normalizes nonnegative node values of `h`.
    pub fn from_h(nodes: IntervalNodes, mut h: Vec<f64>) -> Result<Self> {
        if h.len() != nodes.len() {
            return Err(GgeError::Shape("value count differs from node count".into()));
        }
        if h.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(GgeError::Domain("density values must be finite and nonnegative".into()));
        }
        let mass: f64 = h.iter().zip(&nodes.weights).map(|(h, w)| h * w).sum();
        if !(mass > 0.0) {
            return Err(GgeError::Domain("density has zero mass".into()));
        }
        h.iter_mut().for_each(|v| *v /= mass);
        Ok(IntervalDensity { nodes, h })
    }

    /// From a density in `x`, `ρ(x)`.
    pub fn from_x_density(nodes: IntervalNodes, rho: impl Fn(f64) -> f64) -> Result<Self> {
        let h = nodes.s.iter().zip(&nodes.x).map(|(s, x)| rho(*x) * (-2.0 * ln_cosh(*s)).exp()).collect();
        Self::from_h(nodes, h)
    }

    fn from_log(nodes: IntervalNodes, l: &[f64]) -> Result<Self> {
        let top = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self::from_h(nodes, l.iter().map(|v| (v - top).exp()).collect())
    }

    pub fn mass(&self) -> f64 {
        self.h.iter().zip(&self.nodes.weights).map(|(h, w)| h * w).sum()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        integrate_values(&self.nodes, &self.h, f)
    }

    /// `∫ x^m dμ` for `m = 1..=order`.
    pub fn power_moments(&self, order: usize) -> Vec<f64> {
        (1..=order).map(|m| self.integrate(|x| x.powi(m as i32))).collect()
    }

    /// `ρ(x)` at the nodes; infinite where `cosh² s` overflows.
    pub fn x_density(&self) -> Vec<f64> {
        x_values(&self.nodes, &self.h)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_x_csv(&self.nodes, &self.h, w)
    }
}

fn integrate_values(nodes: &IntervalNodes, h: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    h.iter().zip(&nodes.weights).zip(&nodes.x).map(|((h, w), x)| h * w * f(*x)).sum()
}

fn x_values(nodes: &IntervalNodes, h: &[f64]) -> Vec<f64> {
    h.iter().zip(&nodes.s).map(|(h, s)| h * (2.0 * ln_cosh(*s)).exp()).collect()
}

fn write_x_csv<W: Write>(nodes: &IntervalNodes, h: &[f64], mut w: W) -> Result<()> {
    writeln!(w, "x,rho")?;
    for (x, rho) in nodes.x.iter().zip(x_values(nodes, h)) {
        if rho.is_finite() && x.abs() < 1.0 {
            writeln!(w, "{x:.17e},{rho:.17e}")?;
        }
    }
    Ok(())
}

fn check_interval(v: &Potential) -> Result<()> {
    if v.domain != Domain::Interval && !v.is_zero() {
        return Err(GgeError::Config("the interval functional needs a Chebyshev potential".into()));
    }
    Ok(())
}

fn potential_at_nodes(nodes: &IntervalNodes, v: &Potential) -> Vec<f64> {
    nodes.x.iter().map(|x| v.eval_x(*x)).collect()
}

/// Entropy collects `∫ρ ln ρ dx + ∫ln(1−x²) dμ = ∫h ln h ds`.
pub fn free_energy_interval(rho: &IntervalDensity, v: &Potential, beta: f64) -> Result<FreeEnergyBreakdown> {
    check_beta(beta)?;
    check_interval(v)?;
    let grid = IntervalGrid::new(rho.nodes.len(), rho.nodes.s_max)?;
    if grid.nodes != rho.nodes {
        return Err(GgeError::Shape("density nodes are not a standard interval grid".into()));
    }
    Ok(breakdown(&grid, &rho.h, v, beta))
}

fn breakdown(grid: &IntervalGrid, h: &[f64], v: &Potential, beta: f64) -> FreeEnergyBreakdown {
    let nodes = grid.nodes();
    let interaction = -INTERVAL_INTERACTION * beta * grid.double_log(h);
    let potential = integrate_values(nodes, h, |x| v.eval_x(x));
    let entropy = h.iter().zip(&nodes.weights).filter(|(h, _)| **h > 0.0).map(|(h, w)| w * h * h.ln()).sum();
    FreeEnergyBreakdown::new(interaction, potential, entropy)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalSolution {
    pub beta: f64,
    pub density: IntervalDensity,
    /// Sup-distance of `ln h + V − 2cβU[h]` to a constant.
    pub residual: f64,
    pub iterations: usize,
    pub free_energy: FreeEnergyBreakdown,
}

pub fn minimize_interval(v: &Potential, beta: f64, params: &SolverParams) -> Result<IntervalSolution> {
    check_beta(beta)?;
    let grid = IntervalGrid::for_beta(params.grid_size, beta)?;
    minimize_interval_on(&grid, v, beta, params, None)
}

/// Solves on a prepared grid, optionally warm-started from node values of `ln h`.
pub fn minimize_interval_on(
    grid: &IntervalGrid,
    v: &Potential,
    beta: f64,
    params: &SolverParams,
    start: Option<&[f64]>,
) -> Result<IntervalSolution> {
    check_beta(beta)?;
    check_interval(v)?;
    params.validate()?;
    let nodes = grid.nodes();
    let m = nodes.len();
    let pot = potential_at_nodes(nodes, v);
    let coupling = 2.0 * INTERVAL_INTERACTION * beta;
    let init = match start {
        Some(l) if l.len() == m => l.to_vec(),
        Some(_) => return Err(GgeError::Shape("start vector length differs from the grid".into())),
        // arcsine profile, h = sech(s)/π
        None => nodes.s.iter().map(|s| -ln_cosh(*s)).collect(),
    };
    let gamma = params.damping.min(2.0 / (2.0 + coupling));
    let weights = nodes.weights.clone();
    let normalize = move |l: &mut [f64]| {
        let top = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mass: f64 = l.iter().zip(&weights).map(|(x, w)| w * (x - top).exp()).sum();
        let shift = top + mass.ln();
        l.iter_mut().for_each(|x| *x -= shift);
    };
    let target = |l: &[f64]| {
        let h: Vec<f64> = l.iter().map(|x| x.exp()).collect();
        let u = grid.log_potential(&h);
        pot.iter().zip(&u).map(|(p, u)| -p + coupling * u).collect::<Vec<_>>()
    };
    let fp = damped_fixed_point(init, gamma, params, target, normalize)?;
    let density = IntervalDensity::from_log(nodes.clone(), &fp.log_density)?;
    let u = grid.log_potential(&density.h);
    let residual = oscillation((0..m).map(|i| fp.log_density[i] + pot[i] - coupling * u[i]));
    let free_energy = breakdown(grid, &density.h, v, beta);
    Ok(IntervalSolution { beta, density, residual, iterations: fp.iterations, free_energy })
}

/// Central β-difference of `β μ_β` on the interval, in the `h` representation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalDerivative {
    pub beta: f64,
    pub delta: f64,
    pub nodes: IntervalNodes,
    pub h: Vec<f64>,
    pub richardson: f64,
    pub min_value: f64,
    pub warnings: Vec<String>,
}

impl IntervalDerivative {
    pub fn mass(&self) -> f64 {
        integrate_values(&self.nodes, &self.h, |_| 1.0)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        integrate_values(&self.nodes, &self.h, f)
    }

    pub fn power_moments(&self, order: usize) -> Vec<f64> {
        (1..=order).map(|m| self.integrate(|x| x.powi(m as i32))).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let clipped: Vec<f64> = self.h.iter().map(|v| v.max(0.0)).collect();
        write_x_csv(&self.nodes, &clipped, w)
    }
}

fn interval_difference(
    grid: &IntervalGrid,
    v: &Potential,
    beta: f64,
    delta: f64,
    params: &SolverParams,
) -> Result<Vec<f64>> {
    let plus = minimize_interval_on(grid, v, beta + delta, params, None)?;
    let warm: Vec<f64> = plus.density.h.iter().map(|h| h.max(1e-300).ln()).collect();
    let minus = minimize_interval_on(grid, v, beta - delta, params, Some(&warm))?;
    let (a, b) = ((beta + delta) / (2.0 * delta), (beta - delta) / (2.0 * delta));
    Ok(plus.density.h.iter().zip(&minus.density.h).map(|(p, q)| a * p - b * q).collect())
}

pub fn beta_derivative_interval(
    v: &Potential,
    beta: f64,
    delta: f64,
    params: &SolverParams,
) -> Result<IntervalDerivative> {
    check_delta(beta, delta)?;
    let grid = IntervalGrid::for_beta(params.grid_size, beta - delta)?;
    let h = interval_difference(&grid, v, beta, delta, params)?;
    let half = interval_difference(&grid, v, beta, delta / 2.0, params)?;
    let richardson = h.iter().zip(&half).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let min_value = h.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut warnings = Vec::new();
    if min_value < -1e-6 {
        warnings.push(format!("derivative density dips to {min_value:.3e}; clipped on export"));
    }
    Ok(IntervalDerivative { beta, delta, nodes: grid.nodes().clone(), h, richardson, min_value, warnings })
}
