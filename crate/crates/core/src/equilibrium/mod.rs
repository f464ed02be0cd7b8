//! Minimizers of the high-temperature free-energy functionals.
//!
//! Both solvers run a damped fixed-point iteration on the log-density,
//! `ln ρ ← (1−γ) ln ρ + γ (−V + 2cβ U[ρ] + const)`, where `U[ρ]` is the
//! logarithmic potential. The iteration map is a contraction around the
//! minimizer once `γ` is small enough; the driver caps `γ` accordingly and
//! halves it whenever the update size grows.

mod interval;
mod torus;

use serde::{Deserialize, Serialize};

use crate::error::{domain, GgeError, Result};

pub use interval::{
    beta_derivative_interval, free_energy_interval, minimize_interval, minimize_interval_on, IntervalDensity,
    IntervalDerivative, IntervalGrid, IntervalSolution, INTERVAL_INTERACTION,
};
pub use torus::{
    beta_derivative_measure, free_energy_torus, log_potential_torus, minimize_torus, minimize_torus_from,
    BetaDerivative, TorusSolution,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Requested damping `γ ∈ (0, 1]`; the solver may use less.
    pub damping: f64,
    /// Stop when `sup |Δ ln ρ|` falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub grid_size: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams { damping: 0.5, tolerance: 1e-10, max_iterations: 100_000, grid_size: 1024 }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return domain(format!("damping must lie in (0, 1], got {}", self.damping));
        }
        if !(self.tolerance > 0.0) {
            return domain(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if self.grid_size < 8 || self.grid_size % 2 != 0 {
            return Err(GgeError::Shape(format!("grid size must be even and at least 8, got {}", self.grid_size)));
        }
        if self.max_iterations == 0 {
            return domain("max_iterations must be at least 1");
        }
        Ok(())
    }
}

/// Parts of a free-energy value; `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyBreakdown {
    pub interaction: f64,
    pub potential: f64,
    pub entropy: f64,
    pub total: f64,
}

impl FreeEnergyBreakdown {
    fn new(interaction: f64, potential: f64, entropy: f64) -> Self {
        FreeEnergyBreakdown { interaction, potential, entropy, total: interaction + potential + entropy }
    }
}

pub(crate) struct FixedPoint {
    pub log_density: Vec<f64>,
    pub iterations: usize,
}

/// Damped log-space iteration. `target` returns the unnormalized new log
/// density for the current one; `normalize` shifts a log density to unit mass.
pub(crate) fn damped_fixed_point(
    mut log_density: Vec<f64>,
    gamma: f64,
    params: &SolverParams,
    mut target: impl FnMut(&[f64]) -> Vec<f64>,
    normalize: impl Fn(&mut [f64]),
) -> Result<FixedPoint> {
    let cap = gamma;
    let mut gamma = gamma;
    normalize(&mut log_density);
    let mut last_change = f64::INFINITY;
    let mut candidate = vec![0.0; log_density.len()];
    for iteration in 1..=params.max_iterations {
        let t = target(&log_density);
        for ((c, l), t) in candidate.iter_mut().zip(&log_density).zip(&t) {
            *c = (1.0 - gamma) * l + gamma * t;
        }
        normalize(&mut candidate);
        let change = candidate.iter().zip(&log_density).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if !change.is_finite() {
            return Err(GgeError::Convergence { iterations: iteration, residual: change });
        }
        if change > 1.5 * last_change && gamma > 1e-6 {
            gamma *= 0.5;
            continue;
        }
        gamma = (gamma * 1.05).min(cap);
        std::mem::swap(&mut log_density, &mut candidate);
        last_change = change;
        if change <= params.tolerance {
            return Ok(FixedPoint { log_density, iterations: iteration });
        }
    }
    Err(GgeError::Convergence { iterations: params.max_iterations, residual: last_change })
}

/// Half the spread of a vector, the sup-distance to its best constant.
pub(crate) fn oscillation(v: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    0.5 * (hi - lo)
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return domain(format!("beta must be positive, got {beta}"));
    }
    Ok(())
}

pub(crate) fn check_delta(beta: f64, delta: f64) -> Result<()> {
    check_beta(beta)?;
    if !(delta > 0.0) || delta >= beta {
        return domain(format!("finite-difference step must satisfy 0 < delta < beta, got delta = {delta}, beta = {beta}"));
    }
    Ok(())
}
