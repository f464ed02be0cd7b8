use std::f64::consts::{LN_2, PI};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{
    check_beta, check_delta, damped_fixed_point, oscillation, FreeEnergyBreakdown, SolverParams,
};
use crate::cmv::C64;
use crate::density::{grid_fourier, node, node_spacing, synthesize, GridDensity};
use crate::error::{GgeError, Result};
use crate::potential::{Domain, Potential};
use crate::spectral::{FourierCoeffs, HasFourier};

/// `f(μ) = β Σ_k |μ̂_k|²/k + β ln 2 + ∫V dμ + ∫ρ ln ρ + ln 2π`.
///
/// The interaction part is `−β∬ ln|e^{iθ}−e^{iφ}| dμ dμ + β ln 2`, so the
/// uniform measure at `V = 0` has value `β ln 2`.
pub fn free_energy_torus(rho: &GridDensity, v: &Potential, beta: f64) -> Result<FreeEnergyBreakdown> {
    check_beta(beta)?;
    check_torus(v)?;
    let m = rho.grid_size();
    let modes: f64 = (1..=m / 2).map(|k| rho.fourier(k as i64).norm_sqr() / k as f64).sum();
    let interaction = beta * modes + beta * LN_2;
    let potential = rho.integrate(|t| v.eval_angle(t));
    let entropy = rho.neg_entropy() + (2.0 * PI).ln();
    Ok(FreeEnergyBreakdown::new(interaction, potential, entropy))
}

fn check_torus(v: &Potential) -> Result<()> {
    if v.domain != Domain::Torus && !v.is_zero() {
        return Err(GgeError::Config("the circular functional needs a torus potential".into()));
    }
    Ok(())
}

/// `U[ρ](θ) = ∫ ln|e^{iθ} − e^{iφ}| ρ(φ) dφ` on the grid, by FFT.
pub fn log_potential_torus(rho_values: &[f64]) -> Vec<f64> {
    let m = rho_values.len();
    let coeffs = grid_fourier(rho_values);
    let kernel: Vec<C64> = (1..m / 2).map(|k| -coeffs[k] / (2.0 * k as f64)).collect();
    synthesize(m, &kernel)
}

fn normalize_log(l: &mut [f64]) {
    let top = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mass = node_spacing(l.len()) * l.iter().map(|x| (x - top).exp()).sum::<f64>();
    let shift = top + mass.ln();
    l.iter_mut().for_each(|x| *x -= shift);
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TorusSolution {
    pub beta: f64,
    pub density: GridDensity,
    /// Sup-distance of `ln ρ + V − 2βU[ρ]` to a constant.
    pub residual: f64,
    pub iterations: usize,
    pub free_energy: FreeEnergyBreakdown,
}

impl TorusSolution {
    /// Free energy relative to `V = 0`, i.e. `min f − β ln 2`.
    pub fn normalized_free_energy(&self) -> f64 {
        self.free_energy.total - self.beta * LN_2
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.density.write_csv(w)
    }
}

pub fn minimize_torus(v: &Potential, beta: f64, params: &SolverParams) -> Result<TorusSolution> {
    minimize_torus_from(v, beta, params, None)
}

/// As [`minimize_torus`], starting from a given density instead of `e^{−V}`.
pub fn minimize_torus_from(
    v: &Potential,
    beta: f64,
    params: &SolverParams,
    start: Option<&GridDensity>,
) -> Result<TorusSolution> {
    check_beta(beta)?;
    check_torus(v)?;
    params.validate()?;
    let m = params.grid_size;
    let pot: Vec<f64> = (0..m).map(|j| v.eval_angle(node(m, j))).collect();
    let init = match start {
        Some(d) if d.grid_size() == m => d.log_values(),
        Some(d) => return Err(GgeError::Shape(format!("start grid {} differs from {m}", d.grid_size()))),
        None => pot.iter().map(|p| -p).collect(),
    };
    let gamma = params.damping.min(2.0 / (2.0 + beta));
    let target = |l: &[f64]| {
        let rho: Vec<f64> = l.iter().map(|x| x.exp()).collect();
        let u = log_potential_torus(&rho);
        pot.iter().zip(&u).map(|(p, u)| -p + 2.0 * beta * u).collect::<Vec<_>>()
    };
    let fp = damped_fixed_point(init, gamma, params, target, normalize_log)?;
    let density = GridDensity::from_log_values(&fp.log_density)?;
    let u = log_potential_torus(density.values());
    let logs = density.log_values();
    let residual = oscillation((0..m).map(|j| logs[j] + pot[j] - 2.0 * beta * u[j]));
    let free_energy = free_energy_torus(&density, v, beta)?;
    Ok(TorusSolution { beta, density, residual, iterations: fp.iterations, free_energy })
}

/// `ν = [(β+δ)μ_{β+δ} − (β−δ)μ_{β−δ}]/(2δ)` on a shared grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaDerivative {
    pub beta: f64,
    pub delta: f64,
    pub values: Vec<f64>,
    pub coeffs: Vec<C64>,
    /// Sup-norm change of the values when `δ` is halved.
    pub richardson: f64,
    pub min_value: f64,
    pub warnings: Vec<String>,
}

impl BetaDerivative {
    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn mass(&self) -> f64 {
        node_spacing(self.grid_size()) * self.values.iter().sum::<f64>()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let m = self.grid_size();
        node_spacing(m) * (0..m).map(|j| f(node(m, j)) * self.values[j]).sum::<f64>()
    }

    /// Density with negative values clipped, for export only.
    pub fn clipped(&self) -> Result<GridDensity> {
        GridDensity::from_values(self.values.iter().map(|v| v.max(0.0)).collect())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "theta,rho")?;
        let m = self.grid_size();
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.17e},{:.17e}", node(m, j), v.max(0.0))?;
        }
        Ok(())
    }
}

impl HasFourier for BetaDerivative {
    fn fourier_coeffs(&self, k_max: usize) -> FourierCoeffs {
        let c = (1..=k_max).map(|k| self.coeffs.get(k).copied().unwrap_or_default()).collect();
        FourierCoeffs { k_max, c }
    }
}

fn central_difference(v: &Potential, beta: f64, delta: f64, params: &SolverParams) -> Result<(Vec<f64>, Vec<C64>)> {
    let plus = minimize_torus(v, beta + delta, params)?;
    let minus = minimize_torus_from(v, beta - delta, params, Some(&plus.density))?;
    let (a, b) = ((beta + delta) / (2.0 * delta), (beta - delta) / (2.0 * delta));
    let values = plus.density.values().iter().zip(minus.density.values()).map(|(p, q)| a * p - b * q).collect();
    let m = params.grid_size as i64;
    let coeffs = (0..=m / 2).map(|k| plus.density.fourier(k) * a - minus.density.fourier(k) * b).collect();
    Ok((values, coeffs))
}

pub fn beta_derivative_measure(v: &Potential, beta: f64, delta: f64, params: &SolverParams) -> Result<BetaDerivative> {
    check_delta(beta, delta)?;
    let (values, coeffs) = central_difference(v, beta, delta, params)?;
    let (half, _) = central_difference(v, beta, delta / 2.0, params)?;
    let richardson = values.iter().zip(&half).map(|(a, b): (&f64, &f64)| (a - b).abs()).fold(0.0, f64::max);
    let min_value = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut warnings = Vec::new();
    if min_value < -1e-6 {
        warnings.push(format!("derivative density dips to {min_value:.3e}; clipped on export"));
    }
    Ok(BetaDerivative { beta, delta, values, coeffs, richardson, min_value, warnings })
}
