//! Densities sampled on a uniform grid of the torus.

use std::f64::consts::PI;
use std::io::Write;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cmv::C64;
use crate::error::{domain, GgeError, Result};

/// Floor applied before taking logarithms of densities.
pub const LOG_FLOOR: f64 = 1e-300;

/// Probability density on the nodes `θ_j = −π + 2πj/M`, with its Fourier
/// coefficients `μ̂_k = ∫ e^{ikθ} ρ(θ) dθ` for `0 ≤ k ≤ M/2` cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    values: Vec<f64>,
    #[serde(skip)]
    coeffs: Vec<C64>,
}

impl GridDensity {
    /// Normalizes nonnegative node values to unit mass.
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 4 || values.len() % 2 != 0 {
            return Err(GgeError::Shape(format!("grid size must be even and at least 4, got {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return domain(format!("density values must be finite and nonnegative, found {v}"));
        }
        let mass = node_spacing(values.len()) * values.iter().sum::<f64>();
        if !(mass > 0.0) {
            return domain("density has zero mass");
        }
        values.iter_mut().for_each(|v| *v /= mass);
        let coeffs = grid_fourier(&values);
        Ok(GridDensity { values, coeffs })
    }

    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values((0..m).map(|j| f(node(m, j))).collect())
    }

    pub fn uniform(m: usize) -> Result<Self> {
        Self::from_fn(m, |_| 1.0)
    }

    /// Density proportional to `exp(−V)` evaluated at the nodes from log values.
    pub fn from_log_values(log_values: &[f64]) -> Result<Self> {
        let top = log_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self::from_values(log_values.iter().map(|l| (l - top).exp()).collect())
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn theta(&self, j: usize) -> f64 {
        node(self.values.len(), j)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.grid_size()).map(|j| self.theta(j)).collect()
    }

    pub fn spacing(&self) -> f64 {
        node_spacing(self.values.len())
    }

    pub fn mass(&self) -> f64 {
        self.spacing() * self.values.iter().sum::<f64>()
    }

    /// `μ̂_k` for `|k| ≤ M/2`; negative `k` by conjugation.
    pub fn fourier(&self, k: i64) -> C64 {
        let c = self.coeffs[k.unsigned_abs() as usize];
        if k < 0 {
            c.conj()
        } else {
            c
        }
    }

    /// `μ̂_1..μ̂_{k_max}`; modes above `M/2` are not resolved and are returned as zero.
    pub fn fourier_vec(&self, k_max: usize) -> Vec<C64> {
        (1..=k_max).map(|k| self.coeffs.get(k).copied().unwrap_or_default()).collect()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let m = self.grid_size();
        self.spacing() * (0..m).map(|j| f(node(m, j)) * self.values[j]).sum::<f64>()
    }

    /// `∫ ρ ln ρ dθ` with `0·ln 0 = 0`.
    pub fn neg_entropy(&self) -> f64 {
        self.spacing() * self.values.iter().filter(|v| **v > 0.0).map(|v| v * v.ln()).sum::<f64>()
    }

    pub fn log_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.max(LOG_FLOOR).ln()).collect()
    }

    pub fn sup_distance(&self, other: &GridDensity) -> Result<f64> {
        if self.grid_size() != other.grid_size() {
            return Err(GgeError::Shape("grid sizes differ".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Values on every `factor`-th node, for comparing with a coarser grid.
    pub fn subsample(&self, factor: usize) -> Vec<f64> {
        self.values.iter().step_by(factor.max(1)).copied().collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "theta,rho")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.17e},{:.17e}", self.theta(j), v)?;
        }
        Ok(())
    }
}

pub fn node(m: usize, j: usize) -> f64 {
    -PI + 2.0 * PI * j as f64 / m as f64
}

pub fn node_spacing(m: usize) -> f64 {
    2.0 * PI / m as f64
}

/// `μ̂_k` for `0 ≤ k ≤ M/2` by one forward FFT.
pub fn grid_fourier(values: &[f64]) -> Vec<C64> {
    let m = values.len();
    let mut buf: Vec<C64> = values.iter().map(|v| C64::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let h = node_spacing(m);
    (0..=m / 2)
        .map(|k| {
            let sign = if k % 2 == 0 { h } else { -h };
            buf[k].conj() * sign
        })
        .collect()
}

/// Real periodic function with the given coefficients `ĉ_k`, `k = 1..`,
/// sampled on the grid: `Σ_k 2 Re(ĉ_k e^{−ikθ_j})`, by one inverse FFT.
pub fn synthesize(m: usize, coeffs: &[C64]) -> Vec<f64> {
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for (i, c) in coeffs.iter().enumerate().take(m / 2 - 1) {
        let k = i + 1;
        // e^{−ikθ_j} = (−1)^k e^{−2πijk/M}
        let c = if k % 2 == 0 { *c } else { -*c };
        buf[k] += c;
        buf[m - k] += c.conj();
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    buf.iter().map(|z| z.re).collect()
}
