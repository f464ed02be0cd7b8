//! Empirical spectral measures, Fourier coefficients and the distance D.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cmv::{CmvMatrix, C64};
use crate::density::{node, GridDensity};
use crate::eigen::{dense_angles, eigen_angles, eigen_cosines, principal_angle};
use crate::error::{domain, GgeError, Result};
use crate::potential::{Domain, Potential};

pub const DEFAULT_K_MAX: usize = 256;

/// Equal-weight atoms on the torus, sorted in `[−π, π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    angles: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn from_angles(angles: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut angles: Vec<f64> = angles.into_iter().map(principal_angle).collect();
        if angles.is_empty() {
            return domain("empirical measure needs at least one atom");
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return domain("angles must be finite");
        }
        angles.sort_by(f64::total_cmp);
        Ok(EmpiricalMeasure { angles })
    }

    pub fn from_matrix(m: &CmvMatrix) -> Result<Self> {
        Self::from_angles(eigen_angles(m)?)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.angles.iter().map(|t| f(*t)).sum::<f64>() / self.len() as f64
    }

    pub fn integrate_potential(&self, p: &Potential) -> f64 {
        self.integrate(|t| p.eval_angle(t))
    }

    pub fn rotated(&self, phi: f64) -> Self {
        Self::from_angles(self.angles.iter().map(|t| t + phi)).expect("nonempty")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "theta,weight")?;
        let weight = 1.0 / self.len() as f64;
        for t in &self.angles {
            writeln!(w, "{t:.17e},{weight:.17e}")?;
        }
        Ok(())
    }
}

/// Points `x_j = cos θ_j` of a spectrum made of conjugate pairs, one per pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEmpiricalMeasure {
    points: Vec<f64>,
}

impl IntervalEmpiricalMeasure {
    /// Sorts the cosines of a paired spectrum and averages consecutive equal pairs.
    pub fn from_paired_angles(angles: &[f64]) -> Result<Self> {
        if angles.is_empty() || angles.len() % 2 != 0 {
            return Err(GgeError::Shape(format!("paired spectrum needs an even number of angles, got {}", angles.len())));
        }
        let mut xs: Vec<f64> = angles.iter().map(|t| t.cos()).collect();
        xs.sort_by(f64::total_cmp);
        let points = xs.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        Ok(IntervalEmpiricalMeasure { points })
    }

    /// Uses the cosines directly, so no angle signs are resolved.
    pub fn from_matrix(m: &CmvMatrix) -> Result<Self> {
        let xs = eigen_cosines(m)?;
        if xs.len() % 2 != 0 {
            return Err(GgeError::Shape(format!("paired spectrum needs an even size, got {}", xs.len())));
        }
        Ok(IntervalEmpiricalMeasure { points: xs.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect() })
    }

    pub fn from_points(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|x| !(x.abs() <= 1.0)) {
            return domain("interval points must lie in [−1, 1]");
        }
        points.sort_by(f64::total_cmp);
        Ok(IntervalEmpiricalMeasure { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().map(|x| f(*x)).sum::<f64>() / self.len() as f64
    }

    /// `∫ x^m dμ` for `m = 1..=order`.
    pub fn power_moments(&self, order: usize) -> Vec<f64> {
        (1..=order).map(|m| self.integrate(|x| x.powi(m as i32))).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,weight")?;
        let weight = 1.0 / self.len() as f64;
        for x in &self.points {
            writeln!(w, "{x:.17e},{weight:.17e}")?;
        }
        Ok(())
    }
}

/// `μ̂_k = ∫ e^{ikθ} dμ` for `k = 1..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoeffs {
    pub k_max: usize,
    pub c: Vec<C64>,
}

impl FourierCoeffs {
    pub fn get(&self, k: usize) -> C64 {
        self.c[k - 1]
    }

    pub fn zeros(k_max: usize) -> Self {
        FourierCoeffs { k_max, c: vec![C64::new(0.0, 0.0); k_max] }
    }

    /// Coefficients of the measure rotated by `φ`.
    pub fn rotated(&self, phi: f64) -> Self {
        let c = self.c.iter().enumerate().map(|(i, c)| c * C64::from_polar(1.0, (i + 1) as f64 * phi)).collect();
        FourierCoeffs { k_max: self.k_max, c }
    }

    /// Entrywise average, used to accumulate ensemble means.
    pub fn mean_of(list: &[FourierCoeffs]) -> Result<Self> {
        let first = list.first().ok_or_else(|| GgeError::Domain("no coefficients to average".into()))?;
        let mut acc = FourierCoeffs::zeros(first.k_max);
        for f in list {
            if f.k_max != first.k_max {
                return Err(GgeError::Shape("mismatched k_max".into()));
            }
            for (a, c) in acc.c.iter_mut().zip(&f.c) {
                *a += c;
            }
        }
        let n = list.len() as f64;
        acc.c.iter_mut().for_each(|a| *a /= n);
        Ok(acc)
    }
}

/// Anything with Fourier coefficients on the torus.
pub trait HasFourier {
    fn fourier_coeffs(&self, k_max: usize) -> FourierCoeffs;
}

impl HasFourier for EmpiricalMeasure {
    fn fourier_coeffs(&self, k_max: usize) -> FourierCoeffs {
        let n = self.len() as f64;
        let mut c = vec![C64::new(0.0, 0.0); k_max];
        for &t in &self.angles {
            let step = C64::from_polar(1.0, t);
            let mut z = step;
            for ck in c.iter_mut() {
                *ck += z;
                z *= step;
            }
        }
        c.iter_mut().for_each(|z| *z /= n);
        FourierCoeffs { k_max, c }
    }
}

impl HasFourier for GridDensity {
    fn fourier_coeffs(&self, k_max: usize) -> FourierCoeffs {
        FourierCoeffs { k_max, c: self.fourier_vec(k_max) }
    }
}

impl HasFourier for FourierCoeffs {
    fn fourier_coeffs(&self, k_max: usize) -> FourierCoeffs {
        let c = (1..=k_max).map(|k| self.c.get(k - 1).copied().unwrap_or_default()).collect();
        FourierCoeffs { k_max, c }
    }
}

pub fn fourier_coeffs<M: HasFourier + ?Sized>(mu: &M, k_max: usize) -> FourierCoeffs {
    mu.fourier_coeffs(k_max)
}

/// Truncated distance with a convergence indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub value: f64,
    pub k_max: usize,
    /// Contribution of the upper half of the modes, `k > k_max/2`, to `D²`.
    pub upper_half_share: f64,
}

pub fn distance_from_coeffs(a: &FourierCoeffs, b: &FourierCoeffs) -> DistanceReport {
    let k_max = a.k_max.min(b.k_max);
    let mut total = 0.0;
    let mut upper = 0.0;
    for k in 1..=k_max {
        let term = (a.get(k) - b.get(k)).norm_sqr() / k as f64;
        total += term;
        if 2 * k > k_max {
            upper += term;
        }
    }
    DistanceReport { value: total.sqrt(), k_max, upper_half_share: upper }
}

/// `D(μ, ν) = √(Σ_{k ≤ k_max} |μ̂_k − ν̂_k|²/k)`.
pub fn distance_d<A: HasFourier + ?Sized, B: HasFourier + ?Sized>(mu: &A, nu: &B, k_max: usize) -> DistanceReport {
    distance_from_coeffs(&mu.fourier_coeffs(k_max), &nu.fourier_coeffs(k_max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Estimator {
    Histogram { bins: usize },
    /// Wrapped Gaussian kernel of standard deviation `bandwidth` on `grid` nodes.
    Kde { bandwidth: f64, grid: usize },
}

/// Histogram or wrapped-Gaussian estimate of an empirical measure.
pub fn density_estimate(mu: &EmpiricalMeasure, estimator: Estimator) -> Result<GridDensity> {
    match estimator {
        Estimator::Histogram { bins } => {
            if bins < 4 || bins % 2 != 0 {
                return domain(format!("histogram needs an even bin count of at least 4, got {bins}"));
            }
            let width = 2.0 * PI / bins as f64;
            let mut counts = vec![0.0; bins];
            for t in mu.angles() {
                let j = ((t + PI) / width).round() as usize % bins;
                counts[j] += 1.0;
            }
            GridDensity::from_values(counts)
        }
        Estimator::Kde { bandwidth, grid } => {
            if !(bandwidth > 0.0) {
                return domain(format!("bandwidth must be positive, got {bandwidth}"));
            }
            if grid < 4 || grid % 2 != 0 {
                return domain(format!("KDE grid must be even and at least 4, got {grid}"));
            }
            // modes beyond exp(−k²h²/2) < 1e−17 vanish in double precision
            let k_cut = ((2.0 * 17.0 * 10f64.ln()).sqrt() / bandwidth).ceil() as usize;
            let k_max = k_cut.min(grid / 2 - 1);
            let coeffs = mu.fourier_coeffs(k_max);
            let damped: Vec<C64> = coeffs
                .c
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let k = (i + 1) as f64;
                    c * (-0.5 * k * k * bandwidth * bandwidth).exp()
                })
                .collect();
            let wave = crate::density::synthesize(grid, &damped);
            let values = wave.iter().map(|w| ((1.0 + w) / (2.0 * PI)).max(0.0)).collect();
            GridDensity::from_values(values)
        }
    }
}

/// Test function with known variation and chordal Lipschitz norms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestFunction {
    pub name: String,
    pub kind: TestKind,
    /// Total variation over one turn.
    pub bv_norm: f64,
    /// Lipschitz constant with respect to `|e^{iθ} − e^{iφ}|`.
    pub lip_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestKind {
    Cos(u32),
    Sin(u32),
    /// Tent of height 1 centred at `center` with half-width `width`.
    Tent { center: f64, width: f64 },
}

impl TestFunction {
    pub fn cos(k: u32) -> Self {
        TestFunction { name: format!("cos{k}"), kind: TestKind::Cos(k), bv_norm: 4.0 * k as f64, lip_norm: k as f64 }
    }

    pub fn sin(k: u32) -> Self {
        TestFunction { name: format!("sin{k}"), kind: TestKind::Sin(k), bv_norm: 4.0 * k as f64, lip_norm: k as f64 }
    }

    /// Arc slope `1/w` turns into at most `π/(2w)` per unit chord.
    pub fn tent(center: f64, width: f64) -> Self {
        TestFunction {
            name: format!("tent({center:.3},{width:.3})"),
            kind: TestKind::Tent { center, width },
            bv_norm: 2.0,
            lip_norm: PI / (2.0 * width),
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match self.kind {
            TestKind::Cos(k) => (k as f64 * theta).cos(),
            TestKind::Sin(k) => (k as f64 * theta).sin(),
            TestKind::Tent { center, width } => {
                let d = principal_angle(theta - center).abs();
                (1.0 - d / width).max(0.0)
            }
        }
    }
}

pub fn standard_dictionary() -> Vec<TestFunction> {
    let mut dict = Vec::new();
    for k in 1..=3 {
        dict.push(TestFunction::cos(k));
        dict.push(TestFunction::sin(k));
    }
    dict.push(TestFunction::tent(0.0, 0.5));
    dict.push(TestFunction::tent(2.0, 1.0));
    dict.push(TestFunction::tent(-2.5, 0.25));
    dict
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub difference: f64,
    pub bv_bound: f64,
    pub lip_bound: f64,
    pub bv_ok: bool,
    pub lip_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub rank: usize,
    pub entry_sum: f64,
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| usize::from(!c.bv_ok) + usize::from(!c.lip_ok)).sum()
    }
}

/// Numerical rank: singular values above `1e−9` times the largest.
pub fn numerical_rank(a: &DMatrix<C64>) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > 1e-9 * top).count()
}

pub const BOUND_SLACK: f64 = 1e-12;

/// Checks both spectral perturbation bounds for every dictionary function.
pub fn check_bv_lip_bound(a: &CmvMatrix, b: &CmvMatrix, dictionary: &[TestFunction]) -> Result<BoundReport> {
    if a.dim() != b.dim() {
        return Err(GgeError::Shape(format!("dimensions differ: {} vs {}", a.dim(), b.dim())));
    }
    let da = a.to_dense();
    let db = b.to_dense();
    check_dense_bounds(&da, &db, dictionary)
}

pub fn check_dense_bounds(a: &DMatrix<C64>, b: &DMatrix<C64>, dictionary: &[TestFunction]) -> Result<BoundReport> {
    let n = a.nrows();
    let diff = a - b;
    let rank = numerical_rank(&diff);
    let entry_sum: f64 = diff.iter().map(|z| z.norm()).sum();
    let mu_a = EmpiricalMeasure::from_angles(dense_angles(a)?)?;
    let mu_b = EmpiricalMeasure::from_angles(dense_angles(b)?)?;
    let checks = dictionary
        .iter()
        .map(|f| {
            let difference = (mu_a.integrate(|t| f.eval(t)) - mu_b.integrate(|t| f.eval(t))).abs();
            let bv_bound = f.bv_norm * rank as f64 / n as f64;
            let lip_bound = f.lip_norm * entry_sum / n as f64;
            BoundCheck {
                name: f.name.clone(),
                difference,
                bv_bound,
                lip_bound,
                bv_ok: difference <= bv_bound + BOUND_SLACK,
                lip_ok: difference <= lip_bound + BOUND_SLACK,
            }
        })
        .collect();
    Ok(BoundReport { rank, entry_sum, checks })
}

/// Nodes of a uniform torus grid, re-exported for callers building tables.
pub fn torus_nodes(m: usize) -> Vec<f64> {
    (0..m).map(|j| node(m, j)).collect()
}

/// `∫ V dμ` for a torus potential and a grid density.
pub fn integrate_potential_grid(rho: &GridDensity, p: &Potential) -> Result<f64> {
    if p.domain != Domain::Torus && !p.is_zero() {
        return Err(GgeError::Config("grid densities on the torus need a torus potential".into()));
    }
    Ok(rho.integrate(|t| p.eval_angle(t)))
}
