//! Verification harness: coupling and bound checks, Monte Carlo free energies and the
//! density-of-states relation between the lattice ensembles and the
//! equilibrium solvers.
//!
//! Every check returns a [`CheckReport`]; the structured results behind the
//! larger checks are returned alongside so callers can export them.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cmv::{build_periodic_cmv, VerblunskyVector, C64};
use crate::density::GridDensity;
use crate::equilibrium::{
    beta_derivative_interval, beta_derivative_measure, free_energy_interval, free_energy_torus, minimize_interval_on,
    minimize_torus, IntervalDensity, IntervalGrid, SolverParams,
};
use crate::error::{domain, GgeError, Result};
use crate::potential::{Domain, Potential};
use crate::rng::StreamId;
use crate::sampling::{
    run_ensemble, sample_coupled_pair, sample_monotone_z, EnsembleKind, EnsembleSpec, McmcParams, ThetaParams,
};
use crate::spectral::{
    check_bv_lip_bound, distance_from_coeffs, fourier_coeffs, standard_dictionary, EmpiricalMeasure, FourierCoeffs,
    IntervalEmpiricalMeasure, BOUND_SLACK,
};
use crate::stats::{estimate_batch_means, estimate_iid, Estimate};

/// Slack for the almost-sure coupling bounds.
pub const COUPLING_SLACK: f64 = 1e-14;
/// Batches used for Monte Carlo standard errors.
pub const BATCHES: usize = 20;
/// Default threshold on `D` for the relation checks.
pub const DEFAULT_D_THRESHOLD: f64 = 0.02;
/// Moments beyond this many standard errors fail a check.
pub const Z_LIMIT: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub parameters: Value,
    pub statistics: Value,
    pub pass: bool,
}

impl CheckReport {
    fn new(check: &str, parameters: Value, statistics: Value, pass: bool) -> Self {
        CheckReport { check: check.to_string(), parameters, statistics, pass }
    }
}

fn trial_streams(seed: u64, stream: u64, trials: usize) -> Vec<StreamId> {
    let base = StreamId::new(seed, stream);
    (0..trials as u64).map(|i| base.child(i)).collect()
}

/// Both per-sample coupling bounds, `|α_ν − α_{ν+h}| ≤ Z_h` and
/// `|ρ_ν − ρ_{ν+h}| ≤ Z_h`, plus `Z_{h₁} ≤ Z_{h₂}` under the shared construction.
pub fn check_coupling_lemma(nu: f64, h: f64, n_samples: usize, seed: u64, stream: u64) -> Result<CheckReport> {
    ThetaParams::new(nu)?;
    if !(h > 0.0 && h < 1.0) {
        return domain(format!("h must lie in (0, 1), got {h}"));
    }
    let mut rng = StreamId::new(seed, stream).rng();
    let (mut alpha_violations, mut rho_violations, mut worst) = (0usize, 0usize, f64::NEG_INFINITY);
    for _ in 0..n_samples {
        let p = sample_coupled_pair(nu, h, &mut rng)?;
        let (da, dr) = p.gaps();
        worst = worst.max(da - p.z_h).max(dr - p.z_h);
        alpha_violations += usize::from(da > p.z_h + COUPLING_SLACK);
        rho_violations += usize::from(dr > p.z_h + COUPLING_SLACK);
    }
    let pair = [h * 0.4, h.max(0.7).min(0.99)];
    let hs = if pair[0] < pair[1] { pair.to_vec() } else { vec![0.2, 0.7] };
    let mut monotone_violations = 0usize;
    for _ in 0..n_samples {
        let z = sample_monotone_z(&hs, &mut rng)?;
        monotone_violations += usize::from(z[0] > z[1]);
    }
    let pass = alpha_violations + rho_violations + monotone_violations == 0;
    Ok(CheckReport::new(
        "coupling_bounds",
        json!({ "nu": nu, "h": h, "n_samples": n_samples, "monotone_h": hs, "slack": COUPLING_SLACK }),
        json!({
            "alpha_violations": alpha_violations,
            "rho_violations": rho_violations,
            "monotone_violations": monotone_violations,
            "max_excess": worst,
        }),
        pass,
    ))
}

pub fn exp_moment_rate(h: f64) -> f64 {
    -0.5 * h.ln() + 1.0
}

/// `h∫₀¹ e^{a w} w^{h−1} dw` with `a = a(h)`, computed as `∫₀¹ e^{a u^{1/h}} du`
/// by composite Simpson.
pub fn exp_moment_quadrature(h: f64) -> f64 {
    let a = exp_moment_rate(h);
    let panels = 20_000usize;
    let du = 1.0 / panels as f64;
    let f = |u: f64| (a * u.powf(1.0 / h)).exp();
    let mut sum = f(0.0) + f(1.0);
    for i in 1..panels {
        sum += f(i as f64 * du) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * du / 3.0
}

/// Series `h Σ_m a^m / (m! (m + h))` for the same integral.
pub fn exp_moment_series(h: f64) -> f64 {
    let a = exp_moment_rate(h);
    let mut term = 1.0;
    let mut total = 0.0;
    for m in 0..200 {
        if m > 0 {
            term *= a / m as f64;
        }
        let add = h * term / (m as f64 + h);
        total += add;
        if add < 1e-17 * total {
            break;
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpMomentRow {
    pub h: f64,
    pub a: f64,
    pub quadrature: f64,
    pub monte_carlo: Estimate,
    pub z: f64,
}

/// Monte Carlo and quadrature values of `E[exp(a(h) Z_h)]` over `h_grid`,
/// with the bound `K` taken as the largest quadrature value.
pub fn check_exp_moment(h_grid: &[f64], n_samples: usize, seed: u64, stream: u64) -> Result<(CheckReport, Vec<ExpMomentRow>)> {
    if h_grid.is_empty() || h_grid.iter().any(|h| !(*h > 0.0 && *h < 1.0)) {
        return domain("h grid must be nonempty and inside (0, 1)");
    }
    let streams = trial_streams(seed, stream, h_grid.len());
    let rows = h_grid
        .par_iter()
        .zip(&streams)
        .map(|(&h, id)| {
            let mut rng = id.rng();
            let a = exp_moment_rate(h);
            let values = (0..n_samples)
                .map(|_| sample_coupled_pair(3.0, h, &mut rng).map(|p| (a * p.z_h).exp()))
                .collect::<Result<Vec<_>>>()?;
            let mc = estimate_iid(&values);
            let quadrature = exp_moment_quadrature(h);
            Ok(ExpMomentRow { h, a, quadrature, monte_carlo: mc, z: mc.z_against(quadrature) })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = rows.iter().map(|r| r.quadrature).fold(0.0, f64::max);
    let agree = rows.iter().all(|r| r.z.abs() <= Z_LIMIT);
    let report = CheckReport::new(
        "exp_moment",
        json!({ "h_grid": h_grid, "n_samples": n_samples }),
        json!({ "bound_k": k, "max_abs_z": rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max), "rows": rows }),
        agree && k.is_finite(),
    );
    Ok((report, rows))
}

fn random_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn random_alphas<R: Rng + ?Sized>(n: usize, r_max: f64, rng: &mut R) -> Result<VerblunskyVector> {
    let entries = (0..n)
        .map(|_| C64::from_polar(r_max * rng.gen::<f64>().sqrt(), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)))
        .collect();
    VerblunskyVector::interior(entries)
}

fn entry_sum(a: &DMatrix<C64>) -> f64 {
    a.iter().map(|z| z.norm()).sum()
}

/// `Σ|(LA)_ij| ≤ 2Σ|A_ij|` and `Σ|(AM)_ij| ≤ 2Σ|A_ij|` on random inputs.
pub fn check_product_bounds(n: usize, trials: usize, seed: u64, stream: u64) -> Result<CheckReport> {
    if n < 2 || n % 2 != 0 {
        return Err(GgeError::Shape(format!("product bounds need an even N >= 2, got {n}")));
    }
    let results = trial_streams(seed, stream, trials)
        .par_iter()
        .map(|id| {
            let mut rng = id.rng();
            let m = build_periodic_cmv(&random_alphas(n, 0.999, &mut rng)?)?;
            let a = random_matrix(n, &mut rng);
            let bound = 2.0 * entry_sum(&a);
            let left = entry_sum(&(m.left_factor() * &a)) / bound;
            let right = entry_sum(&(&a * m.right_factor())) / bound;
            Ok(left.max(right))
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = results.iter().cloned().fold(0.0, f64::max);
    let violations = results.iter().filter(|r| **r > 1.0 + BOUND_SLACK).count();
    Ok(CheckReport::new(
        "product_bounds",
        json!({ "n": n, "trials": trials, "slack": BOUND_SLACK }),
        json!({ "violations": violations, "max_ratio_to_bound": worst }),
        violations == 0,
    ))
}

/// Distance/rank bound between a random CMV matrix and a copy with a few
/// coefficients redrawn, over the standard test-function dictionary.
pub fn check_distance_bounds(n: usize, trials: usize, seed: u64, stream: u64) -> Result<CheckReport> {
    if n < 4 || n % 2 != 0 {
        return Err(GgeError::Shape(format!("distance bounds need an even N >= 4, got {n}")));
    }
    let dictionary = standard_dictionary();
    let results = trial_streams(seed, stream, trials)
        .par_iter()
        .map(|id| {
            let mut rng = id.rng();
            let v = random_alphas(n, 0.95, &mut rng)?;
            let mut w = v.entries().to_vec();
            let changes = rng.gen_range(1..=3);
            for _ in 0..changes {
                let j = rng.gen_range(0..n);
                w[j] = C64::from_polar(0.95 * rng.gen::<f64>().sqrt(), rng.gen_range(-3.0..3.0));
            }
            let a = build_periodic_cmv(&v)?;
            let b = build_periodic_cmv(&VerblunskyVector::interior(w)?)?;
            let r = check_bv_lip_bound(&a, &b, &dictionary)?;
            Ok((r.violations(), r.rank))
        })
        .collect::<Result<Vec<_>>>()?;
    let violations: usize = results.iter().map(|r| r.0).sum();
    let max_rank = results.iter().map(|r| r.1).max().unwrap_or(0);
    Ok(CheckReport::new(
        "distance_bounds",
        json!({ "n": n, "trials": trials, "dictionary_size": dictionary.len(), "slack": BOUND_SLACK }),
        json!({ "violations": violations, "max_rank": max_rank }),
        violations == 0,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum FreeEnergyMethod {
    #[default]
    ThermoIntegration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: FreeEnergyMethod,
    pub s_grid: Vec<f64>,
    /// `E_{sV}[energy / n]` at each grid point.
    pub integrand: Vec<Estimate>,
    /// Gap between the trapezoid value and Simpson on the same grid, when available.
    pub quadrature_error: f64,
    pub warnings: Vec<String>,
}

fn trapezoid(s: &[f64], f: &[f64]) -> f64 {
    s.windows(2).zip(f.windows(2)).map(|(s, f)| 0.5 * (s[1] - s[0]) * (f[0] + f[1])).sum()
}

fn simpson_uniform(s: &[f64], f: &[f64]) -> Option<f64> {
    let n = s.len();
    if n < 3 || n % 2 == 0 {
        return None;
    }
    let h = s[1] - s[0];
    if s.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-12) {
        return None;
    }
    let mut sum = f[0] + f[n - 1];
    for (i, v) in f.iter().enumerate().take(n - 1).skip(1) {
        sum += v * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    Some(sum * h / 3.0)
}

/// Uniform grid of `points` couplings on `[0, 1]`.
pub fn uniform_s_grid(points: usize) -> Vec<f64> {
    let m = points.max(2) - 1;
    (0..=m).map(|i| i as f64 / m as f64).collect()
}

/// `F(V) = ∫₀¹ E_{sV}[E/n] ds`, with `E` the Gibbs energy of a state and `n`
/// the ensemble size, so that `F(V) = −lim (1/n) ln(Z(V)/Z(0))`.
pub fn estimate_free_energy(spec: &EnsembleSpec, s_grid: &[f64], mcmc: &McmcParams, stream: u64) -> Result<FreeEnergyEstimate> {
    spec.validate()?;
    if s_grid.len() < 2
        || s_grid[0] != 0.0
        || *s_grid.last().unwrap() != 1.0
        || s_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return domain("s grid must increase from 0 to 1");
    }
    let n = spec.n as f64;
    let per_point = s_grid
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let scaled = EnsembleSpec { potential: spec.potential.scaled(s), ..spec.clone() };
            let mut values = Vec::with_capacity(mcmc.sweeps);
            let stats = run_ensemble(&scaled, mcmc, stream.wrapping_add(i as u64), |_, m| {
                values.push(spec.gibbs_energy(m)? / n);
                Ok(())
            })?;
            let batch = estimate_batch_means(&values, BATCHES);
            let iid = estimate_iid(&values);
            let est = if stats.exact { iid } else { batch };
            let warning = (!stats.exact && iid.std_error > 0.0 && batch.std_error > 10.0 * iid.std_error)
                .then(|| format!("s = {s}: batch-means error {:.2e} is over 10x the iid error; chain mixes slowly", batch.std_error));
            Ok((est, warning))
        })
        .collect::<Result<Vec<_>>>()?;
    let integrand: Vec<Estimate> = per_point.iter().map(|p| p.0).collect();
    let warnings: Vec<String> = per_point.into_iter().filter_map(|p| p.1).collect();
    let means: Vec<f64> = integrand.iter().map(|e| e.mean).collect();
    let value = trapezoid(s_grid, &means);
    // trapezoid weights for the error propagation
    let mut weights = vec![0.0; s_grid.len()];
    for i in 0..s_grid.len() - 1 {
        let h = s_grid[i + 1] - s_grid[i];
        weights[i] += 0.5 * h;
        weights[i + 1] += 0.5 * h;
    }
    let std_error = weights.iter().zip(&integrand).map(|(w, e)| (w * e.std_error).powi(2)).sum::<f64>().sqrt();
    let quadrature_error = simpson_uniform(s_grid, &means).map_or(0.0, |simp| (simp - value).abs());
    Ok(FreeEnergyEstimate {
        value,
        std_error,
        method: FreeEnergyMethod::ThermoIntegration,
        s_grid: s_grid.to_vec(),
        integrand,
        quadrature_error,
        warnings,
    })
}

/// Normalized circular free energy `F_C(β) = min f_β^V − min f_β^0`.
pub fn circular_free_energy(v: &Potential, beta: f64, params: &SolverParams) -> Result<f64> {
    Ok(minimize_torus(v, beta, params)?.normalized_free_energy())
}

/// `∂_β(β F_C)` by a central difference of step `δ`.
pub fn circular_free_energy_derivative(v: &Potential, beta: f64, delta: f64, params: &SolverParams) -> Result<f64> {
    if !(delta > 0.0 && delta < beta) {
        return domain(format!("need 0 < delta < beta, got delta = {delta}"));
    }
    let plus = circular_free_energy(v, beta + delta, params)?;
    let minus = circular_free_energy(v, beta - delta, params)?;
    Ok(((beta + delta) * plus - (beta - delta) * minus) / (2.0 * delta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyRelation {
    pub lattice: FreeEnergyEstimate,
    pub derivative: f64,
    pub derivative_half_step: f64,
    /// `|D(δ) − D(δ/2)|·4/3`, the leading `O(δ²)` error of `D(δ)`.
    pub finite_difference_error: f64,
    pub discrepancy: f64,
    pub budget: f64,
}

/// Compares the AL free energy from Monte Carlo with `∂_β(β F_C)` from the solver.
/// The budget combines the Monte Carlo error, the `s`-quadrature error and the
/// finite-difference error in quadrature.
pub fn check_free_energy_relation(
    v: &Potential,
    beta: f64,
    delta: f64,
    n: usize,
    s_grid: &[f64],
    mcmc: &McmcParams,
    params: &SolverParams,
    stream: u64,
) -> Result<(CheckReport, FreeEnergyRelation)> {
    let spec = EnsembleSpec::new(EnsembleKind::AL, n, beta, v.clone())?;
    let lattice = estimate_free_energy(&spec, s_grid, mcmc, stream)?;
    let derivative = circular_free_energy_derivative(v, beta, delta, params)?;
    let derivative_half_step = circular_free_energy_derivative(v, beta, delta / 2.0, params)?;
    let finite_difference_error = (derivative - derivative_half_step).abs() * 4.0 / 3.0;
    let discrepancy = (lattice.value - derivative).abs();
    let budget = (lattice.std_error.powi(2) + lattice.quadrature_error.powi(2) + finite_difference_error.powi(2)).sqrt();
    let pass = discrepancy <= Z_LIMIT * budget;
    let rel = FreeEnergyRelation { lattice, derivative, derivative_half_step, finite_difference_error, discrepancy, budget };
    let report = CheckReport::new(
        "free_energy_relation",
        json!({ "potential": v, "beta": beta, "delta": delta, "n": n, "s_grid": s_grid, "mcmc": mcmc }),
        json!({
            "lattice_free_energy": rel.lattice.value,
            "lattice_std_error": rel.lattice.std_error,
            "quadrature_error": rel.lattice.quadrature_error,
            "solver_derivative": rel.derivative,
            "finite_difference_error": rel.finite_difference_error,
            "discrepancy": rel.discrepancy,
            "budget": rel.budget,
            "warnings": rel.lattice.warnings,
        }),
        pass,
    );
    Ok((report, rel))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub name: String,
    pub monte_carlo: Estimate,
    pub target: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub kind: EnsembleKind,
    pub beta: f64,
    pub potential: Potential,
    pub n: usize,
    pub delta: f64,
    pub d_value: f64,
    pub d_upper_half_share: f64,
    pub k_max: usize,
    pub mc_samples: usize,
    pub acceptance_rate: f64,
    pub solver_richardson: f64,
    pub moments: Vec<MomentRow>,
    pub threshold: f64,
    pub warnings: Vec<String>,
    pub pass: bool,
}

impl RelationReport {
    pub fn max_abs_z(&self) -> f64 {
        self.moments.iter().map(|m| m.z.abs()).fold(0.0, f64::max)
    }

    pub fn to_check(&self) -> CheckReport {
        CheckReport::new(
            "dos_relation",
            json!({
                "ensemble": self.kind, "beta": self.beta, "potential": self.potential, "n": self.n,
                "delta": self.delta, "k_max": self.k_max, "threshold": self.threshold,
            }),
            json!({
                "d_value": self.d_value, "d_upper_half_share": self.d_upper_half_share,
                "mc_samples": self.mc_samples, "acceptance_rate": self.acceptance_rate,
                "solver_richardson": self.solver_richardson, "max_abs_z": self.max_abs_z(),
                "moments": self.moments, "warnings": self.warnings,
            }),
            self.pass,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationParams {
    pub delta: f64,
    /// Modes entering `D`.
    pub k_max: usize,
    /// Moments `k = 1..=moment_order` reported with z-scores.
    pub moment_order: usize,
    pub threshold: f64,
}

impl Default for RelationParams {
    fn default() -> Self {
        RelationParams { delta: 0.05, k_max: 256, moment_order: 4, threshold: DEFAULT_D_THRESHOLD }
    }
}

struct MeasureAccumulator {
    sum: Vec<C64>,
    moments: Vec<Vec<f64>>,
    count: usize,
}

impl MeasureAccumulator {
    fn new(k_max: usize, moment_series: usize) -> Self {
        MeasureAccumulator { sum: vec![C64::new(0.0, 0.0); k_max], moments: vec![Vec::new(); moment_series], count: 0 }
    }

    fn mean_coeffs(&self) -> FourierCoeffs {
        let c = self.sum.iter().map(|z| z / self.count as f64).collect();
        FourierCoeffs { k_max: self.sum.len(), c }
    }

    fn estimates(&self, exact: bool) -> Vec<Estimate> {
        self.moments.iter().map(|v| if exact { estimate_iid(v) } else { estimate_batch_means(v, BATCHES) }).collect()
    }
}

fn moment_row(name: String, monte_carlo: Estimate, target: f64) -> MomentRow {
    MomentRow { name, z: monte_carlo.z_against(target), monte_carlo, target }
}

/// Ensemble-averaged empirical measure of a lattice GGE against `∂_β(β μ_β)`.
///
/// AL is compared with the circular solver. Schur is compared with the
/// interval solver; since `Tr V(E)` counts each paired eigenvalue twice, the
/// interval potential is `2V`. For Schur, `D` uses the Chebyshev moments
/// `∫T_k dμ`, which are the Fourier coefficients of the lifted measure.
pub fn check_dos_relation(
    spec: &EnsembleSpec,
    mcmc: &McmcParams,
    stream: u64,
    solver: &SolverParams,
    relation: &RelationParams,
) -> Result<RelationReport> {
    spec.validate()?;
    if relation.moment_order > relation.k_max || relation.k_max == 0 {
        return domain("need 1 <= moment_order <= k_max");
    }
    let (k_max, order) = (relation.k_max, relation.moment_order);
    let mut warnings = Vec::new();
    // target coefficients, target values of the reported moments, and their names
    let (target, target_moments, richardson, series_names) = match spec.kind {
        EnsembleKind::AL => {
            let d = beta_derivative_measure(&spec.potential, spec.beta, relation.delta, solver)?;
            warnings.extend(d.warnings.iter().cloned());
            let c = fourier_coeffs(&d, k_max);
            let values = c.c[..order].iter().flat_map(|z| [z.re, z.im]).collect::<Vec<_>>();
            let names = (1..=order).flat_map(|k| [format!("cos{k}"), format!("sin{k}")]).collect::<Vec<_>>();
            (c, values, d.richardson, names)
        }
        EnsembleKind::Schur => {
            let v = if spec.potential.is_zero() { Potential::zero(Domain::Interval) } else { spec.potential.scaled(2.0) };
            let d = beta_derivative_interval(&v, spec.beta, relation.delta, solver)?;
            warnings.extend(d.warnings.iter().cloned());
            let c = (1..=k_max).map(|k| C64::new(d.integrate(|x| chebyshev_t(k, x)), 0.0)).collect();
            let names = (1..=order).map(|k| format!("x^{k}")).collect();
            (FourierCoeffs { k_max, c }, d.power_moments(order), d.richardson, names)
        }
        other => return Err(GgeError::Config(format!("the relation check covers AL and Schur, not {other:?}"))),
    };
    let mut acc = MeasureAccumulator::new(k_max, series_names.len());
    let kind = spec.kind;
    let stats = run_ensemble(spec, mcmc, stream, |_, m| {
        match kind {
            EnsembleKind::AL => {
                let mu = EmpiricalMeasure::from_matrix(m)?;
                let c = fourier_coeffs(&mu, k_max);
                for (s, z) in acc.sum.iter_mut().zip(&c.c) {
                    *s += z;
                }
                for k in 0..order {
                    acc.moments[2 * k].push(c.c[k].re);
                    acc.moments[2 * k + 1].push(c.c[k].im);
                }
            }
            _ => {
                let mu = IntervalEmpiricalMeasure::from_matrix(m)?;
                for (k, s) in acc.sum.iter_mut().enumerate() {
                    *s += mu.integrate(|x| chebyshev_t(k + 1, x));
                }
                for (j, p) in mu.power_moments(order).into_iter().enumerate() {
                    acc.moments[j].push(p);
                }
            }
        }
        acc.count += 1;
        Ok(())
    })?;
    let estimates = acc.estimates(stats.exact);
    let moments: Vec<MomentRow> = series_names
        .into_iter()
        .zip(estimates.into_iter().zip(target_moments))
        .map(|(name, (mc, t))| moment_row(name, mc, t))
        .collect();
    let dist = distance_from_coeffs(&acc.mean_coeffs(), &target);
    if dist.upper_half_share > 0.25 * dist.value * dist.value && dist.value > 0.0 {
        warnings.push("upper half of the modes carries over a quarter of D²; consider a larger k_max".into());
    }
    let pass = dist.value <= relation.threshold && moments.iter().all(|m| m.z.abs() <= Z_LIMIT);
    Ok(RelationReport {
        kind,
        beta: spec.beta,
        potential: spec.potential.clone(),
        n: spec.n,
        delta: relation.delta,
        d_value: dist.value,
        d_upper_half_share: dist.upper_half_share,
        k_max,
        mc_samples: acc.count,
        acceptance_rate: stats.acceptance_rate(),
        solver_richardson: richardson,
        moments,
        threshold: relation.threshold,
        warnings,
        pass,
    })
}

/// Chebyshev polynomial `T_k(x)`.
pub fn chebyshev_t(k: usize, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        (k as f64 * x.acos()).cos()
    } else {
        let (mut a, mut b) = (1.0, x);
        for _ in 0..k {
            (a, b) = (b, 2.0 * x * b - a);
        }
        a
    }
}

/// `f_β^V(μ) − min f_β^V` on the torus.
pub fn rate_function_circular(mu: &GridDensity, v: &Potential, beta: f64, params: &SolverParams) -> Result<f64> {
    let p = SolverParams { grid_size: mu.grid_size(), ..*params };
    let min = minimize_torus(v, beta, &p)?;
    Ok((free_energy_torus(mu, v, beta)?.total - min.free_energy.total).max(0.0))
}

/// The interval analogue, on the grid of `mu`.
pub fn rate_function_jacobi(mu: &IntervalDensity, v: &Potential, beta: f64, params: &SolverParams) -> Result<f64> {
    let grid = IntervalGrid::new(mu.nodes.len(), mu.nodes.s_max)?;
    let min = minimize_interval_on(&grid, v, beta, params, None)?;
    Ok((free_energy_interval(mu, v, beta)?.total - min.free_energy.total).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn exp_moment_quadrature_matches_series() {
        assert!((exp_moment_quadrature(0.999999) - (E - 1.0)).abs() < 1e-5);
        for h in [0.01, 0.1, 0.5, 0.9] {
            let (q, s) = (exp_moment_quadrature(h), exp_moment_series(h));
            assert!((q - s).abs() < 1e-9 * s, "{h}: {q} {s}");
        }
    }

    #[test]
    fn exp_moment_bound_holds() {
        let (report, rows) = check_exp_moment(&[0.01, 0.1, 0.5, 0.9], 20_000, 4, 0).unwrap();
        assert!(report.pass, "{report:?}");
        let k = report.statistics["bound_k"].as_f64().unwrap();
        assert!(rows.iter().all(|r| r.quadrature <= k));
        assert!(k < 3.0);
    }

    #[test]
    fn coupling_suite_is_clean() {
        let r = check_coupling_lemma(3.0, 0.5, 20_000, 1, 0).unwrap();
        assert!(r.pass, "{r:?}");
        let r = check_coupling_lemma(1.5, 0.999, 5_000, 1, 1).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(check_coupling_lemma(3.0, 1.0, 10, 1, 0).is_err());
    }

    #[test]
    fn product_and_distance_suites_are_clean() {
        assert!(check_product_bounds(8, 100, 2, 0).unwrap().pass);
        assert!(check_distance_bounds(8, 30, 2, 1).unwrap().pass);
    }

    #[test]
    fn free_energy_trivial_cases() {
        let z = EnsembleSpec::new(EnsembleKind::AL, 8, 1.0, Potential::zero(Domain::Torus)).unwrap();
        let mcmc = McmcParams::with_defaults(8, 50, 3);
        let f = estimate_free_energy(&z, &uniform_s_grid(3), &mcmc, 0).unwrap();
        assert_eq!(f.value, 0.0);
        let c = EnsembleSpec { potential: Potential::torus(vec![0.7], vec![]), ..z };
        let f = estimate_free_energy(&c, &uniform_s_grid(3), &mcmc, 0).unwrap();
        assert!((f.value - 0.7).abs() < 1e-12 && f.std_error < 1e-12);
        assert!(estimate_free_energy(&c, &[0.0, 0.5], &mcmc, 0).is_err());
    }

    #[test]
    fn trapezoid_and_simpson() {
        let s = uniform_s_grid(5);
        let f: Vec<f64> = s.iter().map(|x| x * x).collect();
        assert!((simpson_uniform(&s, &f).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((trapezoid(&s, &f) - 0.34375).abs() < 1e-15);
    }

    #[test]
    fn rate_function_values() {
        let params = SolverParams { grid_size: 128, ..SolverParams::default() };
        let z = Potential::zero(Domain::Torus);
        let u = GridDensity::uniform(128).unwrap();
        assert!(rate_function_circular(&u, &z, 1.0, &params).unwrap() < 1e-12);
        let mu = GridDensity::from_fn(128, |t| 1.0 + t.cos()).unwrap();
        let entropy = mu.integrate(|t| (1.0 + t.cos()).max(1e-300).ln());
        let i = rate_function_circular(&mu, &z, 1.0, &params).unwrap();
        assert!((i - (0.25 + entropy)).abs() < 1e-3, "{i} {}", 0.25 + entropy);
        let v = Potential::cosine(0.5);
        let mu = minimize_torus(&v, 1.0, &params).unwrap().density;
        assert!(rate_function_circular(&mu, &v, 1.0, &params).unwrap() < 1e-9);
    }

    #[test]
    fn jacobi_rate_function_vanishes_at_minimizer() {
        let params = SolverParams { grid_size: 256, ..SolverParams::default() };
        let v = Potential::chebyshev(vec![0.0, 0.3]);
        let grid = IntervalGrid::for_beta(256, 1.0).unwrap();
        let s = minimize_interval_on(&grid, &v, 1.0, &params, None).unwrap();
        assert!(rate_function_jacobi(&s.density, &v, 1.0, &params).unwrap() < 1e-9);
        let h: Vec<f64> = s.density.nodes.s.iter().map(|s| 1.0 / (PI * s.cosh())).collect();
        let arcsine = IntervalDensity::from_h(s.density.nodes.clone(), h).unwrap();
        assert!(rate_function_jacobi(&arcsine, &v, 1.0, &params).unwrap() > 1e-3);
    }

    #[test]
    fn al_relation_at_zero_potential() {
        let spec = EnsembleSpec::new(EnsembleKind::AL, 16, 1.0, Potential::zero(Domain::Torus)).unwrap();
        let mcmc = McmcParams::with_defaults(16, 400, 5);
        let solver = SolverParams { grid_size: 64, ..SolverParams::default() };
        let rel = RelationParams { k_max: 16, ..RelationParams::default() };
        let r = check_dos_relation(&spec, &mcmc, 0, &solver, &rel).unwrap();
        assert!(r.d_value <= 6.0 / ((400.0 * 16.0) as f64).sqrt(), "{}", r.d_value);
        assert!(r.max_abs_z() < 4.5, "{r:?}");
    }

    #[test]
    fn chebyshev_values() {
        assert!((chebyshev_t(3, 0.3) - (4.0 * 0.027 - 0.9)).abs() < 1e-15);
        assert_eq!(chebyshev_t(0, 2.0), 1.0);
        assert_eq!(chebyshev_t(2, 2.0), 7.0);
    }
}
