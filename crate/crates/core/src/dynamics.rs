//! Ablowitz–Ladik and Schur flows: right-hand sides, RK4 integration,
//! conservation and Lax-equation diagnostics, and GGE invariance tests.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cmv::{build_periodic_cmv, conserved_quantities, max_abs, VerblunskyVector, C64};
use crate::error::{domain, GgeError, Result};
use crate::sampling::{run_ensemble, EnsembleKind, EnsembleSpec, McmcParams};
use crate::stats::{estimate_iid, z_test, Estimate};

/// Moduli may exceed one by this much before integration stops.
pub const STABILITY_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    #[serde(alias = "al")]
    AL,
    Schur,
}

impl std::str::FromStr for FlowKind {
    type Err = GgeError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "al" | "ablowitz-ladik" => Ok(FlowKind::AL),
            "schur" => Ok(FlowKind::Schur),
            _ => Err(GgeError::Config(format!("unknown flow `{s}`"))),
        }
    }
}

/// `α̇_j = iρ_j²(α_{j+1} + α_{j−1})`, periodic in `j`.
///
/// This is the phase convention under which `E` obeys the Lax equation. The
/// lattice written as `iα̇_j = −(α_{j+1} + α_{j−1} − 2α_j) + |α_j|²(α_{j+1} + α_{j−1})`
/// differs by the uniform rotation `α_j ↦ e^{−2it}α_j`; see [`gauge_rotate`].
pub fn al_rhs(alphas: &[C64]) -> Vec<C64> {
    let n = alphas.len();
    let i = C64::new(0.0, 1.0);
    (0..n)
        .map(|j| {
            let nb = alphas[(j + 1) % n] + alphas[(j + n - 1) % n];
            i * (1.0 - alphas[j].norm_sqr()) * nb
        })
        .collect()
}

/// Maps a state of the Lax-convention flow at time `t` to the lattice with
/// the `+2α_j` term, `α_j ↦ e^{−2it}α_j`. Conserved quantities are unchanged.
pub fn gauge_rotate(state: &FlowState) -> FlowState {
    let phase = C64::from_polar(1.0, -2.0 * state.time);
    FlowState { alphas: state.alphas.iter().map(|a| a * phase).collect(), time: state.time }
}

/// `α̇_j = (1 − α_j²)(α_{j+1} − α_{j−1})`, periodic in `j`.
pub fn schur_rhs(alphas: &[f64]) -> Vec<f64> {
    let n = alphas.len();
    (0..n).map(|j| (1.0 - alphas[j] * alphas[j]) * (alphas[(j + 1) % n] - alphas[(j + n - 1) % n])).collect()
}

/// Schur right-hand side for a complex-typed state; rejects nonzero imaginary parts.
pub fn schur_rhs_checked(alphas: &[C64]) -> Result<Vec<f64>> {
    if alphas.iter().any(|a| a.im != 0.0) {
        return domain("the Schur flow needs real coefficients");
    }
    Ok(schur_rhs(&alphas.iter().map(|a| a.re).collect::<Vec<_>>()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorParams {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    /// Steps between recorded frames; zero records only the endpoints.
    pub record_every: usize,
}

impl IntegratorParams {
    pub fn new(dt: f64, t_final: f64) -> Self {
        IntegratorParams { dt, t_final, scheme: Scheme::Rk4, record_every: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) || (self.t_final > 0.0 && self.dt > self.t_final) {
            return domain(format!("need 0 < dt <= t_final, got dt = {}, t_final = {}", self.dt, self.t_final));
        }
        Ok(())
    }

    /// Step sizes covering `[0, t_final]`: full steps, then a short last one if needed.
    pub fn step_sizes(&self) -> Vec<f64> {
        let full = (self.t_final / self.dt * (1.0 + 1e-12)).floor() as usize;
        let mut sizes = vec![self.dt; full];
        let rest = self.t_final - full as f64 * self.dt;
        if rest > 1e-12 * self.dt {
            sizes.push(rest);
        }
        sizes
    }
}

/// Phase-space point along a trajectory. Schur states have zero imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub alphas: Vec<C64>,
    pub time: f64,
}

impl FlowState {
    pub fn new(v: &VerblunskyVector) -> Self {
        FlowState { alphas: v.entries().to_vec(), time: 0.0 }
    }

    pub fn to_vector(&self) -> Result<VerblunskyVector> {
        VerblunskyVector::interior(self.alphas.clone())
    }

    pub fn max_modulus(&self) -> f64 {
        self.alphas.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }
}

fn axpy(y: &[C64], a: f64, x: &[C64]) -> Vec<C64> {
    y.iter().zip(x).map(|(y, x)| y + x * a).collect()
}

fn axpy_real(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

/// One classical Runge–Kutta step; `dt` may be negative.
pub fn rk4_step(flow: FlowKind, alphas: &[C64], dt: f64) -> Result<Vec<C64>> {
    match flow {
        FlowKind::AL => {
            let k1 = al_rhs(alphas);
            let k2 = al_rhs(&axpy(alphas, dt / 2.0, &k1));
            let k3 = al_rhs(&axpy(alphas, dt / 2.0, &k2));
            let k4 = al_rhs(&axpy(alphas, dt, &k3));
            Ok((0..alphas.len()).map(|j| alphas[j] + (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (dt / 6.0)).collect())
        }
        FlowKind::Schur => {
            if alphas.iter().any(|a| a.im != 0.0) {
                return domain("the Schur flow needs real coefficients");
            }
            let y: Vec<f64> = alphas.iter().map(|a| a.re).collect();
            let k1 = schur_rhs(&y);
            let k2 = schur_rhs(&axpy_real(&y, dt / 2.0, &k1));
            let k3 = schur_rhs(&axpy_real(&y, dt / 2.0, &k2));
            let k4 = schur_rhs(&axpy_real(&y, dt, &k3));
            Ok((0..y.len())
                .map(|j| C64::new(y[j] + (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (dt / 6.0), 0.0))
                .collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub flow: FlowKind,
    pub frames: Vec<FlowState>,
}

impl Trajectory {
    pub fn last(&self) -> &FlowState {
        self.frames.last().expect("trajectory has at least the initial frame")
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.frames.first().map_or(0, |f| f.alphas.len());
        let mut header = String::from("t");
        for j in 1..=n {
            header.push_str(&format!(",re_alpha_{j},im_alpha_{j}"));
        }
        writeln!(w, "{header}")?;
        for f in &self.frames {
            let mut line = format!("{:.17e}", f.time);
            for a in &f.alphas {
                line.push_str(&format!(",{:.17e},{:.17e}", a.re, a.im));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Fixed-step RK4 from `state0` to `t_final`.
pub fn integrate(state0: &FlowState, flow: FlowKind, params: &IntegratorParams) -> Result<Trajectory> {
    params.validate()?;
    if flow == FlowKind::Schur && state0.alphas.iter().any(|a| a.im != 0.0) {
        return domain("the Schur flow needs real coefficients");
    }
    let sizes = params.step_sizes();
    let steps = sizes.len();
    let mut frames = vec![state0.clone()];
    let mut alphas = state0.alphas.clone();
    for (step, h) in (1..=steps).zip(&sizes) {
        alphas = rk4_step(flow, &alphas, *h)?;
        let time = if step == steps { state0.time + params.t_final } else { state0.time + step as f64 * params.dt };
        let max_modulus = alphas.iter().map(|a| a.norm()).fold(0.0, f64::max);
        if !(max_modulus <= 1.0 + STABILITY_SLACK) {
            return Err(GgeError::Stability { time, max_modulus });
        }
        let record = step == steps || (params.record_every > 0 && step % params.record_every == 0);
        if record {
            frames.push(FlowState { alphas: alphas.clone(), time });
        }
    }
    Ok(Trajectory { flow, frames })
}

/// Largest drift of the conserved quantities relative to the first frame.
///
/// `K0` drift is relative; `K1` and trace drifts are divided by `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub ell_max: usize,
    pub frames: usize,
    pub k0_drift: f64,
    pub k1_drift: f64,
    pub trace_drift: Vec<f64>,
    pub max_unitarity_residual: f64,
}

impl ConservationReport {
    pub fn max_drift(&self) -> f64 {
        self.trace_drift.iter().cloned().fold(self.k0_drift.max(self.k1_drift), f64::max)
    }
}

pub fn conservation_report(trajectory: &Trajectory, ell_max: usize) -> Result<ConservationReport> {
    let first = trajectory.frames.first().ok_or_else(|| GgeError::Domain("empty trajectory".into()))?;
    let n = first.alphas.len() as f64;
    let q0 = conserved_quantities(&first.to_vector()?, ell_max)?;
    let mut report = ConservationReport {
        ell_max,
        frames: trajectory.frames.len(),
        k0_drift: 0.0,
        k1_drift: 0.0,
        trace_drift: vec![0.0; ell_max],
        max_unitarity_residual: 0.0,
    };
    for f in &trajectory.frames {
        let v = f.to_vector()?;
        let q = conserved_quantities(&v, ell_max)?;
        report.k0_drift = report.k0_drift.max((q.k0 - q0.k0).abs() / q0.k0);
        report.k1_drift = report.k1_drift.max((q.k1 - q0.k1).norm() / n);
        for (d, (a, b)) in report.trace_drift.iter_mut().zip(q.k_traces.iter().zip(&q0.k_traces)) {
            *d = d.max((a - b).norm() / n);
        }
        let residual = build_periodic_cmv(&v)?.unitarity_residual();
        report.max_unitarity_residual = report.max_unitarity_residual.max(residual);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaxReport {
    pub dt_probe: f64,
    /// `‖(E(t+dt) − E(t))/dt − i[E, E⁺ + (E⁺)†]‖_max`.
    pub residual: f64,
    /// `‖[E, E⁺ + (E⁺)†] − [E, E⁺ − (E†)⁺]‖_max`.
    pub commutator_gap: f64,
}

/// Compares a forward difference of `E` along the AL flow with the Lax commutator.
pub fn lax_residual(state: &FlowState, dt_probe: f64) -> Result<LaxReport> {
    if !(dt_probe > 0.0) {
        return domain("dt_probe must be positive");
    }
    let e = build_periodic_cmv(&state.to_vector()?)?;
    let later = rk4_step(FlowKind::AL, &state.alphas, dt_probe)?;
    let e_later = build_periodic_cmv(&VerblunskyVector::interior(later)?)?;
    let dense = e.to_dense();
    let plus = e.e_plus()?;
    let b1 = &plus + plus.adjoint();
    let adjoint_plus = crate::cmv::upper_projection(&dense.adjoint());
    let b2 = &plus - adjoint_plus;
    let i = C64::new(0.0, 1.0);
    let c1 = (&dense * &b1 - &b1 * &dense) * i;
    let c2 = (&dense * &b2 - &b2 * &dense) * i;
    let derivative = (e_later.to_dense() - &dense) / C64::new(dt_probe, 0.0);
    Ok(LaxReport { dt_probe, residual: max_abs(&(derivative - &c1)), commutator_gap: max_abs(&(c1 - c2)) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceStat {
    pub name: String,
    pub before: Estimate,
    pub after: Estimate,
    pub z: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub samples: usize,
    pub t_final: f64,
    pub stats: Vec<InvarianceStat>,
}

impl InvarianceReport {
    pub fn min_p_value(&self) -> f64 {
        self.stats.iter().map(|s| s.p_value).fold(1.0, f64::min)
    }
}

fn observables(alphas: &[C64]) -> Result<Vec<f64>> {
    let n = alphas.len() as f64;
    let m = build_periodic_cmv(&VerblunskyVector::interior(alphas.to_vec())?)?;
    let t = m.trace_powers(4);
    let mut out: Vec<f64> = (1..=4).map(|k| t[k].re / n).collect();
    out.push(alphas.iter().map(|a| a.norm_sqr()).sum::<f64>() / n);
    Ok(out)
}

const OBSERVABLE_NAMES: [&str; 5] = ["re_tr_e1/N", "re_tr_e2/N", "re_tr_e3/N", "re_tr_e4/N", "mean_abs_alpha_sq"];

/// Draws GGE states, flows each to `t_final` and z-tests the ensemble averages
/// of `Re Tr E^k / N` (k ≤ 4) and `Σ|α_j|²/N` before against after.
pub fn gge_invariance_test(
    spec: &EnsembleSpec,
    mcmc: &McmcParams,
    stream: u64,
    params: &IntegratorParams,
) -> Result<InvarianceReport> {
    let flow = match spec.kind {
        EnsembleKind::AL => FlowKind::AL,
        EnsembleKind::Schur => FlowKind::Schur,
        other => return Err(GgeError::Config(format!("{other:?} is not a lattice GGE"))),
    };
    if mcmc.sweeps < 10 {
        return Err(GgeError::Diagnostic(format!("{} samples are too few for a z-test", mcmc.sweeps)));
    }
    let mut states = Vec::with_capacity(mcmc.sweeps);
    run_ensemble(spec, mcmc, stream, |_, m| {
        states.push(m.alphas().entries().to_vec());
        Ok(())
    })?;
    let pairs = states
        .par_iter()
        .map(|a| {
            let before = observables(a)?;
            let traj = integrate(&FlowState { alphas: a.clone(), time: 0.0 }, flow, params)?;
            let after = observables(&traj.last().alphas)?;
            Ok((before, after))
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = OBSERVABLE_NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let before = estimate_iid(&pairs.iter().map(|p| p.0[k]).collect::<Vec<_>>());
            let after = estimate_iid(&pairs.iter().map(|p| p.1[k]).collect::<Vec<_>>());
            let t = z_test(after, before);
            InvarianceStat { name: name.to_string(), before, after, z: t.z, p_value: t.p_value }
        })
        .collect();
    Ok(InvarianceReport { samples: pairs.len(), t_final: params.t_final, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{Domain, Potential};
    use crate::rng::stream_rng;
    use rand::Rng;

    fn random_state(n: usize, r_max: f64, seed: u64) -> FlowState {
        let mut rng = stream_rng(seed, 0);
        let alphas = (0..n)
            .map(|_| C64::from_polar(r_max * rng.gen::<f64>().sqrt(), rng.gen_range(-3.14..3.14)))
            .collect();
        FlowState { alphas, time: 0.0 }
    }

    fn hamiltonian_rhs(a: &[C64]) -> Vec<C64> {
        let i = C64::new(0.0, 1.0);
        al_rhs(a).iter().zip(a).map(|(r, a)| r - 2.0 * i * a).collect()
    }

    #[test]
    fn constant_data_rotates() {
        let c = C64::new(0.3, 0.4);
        let rho2 = 1.0 - c.norm_sqr();
        let rhs = al_rhs(&[c; 6]);
        assert!(rhs.iter().all(|r| (r - C64::new(0.0, 2.0 * rho2) * c).norm() < 1e-15));
        let s = FlowState { alphas: vec![c; 6], time: 0.0 };
        let traj = integrate(&s, FlowKind::AL, &IntegratorParams::new(1e-2, 1.0)).unwrap();
        let exact = c * C64::from_polar(1.0, 2.0 * rho2);
        assert!(traj.last().alphas.iter().all(|a| (a - exact).norm() < 1e-8));
        // in the rotated frame the constant solution turns at rate −2|c|²
        let g = gauge_rotate(traj.last());
        let exact = c * C64::from_polar(1.0, -2.0 * c.norm_sqr());
        assert!(g.alphas.iter().all(|a| (a - exact).norm() < 1e-8));
    }

    #[test]
    fn gauge_rotation_intertwines_flows() {
        let s = random_state(8, 0.6, 13);
        let t = integrate(&s, FlowKind::AL, &IntegratorParams::new(1e-3, 0.5)).unwrap();
        let mut y = s.alphas.clone();
        let dt = 1e-3;
        for _ in 0..500 {
            let k1 = hamiltonian_rhs(&y);
            let k2 = hamiltonian_rhs(&axpy(&y, dt / 2.0, &k1));
            let k3 = hamiltonian_rhs(&axpy(&y, dt / 2.0, &k2));
            let k4 = hamiltonian_rhs(&axpy(&y, dt, &k3));
            y = (0..y.len()).map(|j| y[j] + (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (dt / 6.0)).collect();
        }
        let g = gauge_rotate(t.last());
        let err = g.alphas.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
        let q = conserved_quantities(&t.last().to_vector().unwrap(), 4).unwrap();
        let qg = conserved_quantities(&g.to_vector().unwrap(), 4).unwrap();
        assert!((q.k1 - qg.k1).norm() < 1e-12);
        for (a, b) in q.k_traces.iter().zip(&qg.k_traces) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rk4_order_on_constant_data() {
        let c = C64::new(0.5, 0.1);
        let exact = c * C64::from_polar(1.0, 2.0 * (1.0 - c.norm_sqr()) * 4.0);
        let err = |dt: f64| {
            let t = integrate(&FlowState { alphas: vec![c; 4], time: 0.0 }, FlowKind::AL, &IntegratorParams::new(dt, 4.0))
                .unwrap();
            (t.last().alphas[0] - exact).norm()
        };
        let ratio = err(0.2) / err(0.1);
        assert!(ratio > 12.0 && ratio < 20.0, "{ratio}");
    }

    #[test]
    fn hamiltonian_gradient_gives_rotated_flow() {
        // α̇_j = −iρ_j² ∂H/∂ᾱ_j with H = −2 ln K0 + K1 + K̄1
        let s = random_state(6, 0.7, 3);
        let a = &s.alphas;
        let n = a.len();
        let h = |a: &[C64]| {
            let k0: f64 = a.iter().map(|x| (1.0 - x.norm_sqr()).ln()).sum();
            let k1: C64 = -(0..n).map(|j| a[j] * a[(j + 1) % n].conj()).sum::<C64>();
            -2.0 * k0 + 2.0 * k1.re
        };
        let rhs = hamiltonian_rhs(a);
        let eps = 1e-6;
        for j in 0..n {
            let mut p = a.clone();
            let mut q = a.clone();
            p[j] += eps;
            q[j] -= eps;
            let dx = (h(&p) - h(&q)) / (2.0 * eps);
            let mut p = a.clone();
            let mut q = a.clone();
            p[j] += C64::new(0.0, eps);
            q[j] -= C64::new(0.0, eps);
            let dy = (h(&p) - h(&q)) / (2.0 * eps);
            let grad = C64::new(dx, dy) / 2.0;
            let expected = C64::new(0.0, -1.0) * (1.0 - a[j].norm_sqr()) * grad;
            assert!((rhs[j] - expected).norm() < 1e-8, "{j}");
        }
    }

    #[test]
    fn schur_rhs_examples() {
        assert!(schur_rhs(&[0.3; 5]).iter().all(|x| *x == 0.0));
        let r = schur_rhs(&[1.0, 0.2, -0.4, 0.1]);
        assert_eq!(r[0], 0.0);
        assert!(schur_rhs_checked(&[C64::new(0.1, 0.1), C64::new(0.0, 0.0)]).is_err());
    }

    #[test]
    fn zero_data_stays_zero() {
        let s = FlowState { alphas: vec![C64::new(0.0, 0.0); 8], time: 0.0 };
        for flow in [FlowKind::AL, FlowKind::Schur] {
            let t = integrate(&s, flow, &IntegratorParams::new(0.1, 1.0)).unwrap();
            assert!(t.last().alphas.iter().all(|a| a.norm() == 0.0));
            assert_eq!(conservation_report(&t, 4).unwrap().max_drift(), 0.0);
        }
        assert!(lax_residual(&s, 1e-3).unwrap().residual <= 1e-12);
    }

    #[test]
    fn lax_residual_is_first_order() {
        let s = random_state(8, 0.6, 5);
        let a = lax_residual(&s, 1e-3).unwrap();
        let b = lax_residual(&s, 5e-4).unwrap();
        assert!(a.commutator_gap <= 1e-12);
        let ratio = a.residual / b.residual;
        assert!(ratio > 1.8 && ratio < 2.2, "{ratio} {}", a.residual);
    }

    #[test]
    fn conservation_and_reversal() {
        let s = random_state(16, 0.5, 7);
        let p = IntegratorParams { record_every: 100, ..IntegratorParams::new(1e-2, 2.0) };
        let t = integrate(&s, FlowKind::AL, &p).unwrap();
        let r = conservation_report(&t, 4).unwrap();
        assert!(r.max_drift() < 1e-8, "{r:?}");
        assert!(r.max_unitarity_residual < 1e-12);
        let mut back = t.last().alphas.clone();
        for _ in 0..200 {
            back = rk4_step(FlowKind::AL, &back, -1e-2).unwrap();
        }
        let err = back.iter().zip(&s.alphas).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn schur_flow_stays_real() {
        let mut rng = stream_rng(9, 0);
        let alphas = (0..12).map(|_| C64::new(rng.gen_range(-0.5..0.5), 0.0)).collect();
        let t = integrate(&FlowState { alphas, time: 0.0 }, FlowKind::Schur, &IntegratorParams::new(1e-2, 1.0)).unwrap();
        assert!(t.frames.iter().all(|f| f.alphas.iter().all(|a| a.im.to_bits() == 0)));
        assert!(conservation_report(&t, 4).unwrap().max_drift() < 1e-8);
        let complex = FlowState { alphas: vec![C64::new(0.1, 0.1); 4], time: 0.0 };
        assert!(integrate(&complex, FlowKind::Schur, &IntegratorParams::new(0.1, 1.0)).is_err());
    }

    #[test]
    fn unstable_step_is_reported() {
        let s = random_state(8, 0.99, 11);
        let err = integrate(&s, FlowKind::AL, &IntegratorParams::new(5.0, 50.0)).unwrap_err();
        assert!(matches!(err, GgeError::Stability { .. }), "{err:?}");
    }

    #[test]
    fn invariance_at_zero_time() {
        let spec = EnsembleSpec::new(EnsembleKind::AL, 8, 1.0, Potential::zero(Domain::Torus)).unwrap();
        let mcmc = McmcParams::with_defaults(8, 50, 1);
        let r = gge_invariance_test(&spec, &mcmc, 0, &IntegratorParams::new(0.1, 0.0)).unwrap();
        assert!(r.stats.iter().all(|s| s.z == 0.0));
    }
}
