//! Distributions on the disk and samplers for the four ensembles.
//!
//! Zero-potential ensembles are sampled exactly from product laws. With a
//! potential, a Metropolis-within-Gibbs chain proposes one coefficient at a
//! time from its zero-potential law and accepts with `exp(−ΔTr V)`, where the
//! change of `Tr V(E)` is computed exactly from local trace powers.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cmv::{
    build_cmv, build_periodic_cmv, potential_from_traces, rho, BoundaryMode, CmvMatrix, TraceWorkspace,
    VerblunskyVector, C64,
};
use crate::error::{domain, GgeError, Result};
use crate::potential::{Domain, Potential};
use crate::rng::{GgeRng, StreamId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaParams {
    pub nu: f64,
}

impl ThetaParams {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 1.0) || !nu.is_finite() {
            return domain(format!("Theta law needs nu > 1, got {nu}"));
        }
        Ok(ThetaParams { nu })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ThetaMethod {
    /// `|z|²` by inversion of its Beta(1, (ν−1)/2) law, uniform phase.
    #[default]
    Polar,
    /// `(X₁+iX₂)/√(X₁²+X₂²+Y²)` with `Y ~ χ_{ν−1}`.
    Representation,
}

/// One draw of the rotation-invariant law with density `∝ (1−|z|²)^{(ν−3)/2}`.
pub fn sample_theta<R: Rng + ?Sized>(params: ThetaParams, method: ThetaMethod, rng: &mut R) -> Result<C64> {
    let nu = ThetaParams::new(params.nu)?.nu;
    match method {
        ThetaMethod::Polar => {
            let u: f64 = 1.0 - rng.gen::<f64>();
            let r2 = 1.0 - u.powf(2.0 / (nu - 1.0));
            let phase = rng.gen_range(-PI..PI);
            Ok(inside_disk(C64::from_polar(r2.sqrt(), phase)))
        }
        ThetaMethod::Representation => {
            let x1: f64 = rng.sample(StandardNormal);
            let x2: f64 = rng.sample(StandardNormal);
            let y = sample_chi(nu - 1.0, rng)?;
            let z = C64::new(x1, x2) / (x1 * x1 + x2 * x2 + y * y).sqrt();
            Ok(inside_disk(z))
        }
    }
}

/// Chi variable with fractional degrees of freedom, `√G`, `G ~ Gamma(dof/2, 2)`.
pub fn sample_chi<R: Rng + ?Sized>(dof: f64, rng: &mut R) -> Result<f64> {
    Ok(sample_chi_squared(dof, rng)?.sqrt())
}

pub fn sample_chi_squared<R: Rng + ?Sized>(dof: f64, rng: &mut R) -> Result<f64> {
    if !(dof > 0.0) || !dof.is_finite() {
        return domain(format!("chi needs dof > 0, got {dof}"));
    }
    let g = Gamma::new(dof / 2.0, 2.0).map_err(|e| GgeError::Domain(e.to_string()))?;
    Ok(g.sample(rng))
}

/// Natural log of a Gamma(shape, 1) draw, accurate for tiny shapes.
fn sample_log_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        Gamma::new(shape, 1.0).expect("valid shape").sample(rng).ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0).expect("valid shape").sample(rng).ln();
        let u: f64 = 1.0 - rng.gen::<f64>();
        g + u.ln() / shape
    }
}

/// `α = 2u − 1` with `u ~ Beta(s, s)`, computed as a tanh of a log-ratio.
pub fn sample_symmetric_beta<R: Rng + ?Sized>(s: f64, rng: &mut R) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return domain(format!("Beta parameter must be positive, got {s}"));
    }
    let a = sample_log_gamma(s, rng);
    let b = sample_log_gamma(s, rng);
    let x = ((a - b) / 2.0).tanh();
    Ok(x.signum() * inside(x.abs()))
}

/// Largest double below one; radii that round up to the circle land here.
const MAX_INTERIOR: f64 = 1.0 - f64::EPSILON / 2.0;

fn inside(r: f64) -> f64 {
    r.min(MAX_INTERIOR)
}

/// Pulls `z` strictly inside the disk; the modulus of a rescaled point can round back up to one.
fn inside_disk(mut z: C64) -> C64 {
    while z.norm() >= 1.0 {
        z *= MAX_INTERIOR;
    }
    z
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledPair {
    pub alpha_nu: C64,
    pub alpha_nu_h: C64,
    pub z_h: f64,
    pub h: f64,
}

impl CoupledPair {
    /// `|α_ν − α_{ν+h}|` and `|ρ_ν − ρ_{ν+h}|`.
    pub fn gaps(&self) -> (f64, f64) {
        ((self.alpha_nu - self.alpha_nu_h).norm(), (rho(self.alpha_nu) - rho(self.alpha_nu_h)).abs())
    }
}

/// Shared-noise coupling of the `ν` and `ν + h` laws with its bound variable `Z_h`.
pub fn sample_coupled_pair<R: Rng + ?Sized>(nu: f64, h: f64, rng: &mut R) -> Result<CoupledPair> {
    ThetaParams::new(nu)?;
    if !(h > 0.0 && h < 1.0) {
        return domain(format!("coupling needs 0 < h < 1, got {h}"));
    }
    let x1: f64 = rng.sample(StandardNormal);
    let x2: f64 = rng.sample(StandardNormal);
    let y2 = sample_chi_squared(nu - 1.0, rng)?;
    let yh2 = sample_chi_squared(h, rng)?;
    let r2 = x1 * x1 + x2 * x2;
    let x = C64::new(x1, x2);
    Ok(CoupledPair {
        alpha_nu: x / (r2 + y2).sqrt(),
        alpha_nu_h: x / (r2 + y2 + yh2).sqrt(),
        z_h: (yh2 / (r2 + yh2)).sqrt(),
        h,
    })
}

/// `Z_h` for an increasing list of `h`, built on the same Gaussians with
/// `Y_{h'}² = Y_h² + χ²_{h'−h}`, so the values are nondecreasing.
pub fn sample_monotone_z<R: Rng + ?Sized>(hs: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let x1: f64 = rng.sample(StandardNormal);
    let x2: f64 = rng.sample(StandardNormal);
    let r2 = x1 * x1 + x2 * x2;
    let mut y2 = 0.0;
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(hs.len());
    for &h in hs {
        if !(h > prev) {
            return domain("h values must be positive and strictly increasing");
        }
        y2 += sample_chi_squared(h - prev, rng)?;
        prev = h;
        out.push((y2 / (r2 + y2)).sqrt());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    #[serde(alias = "al")]
    AL,
    Schur,
    Circular,
    Jacobi,
}

impl std::str::FromStr for EnsembleKind {
    type Err = GgeError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "al" | "ablowitz-ladik" => Ok(EnsembleKind::AL),
            "schur" => Ok(EnsembleKind::Schur),
            "circular" => Ok(EnsembleKind::Circular),
            "jacobi" => Ok(EnsembleKind::Jacobi),
            _ => Err(GgeError::Config(format!("unknown ensemble `{s}`"))),
        }
    }
}

/// Ensemble parameters. `n` is the number of coefficients, except for
/// `Jacobi` where it is the number of particles and the matrix has size `2n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
    pub beta: f64,
    pub potential: Potential,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, n: usize, beta: f64, potential: Potential) -> Result<Self> {
        let spec = EnsembleSpec { kind, n, beta, potential };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return domain(format!("beta must be positive, got {}", self.beta));
        }
        match self.kind {
            EnsembleKind::AL | EnsembleKind::Schur => {
                if self.n < 2 || self.n % 2 != 0 {
                    return Err(GgeError::Shape(format!("{:?} needs an even size N >= 2, got {}", self.kind, self.n)));
                }
            }
            EnsembleKind::Circular => {
                if self.n < 2 {
                    return Err(GgeError::Shape(format!("circular ensemble needs N >= 2, got {}", self.n)));
                }
            }
            EnsembleKind::Jacobi => {
                if self.n < 1 {
                    return Err(GgeError::Shape("Jacobi ensemble needs n >= 1".into()));
                }
            }
        }
        let expected = match self.kind {
            EnsembleKind::AL | EnsembleKind::Circular => Domain::Torus,
            EnsembleKind::Schur | EnsembleKind::Jacobi => Domain::Interval,
        };
        if !self.potential.is_zero() && self.potential.domain != expected {
            return Err(GgeError::Config(format!(
                "{:?} needs a {:?} potential, got {:?}",
                self.kind, expected, self.potential.domain
            )));
        }
        self.potential.check_degree(crate::potential::MAX_DEGREE)
    }

    /// Size of the CMV matrix.
    pub fn matrix_size(&self) -> usize {
        match self.kind {
            EnsembleKind::Jacobi => 2 * self.n,
            _ => self.n,
        }
    }

    fn site_laws(&self) -> Vec<SiteLaw> {
        let n = self.matrix_size();
        match self.kind {
            EnsembleKind::AL => vec![SiteLaw::Theta(2.0 * self.beta + 1.0); n],
            EnsembleKind::Schur => vec![SiteLaw::SymBeta(self.beta); n],
            EnsembleKind::Circular => circular_laws(n, 2.0 * self.beta / n as f64),
            EnsembleKind::Jacobi => {
                let mut laws: Vec<SiteLaw> =
                    (1..n).map(|j| SiteLaw::SymBeta(self.beta * (1.0 - j as f64 / n as f64))).collect();
                laws.push(SiteLaw::MinusOne);
                laws
            }
        }
    }

    fn boundary(&self) -> BoundaryMode {
        match self.kind {
            EnsembleKind::AL | EnsembleKind::Schur => BoundaryMode::AllInterior,
            EnsembleKind::Circular => BoundaryMode::LastOnCircle,
            EnsembleKind::Jacobi => BoundaryMode::LastMinusOne,
        }
    }

    /// Multiplier of `Σ_{all angles} V` in the Gibbs weight.
    fn weight_factor(&self) -> f64 {
        match self.kind {
            EnsembleKind::Jacobi => 0.5,
            _ => 1.0,
        }
    }

    pub fn build_matrix(&self, v: &VerblunskyVector) -> Result<CmvMatrix> {
        match self.kind {
            EnsembleKind::AL | EnsembleKind::Schur => build_periodic_cmv(v),
            EnsembleKind::Circular | EnsembleKind::Jacobi => build_cmv(v),
        }
    }

    /// The exponent `Tr V` entering `exp(−Tr V)` for a given matrix.
    pub fn gibbs_energy(&self, m: &CmvMatrix) -> Result<f64> {
        Ok(self.weight_factor() * m.trace_potential(&self.potential)?)
    }
}

fn circular_laws(n: usize, beta_tilde: f64) -> Vec<SiteLaw> {
    let mut laws: Vec<SiteLaw> = (1..n).map(|j| SiteLaw::Theta(beta_tilde * (n - j) as f64 + 1.0)).collect();
    laws.push(SiteLaw::Circle);
    laws
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SiteLaw {
    Theta(f64),
    SymBeta(f64),
    Circle,
    MinusOne,
}

impl SiteLaw {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<C64> {
        match *self {
            SiteLaw::Theta(nu) => sample_theta(ThetaParams::new(nu)?, ThetaMethod::Polar, rng),
            SiteLaw::SymBeta(s) => Ok(C64::new(sample_symmetric_beta(s, rng)?, 0.0)),
            SiteLaw::Circle => Ok(C64::from_polar(1.0, rng.gen_range(-PI..PI))),
            SiteLaw::MinusOne => Ok(C64::new(-1.0, 0.0)),
        }
    }

    fn is_fixed(&self) -> bool {
        matches!(self, SiteLaw::MinusOne)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McmcParams {
    /// Number of emitted states; consecutive states are `thinning` site
    /// updates apart, which is one sweep at the default thinning.
    pub sweeps: usize,
    /// Sweeps discarded before the first emitted state.
    pub burn_in: usize,
    /// Site updates between emitted states.
    pub thinning: usize,
    pub seed: u64,
}

impl McmcParams {
    /// Defaults scaled with the matrix size: `10·N` burn-in sweeps, `N` updates between states.
    pub fn with_defaults(matrix_size: usize, sweeps: usize, seed: u64) -> Self {
        McmcParams { sweeps, burn_in: 10 * matrix_size, thinning: matrix_size.max(1), seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.thinning == 0 {
            return domain("sweeps and thinning must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub proposals: u64,
    pub accepted: u64,
    pub exact: bool,
    pub stream: StreamId,
}

impl ChainStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// Metropolis-within-Gibbs chain over the coefficients.
pub struct GibbsChain {
    spec: EnsembleSpec,
    laws: Vec<SiteLaw>,
    matrix: CmvMatrix,
    ws: TraceWorkspace,
    rng: GgeRng,
    next_site: usize,
    proposals: u64,
    accepted: u64,
}

impl GibbsChain {
    /// Starts from an exact draw of the zero-potential law.
    pub fn new(spec: &EnsembleSpec, mut rng: GgeRng) -> Result<Self> {
        spec.validate()?;
        let laws = spec.site_laws();
        let v = draw_product(&laws, spec.boundary(), &mut rng)?;
        let matrix = spec.build_matrix(&v)?;
        let ws = TraceWorkspace::new(matrix.dim());
        Ok(GibbsChain { spec: spec.clone(), laws, matrix, ws, rng, next_site: 0, proposals: 0, accepted: 0 })
    }

    pub fn matrix(&self) -> &CmvMatrix {
        &self.matrix
    }

    pub fn alphas(&self) -> &VerblunskyVector {
        self.matrix.alphas()
    }

    /// One proposal at the next site in cyclic order.
    pub fn step(&mut self) -> Result<()> {
        let n = self.laws.len();
        let mut site = self.next_site;
        while self.laws[site].is_fixed() {
            site = (site + 1) % n;
        }
        self.next_site = (site + 1) % n;
        self.update_site(site)
    }

    fn update_site(&mut self, site: usize) -> Result<()> {
        let proposal = self.laws[site].draw(&mut self.rng)?;
        self.proposals += 1;
        let p = &self.spec.potential;
        if p.is_constant() {
            self.matrix.set_alpha(site, proposal)?;
            self.accepted += 1;
            return Ok(());
        }
        let k = p.degree();
        let window = self.matrix.diagonal_window(site, k);
        let before = potential_from_traces(p, &self.matrix.partial_trace_powers(&window, k, &mut self.ws));
        let old = self.matrix.alphas().entries()[site];
        self.matrix.set_alpha(site, proposal)?;
        let after = potential_from_traces(p, &self.matrix.partial_trace_powers(&window, k, &mut self.ws));
        let delta = self.spec.weight_factor() * (after - before);
        if delta <= 0.0 || self.rng.gen::<f64>() < (-delta).exp() {
            self.accepted += 1;
        } else {
            self.matrix.set_alpha(site, old)?;
        }
        Ok(())
    }

    /// One sweep over all free sites.
    pub fn sweep(&mut self) -> Result<()> {
        let free = self.laws.iter().filter(|l| !l.is_fixed()).count();
        for _ in 0..free {
            self.step()?;
        }
        Ok(())
    }

    pub fn counts(&self) -> (u64, u64) {
        (self.proposals, self.accepted)
    }
}

fn draw_product<R: Rng + ?Sized>(laws: &[SiteLaw], boundary: BoundaryMode, rng: &mut R) -> Result<VerblunskyVector> {
    let entries = laws.iter().map(|l| l.draw(rng)).collect::<Result<Vec<_>>>()?;
    VerblunskyVector::new(entries, boundary)
}

/// Runs the sampler and hands every emitted state to `visit(index, matrix)`.
///
/// Zero (or constant) potentials draw exact independent states; otherwise
/// the chain is burnt in and thinned as configured.
pub fn run_ensemble<F>(spec: &EnsembleSpec, mcmc: &McmcParams, stream: u64, mut visit: F) -> Result<ChainStats>
where
    F: FnMut(usize, &CmvMatrix) -> Result<()>,
{
    spec.validate()?;
    mcmc.validate()?;
    let id = StreamId::new(mcmc.seed, stream);
    let mut rng = id.rng();
    if spec.potential.is_constant() {
        let laws = spec.site_laws();
        for index in 0..mcmc.sweeps {
            let v = draw_product(&laws, spec.boundary(), &mut rng)?;
            visit(index, &spec.build_matrix(&v)?)?;
        }
        let total = mcmc.sweeps as u64 * laws.len() as u64;
        return Ok(ChainStats { proposals: total, accepted: total, exact: true, stream: id });
    }
    let mut chain = GibbsChain::new(spec, rng)?;
    for _ in 0..mcmc.burn_in {
        chain.sweep()?;
    }
    for index in 0..mcmc.sweeps {
        for _ in 0..mcmc.thinning {
            chain.step()?;
        }
        visit(index, chain.matrix())?;
    }
    let (proposals, accepted) = chain.counts();
    Ok(ChainStats { proposals, accepted, exact: false, stream: id })
}

/// Collected states together with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub states: Vec<VerblunskyVector>,
    pub stats: ChainStats,
}

impl SampleSet {
    pub fn acceptance_rate(&self) -> f64 {
        self.stats.acceptance_rate()
    }
}

pub fn sample_ensemble(spec: &EnsembleSpec, mcmc: &McmcParams, stream: u64) -> Result<SampleSet> {
    let mut states = Vec::with_capacity(mcmc.sweeps);
    let stats = run_ensemble(spec, mcmc, stream, |_, m| {
        states.push(m.alphas().clone());
        Ok(())
    })?;
    Ok(SampleSet { states, stats })
}

fn expect_kind(spec: &EnsembleSpec, kind: EnsembleKind) -> Result<()> {
    if spec.kind != kind {
        return Err(GgeError::Config(format!("expected a {kind:?} ensemble, got {:?}", spec.kind)));
    }
    Ok(())
}

/// Ablowitz–Ladik ensemble: weight `Π(1−|α_j|²)^{β−1} exp(−Tr V(E))`.
pub fn sample_al_gge(spec: &EnsembleSpec, mcmc: &McmcParams, stream: u64) -> Result<SampleSet> {
    expect_kind(spec, EnsembleKind::AL)?;
    sample_ensemble(spec, mcmc, stream)
}

/// Schur ensemble: real coefficients with weight `Π(1−α_j²)^{β−1} exp(−Tr V(E))`.
pub fn sample_schur_gge(spec: &EnsembleSpec, mcmc: &McmcParams, stream: u64) -> Result<SampleSet> {
    expect_kind(spec, EnsembleKind::Schur)?;
    sample_ensemble(spec, mcmc, stream)
}

/// Circular ensemble through its open CMV model, parametrized by `β̃` directly.
pub fn sample_circular_beta(
    n: usize,
    beta_tilde: f64,
    potential: &Potential,
    mcmc: &McmcParams,
    stream: u64,
) -> Result<SampleSet> {
    let spec = EnsembleSpec::new(EnsembleKind::Circular, n, beta_tilde * n as f64 / 2.0, potential.clone())?;
    sample_ensemble(&spec, mcmc, stream)
}

/// High-temperature Jacobi ensemble of `n` particles (matrix size `2n`, last coefficient −1).
pub fn sample_jacobi_beta(
    n: usize,
    beta: f64,
    potential: &Potential,
    mcmc: &McmcParams,
    stream: u64,
) -> Result<SampleSet> {
    let spec = EnsembleSpec::new(EnsembleKind::Jacobi, n, beta, potential.clone())?;
    sample_ensemble(&spec, mcmc, stream)
}
