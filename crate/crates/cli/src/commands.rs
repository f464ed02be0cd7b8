use std::io::Write;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use gge_core::dynamics::{
    conservation_report, gge_invariance_test, integrate, lax_residual, FlowKind, FlowState, IntegratorParams, Scheme,
};
use gge_core::equilibrium::{
    beta_derivative_interval, beta_derivative_measure, minimize_interval, minimize_torus, SolverParams,
};
use gge_core::lab::{self, CheckReport, RelationParams};
use gge_core::{
    density_estimate, fourier_coeffs, sample_ensemble, stream_rng, Domain, EmpiricalMeasure, EnsembleKind,
    EnsembleSpec, Estimator, IntervalEmpiricalMeasure, McmcParams, Potential, VerblunskyVector, C64,
};

use crate::output::{Provenance, Sink};
use crate::{
    Cli, Command, DomainArg, DosArgs, DynamicsArgs, EnsembleArgs, Format, FreeEnergyArgs, McmcArgs, MinimizeArgs,
    RelationArgs, SampleArgs, SolverArgs, VerifyArgs,
};

pub enum Outcome {
    Pass,
    Fail(String),
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Sample(a) => sample(cli, a),
        Command::Dos(a) => dos(cli, a),
        Command::Minimize(a) => minimize(cli, a),
        Command::Relation(a) => relation(cli, a),
        Command::Dynamics(a) => dynamics(cli, a),
        Command::Verify(a) => verify(cli, a),
        Command::FreeEnergy(a) => free_energy(cli, a),
    }
}

fn sink(cli: &Cli, command: &str, args: &impl Serialize) -> Result<Sink> {
    let prov = Provenance::new(command, cli.seed, &json!({ "args": args, "format": cli.format }))?;
    Sink::new(&cli.out, prov)
}

fn finish(sink: &Sink) {
    for p in sink.written() {
        eprintln!("wrote {}", p.display());
    }
}

fn parse_potential(text: &str, domain: Domain) -> Result<Potential> {
    let p = Potential::parse(text)?;
    Ok(if p.is_zero() { Potential::zero(domain) } else { p })
}

fn ensemble_domain(kind: EnsembleKind) -> Domain {
    match kind {
        EnsembleKind::AL | EnsembleKind::Circular => Domain::Torus,
        EnsembleKind::Schur | EnsembleKind::Jacobi => Domain::Interval,
    }
}

fn ensemble_spec(a: &EnsembleArgs) -> Result<EnsembleSpec> {
    let kind: EnsembleKind = a.ensemble.parse()?;
    let potential = parse_potential(&a.potential, ensemble_domain(kind))?;
    Ok(EnsembleSpec::new(kind, a.n, a.beta, potential)?)
}

fn mcmc_params(a: &McmcArgs, spec: &EnsembleSpec, seed: u64) -> Result<McmcParams> {
    let mut p = McmcParams::with_defaults(spec.matrix_size(), a.samples, seed);
    if let Some(b) = a.burn_in {
        p.burn_in = b;
    }
    if let Some(t) = a.thinning {
        p.thinning = t;
    }
    p.validate()?;
    Ok(p)
}

fn solver_params(a: &SolverArgs) -> Result<SolverParams> {
    let p = SolverParams {
        damping: a.damping,
        tolerance: a.tolerance,
        max_iterations: a.max_iterations,
        grid_size: a.grid,
    };
    p.validate()?;
    Ok(p)
}

fn is_interval(kind: EnsembleKind) -> bool {
    ensemble_domain(kind) == Domain::Interval
}

/// Eigenangles (circle) or paired-spectrum points `cos θ` (interval) of one state.
fn spectrum(spec: &EnsembleSpec, v: &VerblunskyVector) -> Result<Vec<f64>> {
    let m = spec.build_matrix(v)?;
    Ok(if is_interval(spec.kind) {
        IntervalEmpiricalMeasure::from_matrix(&m)?.points().to_vec()
    } else {
        EmpiricalMeasure::from_matrix(&m)?.angles().to_vec()
    })
}

fn spectra(spec: &EnsembleSpec, states: &[VerblunskyVector]) -> Result<Vec<Vec<f64>>> {
    states.par_iter().map(|v| spectrum(spec, v)).collect()
}

fn write_rows(w: &mut dyn Write, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    writeln!(w, "{header}")?;
    for (i, row) in rows.iter().enumerate() {
        write!(w, "{i}")?;
        for x in row {
            write!(w, ",{x:.17e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn sample(cli: &Cli, a: &SampleArgs) -> Result<Outcome> {
    let spec = ensemble_spec(&a.ensemble)?;
    let mcmc = mcmc_params(&a.mcmc, &spec, cli.seed)?;
    let set = sample_ensemble(&spec, &mcmc, 0)?;
    let mut sink = sink(cli, "sample", a)?;
    let n = spec.n;
    match cli.format {
        Format::Csv => sink.csv("samples.csv", |w| {
            let header: String = (1..=n).map(|j| format!(",re_alpha_{j},im_alpha_{j}")).collect();
            let rows: Vec<Vec<f64>> =
                set.states.iter().map(|v| v.entries().iter().flat_map(|z| [z.re, z.im]).collect()).collect();
            write_rows(w, &format!("index{header}"), &rows)
        })?,
        Format::Json => {
            let states: Vec<Vec<[f64; 2]>> =
                set.states.iter().map(|v| v.entries().iter().map(|z| [z.re, z.im]).collect()).collect();
            sink.json("samples.json", json!({ "states": states }))?
        }
    }
    if a.angles {
        let points = spectra(&spec, &set.states)?;
        let label = if is_interval(spec.kind) { "x" } else { "theta" };
        match cli.format {
            Format::Csv => sink.csv("angles.csv", |w| {
                let width = points.first().map_or(0, Vec::len);
                let header: String = (1..=width).map(|j| format!(",{label}_{j}")).collect();
                write_rows(w, &format!("index{header}"), &points)
            })?,
            Format::Json => sink.json("angles.json", json!({ label: points }))?,
        }
    }
    let mean_sq = set.states.iter().flat_map(|v| v.entries().iter().map(|z| z.norm_sqr())).sum::<f64>()
        / (set.states.len() * n) as f64;
    let summary = json!({
        "samples": set.states.len(),
        "acceptance_rate": set.acceptance_rate(),
        "exact": set.stats.exact,
        "mean_abs_alpha_sq": mean_sq,
        "mcmc": mcmc,
    });
    sink.json("sample_summary.json", summary)?;
    println!(
        "{} samples of {:?} (n = {}, beta = {}); acceptance rate {:.4}; mean |alpha|^2 {:.6}",
        set.states.len(),
        spec.kind,
        n,
        spec.beta,
        set.acceptance_rate(),
        mean_sq
    );
    finish(&sink);
    Ok(Outcome::Pass)
}

/// Histogram on [-1, 1] with mass one; returns bin centers and heights.
fn interval_histogram(points: &[f64], bins: usize) -> (Vec<f64>, Vec<f64>) {
    let width = 2.0 / bins as f64;
    let mut counts = vec![0.0; bins];
    for x in points {
        let j = (((x + 1.0) / width).floor() as usize).min(bins - 1);
        counts[j] += 1.0;
    }
    let scale = 1.0 / (points.len() as f64 * width);
    let centers = (0..bins).map(|j| -1.0 + (j as f64 + 0.5) * width).collect();
    (centers, counts.iter().map(|c| c * scale).collect())
}

fn dos(cli: &Cli, a: &DosArgs) -> Result<Outcome> {
    let spec = ensemble_spec(&a.ensemble)?;
    let mcmc = mcmc_params(&a.mcmc, &spec, cli.seed)?;
    let set = sample_ensemble(&spec, &mcmc, 0)?;
    let pooled: Vec<f64> = spectra(&spec, &set.states)?.concat();
    let points = pooled.len();
    let mut sink = sink(cli, "dos", a)?;
    let (mass, estimator) = if is_interval(spec.kind) {
        if a.kde_bandwidth.is_some() {
            bail!("kernel estimates are only available on the circle; use --bins for interval ensembles");
        }
        if a.bins == 0 {
            bail!("--bins must be positive");
        }
        let (x, rho) = interval_histogram(&pooled, a.bins);
        let mass = rho.iter().sum::<f64>() * 2.0 / a.bins as f64;
        match cli.format {
            Format::Csv => sink.csv("dos.csv", |w| {
                writeln!(w, "x,rho")?;
                for (x, r) in x.iter().zip(&rho) {
                    writeln!(w, "{x:.17e},{r:.17e}")?;
                }
                Ok(())
            })?,
            Format::Json => sink.json("dos.json", json!({ "x": x, "rho": rho }))?,
        }
        let moments: Vec<f64> = (0..=a.k_max)
            .map(|k| pooled.iter().map(|x| lab::chebyshev_t(k, *x)).sum::<f64>() / pooled.len() as f64)
            .collect();
        match cli.format {
            Format::Csv => sink.csv("moments.csv", |w| {
                writeln!(w, "k,chebyshev")?;
                for (k, m) in moments.iter().enumerate() {
                    writeln!(w, "{k},{m:.17e}")?;
                }
                Ok(())
            })?,
            Format::Json => sink.json("moments.json", json!({ "chebyshev": moments }))?,
        }
        (mass, json!({ "method": "histogram", "bins": a.bins }))
    } else {
        let mu = EmpiricalMeasure::from_angles(pooled)?;
        let estimator = match a.kde_bandwidth {
            Some(bandwidth) => Estimator::Kde { bandwidth, grid: a.kde_grid },
            None => Estimator::Histogram { bins: a.bins },
        };
        let rho = density_estimate(&mu, estimator)?;
        match cli.format {
            Format::Csv => sink.csv("dos.csv", |w| Ok(rho.write_csv(w)?))?,
            Format::Json => sink.json("dos.json", json!({ "theta": rho.nodes(), "rho": rho.values() }))?,
        }
        let coeffs = fourier_coeffs(&mu, a.k_max);
        let rows: Vec<(usize, C64)> = std::iter::once((0, C64::new(1.0, 0.0)))
            .chain((1..=a.k_max).map(|k| (k, coeffs.get(k))))
            .collect();
        match cli.format {
            Format::Csv => sink.csv("moments.csv", |w| {
                writeln!(w, "k,re,im")?;
                for (k, c) in &rows {
                    writeln!(w, "{k},{:.17e},{:.17e}", c.re, c.im)?;
                }
                Ok(())
            })?,
            Format::Json => {
                let c: Vec<[f64; 2]> = rows.iter().map(|(_, c)| [c.re, c.im]).collect();
                sink.json("moments.json", json!({ "fourier": c }))?
            }
        }
        (rho.mass(), serde_json::to_value(estimator)?)
    };
    sink.json(
        "dos_summary.json",
        json!({
            "ensemble": spec.kind, "n": spec.n, "beta": spec.beta, "potential": spec.potential,
            "samples": set.states.len(), "points": points,
            "acceptance_rate": set.acceptance_rate(), "estimator": estimator, "mass": mass,
        }),
    )?;
    println!("density of states from {} samples; mass {:.12}; acceptance rate {:.4}", set.states.len(), mass, set.acceptance_rate());
    finish(&sink);
    Ok(Outcome::Pass)
}

fn minimize(cli: &Cli, a: &MinimizeArgs) -> Result<Outcome> {
    let parsed = Potential::parse(&a.potential)?;
    let domain = match a.domain {
        Some(DomainArg::Torus) => Domain::Torus,
        Some(DomainArg::Interval) => Domain::Interval,
        None => parsed.domain,
    };
    let v = parse_potential(&a.potential, domain)?;
    let params = solver_params(&a.solver)?;
    let mut sink = sink(cli, "minimize", a)?;
    let mut report = match domain {
        Domain::Torus => {
            let sol = minimize_torus(&v, a.beta, &params)?;
            match cli.format {
                Format::Csv => sink.csv("density.csv", |w| Ok(sol.write_csv(w)?))?,
                Format::Json => sink.json("density.json", json!({ "theta": sol.density.nodes(), "rho": sol.density.values() }))?,
            }
            println!("torus minimizer: {} iterations, residual {:.3e}, F = {:.12}", sol.iterations, sol.residual, sol.normalized_free_energy());
            json!({
                "domain": "torus", "beta": a.beta, "potential": v, "grid": params.grid_size,
                "residual": sol.residual, "iterations": sol.iterations, "free_energy": sol.free_energy,
                "normalized_free_energy": sol.normalized_free_energy(), "mass": sol.density.mass(),
            })
        }
        Domain::Interval => {
            let sol = minimize_interval(&v, a.beta, &params)?;
            match cli.format {
                Format::Csv => sink.csv("density.csv", |w| Ok(sol.density.write_csv(w)?))?,
                Format::Json => sink.json("density.json", serde_json::to_value(&sol.density)?)?,
            }
            println!("interval minimizer: {} iterations, residual {:.3e}, f = {:.12}", sol.iterations, sol.residual, sol.free_energy.total);
            json!({
                "domain": "interval", "beta": a.beta, "potential": v, "grid": params.grid_size,
                "residual": sol.residual, "iterations": sol.iterations, "free_energy": sol.free_energy,
                "mass": sol.density.mass(),
            })
        }
    };
    if let Some(delta) = a.delta {
        let (richardson, min_value, warnings) = match domain {
            Domain::Torus => {
                let d = beta_derivative_measure(&v, a.beta, delta, &params)?;
                match cli.format {
                    Format::Csv => sink.csv("derivative.csv", |w| Ok(d.write_csv(w)?))?,
                    Format::Json => sink.json("derivative.json", serde_json::to_value(&d)?)?,
                }
                (d.richardson, d.min_value, d.warnings)
            }
            Domain::Interval => {
                let d = beta_derivative_interval(&v, a.beta, delta, &params)?;
                match cli.format {
                    Format::Csv => sink.csv("derivative.csv", |w| Ok(d.write_csv(w)?))?,
                    Format::Json => sink.json("derivative.json", serde_json::to_value(&d)?)?,
                }
                (d.richardson, d.min_value, d.warnings)
            }
        };
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        report["derivative"] =
            json!({ "delta": delta, "richardson": richardson, "min_value": min_value, "warnings": warnings });
    }
    sink.json("report.json", report)?;
    finish(&sink);
    Ok(Outcome::Pass)
}

fn relation(cli: &Cli, a: &RelationArgs) -> Result<Outcome> {
    let spec = ensemble_spec(&a.ensemble)?;
    if !matches!(spec.kind, EnsembleKind::AL | EnsembleKind::Schur) {
        bail!("the relation check needs --ensemble al or schur");
    }
    let mcmc = mcmc_params(&a.mcmc, &spec, cli.seed)?;
    let solver = solver_params(&a.solver)?;
    let rel = RelationParams { delta: a.delta, k_max: a.k_max, moment_order: a.moment_order, threshold: a.threshold };
    let report = lab::check_dos_relation(&spec, &mcmc, 0, &solver, &rel)?;
    let mut sink = sink(cli, "relation", a)?;
    sink.json("relation.json", serde_json::to_value(&report)?)?;
    println!(
        "D = {:.3e} (threshold {}), max |z| = {:.2}, acceptance {:.4}: {}",
        report.d_value,
        report.threshold,
        report.max_abs_z(),
        report.acceptance_rate,
        if report.pass { "PASS" } else { "FAIL" }
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    finish(&sink);
    Ok(if report.pass {
        Outcome::Pass
    } else {
        Outcome::Fail(format!("D = {:.3e} exceeds {} or a moment is off", report.d_value, report.threshold))
    })
}

fn initial_state(flow: FlowKind, n: usize, radius: f64, seed: u64) -> Result<FlowState> {
    if !(radius >= 0.0 && radius < 1.0) {
        bail!("--radius must lie in [0, 1), got {radius}");
    }
    let mut rng = stream_rng(seed, 0);
    let alphas = (0..n)
        .map(|_| match flow {
            FlowKind::AL => C64::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)),
            FlowKind::Schur => C64::new(radius * rng.gen_range(-1.0..1.0), 0.0),
        })
        .collect();
    Ok(FlowState { alphas, time: 0.0 })
}

fn dynamics(cli: &Cli, a: &DynamicsArgs) -> Result<Outcome> {
    let flow: FlowKind = a.flow.parse()?;
    if a.n < 2 || a.n % 2 != 0 {
        bail!("--n must be even and at least 2, got {}", a.n);
    }
    let state0 = initial_state(flow, a.n, a.radius, cli.seed)?;
    let params = IntegratorParams { dt: a.dt, t_final: a.t_final, scheme: Scheme::Rk4, record_every: a.record_every };
    let traj = integrate(&state0, flow, &params).context("integration failed")?;
    let conservation = conservation_report(&traj, a.ell_max)?;
    let lax = match flow {
        FlowKind::AL => {
            let r = [lax_residual(&state0, a.lax_probe)?, lax_residual(&state0, a.lax_probe / 2.0)?];
            Some(json!({ "probes": r, "ratio": r[0].residual / r[1].residual }))
        }
        FlowKind::Schur => None,
    };
    let invariance = match a.invariance_samples {
        None => None,
        Some(samples) => {
            let Some(beta) = a.beta else { bail!("--invariance-samples needs --beta") };
            let kind = match flow {
                FlowKind::AL => EnsembleKind::AL,
                FlowKind::Schur => EnsembleKind::Schur,
            };
            let spec = EnsembleSpec::new(kind, a.n, beta, parse_potential(&a.potential, ensemble_domain(kind))?)?;
            let mcmc = McmcParams::with_defaults(spec.matrix_size(), samples, cli.seed);
            let p = IntegratorParams::new(a.dt, a.invariance_time);
            Some(gge_invariance_test(&spec, &mcmc, 1, &p)?)
        }
    };
    let mut sink = sink(cli, "dynamics", a)?;
    match cli.format {
        Format::Csv => sink.csv("trajectory.csv", |w| Ok(traj.write_csv(w)?))?,
        Format::Json => sink.json("trajectory.json", serde_json::to_value(&traj)?)?,
    }
    println!(
        "{:?} flow, N = {}, T = {}: {} frames, max drift {:.3e}",
        flow,
        a.n,
        a.t_final,
        conservation.frames,
        conservation.max_drift()
    );
    if let Some(l) = &lax {
        println!("Lax residuals {} / {}", l["probes"][0]["residual"], l["probes"][1]["residual"]);
    }
    if let Some(inv) = &invariance {
        println!("invariance test: min p-value {:.4} over {} samples", inv.min_p_value(), inv.samples);
    }
    sink.json(
        "conservation.json",
        json!({
            "flow": flow, "n": a.n, "integrator": params, "conservation": conservation,
            "max_drift": conservation.max_drift(), "lax": lax, "invariance": invariance,
        }),
    )?;
    finish(&sink);
    Ok(Outcome::Pass)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    Coupling,
    ExpMoment,
    ProductBounds,
    DistanceBounds,
    FreeEnergy,
    DosAl,
    DosSchur,
}

impl CheckName {
    fn all() -> Vec<CheckName> {
        CheckName::value_variants().to_vec()
    }
}

fn run_check(name: CheckName, seed: u64) -> Result<Vec<CheckReport>> {
    let stream = name as u64 * 100;
    Ok(match name {
        CheckName::Coupling => vec![
            lab::check_coupling_lemma(3.0, 0.5, 20_000, seed, stream)?,
            lab::check_coupling_lemma(1.5, 0.999, 5_000, seed, stream + 1)?,
        ],
        CheckName::ExpMoment => vec![lab::check_exp_moment(&[0.01, 0.1, 0.5, 0.9], 20_000, seed, stream)?.0],
        CheckName::ProductBounds => vec![lab::check_product_bounds(8, 100, seed, stream)?],
        CheckName::DistanceBounds => vec![lab::check_distance_bounds(8, 30, seed, stream)?],
        CheckName::FreeEnergy => {
            let mcmc = McmcParams::with_defaults(32, 1000, seed);
            let solver = SolverParams { grid_size: 512, ..SolverParams::default() };
            let v = Potential::torus(vec![0.0, 0.5], vec![]);
            let s = lab::uniform_s_grid(11);
            vec![lab::check_free_energy_relation(&v, 1.0, 0.05, 32, &s, &mcmc, &solver, stream)?.0]
        }
        CheckName::DosAl | CheckName::DosSchur => {
            // k_max stays at N/2: higher traces of a periodic CMV matrix wrap around the ring
            let (kind, domain, grid, samples) = match name {
                CheckName::DosAl => (EnsembleKind::AL, Domain::Torus, 64, 500),
                _ => (EnsembleKind::Schur, Domain::Interval, 256, 1000),
            };
            let spec = EnsembleSpec::new(kind, 32, 1.0, Potential::zero(domain))?;
            let mcmc = McmcParams::with_defaults(32, samples, seed);
            let solver = SolverParams { grid_size: grid, ..SolverParams::default() };
            let rel = RelationParams { k_max: 16, ..RelationParams::default() };
            vec![lab::check_dos_relation(&spec, &mcmc, stream, &solver, &rel)?.to_check()]
        }
    })
}

fn verify(cli: &Cli, a: &VerifyArgs) -> Result<Outcome> {
    let names = if a.checks.is_empty() { CheckName::all() } else { a.checks.clone() };
    let mut reports = Vec::new();
    for name in &names {
        let label = name.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
        let r = run_check(*name, cli.seed).with_context(|| format!("check {label}"))?;
        for report in &r {
            println!("{} {label} ({})", if report.pass { "PASS" } else { "FAIL" }, report.check);
        }
        reports.extend(r.into_iter().map(|r| (label.clone(), r)));
    }
    let failures: Vec<String> = reports.iter().filter(|(_, r)| !r.pass).map(|(l, _)| l.clone()).collect();
    let checks: Vec<Value> = reports
        .iter()
        .map(|(l, r)| {
            let mut v = serde_json::to_value(r).expect("check reports serialize");
            v["name"] = json!(l);
            v
        })
        .collect();
    let mut sink = sink(cli, "verify", a)?;
    sink.json("verify.json", json!({ "checks": checks, "failures": failures, "pass": failures.is_empty() }))?;
    finish(&sink);
    Ok(if failures.is_empty() { Outcome::Pass } else { Outcome::Fail(format!("failing checks: {}", failures.join(", "))) })
}

fn free_energy(cli: &Cli, a: &FreeEnergyArgs) -> Result<Outcome> {
    let v = parse_potential(&a.potential, Domain::Torus)?;
    let spec = EnsembleSpec::new(EnsembleKind::AL, a.n, a.beta, v.clone())?;
    let mcmc = mcmc_params(&a.mcmc, &spec, cli.seed)?;
    let grid = lab::uniform_s_grid(a.s_points);
    let est = lab::estimate_free_energy(&spec, &grid, &mcmc, 0)?;
    let comparison = match a.compare_delta {
        None => None,
        Some(delta) => {
            let solver = solver_params(&a.solver)?;
            let d = lab::circular_free_energy_derivative(&v, a.beta, delta, &solver)?;
            Some(json!({ "delta": delta, "solver_derivative": d, "discrepancy": (est.value - d).abs() }))
        }
    };
    let mut sink = sink(cli, "free-energy", a)?;
    if cli.format == Format::Csv {
        sink.csv("integrand.csv", |w| {
            writeln!(w, "s,mean,std_error")?;
            for (s, e) in est.s_grid.iter().zip(&est.integrand) {
                writeln!(w, "{s:.17e},{:.17e},{:.17e}", e.mean, e.std_error)?;
            }
            Ok(())
        })?;
    }
    println!("F_AL = {:.8} +- {:.2e} (quadrature {:.2e})", est.value, est.std_error, est.quadrature_error);
    if let Some(c) = &comparison {
        println!("solver derivative {}", c["solver_derivative"]);
    }
    for w in &est.warnings {
        eprintln!("warning: {w}");
    }
    sink.json("free_energy.json", json!({ "estimate": est, "comparison": comparison }))?;
    finish(&sink);
    Ok(Outcome::Pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_histogram_has_unit_mass() {
        let pts = [-1.0, -0.5, 0.0, 0.2, 0.99, 1.0];
        let (x, rho) = interval_histogram(&pts, 8);
        assert_eq!(x.len(), 8);
        assert!((rho.iter().sum::<f64>() * 0.25 - 1.0).abs() < 1e-15);
        assert!((x[0] + 0.875).abs() < 1e-15);
    }

    #[test]
    fn zero_potential_takes_the_ensemble_domain() {
        assert_eq!(parse_potential("0", Domain::Interval).unwrap().domain, Domain::Interval);
        assert_eq!(parse_potential("t1=0.5", Domain::Torus).unwrap().domain, Domain::Interval);
    }

    #[test]
    fn initial_states_respect_the_radius() {
        let s = initial_state(FlowKind::AL, 16, 0.5, 3).unwrap();
        assert!(s.max_modulus() <= 0.5);
        let s = initial_state(FlowKind::Schur, 16, 0.5, 3).unwrap();
        assert!(s.alphas.iter().all(|a| a.im == 0.0));
        assert!(initial_state(FlowKind::AL, 4, 1.0, 0).is_err());
    }
}
