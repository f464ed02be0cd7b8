//! Eigen-angles of CMV matrices.
//!
//! The default path never forms a dense Schur decomposition. For an angle
//! `φ` the Hermitian matrix `H(φ) = (e^{−iφ}E + e^{iφ}E†)/2` has eigenvalues
//! `cos(θ_j − φ)`. Under the folding order `0, N−1, 1, N−2, …` the periodic
//! matrix becomes banded, so `H(φ)` is reduced to tridiagonal form with
//! Givens bulge chasing and solved by implicit QL.
//!
//! `H(0)` gives `cos θ_j`; a second solve at a tiny `φ = ε` shifts each
//! eigenvalue by about `ε sin θ_j`, which fixes the sign of `sin θ_j`. The
//! result is checked against `Tr E^k`, `k ≤ 3`; when two cosines are too
//! close to be told apart, or the check fails, the dense Schur solver is used.

use nalgebra::DMatrix;

use crate::cmv::{CmvMatrix, Topology, C64};
use crate::error::{GgeError, Result};

use std::f64::consts::PI;

/// Below this size the dense solver is always used.
const DENSE_BELOW: usize = 16;
const SIGN_PROBE: f64 = 1e-7;
const TRACE_CHECK_ORDERS: usize = 3;
const DENSE_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Banded Hermitian path with dense fallback.
    #[default]
    Auto,
    /// Dense complex Schur decomposition.
    Dense,
}

/// Maps an angle into `[−π, π)`.
pub fn principal_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t >= PI {
        -PI
    } else {
        t
    }
}

/// Sorted principal arguments of the eigenvalues of `m`.
pub fn eigen_angles(m: &CmvMatrix) -> Result<Vec<f64>> {
    eigen_angles_with(m, EigenMethod::Auto)
}

pub fn eigen_angles_with(m: &CmvMatrix, method: EigenMethod) -> Result<Vec<f64>> {
    if method == EigenMethod::Auto && m.dim() >= DENSE_BELOW {
        if let Some(angles) = banded_angles(m) {
            return Ok(angles);
        }
    }
    dense_angles(&m.to_dense())
}

/// Eigen-angles of an arbitrary unitary matrix through complex Schur.
pub fn dense_angles(a: &DMatrix<C64>) -> Result<Vec<f64>> {
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, DENSE_MAX_ITERATIONS)
        .ok_or(GgeError::Eigen { residual: f64::NAN })?;
    let values = schur.eigenvalues().ok_or(GgeError::Eigen { residual: f64::NAN })?;
    let residual = values.iter().fold(0.0f64, |acc, z| acc.max((z.norm() - 1.0).abs()));
    if residual > 1e-9 {
        return Err(GgeError::Eigen { residual });
    }
    let mut angles: Vec<f64> = values.iter().map(|z| principal_angle(z.arg())).collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

fn folding_order(n: usize, topology: Topology) -> Vec<usize> {
    // position of each original index
    let mut pos = vec![0; n];
    match topology {
        Topology::Open => pos.iter_mut().enumerate().for_each(|(i, p)| *p = i),
        Topology::Periodic => {
            for (p, slot) in (0..n).map(|p| if p % 2 == 0 { p / 2 } else { n - 1 - p / 2 }).enumerate() {
                pos[slot] = p;
            }
        }
    }
    pos
}

/// Dense storage of the permuted `H(φ)` and its half-bandwidth.
fn rotated_hermitian_part(m: &CmvMatrix, phi: f64, pos: &[usize]) -> (Vec<C64>, usize) {
    let n = m.dim();
    let mut h = vec![C64::new(0.0, 0.0); n * n];
    let w = C64::from_polar(0.5, -phi);
    let mut band = 0;
    for (i, j, v) in m.entries() {
        let (p, q) = (pos[i], pos[j]);
        band = band.max(p.abs_diff(q));
        h[p * n + q] += w * v;
        h[q * n + p] += (w * v).conj();
    }
    (h, band)
}

/// Sorted eigenvalues of `(E + E†)/2`, i.e. the cosines of the eigen-angles.
pub fn eigen_cosines(m: &CmvMatrix) -> Result<Vec<f64>> {
    let n = m.dim();
    let pos = folding_order(n, m.topology());
    let (h, band) = rotated_hermitian_part(m, 0.0, &pos);
    let mut c = match hermitian_band_eigenvalues(h, n, band) {
        Ok(c) => c,
        Err(_) => {
            let d = m.to_dense();
            let herm = (&d + d.adjoint()) * C64::new(0.5, 0.0);
            herm.symmetric_eigenvalues().iter().copied().collect()
        }
    };
    c.iter_mut().for_each(|x| *x = x.clamp(-1.0, 1.0));
    c.sort_by(f64::total_cmp);
    Ok(c)
}

/// Real matrices have conjugate-paired spectra, so consecutive sorted
/// cosines pair up as `e^{±iθ}`.
fn paired_angles(m: &CmvMatrix) -> Option<Vec<f64>> {
    let n = m.dim();
    if n % 2 != 0 {
        return None;
    }
    let c = eigen_cosines(m).ok()?;
    let mut angles = Vec::with_capacity(n);
    for p in c.chunks(2) {
        let theta = (0.5 * (p[0] + p[1])).acos();
        angles.push(principal_angle(theta));
        angles.push(principal_angle(-theta));
    }
    check_traces(m, &angles)?;
    angles.sort_by(f64::total_cmp);
    Some(angles)
}

fn check_traces(m: &CmvMatrix, angles: &[f64]) -> Option<()> {
    let traces = m.trace_powers(TRACE_CHECK_ORDERS);
    for (k, t) in traces.iter().enumerate().skip(1) {
        let s: C64 = angles.iter().map(|&a| C64::from_polar(1.0, k as f64 * a)).sum();
        if (s - t).norm() > 1e-10 * m.dim() as f64 {
            return None;
        }
    }
    Some(())
}

fn banded_angles(m: &CmvMatrix) -> Option<Vec<f64>> {
    if m.alphas().is_real() {
        if let Some(angles) = paired_angles(m) {
            return Some(angles);
        }
    }
    let n = m.dim();
    let pos = folding_order(n, m.topology());
    let (h0, band) = rotated_hermitian_part(m, 0.0, &pos);
    let (h1, _) = rotated_hermitian_part(m, SIGN_PROBE, &pos);
    let c0 = hermitian_band_eigenvalues(h0, n, band).ok()?;
    let c1 = hermitian_band_eigenvalues(h1, n, band).ok()?;
    let (sp, cp) = SIGN_PROBE.sin_cos();
    let mut angles = Vec::with_capacity(n);
    for (&c, &c_shift) in c0.iter().zip(&c1) {
        let c = c.clamp(-1.0, 1.0);
        let s_est = (c_shift - c * cp) / sp;
        let s_abs = ((1.0 - c) * (1.0 + c)).max(0.0).sqrt();
        let theta = if s_abs > 1e-6 {
            if (s_est.abs() - s_abs).abs() > 1e-6 + 1e-3 * s_abs {
                return None;
            }
            c.acos().copysign(s_est)
        } else {
            s_est.atan2(c)
        };
        angles.push(principal_angle(theta));
    }
    check_traces(m, &angles)?;
    angles.sort_by(f64::total_cmp);
    Some(angles)
}

/// Eigenvalues (ascending) of a Hermitian matrix with half-bandwidth `band`,
/// stored densely row-major. The storage is consumed.
pub fn hermitian_band_eigenvalues(mut a: Vec<C64>, n: usize, band: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let b = band.max(1);
    for j in 0..n.saturating_sub(2) {
        let top = (j + b).min(n - 1);
        for i in (j + 2..=top).rev() {
            let (mut p, mut col) = (i - 1, j);
            loop {
                let q = p + 1;
                if !rotate_out(&mut a, n, b, p, q, col) {
                    break;
                }
                let r = q + b;
                if r >= n {
                    break;
                }
                col = p;
                p = r - 1;
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    let mut e: Vec<f64> = (0..n).map(|i| if i + 1 < n { a[(i + 1) * n + i].norm() } else { 0.0 }).collect();
    tridiagonal_eigenvalues(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Applies the rotation of rows/columns `(p, q)` that zeroes `a[q][col]`.
fn rotate_out(a: &mut [C64], n: usize, b: usize, p: usize, q: usize, col: usize) -> bool {
    let x = a[p * n + col];
    let y = a[q * n + col];
    if y.norm_sqr() == 0.0 {
        return false;
    }
    let r = x.norm().hypot(y.norm());
    let (c, s) = if x.norm_sqr() == 0.0 {
        (0.0, C64::new(1.0, 0.0))
    } else {
        let xa = x.norm();
        (xa / r, (x / xa) * y.conj() / r)
    };
    let lo = p.saturating_sub(b + 1);
    let hi = (q + b + 1).min(n - 1);
    for k in lo..=hi {
        let (u, v) = (a[p * n + k], a[q * n + k]);
        a[p * n + k] = u * c + s * v;
        a[q * n + k] = -s.conj() * u + v * c;
    }
    for k in lo..=hi {
        let (u, v) = (a[k * n + p], a[k * n + q]);
        a[k * n + p] = u * c + s.conj() * v;
        a[k * n + q] = -s * u + v * c;
    }
    a[q * n + col] = C64::new(0.0, 0.0);
    a[col * n + q] = C64::new(0.0, 0.0);
    true
}

/// Implicit QL with Wilkinson-type shifts. `d` holds the diagonal, `e[i]`
/// couples `i` and `i+1`; on return `d` holds the eigenvalues.
pub fn tridiagonal_eigenvalues(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(GgeError::Eigen { residual: e[l].abs() });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
