//! CMV matrices built from Verblunsky coefficients.
//!
//! Indices are 0-based. The coefficient `alphas[a]` enters the 2×2 block
//! `Ξ(α) = [[conj α, ρ], [ρ, −α]]` acting on the index pair `(a, a+1)`.
//! Blocks with even `a` form the left factor `L`, blocks with odd `a`
//! form the right factor `M`, and the matrix is `E = L·M`.
//!
//! * Periodic: `a + 1` is taken mod `N`, so the block of the last
//!   coefficient wraps onto `(N−1, 0)` and produces the corner entries.
//! * Open: the index `0` of `M` carries the 1×1 block `(1)` and a block that
//!   would leave the matrix is the 1×1 block `(conj α_last)`.
//!
//! Every row of `E` has at most four structural entries. For the periodic
//! matrix the row `i` touches columns `p−1..=p+2` (mod `N`) with `p` the
//! even index of `i`'s pair.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, GgeError, Result};
use crate::potential::{Domain, Potential};

pub type C64 = Complex64;

const MODULUS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    AllInterior,
    LastOnCircle,
    LastMinusOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Periodic,
    Open,
}

/// `√(1 − |α|²)`, clamped at zero.
#[inline]
pub fn rho(alpha: C64) -> f64 {
    let r = alpha.norm();
    ((1.0 - r) * (1.0 + r)).max(0.0).sqrt()
}

/// The 2×2 block `[[conj α, ρ], [ρ, −α]]`.
pub fn build_xi(alpha: C64) -> Result<[[C64; 2]; 2]> {
    if !(alpha.norm() <= 1.0 + MODULUS_SLACK) {
        return domain(format!("|alpha| = {} exceeds 1", alpha.norm()));
    }
    let r = C64::new(rho(alpha), 0.0);
    Ok([[alpha.conj(), r], [r, -alpha]])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerblunskyVector {
    entries: Vec<C64>,
    boundary: BoundaryMode,
}

impl VerblunskyVector {
    pub fn new(entries: Vec<C64>, boundary: BoundaryMode) -> Result<Self> {
        let n = entries.len();
        if n < 2 {
            return Err(GgeError::Shape(format!("need at least 2 coefficients, got {n}")));
        }
        for (j, a) in entries.iter().enumerate() {
            if !(a.norm() <= 1.0 + MODULUS_SLACK) {
                return domain(format!("|alpha_{}| = {} exceeds 1", j + 1, a.norm()));
            }
        }
        let last = entries[n - 1];
        match boundary {
            BoundaryMode::AllInterior => {}
            BoundaryMode::LastOnCircle => {
                if (last.norm() - 1.0).abs() > MODULUS_SLACK {
                    return domain(format!("last coefficient must lie on the circle, |alpha_N| = {}", last.norm()));
                }
            }
            BoundaryMode::LastMinusOne => {
                if (last + 1.0).norm() > MODULUS_SLACK {
                    return domain(format!("last coefficient must be -1, got {last}"));
                }
            }
        }
        Ok(VerblunskyVector { entries, boundary })
    }

    pub fn interior(entries: Vec<C64>) -> Result<Self> {
        Self::new(entries, BoundaryMode::AllInterior)
    }

    pub fn from_real(values: &[f64], boundary: BoundaryMode) -> Result<Self> {
        Self::new(values.iter().map(|&x| C64::new(x, 0.0)).collect(), boundary)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::interior(vec![C64::new(0.0, 0.0); n])
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.entries
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|a| a.im == 0.0)
    }

    /// True when every non-boundary entry satisfies `|α| < 1`.
    pub fn is_strictly_interior(&self) -> bool {
        let n = self.len();
        let interior = match self.boundary {
            BoundaryMode::AllInterior => n,
            _ => n - 1,
        };
        self.entries[..interior].iter().all(|a| a.norm() < 1.0)
    }

    pub(crate) fn set(&mut self, a: usize, value: C64) {
        self.entries[a] = value;
    }
}

/// Entries of one row; at most four.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Row {
    pub(crate) cols: [usize; 4],
    pub(crate) vals: [C64; 4],
    pub(crate) len: usize,
}

impl Row {
    fn empty() -> Self {
        Row { cols: [0; 4], vals: [C64::new(0.0, 0.0); 4], len: 0 }
    }

    fn add(&mut self, col: usize, val: C64) {
        for k in 0..self.len {
            if self.cols[k] == col {
                self.vals[k] += val;
                return;
            }
        }
        self.cols[self.len] = col;
        self.vals[self.len] = val;
        self.len += 1;
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = (usize, C64)> + '_ {
        (0..self.len).map(move |k| (self.cols[k], self.vals[k]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Factor {
    L,
    M,
}

/// Row `i` of the factor as up to two `(col, value)` pairs.
fn factor_row(alphas: &[C64], topology: Topology, factor: Factor, i: usize) -> ([(usize, C64); 2], usize) {
    let n = alphas.len();
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    // start index of the block containing i
    let parity = match factor {
        Factor::L => 0,
        Factor::M => 1,
    };
    let start = if i % 2 == parity {
        Some(i)
    } else if i >= 1 {
        Some(i - 1)
    } else {
        match topology {
            Topology::Periodic => Some(n - 1),
            Topology::Open => None,
        }
    };
    let Some(p) = start else {
        // the leading 1×1 block of M in the open case
        return ([(0, one), (0, zero)], 1);
    };
    let q = p + 1;
    let (q, wraps_out) = match topology {
        Topology::Periodic => (q % n, false),
        Topology::Open => (q, q >= n),
    };
    let a = alphas[p];
    if wraps_out {
        return ([(p, a.conj()), (0, zero)], 1);
    }
    let r = C64::new(rho(a), 0.0);
    if i == p {
        ([(p, a.conj()), (q, r)], 2)
    } else {
        ([(p, r), (q, -a)], 2)
    }
}

fn product_row(alphas: &[C64], topology: Topology, i: usize) -> Row {
    let mut row = Row::empty();
    let (lrow, llen) = factor_row(alphas, topology, Factor::L, i);
    for &(m, lv) in &lrow[..llen] {
        let (mrow, mlen) = factor_row(alphas, topology, Factor::M, m);
        for &(c, mv) in &mrow[..mlen] {
            row.add(c, lv * mv);
        }
    }
    row
}

fn factor_dense(alphas: &[C64], topology: Topology, factor: Factor) -> DMatrix<C64> {
    let n = alphas.len();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let (row, len) = factor_row(alphas, topology, factor, i);
        for &(c, v) in &row[..len] {
            out[(i, c)] += v;
        }
    }
    out
}

/// Scratch buffers for propagating unit row vectors through `E`.
#[derive(Debug, Clone)]
pub struct TraceWorkspace {
    cur: Vec<C64>,
    next: Vec<C64>,
    support: Vec<usize>,
    next_support: Vec<usize>,
    mark: Vec<bool>,
}

impl TraceWorkspace {
    pub fn new(n: usize) -> Self {
        TraceWorkspace {
            cur: vec![C64::new(0.0, 0.0); n],
            next: vec![C64::new(0.0, 0.0); n],
            support: Vec::with_capacity(n),
            next_support: Vec::with_capacity(n),
            mark: vec![false; n],
        }
    }
}

#[derive(Debug, Clone)]
pub struct CmvMatrix {
    topology: Topology,
    alphas: VerblunskyVector,
    rows: Vec<Row>,
}

/// `E = L·M` with wrap-around blocks.
pub fn build_periodic_cmv(v: &VerblunskyVector) -> Result<CmvMatrix> {
    let n = v.len();
    if n % 2 != 0 {
        return Err(GgeError::Shape(format!("periodic CMV needs even N, got {n}")));
    }
    if v.boundary() != BoundaryMode::AllInterior {
        return Err(GgeError::Shape("periodic CMV needs an all-interior coefficient vector".into()));
    }
    Ok(CmvMatrix::assemble(v.clone(), Topology::Periodic))
}

/// The open (finite) CMV matrix `E = L·M` with the 1×1 edge blocks.
pub fn build_cmv(v: &VerblunskyVector) -> Result<CmvMatrix> {
    Ok(CmvMatrix::assemble(v.clone(), Topology::Open))
}

impl CmvMatrix {
    fn assemble(alphas: VerblunskyVector, topology: Topology) -> Self {
        let n = alphas.len();
        let rows = (0..n).map(|i| product_row(alphas.entries(), topology, i)).collect();
        CmvMatrix { topology, alphas, rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn alphas(&self) -> &VerblunskyVector {
        &self.alphas
    }

    /// Structural entries `(row, col, value)`.
    pub fn entries(&self) -> Vec<(usize, usize, C64)> {
        let mut out = Vec::with_capacity(4 * self.dim());
        for (i, row) in self.rows.iter().enumerate() {
            let mut cols: Vec<(usize, C64)> = row.iter().collect();
            cols.sort_by_key(|&(c, _)| c);
            out.extend(cols.into_iter().map(|(c, v)| (i, c, v)));
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.rows[i].iter().find(|&(c, _)| c == j).map_or(C64::new(0.0, 0.0), |(_, v)| v)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for (c, v) in row.iter() {
                out[(i, c)] = v;
            }
        }
        out
    }

    /// Dense `L` factor.
    pub fn left_factor(&self) -> DMatrix<C64> {
        factor_dense(self.alphas.entries(), self.topology, Factor::L)
    }

    /// Dense `M` factor.
    pub fn right_factor(&self) -> DMatrix<C64> {
        factor_dense(self.alphas.entries(), self.topology, Factor::M)
    }

    /// Rows whose entries depend on `alphas[a]`.
    fn rows_touched_by(&self, a: usize) -> Vec<usize> {
        let n = self.dim() as isize;
        let mut out = Vec::with_capacity(4);
        for d in -1..=2isize {
            let i = a as isize + d;
            let i = match self.topology {
                Topology::Periodic => i.rem_euclid(n),
                Topology::Open => {
                    if i < 0 || i >= n {
                        continue;
                    }
                    i
                }
            } as usize;
            if !out.contains(&i) {
                out.push(i);
            }
        }
        out
    }

    /// Replaces one coefficient and refreshes the affected rows.
    pub fn set_alpha(&mut self, a: usize, value: C64) -> Result<()> {
        if !(value.norm() <= 1.0 + MODULUS_SLACK) {
            return domain(format!("|alpha| = {} exceeds 1", value.norm()));
        }
        self.alphas.set(a, value);
        for i in self.rows_touched_by(a) {
            self.rows[i] = product_row(self.alphas.entries(), self.topology, i);
        }
        Ok(())
    }

    /// Rows `i` whose diagonal entries `(E^k)_{ii}`, `k ≤ k_max`, can change with `alphas[a]`.
    pub fn diagonal_window(&self, a: usize, k_max: usize) -> Vec<usize> {
        let n = self.dim();
        let reach = k_max + 3;
        if 2 * reach + 4 >= n {
            return (0..n).collect();
        }
        let lo = a as isize - reach as isize;
        let hi = a as isize + reach as isize + 1;
        (lo..=hi)
            .filter_map(|i| match self.topology {
                Topology::Periodic => Some(i.rem_euclid(n as isize) as usize),
                Topology::Open => (i >= 0 && i < n as isize).then_some(i as usize),
            })
            .collect()
    }

    /// Adds `(E^k)_{ii}` to `out[k]` for `k = 1..out.len()-1`.
    pub fn accumulate_diagonal_powers(&self, i: usize, ws: &mut TraceWorkspace, out: &mut [C64]) {
        let k_max = out.len().saturating_sub(1);
        if k_max == 0 {
            return;
        }
        let zero = C64::new(0.0, 0.0);
        ws.support.clear();
        ws.support.push(i);
        ws.cur[i] = C64::new(1.0, 0.0);
        for k in 1..=k_max {
            ws.next_support.clear();
            for &r in &ws.support {
                let x = ws.cur[r];
                for (c, v) in self.rows[r].iter() {
                    if !ws.mark[c] {
                        ws.mark[c] = true;
                        ws.next_support.push(c);
                    }
                    ws.next[c] += x * v;
                }
            }
            for &r in &ws.support {
                ws.cur[r] = zero;
            }
            for &c in &ws.next_support {
                ws.mark[c] = false;
            }
            std::mem::swap(&mut ws.cur, &mut ws.next);
            std::mem::swap(&mut ws.support, &mut ws.next_support);
            out[k] += ws.cur[i];
        }
        for &r in &ws.support {
            ws.cur[r] = zero;
        }
    }

    /// `Σ_{i ∈ rows} (E^k)_{ii}` for `k = 0..=k_max`; entry 0 is the row count.
    pub fn partial_trace_powers(&self, rows: &[usize], k_max: usize, ws: &mut TraceWorkspace) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); k_max + 1];
        out[0] = C64::new(rows.len() as f64, 0.0);
        for &i in rows {
            self.accumulate_diagonal_powers(i, ws, &mut out);
        }
        out
    }

    /// `Tr(E^k)` for `k = 0..=k_max`.
    pub fn trace_powers(&self, k_max: usize) -> Vec<C64> {
        let mut ws = TraceWorkspace::new(self.dim());
        let rows: Vec<usize> = (0..self.dim()).collect();
        self.partial_trace_powers(&rows, k_max, &mut ws)
    }

    pub fn trace_power(&self, ell: usize) -> C64 {
        self.trace_powers(ell)[ell]
    }

    /// `Σ_j V(θ_j)` over all eigen-angles, computed from traces. Interval
    /// potentials are evaluated at `x = cos θ`.
    pub fn trace_potential(&self, p: &Potential) -> Result<f64> {
        p.check_degree(crate::potential::MAX_DEGREE)?;
        let traces = self.trace_powers(p.degree());
        Ok(potential_from_traces(p, &traces))
    }

    /// `Σ_{j ≤ n} V(x_j)` over the distinct members of a paired real spectrum.
    pub fn paired_trace_potential(&self, p: &Potential) -> Result<f64> {
        Ok(0.5 * self.trace_potential(p)?)
    }

    /// `max |(E†E − I)_{jk}|`, computed from the sparse rows.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim();
        let mut g = DMatrix::<C64>::zeros(n, n);
        for row in &self.rows {
            for (j, a) in row.iter() {
                for (k, b) in row.iter() {
                    g[(j, k)] += a.conj() * b;
                }
            }
        }
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((g[(j, k)] - target).norm());
            }
        }
        worst
    }

    /// `E⁺`: diagonal halved, entries at `k = j+1` and `k = j+2` (mod N) kept.
    pub fn e_plus(&self) -> Result<DMatrix<C64>> {
        if self.topology != Topology::Periodic {
            return Err(GgeError::Topology("E+ is defined for the periodic matrix only".into()));
        }
        Ok(upper_projection(&self.to_dense()))
    }

    pub fn to_json(&self) -> MatrixDump {
        MatrixDump {
            n: self.dim(),
            topology: self.topology,
            entries: self.entries().into_iter().map(|(i, j, v)| (i, j, v.re, v.im)).collect(),
        }
    }
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// The `+` projection of a dense periodic matrix.
pub fn upper_projection(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        out[(j, j)] = a[(j, j)] * 0.5;
        for step in [1, 2] {
            let k = (j + step) % n;
            if k != j {
                out[(j, k)] = a[(j, k)];
            }
        }
    }
    out
}

/// Weighted trace sum `Σ_k (c_k Re T_k + s_k Im T_k) + c_0 T_0`.
pub fn potential_from_traces(p: &Potential, traces: &[C64]) -> f64 {
    let mut v = p.cos[0] * traces[0].re;
    for k in 1..=p.degree() {
        v += p.cos[k] * traces[k].re;
        if p.domain == Domain::Torus {
            v += p.sin[k] * traces[k].im;
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub n: usize,
    pub topology: Topology,
    pub entries: Vec<(usize, usize, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservedQuantities {
    pub k0: f64,
    pub k1: C64,
    /// `Tr(E^ℓ)` for `ℓ = 1..=l_max`.
    pub k_traces: Vec<C64>,
}

/// `K0 = Π(1−|α_j|²)`, `K1 = −Σ α_j conj(α_{j+1})` and the periodic traces.
pub fn conserved_quantities(v: &VerblunskyVector, l_max: usize) -> Result<ConservedQuantities> {
    let a = v.entries();
    let n = a.len();
    let k0 = a.iter().map(|x| 1.0 - x.norm_sqr()).product();
    let k1 = -(0..n).map(|j| a[j] * a[(j + 1) % n].conj()).sum::<C64>();
    let m = build_periodic_cmv(v)?;
    let k_traces = m.trace_powers(l_max)[1..].to_vec();
    Ok(ConservedQuantities { k0, k1, k_traces })
}
