//! Trigonometric (torus) and Chebyshev (interval) potentials.
//!
//! A torus potential is `V(θ) = c0 + Σ_k (c_k cos kθ + s_k sin kθ)`.
//! An interval potential is `V(x) = Σ_k t_k T_k(x)`; on a real CMV spectrum
//! it is evaluated at `x = cos θ`, so `V(cos θ) = Σ_k t_k cos kθ` and the
//! trace formulas of the torus case apply with `s_k = 0`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GgeError, Result};

/// Degrees above this are rejected; trace evaluation costs grow quadratically.
pub const MAX_DEGREE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Torus,
    Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub domain: Domain,
    /// `c_0..c_d` (torus) or `t_0..t_d` (interval).
    pub cos: Vec<f64>,
    /// `s_1..s_d` stored at index `k`; index 0 unused. Always empty on the interval.
    pub sin: Vec<f64>,
}

impl Potential {
    pub fn zero(domain: Domain) -> Self {
        Potential { domain, cos: vec![0.0], sin: vec![0.0] }
    }

    pub fn torus(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        let mut p = Potential { domain: Domain::Torus, cos, sin };
        p.normalize_lengths();
        p
    }

    pub fn chebyshev(t: Vec<f64>) -> Self {
        let mut p = Potential { domain: Domain::Interval, cos: t, sin: Vec::new() };
        p.normalize_lengths();
        p
    }

    /// `V(θ) = 2η cos θ`.
    pub fn cosine(eta: f64) -> Self {
        Potential::torus(vec![0.0, 2.0 * eta], vec![])
    }

    fn normalize_lengths(&mut self) {
        if self.cos.is_empty() {
            self.cos.push(0.0);
        }
        let d = self.cos.len().max(self.sin.len()).max(1);
        self.cos.resize(d, 0.0);
        self.sin.resize(d, 0.0);
        while self.cos.len() > 1
            && self.cos[self.cos.len() - 1] == 0.0
            && self.sin[self.sin.len() - 1] == 0.0
        {
            self.cos.pop();
            self.sin.pop();
        }
        if self.domain == Domain::Interval {
            self.sin.iter_mut().for_each(|s| *s = 0.0);
        }
    }

    pub fn degree(&self) -> usize {
        self.cos.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.cos.iter().chain(self.sin.iter()).all(|&c| c == 0.0)
    }

    /// True when only the constant term is nonzero.
    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn constant(&self) -> f64 {
        self.cos[0]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Potential {
            domain: self.domain,
            cos: self.cos.iter().map(|c| c * s).collect(),
            sin: self.sin.iter().map(|c| c * s).collect(),
        }
    }

    /// Shift of the argument, `θ ↦ V(θ − φ)` (torus only).
    pub fn rotated(&self, phi: f64) -> Self {
        let mut cos = self.cos.clone();
        let mut sin = self.sin.clone();
        for k in 1..cos.len() {
            let (sk, ck) = ((k as f64) * phi).sin_cos();
            let (a, b) = (self.cos[k], self.sin[k]);
            cos[k] = a * ck - b * sk;
            sin[k] = a * sk + b * ck;
        }
        Potential { domain: self.domain, cos, sin }
    }

    /// Value on the torus at angle `theta`. Interval potentials are evaluated at `cos θ`.
    pub fn eval_angle(&self, theta: f64) -> f64 {
        let mut v = self.cos[0];
        for k in 1..self.cos.len() {
            let (s, c) = ((k as f64) * theta).sin_cos();
            v += self.cos[k] * c + self.sin[k] * s;
        }
        v
    }

    /// Value on the interval at `x ∈ [−1, 1]` via the Chebyshev recurrence.
    pub fn eval_x(&self, x: f64) -> f64 {
        let mut t_prev = 1.0;
        let mut t = x;
        let mut v = self.cos[0];
        for k in 1..self.cos.len() {
            v += self.cos[k] * t;
            let t_next = 2.0 * x * t - t_prev;
            t_prev = t;
            t = t_next;
        }
        v
    }

    pub fn check_degree(&self, cap: usize) -> Result<()> {
        if self.degree() > cap {
            return Err(GgeError::Config(format!(
                "potential degree {} exceeds the cap {}",
                self.degree(),
                cap
            )));
        }
        Ok(())
    }

    /// Parses `c0=..,c1=..,s1=..` (torus) or `t0=..,t1=..` (interval).
    /// An empty string or `0` gives the zero torus potential.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() || text == "0" {
            return Ok(Potential::zero(Domain::Torus));
        }
        let mut cos = BTreeMap::new();
        let mut sin = BTreeMap::new();
        let mut cheb = BTreeMap::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| GgeError::Config(format!("expected key=value, got `{item}`")))?;
            let key = key.trim();
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| GgeError::Config(format!("bad number in `{item}`")))?;
            if key.len() < 2 {
                return Err(GgeError::Config(format!("bad coefficient name `{key}`")));
            }
            let (kind, index) = key.split_at(1);
            let index: usize = index
                .parse()
                .map_err(|_| GgeError::Config(format!("bad coefficient index in `{key}`")))?;
            if index > MAX_DEGREE {
                return Err(GgeError::Config(format!("degree {index} exceeds the cap {MAX_DEGREE}")));
            }
            match kind {
                "c" => {
                    cos.insert(index, value);
                }
                "s" if index >= 1 => {
                    sin.insert(index, value);
                }
                "t" => {
                    cheb.insert(index, value);
                }
                _ => return Err(GgeError::Config(format!("unknown coefficient `{key}`"))),
            }
        }
        if !cheb.is_empty() && !(cos.is_empty() && sin.is_empty()) {
            return Err(GgeError::Config("cannot mix t-coefficients with c/s coefficients".into()));
        }
        let dense = |m: &BTreeMap<usize, f64>| {
            let d = m.keys().next_back().map_or(0, |&k| k);
            let mut v = vec![0.0; d + 1];
            for (&k, &c) in m {
                v[k] = c;
            }
            v
        };
        if !cheb.is_empty() {
            Ok(Potential::chebyshev(dense(&cheb)))
        } else {
            Ok(Potential::torus(dense(&cos), dense(&sin)))
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.domain {
            Domain::Torus => {
                for (k, &c) in self.cos.iter().enumerate() {
                    if c != 0.0 {
                        parts.push(format!("c{k}={c}"));
                    }
                }
                for (k, &s) in self.sin.iter().enumerate().skip(1) {
                    if s != 0.0 {
                        parts.push(format!("s{k}={s}"));
                    }
                }
            }
            Domain::Interval => {
                for (k, &t) in self.cos.iter().enumerate() {
                    if t != 0.0 {
                        parts.push(format!("t{k}={t}"));
                    }
                }
            }
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(","))
        }
    }
}
