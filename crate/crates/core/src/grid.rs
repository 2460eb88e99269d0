//! Parameter grids on Σ = [a, b], parametrization functions ρ_s and
//! monomials in them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    UniformTrapezoid,
    GaussLegendre,
    /// Nodes and weights supplied by the caller.
    Custom,
}

impl QuadratureRule {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform-trapezoid" | "trapezoid" => Ok(Self::UniformTrapezoid),
            "gauss-legendre" | "gauss" => Ok(Self::GaussLegendre),
            other => Err(Error::InvalidGrid(format!("unknown quadrature rule '{other}'"))),
        }
    }
}

/// Quadrature nodes and weights on `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    a: f64,
    b: f64,
    rule: QuadratureRule,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ParamGrid {
    /// Grid from explicit nodes and weights. Nodes must be strictly
    /// increasing inside `[a, b]` and the weights must sum to `b − a`.
    pub fn custom(a: f64, b: f64, nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidGrid(format!("interval [{a}, {b}] is empty")));
        }
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::InvalidGrid("nodes and weights must be non-empty and equally long".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("nodes must be strictly increasing".into()));
        }
        if nodes[0] < a || nodes[nodes.len() - 1] > b {
            return Err(Error::InvalidGrid("nodes must lie in the interval".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - (b - a)).abs() > 1e-12 * (1.0 + (b - a)) {
            return Err(Error::InvalidGrid(format!("weights sum to {total}, interval length is {}", b - a)));
        }
        Ok(Self {
            a,
            b,
            rule: QuadratureRule::Custom,
            nodes,
            weights,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_q f(σ_q)` summed in node order.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(0.0, |acc, (s, w)| acc + w * f(*s))
    }
}

/// Legendre nodes and weights on `[−1, 1]` by Newton iteration on `P_Q`.
fn gauss_legendre_unit(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; q];
    let mut w = vec![0.0; q];
    let m = q.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pq = if q == 1 { z } else { p1 };
            let pq1 = if q == 1 { 1.0 } else { p0 };
            dp = q as f64 * (z * pq - pq1) / (z * z - 1.0);
            let dz = pq / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[q - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[q - 1 - i] = wi;
    }
    (x, w)
}

pub fn build_grid(a: f64, b: f64, q: usize, rule: QuadratureRule) -> Result<ParamGrid> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidGrid(format!("interval [{a}, {b}] is empty")));
    }
    if q < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 nodes, got {q}")));
    }
    let (nodes, weights) = match rule {
        QuadratureRule::UniformTrapezoid => {
            let h = (b - a) / (q - 1) as f64;
            let nodes = (0..q)
                .map(|k| if k == q - 1 { b } else { a + k as f64 * h })
                .collect();
            let weights = (0..q)
                .map(|k| if k == 0 || k == q - 1 { 0.5 * h } else { h })
                .collect();
            (nodes, weights)
        }
        QuadratureRule::GaussLegendre => {
            let (x, w) = gauss_legendre_unit(q);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            (
                x.iter().map(|t| mid + half * t).collect(),
                w.iter().map(|v| half * v).collect(),
            )
        }
        QuadratureRule::Custom => {
            return Err(Error::InvalidGrid("custom grids are built with ParamGrid::custom".into()))
        }
    };
    Ok(ParamGrid {
        a,
        b,
        rule,
        nodes,
        weights,
    })
}

/// Closed whitelist of parametrization functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoExpr {
    Sigma,
    Pow(i32),
    Const(f64),
    Sin,
    Cos,
    Exp,
}

impl RhoExpr {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            RhoExpr::Sigma => s,
            RhoExpr::Pow(k) => s.powi(k),
            RhoExpr::Const(v) => v,
            RhoExpr::Sin => s.sin(),
            RhoExpr::Cos => s.cos(),
            RhoExpr::Exp => s.exp(),
        }
    }
}

impl FromStr for RhoExpr {
    type Err = Error;

    fn from_str(raw: &str) -> Result<Self> {
        let s: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
        let s = s.replace('σ', "sigma");
        let bad = || Error::InvalidInput(format!("unsupported parametrization '{raw}'"));
        Ok(match s.as_str() {
            "sigma" => RhoExpr::Sigma,
            "sin(sigma)" => RhoExpr::Sin,
            "cos(sigma)" => RhoExpr::Cos,
            "exp(sigma)" => RhoExpr::Exp,
            _ => {
                if let Some(k) = s.strip_prefix("sigma^") {
                    let k = k.trim_start_matches('(').trim_end_matches(')');
                    RhoExpr::Pow(k.parse().map_err(|_| bad())?)
                } else {
                    let v: f64 = s.parse().map_err(|_| bad())?;
                    if !v.is_finite() {
                        return Err(bad());
                    }
                    RhoExpr::Const(v)
                }
            }
        })
    }
}

impl fmt::Display for RhoExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhoExpr::Sigma => write!(f, "sigma"),
            RhoExpr::Pow(k) => write!(f, "sigma^{k}"),
            RhoExpr::Const(v) => write!(f, "{v}"),
            RhoExpr::Sin => write!(f, "sin(sigma)"),
            RhoExpr::Cos => write!(f, "cos(sigma)"),
            RhoExpr::Exp => write!(f, "exp(sigma)"),
        }
    }
}

impl Serialize for RhoExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RhoExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `{ρ_s}` with one designated everywhere-nonzero member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametrizationSet {
    functions: Vec<RhoExpr>,
    designated: usize,
}

impl ParametrizationSet {
    pub fn new(functions: Vec<RhoExpr>, designated: usize) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::InvalidInput("parametrization set is empty".into()));
        }
        if designated >= functions.len() {
            return Err(Error::IndexOutOfRange {
                index: designated,
                len: functions.len(),
            });
        }
        Ok(Self {
            functions,
            designated,
        })
    }

    pub fn parse(exprs: &[&str]) -> Result<Self> {
        Self::new(exprs.iter().map(|e| e.parse()).collect::<Result<_>>()?, 0)
    }

    pub fn functions(&self) -> &[RhoExpr] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn designated(&self) -> usize {
        self.designated
    }

    pub fn eval(&self, s: usize, sigma: f64) -> Result<f64> {
        self.functions
            .get(s)
            .map(|f| f.eval(sigma))
            .ok_or(Error::IndexOutOfRange {
                index: s,
                len: self.functions.len(),
            })
    }

    /// Values `ρ_s(σ_q)`, indexed `[q][s]`.
    pub fn table(&self, grid: &ParamGrid) -> Vec<Vec<f64>> {
        grid.nodes()
            .iter()
            .map(|&x| self.functions.iter().map(|f| f.eval(x)).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparatingVerdict {
    pub squared: bool,
    pub separating: bool,
    /// First node pair `(q, q′)` that no function tells apart.
    pub witness_pair: Option<(usize, usize)>,
    pub nonvanishing: bool,
    /// First node where the designated function vanishes.
    pub witness_node: Option<usize>,
}

impl SeparatingVerdict {
    pub fn pass(&self) -> bool {
        self.separating && self.nonvanishing
    }
}

pub fn check_separating(ps: &ParametrizationSet, grid: &ParamGrid, squared: bool) -> SeparatingVerdict {
    let mut vals = ps.table(grid);
    if squared {
        for row in &mut vals {
            for v in row.iter_mut() {
                *v *= *v;
            }
        }
    }
    let q = vals.len();
    let mut witness_pair = None;
    'outer: for a in 0..q {
        for b in (a + 1)..q {
            if !vals[a].iter().zip(&vals[b]).any(|(x, y)| (x - y).abs() > 1e-12) {
                witness_pair = Some((a, b));
                break 'outer;
            }
        }
    }
    let d = ps.designated();
    let witness_node = vals.iter().position(|row| !(row[d].abs() > 1e-12) || !row[d].is_finite());
    SeparatingVerdict {
        squared,
        separating: witness_pair.is_none(),
        witness_pair,
        nonvanishing: witness_node.is_none(),
        witness_node,
    }
}

/// Exponent tuple `(k₁, …, k_r)` naming `Π ρ_s^{k_s}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn eval(&self, rho: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(rho)
            .fold(1.0, |acc, (&k, &r)| acc * r.powi(k as i32))
    }

    /// Multiply by `ρ_s`.
    pub fn times(&self, s: usize) -> Monomial {
        let mut e = self.0.clone();
        e[s] += 1;
        Monomial(e)
    }

    /// Exponents joined by `;`, e.g. `2;0`.
    pub fn key(&self) -> String {
        self.0.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// All exponent tuples of `r` variables with degree `d`, lexicographically
/// descending (`ρ₁^d` first).
fn tuples_of_degree(r: usize, d: u32) -> Vec<Vec<u32>> {
    if r == 1 {
        return vec![vec![d]];
    }
    let mut out = Vec::new();
    for first in (0..=d).rev() {
        for mut rest in tuples_of_degree(r - 1, d - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Monomials of degree in `[min_degree, max_degree]`, graded-lexicographic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialDictionary {
    vars: usize,
    monomials: Vec<Monomial>,
}

impl MonomialDictionary {
    pub fn graded(vars: usize, min_degree: u32, max_degree: u32) -> Self {
        let monomials = (min_degree..=max_degree)
            .flat_map(|d| tuples_of_degree(vars, d))
            .map(Monomial)
            .collect();
        Self { vars, monomials }
    }

    pub fn from_monomials(vars: usize, monomials: Vec<Monomial>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for m in &monomials {
            if m.0.len() != vars {
                return Err(Error::DimensionMismatch {
                    expected: vars,
                    found: m.0.len(),
                });
            }
            if !seen.insert(m.clone()) {
                return Err(Error::InvalidInput(format!("duplicate monomial {m}")));
            }
        }
        Ok(Self { vars, monomials })
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn max_degree(&self) -> u32 {
        self.monomials.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> u32 {
        self.monomials.iter().map(Monomial::degree).min().unwrap_or(0)
    }

    /// Values `p(σ_q)`, indexed `[q][p]`.
    pub fn evaluate(&self, ps: &ParametrizationSet, grid: &ParamGrid) -> Result<Vec<Vec<f64>>> {
        if ps.len() != self.vars {
            return Err(Error::DimensionMismatch {
                expected: self.vars,
                found: ps.len(),
            });
        }
        Ok(ps
            .table(grid)
            .iter()
            .map(|rho| self.monomials.iter().map(|m| m.eval(rho)).collect())
            .collect())
    }
}
