//! Spheres `S^{n−1} = SO(n)/SO(n−1)`: induced vector fields, stabilizer
//! averages of matrix coefficients and node-wise sphere ensembles.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{phi_eval, CoefficientFamily};
use crate::ensemble::{rkmk4_increment, step_count, EnsembleSystem, Input, Side};
use crate::error::{Error, Result};
use crate::grid::ParamGrid;
use crate::lie::{AlgebraElement, Family, GroupElement};
use crate::linalg::{self, CMat};
use crate::sampling::rng;
use crate::structure::{catalog_set, Variant};

const UNIT_TOL: f64 = 1e-10;

/// A unit vector in `ℝⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SpherePoint(DVector<f64>);

impl SpherePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidInput("sphere points need at least two coordinates".into()));
        }
        let v = DVector::from_vec(coords);
        let defect = (v.norm() - 1.0).abs();
        if !defect.is_finite() || defect > UNIT_TOL {
            return Err(Error::InvalidInput(format!("point is off the unit sphere by {defect:e}")));
        }
        Ok(Self(v))
    }

    /// Rescales a nonzero vector onto the sphere.
    pub fn normalized(coords: Vec<f64>) -> Result<Self> {
        let v = DVector::from_vec(coords);
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
        }
        Self::new((v / norm).data.into())
    }

    /// `e_k` (zero-based `k`).
    pub fn basis(n: usize, k: usize) -> Self {
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        Self(v)
    }

    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        loop {
            let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let norm = v.norm();
            if norm > 1e-3 && norm <= 1.0 {
                return Self(v / norm);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn norm_defect(&self) -> f64 {
        (self.0.norm() - 1.0).abs()
    }
}

impl TryFrom<Vec<f64>> for SpherePoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SpherePoint> for Vec<f64> {
    fn from(p: SpherePoint) -> Self {
        p.0.data.into()
    }
}

/// One sphere point per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereProfile {
    grid: Arc<ParamGrid>,
    points: Vec<SpherePoint>,
}

impl SphereProfile {
    pub fn new(grid: Arc<ParamGrid>, points: Vec<SpherePoint>) -> Result<Self> {
        if points.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: points.len(),
            });
        }
        let n = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.dim(),
            });
        }
        Ok(Self { grid, points })
    }

    pub fn constant(grid: Arc<ParamGrid>, x: &SpherePoint) -> Self {
        let points = vec![x.clone(); grid.len()];
        Self { grid, points }
    }

    pub fn grid(&self) -> &Arc<ParamGrid> {
        &self.grid
    }

    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn max_norm_defect(&self) -> f64 {
        self.points.iter().map(SpherePoint::norm_defect).fold(0.0, f64::max)
    }

    /// `max_q ‖x_q − y_q‖₂`.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.grid.as_ref() != other.grid.as_ref() {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| (a.coords() - b.coords()).norm())
            .fold(0.0, f64::max))
    }
}

fn real_part(m: &CMat) -> DMatrix<f64> {
    m.map(|z| z.re)
}

fn check_so(family: Family, n: usize, dim: usize) -> Result<()> {
    if family != Family::So {
        return Err(Error::FamilyMismatch {
            left: Family::So.algebra_name(dim),
            right: family.algebra_name(n),
        });
    }
    if n != dim {
        return Err(Error::DimensionMismatch { expected: n, found: dim });
    }
    Ok(())
}

/// `τ(X)(x) = Xx`.
pub fn tau_field(x_alg: &AlgebraElement, x: &SpherePoint) -> Result<DVector<f64>> {
    check_so(x_alg.family(), x_alg.n(), x.dim())?;
    Ok(real_part(x_alg.matrix()) * x.coords())
}

/// A rotation `g ∈ SO(n)` with `g·e₁ = x`.
///
/// Householder reflection onto `x` followed by `diag(1, −1, 1, …)`; the
/// antipode `−e₁` gets `diag(−1, 1, −1, 1, …)`.
pub fn section(x: &SpherePoint) -> GroupElement {
    let n = x.dim();
    let v = x.coords();
    if v[0] == -1.0 {
        let d = DMatrix::from_fn(n, n, |r, c| match (r == c, r) {
            (false, _) => 0.0,
            (true, 0) => -1.0,
            (true, r) if r == 2 || n == 2 => -1.0,
            _ => 1.0,
        });
        return GroupElement::from_raw(Family::So, linalg::from_real(&d));
    }
    let rest: f64 = v.iter().skip(1).map(|a| a * a).sum();
    if rest == 0.0 {
        return GroupElement::identity(Family::So, n);
    }
    // u = e₁ − x with the first entry computed without cancellation
    let mut u = -v.clone();
    u[0] = if v[0] > 0.0 { rest / (1.0 + v[0]) } else { 1.0 - v[0] };
    let h = DMatrix::identity(n, n) - (&u * u.transpose()) * (2.0 / u.norm_squared());
    let mut g = h;
    for r in 0..n {
        g[(r, 1)] = -g[(r, 1)];
    }
    GroupElement::from_raw(Family::So, linalg::from_real(&g))
}

/// The stabilizer circle of `e₁` in `SO(3)`.
pub fn stabilizer_rotation(theta: f64) -> GroupElement {
    let (s, co) = theta.sin_cos();
    let h = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, co, s, 0.0, -s, co]);
    GroupElement::from_raw(Family::So, linalg::from_real(&h))
}

fn check_sphere_family(fam: &CoefficientFamily, x: &SpherePoint) -> Result<()> {
    check_so(fam.family(), fam.n(), x.dim())?;
    if fam.n() != 3 {
        return Err(Error::InvalidInput("stabilizer averaging is implemented for S² only".into()));
    }
    Ok(())
}

/// `(1/P) Σ_k φ^{ij}(g·h(2πk/P))` for a fixed section `g`.
pub fn average_with_section(fam: &CoefficientFamily, i: usize, j: usize, g: &GroupElement, points: usize) -> Result<f64> {
    if points == 0 {
        return Err(Error::InvalidInput("at least one quadrature point is required".into()));
    }
    let mut acc = 0.0;
    for k in 0..points {
        let h = stabilizer_rotation(2.0 * PI * k as f64 / points as f64);
        acc += phi_eval(fam, &g.compose(&h)?, i, j)?;
    }
    Ok(acc / points as f64)
}

/// `φ̄^{ij}(x)` over the stabilizer of `e₁`.
pub fn average_coefficient(fam: &CoefficientFamily, i: usize, j: usize, x: &SpherePoint, points: usize) -> Result<f64> {
    check_sphere_family(fam, x)?;
    average_with_section(fam, i, j, &section(x), points)
}

/// `φ̄^i(x)`, the average of `φ^{i1}`.
pub fn average_over_stabilizer(fam: &CoefficientFamily, i: usize, x: &SpherePoint, points: usize) -> Result<f64> {
    average_coefficient(fam, i, 0, x, points)
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationCheck {
    pub max_residual: f64,
    pub pass: bool,
    /// Point with the largest residual.
    pub witness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousReport {
    pub samples: usize,
    pub tol: f64,
    pub bracket: RelationCheck,
    pub derivative: RelationCheck,
    /// Finite-difference derivative of the averaged coefficients.
    pub derivative_fd: RelationCheck,
    pub averaging: RelationCheck,
    pub min_field_rank: usize,
    pub min_differential_rank: usize,
}

impl HomogeneousReport {
    pub fn pass(&self) -> bool {
        self.bracket.pass
            && self.derivative.pass
            && self.averaging.pass
            && self.derivative_fd.pass
            && self.min_field_rank == 2
            && self.min_differential_rank == 2
    }
}

struct Worst {
    value: f64,
    at: Vec<f64>,
}

impl Worst {
    fn new() -> Self {
        Self { value: 0.0, at: Vec::new() }
    }

    fn push(&mut self, r: f64, x: &SpherePoint) {
        if r > self.value || self.at.is_empty() {
            self.value = r.max(self.value);
            self.at = x.coords().iter().copied().collect();
        }
    }

    fn check(self, tol: f64) -> RelationCheck {
        RelationCheck {
            max_residual: self.value,
            pass: self.value <= tol,
            witness: self.at,
        }
    }
}

fn tangent_rank(vectors: &[DVector<f64>], x: &SpherePoint) -> usize {
    let n = x.dim();
    let p = DMatrix::identity(n, n) - x.coords() * x.coords().transpose();
    let cols: Vec<DVector<f64>> = vectors.iter().map(|v| &p * v).collect();
    let m = DMatrix::from_columns(&cols);
    linalg::real_rank(&m, 1e-10).0
}

/// Checks the S² relations at the poles, an equator point and
/// `n_samples` random points.
///
/// Averages are compared with `2x_i` at `1e-12`; the finite-difference
/// derivative of the averages is held to `1e-6`.
pub fn verify_homogeneous_relations(n_samples: usize, tol: f64, seed: u64) -> Result<HomogeneousReport> {
    let set = catalog_set(Family::So, 3, Variant::Standard)?;
    let fam = CoefficientFamily::new(set.clone(), crate::coefficients::Orientation::Left)?;
    let xs: Vec<DMatrix<f64>> = set.elements().iter().map(|e| real_part(e.matrix())).collect();

    let mut points: Vec<SpherePoint> = (0..3)
        .flat_map(|k| {
            let mut neg = vec![0.0; 3];
            neg[k] = -1.0;
            [SpherePoint::basis(3, k), SpherePoint::new(neg).expect("unit")]
        })
        .collect();
    points.push(SpherePoint::normalized(vec![1.0, 1.0, 0.0])?);
    let mut r = rng(seed);
    points.extend((0..n_samples).map(|_| SpherePoint::random(3, &mut r)));

    let mut bracket = Worst::new();
    let mut derivative = Worst::new();
    let mut derivative_fd = Worst::new();
    let mut averaging = Worst::new();
    let mut min_field_rank = usize::MAX;
    let mut min_diff_rank = usize::MAX;
    let h = 1e-5;

    for x in &points {
        let v = x.coords();
        for i in 0..3 {
            let avg = average_over_stabilizer(&fam, i, x, 64)?;
            averaging.push((avg - 2.0 * v[i]).abs(), x);
            for j in 0..3 {
                let k = (3 + 3 - i - j) % 3;
                let eps = levi_civita(i, j, k);
                // [τX_i, τX_j](x) = X_i X_j x − X_j X_i x
                let lhs = &xs[i] * (&xs[j] * v) - &xs[j] * (&xs[i] * v);
                let rhs = if i != j { -(&xs[k] * v) * eps } else { DVector::zeros(3) };
                bracket.push((lhs - rhs).amax(), x);

                let tx = &xs[i] * v;
                let lie = 2.0 * tx[j];
                let target = if i != j { eps * 2.0 * v[k] } else { 0.0 };
                derivative.push((lie - target).abs(), x);

                let step = |t: f64| -> Result<f64> {
                    let e = linalg::expm(&(linalg::from_real(&xs[i]) * linalg::c(t)));
                    let y = real_part(&e) * v;
                    average_over_stabilizer(&fam, j, &SpherePoint::normalized(y.data.into())?, 64)
                };
                let fd = (step(h)? - step(-h)?) / (2.0 * h);
                derivative_fd.push((fd - target).abs(), x);
            }
        }
        let fields: Vec<DVector<f64>> = xs.iter().map(|m| m * v).collect();
        min_field_rank = min_field_rank.min(tangent_rank(&fields, x));
        let grads: Vec<DVector<f64>> = (0..3).map(|j| SpherePoint::basis(3, j).coords() * 2.0).collect();
        min_diff_rank = min_diff_rank.min(tangent_rank(&grads, x));
    }

    Ok(HomogeneousReport {
        samples: points.len(),
        tol,
        bracket: bracket.check(tol),
        derivative: derivative.check(tol),
        derivative_fd: derivative_fd.check(1e-6),
        averaging: averaging.check(1e-12),
        min_field_rank,
        min_differential_rank: min_diff_rank,
    })
}

/// Sphere profiles at `t_k = k·dt`.
#[derive(Debug, Clone)]
pub struct SphereTrajectory {
    times: Vec<f64>,
    profiles: Vec<SphereProfile>,
    max_norm_defect: f64,
}

impl SphereTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn profiles(&self) -> &[SphereProfile] {
        &self.profiles
    }

    pub fn last(&self) -> &SphereProfile {
        self.profiles.last().expect("trajectory is never empty")
    }

    pub fn max_norm_defect(&self) -> f64 {
        self.max_norm_defect
    }
}

pub const SPHERE_NORM_TOL: f64 = 1e-9;

/// Node-wise `ẋ = A(t, σ_q)x` with `x ← exp(Θ)x`, where `Θ` is the
/// right-flow RKMK4 increment of the same generator the group ensemble uses.
pub fn integrate_sphere_ensemble(
    sys: &EnsembleSystem,
    init: &SphereProfile,
    input: &Input,
    t_final: f64,
    dt: f64,
) -> Result<SphereTrajectory> {
    if init.grid().as_ref() != sys.grid().as_ref() {
        return Err(Error::GridMismatch);
    }
    check_so(sys.generators().family(), sys.generators().n(), init.dim())?;
    let steps = step_count(t_final, dt)?;
    let mono = sys.check_input(input)?;
    let abort = 100.0 * SPHERE_NORM_TOL;

    let per_node: Vec<(Vec<DVector<f64>>, f64)> = (0..init.len())
        .into_par_iter()
        .map(|q| {
            let mut x = init.points()[q].coords().clone();
            let mut series = Vec::with_capacity(steps + 1);
            series.push(x.clone());
            let mut worst: f64 = 0.0;
            for k in 0..steps {
                let t0 = k as f64 * dt;
                let t_mid = t0 + 0.5 * dt;
                let theta = rkmk4_increment(|t| sys.generator(input, mono.as_ref(), q, t, t_mid), t0, dt, Side::Right);
                x = real_part(&linalg::expm(&theta)) * x;
                let defect = (x.norm() - 1.0).abs();
                worst = worst.max(defect);
                if defect > abort {
                    return Err(Error::InvariantViolation {
                        node: q,
                        time: (k + 1) as f64 * dt,
                        defect,
                    });
                }
                series.push(x.clone());
            }
            Ok((series, worst))
        })
        .collect::<Result<Vec<_>>>()?;

    let max_norm_defect = per_node.iter().map(|(_, w)| *w).fold(0.0, f64::max);
    let times = (0..=steps).map(|k| k as f64 * dt).collect();
    let profiles = (0..=steps)
        .map(|k| SphereProfile {
            grid: init.grid().clone(),
            points: per_node.iter().map(|(s, _)| SpherePoint(s[k].clone())).collect(),
        })
        .collect();
    Ok(SphereTrajectory {
        times,
        profiles,
        max_norm_defect,
    })
}
