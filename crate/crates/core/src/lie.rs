//! Matrix Lie algebras so(n), sl(n,ℝ), su(n) and their groups.
//!
//! The Lie bracket used throughout is the *negated* matrix commutator,
//! `[X, Y] = −(XY − YX)`. With this convention the left-invariant fields
//! satisfy `[L_X, L_Y] = L_{[X,Y]}` under the vector-field bracket
//! `[f, g] = (Df)g − (Dg)f`. The raw commutator is never exposed.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    So,
    Sl,
    Su,
}

impl Family {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "so" => Ok(Family::So),
            "sl" => Ok(Family::Sl),
            "su" => Ok(Family::Su),
            other => Err(Error::Unsupported(format!("unknown family '{other}'"))),
        }
    }

    pub fn is_complex(self) -> bool {
        matches!(self, Family::Su)
    }

    pub fn min_n(self) -> usize {
        match self {
            Family::So => 3,
            Family::Sl | Family::Su => 2,
        }
    }

    pub fn check_n(self, n: usize) -> Result<()> {
        if n < self.min_n() {
            return Err(Error::Unsupported(format!(
                "{} requires n >= {}",
                self.algebra_name(n),
                self.min_n()
            )));
        }
        Ok(())
    }

    /// Real dimension of the Lie algebra.
    pub fn algebra_dim(self, n: usize) -> usize {
        match self {
            Family::So => n * (n - 1) / 2,
            Family::Sl | Family::Su => n * n - 1,
        }
    }

    /// Constant `c` with `B(X, Y) = c·tr(XY)`.
    pub fn killing_constant(self, n: usize) -> f64 {
        match self {
            Family::So => n as f64 - 2.0,
            Family::Sl | Family::Su => 2.0 * n as f64,
        }
    }

    pub fn algebra_name(self, n: usize) -> String {
        match self {
            Family::So => format!("so({n})"),
            Family::Sl => format!("sl({n},R)"),
            Family::Su => format!("su({n})"),
        }
    }

    pub fn group_name(self, n: usize) -> String {
        match self {
            Family::So => format!("SO({n})"),
            Family::Sl => format!("SL({n},R)"),
            Family::Su => format!("SU({n})"),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::So => "so",
            Family::Sl => "sl",
            Family::Su => "su",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative Frobenius tolerance for algebra membership.
    pub alg: f64,
    /// Tolerance for group membership.
    pub grp: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { alg: 1e-9, grp: 1e-8 }
    }
}

fn algebra_defect(family: Family, m: &CMat) -> f64 {
    let scale = 1.0 + linalg::frobenius(m);
    let imag = if family.is_complex() {
        0.0
    } else {
        linalg::max_abs_imag(m)
    };
    let structural = match family {
        Family::So => linalg::frobenius(&(m + m.transpose())),
        Family::Sl => linalg::trace(m).norm(),
        Family::Su => linalg::frobenius(&(m + m.adjoint())) + linalg::trace(m).norm(),
    };
    (structural + imag) / scale
}

fn group_defect(family: Family, m: &CMat) -> f64 {
    let n = m.nrows();
    let det = (m.determinant() - c(1.0)).norm();
    let imag = if family.is_complex() {
        0.0
    } else {
        linalg::max_abs_imag(m)
    };
    let unitary = match family {
        Family::Sl => 0.0,
        Family::So | Family::Su => linalg::frobenius(&(m.adjoint() * m - linalg::identity(n))),
    };
    det.max(unitary).max(imag)
}

fn ensure_same(a: (Family, usize), b: (Family, usize)) -> Result<()> {
    if a.0 != b.0 {
        return Err(Error::FamilyMismatch {
            left: a.0.algebra_name(a.1),
            right: b.0.algebra_name(b.1),
        });
    }
    if a.1 != b.1 {
        return Err(Error::DimensionMismatch {
            expected: a.1,
            found: b.1,
        });
    }
    Ok(())
}

/// A square matrix known to lie in a named matrix Lie algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    family: Family,
    mat: CMat,
}

impl AlgebraElement {
    pub fn new(family: Family, mat: CMat) -> Result<Self> {
        Self::with_tolerance(family, mat, Tolerances::default().alg)
    }

    pub fn with_tolerance(family: Family, mat: CMat, tol: f64) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        let n = mat.nrows();
        family.check_n(n)?;
        let defect = algebra_defect(family, &mat);
        if defect > tol {
            return Err(Error::NotInAlgebra {
                algebra: family.algebra_name(n),
                defect,
            });
        }
        Ok(Self { family, mat })
    }

    pub fn from_real(family: Family, mat: DMatrix<f64>) -> Result<Self> {
        Self::new(family, linalg::from_real(&mat))
    }

    pub fn zero(family: Family, n: usize) -> Self {
        Self {
            family,
            mat: CMat::zeros(n, n),
        }
    }

    pub(crate) fn from_raw(family: Family, mat: CMat) -> Self {
        Self { family, mat }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn norm(&self) -> f64 {
        linalg::frobenius(&self.mat)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_raw(self.family, &self.mat * c(s))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        ensure_same(self.kind(), other.kind())?;
        Ok(Self::from_raw(self.family, &self.mat + &other.mat))
    }

    /// Real Frobenius inner product `Re tr(X Y†)`.
    pub fn frobenius_inner(&self, other: &Self) -> f64 {
        linalg::frobenius_inner(&self.mat, &other.mat)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.norm() <= tol
    }

    fn kind(&self) -> (Family, usize) {
        (self.family, self.n())
    }

    /// Σ cᵢ Xᵢ over a non-empty slice of elements of one family.
    pub fn linear_combination(coeffs: &[f64], elements: &[AlgebraElement]) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidInput("empty linear combination".into()))?;
        if coeffs.len() != elements.len() {
            return Err(Error::DimensionMismatch {
                expected: elements.len(),
                found: coeffs.len(),
            });
        }
        let mut acc = CMat::zeros(first.n(), first.n());
        for (w, x) in coeffs.iter().zip(elements) {
            ensure_same(first.kind(), x.kind())?;
            acc += &x.mat * c(*w);
        }
        Ok(Self::from_raw(first.family, acc))
    }
}

/// A square matrix in SO(n), SL(n,ℝ) or SU(n).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    family: Family,
    mat: CMat,
}

impl GroupElement {
    pub fn new(family: Family, mat: CMat) -> Result<Self> {
        Self::with_tolerance(family, mat, Tolerances::default().grp)
    }

    pub fn with_tolerance(family: Family, mat: CMat, tol: f64) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        let n = mat.nrows();
        family.check_n(n)?;
        let defect = group_defect(family, &mat);
        if defect > tol {
            return Err(Error::NotInGroup {
                group: family.group_name(n),
                defect,
            });
        }
        Ok(Self { family, mat })
    }

    pub fn identity(family: Family, n: usize) -> Self {
        Self {
            family,
            mat: linalg::identity(n),
        }
    }

    pub(crate) fn from_raw(family: Family, mat: CMat) -> Self {
        Self { family, mat }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// Distance of the stored matrix from the group constraint set
    /// (max of `‖g†g − I‖_F` for compact families and `|det g − 1|`).
    pub fn constraint_defect(&self) -> f64 {
        group_defect(self.family, &self.mat)
    }

    pub fn inverse(&self) -> Self {
        let mat = match self.family {
            Family::So | Family::Su => self.mat.adjoint(),
            Family::Sl => linalg::inverse(&self.mat).expect("SL(n) element is invertible"),
        };
        Self::from_raw(self.family, mat)
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        ensure_same((self.family, self.n()), (other.family, other.n()))?;
        Ok(Self::from_raw(self.family, &self.mat * &other.mat))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        linalg::frobenius(&(&self.mat - &other.mat))
    }
}

/// The Lie bracket `[X, Y] = −(XY − YX)`.
pub fn bracket(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    ensure_same(x.kind(), y.kind())?;
    Ok(AlgebraElement::from_raw(
        x.family,
        -linalg::commutator(&x.mat, &y.mat),
    ))
}

pub fn group_exp(x: &AlgebraElement) -> GroupElement {
    GroupElement::from_raw(x.family, linalg::expm(&x.mat))
}

/// `Ad(g)X = g X g⁻¹`.
pub fn group_adjoint(g: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement> {
    ensure_same((g.family, g.n()), x.kind())?;
    let inv = g.inverse();
    Ok(AlgebraElement::from_raw(x.family, &g.mat * &x.mat * &inv.mat))
}

/// Killing form via the stored constant, `B(X, Y) = c·tr(XY)`.
pub fn killing_form(x: &AlgebraElement, y: &AlgebraElement) -> Result<f64> {
    ensure_same(x.kind(), y.kind())?;
    let k = x.family.killing_constant(x.n());
    Ok(k * linalg::trace(&(&x.mat * &y.mat)).re)
}

/// Cartan involution `θX = −X†`.
pub fn cartan_theta(x: &AlgebraElement) -> AlgebraElement {
    AlgebraElement::from_raw(x.family, -x.mat.adjoint())
}

/// `B_θ(X, Y) = −B(X, θY) = c·Re tr(X Y†)`, positive definite.
pub fn btheta(x: &AlgebraElement, y: &AlgebraElement) -> Result<f64> {
    killing_form(x, &cartan_theta(y)).map(|v| -v)
}

fn unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = c(1.0);
    m
}

pub(crate) fn elementary(n: usize, i: usize, j: usize) -> CMat {
    unit(n, i, j)
}

fn spanning_matrices(family: Family, n: usize) -> Vec<CMat> {
    let i_unit = Complex64::new(0.0, 1.0);
    let mut out = Vec::new();
    match family {
        Family::So => {
            for i in 0..n {
                for j in (i + 1)..n {
                    out.push(unit(n, i, j) - unit(n, j, i));
                }
            }
        }
        Family::Sl => {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        out.push(unit(n, i, j));
                    }
                }
            }
            for k in 0..n - 1 {
                out.push(unit(n, k, k) - unit(n, k + 1, k + 1));
            }
        }
        Family::Su => {
            for i in 0..n {
                for j in (i + 1)..n {
                    out.push(unit(n, i, j) - unit(n, j, i));
                    out.push((unit(n, i, j) + unit(n, j, i)) * i_unit);
                }
            }
            for k in 0..n - 1 {
                out.push((unit(n, k, k) - unit(n, k + 1, k + 1)) * i_unit);
            }
        }
    }
    out
}

/// Family, dimension, a `B_θ`-orthonormal basis and the validated Killing
/// constant of one matrix Lie algebra.
#[derive(Debug, Clone)]
pub struct AlgebraDescriptor {
    family: Family,
    n: usize,
    basis: Vec<AlgebraElement>,
    killing_constant: f64,
}

impl AlgebraDescriptor {
    pub fn new(family: Family, n: usize) -> Result<Self> {
        family.check_n(n)?;
        let k = family.killing_constant(n);
        // Modified Gram–Schmidt in B_θ, two passes.
        let mut basis: Vec<AlgebraElement> = Vec::new();
        for m in spanning_matrices(family, n) {
            let mut v = AlgebraElement::from_raw(family, m);
            for _ in 0..2 {
                for b in &basis {
                    let proj = btheta(&v, b)?;
                    v = AlgebraElement::from_raw(family, &v.mat - &b.mat * c(proj));
                }
            }
            let norm = btheta(&v, &v)?.sqrt();
            basis.push(v.scale(1.0 / norm));
        }
        debug_assert_eq!(basis.len(), family.algebra_dim(n));
        let desc = Self {
            family,
            n,
            basis,
            killing_constant: k,
        };
        desc.validate_killing_constant()?;
        Ok(desc)
    }

    fn validate_killing_constant(&self) -> Result<()> {
        let ads = self
            .basis
            .iter()
            .map(|x| self.ad_matrix(x))
            .collect::<Result<Vec<_>>>()?;
        for (a, x) in self.basis.iter().enumerate() {
            for (b, y) in self.basis.iter().enumerate().skip(a) {
                let via_ad = (&ads[a] * &ads[b]).trace();
                let via_trace = killing_form(x, y)?;
                if (via_ad - via_trace).abs() > 1e-9 * (1.0 + via_ad.abs()) {
                    let tr = linalg::trace(&(x.matrix() * y.matrix())).re;
                    return Err(Error::KillingMismatch {
                        algebra: self.family.algebra_name(self.n),
                        stored: self.killing_constant,
                        measured: via_ad / tr,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[AlgebraElement] {
        &self.basis
    }

    pub fn killing_constant(&self) -> f64 {
        self.killing_constant
    }

    /// Coordinates of `x` in the orthonormal basis.
    pub fn coords(&self, x: &AlgebraElement) -> Result<DVector<f64>> {
        ensure_same((self.family, self.n), x.kind())?;
        let mut v = DVector::zeros(self.dim());
        for (a, b) in self.basis.iter().enumerate() {
            v[a] = btheta(x, b)?;
        }
        Ok(v)
    }

    pub fn from_coords(&self, v: &DVector<f64>) -> Result<AlgebraElement> {
        AlgebraElement::linear_combination(v.as_slice(), &self.basis)
    }

    /// Matrix of `ad_X = [X, ·]` in the orthonormal basis.
    pub fn ad_matrix(&self, x: &AlgebraElement) -> Result<DMatrix<f64>> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for (col, b) in self.basis.iter().enumerate() {
            let image = self.coords(&bracket(x, b)?)?;
            m.set_column(col, &image);
        }
        Ok(m)
    }

    /// Killing form computed from its definition `tr(ad_X ad_Y)`.
    pub fn killing_form_ad(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<f64> {
        Ok((self.ad_matrix(x)? * self.ad_matrix(y)?).trace())
    }

    /// `B_θ`-Gram matrix of an arbitrary family of elements.
    pub fn gram(&self, elements: &[AlgebraElement]) -> Result<DMatrix<f64>> {
        let m = elements.len();
        let mut g = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = btheta(&elements[i], &elements[j])?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }
}
