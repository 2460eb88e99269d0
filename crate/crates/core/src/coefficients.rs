//! Matrix coefficients of the adjoint representation,
//! `φ^{ij}(g) = c·tr(g X_j g⁻¹ X_i†)`, and numerical checks of the
//! codistinguished axioms.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{bracket, AlgebraElement, Family, GroupElement};
use crate::linalg::{self, c, CMat};
use crate::sampling;
use crate::structure::{BracketEntry, BracketTable, GeneratorSet};

/// Imaginary parts above this are a convention bug, not round-off.
const IMAG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// `φ^{ij}(g) = c·tr(g X_j g⁻¹ X_i†)`, paired with left-invariant fields `gX`.
    Left,
    /// `φ^{ij}(g) = c·tr(g⁻¹ X_j g X_i†)`, paired with right-invariant fields `Xg`.
    Right,
}

#[derive(Debug, Clone)]
pub struct CoefficientFamily {
    base: GeneratorSet,
    orientation: Orientation,
    scale: f64,
}

impl CoefficientFamily {
    pub fn new(base: GeneratorSet, orientation: Orientation) -> Result<Self> {
        Self::with_scale(base, orientation, 1.0)
    }

    pub fn with_scale(base: GeneratorSet, orientation: Orientation, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("coefficient scale must be positive, got {scale}")));
        }
        let dim = base.descriptor().dim();
        let rank = base.span_rank()?;
        if rank < dim {
            return Err(Error::SpanDeficient { rank, dim });
        }
        Ok(Self {
            base,
            orientation,
            scale,
        })
    }

    /// Skips the spanning check; used to exhibit what goes wrong without it.
    pub fn unchecked(base: GeneratorSet, orientation: Orientation, scale: f64) -> Self {
        Self {
            base,
            orientation,
            scale,
        }
    }

    pub fn base(&self) -> &GeneratorSet {
        &self.base
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn family(&self) -> Family {
        self.base.family()
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    fn check_group(&self, g: &GroupElement) -> Result<()> {
        if g.family() != self.family() {
            return Err(Error::FamilyMismatch {
                left: self.family().group_name(self.n()),
                right: g.family().group_name(g.n()),
            });
        }
        if g.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: g.n(),
            });
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange { index: i, len: self.len() });
        }
        Ok(())
    }

    /// `(h, h⁻¹)` with `h = g` (left) or `h = g⁻¹` (right).
    fn conjugator(&self, g: &GroupElement) -> (CMat, CMat) {
        let inv = g.inverse().matrix().clone();
        match self.orientation {
            Orientation::Left => (g.matrix().clone(), inv),
            Orientation::Right => (inv, g.matrix().clone()),
        }
    }

    fn real_part(&self, z: Complex64) -> Result<f64> {
        let v = z * self.scale;
        if v.im.abs() > IMAG_TOL * (1.0 + v.re.abs()) {
            return Err(Error::NonRealTrace(v.im));
        }
        Ok(v.re)
    }

    fn pairing(&self, a: &CMat, i: usize) -> Result<f64> {
        let xi = self.base.elements()[i].matrix();
        self.real_part(a.iter().zip(xi.iter()).map(|(p, q)| p * q.conj()).sum())
    }
}

pub fn phi_eval(fam: &CoefficientFamily, g: &GroupElement, i: usize, j: usize) -> Result<f64> {
    fam.check_group(g)?;
    fam.check_index(i)?;
    fam.check_index(j)?;
    let (h, h_inv) = fam.conjugator(g);
    let ad = &h * fam.base.elements()[j].matrix() * &h_inv;
    fam.pairing(&ad, i)
}

/// All `φ^{ij}(g)` at once, row `i`, column `j`.
pub fn phi_matrix(fam: &CoefficientFamily, g: &GroupElement) -> Result<DMatrix<f64>> {
    fam.check_group(g)?;
    let (h, h_inv) = fam.conjugator(g);
    let m = fam.len();
    let mut out = DMatrix::zeros(m, m);
    for j in 0..m {
        let ad = &h * fam.base.elements()[j].matrix() * &h_inv;
        for i in 0..m {
            out[(i, j)] = fam.pairing(&ad, i)?;
        }
    }
    Ok(out)
}

/// Lie derivative of `φ^{ij}` along `L_X` (left orientation, flow `g·exp(tX)`)
/// or `R_X` (right orientation, flow `exp(tX)·g`).
///
/// Left: `c·tr(g [X_j, X] g⁻¹ X_i†)`. Right: `c·tr(g⁻¹ [X, X_j] g X_i†)`.
pub fn phi_lie_derivative(
    fam: &CoefficientFamily,
    g: &GroupElement,
    x: &AlgebraElement,
    i: usize,
    j: usize,
) -> Result<f64> {
    fam.check_group(g)?;
    fam.check_index(i)?;
    fam.check_index(j)?;
    let xj = &fam.base.elements()[j];
    let inner = match fam.orientation {
        Orientation::Left => bracket(xj, x)?,
        Orientation::Right => bracket(x, xj)?,
    };
    let (h, h_inv) = fam.conjugator(g);
    fam.pairing(&(&h * inner.matrix() * &h_inv), i)
}

/// Finite central subgroup `Z(G)` of a catalog group.
#[derive(Debug, Clone)]
pub struct CenterCatalog {
    family: Family,
    n: usize,
    elements: Vec<GroupElement>,
}

impl CenterCatalog {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    /// `χ = |Z(G)|`.
    pub fn chi(&self) -> usize {
        self.elements.len()
    }

    /// Index of the catalog element closest to `g` when within `tol`.
    pub fn locate(&self, g: &GroupElement, tol: f64) -> Option<usize> {
        self.elements
            .iter()
            .position(|z| linalg::frobenius(&(z.matrix() - g.matrix())) <= tol)
    }
}

/// SU(n): `zI` with `zⁿ = 1`. SO(n) and SL(n,ℝ): `{I}` for odd n, `{±I}` for even n.
pub fn center_elements(family: Family, n: usize) -> Result<CenterCatalog> {
    family.check_n(n)?;
    let scalar = |z: Complex64| GroupElement::from_raw(family, linalg::identity(n) * z);
    let elements = match family {
        Family::Su => (0..n)
            .map(|k| scalar(Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64)))
            .collect(),
        Family::So | Family::Sl => {
            if n % 2 == 0 {
                vec![scalar(c(1.0)), scalar(c(-1.0))]
            } else {
                vec![scalar(c(1.0))]
            }
        }
    };
    Ok(CenterCatalog { family, n, elements })
}

/// Largest `‖zX − Xz‖_F` over the descriptor basis.
pub fn centrality_defect(z: &GroupElement) -> Result<f64> {
    let desc = crate::lie::AlgebraDescriptor::new(z.family(), z.n())?;
    Ok(desc
        .basis()
        .iter()
        .map(|x| linalg::frobenius(&linalg::commutator(z.matrix(), x.matrix())))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodistinguishedConfig {
    pub n_samples: usize,
    pub n_pairs: usize,
    /// Relative singular-value threshold for the one-form rank.
    pub tol_rank: f64,
    /// Structure-relation residual, normalized by the scale `c`.
    pub tol_relation: f64,
    /// Center agreement (relative to `c`).
    pub tol_center: f64,
    /// Minimum `max |Δφ|/c` for non-central pairs.
    pub tol_separation: f64,
    pub seed: u64,
}

impl Default for CodistinguishedConfig {
    fn default() -> Self {
        Self {
            n_samples: 100,
            n_pairs: 200,
            tol_rank: 1e-6,
            tol_relation: 1e-10,
            tol_center: 1e-12,
            tol_separation: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanningVerdict {
    pub pass: bool,
    pub samples: usize,
    pub dim: usize,
    pub min_rank: usize,
    /// Smallest singular value seen, absolute.
    pub min_singular_value: f64,
    /// Smallest ratio of smallest to largest singular value.
    pub min_relative_singular_value: f64,
    pub witness_sample: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationWitness {
    pub sample: usize,
    pub i: usize,
    pub j: usize,
    pub i_prime: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationVerdict {
    pub pass: bool,
    pub samples: usize,
    pub relations_per_sample: usize,
    pub max_residual: f64,
    pub witness: Option<RelationWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationVerdict {
    pub pass: bool,
    pub center_order: usize,
    pub max_center_deviation: f64,
    pub pairs: usize,
    pub noncentral_pairs: usize,
    pub min_noncentral_gap: f64,
    pub witness_pair: Option<usize>,
    /// True when the center is trivial, so separation is full injectivity.
    pub injective: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodistinguishedReport {
    pub algebra: String,
    pub group: String,
    pub orientation: Orientation,
    pub scale: f64,
    pub killing_constant: f64,
    pub spanning: SpanningVerdict,
    pub relations: RelationVerdict,
    pub separation: SeparationVerdict,
    /// "codistinguished" for trivial center, "weakly codistinguished" otherwise,
    /// or "failed".
    pub conclusion: String,
    pub note: String,
}

impl CodistinguishedReport {
    pub fn pass(&self) -> bool {
        self.spanning.pass && self.relations.pass && self.separation.pass
    }
}

fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Differentials `dφ^{ij}` at `g` evaluated on the descriptor basis
/// directions: row `i·m + j`, column = basis index.
pub fn one_form_matrix(fam: &CoefficientFamily, g: &GroupElement) -> Result<DMatrix<f64>> {
    let m = fam.len();
    let desc = fam.base().descriptor();
    let mut forms = DMatrix::zeros(m * m, desc.dim());
    for (b, dir) in desc.basis().iter().enumerate() {
        for i in 0..m {
            for j in 0..m {
                forms[(i * m + j, b)] = phi_lie_derivative(fam, g, dir, i, j)?;
            }
        }
    }
    Ok(forms)
}

struct SampleResult {
    rank: usize,
    smallest: f64,
    relative: f64,
    worst: Option<(f64, usize, usize, usize)>,
    center_dev: f64,
}

fn check_sample(
    fam: &CoefficientFamily,
    table: Option<&BracketTable>,
    centers: &CenterCatalog,
    g: &GroupElement,
    cfg: &CodistinguishedConfig,
) -> Result<SampleResult> {
    let m = fam.len();
    let d = fam.base().descriptor().dim();
    let forms = one_form_matrix(fam, g)?;
    let (rank, smallest, largest) = linalg::real_rank(&forms, cfg.tol_rank);
    let smallest_kept = if forms.nrows() < d { 0.0 } else { smallest };

    let phi = phi_matrix(fam, g)?;
    let sign = match fam.orientation() {
        Orientation::Left => -1.0,
        Orientation::Right => 1.0,
    };
    let mut worst: Option<(f64, usize, usize, usize)> = None;
    for ((i, j), entry) in table.into_iter().flat_map(|t| t.iter()) {
        let xi = &fam.base().elements()[i];
        for ip in 0..m {
            let lhs = phi_lie_derivative(fam, g, xi, ip, j)?;
            let rhs = match entry {
                BracketEntry::Zero => 0.0,
                BracketEntry::Scaled { k, lambda } => sign * lambda * phi[(ip, k)],
            };
            let r = (lhs - rhs).abs() / fam.scale();
            if worst.is_none_or(|w| r > w.0) {
                worst = Some((r, i, j, ip));
            }
        }
    }

    let mut center_dev: f64 = 0.0;
    for z in centers.elements() {
        let shifted = phi_matrix(fam, &g.compose(z)?)?;
        center_dev = center_dev.max((shifted - &phi).abs().max() / fam.scale());
    }

    Ok(SampleResult {
        rank,
        smallest: smallest_kept,
        relative: if largest > 0.0 { smallest_kept / largest } else { 0.0 },
        worst,
        center_dev,
    })
}

fn run_samples(
    fam: &CoefficientFamily,
    table: Option<&BracketTable>,
    centers: &CenterCatalog,
    cfg: &CodistinguishedConfig,
) -> Result<Vec<SampleResult>> {
    let desc = fam.base().descriptor();
    (0..cfg.n_samples)
        .into_par_iter()
        .map(|s| {
            let g = sampling::random_group_element(desc, &mut sample_rng(cfg.seed, s as u64));
            check_sample(fam, table, centers, &g, cfg)
        })
        .collect()
}

fn aggregate_spanning(samples: &[SampleResult], dim: usize, n_samples: usize) -> SpanningVerdict {
    let mut v = SpanningVerdict {
        pass: true,
        samples: n_samples,
        dim,
        min_rank: if n_samples == 0 { 0 } else { usize::MAX },
        min_singular_value: f64::INFINITY,
        min_relative_singular_value: f64::INFINITY,
        witness_sample: None,
    };
    for (s, r) in samples.iter().enumerate() {
        v.min_rank = v.min_rank.min(r.rank);
        v.min_singular_value = v.min_singular_value.min(r.smallest);
        v.min_relative_singular_value = v.min_relative_singular_value.min(r.relative);
        if r.rank < dim && v.witness_sample.is_none() {
            v.pass = false;
            v.witness_sample = Some(s);
        }
    }
    v
}

/// The one-form rank verdict alone; needs no bracket table.
pub fn spanning_verdict(fam: &CoefficientFamily, cfg: &CodistinguishedConfig) -> Result<SpanningVerdict> {
    let centers = center_elements(fam.family(), fam.n())?;
    let samples = run_samples(fam, None, &centers, cfg)?;
    Ok(aggregate_spanning(&samples, fam.base().descriptor().dim(), cfg.n_samples))
}

/// Three verdicts: one-form spanning, structure relations, separation up to
/// the center. Samples are drawn from deterministic per-index streams and
/// aggregated in index order.
pub fn verify_codistinguished(
    fam: &CoefficientFamily,
    table: &BracketTable,
    cfg: &CodistinguishedConfig,
) -> Result<CodistinguishedReport> {
    if table.size() != fam.len() {
        return Err(Error::DimensionMismatch {
            expected: fam.len(),
            found: table.size(),
        });
    }
    let family = fam.family();
    let n = fam.n();
    let desc = fam.base().descriptor();
    let dim = desc.dim();
    let centers = center_elements(family, n)?;

    let samples = run_samples(fam, Some(table), &centers, cfg)?;
    let spanning = aggregate_spanning(&samples, dim, cfg.n_samples);
    let mut relations = RelationVerdict {
        pass: true,
        samples: cfg.n_samples,
        relations_per_sample: table.size() * table.size() * fam.len(),
        max_residual: 0.0,
        witness: None,
    };
    let mut max_center_deviation: f64 = 0.0;
    for (s, r) in samples.iter().enumerate() {
        if let Some((res, i, j, ip)) = r.worst {
            if res > relations.max_residual {
                relations.max_residual = res;
            }
            if res > cfg.tol_relation && relations.witness.is_none() {
                relations.pass = false;
                relations.witness = Some(RelationWitness {
                    sample: s,
                    i,
                    j,
                    i_prime: ip,
                    residual: res,
                });
            }
        }
        max_center_deviation = max_center_deviation.max(r.center_dev);
    }

    let pair_offset = cfg.n_samples as u64;
    let gaps: Vec<Option<f64>> = (0..cfg.n_pairs)
        .into_par_iter()
        .map(|p| {
            let mut rng = sample_rng(cfg.seed, pair_offset + p as u64);
            let g = sampling::random_group_element(desc, &mut rng);
            let h = sampling::random_group_element(desc, &mut rng);
            let rel = g.inverse().compose(&h)?;
            if centers.locate(&rel, 1e-8).is_some() {
                return Ok(None);
            }
            let diff = phi_matrix(fam, &g)? - phi_matrix(fam, &h)?;
            Ok(Some(diff.abs().max() / fam.scale()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut separation = SeparationVerdict {
        pass: max_center_deviation <= cfg.tol_center,
        center_order: centers.chi(),
        max_center_deviation,
        pairs: cfg.n_pairs,
        noncentral_pairs: 0,
        min_noncentral_gap: f64::INFINITY,
        witness_pair: None,
        injective: false,
    };
    for (p, gap) in gaps.iter().enumerate() {
        if let Some(gap) = gap {
            separation.noncentral_pairs += 1;
            separation.min_noncentral_gap = separation.min_noncentral_gap.min(*gap);
            if *gap <= cfg.tol_separation && separation.witness_pair.is_none() {
                separation.pass = false;
                separation.witness_pair = Some(p);
            }
        }
    }
    separation.injective = separation.pass && centers.chi() == 1;

    let mut report = CodistinguishedReport {
        algebra: family.algebra_name(n),
        group: family.group_name(n),
        orientation: fam.orientation(),
        scale: fam.scale(),
        killing_constant: desc.killing_constant(),
        spanning,
        relations,
        separation,
        conclusion: String::new(),
        note: "samples are exponentials of algebra elements and cover the identity component only".into(),
    };
    report.conclusion = if !report.pass() {
        "failed".into()
    } else if centers.chi() == 1 {
        "codistinguished".into()
    } else {
        "weakly codistinguished".into()
    };
    Ok(report)
}
