//! Distinguished and pre-distinguished generator sets.
//!
//! A finite spanning set `{Xᵢ}` is distinguished when every bracket
//! `[Xᵢ, Xⱼ]` is a real multiple `λ X_k` of a member, and every member is
//! reached with some nonzero `λ`. The checks here are numerical: equality up
//! to scale is decided by a relative Frobenius residual.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{bracket, elementary, AlgebraDescriptor, AlgebraElement, Family};
use crate::linalg::{self, c, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// so(3): `Xᵢ = e_j e_kᵀ − e_k e_jᵀ` with `(i, j, k)` cyclic; so(n), n ≥ 4: `Ω_ij`.
    Standard,
    /// so(n): `Ω_ij = e_i e_jᵀ − e_j e_iᵀ`, `i < j`.
    Omega,
    /// sl(2,ℝ): `{H, X, Y}`.
    A,
    /// sl(2,ℝ): `{H', X', Y'}`.
    APrime,
    /// sl(n,ℝ) split form: `H_ij` for `i < j` and every `E_ij`, `i ≠ j`.
    Chevalley,
    /// su(2): `{iσ₁, iσ₂, iσ₃}`.
    Pauli,
    /// su(n): `Y_ij = E_ij − E_ji`, `Z_ij = i(E_ij + E_ji)` over positive roots.
    /// Pre-distinguished, not spanning.
    Compact,
    /// su(n): the compact pairs together with `i(E_ii − E_jj)`, `i < j`.
    CompactFull,
}

impl Variant {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "standard" => Variant::Standard,
            "omega" => Variant::Omega,
            "A" | "a" => Variant::A,
            "A'" | "a'" | "a-prime" | "A-prime" => Variant::APrime,
            "chevalley" | "split" => Variant::Chevalley,
            "pauli" => Variant::Pauli,
            "compact" => Variant::Compact,
            "compact-full" => Variant::CompactFull,
            other => return Err(Error::Unsupported(format!("unknown variant '{other}'"))),
        })
    }

    /// Whether the catalog set is expected to be distinguished itself or
    /// only pre-distinguished.
    pub fn is_pre_distinguished_only(self) -> bool {
        matches!(self, Variant::Compact)
    }
}

/// Ordered family of nonzero algebra elements of one family and size.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    elements: Vec<AlgebraElement>,
    labels: Vec<String>,
    descriptor: AlgebraDescriptor,
}

impl GeneratorSet {
    pub fn new(elements: Vec<AlgebraElement>, labels: Vec<String>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidInput("generator set is empty".into()))?;
        if labels.len() != elements.len() {
            return Err(Error::DimensionMismatch {
                expected: elements.len(),
                found: labels.len(),
            });
        }
        let (family, n) = (first.family(), first.n());
        for x in &elements {
            if x.family() != family {
                return Err(Error::FamilyMismatch {
                    left: family.algebra_name(n),
                    right: x.family().algebra_name(x.n()),
                });
            }
            if x.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: x.n(),
                });
            }
            if x.is_zero(0.0) {
                return Err(Error::InvalidInput("generator set contains the zero matrix".into()));
            }
        }
        let descriptor = AlgebraDescriptor::new(family, n)?;
        Ok(Self {
            elements,
            labels,
            descriptor,
        })
    }

    pub fn family(&self) -> Family {
        self.descriptor.family()
    }

    pub fn n(&self) -> usize {
        self.descriptor.n()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[AlgebraElement] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> Result<&AlgebraElement> {
        self.elements.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.elements.len(),
        })
    }

    pub fn descriptor(&self) -> &AlgebraDescriptor {
        &self.descriptor
    }

    /// Subset by index, preserving order and labels.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut els = Vec::new();
        let mut labels = Vec::new();
        for &i in indices {
            els.push(self.get(i)?.clone());
            labels.push(self.labels[i].clone());
        }
        Self::new(els, labels)
    }

    /// Every element multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(
            self.elements.iter().map(|x| x.scale(s)).collect(),
            self.labels.clone(),
        )
    }

    /// Rank of the `B_θ`-Gram matrix of the set.
    pub fn span_rank(&self) -> Result<usize> {
        let gram = self.descriptor.gram(&self.elements)?;
        Ok(linalg::real_rank(&gram, 1e-10).0)
    }
}

fn e(n: usize, i: usize, j: usize) -> CMat {
    elementary(n, i, j)
}

fn real_set(family: Family, mats: Vec<(String, CMat)>) -> Result<GeneratorSet> {
    let (labels, els): (Vec<_>, Vec<_>) = mats.into_iter().unzip();
    let els = els
        .into_iter()
        .map(|m| AlgebraElement::new(family, m))
        .collect::<Result<Vec<_>>>()?;
    GeneratorSet::new(els, labels)
}

/// Catalog of distinguished (and pre-distinguished) sets.
///
/// | family | n | variant | size |
/// |---|---|---|---|
/// | so | ≥ 3 | standard, omega | n(n−1)/2 |
/// | sl | 2 | A, A' | 3 |
/// | sl | ≥ 2 | chevalley | 3n(n−1)/2 |
/// | su | 2 | pauli | 3 |
/// | su | ≥ 2 | compact | n(n−1) |
/// | su | ≥ 2 | compact-full | 3n(n−1)/2 |
pub fn catalog_set(family: Family, n: usize, variant: Variant) -> Result<GeneratorSet> {
    family.check_n(n)?;
    let unsupported = || {
        Error::Unsupported(format!(
            "{} has no catalog variant {:?}",
            family.algebra_name(n),
            variant
        ))
    };
    let iu = Complex64::new(0.0, 1.0);
    match (family, variant) {
        (Family::So, Variant::Standard) if n == 3 => real_set(
            family,
            (0..3)
                .map(|i| {
                    let (j, k) = [(1, 2), (2, 0), (0, 1)][i];
                    (format!("X{}", i + 1), e(3, j, k) - e(3, k, j))
                })
                .collect(),
        ),
        (Family::So, Variant::Standard) | (Family::So, Variant::Omega) => {
            let mut mats = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    mats.push((format!("O{}{}", i + 1, j + 1), e(n, i, j) - e(n, j, i)));
                }
            }
            real_set(family, mats)
        }
        (Family::Sl, Variant::A) if n == 2 => real_set(
            family,
            vec![
                ("H".into(), e(2, 0, 0) - e(2, 1, 1)),
                ("X".into(), e(2, 0, 1)),
                ("Y".into(), e(2, 1, 0)),
            ],
        ),
        (Family::Sl, Variant::APrime) if n == 2 => real_set(
            family,
            vec![
                ("H'".into(), e(2, 0, 0) - e(2, 1, 1)),
                ("X'".into(), e(2, 0, 1) + e(2, 1, 0)),
                ("Y'".into(), e(2, 0, 1) - e(2, 1, 0)),
            ],
        ),
        (Family::Sl, Variant::Chevalley) => {
            let mut mats = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    mats.push((format!("H{}{}", i + 1, j + 1), e(n, i, i) - e(n, j, j)));
                }
            }
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        mats.push((format!("E{}{}", i + 1, j + 1), e(n, i, j)));
                    }
                }
            }
            real_set(family, mats)
        }
        (Family::Su, Variant::Pauli) if n == 2 => real_set(
            family,
            vec![
                ("is1".into(), (e(2, 0, 1) + e(2, 1, 0)) * iu),
                ("is2".into(), e(2, 0, 1) - e(2, 1, 0)),
                ("is3".into(), (e(2, 0, 0) - e(2, 1, 1)) * iu),
            ],
        ),
        (Family::Su, Variant::Compact) | (Family::Su, Variant::CompactFull) => {
            let mut mats = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    mats.push((format!("Y{}{}", i + 1, j + 1), e(n, i, j) - e(n, j, i)));
                    mats.push((format!("Z{}{}", i + 1, j + 1), (e(n, i, j) + e(n, j, i)) * iu));
                }
            }
            if variant == Variant::CompactFull {
                for i in 0..n {
                    for j in (i + 1)..n {
                        mats.push((format!("iH{}{}", i + 1, j + 1), (e(n, i, i) - e(n, j, j)) * iu));
                    }
                }
            }
            real_set(family, mats)
        }
        _ => Err(unsupported()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BracketEntry {
    Zero,
    Scaled { k: usize, lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketRow {
    pub i: usize,
    pub j: usize,
    #[serde(flatten)]
    pub entry: BracketEntry,
    pub residual: f64,
}

/// `(i, j) → λ X_k` or zero, for every ordered pair of a generator set.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketTable {
    size: usize,
    entries: BTreeMap<(usize, usize), BracketEntry>,
    residuals: BTreeMap<(usize, usize), f64>,
}

impl BracketTable {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> Option<BracketEntry> {
        self.entries.get(&(i, j)).copied()
    }

    pub fn residual(&self, i: usize, j: usize) -> Option<f64> {
        self.residuals.get(&(i, j)).copied()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.values().cloned().fold(0.0, f64::max)
    }

    pub fn rows(&self) -> Vec<BracketRow> {
        self.entries
            .iter()
            .map(|(&(i, j), &entry)| BracketRow {
                i,
                j,
                entry,
                residual: self.residuals[&(i, j)],
            })
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), BracketEntry)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }
}

impl Serialize for BracketTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

/// Best `λ X_k` approximation of `target` among `candidates`: the smallest
/// index whose relative residual is within `tol`, if any. Also returns the
/// smallest residual seen.
fn match_scaled(target: &CMat, candidates: &[AlgebraElement], tol: f64) -> (Option<(usize, f64, f64)>, f64) {
    let norm = linalg::frobenius(target);
    let mut best = f64::INFINITY;
    for (k, x) in candidates.iter().enumerate() {
        let xx = x.frobenius_inner(x);
        let lambda = linalg::frobenius_inner(target, x.matrix()) / xx;
        let residual = linalg::frobenius(&(target - x.matrix() * c(lambda))) / norm;
        best = best.min(residual);
        if residual <= tol {
            return (Some((k, lambda, residual)), best);
        }
    }
    (None, best)
}

/// Checks the distinguished-set axioms: spanning, closure up to scaling,
/// and that every member is a nonzero multiple of some bracket.
pub fn verify_distinguished(set: &GeneratorSet, tol_closure: f64) -> Result<BracketTable> {
    let dim = set.descriptor().dim();
    let rank = set.span_rank()?;
    if rank < dim {
        return Err(Error::SpanDeficient { rank, dim });
    }
    let els = set.elements();
    let m = els.len();
    let mut entries = BTreeMap::new();
    let mut residuals = BTreeMap::new();
    for i in 0..m {
        entries.insert((i, i), BracketEntry::Zero);
        residuals.insert((i, i), 0.0);
        for j in (i + 1)..m {
            let b = bracket(&els[i], &els[j])?;
            let scale = els[i].norm().max(els[j].norm()).powi(2);
            let bnorm = b.norm();
            if bnorm <= tol_closure * scale {
                let r = bnorm / scale;
                entries.insert((i, j), BracketEntry::Zero);
                entries.insert((j, i), BracketEntry::Zero);
                residuals.insert((i, j), r);
                residuals.insert((j, i), r);
                continue;
            }
            match match_scaled(b.matrix(), els, tol_closure) {
                (Some((k, lambda, r)), _) => {
                    entries.insert((i, j), BracketEntry::Scaled { k, lambda });
                    entries.insert((j, i), BracketEntry::Scaled { k, lambda: -lambda });
                    residuals.insert((i, j), r);
                    residuals.insert((j, i), r);
                }
                (None, best) => return Err(Error::ClosureFailure { i, j, residual: best }),
            }
        }
    }
    for k in 0..m {
        let hit = entries.values().any(|e| match e {
            BracketEntry::Scaled { k: kk, lambda } => *kk == k && lambda.abs() > tol_closure,
            BracketEntry::Zero => false,
        });
        if !hit {
            return Err(Error::SurjectivityFailure { k });
        }
    }
    Ok(BracketTable {
        size: m,
        entries,
        residuals,
    })
}

/// Unit Frobenius norm, with the first entry above `tol` made positive
/// (its real part if that is nonzero, otherwise its imaginary part).
fn canonical(x: &AlgebraElement, tol: f64) -> AlgebraElement {
    let mut u = x.scale(1.0 / x.norm());
    // column-major scan is fine: any fixed order gives a stable identity
    if let Some(z) = u.matrix().iter().find(|z| z.norm() > tol) {
        let lead = if z.re.abs() > tol { z.re } else { z.im };
        if lead < 0.0 {
            u = u.scale(-1.0);
        }
    }
    u
}

fn cosine(a: &AlgebraElement, b: &AlgebraElement) -> f64 {
    a.frobenius_inner(b) / (a.norm() * b.norm())
}

/// Projective representatives of all Lie products generated by a set.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectiveClosure {
    #[serde(skip)]
    representatives: Vec<AlgebraElement>,
    labels: Vec<String>,
    /// For each representative, the depths at which a Lie product parallel
    /// to it occurs.
    depth_found: Vec<BTreeSet<usize>>,
    /// Number of new representatives discovered at each depth.
    new_per_depth: Vec<usize>,
    max_depth: usize,
    finite: bool,
}

impl ProjectiveClosure {
    pub fn representatives(&self) -> &[AlgebraElement] {
        &self.representatives
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    pub fn depth_found(&self) -> &[BTreeSet<usize>] {
        &self.depth_found
    }

    pub fn new_per_depth(&self) -> &[usize] {
        &self.new_per_depth
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn is_finite(&self) -> bool {
        self.finite
    }

    /// Last depth at which a new representative appeared.
    pub fn stabilization_depth(&self) -> usize {
        self.new_per_depth
            .iter()
            .rposition(|&c| c > 0)
            .unwrap_or(0)
    }

    /// Representatives as a generator set (labels describe how each was found).
    pub fn as_generator_set(&self) -> Result<GeneratorSet> {
        GeneratorSet::new(self.representatives.clone(), self.labels.clone())
    }
}

/// Breadth-first Lie closure by depth.
///
/// Depth-k products are brackets `[u, v]` with `dep u + dep v = k − 1`.
/// Since brackets are bilinear, only the projective class of each factor
/// matters, so the products at each depth are tracked as sets of
/// representative indices. The safety cap defaults to ten times the algebra
/// dimension.
pub fn lie_closure(set: &GeneratorSet, max_depth: usize, tol_proj: f64) -> Result<ProjectiveClosure> {
    lie_closure_with_cap(set, max_depth, tol_proj, 10 * set.descriptor().dim())
}

pub fn lie_closure_with_cap(
    set: &GeneratorSet,
    max_depth: usize,
    tol_proj: f64,
    cap: usize,
) -> Result<ProjectiveClosure> {
    if max_depth < 1 {
        return Err(Error::InvalidInput("max_depth must be at least 1".into()));
    }
    let mut reps: Vec<AlgebraElement> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut depth_found: Vec<BTreeSet<usize>> = Vec::new();
    let mut levels: Vec<BTreeSet<usize>> = Vec::new();
    let mut new_per_depth = Vec::new();

    let insert = |x: &AlgebraElement,
                      label: String,
                      depth: usize,
                      reps: &mut Vec<AlgebraElement>,
                      labels: &mut Vec<String>,
                      depth_found: &mut Vec<BTreeSet<usize>>|
     -> (usize, bool) {
        for (idx, r) in reps.iter().enumerate() {
            if cosine(x, r).abs() >= 1.0 - tol_proj {
                depth_found[idx].insert(depth);
                return (idx, false);
            }
        }
        reps.push(canonical(x, 1e-12));
        labels.push(label);
        depth_found.push(BTreeSet::from([depth]));
        (reps.len() - 1, true)
    };

    let mut level0 = BTreeSet::new();
    let mut fresh = 0;
    for (x, l) in set.elements().iter().zip(set.labels()) {
        let (idx, new) = insert(x, l.clone(), 0, &mut reps, &mut labels, &mut depth_found);
        level0.insert(idx);
        fresh += new as usize;
    }
    levels.push(level0);
    new_per_depth.push(fresh);

    for depth in 1..=max_depth {
        let mut level = BTreeSet::new();
        let mut fresh = 0;
        for a in 0..depth {
            let b = depth - 1 - a;
            if a > b {
                break;
            }
            let left: Vec<usize> = levels[a].iter().copied().collect();
            let right: Vec<usize> = levels[b].iter().copied().collect();
            for &u in &left {
                for &v in &right {
                    if a == b && v <= u {
                        continue;
                    }
                    let prod = bracket(&reps[u], &reps[v])?;
                    if prod.norm() <= tol_proj {
                        continue;
                    }
                    let label = format!("[{},{}]", labels[u], labels[v]);
                    let (idx, new) = insert(&prod, label, depth, &mut reps, &mut labels, &mut depth_found);
                    level.insert(idx);
                    fresh += new as usize;
                    if reps.len() > cap {
                        return Err(Error::ClosureOverflow { cap, depth });
                    }
                }
            }
        }
        levels.push(level);
        new_per_depth.push(fresh);
    }

    let tail_start = max_depth.saturating_sub(1).max(1);
    let finite = new_per_depth[tail_start..].iter().all(|&c| c == 0);
    Ok(ProjectiveClosure {
        representatives: reps,
        labels,
        depth_found,
        new_per_depth,
        max_depth,
        finite,
    })
}

/// Runs the Lie closure, then checks that its representatives form a
/// distinguished set.
pub fn verify_pre_distinguished(
    set: &GeneratorSet,
    max_depth: usize,
    tol_proj: f64,
    tol_closure: f64,
) -> Result<(ProjectiveClosure, BracketTable)> {
    let closure = lie_closure(set, max_depth, tol_proj)?;
    if !closure.is_finite() {
        return Err(Error::ClosureNotStable { depth: max_depth });
    }
    let table = verify_distinguished(&closure.as_generator_set()?, tol_closure)?;
    Ok((closure, table))
}

/// Depths at which one element of `F̄` reappears among the Lie products of `F`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndicatorSequence {
    pub index: usize,
    pub label: String,
    pub depths: BTreeSet<usize>,
    /// `(δ₀, δ)` with `{δ₀ + Nδ} ⊆ depths` over the horizon, if found.
    pub pattern: Option<(usize, usize)>,
    pub max_depth: usize,
}

/// Smallest `(δ, δ₀)` in lexicographic order, `δ ∈ [1, 4]`, such that every
/// `δ₀ + Nδ ≤ max_depth` lies in `depths`. At least two terms must fit in
/// the horizon.
pub fn detect_arithmetic_pattern(depths: &BTreeSet<usize>, max_depth: usize) -> Option<(usize, usize)> {
    for delta in 1..=4 {
        for start in 0..=max_depth {
            if start + delta > max_depth {
                break;
            }
            if (start..=max_depth).step_by(delta).all(|d| depths.contains(&d)) {
                return Some((start, delta));
            }
        }
    }
    None
}

pub fn indicator_sequences(
    generators: &GeneratorSet,
    target: &GeneratorSet,
    max_depth: usize,
    tol_proj: f64,
) -> Result<Vec<IndicatorSequence>> {
    let closure = lie_closure(generators, max_depth, tol_proj)?;
    let mut depths: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); target.len()];
    for (rep, found) in closure.representatives().iter().zip(closure.depth_found()) {
        let idx = target
            .elements()
            .iter()
            .position(|t| cosine(rep, t).abs() >= 1.0 - tol_proj)
            .ok_or_else(|| {
                Error::InvalidInput("target set does not projectively contain the closure".into())
            })?;
        depths[idx].extend(found.iter().copied());
    }
    Ok(depths
        .into_iter()
        .enumerate()
        .map(|(index, depths)| IndicatorSequence {
            index,
            label: target.labels()[index].clone(),
            pattern: detect_arithmetic_pattern(&depths, max_depth),
            depths,
            max_depth,
        })
        .collect())
}
