//! Moment fingerprints `∫ φ^{ij}(x_σ) p(σ) dσ` of a profile, separation
//! tests between profiles, and profile reconstruction from moments.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::{centrality_defect, center_elements, phi_matrix, CoefficientFamily};
use crate::ensemble::{profile_sup_distance, Profile};
use crate::error::{Error, Result};
use crate::grid::{Monomial, MonomialDictionary, ParamGrid, ParametrizationSet};
use crate::lie::{group_exp, AlgebraElement, GroupElement};
use crate::sampling;
use crate::structure::GeneratorSet;

/// Rows are pairs `(i, j)` in row-major order, columns monomials of degree
/// `0..=K` in graded-lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    size: usize,
    monomials: MonomialDictionary,
    values: DMatrix<f64>,
}

impl MomentTable {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn monomials(&self) -> &MonomialDictionary {
        &self.monomials
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize, p: usize) -> f64 {
        self.values[(i * self.size + j, p)]
    }

    /// Column of the empty monomial as an `m × m` matrix.
    pub fn degree_zero(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |i, j| self.get(i, j, 0))
    }

    /// `(i, j, exponents, value)` rows, monomial-major.
    pub fn rows(&self) -> Vec<(usize, usize, &Monomial, f64)> {
        let mut out = Vec::new();
        for (p, mono) in self.monomials.monomials().iter().enumerate() {
            for i in 0..self.size {
                for j in 0..self.size {
                    out.push((i, j, mono, self.get(i, j, p)));
                }
            }
        }
        out
    }
}

fn check_designated(ps: &ParametrizationSet, grid: &ParamGrid) -> Result<()> {
    let d = ps.designated();
    for (q, &s) in grid.nodes().iter().enumerate() {
        if !(ps.eval(d, s)?.abs() > 1e-12) {
            return Err(Error::InvalidInput(format!("designated parametrization vanishes at node {q}")));
        }
    }
    Ok(())
}

pub fn moment_table(profile: &Profile, fam: &CoefficientFamily, ps: &ParametrizationSet, k_obs: u32) -> Result<MomentTable> {
    let grid = profile.grid();
    check_designated(ps, grid)?;
    let dict = MonomialDictionary::graded(ps.len(), 0, k_obs);
    let mono = dict.evaluate(ps, grid)?;
    let m = fam.len();
    let phis = profile
        .states()
        .par_iter()
        .map(|g| phi_matrix(fam, g))
        .collect::<Result<Vec<_>>>()?;
    let mut values = DMatrix::zeros(m * m, dict.len());
    for (q, phi) in phis.iter().enumerate() {
        let w = grid.weights()[q];
        for (p, pv) in mono[q].iter().enumerate() {
            let f = w * pv;
            for i in 0..m {
                for j in 0..m {
                    values[(i * m + j, p)] += f * phi[(i, j)];
                }
            }
        }
    }
    Ok(MomentTable {
        size: m,
        monomials: dict,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum SeparationResult {
    Separated {
        i: usize,
        j: usize,
        exponents: Vec<u32>,
        degree: u32,
        gap: f64,
    },
    Indistinguishable {
        k_obs: u32,
        max_gap: f64,
    },
}

impl SeparationResult {
    pub fn is_separated(&self) -> bool {
        matches!(self, SeparationResult::Separated { .. })
    }
}

/// First entry (monomials in graded-lex order, then `(i, j)`) where the two
/// moment tables differ by more than `tol`.
pub fn moment_separation_test(
    p1: &Profile,
    p2: &Profile,
    fam: &CoefficientFamily,
    ps: &ParametrizationSet,
    k_obs: u32,
    tol: f64,
) -> Result<SeparationResult> {
    if p1.grid().as_ref() != p2.grid().as_ref() {
        return Err(Error::GridMismatch);
    }
    let t1 = moment_table(p1, fam, ps, k_obs)?;
    let t2 = moment_table(p2, fam, ps, k_obs)?;
    let m = t1.size();
    let mut max_gap: f64 = 0.0;
    for (p, mono) in t1.monomials().monomials().iter().enumerate() {
        for i in 0..m {
            for j in 0..m {
                let gap = (t1.get(i, j, p) - t2.get(i, j, p)).abs();
                if gap > tol {
                    return Ok(SeparationResult::Separated {
                        i,
                        j,
                        exponents: mono.0.clone(),
                        degree: mono.degree(),
                        gap,
                    });
                }
                max_gap = max_gap.max(gap);
            }
        }
    }
    Ok(SeparationResult::Indistinguishable { k_obs, max_gap })
}

/// `σ ↦ g₀·exp(Σ_{i,d} a_{i,d} σ^d X_i)`.
#[derive(Debug, Clone)]
pub struct ProfileAnsatz {
    base: GroupElement,
    generators: GeneratorSet,
    /// `[i][d]`, `d = 0..=d_max`.
    coefficients: Vec<Vec<f64>>,
}

impl ProfileAnsatz {
    pub fn new(base: GroupElement, generators: GeneratorSet, coefficients: Vec<Vec<f64>>) -> Result<Self> {
        if coefficients.len() != generators.len() {
            return Err(Error::DimensionMismatch {
                expected: generators.len(),
                found: coefficients.len(),
            });
        }
        let width = coefficients.first().map_or(0, Vec::len);
        if width == 0 || coefficients.iter().any(|c| c.len() != width) {
            return Err(Error::InvalidInput("ansatz coefficients must form a non-empty rectangle".into()));
        }
        Ok(Self {
            base,
            generators,
            coefficients,
        })
    }

    pub fn zero(base: GroupElement, generators: GeneratorSet, d_max: usize) -> Self {
        let m = generators.len();
        Self {
            base,
            generators,
            coefficients: vec![vec![0.0; d_max + 1]; m],
        }
    }

    pub fn d_max(&self) -> usize {
        self.coefficients[0].len() - 1
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    pub fn base(&self) -> &GroupElement {
        &self.base
    }

    fn params(&self) -> Vec<f64> {
        self.coefficients.iter().flatten().copied().collect()
    }

    fn with_params(&self, x: &[f64]) -> Self {
        let w = self.d_max() + 1;
        Self {
            base: self.base.clone(),
            generators: self.generators.clone(),
            coefficients: x.chunks(w).map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn eval(&self, sigma: f64) -> Result<GroupElement> {
        let weights: Vec<f64> = self
            .coefficients
            .iter()
            .map(|a| a.iter().rev().fold(0.0, |acc, c| acc * sigma + c))
            .collect();
        let x = AlgebraElement::linear_combination(&weights, self.generators.elements())?;
        self.base.compose(&group_exp(&x))
    }

    pub fn profile(&self, grid: &std::sync::Arc<ParamGrid>) -> Result<Profile> {
        let states = grid.nodes().iter().map(|&s| self.eval(s)).collect::<Result<Vec<_>>>()?;
        Profile::new(grid.clone(), states)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReconstructionConfig {
    pub d_max: usize,
    pub seeds: usize,
    pub seed: u64,
    /// Success threshold on the Frobenius norm of the table mismatch.
    pub threshold: f64,
    pub max_iterations: usize,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            d_max: 1,
            seeds: 8,
            seed: 0,
            threshold: 1e-9,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attempt {
    pub seed_index: usize,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Reconstruction {
    #[serde(skip)]
    pub ansatz: ProfileAnsatz,
    pub coefficients: Vec<Vec<f64>>,
    pub residual: f64,
    pub seed_index: usize,
    /// `min_z d(estimate·z, truth)` when a truth profile was supplied.
    pub center_resolved_distance: Option<f64>,
    pub attempts: Vec<Attempt>,
}

fn mismatch(
    ansatz: &ProfileAnsatz,
    x: &[f64],
    target: &MomentTable,
    fam: &CoefficientFamily,
    ps: &ParametrizationSet,
    grid: &std::sync::Arc<ParamGrid>,
) -> Result<DVector<f64>> {
    let k = target.monomials().max_degree();
    let table = moment_table(&ansatz.with_params(x).profile(grid)?, fam, ps, k)?;
    Ok(DVector::from_iterator(
        target.values().len(),
        (table.values() - target.values()).iter().copied(),
    ))
}

/// Levenberg–Marquardt with a central-difference Jacobian. Steps are only
/// accepted when they lower the cost.
fn levenberg_marquardt(
    f: impl Fn(&[f64]) -> Result<DVector<f64>>,
    x0: Vec<f64>,
    threshold: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, f64, f64, usize)> {
    let mut x = x0;
    let mut r = f(&x)?;
    let initial = r.norm();
    let mut cost = initial;
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < max_iterations && cost > threshold {
        iterations += 1;
        let p = x.len();
        let mut jac = DMatrix::zeros(r.len(), p);
        for k in 0..p {
            let h = 1e-6 * x[k].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let col = (f(&xp)? - f(&xm)?) / (2.0 * h);
            jac.set_column(k, &col);
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj.clone();
            for k in 0..p {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rn = f(&xn)?;
            let cn = rn.norm();
            if cn < cost {
                x = xn;
                r = rn;
                let small = cost - cn <= 1e-15 * cost;
                cost = cn;
                lambda = (lambda / 3.0).max(1e-12);
                improved = !small;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    Ok((x, initial, cost, iterations))
}

/// Multi-start fit of a single-exponential ansatz to a moment table. Seed 0
/// starts from zero coefficients; the others from ChaCha draws in `[−1, 1]`.
/// The best run wins by `(residual, seed index)`.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_profile(
    target: &MomentTable,
    fam: &CoefficientFamily,
    ps: &ParametrizationSet,
    grid: &std::sync::Arc<ParamGrid>,
    base: &GroupElement,
    cfg: &ReconstructionConfig,
    truth: Option<&Profile>,
) -> Result<Reconstruction> {
    if target.size() != fam.len() {
        return Err(Error::DimensionMismatch {
            expected: fam.len(),
            found: target.size(),
        });
    }
    let template = ProfileAnsatz::zero(base.clone(), fam.base().clone(), cfg.d_max);
    let p = template.params().len();
    let mut rng = sampling::rng(cfg.seed);
    let starts: Vec<Vec<f64>> = (0..cfg.seeds.max(1))
        .map(|s| {
            let draw: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            if s == 0 {
                vec![0.0; p]
            } else {
                draw
            }
        })
        .collect();

    let runs = starts
        .into_par_iter()
        .map(|x0| {
            levenberg_marquardt(
                |x| mismatch(&template, x, target, fam, ps, grid),
                x0,
                cfg.threshold,
                cfg.max_iterations,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let attempts: Vec<Attempt> = runs
        .iter()
        .enumerate()
        .map(|(s, (_, init, fin, it))| Attempt {
            seed_index: s,
            initial_residual: *init,
            final_residual: *fin,
            iterations: *it,
        })
        .collect();
    let (best, _) = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .2.total_cmp(&b.1 .2).then(a.0.cmp(&b.0)))
        .expect("at least one seed");
    let (x, _, residual, _) = &runs[best];
    if *residual > cfg.threshold {
        return Err(Error::ReconstructionFailed {
            residual: *residual,
            threshold: cfg.threshold,
        });
    }
    let ansatz = template.with_params(x);
    let center_resolved_distance = match truth {
        Some(t) => {
            let est = ansatz.profile(grid)?;
            let centers = center_elements(fam.family(), fam.n())?;
            let mut best_d = f64::INFINITY;
            for z in centers.elements() {
                best_d = best_d.min(profile_sup_distance(&est.right_translate(z)?, t)?);
            }
            Some(best_d)
        }
        None => None,
    };
    Ok(Reconstruction {
        coefficients: ansatz.coefficients().to_vec(),
        ansatz,
        residual: *residual,
        seed_index: best,
        center_resolved_distance,
        attempts,
    })
}

/// Node-wise `g_q ↦ g_q·z` for central `z`.
pub fn center_shift_profile(p: &Profile, z: &GroupElement) -> Result<Profile> {
    if z.family() != p.family() || z.n() != p.n() {
        return Err(Error::FamilyMismatch {
            left: p.family().group_name(p.n()),
            right: z.family().group_name(z.n()),
        });
    }
    let defect = centrality_defect(z)?;
    if defect > 1e-12 {
        return Err(Error::NotCentral { defect });
    }
    p.right_translate(z)
}
