//! Tracking controls for a target profile trajectory.
//!
//! The target's body velocity is expanded in the generator set, each
//! coefficient `c_i(t, σ)` is fitted by `ρ₁·Σ u_{i,p}(t) p(σ)` over monomials
//! of bounded degree, and the extended ensemble is simulated with the fit.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::ensemble::{
    integrate_ensemble, profile_sup_distance, ControlSignal, Drift, EnsembleSystem, Input, Profile, Trajectory,
};
use crate::error::{Error, Result};
use crate::grid::{MonomialDictionary, ParamGrid, ParametrizationSet};
use crate::lie::{AlgebraElement, GroupElement};
use crate::linalg::{self, c};
use crate::structure::GeneratorSet;

type Generator = Arc<dyn Fn(f64, f64) -> GroupElement + Send + Sync>;

/// Profiles sampled on a uniform time grid, optionally with the exact map
/// `(t, σ) ↦ ĝ_σ(t)` they came from.
#[derive(Clone)]
pub struct TargetTrajectory {
    times: Vec<f64>,
    profiles: Vec<Profile>,
    generator: Option<Generator>,
}

impl fmt::Debug for TargetTrajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetTrajectory")
            .field("times", &self.times)
            .field("profiles", &self.profiles.len())
            .field("generator", &self.generator.is_some())
            .finish()
    }
}

impl TargetTrajectory {
    pub fn new(times: Vec<f64>, profiles: Vec<Profile>) -> Result<Self> {
        if times.is_empty() || times.len() != profiles.len() {
            return Err(Error::InvalidInput("target needs one profile per time sample".into()));
        }
        if let Some(&dt) = times.get(1).map(|t1| t1 - times[0]).as_ref() {
            if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt || w[1] <= w[0]) {
                return Err(Error::InvalidInput("target time grid must be uniform".into()));
            }
        }
        let grid = profiles[0].grid();
        if profiles.iter().any(|p| p.grid().as_ref() != grid.as_ref()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            times,
            profiles,
            generator: None,
        })
    }

    /// Samples `f(t, σ)` at `t_k = k·dt` on every grid node.
    pub fn from_fn(
        grid: Arc<ParamGrid>,
        t_final: f64,
        dt: f64,
        f: impl Fn(f64, f64) -> GroupElement + Send + Sync + 'static,
    ) -> Result<Self> {
        let steps = crate::ensemble::step_count(t_final, dt)?;
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        let profiles = times
            .iter()
            .map(|&t| Profile::from_fn(grid.clone(), |s| f(t, s)))
            .collect::<Result<Vec<_>>>()?;
        let mut target = Self::new(times, profiles)?;
        target.generator = Some(Arc::new(f));
        Ok(target)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn profiles(&self) -> &[Profile] {
        &self.profiles
    }

    pub fn grid(&self) -> &Arc<ParamGrid> {
        self.profiles[0].grid()
    }

    pub fn initial(&self) -> &Profile {
        &self.profiles[0]
    }

    pub fn dt(&self) -> Option<f64> {
        self.times.get(1).map(|t| t - self.times[0])
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    /// Exact target at `t` when a generator is attached.
    pub fn exact(&self, t: f64) -> Option<Result<Profile>> {
        self.generator
            .as_ref()
            .map(|f| Profile::from_fn(self.grid().clone(), |s| f(t, s)))
    }
}

/// `c_i(t_k, σ_q)` at interval midpoints `t_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientField {
    times: Vec<f64>,
    /// `[i][k][q]`.
    values: Vec<Vec<Vec<f64>>>,
    max_residual: f64,
}

impl CoefficientField {
    pub fn new(times: Vec<f64>, values: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        for per_i in &values {
            if per_i.len() != times.len() {
                return Err(Error::DimensionMismatch {
                    expected: times.len(),
                    found: per_i.len(),
                });
            }
        }
        if values.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("coefficient field has non-finite entries".into()));
        }
        Ok(Self {
            times,
            values,
            max_residual: 0.0,
        })
    }

    /// Samples `f(i, t, σ)` for generators `0..m` at the given times and nodes.
    pub fn from_fn(m: usize, times: Vec<f64>, grid: &ParamGrid, f: impl Fn(usize, f64, f64) -> f64) -> Result<Self> {
        let values = (0..m)
            .map(|i| {
                times
                    .iter()
                    .map(|&t| grid.nodes().iter().map(|&s| f(i, t, s)).collect())
                    .collect()
            })
            .collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<Vec<f64>>] {
        &self.values
    }

    pub fn get(&self, i: usize, k: usize, q: usize) -> f64 {
        self.values[i][k][q]
    }

    pub fn generators(&self) -> usize {
        self.values.len()
    }

    /// Largest relative frame reconstruction residual.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameOptions {
    /// Relative tolerance on `‖V − Σ c_i X_i‖_F / ‖V‖_F`.
    pub tol_frame: f64,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self { tol_frame: 1e-8 }
    }
}

/// Minimum-norm least-squares solve via SVD; returns the pseudo-inverse
/// and the numerical rank.
fn pseudo_inverse(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut pinv = DMatrix::zeros(m.ncols(), m.nrows());
    let mut rank = 0;
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > rel_tol * smax {
            rank += 1;
            pinv += vt.row(k).transpose() * u.column(k).transpose() / *s;
        }
    }
    (pinv, rank)
}

pub fn extract_coefficients(target: &TargetTrajectory, drift: &Drift, set: &GeneratorSet) -> Result<CoefficientField> {
    extract_coefficients_with(target, drift, set, &FrameOptions::default())
}

/// Body velocity `V = log(g_k⁻¹ g_{k+1})/Δt − Z(σ)` on each interval,
/// expanded as `Σ c_i X_i` by minimum-norm least squares.
pub fn extract_coefficients_with(
    target: &TargetTrajectory,
    drift: &Drift,
    set: &GeneratorSet,
    opts: &FrameOptions,
) -> Result<CoefficientField> {
    let desc = set.descriptor();
    let dim = desc.dim();
    if set.span_rank()? < dim {
        return Err(Error::SpanDeficient {
            rank: set.span_rank()?,
            dim,
        });
    }
    let m = set.len();
    let mut frame = DMatrix::zeros(dim, m);
    for (i, x) in set.elements().iter().enumerate() {
        frame.set_column(i, &desc.coords(x)?);
    }
    let (pinv, _) = pseudo_inverse(&frame, 1e-12);

    let intervals = target.times().len() - 1;
    let nodes = target.grid().len();
    let mut values = vec![vec![vec![0.0; nodes]; intervals]; m];
    let mut times = Vec::with_capacity(intervals);
    let mut max_residual: f64 = 0.0;
    for k in 0..intervals {
        let dt = target.times()[k + 1] - target.times()[k];
        times.push(0.5 * (target.times()[k] + target.times()[k + 1]));
        let (p0, p1) = (&target.profiles()[k], &target.profiles()[k + 1]);
        for q in 0..nodes {
            let rel = p0.states()[q].inverse().compose(&p1.states()[q])?;
            let log = linalg::logm(rel.matrix())?;
            let log_norm = linalg::frobenius(&log);
            if log_norm >= std::f64::consts::FRAC_PI_2 {
                return Err(Error::LogBranch(format!(
                    "step displacement has log norm {log_norm:.3} ≥ π/2 at interval {k}, node {q}; refine the time grid"
                )));
            }
            let mut v = log * c(1.0 / dt);
            if let Some(z) = drift.at(q) {
                v -= z.matrix();
            }
            let v = AlgebraElement::from_raw(set.family(), v);
            let coeffs = &pinv * desc.coords(&v)?;
            let rebuilt = AlgebraElement::linear_combination(coeffs.as_slice(), set.elements())?;
            let residual = linalg::frobenius(&(v.matrix() - rebuilt.matrix())) / v.norm().max(1.0);
            if residual > opts.tol_frame {
                return Err(Error::FrameResidual {
                    residual,
                    tol: opts.tol_frame,
                    time: k,
                    node: q,
                });
            }
            max_residual = max_residual.max(residual);
            for i in 0..m {
                values[i][k][q] = coeffs[i];
            }
        }
    }
    let mut field = CoefficientField::new(times, values)?;
    field.max_residual = max_residual;
    Ok(field)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub signal: ControlSignal,
    /// `max |ρ₁·fit − c_i|` over generators, times and nodes.
    pub delta: f64,
    pub rank: usize,
    pub warnings: Vec<String>,
}

/// Least-squares fit of `ρ₁⁻¹ c_i(t, ·)` over monomials of degree `≤ K`,
/// multiplied back by `ρ₁` so every control monomial has degree in `[1, K+1]`.
pub fn fit_monomials(cf: &CoefficientField, ps: &ParametrizationSet, grid: &ParamGrid, k: u32) -> Result<FitResult> {
    let d = ps.designated();
    let base = MonomialDictionary::graded(ps.len(), 0, k);
    let rho = ps.table(grid);
    if let Some(q) = rho.iter().position(|r| !(r[d].abs() > 1e-12)) {
        return Err(Error::InvalidInput(format!(
            "designated parametrization vanishes at node {q} (σ = {})",
            grid.nodes()[q]
        )));
    }
    let nodes = grid.len();
    let mut design = DMatrix::from_fn(nodes, base.len(), |q, p| base.monomials()[p].eval(&rho[q]));
    let scales: Vec<f64> = (0..base.len())
        .map(|p| {
            let n = design.column(p).norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();
    for (p, s) in scales.iter().enumerate() {
        design.column_mut(p).scale_mut(1.0 / s);
    }
    let (pinv, rank) = pseudo_inverse(&design, 1e-13);
    let mut warnings = Vec::new();
    if rank < base.len() {
        warnings.push(format!(
            "design matrix has rank {rank} < {} monomials on {nodes} nodes; truncated SVD solve",
            base.len()
        ));
    }
    let dict = MonomialDictionary::from_monomials(ps.len(), base.monomials().iter().map(|m| m.times(d)).collect())?;

    let m = cf.generators();
    let steps = cf.times().len();
    let mut coefficients = vec![vec![vec![0.0; steps.max(1)]; dict.len()]; m];
    let mut delta: f64 = 0.0;
    for i in 0..m {
        for t in 0..steps {
            let y = DVector::from_fn(nodes, |q, _| cf.get(i, t, q) / rho[q][d]);
            let u = &pinv * &y;
            for p in 0..dict.len() {
                coefficients[i][p][t] = u[p] / scales[p];
            }
            let fitted = &design * &u;
            for q in 0..nodes {
                delta = delta.max((fitted[q] * rho[q][d] - cf.get(i, t, q)).abs());
            }
        }
    }
    let times = if steps == 0 { vec![0.0] } else { cf.times().to_vec() };
    Ok(FitResult {
        signal: ControlSignal::new(times, dict, coefficients)?,
        delta,
        rank,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct TrackingResult {
    pub trajectory: Trajectory,
    /// `max_t max_q ‖g_q(t) − ĝ_q(t)‖_F`.
    pub epsilon: f64,
}

/// Simulates the extended ensemble from the target's initial profile and
/// measures the sup distance to the target. With an exact generator the
/// comparison runs at every simulation time; otherwise at the target's
/// sample times, which must be multiples of `dt`.
pub fn track_extended(
    sys: &EnsembleSystem,
    signal: &ControlSignal,
    t_final: f64,
    dt: f64,
    target: &TargetTrajectory,
) -> Result<TrackingResult> {
    let init = target.initial();
    let trajectory = integrate_ensemble(sys, init, &Input::Signal(signal.clone()), t_final, dt)?;
    let mut epsilon: f64 = 0.0;
    if target.generator.is_some() {
        for (t, p) in trajectory.times().iter().zip(trajectory.profiles()) {
            let exact = target.exact(*t).expect("generator present")?;
            epsilon = epsilon.max(profile_sup_distance(p, &exact)?);
        }
    } else {
        for (t, p) in target.times().iter().zip(target.profiles()) {
            if *t > t_final + 1e-12 {
                break;
            }
            let k = (t / dt).round() as usize;
            if ((k as f64) * dt - t).abs() > 1e-9 * dt.max(1.0) {
                return Err(Error::InvalidInput("target samples are not on the simulation grid".into()));
            }
            epsilon = epsilon.max(profile_sup_distance(&trajectory.profiles()[k], p)?);
        }
    }
    Ok(TrackingResult { trajectory, epsilon })
}

#[derive(Debug, Clone)]
pub struct StudyScenario {
    pub system: EnsembleSystem,
    pub target: TargetTrajectory,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    #[serde(rename = "K")]
    pub k: u32,
    pub delta: f64,
    pub epsilon: f64,
    /// Wall time of fit plus tracking; excluded from deterministic artifacts.
    pub seconds: f64,
    pub warnings: Vec<String>,
}

/// One row per degree, sorted by `K`.
pub fn convergence_study(scenario: &StudyScenario, degrees: &[u32]) -> Result<Vec<StudyRow>> {
    let sys = &scenario.system;
    let field = extract_coefficients(&scenario.target, sys.drift(), sys.generators())?;
    let mut degrees = degrees.to_vec();
    degrees.sort_unstable();
    degrees.dedup();
    let t_final = scenario.target.horizon();
    degrees
        .into_iter()
        .map(|k| {
            let start = Instant::now();
            let fit = fit_monomials(&field, sys.params(), sys.grid(), k)?;
            let track = track_extended(sys, &fit.signal, t_final, scenario.dt, &scenario.target)?;
            Ok(StudyRow {
                k,
                delta: fit.delta,
                epsilon: track.epsilon,
                seconds: start.elapsed().as_secs_f64(),
                warnings: fit.warnings,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, QuadratureRule};
    use crate::lie::{group_exp, Family};
    use crate::structure::{catalog_set, Variant};

    fn setup(q: usize) -> (Arc<ParamGrid>, GeneratorSet, ParametrizationSet) {
        (
            Arc::new(build_grid(1.0, 2.0, q, QuadratureRule::UniformTrapezoid).unwrap()),
            catalog_set(Family::So, 3, Variant::Standard).unwrap(),
            ParametrizationSet::parse(&["sigma"]).unwrap(),
        )
    }

    #[test]
    fn constant_flow_gives_constant_coefficients() {
        let (grid, set, _) = setup(3);
        let x1 = set.elements()[0].clone();
        let target = TargetTrajectory::from_fn(grid, 0.1, 0.01, move |t, _| group_exp(&x1.scale(t))).unwrap();
        let cf = extract_coefficients(&target, &Drift::zero(), &set).unwrap();
        for k in 0..cf.times().len() {
            for q in 0..3 {
                assert!((cf.get(0, k, q) - 1.0).abs() < 1e-8);
                assert!(cf.get(1, k, q).abs() < 1e-8);
                assert!(cf.get(2, k, q).abs() < 1e-8);
            }
        }
        assert!((cf.times()[0] - 0.005).abs() < 1e-15);
    }

    #[test]
    fn stationary_target_gives_zero() {
        let (grid, set, _) = setup(4);
        let target = TargetTrajectory::from_fn(grid, 0.05, 0.01, |_, _| GroupElement::identity(Family::So, 3)).unwrap();
        let cf = extract_coefficients(&target, &Drift::zero(), &set).unwrap();
        assert!(cf.values().iter().flatten().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn large_steps_leave_the_principal_branch() {
        let (grid, set, _) = setup(2);
        let x1 = set.elements()[0].clone();
        let target = TargetTrajectory::from_fn(grid, 2.0, 1.0, move |t, _| group_exp(&x1.scale(2.0 * t))).unwrap();
        assert!(matches!(
            extract_coefficients(&target, &Drift::zero(), &set),
            Err(Error::LogBranch(_))
        ));
    }

    #[test]
    fn exact_fit_of_sigma() {
        let (grid, _, ps) = setup(5);
        let cf = CoefficientField::from_fn(1, vec![0.0, 1.0], &grid, |_, _, s| s).unwrap();
        let fit = fit_monomials(&cf, &ps, &grid, 0).unwrap();
        assert!(fit.delta <= 1e-12);
        assert_eq!(fit.signal.dictionary().monomials()[0].0, vec![1]);
        assert!((fit.signal.coefficients()[0][0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_columns_warn() {
        let grid = Arc::new(build_grid(1.0, 2.0, 2, QuadratureRule::UniformTrapezoid).unwrap());
        let ps = ParametrizationSet::parse(&["sigma"]).unwrap();
        let cf = CoefficientField::from_fn(1, vec![0.0], &grid, |_, _, s| s.sin()).unwrap();
        let fit = fit_monomials(&cf, &ps, &grid, 4).unwrap();
        assert_eq!(fit.rank, 2);
        assert_eq!(fit.warnings.len(), 1);
    }

    #[test]
    fn zero_horizon_tracks_exactly() {
        let (grid, set, ps) = setup(3);
        let sys = EnsembleSystem::new(grid.clone(), set.clone(), ps.clone(), Drift::zero()).unwrap();
        let target = TargetTrajectory::from_fn(grid.clone(), 0.0, 0.01, |_, _| GroupElement::identity(Family::So, 3)).unwrap();
        let cf = extract_coefficients(&target, &Drift::zero(), &set).unwrap();
        let fit = fit_monomials(&cf, &ps, &grid, 2).unwrap();
        let tr = track_extended(&sys, &fit.signal, 0.0, 0.01, &target).unwrap();
        assert_eq!(tr.epsilon, 0.0);
    }
}
