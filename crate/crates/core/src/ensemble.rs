//! Broadcast-controlled ensembles on a σ-grid.
//!
//! Every node follows `ġ = g·A(t, σ_q)` with
//! `A = Z(σ_q) + Σ u_{i,s}(t) ρ_s(σ_q) X_i` (or `Σ u_{i,p}(t) p(σ_q) X_i` for
//! extended signals). Steps use fourth-order Runge–Kutta–Munthe-Kaas with
//! the increment exponentiated once; the state is never projected back onto
//! the group.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{phi_matrix, CoefficientFamily};
use crate::error::{Error, Result};
use crate::grid::{MonomialDictionary, ParamGrid, ParametrizationSet};
use crate::lie::{AlgebraElement, Family, GroupElement, Tolerances};
use crate::linalg::{self, c, CMat};
use crate::structure::GeneratorSet;

/// Which side the algebra element multiplies: `ġ = gA` or `ġ = Ag`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Truncated `dexp⁻¹` suitable for fourth order.
///
/// Left (`g = g₀ exp Ω`): `A + ½[Ω,A]_M + 1/12 [Ω,[Ω,A]_M]_M`.
/// Right (`g = exp Ω g₀`): `A − ½[Ω,A]_M + 1/12 [Ω,[Ω,A]_M]_M`.
fn dexpinv(omega: &CMat, a: &CMat, side: Side) -> CMat {
    let c1 = linalg::commutator(omega, a);
    let c2 = linalg::commutator(omega, &c1);
    let half = match side {
        Side::Left => 0.5,
        Side::Right => -0.5,
    };
    a + c1 * c(half) + c2 * c(1.0 / 12.0)
}

/// One RKMK4 increment `Θ` over `[t, t + dt]` for a state-independent
/// generator `A(t)`.
pub fn rkmk4_increment(a: impl Fn(f64) -> CMat, t: f64, dt: f64, side: Side) -> CMat {
    let a1 = a(t);
    let a2 = a(t + 0.5 * dt);
    let a4 = a(t + dt);
    let k1 = a1;
    let k2 = dexpinv(&(&k1 * c(0.5 * dt)), &a2, side);
    let k3 = dexpinv(&(&k2 * c(0.5 * dt)), &a2, side);
    let k4 = dexpinv(&(&k3 * c(dt)), &a4, side);
    (k1 + (k2 + k3) * c(2.0) + k4) * c(dt / 6.0)
}

fn apply(g: &CMat, theta: &CMat, side: Side) -> CMat {
    match side {
        Side::Left => g * linalg::expm(theta),
        Side::Right => linalg::expm(theta) * g,
    }
}

/// Number of steps when `dt` divides `t_final`.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidInput(format!("horizon must be non-negative, got {t_final}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let k = (t_final / dt).round();
    if (k * dt - t_final).abs() > 1e-12 * t_final.max(1.0) {
        return Err(Error::InvalidInput(format!("dt = {dt} does not divide T = {t_final}")));
    }
    Ok(k as usize)
}

/// Integrates a single flow `ġ = gA(t)` (or `Ag`) from `g₀` over `[0, T]`.
pub fn integrate_flow(
    g0: &GroupElement,
    a: impl Fn(f64) -> CMat,
    t_final: f64,
    dt: f64,
    side: Side,
) -> Result<GroupElement> {
    let steps = step_count(t_final, dt)?;
    let mut g = g0.matrix().clone();
    for k in 0..steps {
        let theta = rkmk4_increment(&a, k as f64 * dt, dt, side);
        g = apply(&g, &theta, side);
    }
    Ok(GroupElement::from_raw(g0.family(), g))
}

/// States of every ensemble member at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    grid: Arc<ParamGrid>,
    states: Vec<GroupElement>,
}

impl Profile {
    pub fn new(grid: Arc<ParamGrid>, states: Vec<GroupElement>) -> Result<Self> {
        if states.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: states.len(),
            });
        }
        let first = states
            .first()
            .ok_or_else(|| Error::InvalidInput("profile has no states".into()))?;
        let (family, n) = (first.family(), first.n());
        let tol = Tolerances::default().grp;
        for g in &states {
            if g.family() != family || g.n() != n {
                return Err(Error::FamilyMismatch {
                    left: family.group_name(n),
                    right: g.family().group_name(g.n()),
                });
            }
            let defect = g.constraint_defect();
            if defect > tol {
                return Err(Error::NotInGroup {
                    group: family.group_name(n),
                    defect,
                });
            }
        }
        Ok(Self { grid, states })
    }

    pub(crate) fn from_raw(grid: Arc<ParamGrid>, states: Vec<GroupElement>) -> Self {
        Self { grid, states }
    }

    pub fn constant(grid: Arc<ParamGrid>, g: &GroupElement) -> Self {
        let states = vec![g.clone(); grid.len()];
        Self { grid, states }
    }

    pub fn from_fn(grid: Arc<ParamGrid>, f: impl Fn(f64) -> GroupElement) -> Result<Self> {
        let states = grid.nodes().iter().map(|&s| f(s)).collect();
        Self::new(grid, states)
    }

    pub fn grid(&self) -> &Arc<ParamGrid> {
        &self.grid
    }

    pub fn states(&self) -> &[GroupElement] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn family(&self) -> Family {
        self.states[0].family()
    }

    pub fn n(&self) -> usize {
        self.states[0].n()
    }

    /// Node-wise right translation `g_q ↦ g_q·z`.
    pub fn right_translate(&self, z: &GroupElement) -> Result<Self> {
        let states = self
            .states
            .iter()
            .map(|g| g.compose(z))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_raw(self.grid.clone(), states))
    }

    pub fn max_constraint_defect(&self) -> f64 {
        self.states
            .iter()
            .map(GroupElement::constraint_defect)
            .fold(0.0, f64::max)
    }
}

/// Left-invariant drift `g·Z(σ_q)`, zero by default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Drift(Option<Vec<AlgebraElement>>);

impl Drift {
    pub fn zero() -> Self {
        Self(None)
    }

    pub fn per_node(elements: Vec<AlgebraElement>) -> Self {
        Self(Some(elements))
    }

    pub fn from_fn(grid: &ParamGrid, f: impl Fn(f64) -> AlgebraElement) -> Self {
        Self(Some(grid.nodes().iter().map(|&s| f(s)).collect()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_none()
    }

    pub fn at(&self, q: usize) -> Option<&AlgebraElement> {
        self.0.as_ref().map(|v| &v[q])
    }

    fn len(&self) -> Option<usize> {
        self.0.as_ref().map(Vec::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Generator index.
    pub i: usize,
    /// Parametrization index.
    pub s: usize,
    pub nu: f64,
    /// Segment end; the segment covers `(t_prev, t_end]`.
    pub t_end: f64,
}

/// At most one active `(i, s)` channel at a time, constant on each segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstantInput {
    segments: Vec<Segment>,
}

impl PiecewiseConstantInput {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let mut prev = 0.0;
        for seg in &segments {
            if !(seg.t_end > prev) || !seg.nu.is_finite() {
                return Err(Error::InvalidInput("switching times must be strictly increasing and positive".into()));
            }
            prev = seg.t_end;
        }
        Ok(Self { segments })
    }

    /// `ν` on channel `(i, s)` over `[0, T]`.
    pub fn constant(i: usize, s: usize, nu: f64, t_final: f64) -> Result<Self> {
        Self::new(vec![Segment { i, s, nu, t_end: t_final }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn end_time(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t_end)
    }

    /// Active segment at `t`, or `None` past the final switching time.
    pub fn segment_at(&self, t: f64) -> Option<&Segment> {
        self.segments.iter().find(|seg| t <= seg.t_end)
    }
}

/// Extended control: per generator `i` and monomial `p`, samples
/// `u_{i,p}(t_k)`, interpolated linearly in time and held constant outside
/// the sampled range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    times: Vec<f64>,
    dictionary: MonomialDictionary,
    /// `[i][p][k]`.
    coefficients: Vec<Vec<Vec<f64>>>,
}

impl ControlSignal {
    pub fn new(times: Vec<f64>, dictionary: MonomialDictionary, coefficients: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidInput("control signal has no time samples".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("control sample times must increase".into()));
        }
        for per_i in &coefficients {
            if per_i.len() != dictionary.len() {
                return Err(Error::DimensionMismatch {
                    expected: dictionary.len(),
                    found: per_i.len(),
                });
            }
            for series in per_i {
                if series.len() != times.len() {
                    return Err(Error::DimensionMismatch {
                        expected: times.len(),
                        found: series.len(),
                    });
                }
            }
        }
        Ok(Self {
            times,
            dictionary,
            coefficients,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dictionary(&self) -> &MonomialDictionary {
        &self.dictionary
    }

    pub fn coefficients(&self) -> &[Vec<Vec<f64>>] {
        &self.coefficients
    }

    pub fn generators(&self) -> usize {
        self.coefficients.len()
    }

    /// Interpolation bracket `(k, weight of k+1)` for time `t`.
    fn locate(&self, t: f64) -> (usize, f64) {
        let ts = &self.times;
        if t <= ts[0] || ts.len() == 1 {
            return (0, 0.0);
        }
        let last = ts.len() - 1;
        if t >= ts[last] {
            return (last, 0.0);
        }
        let k = ts.partition_point(|&x| x <= t) - 1;
        (k, (t - ts[k]) / (ts[k + 1] - ts[k]))
    }

    pub fn value(&self, i: usize, p: usize, t: f64) -> f64 {
        let (k, w) = self.locate(t);
        let s = &self.coefficients[i][p];
        if w == 0.0 {
            s[k]
        } else {
            (1.0 - w) * s[k] + w * s[k + 1]
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: Self = serde_json::from_str(s)?;
        Self::new(raw.times, raw.dictionary, raw.coefficients)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Zero,
    Piecewise(PiecewiseConstantInput),
    Signal(ControlSignal),
}

/// Grid, generators, parametrization and drift of one ensemble.
#[derive(Debug, Clone)]
pub struct EnsembleSystem {
    grid: Arc<ParamGrid>,
    generators: GeneratorSet,
    params: ParametrizationSet,
    drift: Drift,
    rho: Vec<Vec<f64>>,
}

impl EnsembleSystem {
    pub fn new(grid: Arc<ParamGrid>, generators: GeneratorSet, params: ParametrizationSet, drift: Drift) -> Result<Self> {
        if let Some(len) = drift.len() {
            if len != grid.len() {
                return Err(Error::DimensionMismatch {
                    expected: grid.len(),
                    found: len,
                });
            }
        }
        let rho = params.table(&grid);
        if rho.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("a parametrization function is not finite on the grid".into()));
        }
        Ok(Self {
            grid,
            generators,
            params,
            drift,
            rho,
        })
    }

    pub fn grid(&self) -> &Arc<ParamGrid> {
        &self.grid
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.generators
    }

    pub fn params(&self) -> &ParametrizationSet {
        &self.params
    }

    pub fn drift(&self) -> &Drift {
        &self.drift
    }

    pub(crate) fn check_input(&self, input: &Input) -> Result<Option<Vec<Vec<f64>>>> {
        let m = self.generators.len();
        match input {
            Input::Zero => Ok(None),
            Input::Piecewise(pc) => {
                for seg in pc.segments() {
                    if seg.i >= m {
                        return Err(Error::IndexOutOfRange { index: seg.i, len: m });
                    }
                    if seg.s >= self.params.len() {
                        return Err(Error::IndexOutOfRange {
                            index: seg.s,
                            len: self.params.len(),
                        });
                    }
                }
                Ok(None)
            }
            Input::Signal(sig) => {
                if sig.generators() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        found: sig.generators(),
                    });
                }
                sig.dictionary().evaluate(&self.params, &self.grid).map(Some)
            }
        }
    }

    /// `A(t, σ_q)`. Piecewise inputs pick their segment at `t_mid`, the
    /// midpoint of the current step, so a switch aligned with the step grid
    /// is never straddled by a stage.
    pub(crate) fn generator(&self, input: &Input, mono: Option<&Vec<Vec<f64>>>, q: usize, t: f64, t_mid: f64) -> CMat {
        let n = self.generators.n();
        let mut a = match self.drift.at(q) {
            Some(z) => z.matrix().clone(),
            None => CMat::zeros(n, n),
        };
        let xs = self.generators.elements();
        match input {
            Input::Zero => {}
            Input::Piecewise(pc) => {
                if let Some(seg) = pc.segment_at(t_mid) {
                    a += xs[seg.i].matrix() * c(seg.nu * self.rho[q][seg.s]);
                }
            }
            Input::Signal(sig) => {
                let pv = &mono.expect("monomial values computed for signals")[q];
                for (i, x) in xs.iter().enumerate() {
                    let coeff: f64 = pv.iter().enumerate().map(|(p, v)| sig.value(i, p, t) * v).sum();
                    if coeff != 0.0 {
                        a += x.matrix() * c(coeff);
                    }
                }
            }
        }
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub side: Side,
    pub tol_grp: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            side: Side::Left,
            tol_grp: Tolerances::default().grp,
        }
    }
}

/// Profiles at `t_k = k·dt`, `k = 0..=steps`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    profiles: Vec<Profile>,
    max_defect: f64,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn profiles(&self) -> &[Profile] {
        &self.profiles
    }

    pub fn last(&self) -> &Profile {
        self.profiles.last().expect("trajectory is never empty")
    }

    /// Largest group-constraint defect over all states.
    pub fn max_defect(&self) -> f64 {
        self.max_defect
    }
}

pub fn integrate_ensemble(sys: &EnsembleSystem, init: &Profile, input: &Input, t_final: f64, dt: f64) -> Result<Trajectory> {
    integrate_ensemble_with(sys, init, input, t_final, dt, &IntegratorOptions::default())
}

pub fn integrate_ensemble_with(
    sys: &EnsembleSystem,
    init: &Profile,
    input: &Input,
    t_final: f64,
    dt: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    if init.grid().as_ref() != sys.grid().as_ref() {
        return Err(Error::GridMismatch);
    }
    if init.family() != sys.generators().family() || init.n() != sys.generators().n() {
        return Err(Error::FamilyMismatch {
            left: sys.generators().family().group_name(sys.generators().n()),
            right: init.family().group_name(init.n()),
        });
    }
    let steps = step_count(t_final, dt)?;
    let mono = sys.check_input(input)?;
    let abort = 100.0 * opts.tol_grp;
    let family = init.family();

    let per_node: Vec<(Vec<CMat>, f64)> = (0..init.len())
        .into_par_iter()
        .map(|q| {
            let mut g = init.states()[q].matrix().clone();
            let mut series = Vec::with_capacity(steps + 1);
            series.push(g.clone());
            let mut worst: f64 = 0.0;
            for k in 0..steps {
                let t0 = k as f64 * dt;
                let t_mid = t0 + 0.5 * dt;
                let theta = rkmk4_increment(|t| sys.generator(input, mono.as_ref(), q, t, t_mid), t0, dt, opts.side);
                g = apply(&g, &theta, opts.side);
                let defect = GroupElement::from_raw(family, g.clone()).constraint_defect();
                worst = worst.max(defect);
                if defect > abort {
                    return Err(Error::InvariantViolation {
                        node: q,
                        time: (k + 1) as f64 * dt,
                        defect,
                    });
                }
                series.push(g.clone());
            }
            Ok((series, worst))
        })
        .collect::<Result<Vec<_>>>()?;

    let max_defect = per_node.iter().map(|(_, w)| *w).fold(0.0, f64::max);
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let profiles = (0..=steps)
        .map(|k| {
            Profile::from_raw(
                init.grid().clone(),
                per_node
                    .iter()
                    .map(|(series, _)| GroupElement::from_raw(family, series[k].clone()))
                    .collect(),
            )
        })
        .collect();
    Ok(Trajectory {
        times,
        profiles,
        max_defect,
    })
}

/// `y^{ij} = Σ_q w_q φ^{ij}(g_q)`, summed in node order.
pub fn ensemble_output(profile: &Profile, fam: &CoefficientFamily) -> Result<DMatrix<f64>> {
    let m = fam.len();
    let phis = profile
        .states()
        .par_iter()
        .map(|g| phi_matrix(fam, g))
        .collect::<Result<Vec<_>>>()?;
    let mut y = DMatrix::zeros(m, m);
    for (w, phi) in profile.grid().weights().iter().zip(&phis) {
        y += phi * *w;
    }
    Ok(y)
}

/// Outputs at every time of a trajectory.
pub fn output_series(traj: &Trajectory, fam: &CoefficientFamily) -> Result<Vec<DMatrix<f64>>> {
    traj.profiles().iter().map(|p| ensemble_output(p, fam)).collect()
}

/// `max_q ‖g_q − g′_q‖_F`.
pub fn profile_sup_distance(p1: &Profile, p2: &Profile) -> Result<f64> {
    if p1.grid().as_ref() != p2.grid().as_ref() || p1.len() != p2.len() {
        return Err(Error::GridMismatch);
    }
    Ok(p1
        .states()
        .iter()
        .zip(p2.states())
        .map(|(a, b)| a.distance(b))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Orientation;
    use crate::grid::{build_grid, QuadratureRule};
    use crate::lie::group_exp;
    use crate::structure::{catalog_set, Variant};

    fn so3_system(q: usize) -> EnsembleSystem {
        let grid = Arc::new(build_grid(1.0, 2.0, q, QuadratureRule::UniformTrapezoid).unwrap());
        EnsembleSystem::new(
            grid,
            catalog_set(Family::So, 3, Variant::Standard).unwrap(),
            ParametrizationSet::parse(&["sigma"]).unwrap(),
            Drift::zero(),
        )
        .unwrap()
    }

    #[test]
    fn zero_input_is_stationary() {
        let sys = so3_system(3);
        let g0 = group_exp(&sys.generators().elements()[0].scale(0.3));
        let init = Profile::constant(sys.grid().clone(), &g0);
        let traj = integrate_ensemble(&sys, &init, &Input::Zero, 0.5, 0.1).unwrap();
        assert_eq!(traj.profiles().len(), 6);
        assert_eq!(traj.last(), &init);
    }

    #[test]
    fn constant_input_matches_exponential() {
        let sys = so3_system(4);
        let init = Profile::constant(sys.grid().clone(), &GroupElement::identity(Family::So, 3));
        let input = Input::Piecewise(PiecewiseConstantInput::constant(1, 0, 0.7, 1.0).unwrap());
        let traj = integrate_ensemble(&sys, &init, &input, 1.0, 0.01).unwrap();
        for (q, s) in sys.grid().nodes().iter().enumerate() {
            let exact = group_exp(&sys.generators().elements()[1].scale(0.7 * s));
            assert!(traj.last().states()[q].distance(&exact) < 1e-12);
        }
    }

    #[test]
    fn piecewise_input_composes_flows() {
        let sys = so3_system(3);
        let init = Profile::constant(sys.grid().clone(), &GroupElement::identity(Family::So, 3));
        let pc = PiecewiseConstantInput::new(vec![
            Segment { i: 0, s: 0, nu: 1.3, t_end: 0.4 },
            Segment { i: 2, s: 0, nu: -0.8, t_end: 1.0 },
        ])
        .unwrap();
        let traj = integrate_ensemble(&sys, &init, &Input::Piecewise(pc), 1.0, 0.01).unwrap();
        let xs = sys.generators().elements();
        for (q, s) in sys.grid().nodes().iter().enumerate() {
            let exact = group_exp(&xs[0].scale(0.4 * 1.3 * s))
                .compose(&group_exp(&xs[2].scale(0.6 * -0.8 * s)))
                .unwrap();
            assert!(traj.last().states()[q].distance(&exact) < 1e-12);
        }
    }

    #[test]
    fn right_side_flow_multiplies_on_the_left() {
        let x = catalog_set(Family::So, 3, Variant::Standard).unwrap().elements()[0].clone();
        let y = catalog_set(Family::So, 3, Variant::Standard).unwrap().elements()[1].clone();
        let g0 = group_exp(&y);
        let g = integrate_flow(&g0, |_| x.matrix().clone(), 1.0, 0.1, Side::Right).unwrap();
        let exact = group_exp(&x).compose(&g0).unwrap();
        assert!(g.distance(&exact) < 1e-13);
    }

    #[test]
    fn dt_must_divide_horizon() {
        assert!(step_count(1.0, 0.3).is_err());
        assert_eq!(step_count(1.0, 1e-3).unwrap(), 1000);
        assert_eq!(step_count(0.0, 0.1).unwrap(), 0);
    }

    #[test]
    fn output_of_identity_profile() {
        let sys = so3_system(5);
        let init = Profile::constant(sys.grid().clone(), &GroupElement::identity(Family::So, 3));
        let fam = CoefficientFamily::new(sys.generators().clone(), Orientation::Left).unwrap();
        let y = ensemble_output(&init, &fam).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((y[(i, j)] - if i == j { 2.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_node_output() {
        let grid = Arc::new(ParamGrid::custom(0.0, 1.0, vec![0.5], vec![1.0]).unwrap());
        let set = catalog_set(Family::So, 3, Variant::Standard).unwrap();
        let g = group_exp(&set.elements()[2].scale(0.9));
        let p = Profile::constant(grid, &g);
        let fam = CoefficientFamily::new(set, Orientation::Left).unwrap();
        assert_eq!(ensemble_output(&p, &fam).unwrap(), phi_matrix(&fam, &g).unwrap());
    }

    #[test]
    fn signal_round_trips_through_json() {
        let dict = MonomialDictionary::graded(1, 1, 2);
        let sig = ControlSignal::new(vec![0.0, 0.5], dict, vec![vec![vec![1.0, 2.0], vec![0.0, -1.0]]]).unwrap();
        assert_eq!(ControlSignal::from_json(&sig.to_json().unwrap()).unwrap(), sig);
        assert_eq!(sig.value(0, 0, 0.25), 1.5);
        assert_eq!(sig.value(0, 1, 9.0), -1.0);
    }
}
