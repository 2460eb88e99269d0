//! TOML scenario files.

use std::sync::Arc;

use lie_ensemble::coefficients::Orientation;
use lie_ensemble::ensemble::{Drift, EnsembleSystem, Segment};
use lie_ensemble::grid::{build_grid, ParamGrid, ParametrizationSet, QuadratureRule, RhoExpr};
use lie_ensemble::structure::{catalog_set, GeneratorSet, Variant};
use lie_ensemble::Family;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Must match the subcommand when present.
    pub command: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub group: GroupSpec,
    pub grid: Option<GridSpec>,
    pub params: Option<ParamsSpec>,
    #[serde(default)]
    pub tolerances: TolSpec,
    pub verify: Option<VerifySpec>,
    pub closure: Option<ClosureSpec>,
    pub simulate: Option<SimulateSpec>,
    pub synthesize: Option<SynthesizeSpec>,
    pub observe: Option<ObserveSpec>,
    pub sphere: Option<SphereSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub family: String,
    pub n: usize,
    #[serde(default = "default_variant")]
    pub variant: String,
    /// Indices into the catalog set.
    pub subset: Option<Vec<usize>>,
}

fn default_variant() -> String {
    "standard".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub a: f64,
    pub b: f64,
    pub q: usize,
    #[serde(default = "default_rule")]
    pub rule: String,
}

fn default_rule() -> String {
    "trapezoid".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub rho: Vec<String>,
    #[serde(default)]
    pub designated: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolSpec {
    #[serde(default = "d_closure")]
    pub closure: f64,
    #[serde(default = "d_proj")]
    pub proj: f64,
    #[serde(default = "d_rank")]
    pub rank: f64,
    #[serde(default = "d_relation")]
    pub relation: f64,
    #[serde(default = "d_center")]
    pub center: f64,
    #[serde(default = "d_separation")]
    pub separation: f64,
}

fn d_closure() -> f64 {
    1e-10
}
fn d_proj() -> f64 {
    1e-10
}
fn d_rank() -> f64 {
    1e-6
}
fn d_relation() -> f64 {
    1e-10
}
fn d_center() -> f64 {
    1e-12
}
fn d_separation() -> f64 {
    1e-6
}

impl Default for TolSpec {
    fn default() -> Self {
        Self {
            closure: d_closure(),
            proj: d_proj(),
            rank: d_rank(),
            relation: d_relation(),
            center: d_center(),
            separation: d_separation(),
        }
    }
}

impl TolSpec {
    fn check(&self) -> Result<(), CliError> {
        let all = [
            ("closure", self.closure),
            ("proj", self.proj),
            ("rank", self.rank),
            ("relation", self.relation),
            ("center", self.center),
            ("separation", self.separation),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Parse(format!("tolerance '{name}' must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default)]
    pub orientation: OrientationSpec,
    pub scale: Option<f64>,
    #[serde(default = "d_samples")]
    pub n_samples: usize,
    #[serde(default = "d_pairs")]
    pub n_pairs: usize,
    /// Run the Lie closure first and verify its representatives.
    #[serde(default)]
    pub pre_distinguished: bool,
    #[serde(default = "d_depth")]
    pub max_depth: usize,
    /// Skip the matrix-coefficient checks.
    #[serde(default)]
    pub structure_only: bool,
}

fn d_samples() -> usize {
    100
}
fn d_pairs() -> usize {
    200
}
fn d_depth() -> usize {
    4
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum OrientationSpec {
    #[default]
    Left,
    Right,
}

impl From<OrientationSpec> for Orientation {
    fn from(o: OrientationSpec) -> Self {
        match o {
            OrientationSpec::Left => Orientation::Left,
            OrientationSpec::Right => Orientation::Right,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureSpec {
    pub max_depth: usize,
    /// Indices of `F̄` forming the seed set `F`; defaults to all.
    pub from: Option<Vec<usize>>,
    /// Expected number of projective representatives, if checked.
    pub expect_size: Option<usize>,
}

/// `σ ↦ exp(Σ_t p_t(σ) X_{i_t})`, each `p_t` a polynomial in `σ`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    #[serde(default)]
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub generator: usize,
    /// Ascending powers of `σ`.
    pub coefficients: Vec<f64>,
}

impl ProfileSpec {
    /// `[i][d]` rectangle for `m` generators.
    pub fn coefficient_table(&self, m: usize) -> Result<Vec<Vec<f64>>, CliError> {
        let width = self.terms.iter().map(|t| t.coefficients.len()).max().unwrap_or(1).max(1);
        let mut table = vec![vec![0.0; width]; m];
        for t in &self.terms {
            if t.generator >= m {
                return Err(CliError::Parse(format!("profile term uses generator {} of {m}", t.generator)));
            }
            for (d, c) in t.coefficients.iter().enumerate() {
                table[t.generator][d] += c;
            }
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub i: usize,
    #[serde(default)]
    pub s: usize,
    pub nu: f64,
    pub t_end: f64,
}

impl From<&SegmentSpec> for Segment {
    fn from(s: &SegmentSpec) -> Self {
        Segment {
            i: s.i,
            s: s.s,
            nu: s.nu,
            t_end: s.t_end,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSegments {
    pub count: usize,
    #[serde(default = "d_max_nu")]
    pub max_nu: f64,
}

fn d_max_nu() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    pub horizon: f64,
    pub dt: f64,
    #[serde(default)]
    pub initial: ProfileSpec,
    #[serde(default)]
    pub segments: Vec<SegmentSpec>,
    /// Equal-length segments with seeded random channels and amplitudes;
    /// used when `segments` is empty.
    pub random: Option<RandomSegments>,
    #[serde(default)]
    pub orientation: OrientationSpec,
    /// Also simulate from the initial profile right-translated by every
    /// central element and compare outputs.
    #[serde(default)]
    pub center_check: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// `g(t, σ) = exp(t·Σ c_t(σ) X_{i_t})`.
    pub terms: Vec<TargetTerm>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetTerm {
    pub generator: usize,
    pub rho: String,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesizeSpec {
    pub horizon: f64,
    pub dt: f64,
    pub target: TargetSpec,
    pub degrees: Vec<u32>,
    /// Pass thresholds at the largest degree.
    pub delta_max: Option<f64>,
    pub epsilon_max: Option<f64>,
    /// Fill the `seconds` column; makes the study CSV non-reproducible.
    #[serde(default)]
    pub timings: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserveSpec {
    pub k_obs: u32,
    /// Gap above which two moment tables count as different.
    #[serde(default = "d_obs_tol")]
    pub tol: f64,
    pub first: ProfileSpec,
    pub second: Option<ProfileSpec>,
    /// Whether the two profiles should be separated.
    pub expect_separated: Option<bool>,
    pub reconstruct: Option<ReconstructSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructSpec {
    pub k_obs: u32,
    #[serde(default = "d_dmax")]
    pub d_max: usize,
    #[serde(default = "d_seeds")]
    pub seeds: usize,
    #[serde(default = "d_threshold")]
    pub threshold: f64,
    #[serde(default = "d_iter")]
    pub max_iterations: usize,
    /// Bound on the center-resolved sup distance to the first profile.
    pub distance_max: Option<f64>,
}

fn d_obs_tol() -> f64 {
    1e-9
}
fn d_dmax() -> usize {
    1
}
fn d_seeds() -> usize {
    8
}
fn d_threshold() -> f64 {
    1e-9
}
fn d_iter() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereSpec {
    #[serde(default = "d_samples")]
    pub n_samples: usize,
    #[serde(default = "d_sphere_tol")]
    pub tol: f64,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    /// Initial point for every node; defaults to `e₁`.
    pub initial: Option<Vec<f64>>,
    #[serde(default)]
    pub segments: Vec<SegmentSpec>,
    pub random: Option<RandomSegments>,
}

fn d_sphere_tol() -> f64 {
    1e-10
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        s.tolerances.check()?;
        Ok(s)
    }

    pub fn family(&self) -> Result<Family, CliError> {
        Family::parse(&self.group.family).map_err(parse_err)
    }

    pub fn generator_set(&self) -> Result<GeneratorSet, CliError> {
        let family = self.family()?;
        let variant = Variant::parse(&self.group.variant).map_err(parse_err)?;
        let set = catalog_set(family, self.group.n, variant).map_err(parse_err)?;
        match &self.group.subset {
            Some(idx) => set.subset(idx).map_err(parse_err),
            None => Ok(set),
        }
    }

    /// The full catalog set, ignoring `subset`.
    pub fn catalog(&self) -> Result<GeneratorSet, CliError> {
        let family = self.family()?;
        let variant = Variant::parse(&self.group.variant).map_err(parse_err)?;
        catalog_set(family, self.group.n, variant).map_err(parse_err)
    }

    pub fn grid(&self) -> Result<Arc<ParamGrid>, CliError> {
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| CliError::Parse("missing [grid] section".into()))?;
        let rule = QuadratureRule::parse(&g.rule).map_err(parse_err)?;
        Ok(Arc::new(build_grid(g.a, g.b, g.q, rule).map_err(parse_err)?))
    }

    pub fn params(&self) -> Result<ParametrizationSet, CliError> {
        let p = self
            .params
            .as_ref()
            .ok_or_else(|| CliError::Parse("missing [params] section".into()))?;
        let exprs = p
            .rho
            .iter()
            .map(|s| s.parse::<RhoExpr>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(parse_err)?;
        ParametrizationSet::new(exprs, p.designated).map_err(parse_err)
    }

    pub fn system(&self) -> Result<EnsembleSystem, CliError> {
        EnsembleSystem::new(self.grid()?, self.generator_set()?, self.params()?, Drift::zero()).map_err(parse_err)
    }

    pub fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        value
            .as_ref()
            .ok_or_else(|| CliError::Parse(format!("missing [{name}] section")))
    }
}

pub fn parse_err(e: lie_ensemble::Error) -> CliError {
    CliError::Parse(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario() {
        let s = Scenario::parse("[group]\nfamily = \"so\"\nn = 3\n").unwrap();
        assert_eq!(s.seed, 0);
        assert_eq!(s.generator_set().unwrap().len(), 3);
        assert!(s.grid().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Scenario::parse("[group]\nfamily = \"so\"\nn = 3\ncolour = 1\n").is_err());
    }

    #[test]
    fn nonpositive_tolerance_is_rejected() {
        let text = "[group]\nfamily = \"so\"\nn = 3\n[tolerances]\nclosure = 0.0\n";
        assert!(matches!(Scenario::parse(text), Err(CliError::Parse(_))));
    }

    #[test]
    fn profile_table_pads_terms() {
        let p = ProfileSpec {
            terms: vec![
                TermSpec {
                    generator: 2,
                    coefficients: vec![-1.0, 1.0],
                },
                TermSpec {
                    generator: 0,
                    coefficients: vec![0.5],
                },
            ],
        };
        assert_eq!(p.coefficient_table(3).unwrap(), vec![vec![0.5, 0.0], vec![0.0, 0.0], vec![-1.0, 1.0]]);
        assert!(p.coefficient_table(2).is_err());
    }
}
