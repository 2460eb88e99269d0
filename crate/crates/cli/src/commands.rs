//! One runner per subcommand. Runners compute everything in memory; the
//! caller writes the artifacts only after a runner returns.

use std::sync::Arc;

use lie_ensemble::coefficients::{center_elements, CodistinguishedConfig, CoefficientFamily, Orientation};
use lie_ensemble::ensemble::{
    integrate_ensemble_with, output_series, IntegratorOptions, Input, PiecewiseConstantInput, Profile, Segment, Side,
};
use lie_ensemble::grid::{check_separating, ParamGrid, RhoExpr};
use lie_ensemble::homogeneous::{integrate_sphere_ensemble, section, verify_homogeneous_relations, SpherePoint, SphereProfile};
use lie_ensemble::observability::{
    moment_separation_test, moment_table, reconstruct_profile, ProfileAnsatz, ReconstructionConfig, SeparationResult,
};
use lie_ensemble::report::{self, Report};
use lie_ensemble::sampling::rng;
use lie_ensemble::structure::{indicator_sequences, lie_closure, verify_distinguished, verify_pre_distinguished, GeneratorSet};
use lie_ensemble::synthesis::{convergence_study, extract_coefficients, fit_monomials, StudyScenario, TargetTrajectory};
use lie_ensemble::{group_exp, AlgebraElement, GroupElement, Tolerances};
use rand::Rng;
use serde_json::json;

use crate::scenario::{parse_err, ProfileSpec, RandomSegments, Scenario, SegmentSpec};
use crate::CliError;

/// Report plus named file contents.
pub struct Outcome {
    pub report: Report,
    pub files: Vec<(String, String)>,
}

impl Outcome {
    fn new(report: Report) -> Self {
        Self { report, files: Vec::new() }
    }
}

/// Sorts a library error into the exit-code classes. Failed checks become
/// failing verdicts; malformed requests are parse errors.
fn classify<T>(report: &mut Report, name: &str, r: lie_ensemble::Result<T>) -> Result<Option<T>, CliError> {
    use lie_ensemble::Error as E;
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_verification_failure() => {
            report.verdict(name, false, json!({ "error": e.to_string() })).map_err(internal)?;
            Ok(None)
        }
        Err(
            e @ (E::InvalidInput(_)
            | E::IndexOutOfRange { .. }
            | E::DimensionMismatch { .. }
            | E::Unsupported(_)
            | E::InvalidGrid(_)
            | E::FamilyMismatch { .. }
            | E::GridMismatch
            | E::NotInAlgebra { .. }
            | E::NotInGroup { .. }),
        ) => Err(parse_err(e)),
        Err(e) => Err(internal(e)),
    }
}

pub fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

fn profile_from(spec: &ProfileSpec, set: &GeneratorSet, grid: &Arc<ParamGrid>) -> Result<Profile, CliError> {
    let table = spec.coefficient_table(set.len())?;
    let base = GroupElement::identity(set.family(), set.n());
    let ansatz = ProfileAnsatz::new(base, set.clone(), table).map_err(parse_err)?;
    ansatz.profile(grid).map_err(parse_err)
}

fn build_input(
    segments: &[SegmentSpec],
    random: Option<&RandomSegments>,
    horizon: f64,
    m: usize,
    n_params: usize,
    seed: u64,
) -> Result<Input, CliError> {
    if !segments.is_empty() {
        let segs: Vec<Segment> = segments.iter().map(Segment::from).collect();
        return Ok(Input::Piecewise(PiecewiseConstantInput::new(segs).map_err(parse_err)?));
    }
    match random {
        Some(r) if r.count > 0 => {
            let mut g = rng(seed);
            let segs = (0..r.count)
                .map(|k| Segment {
                    i: g.gen_range(0..m),
                    s: g.gen_range(0..n_params),
                    nu: g.gen_range(-r.max_nu..=r.max_nu),
                    t_end: horizon * (k + 1) as f64 / r.count as f64,
                })
                .collect();
            Ok(Input::Piecewise(PiecewiseConstantInput::new(segs).map_err(parse_err)?))
        }
        _ => Ok(Input::Zero),
    }
}

fn spanning_family(set: &GeneratorSet, orientation: Orientation) -> CoefficientFamily {
    CoefficientFamily::new(set.clone(), orientation).unwrap_or_else(|_| CoefficientFamily::unchecked(set.clone(), orientation, 1.0))
}

pub fn verify(sc: &Scenario) -> Result<Outcome, CliError> {
    let spec = sc.verify.clone().unwrap_or_default();
    let tol = &sc.tolerances;
    let set = sc.generator_set()?;
    let mut rep = Report::new("verify");
    rep.result("labels", set.labels()).map_err(internal)?;

    let (set, table) = if spec.pre_distinguished {
        match classify(
            &mut rep,
            "pre_distinguished",
            verify_pre_distinguished(&set, spec.max_depth, tol.proj, tol.closure),
        )? {
            Some((closure, table)) => {
                rep.verdict("pre_distinguished", true, &closure).map_err(internal)?;
                (closure.as_generator_set().map_err(internal)?, Some(table))
            }
            None => (set, None),
        }
    } else {
        let t = classify(&mut rep, "distinguished", verify_distinguished(&set, tol.closure))?;
        if let Some(t) = &t {
            rep.verdict("distinguished", true, json!({ "max_residual": t.max_residual() }))
                .map_err(internal)?;
        }
        (set, t)
    };

    if let Some(table) = &table {
        rep.result("bracket_table", table).map_err(internal)?;
        if !spec.structure_only {
            let cfg = CodistinguishedConfig {
                n_samples: spec.n_samples,
                n_pairs: spec.n_pairs,
                tol_rank: tol.rank,
                tol_relation: tol.relation,
                tol_center: tol.center,
                tol_separation: tol.separation,
                seed: sc.seed,
            };
            let fam = match spec.scale {
                Some(s) => CoefficientFamily::with_scale(set.clone(), spec.orientation.into(), s),
                None => CoefficientFamily::new(set.clone(), spec.orientation.into()),
            };
            if let Some(fam) = classify(&mut rep, "codistinguished", fam)? {
                let r = lie_ensemble::coefficients::verify_codistinguished(&fam, table, &cfg);
                if let Some(r) = classify(&mut rep, "codistinguished", r)? {
                    rep.verdict("codistinguished", r.pass(), &r).map_err(internal)?;
                }
            }
        }
    }

    if sc.grid.is_some() && sc.params.is_some() {
        let grid = sc.grid()?;
        let ps = sc.params()?;
        let plain = check_separating(&ps, &grid, false);
        let squared = check_separating(&ps, &grid, true);
        rep.verdict("parametrization", plain.pass(), json!({ "plain": plain, "squared": squared }))
            .map_err(internal)?;
    }
    Ok(Outcome::new(rep))
}

pub fn closure(sc: &Scenario) -> Result<Outcome, CliError> {
    let spec = sc.section(&sc.closure, "closure")?;
    let tol = &sc.tolerances;
    let full = sc.catalog()?;
    let seed_set = match &spec.from {
        Some(idx) => full.subset(idx).map_err(parse_err)?,
        None => sc.generator_set()?,
    };
    let mut rep = Report::new("closure");
    rep.result("seed_labels", seed_set.labels()).map_err(internal)?;
    let Some(cl) = classify(&mut rep, "closure", lie_closure(&seed_set, spec.max_depth, tol.proj))? else {
        return Ok(Outcome::new(rep));
    };
    rep.result("closure", &cl).map_err(internal)?;
    rep.result("stabilization_depth", cl.stabilization_depth()).map_err(internal)?;
    rep.verdict("finite", cl.is_finite(), json!({ "size": cl.len(), "max_depth": cl.max_depth() }))
        .map_err(internal)?;
    if let Some(expect) = spec.expect_size {
        rep.verdict("size", cl.len() == expect, json!({ "expected": expect, "found": cl.len() }))
            .map_err(internal)?;
    }
    if cl.is_finite() {
        let set = cl.as_generator_set().map_err(internal)?;
        if let Some(t) = classify(&mut rep, "closure_distinguished", verify_distinguished(&set, tol.closure))? {
            rep.verdict("closure_distinguished", true, json!({ "max_residual": t.max_residual() }))
                .map_err(internal)?;
        }
    }
    match indicator_sequences(&seed_set, &full, spec.max_depth, tol.proj) {
        Ok(seqs) => rep.result("indicators", seqs).map_err(internal)?,
        Err(e) => rep.result("indicators_error", e.to_string()).map_err(internal)?,
    }
    Ok(Outcome::new(rep))
}

pub fn simulate(sc: &Scenario) -> Result<Outcome, CliError> {
    let spec = sc.section(&sc.simulate, "simulate")?;
    let sys = sc.system()?;
    let set = sys.generators().clone();
    let init = profile_from(&spec.initial, &set, sys.grid())?;
    let input = build_input(&spec.segments, spec.random.as_ref(), spec.horizon, set.len(), sys.params().len(), sc.seed)?;
    let opts = IntegratorOptions {
        side: match spec.orientation {
            crate::scenario::OrientationSpec::Left => Side::Left,
            crate::scenario::OrientationSpec::Right => Side::Right,
        },
        ..IntegratorOptions::default()
    };
    let mut rep = Report::new("simulate");
    let mut out = Vec::new();
    let traj = integrate_ensemble_with(&sys, &init, &input, spec.horizon, spec.dt, &opts);
    let Some(traj) = classify(&mut rep, "integration", traj)? else {
        return Ok(Outcome::new(rep));
    };
    let tol_grp = Tolerances::default().grp;
    rep.verdict(
        "group_constraint",
        traj.max_defect() <= tol_grp,
        json!({ "max_defect": traj.max_defect(), "tol": tol_grp }),
    )
    .map_err(internal)?;
    if let Input::Piecewise(pc) = &input {
        rep.result("segments", pc.segments()).map_err(internal)?;
    }

    let fam = spanning_family(&set, Orientation::Left);
    let outputs = output_series(&traj, &fam).map_err(internal)?;
    if spec.center_check {
        let centers = center_elements(set.family(), set.n()).map_err(internal)?;
        let mut worst: f64 = 0.0;
        for z in centers.elements() {
            let shifted = init.right_translate(z).map_err(internal)?;
            let t2 = integrate_ensemble_with(&sys, &shifted, &input, spec.horizon, spec.dt, &opts).map_err(internal)?;
            let o2 = output_series(&t2, &fam).map_err(internal)?;
            for (a, b) in outputs.iter().zip(&o2) {
                worst = worst.max((a - b).amax());
            }
        }
        rep.verdict(
            "center_ambiguity",
            worst <= 1e-12,
            json!({ "center_order": centers.chi(), "max_output_difference": worst }),
        )
        .map_err(internal)?;
    }
    let last = outputs.last().expect("trajectory is never empty");
    rep.result("final_output", last.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
        .map_err(internal)?;
    out.push(("trajectory.csv".into(), report::trajectory_csv(&traj).map_err(internal)?));
    out.push(("outputs.csv".into(), report::output_csv(traj.times(), &outputs).map_err(internal)?));
    Ok(Outcome { report: rep, files: out })
}

pub fn synthesize(sc: &Scenario) -> Result<Outcome, CliError> {
    let spec = sc.section(&sc.synthesize, "synthesize")?;
    let sys = sc.system()?;
    let set = sys.generators().clone();
    if spec.degrees.is_empty() {
        return Err(CliError::Parse("synthesize needs at least one degree".into()));
    }
    let mut terms: Vec<(AlgebraElement, RhoExpr, f64)> = Vec::new();
    for t in &spec.target.terms {
        let x = set.get(t.generator).map_err(parse_err)?.clone();
        let rho: RhoExpr = t.rho.parse().map_err(parse_err)?;
        terms.push((x, rho, t.weight));
    }
    let target = TargetTrajectory::from_fn(sys.grid().clone(), spec.horizon, spec.dt, move |t, s| {
        let mut acc = AlgebraElement::zero(terms[0].0.family(), terms[0].0.n());
        for (x, rho, w) in &terms {
            acc = acc.add(&x.scale(t * w * rho.eval(s))).expect("same family");
        }
        group_exp(&acc)
    })
    .map_err(parse_err)?;

    let mut rep = Report::new("synthesize");
    let scenario = StudyScenario {
        system: sys.clone(),
        target: target.clone(),
        dt: spec.dt,
    };
    let Some(rows) = classify(&mut rep, "study", convergence_study(&scenario, &spec.degrees))? else {
        return Ok(Outcome::new(rep));
    };
    let top = rows.last().expect("degrees are non-empty");
    let study: Vec<_> = rows
        .iter()
        .map(|r| json!({ "K": r.k, "delta": r.delta, "epsilon": r.epsilon, "warnings": r.warnings }))
        .collect();
    rep.result("study", study).map_err(internal)?;
    if let Some(d) = spec.delta_max {
        rep.verdict("delta", top.delta <= d, json!({ "K": top.k, "delta": top.delta, "max": d }))
            .map_err(internal)?;
    }
    if let Some(e) = spec.epsilon_max {
        rep.verdict("epsilon", top.epsilon <= e, json!({ "K": top.k, "epsilon": top.epsilon, "max": e }))
            .map_err(internal)?;
    }

    let field = extract_coefficients(&target, sys.drift(), &set).map_err(internal)?;
    let fit = fit_monomials(&field, sys.params(), sys.grid(), top.k).map_err(internal)?;
    let files = vec![
        ("study.csv".to_string(), report::study_csv(&rows, spec.timings).map_err(internal)?),
        ("signal.json".to_string(), report::versioned(&fit.signal).map_err(internal)?),
    ];
    Ok(Outcome { report: rep, files })
}

pub fn observe(sc: &Scenario) -> Result<Outcome, CliError> {
    let spec = sc.section(&sc.observe, "observe")?;
    let set = sc.generator_set()?;
    let grid = sc.grid()?;
    let ps = sc.params()?;
    let fam = CoefficientFamily::new(set.clone(), Orientation::Left).map_err(parse_err)?;
    let p1 = profile_from(&spec.first, &set, &grid)?;
    let mut rep = Report::new("observe");
    let mut files = Vec::new();

    let table = moment_table(&p1, &fam, &ps, spec.k_obs).map_err(parse_err)?;
    files.push(("moments.csv".to_string(), report::moments_csv(&table).map_err(internal)?));

    if let Some(second) = &spec.second {
        let p2 = profile_from(second, &set, &grid)?;
        let res = moment_separation_test(&p1, &p2, &fam, &ps, spec.k_obs, spec.tol).map_err(parse_err)?;
        let detail = match &res {
            SeparationResult::Separated {
                i,
                j,
                exponents,
                degree,
                gap,
            } => json!({ "separated": true, "i": i, "j": j, "exponents": exponents, "degree": degree, "gap": gap }),
            SeparationResult::Indistinguishable { k_obs, max_gap } => {
                json!({ "separated": false, "k_obs": k_obs, "max_gap": max_gap })
            }
        };
        let pass = spec.expect_separated.is_none_or(|e| e == res.is_separated());
        rep.verdict("separation", pass, detail).map_err(internal)?;
    }

    if let Some(r) = &spec.reconstruct {
        let target = moment_table(&p1, &fam, &ps, r.k_obs).map_err(parse_err)?;
        let cfg = ReconstructionConfig {
            d_max: r.d_max,
            seeds: r.seeds,
            seed: sc.seed,
            threshold: r.threshold,
            max_iterations: r.max_iterations,
        };
        let base = GroupElement::identity(set.family(), set.n());
        let res = reconstruct_profile(&target, &fam, &ps, &grid, &base, &cfg, Some(&p1));
        if let Some(rec) = classify(&mut rep, "reconstruction", res)? {
            let dist = rec.center_resolved_distance.unwrap_or(f64::INFINITY);
            let pass = r.distance_max.is_none_or(|m| dist <= m);
            rep.verdict("reconstruction", pass, &rec).map_err(internal)?;
        }
    }
    Ok(Outcome { report: rep, files })
}

pub fn sphere(sc: &Scenario) -> Result<Outcome, CliError> {
    let spec = sc.section(&sc.sphere, "sphere")?;
    let mut rep = Report::new("sphere");
    let mut files = Vec::new();
    let relations = verify_homogeneous_relations(spec.n_samples, spec.tol, sc.seed).map_err(internal)?;
    rep.verdict("relations", relations.pass(), &relations).map_err(internal)?;

    if let (Some(horizon), Some(dt)) = (spec.horizon, spec.dt) {
        let sys = sc.system()?;
        let set = sys.generators().clone();
        let n = set.n();
        let x0 = match &spec.initial {
            Some(v) => SpherePoint::new(v.clone()).map_err(parse_err)?,
            None => SpherePoint::basis(n, 0),
        };
        let init = SphereProfile::constant(sys.grid().clone(), &x0);
        let input = build_input(&spec.segments, spec.random.as_ref(), horizon, set.len(), sys.params().len(), sc.seed)?;
        let Some(traj) = classify(&mut rep, "sphere_integration", integrate_sphere_ensemble(&sys, &init, &input, horizon, dt))?
        else {
            return Ok(Outcome { report: rep, files });
        };
        rep.verdict(
            "norm",
            traj.max_norm_defect() <= lie_ensemble::homogeneous::SPHERE_NORM_TOL,
            json!({ "max_norm_defect": traj.max_norm_defect() }),
        )
        .map_err(internal)?;

        let g0 = Profile::constant(sys.grid().clone(), &section(&x0));
        let opts = IntegratorOptions {
            side: Side::Right,
            ..IntegratorOptions::default()
        };
        let group = integrate_ensemble_with(&sys, &g0, &input, horizon, dt, &opts).map_err(internal)?;
        let mut worst: f64 = 0.0;
        for (gp, sp) in group.profiles().iter().zip(traj.profiles()) {
            for (g, x) in gp.states().iter().zip(sp.points()) {
                let col = g.matrix().column(0).map(|z| z.re);
                worst = worst.max((col - x.coords()).amax());
            }
        }
        rep.verdict("equivariance", worst <= 1e-7, json!({ "max_difference": worst }))
            .map_err(internal)?;
        files.push(("sphere.csv".to_string(), report::sphere_csv(&traj).map_err(internal)?));
    }
    Ok(Outcome { report: rep, files })
}
