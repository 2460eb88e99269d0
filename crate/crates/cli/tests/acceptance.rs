//! Acceptance suite. Runs as a plain binary so every criterion prints one
//! PASS/FAIL line; exits non-zero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use lie_ensemble::coefficients::{
    center_elements, phi_matrix, verify_codistinguished, CodistinguishedConfig, CoefficientFamily, Orientation,
};
use lie_ensemble::ensemble::{
    integrate_ensemble, integrate_ensemble_with, integrate_flow, output_series, Drift, EnsembleSystem, Input,
    IntegratorOptions, PiecewiseConstantInput, Profile, Segment, Side,
};
use lie_ensemble::grid::{build_grid, ParametrizationSet, QuadratureRule};
use lie_ensemble::homogeneous::{
    average_over_stabilizer, integrate_sphere_ensemble, section, verify_homogeneous_relations, SpherePoint, SphereProfile,
};
use lie_ensemble::linalg::{c, CMat};
use lie_ensemble::observability::{
    moment_separation_test, moment_table, reconstruct_profile, ProfileAnsatz, ReconstructionConfig, SeparationResult,
};
use lie_ensemble::sampling::{random_group_element, rng};
use lie_ensemble::structure::{
    catalog_set, indicator_sequences, verify_distinguished, verify_pre_distinguished, BracketEntry, Variant,
};
use lie_ensemble::synthesis::{convergence_study, StudyScenario, TargetTrajectory};
use lie_ensemble::{group_exp, Family, GroupElement};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn random_input(seed: u64, count: usize, m: usize, horizon: f64) -> Input {
    let mut r = rng(seed);
    let segs = (0..count)
        .map(|k| Segment {
            i: r.gen_range(0..m),
            s: 0,
            nu: r.gen_range(-1.5..1.5),
            t_end: horizon * (k + 1) as f64 / count as f64,
        })
        .collect();
    Input::Piecewise(PiecewiseConstantInput::new(segs).expect("valid segments"))
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    ((j as f64 - i as f64) * (k as f64 - i as f64) * (k as f64 - j as f64)) / 2.0
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let set = catalog_set(Family::So, 3, Variant::Standard).map_err(e)?;
    let table = verify_distinguished(&set, 1e-10).map_err(e)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut worst_lambda: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            match table.get(i, j) {
                Some(BracketEntry::Scaled { k, lambda }) => {
                    worst_lambda = worst_lambda.max((lambda - levi_civita(i, j, k)).abs());
                }
                Some(BracketEntry::Zero) if i == j => {}
                other => return Err(format!("({i},{j}) -> {other:?}")),
            }
        }
    }
    let res = table.max_residual();
    check(
        worst_lambda == 0.0 && res <= 1e-12 && elapsed < 1.0,
        format!("lambda = det exactly, max residual {res:.1e}, {elapsed:.3}s"),
        format!("lambda error {worst_lambda:e}, residual {res:e}, {elapsed:.3}s"),
    )
}

fn ac2() -> Outcome {
    // Values as displayed for the commutator XY − YX. The library bracket is
    // its negative, so the table is compared after negation.
    let expected = [
        (Variant::A, [(0, 1, 1, 2.0), (0, 2, 2, -2.0), (1, 2, 0, 1.0)]),
        (Variant::APrime, [(0, 1, 2, 2.0), (0, 2, 1, 2.0), (1, 2, 0, -2.0)]),
    ];
    let mut worst: f64 = 0.0;
    for (v, rows) in expected {
        let set = catalog_set(Family::Sl, 2, v).map_err(e)?;
        let table = verify_distinguished(&set, 1e-10).map_err(e)?;
        for (i, j, k, paper) in rows {
            match table.get(i, j) {
                Some(BracketEntry::Scaled { k: kk, lambda }) if kk == k => {
                    worst = worst.max((-lambda - paper).abs());
                }
                other => return Err(format!("{v:?} ({i},{j}) -> {other:?}")),
            }
        }
    }
    check(
        worst <= 1e-12,
        format!("A and A' reproduce all six relations, max |lambda - value| {worst:.1e}"),
        format!("max |lambda - value| {worst:e}"),
    )
}

fn ac3() -> Outcome {
    let set = catalog_set(Family::Su, 2, Variant::Compact).map_err(e)?;
    let (closure, _) = verify_pre_distinguished(&set, 4, 1e-10, 1e-10).map_err(e)?;
    let found_by_2: usize = closure.new_per_depth().iter().take(3).sum();
    check(
        closure.len() == 3 && found_by_2 == 3 && closure.is_finite(),
        format!(
            "{} representatives, last new at depth {}, closure distinguished",
            closure.len(),
            closure.stabilization_depth()
        ),
        format!("size {}, per depth {:?}", closure.len(), closure.new_per_depth()),
    )
}

fn ac4() -> Outcome {
    let full = catalog_set(Family::So, 3, Variant::Standard).map_err(e)?;
    let f1 = full.subset(&[1, 2]).map_err(e)?;
    let seqs = indicator_sequences(&f1, &full, 9, 1e-10).map_err(e)?;
    let odd: Vec<usize> = (1..=9).step_by(2).collect();
    let even: Vec<usize> = (0..=9).step_by(2).collect();
    let got: Vec<Vec<usize>> = seqs.iter().map(|s| s.depths.iter().copied().collect()).collect();
    let patterns: Vec<_> = seqs.iter().map(|s| s.pattern).collect();
    check(
        got == [odd.clone(), even.clone(), even.clone()] && patterns == [Some((1, 2)), Some((0, 2)), Some((0, 2))],
        format!("N1 odd, N2 = N3 even, patterns {patterns:?}"),
        format!("depths {got:?}, patterns {patterns:?}"),
    )
}

fn ac5() -> Outcome {
    let set = catalog_set(Family::So, 3, Variant::Standard).map_err(e)?;
    let table = verify_distinguished(&set, 1e-10).map_err(e)?;
    let fam = CoefficientFamily::new(set, Orientation::Left).map_err(e)?;
    let cfg = CodistinguishedConfig {
        n_samples: 100,
        n_pairs: 200,
        ..CodistinguishedConfig::default()
    };
    let r = verify_codistinguished(&fam, &table, &cfg).map_err(e)?;
    let ok = r.spanning.min_rank == 3
        && r.spanning.samples == 100
        && r.spanning.min_singular_value > 1e-6
        && r.relations.relations_per_sample == 27
        && r.relations.max_residual <= 1e-10
        && r.separation.injective
        && r.separation.pairs == 200
        && r.separation.center_order == 1
        && r.pass();
    check(
        ok,
        format!(
            "rank 3 (min sv {:.3}), 27 relations max residual {:.1e}, 200 pairs injective",
            r.spanning.min_singular_value, r.relations.max_residual
        ),
        format!("{r:?}"),
    )
}

fn ac6() -> Outcome {
    let set = catalog_set(Family::Su, 2, Variant::Pauli).map_err(e)?;
    let fam = CoefficientFamily::new(set.clone(), Orientation::Left).map_err(e)?;
    let centers = center_elements(Family::Su, 2).map_err(e)?;
    let minus = centers.elements()[1].clone();
    let mut r = rng(61);
    let mut pointwise: f64 = 0.0;
    for _ in 0..100 {
        let g = random_group_element(set.descriptor(), &mut r);
        let a = phi_matrix(&fam, &g).map_err(e)?;
        let b = phi_matrix(&fam, &g.compose(&minus).map_err(e)?).map_err(e)?;
        pointwise = pointwise.max((a - b).amax());
    }
    let grid = Arc::new(build_grid(1.0, 2.0, 6, QuadratureRule::GaussLegendre).map_err(e)?);
    let ps = ParametrizationSet::parse(&["sigma"]).map_err(e)?;
    let sys = EnsembleSystem::new(grid.clone(), set.clone(), ps, Drift::zero()).map_err(e)?;
    let mut outputs: f64 = 0.0;
    for trial in 0..3u64 {
        let init = Profile::from_fn(grid.clone(), |s| {
            group_exp(&set.elements()[0].scale(0.4 * s).add(&set.elements()[2].scale(0.1 * trial as f64)).unwrap())
        })
        .map_err(e)?;
        let input = random_input(600 + trial, 5, 3, 1.0);
        let t1 = integrate_ensemble(&sys, &init, &input, 1.0, 0.01).map_err(e)?;
        let t2 = integrate_ensemble(&sys, &init.right_translate(&minus).map_err(e)?, &input, 1.0, 0.01).map_err(e)?;
        let y1 = output_series(&t1, &fam).map_err(e)?;
        let y2 = output_series(&t2, &fam).map_err(e)?;
        for (a, b) in y1.iter().zip(&y2) {
            outputs = outputs.max((a - b).amax());
        }
    }
    check(
        pointwise <= 1e-14 && outputs <= 1e-12 && centers.chi() == 2,
        format!("|phi(g) - phi(-g)| {pointwise:.1e}, output difference {outputs:.1e}, chi = 2"),
        format!("pointwise {pointwise:e}, outputs {outputs:e}"),
    )
}

fn ac7() -> Outcome {
    let set = catalog_set(Family::So, 3, Variant::Standard).map_err(e)?;
    let (x1, x2, x3) = (set.elements()[0].clone(), set.elements()[1].clone(), set.elements()[2].clone());
    let id = GroupElement::identity(Family::So, 3);
    let dts = [1e-2, 5e-3, 2.5e-3];

    // constant input: the increment is exactly t·A
    let a_const = x1.scale(0.8).add(&x3.scale(-1.1)).map_err(e)?;
    let exact_const = group_exp(&a_const);
    let mut const_err: f64 = 0.0;
    for dt in dts {
        let g = integrate_flow(&id, |_| a_const.matrix().clone(), 1.0, dt, Side::Left).map_err(e)?;
        const_err = const_err.max(g.distance(&exact_const));
    }

    // time-varying closed form g(t) = exp(t a X₁) exp(t b X₂)
    let (a, b) = (2.5, -1.5);
    let exact = group_exp(&x1.scale(a)).compose(&group_exp(&x2.scale(b))).map_err(e)?;
    let gen = |t: f64| -> CMat {
        let r = group_exp(&x2.scale(-t * b)).matrix().clone();
        (&r * x1.matrix() * r.adjoint()) * c(a) + x2.matrix() * c(b)
    };
    let mut errs = Vec::new();
    for dt in dts {
        let g = integrate_flow(&id, gen, 1.0, dt, Side::Left).map_err(e)?;
        errs.push(g.distance(&exact));
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();

    let grid = Arc::new(build_grid(1.0, 2.0, 5, QuadratureRule::UniformTrapezoid).map_err(e)?);
    let sys = EnsembleSystem::new(grid.clone(), set, ParametrizationSet::parse(&["sigma"]).map_err(e)?, Drift::zero())
        .map_err(e)?;
    let input = random_input(70, 6, 3, 1.0);
    let traj = integrate_ensemble_with(
        &sys,
        &Profile::constant(grid, &id),
        &input,
        1.0,
        1e-3,
        &IntegratorOptions::default(),
    )
    .map_err(e)?;
    let drift = traj.max_defect();

    let ok = ratios.iter().all(|r| (12.0..=20.0).contains(r)) && drift <= 1e-9 && const_err <= 1e-12;
    check(
        ok,
        format!(
            "halving ratios {:.2} {:.2} (errors {:.2e} {:.2e} {:.2e}), constant input exact to {const_err:.1e}, drift {drift:.1e}",
            ratios[0], ratios[1], errs[0], errs[1], errs[2]
        ),
        format!("ratios {ratios:?}, errors {errs:?}, constant {const_err:e}, drift {drift:e}"),
    )
}

fn ac8() -> Outcome {
    let start = Instant::now();
    let grid = Arc::new(build_grid(1.0, 2.0, 21, QuadratureRule::UniformTrapezoid).map_err(e)?);
    let set = catalog_set(Family::So, 3, Variant::Standard).map_err(e)?;
    let x2 = set.elements()[1].clone();
    let target = TargetTrajectory::from_fn(grid.clone(), 1.0, 1e-3, move |t, s| group_exp(&x2.scale(t / s))).map_err(e)?;
    let sys = EnsembleSystem::new(grid, set, ParametrizationSet::parse(&["sigma"]).map_err(e)?, Drift::zero()).map_err(e)?;
    let rows = convergence_study(
        &StudyScenario {
            system: sys,
            target,
            dt: 1e-3,
        },
        &[0, 2, 4, 8],
    )
    .map_err(e)?;
    let elapsed = start.elapsed().as_secs_f64();
    let top = rows.last().ok_or("no rows")?;
    let monotone = rows.windows(2).all(|w| w[1].delta < w[0].delta);
    check(
        top.k == 8 && top.delta <= 1e-4 && top.epsilon <= 1e-2 && monotone && elapsed <= 60.0,
        format!("K = 8: delta {:.2e}, epsilon {:.2e}; {elapsed:.2}s", top.delta, top.epsilon),
        format!("rows {rows:?}, {elapsed:.2}s"),
    )
}

fn ac9() -> Outcome {
    let grid = Arc::new(build_grid(1.0, 2.0, 11, QuadratureRule::GaussLegendre).map_err(e)?);
    let set = catalog_set(Family::So, 3, Variant::Standard).map_err(e)?;
    let fam = CoefficientFamily::new(set.clone(), Orientation::Left).map_err(e)?;
    let ps = ParametrizationSet::parse(&["sigma"]).map_err(e)?;
    let id = Profile::constant(grid.clone(), &GroupElement::identity(Family::So, 3));
    let x3 = set.elements()[2].clone();
    let twisted = Profile::from_fn(grid, |s| group_exp(&x3.scale(s - 1.0))).map_err(e)?;
    let sep = moment_separation_test(&id, &twisted, &fam, &ps, 2, 1e-3).map_err(e)?;
    let same = moment_separation_test(&twisted, &twisted, &fam, &ps, 4, 1e-12).map_err(e)?;
    match (sep, same) {
        (SeparationResult::Separated { degree, gap, .. }, SeparationResult::Indistinguishable { max_gap, .. })
            if degree <= 2 && gap > 1e-3 && max_gap <= 1e-12 =>
        {
            Ok(format!("separated at degree {degree} with gap {gap:.3}; identical profiles max gap {max_gap:.1e} to K_obs = 4"))
        }
        (a, b) => Err(format!("{a:?} / {b:?}")),
    }
}

fn ac10() -> Outcome {
    let start = Instant::now();
    let grid = Arc::new(build_grid(1.0, 2.0, 11, QuadratureRule::GaussLegendre).map_err(e)?);
    let set = catalog_set(Family::So, 3, Variant::Standard).map_err(e)?;
    let fam = CoefficientFamily::new(set.clone(), Orientation::Left).map_err(e)?;
    let ps = ParametrizationSet::parse(&["sigma"]).map_err(e)?;
    let id = GroupElement::identity(Family::So, 3);
    let truth_ansatz =
        ProfileAnsatz::new(id.clone(), set, vec![vec![0.3, -0.2], vec![-0.1, 0.35], vec![0.2, 0.15]]).map_err(e)?;
    let truth = truth_ansatz.profile(&grid).map_err(e)?;
    let table = moment_table(&truth, &fam, &ps, 3).map_err(e)?;
    let cfg = ReconstructionConfig {
        d_max: 1,
        seeds: 8,
        ..ReconstructionConfig::default()
    };
    let rec = reconstruct_profile(&table, &fam, &ps, &grid, &id, &cfg, Some(&truth)).map_err(e)?;
    let elapsed = start.elapsed().as_secs_f64();
    let d = rec.center_resolved_distance.unwrap_or(f64::INFINITY);
    check(
        d <= 1e-6 && rec.attempts.len() <= 8 && elapsed <= 30.0,
        format!("distance {d:.1e}, residual {:.1e}, best seed {} of {}, {elapsed:.2}s", rec.residual, rec.seed_index, rec.attempts.len()),
        format!("distance {d:e}, residual {:e}, {elapsed:.2}s", rec.residual),
    )
}

fn ac11() -> Outcome {
    let set = catalog_set(Family::So, 3, Variant::Standard).map_err(e)?;
    let fam = CoefficientFamily::new(set.clone(), Orientation::Left).map_err(e)?;
    let mut r = rng(110);
    let mut avg: f64 = 0.0;
    for _ in 0..100 {
        let x = SpherePoint::random(3, &mut r);
        for i in 0..3 {
            let v = average_over_stabilizer(&fam, i, &x, 64).map_err(e)?;
            avg = avg.max((v - 2.0 * x.coords()[i]).abs());
        }
    }
    let rel = verify_homogeneous_relations(100, 1e-10, 111).map_err(e)?;

    let grid = Arc::new(build_grid(1.0, 2.0, 5, QuadratureRule::UniformTrapezoid).map_err(e)?);
    let sys = EnsembleSystem::new(grid.clone(), set, ParametrizationSet::parse(&["sigma"]).map_err(e)?, Drift::zero())
        .map_err(e)?;
    let x0 = SpherePoint::normalized(vec![0.2, -0.6, 0.7]).map_err(e)?;
    let input = random_input(112, 5, 3, 1.0);
    let sphere = integrate_sphere_ensemble(&sys, &SphereProfile::constant(grid.clone(), &x0), &input, 1.0, 0.01).map_err(e)?;
    let opts = IntegratorOptions {
        side: Side::Right,
        ..IntegratorOptions::default()
    };
    let group = integrate_ensemble_with(&sys, &Profile::constant(grid, &section(&x0)), &input, 1.0, 0.01, &opts).map_err(e)?;
    let mut equiv: f64 = 0.0;
    for (gp, sp) in group.profiles().iter().zip(sphere.profiles()) {
        for (g, x) in gp.states().iter().zip(sp.points()) {
            equiv = equiv.max((g.matrix().column(0).map(|z| z.re) - x.coords()).amax());
        }
    }
    check(
        avg <= 1e-12 && rel.bracket.max_residual <= 1e-10 && rel.derivative.max_residual <= 1e-10 && rel.pass() && equiv <= 1e-7,
        format!(
            "average error {avg:.1e}, bracket {:.1e}, derivative {:.1e}, equivariance {equiv:.1e}",
            rel.bracket.max_residual, rel.derivative.max_residual
        ),
        format!("average {avg:e}, relations {rel:?}, equivariance {equiv:e}"),
    )
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("scenarios")
}

fn run_cli(cmd: &str, scenario: &Path, out: &Path) -> Result<i32, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_lie-ensemble"))
        .args([cmd, "--scenario"])
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .env_remove("LIE_ENSEMBLE_OUT")
        .output()
        .map_err(e)?;
    status.status.code().ok_or_else(|| "terminated by signal".to_string())
}

fn command_of(path: &Path) -> Result<String, String> {
    let text = fs::read_to_string(path).map_err(e)?;
    text.lines()
        .find_map(|l| l.strip_prefix("command = \"").and_then(|r| r.strip_suffix('"')))
        .map(str::to_string)
        .ok_or_else(|| format!("{} has no command line", path.display()))
}

fn dir_contents(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .map_err(e)?
        .map(|entry| {
            let entry = entry.map_err(e)?;
            Ok((entry.file_name().to_string_lossy().into_owned(), fs::read(entry.path()).map_err(e)?))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn ac12() -> Outcome {
    let tmp = tempfile::tempdir().map_err(e)?;
    let mut goldens: Vec<PathBuf> = fs::read_dir(scenarios_dir())
        .map_err(e)?
        .filter_map(|entry| entry.ok().map(|x| x.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .filter(|p| !p.file_name().unwrap().to_string_lossy().starts_with("fail_"))
        .collect();
    goldens.sort();
    for path in &goldens {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let cmd = command_of(path)?;
        let a = tmp.path().join(format!("{name}-a"));
        let b = tmp.path().join(format!("{name}-b"));
        for out in [&a, &b] {
            let code = run_cli(&cmd, path, out)?;
            if code != 0 {
                return Err(format!("{name} exited {code}"));
            }
        }
        let (fa, fb) = (dir_contents(&a)?, dir_contents(&b)?);
        if fa.is_empty() || fa != fb {
            return Err(format!("{name}: reruns differ"));
        }
    }

    let dir = scenarios_dir();
    let malformed_out = tmp.path().join("malformed");
    let malformed = run_cli("verify", &dir.join("fail_malformed.toml"), &malformed_out)?;
    let variant = run_cli("verify", &dir.join("fail_unknown_variant.toml"), &tmp.path().join("variant"))?;
    let single = run_cli("verify", &dir.join("fail_single_generator.toml"), &tmp.path().join("single"))?;
    let blocker = tmp.path().join("blocker");
    fs::write(&blocker, "not a directory").map_err(e)?;
    let unwritable = run_cli("verify", &dir.join("verify_so3.toml"), &blocker.join("out"))?;
    let codes = (malformed, variant, single, unwritable);
    check(
        codes == (2, 2, 1, 3) && !malformed_out.exists(),
        format!("{} golden scenarios byte-identical on rerun; failure exits {codes:?}", goldens.len()),
        format!("failure exits {codes:?} (want (2, 2, 1, 3)), artifacts after parse error: {}", malformed_out.exists()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("AC1 so(3) distinguished", ac1),
        ("AC2 sl(2) sets A and A'", ac2),
        ("AC3 su(2) compact pair pre-distinguished", ac3),
        ("AC4 indicator sequences", ac4),
        ("AC5 SO(3) codistinguished", ac5),
        ("AC6 SU(2) center ambiguity", ac6),
        ("AC7 integrator order and drift", ac7),
        ("AC8 synthesis convergence", ac8),
        ("AC9 moment separation", ac9),
        ("AC10 reconstruction", ac10),
        ("AC11 sphere closed forms", ac11),
        ("AC12 CLI determinism and exit codes", ac12),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
