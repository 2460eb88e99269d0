use std::f64::consts::PI;
use std::sync::Arc;

use lie_ensemble::coefficients::{center_elements, phi_matrix, CoefficientFamily, Orientation};
use lie_ensemble::ensemble::integrate_flow;
use lie_ensemble::ensemble::Side;
use lie_ensemble::grid::{build_grid, ParametrizationSet, QuadratureRule};
use lie_ensemble::linalg::{self, c, CMat};
use lie_ensemble::sampling::{random_algebra_element, rng};
use lie_ensemble::structure::{catalog_set, lie_closure, verify_distinguished, BracketEntry, Variant};
use lie_ensemble::synthesis::{fit_monomials, CoefficientField};
use lie_ensemble::{group_exp, AlgebraDescriptor, AlgebraElement, Family, GroupElement};
use nalgebra::{DMatrix, Matrix3, Vector3};

fn real(m: &CMat) -> DMatrix<f64> {
    m.map(|z| z.re)
}

/// Rodrigues: `exp(θ K) = I + sin θ K + (1 − cos θ) K²` for unit `K`.
fn rodrigues(axis: Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let k = axis.normalize();
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + kx * angle.sin() + kx * kx * (1.0 - angle.cos())
}

/// Plain Taylor series with scaling and squaring.
fn taylor_exp(a: &CMat) -> CMat {
    let n = a.nrows();
    let s = 8;
    let b = a * c(1.0 / f64::from(1 << s));
    let mut term = CMat::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &b * c(1.0 / k as f64);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

#[test]
fn expm_matches_rodrigues() {
    let set = catalog_set(Family::So, 3, Variant::Standard).unwrap();
    let mut r = rng(3);
    for _ in 0..20 {
        let x = random_algebra_element(set.descriptor(), &mut r, 3.0);
        let m = real(x.matrix());
        // X_1 = e₂e₃ᵀ − e₃e₂ᵀ is minus the hat map of e₁
        let w = Vector3::new(-m[(1, 2)], -m[(2, 0)], -m[(0, 1)]);
        let expected = rodrigues(w, w.norm());
        let got = real(group_exp(&x).matrix());
        let diff = DMatrix::from_iterator(3, 3, expected.iter().copied()) - got;
        assert!(diff.amax() < 1e-13, "{diff}");
    }
}

#[test]
fn expm_matches_taylor_on_every_family() {
    let mut r = rng(8);
    for (f, n) in [(Family::Sl, 3), (Family::Su, 3), (Family::So, 5), (Family::Sl, 4)] {
        let d = AlgebraDescriptor::new(f, n).unwrap();
        for _ in 0..5 {
            let x = random_algebra_element(&d, &mut r, 4.0);
            let diff = linalg::frobenius(&(linalg::expm(x.matrix()) - taylor_exp(x.matrix())));
            assert!(diff < 1e-10 * linalg::frobenius(&taylor_exp(x.matrix())), "{f:?} {n}: {diff}");
        }
    }
}

#[test]
fn so3_brackets_follow_the_levi_civita_symbol() {
    let set = catalog_set(Family::So, 3, Variant::Standard).unwrap();
    let table = verify_distinguished(&set, 1e-10).unwrap();
    let eps = |i: usize, j: usize, k: usize| ((j as i64 - i as i64) * (k as i64 - i as i64) * (k as i64 - j as i64)) as f64 / 2.0;
    for i in 0..3 {
        for j in 0..3 {
            match table.get(i, j).unwrap() {
                BracketEntry::Zero => assert_eq!(i, j),
                BracketEntry::Scaled { k, lambda } => assert_eq!(lambda, eps(i, j, k)),
            }
        }
    }
}

#[test]
fn sl2_tables_in_library_convention() {
    // [H,X] = −2X, [H,Y] = 2Y, [X,Y] = −H and
    // [H′,X′] = −2Y′, [H′,Y′] = −2X′, [X′,Y′] = 2H′
    let cases = [
        (Variant::A, [(0, 1, 1, -2.0), (0, 2, 2, 2.0), (1, 2, 0, -1.0)]),
        (Variant::APrime, [(0, 1, 2, -2.0), (0, 2, 1, -2.0), (1, 2, 0, 2.0)]),
    ];
    for (v, rows) in cases {
        let set = catalog_set(Family::Sl, 2, v).unwrap();
        let table = verify_distinguished(&set, 1e-10).unwrap();
        for (i, j, k, l) in rows {
            assert_eq!(table.get(i, j), Some(BracketEntry::Scaled { k, lambda: l }), "{v:?} ({i},{j})");
            assert_eq!(table.get(j, i), Some(BracketEntry::Scaled { k, lambda: -l }));
        }
    }
}

#[test]
fn chevalley_sets_are_distinguished() {
    for n in 2..=4 {
        let set = catalog_set(Family::Sl, n, Variant::Chevalley).unwrap();
        assert_eq!(set.span_rank().unwrap(), n * n - 1);
        assert!(verify_distinguished(&set, 1e-10).is_ok(), "sl({n})");
    }
}

#[test]
fn compact_su2_pair_closes_on_three_directions() {
    let set = catalog_set(Family::Su, 2, Variant::Compact).unwrap();
    let cl = lie_closure(&set, 4, 1e-10).unwrap();
    assert_eq!(cl.len(), 3);
    assert!(cl.is_finite());
}

#[test]
fn coefficients_at_identity_are_the_gram_matrix() {
    for (f, n, v) in [(Family::So, 3, Variant::Standard), (Family::Su, 2, Variant::Pauli), (Family::Sl, 2, Variant::A)] {
        let set = catalog_set(f, n, v).unwrap();
        let fam = CoefficientFamily::new(set.clone(), Orientation::Left).unwrap();
        let phi = phi_matrix(&fam, &GroupElement::identity(f, n)).unwrap();
        let gram = DMatrix::from_fn(set.len(), set.len(), |i, j| {
            linalg::trace(&(set.elements()[j].matrix() * set.elements()[i].matrix().adjoint())).re
        });
        assert!((phi - gram).amax() < 1e-14);
    }
}

#[test]
fn center_orders() {
    assert_eq!(center_elements(Family::Su, 3).unwrap().chi(), 3);
    assert_eq!(center_elements(Family::Su, 2).unwrap().chi(), 2);
    assert_eq!(center_elements(Family::So, 3).unwrap().chi(), 1);
    assert_eq!(center_elements(Family::So, 4).unwrap().chi(), 2);
    assert_eq!(center_elements(Family::Sl, 3).unwrap().chi(), 1);
}

#[test]
fn gauss_legendre_integrates_polynomials_exactly() {
    for q in 2..=8 {
        let grid = build_grid(-1.0, 3.0, q, QuadratureRule::GaussLegendre).unwrap();
        let deg = 2 * q as i32 - 1;
        let exact = (3f64.powi(deg + 1) - 1f64) / (deg + 1) as f64;
        let got = grid.integrate(|s| s.powi(deg));
        assert!((got - exact).abs() < 1e-11 * exact.abs().max(1.0), "q = {q}");
    }
    let trap = build_grid(0.0, 1.0, 11, QuadratureRule::UniformTrapezoid).unwrap();
    assert!((trap.integrate(|s| 3.0 * s + 1.0) - 2.5).abs() < 1e-15);
}

#[test]
fn rkmk4_is_fourth_order_on_a_time_varying_flow() {
    // g(t) = exp(t a X₁) exp(t b X₂) solves ġ = g A(t) with
    // A(t) = a Ad(exp(−t b X₂)) X₁ + b X₂.
    let set = catalog_set(Family::So, 3, Variant::Standard).unwrap();
    let (x1, x2) = (set.elements()[0].clone(), set.elements()[1].clone());
    let (a, b) = (1.3, -0.7);
    let exact = group_exp(&x1.scale(a)).compose(&group_exp(&x2.scale(b))).unwrap();
    let gen = |t: f64| -> CMat {
        let e = group_exp(&x2.scale(-t * b)).matrix().clone();
        let ad = &e * x1.matrix() * e.adjoint();
        ad * c(a) + x2.matrix() * c(b)
    };
    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dt| {
            let g = integrate_flow(&GroupElement::identity(Family::So, 3), gen, 1.0, dt, Side::Left).unwrap();
            g.distance(&exact)
        })
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((12.0..=20.0).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn polynomial_coefficient_fields_fit_exactly() {
    // c(t, σ) = ρ(σ)·(1 + tσ − σ²) lies in the degree-2 span
    let grid = Arc::new(build_grid(1.0, 2.0, 9, QuadratureRule::GaussLegendre).unwrap());
    let ps = ParametrizationSet::parse(&["sigma"]).unwrap();
    let times: Vec<f64> = (0..5).map(|k| 0.1 * k as f64 + 0.05).collect();
    let cf = CoefficientField::from_fn(3, times, &grid, |i, t, s| if i == 1 { s * (1.0 + t * s - s * s) } else { 0.0 }).unwrap();
    let fit = fit_monomials(&cf, &ps, &grid, 2).unwrap();
    assert!(fit.delta < 1e-12, "{}", fit.delta);
    let low = fit_monomials(&cf, &ps, &grid, 1).unwrap();
    assert!(low.delta > 1e-3);
}

#[test]
fn half_turn_sends_coefficients_to_signed_identity() {
    // exp(π X₁) = diag(1, −1, −1) so Ad fixes X₁ and flips X₂, X₃
    let set = catalog_set(Family::So, 3, Variant::Standard).unwrap();
    let fam = CoefficientFamily::new(set.clone(), Orientation::Left).unwrap();
    let g = group_exp(&set.elements()[0].scale(PI));
    let phi = phi_matrix(&fam, &g).unwrap();
    let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, -2.0, -2.0]));
    assert!((phi - expected).amax() < 1e-14);
    let z = AlgebraElement::zero(Family::So, 3);
    assert!(group_exp(&z).distance(&GroupElement::identity(Family::So, 3)) == 0.0);
}
