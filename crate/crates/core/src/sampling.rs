//! Deterministic pseudo-random algebra and group elements.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lie::{group_exp, AlgebraDescriptor, AlgebraElement, GroupElement};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random element with `B_θ`-norm drawn uniformly in `[0, max_norm]` and a
/// direction drawn from the cube in basis coordinates.
pub fn random_algebra_element<R: Rng>(
    desc: &AlgebraDescriptor,
    rng: &mut R,
    max_norm: f64,
) -> AlgebraElement {
    let d = desc.dim();
    let mut v = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
    while v.norm() < 1e-6 {
        v = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
    }
    let r: f64 = rng.gen_range(0.0..=max_norm);
    v *= r / v.norm();
    desc.from_coords(&v).expect("basis coordinates have the right length")
}

/// Random element of the identity component: `exp` of a random algebra
/// element with norm at most π.
pub fn random_group_element<R: Rng>(desc: &AlgebraDescriptor, rng: &mut R) -> GroupElement {
    group_exp(&random_algebra_element(desc, rng, std::f64::consts::PI))
}
