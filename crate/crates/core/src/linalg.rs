//! Dense complex matrix helpers: exponential, logarithm and a few norms.
//!
//! Every matrix in the crate is stored as `DMatrix<Complex64>`; real families
//! simply carry zero imaginary parts.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real(m: &DMatrix<f64>) -> CMat {
    m.map(c)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real Frobenius inner product `Re tr(A B†)`.
pub fn frobenius_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum()
}

pub fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Raw matrix commutator `AB - BA`. Only used internally; the public Lie
/// bracket is the negated commutator.
pub(crate) fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn max_abs_imag(m: &CMat) -> f64 {
    m.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    m.clone().try_inverse().ok_or(Error::Singular("matrix inverse"))
}

fn solve(lhs: CMat, rhs: &CMat) -> Result<CMat> {
    lhs.lu()
        .solve(rhs)
        .ok_or(Error::Singular("linear solve"))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with the [13/13] diagonal
/// Padé approximant.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = one_norm(a);
    if norm == 0.0 {
        return identity(n);
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a * c(0.5f64.powi(s));
    let id = identity(n);
    let b = |k: usize| c(PADE13[k]);

    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &id * b(0);

    // The denominator of the Padé approximant is nonsingular for the scaled norm.
    let mut r = solve(&v - &u, &(&v + &u)).expect("Padé denominator is nonsingular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn sqrtm_denman_beavers(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = identity(n);
    for _ in 0..100 {
        let y_inv = inverse(&y).map_err(|_| Error::LogBranch("square root iteration hit a singular iterate".into()))?;
        let z_inv = inverse(&z).map_err(|_| Error::LogBranch("square root iteration hit a singular iterate".into()))?;
        let y_next = (&y + z_inv) * c(0.5);
        let z_next = (&z + y_inv) * c(0.5);
        let delta = frobenius(&(&y_next - &y)) / frobenius(&y_next).max(1.0);
        y = y_next;
        z = z_next;
        if delta < 1e-15 {
            return Ok(y);
        }
    }
    Err(Error::LogBranch("square root iteration did not converge".into()))
}

/// Principal matrix logarithm by inverse scaling and squaring.
///
/// Square roots are taken until `‖A − I‖₁ ≤ 1/4`, then the Gregory series
/// `log M = 2 Σ Z^{2k+1}/(2k+1)`, `Z = (M − I)(M + I)⁻¹` is summed.
pub fn logm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let id = identity(n);
    let mut m = a.clone();
    let mut roots = 0;
    while one_norm(&(&m - &id)) > 0.25 {
        if roots >= 40 {
            return Err(Error::LogBranch("too many square roots; spectrum near the negative axis".into()));
        }
        m = sqrtm_denman_beavers(&m)?;
        roots += 1;
    }
    let z = solve(&m + &id, &(&m - &id))?;
    let z2 = &z * &z;
    let mut power = z.clone();
    let mut sum = z.clone();
    let mut k = 1usize;
    loop {
        power = &power * &z2;
        let term = &power * c(1.0 / (2 * k + 1) as f64);
        sum += &term;
        if frobenius(&term) <= 1e-18 * frobenius(&sum).max(1e-300) || k > 200 {
            break;
        }
        k += 1;
    }
    Ok(sum * c(2.0 * 2f64.powi(roots)))
}

/// Numerical rank from singular values with a threshold relative to the
/// largest one. Returns `(rank, smallest, largest)` singular values.
pub fn real_rank(m: &DMatrix<f64>, rel_tol: f64) -> (usize, f64, f64) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0, 0.0, 0.0);
    }
    let sv = m.clone().svd(false, false).singular_values;
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    let smallest = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let rank = sv.iter().filter(|s| **s > rel_tol * largest).count();
    (rank, smallest, largest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series_exp(a: &CMat, terms: usize) -> CMat {
        let n = a.nrows();
        let mut sum = identity(n);
        let mut term = identity(n);
        for k in 1..terms {
            term = &term * a * c(1.0 / k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn expm_matches_power_series() {
        let a = from_real(&DMatrix::from_row_slice(
            3,
            3,
            &[0.1, -0.7, 0.3, 0.7, 0.0, -1.2, -0.3, 1.2, -0.1],
        ));
        let diff = frobenius(&(expm(&a) - series_exp(&a, 40)));
        assert!(diff < 1e-13, "{diff}");
    }

    #[test]
    fn expm_large_norm_uses_squaring() {
        let a = from_real(&DMatrix::from_row_slice(2, 2, &[0.0, 9.0, -9.0, 0.0]));
        let e = expm(&a);
        assert!((e[(0, 0)].re - 9f64.cos()).abs() < 1e-12);
        assert!((e[(0, 1)].re - 9f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn logm_inverts_expm() {
        let a = from_real(&DMatrix::from_row_slice(
            3,
            3,
            &[0.0, -1.1, 0.4, 1.1, 0.0, -0.9, -0.4, 0.9, 0.0],
        ));
        let back = logm(&expm(&a)).unwrap();
        assert!(frobenius(&(back - &a)) < 1e-12);
    }

    #[test]
    fn logm_of_identity_is_zero() {
        let l = logm(&identity(4)).unwrap();
        assert!(frobenius(&l) == 0.0);
    }

    #[test]
    fn logm_rejects_negative_eigenvalue() {
        let m = from_real(&DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]));
        assert!(logm(&m).is_err());
    }
}
