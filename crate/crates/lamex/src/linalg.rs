//! Small dense complex-matrix helpers used by the symbol calculus and its
//! cross-checks.
//!
//! Everything here goes through generic dense algorithms (SVD, Pade
//! exponential, characteristic polynomials). None of it knows about the
//! eigenstructure of the Lame symbol, which is what makes these routines
//! usable as independent oracles in tests.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Largest singular value, via dense SVD.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Frobenius norm of `m m* - m* m`; zero iff the matrix is normal.
pub fn normality_defect(m: &CMatrix) -> f64 {
    let ad = m.adjoint();
    (m * &ad - ad * m).norm()
}

/// Entrywise maximum modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Entrywise maximum modulus of the difference.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    max_abs(&(a - b))
}

fn complex_identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Identity matrix with complex entries.
pub fn eye(n: usize) -> CMatrix {
    complex_identity(n)
}

/// Eigenvalues of a 1x1, 2x2 or 3x3 complex matrix through the
/// characteristic polynomial (quadratic formula, Cardano for the cubic).
///
/// This route is deliberately naive. It never touches projector algebra, so
/// matching its output against closed-form spectra is a meaningful check.
/// Accuracy is limited by root conditioning, which is ample for the
/// well-separated spectra exercised in tests.
pub fn char_poly_eigenvalues(m: &CMatrix) -> Vec<Complex64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "square matrix required");
    match n {
        1 => vec![m[(0, 0)]],
        2 => {
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = (tr * tr - det.scale(4.0)).sqrt();
            vec![(tr + disc).scale(0.5), (tr - disc).scale(0.5)]
        }
        3 => {
            // z^3 + c2 z^2 + c1 z + c0, coefficients from trace, principal
            // minors and determinant.
            let a = m;
            let tr = a[(0, 0)] + a[(1, 1)] + a[(2, 2)];
            let minor = |i: usize, j: usize| -> Complex64 {
                a[(i, i)] * a[(j, j)] - a[(i, j)] * a[(j, i)]
            };
            let c1 = minor(0, 1) + minor(0, 2) + minor(1, 2);
            let det = a[(0, 0)] * minor(1, 2) - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
                + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)]);
            cubic_roots(-tr, c1, -det)
        }
        _ => panic!("characteristic-polynomial route implemented for n <= 3 only"),
    }
}

/// Roots of z^3 + a z^2 + b z + c with complex coefficients (Cardano).
fn cubic_roots(a: Complex64, b: Complex64, c: Complex64) -> Vec<Complex64> {
    let third = 1.0 / 3.0;
    let shift = a.scale(third);
    // depressed cubic t^3 + p t + q
    let p = b - a * a.scale(third);
    let q = a * a * a.scale(2.0 / 27.0) - a * b.scale(third) + c;
    let half_q = q.scale(0.5);
    let disc = (half_q * half_q + (p * p * p).scale(1.0 / 27.0)).sqrt();
    // pick the cube-root seed with the larger magnitude to dodge cancellation
    let u_cubed = {
        let c1 = -half_q + disc;
        let c2 = -half_q - disc;
        if c1.norm() >= c2.norm() {
            c1
        } else {
            c2
        }
    };
    if u_cubed.norm() == 0.0 {
        return vec![-shift; 3];
    }
    let u = u_cubed.powf(third);
    let omega = Complex64::new(-0.5, 0.75f64.sqrt());
    (0..3u32)
        .map(|k| {
            let w = u * omega.powu(k);
            w - p.scale(third) / w - shift
        })
        .collect()
}

/// Match two eigenvalue multisets greedily; returns the largest pairing gap.
pub fn eigenvalue_set_distance(lhs: &[Complex64], rhs: &[Complex64]) -> f64 {
    assert_eq!(lhs.len(), rhs.len());
    let mut remaining: Vec<Complex64> = rhs.to_vec();
    let mut worst = 0.0f64;
    for z in lhs {
        let (idx, gap) = remaining
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty");
        worst = worst.max(gap);
        remaining.swap_remove(idx);
    }
    worst
}
