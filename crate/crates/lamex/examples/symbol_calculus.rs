//! Walk through the elasticity symbol at a single space-time frequency:
//! the shear/pressure branch split, normality, the heat multiplier against
//! a dense matrix exponential, and the rank-one ellipticity floor.

use lamex::linalg;
use lamex::symbol::{
    heat_multiplier, legendre_hadamard_scan, projector, symbol_matrix, FreqPoint, LameParams,
};
use nalgebra::Complex;

fn main() -> lamex::Result<()> {
    let p = LameParams::new(1.0, 0.5, 1.0)?;
    let f = FreqPoint::new(vec![1.2, -0.4, 0.7], 0.9);

    // The full matrix is shear * I + (pressure - shear) * P with P the
    // projector onto xi, so its two eigen-multipliers are immediate.
    let shear = f.shear_symbol(&p);
    let pressure = f.pressure_symbol(&p);
    println!("shear branch    mu|xi|^2 + i sigma      = {shear}");
    println!("pressure branch (2mu+lambda)|xi|^2 + i sigma = {pressure}");

    let a = symbol_matrix(&p, &f);
    println!("normality defect of A(xi, sigma): {:.3e}", a.normality_defect());

    // Recover the eigen-multipliers by applying A to vectors along and
    // orthogonal to xi.
    let proj = projector(&f.xi);
    let along: Vec<Complex<f64>> = (0..3)
        .map(|i| Complex::new(proj[(i, 0)], 0.0))
        .collect();
    let image = a.apply(&along);
    println!(
        "A on the gradient direction: ratio {} (pressure branch)",
        image[0] / along[0]
    );

    // Spatial semigroup against a generic exponential oracle.
    let t = 0.8;
    let split = heat_multiplier(&p, &f.xi, t)?;
    let xi_sq: f64 = f.xi.iter().map(|x| x * x).sum();
    let generator = linalg::CMatrix::from_fn(3, 3, |i, j| {
        let diag = if i == j { p.mu * xi_sq } else { 0.0 };
        Complex::new(diag + (p.mu + p.lambda) * f.xi[i] * f.xi[j], 0.0)
    });
    let oracle = generator.scale(-t).exp();
    println!(
        "heat multiplier vs expm oracle: {:.3e}",
        linalg::max_abs_diff(split.matrix(), &oracle)
    );

    // The rank-one form over the sphere recovers min(mu, 2mu + lambda).
    for n in [2, 3] {
        let floor = legendre_hadamard_scan(&p, n, 400);
        println!(
            "legendre-hadamard floor in {n}d: {floor:.12} (exact {})",
            p.mu.min(p.pressure_modulus())
        );
    }
    Ok(())
}
