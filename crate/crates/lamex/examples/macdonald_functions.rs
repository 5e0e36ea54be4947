//! Macdonald functions K_nu on the right half plane: evaluation routes,
//! the subordination integral identity, recurrences, and the leading
//! small-argument behaviour.

use lamex::macdonald::{bessel_k, bessel_k_derivative, subordination_integral, Z_SWITCH};
use lamex::quad::QuadratureSpec;
use num_complex::Complex64;
use statrs::function::gamma::gamma;

fn main() -> lamex::Result<()> {
    let spec = QuadratureSpec::default();
    let nu = 0.7;

    println!("series below |z| = {Z_SWITCH}, continued fraction above:");
    for z in [Complex64::new(0.8, 0.3), Complex64::new(6.0, 2.0)] {
        let k = bessel_k(nu, z)?;
        println!("  K_{nu}({z}) = {} (est err {:.1e})", k.value, k.est_error);
    }

    // int_0^inf t^(nu-1) exp(-t - z^2/(4t)) dt = 2 (z/2)^nu K_nu(z),
    // an independent quadrature route to the same function.
    println!("\nsubordination integral vs direct evaluation:");
    for z in [Complex64::new(1.5, 0.0), Complex64::new(3.0, 2.5), Complex64::new(9.0, -4.0)] {
        let (integral, _est) = subordination_integral(nu, z * z * 0.25, Complex64::new(1.0, 0.0), &spec)?;
        let via = integral / ((z * 0.5).powf(nu) * 2.0);
        let direct = bessel_k(nu, z)?.value;
        println!("  z = {z}: rel gap {:.3e}", (via - direct).norm() / direct.norm());
    }

    // Three-term recurrence and the derivative identity.
    let z = Complex64::new(2.2, 0.9);
    let below = bessel_k(nu - 1.0, z)?.value;
    let at = bessel_k(nu, z)?.value;
    let above = bessel_k(nu + 1.0, z)?.value;
    println!(
        "\nK_(nu+1) - K_(nu-1) - (2nu/z) K_nu = {:.3e}",
        (above - below - at * (2.0 * nu / z)).norm()
    );
    let derivative = bessel_k_derivative(nu, z)?;
    println!(
        "K' + (K_(nu-1) + K_(nu+1))/2       = {:.3e}",
        (derivative + (below + above) * 0.5).norm()
    );

    // As z -> 0, K_nu(z) ~ Gamma(nu)/2 (2/z)^nu; the deviation decays
    // like z^min(2, 2nu), so small orders converge slowest.
    println!("\nsmall-argument limit, relative deviation:");
    for nu in [0.3, 0.5, 0.9] {
        for exponent in [-2, -4, -6] {
            let z = Complex64::new(10f64.powi(exponent), 0.0);
            let value = bessel_k(nu, z)?.value;
            let limit = (2.0 / z).powf(nu) * (gamma(nu) / 2.0);
            print!("  nu={nu} |z|=1e{exponent}: {:.1e}", (value - limit).norm() / limit.norm());
        }
        println!();
    }
    Ok(())
}
