//! Compute A^s three independent ways and compare: the closed form on the
//! two branches, diagonalization after rotating xi onto the first axis,
//! and the Balakrishnan integral of the semigroup.

use lamex::quad::QuadratureSpec;
use lamex::symbol::{
    frac_power, frac_power_rotation, frac_power_subordination, FreqPoint, LameParams,
};

fn main() -> lamex::Result<()> {
    let p = LameParams::new(1.0, 0.5, 1.0)?;
    let spec = QuadratureSpec::default();

    println!("{:>5} {:>24} {:>14} {:>14}", "s", "frequency", "vs rotation", "vs integral");
    for s in [0.3, 0.5, 0.75] {
        for (xi, sigma) in [(vec![1.0, 0.5], 0.7), (vec![-0.8, 1.3], -1.2), (vec![2.0], 0.0)] {
            let f = FreqPoint::new(xi.clone(), sigma);
            let direct = frac_power(&p, &f, s)?;
            let rotated = frac_power_rotation(&p, &f, s)?;
            let integral = frac_power_subordination(&p, &f, s, &spec)?;
            println!(
                "{s:>5} {:>24} {:>14.3e} {:>14.3e}",
                format!("xi={xi:?} sigma={sigma}"),
                direct.max_abs_diff(&rotated),
                direct.max_abs_diff(&integral) / direct.spectral_norm(),
            );
        }
    }

    // The exponent law composes in the symbol algebra.
    let f = FreqPoint::new(vec![0.9, -0.3], 1.1);
    let half = frac_power(&p, &f, 0.25)?;
    let composed = half.matrix() * frac_power(&p, &f, 0.35)?.matrix();
    let direct = frac_power(&p, &f, 0.6)?;
    println!(
        "\nexponent law A^0.25 A^0.35 vs A^0.6: {:.3e}",
        lamex::linalg::max_abs_diff(&composed, direct.matrix())
    );
    Ok(())
}
