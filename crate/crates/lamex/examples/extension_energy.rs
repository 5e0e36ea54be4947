//! Weighted energy of the extension: how the truncated bulk mass scales
//! with the truncation height, a symbol-level bound on the gradient term,
//! and the modulus invariance of the ray energy integrand.

use lamex::extension::{energy_integrals, gradient_energy_bound, profile_kernel};
use lamex::fitting::log_log_slope;
use lamex::grid::{random_band_limited, SpaceTimeGrid};
use lamex::quad::{self, QuadratureSpec};
use lamex::symbol::LameParams;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lamex::Result<()> {
    let p = LameParams::new(1.0, 0.5, 1.0)?;
    let tau = std::f64::consts::TAU;
    let g = SpaceTimeGrid::new(&[8, 8], 8, &[8.0 * tau, 8.0 * tau], 8.0 * tau)?;
    let spec = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = random_band_limited(&g, g.spatial_dim(), 1, &mut rng);

    for s in [0.3, 0.5, 0.75] {
        let a = 1.0 - 2.0 * s;
        // mass below height M, over a dyadic ladder of truncations
        let pairs: Vec<(f64, f64)> = (3..=8)
            .map(|j| {
                let m = 0.5f64.powi(j);
                Ok((m, energy_integrals(&p, &u, s, m, &spec)?.0))
            })
            .collect::<lamex::Result<_>>()?;
        let slope = log_log_slope(&pairs, 1e-300);
        let (_, grad) = energy_integrals(&p, &u, s, 1.0, &spec)?;
        let bound = gradient_energy_bound(&p, &u, s, &spec)?;
        println!(
            "s={s}: bulk mass ~ M^{slope:.4} (expect {:.2}), gradient {grad:.6e} <= bound {bound:.6e}",
            1.0 + a
        );
    }

    // One mode's energy depends on its root L only through arg L: after
    // substituting w = |L| y, E(|L|) |L|^(1+a) is constant along each ray.
    let s = 0.75;
    let a = 1.0 - 2.0 * s;
    let theta = 0.5f64;
    let scaled = |r: f64| -> lamex::Result<f64> {
        let root = Complex64::from_polar(r, theta);
        let (value, _) = quad::adaptive(
            |y: f64| {
                let phi = profile_kernel(s, root * y).expect("kernel on valid ray");
                y.powf(a) * phi.norm_sqr()
            },
            0.0,
            50.0 / (r * theta.cos()),
            &spec,
        )?;
        Ok(value * r.powf(1.0 + a))
    };
    println!(
        "\nray invariance at arg L = {theta}: E(0.5)*0.5^(1+a) = {:.12e}, E(2)*2^(1+a) = {:.12e}",
        scaled(0.5)?,
        scaled(2.0)?
    );
    Ok(())
}
