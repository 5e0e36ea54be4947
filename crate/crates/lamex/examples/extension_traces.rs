//! The degenerate extension to the upper half space y > 0. Its value at
//! y -> 0 recovers the boundary data (Dirichlet trace) and its weighted
//! slope recovers the fractional operator (Neumann trace), at rates 2s
//! and 2(1-s) respectively. Both show up cleanly as log-log slopes.

use lamex::extension::{dirichlet_trace_error, dtn_normalization, neumann_trace_error};
use lamex::fitting::log_log_slope;
use lamex::grid::{random_band_limited, SpaceTimeGrid};
use lamex::symbol::LameParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lamex::Result<()> {
    let p = LameParams::new(1.0, 0.5, 1.0)?;
    let tau = std::f64::consts::TAU;
    let g = SpaceTimeGrid::new(&[8, 8], 8, &[8.0 * tau, 8.0 * tau], 8.0 * tau)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u = random_band_limited(&g, g.spatial_dim(), 1, &mut rng);

    let ladder: Vec<f64> = (0..10).map(|j| 1e-2 * 0.5f64.powi(j)).collect();
    println!("{:>5} {:>16} {:>10} {:>16} {:>10}", "s", "dirichlet@1e-3", "rate", "neumann@1e-3", "rate");
    for s in [0.3, 0.5, 0.75] {
        let d_pairs: Vec<(f64, f64)> = ladder
            .iter()
            .map(|&y| Ok((y, dirichlet_trace_error(&p, &u, s, y)?)))
            .collect::<lamex::Result<_>>()?;
        let n_pairs: Vec<(f64, f64)> = ladder
            .iter()
            .map(|&y| Ok((y, neumann_trace_error(&p, &u, s, y)?)))
            .collect::<lamex::Result<_>>()?;
        println!(
            "{s:>5} {:>16.3e} {:>10.4} {:>16.3e} {:>10.4}",
            dirichlet_trace_error(&p, &u, s, 1e-3)?,
            log_log_slope(&d_pairs, 1e-300),
            neumann_trace_error(&p, &u, s, 1e-3)?,
            log_log_slope(&n_pairs, 1e-300),
        );
    }
    println!("\nexpected rates: 2s and 2(1-s)");

    // The constant in front of the weighted Neumann limit; at s = 1/2 the
    // extension is the plain heat half-space problem and it is exactly 1.
    for s in [0.3, 0.5, 0.75] {
        println!("normalization c_{s} = {}", dtn_normalization(s));
    }
    Ok(())
}
