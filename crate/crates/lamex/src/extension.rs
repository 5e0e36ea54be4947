//! Extension of boundary fields into the upper half-space y > 0.
//!
//! On each spectral branch a Fourier mode of boundary data extends as the
//! scalar profile m(y) = phi_s(L y), where L is the principal root of the
//! branch symbol and
//!
//!   phi_s(z) = 2^(1-s)/Gamma(s) z^s K_s(z),   phi_s(0+) = 1.
//!
//! The profile solves the degenerate equation m'' + (a/y) m' = L^2 m with
//! a = 1 - 2s, decays as y grows, and its weighted slope recovers the
//! fractional power of the generator at the boundary:
//!
//!   y^a m'(y)  ->  -(2^(1-2s) Gamma(1-s) / Gamma(s)) L^(2s)   as y -> 0.
//!
//! Everything here is built around that identity: matrix multipliers gluing
//! the two branches, trace errors measuring how fast Dirichlet and Neumann
//! data are attained along a ladder of heights, a subordination-quadrature
//! route that reproduces the profile without any Macdonald evaluation, and
//! weighted energy integrals of the extended field.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::{self, SpectralField, VectorField};
use crate::linalg::CMatrix;
use crate::macdonald::{bessel_k, subordination_integral};
use crate::quad::{adaptive, QuadratureSpec};
use crate::symbol::{self, FreqPoint, LameParams, SymbolMatrix};

/// Normalized profile kernel `phi_s(z) = 2^(1-s)/Gamma(s) z^s K_s(z)`.
///
/// Continuously extended by `phi_s(0) = 1`; callers hand in z = L y with L in
/// the closed right half-plane, so the principal power is unambiguous.
pub fn profile_kernel(s: f64, z: Complex64) -> Result<Complex64> {
    symbol::check_exponent(s, false)?;
    if z.norm() == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let k = bessel_k(s, z)?;
    Ok(z.powf(s) * k.value * 2f64.powf(1.0 - s) / gamma(s))
}

/// Slope kernel `psi_s(z) = 2^(1-s)/Gamma(s) z^s K_{1-s}(z)`.
///
/// d/dy phi_s(L y) = -L psi_s(L y); the kernel diverges at z = 0 for
/// s < 1/2, so the origin is rejected rather than patched.
pub fn flux_kernel(s: f64, z: Complex64) -> Result<Complex64> {
    symbol::check_exponent(s, false)?;
    if z.norm() == 0.0 {
        return Err(Error::DomainError(
            "flux kernel is singular at z = 0".into(),
        ));
    }
    let k = bessel_k(1.0 - s, z)?;
    Ok(z.powf(s) * k.value * 2f64.powf(1.0 - s) / gamma(s))
}

/// First height derivative of the profile, d/dy phi_s(l y) = -l psi_s(l y).
pub fn profile_kernel_dy(s: f64, l: Complex64, y: f64) -> Result<Complex64> {
    check_height(y)?;
    Ok(-l * flux_kernel(s, l * y)?)
}

/// Second height derivative of the profile. With c = 2^(1-s)/Gamma(s),
///
///   d^2/dy^2 phi_s(l y) = -c l^(1+s) y^(s-1) ( K_{1-s}(l y) - l y K_{2-s}(l y) ).
///
/// The order 2-s makes checking the profile equation m'' + (a/y) m' = l^2 m
/// exercise the Macdonald recurrence web instead of restating the equation.
pub fn profile_kernel_dyy(s: f64, l: Complex64, y: f64) -> Result<Complex64> {
    check_height(y)?;
    symbol::check_exponent(s, false)?;
    let c = 2f64.powf(1.0 - s) / gamma(s);
    let k_low = bessel_k(1.0 - s, l * y)?.value;
    let k_high = bessel_k(2.0 - s, l * y)?.value;
    Ok(-c * l.powf(1.0 + s) * y.powf(s - 1.0) * (k_low - l * y * k_high))
}

fn check_height(y: f64) -> Result<()> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::DomainError(format!(
            "extension height must be positive and finite, got {y}"
        )));
    }
    Ok(())
}

/// Extension multiplier M(xi, sigma, y): boundary amplitudes to amplitudes at
/// height y. The zero frequency extends constantly, so M(0, 0, y) = I.
pub fn extension_multiplier(
    p: &LameParams,
    f: &FreqPoint,
    y: f64,
    s: f64,
) -> Result<SymbolMatrix> {
    check_height(y)?;
    symbol::check_exponent(s, false)?;
    p.validate()?;
    let n = f.dim();
    if f.is_zero() {
        return Ok(SymbolMatrix::from_matrix(crate::linalg::eye(n)));
    }
    let shear = profile_kernel(s, f.shear_root(p) * y)?;
    let pressure = profile_kernel(s, f.pressure_root(p) * y)?;
    Ok(SymbolMatrix::from_matrix(symbol::branch_combination(
        &f.xi, shear, pressure,
    )))
}

/// Height derivative dM/dy, branchwise `-L psi_s(L y)`. Zero at the zero
/// frequency (the constant extension has no slope).
pub fn extension_dy_multiplier(
    p: &LameParams,
    f: &FreqPoint,
    y: f64,
    s: f64,
) -> Result<SymbolMatrix> {
    check_height(y)?;
    symbol::check_exponent(s, false)?;
    p.validate()?;
    let n = f.dim();
    if f.is_zero() {
        return Ok(SymbolMatrix::from_matrix(CMatrix::zeros(n, n)));
    }
    let l1 = f.shear_root(p);
    let l2 = f.pressure_root(p);
    let shear = -l1 * flux_kernel(s, l1 * y)?;
    let pressure = -l2 * flux_kernel(s, l2 * y)?;
    Ok(SymbolMatrix::from_matrix(symbol::branch_combination(
        &f.xi, shear, pressure,
    )))
}

/// Second height derivative d^2M/dy^2, branchwise [`profile_kernel_dyy`].
pub fn extension_dyy_multiplier(
    p: &LameParams,
    f: &FreqPoint,
    y: f64,
    s: f64,
) -> Result<SymbolMatrix> {
    check_height(y)?;
    symbol::check_exponent(s, false)?;
    p.validate()?;
    let n = f.dim();
    if f.is_zero() {
        return Ok(SymbolMatrix::from_matrix(CMatrix::zeros(n, n)));
    }
    let shear = profile_kernel_dyy(s, f.shear_root(p), y)?;
    let pressure = profile_kernel_dyy(s, f.pressure_root(p), y)?;
    Ok(SymbolMatrix::from_matrix(symbol::branch_combination(
        &f.xi, shear, pressure,
    )))
}

/// The profile by subordination instead of Macdonald evaluation:
///
///   phi_s(L y) = y^(2s)/(4^s Gamma(s)) Int_0^inf t^(-1-s)
///                exp(-y^2/(4t) - L^2 t) dt.
///
/// Needs Re L^2 > 0, i.e. xi != 0; for purely temporal frequencies the
/// integrand oscillates without decay and the route does not apply.
pub fn extension_multiplier_quadrature(
    p: &LameParams,
    f: &FreqPoint,
    y: f64,
    s: f64,
    spec: &QuadratureSpec,
) -> Result<SymbolMatrix> {
    check_height(y)?;
    symbol::check_exponent(s, false)?;
    p.validate()?;
    let n = f.dim();
    if f.is_zero() {
        return Ok(SymbolMatrix::from_matrix(crate::linalg::eye(n)));
    }
    let beta = Complex64::new(y * y / 4.0, 0.0);
    let scale = y.powf(2.0 * s) / (4f64.powf(s) * gamma(s));
    let branch = |gamma_arg: Complex64| -> Result<Complex64> {
        let (integral, _) = subordination_integral(-s, beta, gamma_arg, spec)?;
        Ok(integral * scale)
    };
    let shear = branch(f.shear_symbol(p))?;
    let pressure = branch(f.pressure_symbol(p))?;
    Ok(SymbolMatrix::from_matrix(symbol::branch_combination(
        &f.xi, shear, pressure,
    )))
}

/// Dirichlet-to-Neumann normalization `2^(2s-1) Gamma(s) / Gamma(1-s)`.
///
/// Multiplying the weighted slope y^a d/dy of the extension by this constant
/// produces exactly -A^s at the boundary. At s = 1/2 it is exactly one.
pub fn dtn_normalization(s: f64) -> f64 {
    2f64.powf(2.0 * s - 1.0) * gamma(s) / gamma(1.0 - s)
}

/// Default ladder of heights 2^0, 2^-1, ..., 2^-20.
pub fn default_ladder() -> Vec<f64> {
    (0..=20).map(|j| 0.5f64.powi(j)).collect()
}

/// One Fourier mode of an extension: boundary amplitude and the extended
/// values and slopes along the ladder.
#[derive(Debug, Clone)]
pub struct ModeProfile {
    /// Signed frequency indices, spatial axes first, temporal index last.
    pub indices: Vec<i64>,
    pub freq: FreqPoint,
    /// Boundary amplitude, one entry per component.
    pub data: Vec<Complex64>,
    /// `values[level][component]`, extended amplitude at `y_levels[level]`.
    pub values: Vec<Vec<Complex64>>,
    /// `dy_values[level][component]`, height derivative at the same levels.
    pub dy_values: Vec<Vec<Complex64>>,
}

/// Extended field sampled on a ladder of heights, one record per active mode.
#[derive(Debug, Clone)]
pub struct ExtensionProfile {
    pub s: f64,
    /// Weight exponent 1 - 2s of the degenerate equation.
    pub a: f64,
    pub y_levels: Vec<f64>,
    pub modes: Vec<ModeProfile>,
}

impl ExtensionProfile {
    /// Structural invariants: the exponent relation, a strictly decreasing
    /// ladder, and decay of each mode away from the boundary. The factor two
    /// leaves room for branch values that overshoot slightly at complex
    /// arguments before the exponential decay takes over.
    pub fn validate(&self) -> Result<()> {
        if self.a != 1.0 - 2.0 * self.s {
            return Err(Error::ValidationError(format!(
                "weight exponent {} does not match 1 - 2s for s = {}",
                self.a, self.s
            )));
        }
        check_ladder(&self.y_levels)?;
        for mode in &self.modes {
            let at = |level: usize| -> f64 {
                mode.values[level]
                    .iter()
                    .map(|v| v.norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            };
            let top = at(0);
            let bottom = at(self.y_levels.len() - 1);
            if top > 2.0 * bottom + 1e-300 {
                return Err(Error::ValidationError(format!(
                    "mode {:?} grows away from the boundary: |{top}| at y = {} vs |{bottom}| at y = {}",
                    mode.indices,
                    self.y_levels[0],
                    self.y_levels[self.y_levels.len() - 1],
                )));
            }
        }
        Ok(())
    }
}

fn check_ladder(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::ValidationError("empty height ladder".into()));
    }
    for w in levels.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::ValidationError(format!(
                "ladder must decrease strictly, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    if !(levels[levels.len() - 1] > 0.0) {
        return Err(Error::ValidationError(
            "ladder heights must stay positive".into(),
        ));
    }
    Ok(())
}

fn signed_indices(grid: &grid::SpaceTimeGrid, multi: &[usize]) -> Vec<i64> {
    let mut shape: Vec<usize> = grid.dims().to_vec();
    shape.push(grid.nt());
    multi
        .iter()
        .zip(&shape)
        .map(|(&k, &d)| {
            if k <= d / 2 {
                k as i64
            } else {
                k as i64 - d as i64
            }
        })
        .collect()
}

/// Extend every active mode of `u` along the ladder. Modes below 1e-12 of
/// the largest amplitude are dropped; Nyquist bins are skipped outright.
pub fn extension_profile(
    p: &LameParams,
    u: &VectorField,
    s: f64,
    y_levels: &[f64],
) -> Result<ExtensionProfile> {
    symbol::check_exponent(s, false)?;
    check_ladder(y_levels)?;
    let g = grid::forward_transform(u);
    let shape = u.grid.shape();
    let per = u.grid.samples_per_component();
    let mode_norm = |flat: usize| -> f64 {
        (0..u.components)
            .map(|c| g.mode(c, flat).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let largest = (0..per).map(mode_norm).fold(0.0f64, f64::max);
    if largest == 0.0 {
        return Err(Error::DegenerateInput(
            "cannot profile the zero field".into(),
        ));
    }
    let mut modes = Vec::new();
    for flat in 0..per {
        let multi = grid::decode(&shape, flat);
        if u.grid.is_nyquist(&multi) || mode_norm(flat) <= 1e-12 * largest {
            continue;
        }
        let freq = u.grid.frequency(&multi);
        let data: Vec<Complex64> = (0..u.components).map(|c| g.mode(c, flat)).collect();
        let mut values = Vec::with_capacity(y_levels.len());
        let mut dy_values = Vec::with_capacity(y_levels.len());
        for &y in y_levels {
            let m = extension_multiplier(p, &freq, y, s)?;
            let dm = extension_dy_multiplier(p, &freq, y, s)?;
            values.push(m.apply(&data));
            dy_values.push(dm.apply(&data));
        }
        modes.push(ModeProfile {
            indices: signed_indices(&u.grid, &multi),
            freq,
            data,
            values,
            dy_values,
        });
    }
    Ok(ExtensionProfile {
        s,
        a: 1.0 - 2.0 * s,
        y_levels: y_levels.to_vec(),
        modes,
    })
}

struct TraceSpectra {
    base: SpectralField,
    mapped: SpectralField,
}

fn mapped_spectra<F>(u: &VectorField, mapper: F) -> Result<TraceSpectra>
where
    F: Fn(&FreqPoint, &[Complex64]) -> Result<Vec<Complex64>>,
{
    let g = grid::forward_transform(u);
    let shape = u.grid.shape();
    let per = u.grid.samples_per_component();
    let mut base = SpectralField::zeros(u.grid.clone(), u.components);
    let mut mapped = SpectralField::zeros(u.grid.clone(), u.components);
    for flat in 0..per {
        let multi = grid::decode(&shape, flat);
        if u.grid.is_nyquist(&multi) {
            continue;
        }
        let freq = u.grid.frequency(&multi);
        let data: Vec<Complex64> = (0..u.components).map(|c| g.mode(c, flat)).collect();
        let out = mapper(&freq, &data)?;
        for c in 0..u.components {
            base.modes_mut()[c * per + flat] = data[c];
            mapped.modes_mut()[c * per + flat] = out[c];
        }
    }
    Ok(TraceSpectra { base, mapped })
}

/// Relative boundary error of the extension at height y, measured in the
/// solution-space norm with weight (1 + |xi|^4 + sigma^2)^s.
pub fn dirichlet_trace_error(p: &LameParams, u: &VectorField, s: f64, y: f64) -> Result<f64> {
    let spectra = mapped_spectra(u, |freq, data| {
        let m = extension_multiplier(p, freq, y, s)?;
        let v = m.apply(data);
        Ok(v.iter().zip(data).map(|(a, b)| a - b).collect())
    })?;
    let den = grid::weighted_spectral_norm(&spectra.base, s);
    if den == 0.0 {
        return Err(Error::DegenerateInput(
            "Dirichlet trace error of the zero field is undefined".into(),
        ));
    }
    Ok(grid::weighted_spectral_norm(&spectra.mapped, s) / den)
}

/// Relative error of the weighted flux against -A^s at height y, measured in
/// the dual norm with weight (1 + |xi|^4 + sigma^2)^(-s).
pub fn neumann_trace_error(p: &LameParams, u: &VectorField, s: f64, y: f64) -> Result<f64> {
    let a = 1.0 - 2.0 * s;
    let constant = dtn_normalization(s);
    let weight = constant * y.powf(a);
    let flux = mapped_spectra(u, |freq, data| {
        let dm = extension_dy_multiplier(p, freq, y, s)?;
        let target = symbol::frac_power(p, freq, s)?;
        let slope = dm.apply(data);
        let frac = target.apply(data);
        // residual of the flux identity: weighted slope plus A^s data
        Ok(slope
            .iter()
            .zip(&frac)
            .map(|(d, f)| d * weight + f)
            .collect())
    })?;
    let targets = mapped_spectra(u, |freq, data| {
        let target = symbol::frac_power(p, freq, s)?;
        Ok(target.apply(data))
    })?;
    let den = grid::weighted_spectral_norm(&targets.mapped, -s);
    if den == 0.0 {
        return Err(Error::DegenerateInput(
            "Neumann trace error needs a mode with nonzero symbol".into(),
        ));
    }
    Ok(grid::weighted_spectral_norm(&flux.mapped, -s) / den)
}

/// Scalar factor of the degenerate Poisson kernel,
///
///   q(y, t) = y^(2s) t^(-1-s) exp(-y^2/(4t)) / (4^s Gamma(s)).
///
/// Evaluated in log space so extreme (y, t) underflow to zero instead of
/// producing inf * 0.
pub fn poisson_kernel(s: f64, y: f64, t: f64) -> Result<f64> {
    symbol::check_exponent(s, false)?;
    if !(y > 0.0) || !(t > 0.0) {
        return Err(Error::DomainError(format!(
            "Poisson kernel needs y > 0 and t > 0, got y = {y}, t = {t}"
        )));
    }
    let log_q = 2.0 * s * y.ln()
        - (1.0 + s) * t.ln()
        - y * y / (4.0 * t)
        - (4f64.powf(s) * gamma(s)).ln();
    if log_q < -700.0 {
        Ok(0.0)
    } else {
        Ok(log_q.exp())
    }
}

/// Largest relative residual of the kernel identity
///
///   (d_yy + (a/y) d_y) q = (y^2/(4 t^2) - (1+s)/t) q
///
/// over the given (y, t) samples, with centered differences of step h in y.
pub fn poisson_kernel_residual(s: f64, samples: &[(f64, f64)], h: f64) -> Result<f64> {
    symbol::check_exponent(s, false)?;
    if !(h > 0.0) {
        return Err(Error::DomainError(format!("step must be positive, got {h}")));
    }
    let a = 1.0 - 2.0 * s;
    let mut worst = 0.0f64;
    for &(y, t) in samples {
        if h >= y {
            return Err(Error::DomainError(format!(
                "step {h} too large for sample height {y}"
            )));
        }
        let q0 = poisson_kernel(s, y, t)?;
        let qp = poisson_kernel(s, y + h, t)?;
        let qm = poisson_kernel(s, y - h, t)?;
        let dyy = (qp - 2.0 * q0 + qm) / (h * h);
        let dy = (qp - qm) / (2.0 * h);
        let lhs = dyy + a / y * dy;
        let factor = y * y / (4.0 * t * t) - (1.0 + s) / t;
        let rhs = factor * q0;
        let scale = q0 * (y * y / (4.0 * t * t) + (1.0 + s) / t) + 1e-300;
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    Ok(worst)
}

/// Per-branch energy densities of the normalized profile on the ray of
/// argument theta:
///
///   G_phi(theta) = Int_0^inf u^a |phi_s(e^{i theta} u)|^2 du
///   G_psi(theta) = Int_0^inf u^a |psi_s(e^{i theta} u)|^2 du
///
/// Both integrands decay like e^{-2 u cos theta}; the tail past 50/cos theta
/// is below 1e-40 of the peak and is dropped.
fn kernel_energies(
    s: f64,
    a: f64,
    theta: f64,
    spec: &QuadratureSpec,
    cache: &mut BTreeMap<u64, (f64, f64)>,
) -> Result<(f64, f64)> {
    let key = theta.abs().to_bits();
    if let Some(&hit) = cache.get(&key) {
        return Ok(hit);
    }
    let ray = Complex64::new(0.0, theta.abs()).exp();
    let upper = 50.0 / theta.abs().cos();
    let phi_sq = |u: f64| -> f64 {
        profile_kernel(s, ray * u).map(|v| v.norm_sqr() * u.powf(a)).unwrap_or(f64::NAN)
    };
    let psi_sq = |u: f64| -> f64 {
        flux_kernel(s, ray * u).map(|v| v.norm_sqr() * u.powf(a)).unwrap_or(f64::NAN)
    };
    let (g_phi, _) = adaptive(phi_sq, 0.0, upper, spec)?;
    let (g_psi, _) = adaptive(psi_sq, 0.0, upper, spec)?;
    if !g_phi.is_finite() || !g_psi.is_finite() {
        return Err(Error::QuadratureFailure(format!(
            "kernel energy integral failed on the ray theta = {theta}"
        )));
    }
    cache.insert(key, (g_phi, g_psi));
    Ok((g_phi, g_psi))
}

/// Split a mode amplitude into pressure-parallel and shear-orthogonal mass.
fn branch_masses(freq: &FreqPoint, data: &[Complex64]) -> (f64, f64) {
    let xi_sq = freq.xi_norm_sq();
    let total: f64 = data.iter().map(|v| v.norm_sqr()).sum();
    if xi_sq == 0.0 {
        // both branches coincide; count the mass once, on the shear side
        return (total, 0.0);
    }
    let mut along = Complex64::new(0.0, 0.0);
    for (x, v) in freq.xi.iter().zip(data) {
        along += v * x;
    }
    let parallel = along.norm_sqr() / xi_sq;
    ((total - parallel).max(0.0), parallel)
}

struct ModeBranch {
    weight: f64,
    root: Complex64,
    xi_sq: f64,
}

fn active_branches(
    p: &LameParams,
    g: &SpectralField,
) -> Result<(Vec<ModeBranch>, f64)> {
    let shape = g.grid.shape();
    let per = g.grid.samples_per_component();
    let mut branches = Vec::new();
    let mut zero_mode_mass = 0.0f64;
    for flat in 0..per {
        let multi = grid::decode(&shape, flat);
        if g.grid.is_nyquist(&multi) {
            continue;
        }
        let freq = g.grid.frequency(&multi);
        let data: Vec<Complex64> = (0..g.components).map(|c| g.mode(c, flat)).collect();
        let total: f64 = data.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            continue;
        }
        if freq.is_zero() {
            zero_mode_mass += total;
            continue;
        }
        let (shear_mass, pressure_mass) = branch_masses(&freq, &data);
        let xi_sq = freq.xi_norm_sq();
        if shear_mass > 0.0 {
            branches.push(ModeBranch {
                weight: shear_mass,
                root: freq.shear_root(p),
                xi_sq,
            });
        }
        if pressure_mass > 0.0 {
            branches.push(ModeBranch {
                weight: pressure_mass,
                root: freq.pressure_root(p),
                xi_sq,
            });
        }
    }
    Ok((branches, zero_mode_mass))
}

/// Weighted energies of the extended field,
///
///   bulk_l2   = Int_0^M y^a  Sum |ext u|^2 dy
///   bulk_grad = Int_0^inf y^a Sum (|grad_x ext u|^2 + |d_y ext u|^2) dy,
///
/// both summed over modes in the counting normalization of the transform.
/// The truncated integral substitutes u = y^(1+a) so the weight disappears
/// and the endpoint is regular; the gradient integral reduces per branch to
/// the ray energies of the scalar kernels.
pub fn energy_integrals(
    p: &LameParams,
    u: &VectorField,
    s: f64,
    upper_m: f64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    symbol::check_exponent(s, false)?;
    p.validate()?;
    if !(upper_m > 0.0) {
        return Err(Error::DomainError(format!(
            "truncation height must be positive, got {upper_m}"
        )));
    }
    let a = 1.0 - 2.0 * s;
    let g = grid::forward_transform(u);
    let (branches, zero_mode_mass) = active_branches(p, &g)?;
    let mut bulk_l2 = zero_mode_mass * upper_m.powf(1.0 + a) / (1.0 + a);
    let mut bulk_grad = 0.0f64;
    let mut cache = BTreeMap::new();
    for b in &branches {
        // Int_0^M y^a |phi(L y)|^2 dy with u = y^(1+a)
        let root = b.root;
        let integrand = |w: f64| -> f64 {
            let y = w.powf(1.0 / (1.0 + a));
            profile_kernel(s, root * y)
                .map(|v| v.norm_sqr())
                .unwrap_or(f64::NAN)
        };
        let (l2_part, _) = adaptive(integrand, 0.0, upper_m.powf(1.0 + a), spec)?;
        if !l2_part.is_finite() {
            return Err(Error::QuadratureFailure(
                "weighted profile integral failed".into(),
            ));
        }
        bulk_l2 += b.weight * l2_part / (1.0 + a);

        let (g_phi, g_psi) = kernel_energies(s, a, root.arg(), spec, &mut cache)?;
        let labs = root.norm();
        bulk_grad +=
            b.weight * (b.xi_sq * labs.powf(-1.0 - a) * g_phi + labs.powf(1.0 - a) * g_psi);
    }
    Ok((bulk_l2, bulk_grad))
}

/// Upper bound C_s Sum_branches |L|^(2s) |amplitude|^2 for the gradient
/// energy, with C_s = max over ray arguments of G_phi/c_min + G_psi. The
/// maximum runs over the arguments realized by the field plus a fixed scan
/// of the admissible quarter-plane sector.
pub fn gradient_energy_bound(
    p: &LameParams,
    u: &VectorField,
    s: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    symbol::check_exponent(s, false)?;
    p.validate()?;
    let a = 1.0 - 2.0 * s;
    let g = grid::forward_transform(u);
    let (branches, _) = active_branches(p, &g)?;
    let c_min = p.ellipticity_floor();
    let mut cache = BTreeMap::new();
    let mut thetas: Vec<f64> = (0..=4).map(|j| j as f64 * 0.99 * 0.25 * std::f64::consts::FRAC_PI_4).collect();
    thetas.extend(branches.iter().map(|b| b.root.arg().abs()));
    let mut c_s = 0.0f64;
    for theta in thetas {
        let (g_phi, g_psi) = kernel_energies(s, a, theta, spec, &mut cache)?;
        c_s = c_s.max(g_phi / c_min + g_psi);
    }
    let mut symbol_mass = 0.0f64;
    for b in &branches {
        symbol_mass += b.weight * b.root.norm().powf(2.0 * s);
    }
    Ok(c_s * symbol_mass)
}

/// CSV dump of a profile: one row per mode and height, with the per-mode
/// Dirichlet and Neumann errors alongside the raw magnitudes.
pub fn write_profile_csv<W: Write>(
    profile: &ExtensionProfile,
    p: &LameParams,
    out: &mut W,
) -> Result<()> {
    let dim = profile
        .modes
        .first()
        .map(|m| m.freq.dim())
        .unwrap_or(0);
    for i in 0..dim {
        write!(out, "k{i},")?;
    }
    writeln!(out, "m,y,value_abs,dy_value_abs,dirichlet_err,neumann_err")?;
    let s = profile.s;
    let a = profile.a;
    let constant = dtn_normalization(s);
    for mode in &profile.modes {
        let data_norm = mode.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let target = symbol::frac_power(p, &mode.freq, s)?;
        let frac = target.apply(&mode.data);
        let frac_norm = frac.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for (level, &y) in profile.y_levels.iter().enumerate() {
            let value = &mode.values[level];
            let dy_value = &mode.dy_values[level];
            let value_abs = value.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let dy_abs = dy_value.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let dirichlet = value
                .iter()
                .zip(&mode.data)
                .map(|(v, d)| (v - d).norm_sqr())
                .sum::<f64>()
                .sqrt()
                / data_norm;
            let weight = constant * y.powf(a);
            let flux_err = dy_value
                .iter()
                .zip(&frac)
                .map(|(d, f)| (d * weight + f).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let neumann = if frac_norm > 0.0 { flux_err / frac_norm } else { 0.0 };
            for &k in &mode.indices[..mode.indices.len() - 1] {
                write!(out, "{k},")?;
            }
            let m_index = mode.indices[mode.indices.len() - 1];
            writeln!(
                out,
                "{m_index},{y:.16e},{value_abs:.16e},{dy_abs:.16e},{dirichlet:.16e},{neumann:.16e}"
            )?;
        }
    }
    Ok(())
}
