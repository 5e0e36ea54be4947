//! Periodic space-time sampling grids and the discrete Fourier layer.
//!
//! Everything here treats time as one more periodic axis. The operator
//! identities verified by this crate are per-mode algebraic statements, so
//! periodic truncation is exact on band-limited data; there is no domain
//! truncation error to budget for.
//!
//! Transforms are unitary (each axis scaled by `1/sqrt(len)` in both
//! directions), so Plancherel identities read literally. Mode `(k, m)`
//! carries the frequency `xi_j = 2 pi k_j' / length_j`, `sigma = 2 pi m' /
//! period_t`, with `k'` the signed index folded into `(-d/2, d/2]`. Nyquist
//! bins have no conjugate partner on an even grid and are zeroed whenever a
//! multiplier is applied; band-limited fields never populate them.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::symbol::{self, FreqPoint, LameParams};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::io::{Read, Write};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid {
    dims: Vec<usize>,
    nt: usize,
    lengths: Vec<f64>,
    period_t: f64,
}

impl SpaceTimeGrid {
    pub fn new(dims: &[usize], nt: usize, lengths: &[f64], period_t: f64) -> Result<Self> {
        let n = dims.len();
        if n < 1 || n > 3 {
            return Err(Error::ValidationError(format!(
                "spatial dimension must be 1..=3, got {n}"
            )));
        }
        if lengths.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} lengths for {} spatial axes",
                lengths.len(),
                n
            )));
        }
        for (&d, &l) in dims.iter().zip(lengths) {
            if d < 4 || d % 2 != 0 {
                return Err(Error::ValidationError(format!(
                    "sample counts must be even and at least 4, got {d}"
                )));
            }
            if !(l > 0.0) {
                return Err(Error::ValidationError(format!("period {l} must be positive")));
            }
        }
        if nt < 4 || nt % 2 != 0 {
            return Err(Error::ValidationError(format!(
                "time sample count must be even and at least 4, got {nt}"
            )));
        }
        if !(period_t > 0.0) {
            return Err(Error::ValidationError(format!(
                "time period {period_t} must be positive"
            )));
        }
        Ok(SpaceTimeGrid {
            dims: dims.to_vec(),
            nt,
            lengths: lengths.to_vec(),
            period_t,
        })
    }

    pub fn spatial_dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn period_t(&self) -> f64 {
        self.period_t
    }

    /// Space and time extents as one shape vector, time last.
    pub fn shape(&self) -> Vec<usize> {
        let mut s = self.dims.clone();
        s.push(self.nt);
        s
    }

    pub fn samples_per_component(&self) -> usize {
        self.dims.iter().product::<usize>() * self.nt
    }

    fn signed_index(k: usize, len: usize) -> i64 {
        if k <= len / 2 {
            k as i64
        } else {
            k as i64 - len as i64
        }
    }

    /// Frequency carried by the mode with storage index `multi` (time last).
    pub fn frequency(&self, multi: &[usize]) -> FreqPoint {
        assert_eq!(multi.len(), self.dims.len() + 1);
        let xi: Vec<f64> = (0..self.dims.len())
            .map(|a| {
                let signed = Self::signed_index(multi[a], self.dims[a]) as f64;
                2.0 * std::f64::consts::PI * signed / self.lengths[a]
            })
            .collect();
        let m = Self::signed_index(multi[self.dims.len()], self.nt) as f64;
        let sigma = 2.0 * std::f64::consts::PI * m / self.period_t;
        FreqPoint::new(xi, sigma)
    }

    /// True when any axis sits on its unpaired half-sample bin.
    pub fn is_nyquist(&self, multi: &[usize]) -> bool {
        let shape = self.shape();
        multi.iter().zip(&shape).any(|(&k, &d)| k == d / 2)
    }

    /// Physical coordinates of the sample with storage index `multi`.
    pub fn coordinates(&self, multi: &[usize]) -> (Vec<f64>, f64) {
        let x: Vec<f64> = (0..self.dims.len())
            .map(|a| multi[a] as f64 * self.lengths[a] / self.dims[a] as f64)
            .collect();
        let t = multi[self.dims.len()] as f64 * self.period_t / self.nt as f64;
        (x, t)
    }
}

pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut st = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        st[a] = st[a + 1] * shape[a + 1];
    }
    st
}

pub fn decode(shape: &[usize], mut flat: usize) -> Vec<usize> {
    let st = strides(shape);
    let mut idx = vec![0; shape.len()];
    for a in 0..shape.len() {
        idx[a] = flat / st[a];
        flat %= st[a];
    }
    idx
}

/// Real samples of a vector-valued function on the grid, stored row-major
/// with layout `[component][x0][x1]...[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: SpaceTimeGrid,
    pub components: usize,
    samples: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: SpaceTimeGrid, components: usize) -> Self {
        let len = grid.samples_per_component() * components;
        VectorField {
            grid,
            components,
            samples: vec![0.0; len],
        }
    }

    /// Sample a closure of physical coordinates: `f(x, t)` returns all
    /// component values at that point.
    pub fn from_fn<F>(grid: SpaceTimeGrid, components: usize, f: F) -> Self
    where
        F: Fn(&[f64], f64) -> Vec<f64>,
    {
        let mut out = Self::zeros(grid, components);
        let per = out.grid.samples_per_component();
        let shape = out.grid.shape();
        for flat in 0..per {
            let multi = decode(&shape, flat);
            let (x, t) = out.grid.coordinates(&multi);
            let values = f(&x, t);
            assert_eq!(values.len(), components, "component count from closure");
            for (c, v) in values.into_iter().enumerate() {
                out.samples[c * per + flat] = v;
            }
        }
        out
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn value(&self, component: usize, flat: usize) -> f64 {
        self.samples[component * self.grid.samples_per_component() + flat]
    }

    /// Plain counting l2 norm over all samples and components.
    pub fn l2_norm(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &VectorField) -> f64 {
        assert_eq!(self.samples.len(), other.samples.len());
        self.samples
            .iter()
            .zip(&other.samples)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Linear combination `self + factor * other`, shapes must agree.
    pub fn axpy(&self, factor: f64, other: &VectorField) -> Result<VectorField> {
        if self.grid != other.grid || self.components != other.components {
            return Err(Error::ShapeMismatch("field combination".into()));
        }
        let mut out = self.clone();
        for (o, x) in out.samples.iter_mut().zip(&other.samples) {
            *o += factor * x;
        }
        Ok(out)
    }
}

/// Complex mode amplitudes, same layout as the sample storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: SpaceTimeGrid,
    pub components: usize,
    modes: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: SpaceTimeGrid, components: usize) -> Self {
        let len = grid.samples_per_component() * components;
        SpectralField {
            grid,
            components,
            modes: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn modes(&self) -> &[Complex64] {
        &self.modes
    }

    pub fn modes_mut(&mut self) -> &mut [Complex64] {
        &mut self.modes
    }

    pub fn mode(&self, component: usize, flat: usize) -> Complex64 {
        self.modes[component * self.grid.samples_per_component() + flat]
    }

    pub fn l2_norm(&self) -> f64 {
        self.modes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest deviation from Hermitian symmetry `g(-k,-m) = conj g(k,m)`;
    /// zero (to rounding) whenever the field came from real samples.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let shape = self.grid.shape();
        let per = self.grid.samples_per_component();
        let st = strides(&shape);
        let mut worst = 0.0f64;
        for c in 0..self.components {
            for flat in 0..per {
                let multi = decode(&shape, flat);
                let mirrored: usize = multi
                    .iter()
                    .zip(&shape)
                    .zip(&st)
                    .map(|((&k, &d), &stride)| ((d - k) % d) * stride)
                    .sum();
                let a = self.modes[c * per + flat];
                let b = self.modes[c * per + mirrored];
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }
}

fn fft_pass(data: &mut [Complex64], shape: &[usize], axis: usize, fft: &Arc<dyn Fft<f64>>) {
    let st = strides(shape);
    let len = shape[axis];
    let total: usize = shape.iter().product();
    let scale = 1.0 / (len as f64).sqrt();
    let mut line = vec![Complex64::new(0.0, 0.0); len];
    for base in 0..total {
        if (base / st[axis]) % len != 0 {
            continue;
        }
        for j in 0..len {
            line[j] = data[base + j * st[axis]];
        }
        fft.process(&mut line);
        for j in 0..len {
            data[base + j * st[axis]] = line[j] * scale;
        }
    }
}

/// Unitary DFT of every component, time axis included.
pub fn forward_transform(f: &VectorField) -> SpectralField {
    let shape = f.grid.shape();
    let per = f.grid.samples_per_component();
    let mut planner = FftPlanner::new();
    let mut out = SpectralField::zeros(f.grid.clone(), f.components);
    for c in 0..f.components {
        let mut data: Vec<Complex64> = f.samples[c * per..(c + 1) * per]
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        for axis in 0..shape.len() {
            let fft = planner.plan_fft_forward(shape[axis]);
            fft_pass(&mut data, &shape, axis, &fft);
        }
        out.modes[c * per..(c + 1) * per].copy_from_slice(&data);
    }
    out
}

/// Unitary inverse DFT; the imaginary residue is discarded. Use
/// [`inverse_transform_checked`] when the residue itself is the thing under
/// test.
pub fn inverse_transform(g: &SpectralField) -> VectorField {
    inverse_transform_checked(g).0
}

/// Inverse DFT returning the largest imaginary residue alongside the field.
pub fn inverse_transform_checked(g: &SpectralField) -> (VectorField, f64) {
    let shape = g.grid.shape();
    let per = g.grid.samples_per_component();
    let mut planner = FftPlanner::new();
    let mut out = VectorField::zeros(g.grid.clone(), g.components);
    let mut residue = 0.0f64;
    for c in 0..g.components {
        let mut data: Vec<Complex64> = g.modes[c * per..(c + 1) * per].to_vec();
        for axis in 0..shape.len() {
            let fft = planner.plan_fft_inverse(shape[axis]);
            fft_pass(&mut data, &shape, axis, &fft);
        }
        for (o, z) in out.samples[c * per..(c + 1) * per].iter_mut().zip(&data) {
            *o = z.re;
            residue = residue.max(z.im.abs());
        }
    }
    (out, residue)
}

/// Apply a matrix multiplier `M(xi, sigma)` acting on all components at once.
/// Nyquist bins are zeroed: they carry no conjugate partner, and a generic
/// multiplier would break the reality of the output there.
pub fn apply_matrix_multiplier<F>(f: &VectorField, multiplier: F) -> Result<VectorField>
where
    F: Fn(&FreqPoint) -> Result<CMatrix>,
{
    let spectral = forward_transform(f);
    let mapped = map_spectrum(&spectral, multiplier)?;
    Ok(inverse_transform(&mapped))
}

/// Spectral-side form of [`apply_matrix_multiplier`]: same Nyquist zeroing and
/// shape checks, but input and output stay in mode space.  Trace diagnostics
/// compare spectra directly and never need the physical samples.
pub fn map_spectrum<F>(g: &SpectralField, multiplier: F) -> Result<SpectralField>
where
    F: Fn(&FreqPoint) -> Result<CMatrix>,
{
    let mut out = g.clone();
    let shape = g.grid.shape();
    let per = g.grid.samples_per_component();
    let m_components = g.components;
    for flat in 0..per {
        let multi = decode(&shape, flat);
        if g.grid.is_nyquist(&multi) {
            for c in 0..m_components {
                out.modes[c * per + flat] = Complex64::new(0.0, 0.0);
            }
            continue;
        }
        let freq = g.grid.frequency(&multi);
        let m = multiplier(&freq)?;
        if m.nrows() != m_components || m.ncols() != m_components {
            return Err(Error::ShapeMismatch(format!(
                "multiplier is {}x{} on a field with {} components",
                m.nrows(),
                m.ncols(),
                m_components
            )));
        }
        let input: Vec<Complex64> = (0..m_components)
            .map(|c| g.modes[c * per + flat])
            .collect();
        for i in 0..m_components {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m_components {
                acc += m[(i, j)] * input[j];
            }
            out.modes[i * per + flat] = acc;
        }
    }
    Ok(out)
}

/// Scalar multiplier applied to every component independently.
pub fn apply_scalar_multiplier<F>(f: &VectorField, multiplier: F) -> Result<VectorField>
where
    F: Fn(&FreqPoint) -> Complex64,
{
    let mut spectral = forward_transform(f);
    let shape = f.grid.shape();
    let per = f.grid.samples_per_component();
    for flat in 0..per {
        let multi = decode(&shape, flat);
        let factor = if f.grid.is_nyquist(&multi) {
            Complex64::new(0.0, 0.0)
        } else {
            multiplier(&f.grid.frequency(&multi))
        };
        for c in 0..f.components {
            spectral.modes[c * per + flat] *= factor;
        }
    }
    Ok(inverse_transform(&spectral))
}

/// The fractional parabolic Lame operator acting on sampled fields:
/// per-mode multiplication by the principal power of the symbol.
pub fn apply_fractional(p: &LameParams, f: &VectorField, s: f64) -> Result<VectorField> {
    if f.components != f.grid.spatial_dim() {
        return Err(Error::ShapeMismatch(format!(
            "operator acts on {}-component fields, got {}",
            f.grid.spatial_dim(),
            f.components
        )));
    }
    apply_matrix_multiplier(f, |freq| {
        Ok(symbol::frac_power(p, freq, s)?.into_matrix())
    })
}

/// One step of the space-time semigroup `exp(-tau (d/dt - L))`.
pub fn apply_evolutive(p: &LameParams, f: &VectorField, tau: f64) -> Result<VectorField> {
    if f.components != f.grid.spatial_dim() {
        return Err(Error::ShapeMismatch(format!(
            "semigroup acts on {}-component fields, got {}",
            f.grid.spatial_dim(),
            f.components
        )));
    }
    apply_matrix_multiplier(f, |freq| {
        Ok(symbol::evolutive_multiplier(p, freq, tau)?.into_matrix())
    })
}

/// Spectral divergence of an n-component field.
pub fn divergence(f: &VectorField) -> Result<VectorField> {
    let n = f.grid.spatial_dim();
    if f.components != n {
        return Err(Error::ShapeMismatch(format!(
            "divergence needs {} components, got {}",
            n, f.components
        )));
    }
    let spectral = forward_transform(f);
    let shape = f.grid.shape();
    let per = f.grid.samples_per_component();
    let mut out = SpectralField::zeros(f.grid.clone(), 1);
    for flat in 0..per {
        let multi = decode(&shape, flat);
        if f.grid.is_nyquist(&multi) {
            continue;
        }
        let freq = f.grid.frequency(&multi);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..n {
            acc += Complex64::new(0.0, freq.xi[c]) * spectral.modes[c * per + flat];
        }
        out.modes[flat] = acc;
    }
    Ok(inverse_transform(&out))
}

/// Spectral gradient of a scalar field.
pub fn gradient(f: &VectorField) -> Result<VectorField> {
    if f.components != 1 {
        return Err(Error::ShapeMismatch(format!(
            "gradient needs a scalar field, got {} components",
            f.components
        )));
    }
    let n = f.grid.spatial_dim();
    let spectral = forward_transform(f);
    let shape = f.grid.shape();
    let per = f.grid.samples_per_component();
    let mut out = SpectralField::zeros(f.grid.clone(), n);
    for flat in 0..per {
        let multi = decode(&shape, flat);
        if f.grid.is_nyquist(&multi) {
            continue;
        }
        let freq = f.grid.frequency(&multi);
        for c in 0..n {
            out.modes[c * per + flat] = Complex64::new(0.0, freq.xi[c]) * spectral.modes[flat];
        }
    }
    Ok(inverse_transform(&out))
}

/// Component-wise spectral Laplacian.
pub fn laplacian(f: &VectorField) -> Result<VectorField> {
    apply_scalar_multiplier(f, |freq| Complex64::new(-freq.xi_norm_sq(), 0.0))
}

/// Spectral time derivative along the periodic time axis.
pub fn time_derivative(f: &VectorField) -> Result<VectorField> {
    apply_scalar_multiplier(f, |freq| Complex64::new(0.0, freq.sigma))
}

/// The Lame system `L f = mu Laplacian f + (mu + lambda) grad div f`,
/// composed from the individual spectral operators rather than a fused
/// multiplier, so it can serve as an independent reference for `s = 1`.
pub fn lame_operator(p: &LameParams, f: &VectorField) -> Result<VectorField> {
    let lap = laplacian(f)?;
    let grad_div = gradient(&divergence(f)?)?;
    let mut out = VectorField::zeros(f.grid.clone(), f.components);
    for (o, (a, b)) in out
        .samples
        .iter_mut()
        .zip(lap.samples.iter().zip(&grad_div.samples))
    {
        *o = p.mu * a + (p.mu + p.lambda) * b;
    }
    Ok(out)
}

/// Space-time Sobolev norm with the parabolic weight
/// `(1 + |xi|^4 + sigma^2)^s`; this is `(1 + | |xi|^2 + i sigma |^2)^s`.
pub fn sobolev_norm(f: &VectorField, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidExponent(s));
    }
    Ok(weighted_spectral_norm(&forward_transform(f), s))
}

/// The same weighted norm on spectral data, for any real exponent. Negative
/// exponents give the dual norms used for flux-trace errors.
pub fn weighted_spectral_norm(g: &SpectralField, s: f64) -> f64 {
    let shape = g.grid.shape();
    let per = g.grid.samples_per_component();
    let mut total = 0.0f64;
    for flat in 0..per {
        let multi = decode(&shape, flat);
        let freq = g.grid.frequency(&multi);
        let q = freq.xi_norm_sq();
        let weight = (1.0 + q * q + freq.sigma * freq.sigma).powf(s);
        for c in 0..g.components {
            total += weight * g.modes[c * per + flat].norm_sqr();
        }
    }
    total.sqrt()
}

const FIELD_MAGIC: &[u8; 4] = b"LXFD";
const FIELD_VERSION: u32 = 1;

/// Serialize a field: magic, version, grid header, then raw little-endian
/// samples in storage order. The round trip is bit-exact.
pub fn export_field<W: Write>(f: &VectorField, w: &mut W) -> Result<()> {
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&FIELD_VERSION.to_le_bytes())?;
    w.write_all(&(f.grid.spatial_dim() as u32).to_le_bytes())?;
    for &d in f.grid.dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    w.write_all(&(f.grid.nt() as u64).to_le_bytes())?;
    for &l in f.grid.lengths() {
        w.write_all(&l.to_le_bytes())?;
    }
    w.write_all(&f.grid.period_t().to_le_bytes())?;
    w.write_all(&(f.components as u32).to_le_bytes())?;
    w.write_all(&(f.samples.len() as u64).to_le_bytes())?;
    for v in &f.samples {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn import_field<R: Read>(r: &mut R) -> Result<VectorField> {
    let magic: [u8; 4] = read_exact_array(r)?;
    if &magic != FIELD_MAGIC {
        return Err(Error::ParseError("not a field file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(read_exact_array(r)?);
    if version != FIELD_VERSION {
        return Err(Error::ParseError(format!(
            "unsupported field file version {version}"
        )));
    }
    let n = u32::from_le_bytes(read_exact_array(r)?) as usize;
    if n < 1 || n > 3 {
        return Err(Error::ParseError(format!("bad spatial dimension {n}")));
    }
    let mut dims = Vec::with_capacity(n);
    for _ in 0..n {
        dims.push(u64::from_le_bytes(read_exact_array(r)?) as usize);
    }
    let nt = u64::from_le_bytes(read_exact_array(r)?) as usize;
    let mut lengths = Vec::with_capacity(n);
    for _ in 0..n {
        lengths.push(f64::from_le_bytes(read_exact_array(r)?));
    }
    let period_t = f64::from_le_bytes(read_exact_array(r)?);
    let grid = SpaceTimeGrid::new(&dims, nt, &lengths, period_t)?;
    let components = u32::from_le_bytes(read_exact_array(r)?) as usize;
    let count = u64::from_le_bytes(read_exact_array(r)?) as usize;
    if count != components * grid.samples_per_component() {
        return Err(Error::ShapeMismatch(format!(
            "sample count {count} does not match {} components on the declared grid",
            components
        )));
    }
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        samples.push(f64::from_le_bytes(read_exact_array(r)?));
    }
    Ok(VectorField {
        grid,
        components,
        samples,
    })
}

/// Random real band-limited field: populate modes with `|k'|, |m'|` at most
/// `band`, then symmetrize so the samples are exactly real.
pub fn random_band_limited(
    grid: &SpaceTimeGrid,
    components: usize,
    band: usize,
    rng: &mut impl rand::Rng,
) -> VectorField {
    let mut spectral = SpectralField::zeros(grid.clone(), components);
    let shape = grid.shape();
    let per = grid.samples_per_component();
    for c in 0..components {
        for flat in 0..per {
            let multi = decode(&shape, flat);
            let in_band = multi.iter().zip(&shape).all(|(&k, &d)| {
                let signed = SpaceTimeGrid::signed_index(k, d).unsigned_abs() as usize;
                signed <= band && k != d / 2
            });
            if in_band {
                spectral.modes[c * per + flat] =
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
    }
    // fold in the mirrored conjugate to restore Hermitian symmetry
    let st = strides(&shape);
    let mut symmetric = spectral.clone();
    for c in 0..components {
        for flat in 0..per {
            let multi = decode(&shape, flat);
            let mirrored: usize = multi
                .iter()
                .zip(&shape)
                .zip(&st)
                .map(|((&k, &d), &stride)| ((d - k) % d) * stride)
                .sum();
            let a = spectral.modes[c * per + flat];
            let b = spectral.modes[c * per + mirrored].conj();
            symmetric.modes[c * per + flat] = 0.5 * (a + b);
        }
    }
    inverse_transform(&symmetric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn tau() -> f64 {
        2.0 * PI
    }

    fn small_grid() -> SpaceTimeGrid {
        SpaceTimeGrid::new(&[8, 8], 8, &[tau(), tau()], tau()).unwrap()
    }

    fn params() -> LameParams {
        LameParams::new(1.0, 0.5, 0.25).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(SpaceTimeGrid::new(&[4, 4], 4, &[1.0, 1.0], 1.0).is_ok());
        assert!(SpaceTimeGrid::new(&[], 4, &[], 1.0).is_err());
        assert!(SpaceTimeGrid::new(&[4, 4, 4, 4], 4, &[1.0; 4], 1.0).is_err());
        assert!(SpaceTimeGrid::new(&[5, 4], 4, &[1.0, 1.0], 1.0).is_err());
        assert!(SpaceTimeGrid::new(&[2, 4], 4, &[1.0, 1.0], 1.0).is_err());
        assert!(SpaceTimeGrid::new(&[4, 4], 3, &[1.0, 1.0], 1.0).is_err());
        assert!(SpaceTimeGrid::new(&[4, 4], 4, &[1.0, -1.0], 1.0).is_err());
        assert!(SpaceTimeGrid::new(&[4, 4], 4, &[1.0], 1.0).is_err());
    }

    #[test]
    fn constant_field_concentrates_on_the_zero_mode() {
        let grid = small_grid();
        let f = VectorField::from_fn(grid.clone(), 1, |_, _| vec![2.5]);
        let spectral = forward_transform(&f);
        let total = grid.samples_per_component() as f64;
        assert!((spectral.mode(0, 0).re - 2.5 * total.sqrt()).abs() < 1e-12);
        assert!(spectral.mode(0, 0).im.abs() < 1e-12);
        for flat in 1..grid.samples_per_component() {
            assert!(spectral.mode(0, flat).norm() < 1e-12);
        }
    }

    #[test]
    fn cosine_splits_into_conjugate_pair() {
        let grid = small_grid();
        let f = VectorField::from_fn(grid.clone(), 1, |x, _| vec![(x[0]).cos()]);
        let spectral = forward_transform(&f);
        let per = grid.samples_per_component();
        let shape = grid.shape();
        let mut hits = 0;
        for flat in 0..per {
            let multi = decode(&shape, flat);
            let z = spectral.mode(0, flat);
            if z.norm() > 1e-10 {
                hits += 1;
                assert!(multi[1] == 0 && multi[2] == 0);
                assert!(multi[0] == 1 || multi[0] == shape[0] - 1);
                let total = per as f64;
                assert!((z.re - 0.5 * total.sqrt()).abs() < 1e-10);
                assert!(z.im.abs() < 1e-10);
            }
        }
        assert_eq!(hits, 2);
        assert!(spectral.conjugate_symmetry_defect() < 1e-12);
    }

    #[test]
    fn round_trip_and_plancherel() {
        let grid = small_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let mut f = VectorField::zeros(grid.clone(), 2);
            for v in f.samples_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            let spectral = forward_transform(&f);
            assert!((spectral.l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());
            let (back, residue) = inverse_transform_checked(&spectral);
            assert!(f.max_abs_diff(&back) < 1e-12);
            assert!(residue < 1e-12);
            assert!(spectral.conjugate_symmetry_defect() < 1e-12);
        }
    }

    #[test]
    fn first_power_is_the_differential_operator() {
        let p = params();
        let grid = small_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_band_limited(&grid, 2, 2, &mut rng);
        let via_power = apply_fractional(&p, &f, 1.0).unwrap();
        let reference = time_derivative(&f)
            .unwrap()
            .axpy(-1.0, &lame_operator(&p, &f).unwrap())
            .unwrap();
        let gap = via_power.max_abs_diff(&reference);
        assert!(gap < 1e-12 * f.max_abs().max(1.0), "gap {gap}");
    }

    #[test]
    fn single_mode_eigen_action() {
        let p = params();
        let grid = small_grid();
        let s = 0.6;
        // u = Re(v e^{i(k.x + sigma t)}) for one band-limited mode
        let k = [1.0, 2.0];
        let sigma = 1.0;
        let v = [
            Complex64::new(0.4, -0.3),
            Complex64::new(-1.1, 0.2),
        ];
        let phase = |x: &[f64], t: f64| Complex64::new(0.0, k[0] * x[0] + k[1] * x[1] + sigma * t).exp();
        let f = VectorField::from_fn(grid.clone(), 2, |x, t| {
            let ph = phase(x, t);
            vec![(v[0] * ph).re, (v[1] * ph).re]
        });
        let freq = FreqPoint::new(k.to_vec(), sigma);
        let a_s = symbol::frac_power(&p, &freq, s).unwrap();
        let av = a_s.apply(&v);
        let want = VectorField::from_fn(grid.clone(), 2, |x, t| {
            let ph = phase(x, t);
            vec![(av[0] * ph).re, (av[1] * ph).re]
        });
        let got = apply_fractional(&p, &f, s).unwrap();
        assert!(got.max_abs_diff(&want) < 1e-12, "gap {}", got.max_abs_diff(&want));
    }

    #[test]
    fn gradient_and_divergence_free_amplifications() {
        let p = params();
        let grid = small_grid();
        let s = 0.5;
        let k = [2.0, 1.0];
        let norm_sq = 5.0;
        // gradient-type mode: v parallel to k
        let grad_field = VectorField::from_fn(grid.clone(), 2, |x, _| {
            let ph = (k[0] * x[0] + k[1] * x[1]).cos();
            vec![k[0] * ph, k[1] * ph]
        });
        // divergence-free mode: v orthogonal to k
        let div_free = VectorField::from_fn(grid.clone(), 2, |x, _| {
            let ph = (k[0] * x[0] + k[1] * x[1]).cos();
            vec![-k[1] * ph, k[0] * ph]
        });
        let amp_grad = apply_fractional(&p, &grad_field, s).unwrap().l2_norm()
            / grad_field.l2_norm();
        let amp_div = apply_fractional(&p, &div_free, s).unwrap().l2_norm() / div_free.l2_norm();
        let want_grad = (p.pressure_modulus() * norm_sq).powf(s);
        let want_div = (p.mu * norm_sq).powf(s);
        assert!((amp_grad - want_grad).abs() < 1e-10 * want_grad);
        assert!((amp_div - want_div).abs() < 1e-10 * want_div);
        // sanity: the two amplifications genuinely differ
        assert!((want_grad - want_div).abs() > 0.1);
    }

    #[test]
    fn semigroup_properties() {
        let p = params();
        let grid = small_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_band_limited(&grid, 2, 2, &mut rng);

        let id = apply_evolutive(&p, &f, 0.0).unwrap();
        assert!(id.max_abs_diff(&f) < 1e-13);

        let one = apply_evolutive(&p, &f, 0.7).unwrap();
        let two = apply_evolutive(&p, &one, 0.5).unwrap();
        let direct = apply_evolutive(&p, &f, 1.2).unwrap();
        assert!(two.max_abs_diff(&direct) < 1e-11);

        let mut norm_prev = f.l2_norm();
        for tau_step in [0.1, 0.5, 1.0, 3.0] {
            let evolved = apply_evolutive(&p, &f, tau_step).unwrap();
            let norm = evolved.l2_norm();
            assert!(norm <= norm_prev * (1.0 + 1e-12));
            norm_prev = norm.min(norm_prev);
        }
    }

    #[test]
    fn divergence_gradient_identities() {
        let grid = small_grid();
        let p = params();
        // f = grad(phi) has div f = Laplacian phi
        let phi = VectorField::from_fn(grid.clone(), 1, |x, t| {
            vec![(x[0] + 2.0 * x[1]).cos() + (x[1] - t).sin()]
        });
        let grad_phi = gradient(&phi).unwrap();
        let div_grad = divergence(&grad_phi).unwrap();
        let lap_phi = laplacian(&phi).unwrap();
        assert!(div_grad.max_abs_diff(&lap_phi) < 1e-12);

        // divergence-free single mode
        let k = [1.0, 2.0];
        let div_free = VectorField::from_fn(grid.clone(), 2, |x, _| {
            let ph = (k[0] * x[0] + k[1] * x[1]).sin();
            vec![-k[1] * ph, k[0] * ph]
        });
        let div = divergence(&div_free).unwrap();
        assert!(div.max_abs() < 1e-13);

        // div L f = (2 mu + lambda) Laplacian div f
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let f = random_band_limited(&grid, 2, 2, &mut rng);
        let lhs = divergence(&lame_operator(&p, &f).unwrap()).unwrap();
        let rhs_scale = p.pressure_modulus();
        let rhs = laplacian(&divergence(&f).unwrap()).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in lhs.samples().iter().zip(rhs.samples()) {
            worst = worst.max((a - rhs_scale * b).abs());
        }
        assert!(worst < 1e-11, "identity gap {worst}");
    }

    #[test]
    fn sobolev_norm_values() {
        let grid = small_grid();
        let constant = VectorField::from_fn(grid.clone(), 1, |_, _| vec![1.25]);
        let norm = sobolev_norm(&constant, 0.5).unwrap();
        assert!((norm - constant.l2_norm()).abs() < 1e-12 * norm);

        // single mode (k, m): weight (1 + |xi|^4 + sigma^2)^{s/2}
        let f = VectorField::from_fn(grid.clone(), 1, |x, t| vec![(2.0 * x[0] + t).cos()]);
        let s = 0.3;
        let weight = (1.0 + 16.0 + 1.0f64).powf(s / 2.0);
        let got = sobolev_norm(&f, s).unwrap();
        assert!((got - weight * f.l2_norm()).abs() < 1e-12 * got);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = random_band_limited(&grid, 1, 3, &mut rng);
        let mut prev = 0.0;
        for s in [0.2, 0.4, 0.6, 0.8] {
            let val = sobolev_norm(&g, s).unwrap();
            assert!(val >= prev);
            prev = val;
        }
        assert!(matches!(
            sobolev_norm(&g, 1.5),
            Err(Error::InvalidExponent(_))
        ));
    }

    #[test]
    fn single_mode_lower_bound() {
        // the closed-form power never deamplifies below the weaker branch
        let p = params();
        let grid = small_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..40 {
            let kx = rng.gen_range(-2..=2) as f64;
            let ky = rng.gen_range(-2..=2) as f64;
            let m = rng.gen_range(-2..=2) as f64;
            if kx == 0.0 && ky == 0.0 && m == 0.0 {
                continue;
            }
            let s = rng.gen_range(0.1..1.0);
            let v = [
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ];
            let f = VectorField::from_fn(grid.clone(), 2, |x, t| {
                let ph = Complex64::new(0.0, kx * x[0] + ky * x[1] + m * t).exp();
                vec![(v[0] * ph).re, (v[1] * ph).re]
            });
            if f.l2_norm() < 1e-9 {
                continue;
            }
            let freq = FreqPoint::new(vec![kx, ky], m);
            let floor = freq
                .shear_symbol(&p)
                .norm()
                .powf(s)
                .min(freq.pressure_symbol(&p).norm().powf(s));
            let image = apply_fractional(&p, &f, s).unwrap();
            assert!(
                image.l2_norm() >= floor * f.l2_norm() - 1e-10,
                "lower bound broken at k=({kx},{ky}) m={m} s={s}"
            );
        }
    }

    #[test]
    fn multiplier_pipeline_reality_residue() {
        let p = params();
        let grid = small_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let f = random_band_limited(&grid, 2, 2, &mut rng);
        // run the heaviest multiplier and inspect the discarded residue
        let mut spectral = forward_transform(&f);
        let shape = grid.shape();
        let per = grid.samples_per_component();
        for flat in 0..per {
            let multi = decode(&shape, flat);
            if grid.is_nyquist(&multi) {
                for c in 0..2 {
                    spectral.modes_mut()[c * per + flat] = Complex64::new(0.0, 0.0);
                }
                continue;
            }
            let freq = grid.frequency(&multi);
            let m = symbol::frac_power(&p, &freq, 0.45).unwrap();
            let input: Vec<Complex64> = (0..2).map(|c| spectral.mode(c, flat)).collect();
            let output = m.apply(&input);
            for c in 0..2 {
                spectral.modes_mut()[c * per + flat] = output[c];
            }
        }
        let (_, residue) = inverse_transform_checked(&spectral);
        assert!(residue < 1e-12, "imaginary residue {residue}");
    }

    #[test]
    fn field_io_round_trip_is_bit_exact() {
        let grid = SpaceTimeGrid::new(&[4, 6], 4, &[1.0, 2.5], 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut f = VectorField::zeros(grid, 2);
        for v in f.samples_mut() {
            *v = rng.gen::<f64>() * 1e3 - 500.0;
        }
        let mut buf = Vec::new();
        export_field(&f, &mut buf).unwrap();
        let g = import_field(&mut buf.as_slice()).unwrap();
        assert_eq!(f, g);

        // corrupt the declared sample count
        let mut bad = buf.clone();
        let count_offset = bad.len() - f.samples().len() * 8 - 8;
        bad[count_offset] ^= 0x01;
        assert!(matches!(
            import_field(&mut bad.as_slice()),
            Err(Error::ShapeMismatch(_))
        ));

        let mut wrong_magic = buf.clone();
        wrong_magic[0] = b'X';
        assert!(matches!(
            import_field(&mut wrong_magic.as_slice()),
            Err(Error::ParseError(_))
        ));
    }
}
