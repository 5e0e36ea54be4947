//! Run configuration: JSON text in, fully validated parameters out.
//!
//! Every section is optional except the material constants; defaults pick a
//! small periodic grid whose band-limited modes keep the symbol roots well
//! inside the region where the trace tolerances of the verification suites
//! are meaningful. Unknown keys are rejected rather than ignored so a typo
//! cannot silently run with defaults.

use std::path::PathBuf;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::SpaceTimeGrid;
use crate::quad::QuadratureSpec;
use crate::reduction::{PotentialSpec, TrigTerm};
use crate::symbol::{self, LameParams};

/// Configuration accepted on the wire. All limits are re-checked against
/// module preconditions before anything runs; see [`RunConfig`].
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub lame: LameSection,
    #[serde(default = "default_s_values")]
    pub s_values: Vec<f64>,
    #[serde(default)]
    pub grid: GridSection,
    /// Trigonometric terms of the coupling potential. Omitted: a built-in
    /// two-term demo potential sized to the grid dimension; an explicit
    /// empty list means V = 0.
    #[serde(default)]
    pub potential: Option<Vec<PotentialTerm>>,
    #[serde(default)]
    pub ladder: LadderSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default = "default_seed")]
    pub rng_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LameSection {
    pub mu: f64,
    pub lambda: f64,
    /// Ellipticity floor; defaults to min(mu, 2 mu + lambda), the sharp
    /// rank-one constant.
    #[serde(default)]
    pub delta0: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_nt")]
    pub nt: usize,
    #[serde(default = "default_lengths")]
    pub lengths: Vec<f64>,
    #[serde(default = "default_period_t")]
    pub period_t: f64,
    /// Largest retained signed mode index for random band-limited fields.
    #[serde(default = "default_band")]
    pub band: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            dims: default_dims(),
            nt: default_nt(),
            lengths: default_lengths(),
            period_t: default_period_t(),
            band: default_band(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialTerm {
    pub amplitude: f64,
    pub k: Vec<f64>,
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Geometric ladder of extension heights top, top*ratio, top*ratio^2, ...
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSection {
    #[serde(default = "default_ladder_top")]
    pub top: f64,
    #[serde(default = "default_ladder_ratio")]
    pub ratio: f64,
    #[serde(default = "default_ladder_levels")]
    pub levels: usize,
}

impl Default for LadderSection {
    fn default() -> Self {
        LadderSection {
            top: default_ladder_top(),
            ratio: default_ladder_ratio(),
            levels: default_ladder_levels(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_max_subdivisions")]
    pub max_subdivisions: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        QuadratureSection {
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            max_subdivisions: default_max_subdivisions(),
        }
    }
}

fn default_s_values() -> Vec<f64> {
    vec![0.3, 0.5, 0.75]
}

fn default_dims() -> Vec<usize> {
    vec![8, 8]
}

fn default_nt() -> usize {
    8
}

fn default_lengths() -> Vec<f64> {
    vec![16.0 * std::f64::consts::PI; 2]
}

fn default_period_t() -> f64 {
    16.0 * std::f64::consts::PI
}

fn default_band() -> usize {
    1
}

fn default_ladder_top() -> f64 {
    1.0
}

fn default_ladder_ratio() -> f64 {
    0.5
}

fn default_ladder_levels() -> usize {
    21
}

fn default_rel_tol() -> f64 {
    1e-10
}

fn default_abs_tol() -> f64 {
    1e-13
}

fn default_max_subdivisions() -> usize {
    4000
}

fn default_seed() -> u64 {
    17
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Validated run parameters, ready for the suites.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: LameParams,
    pub s_values: Vec<f64>,
    pub grid: SpaceTimeGrid,
    pub band: usize,
    pub potential: PotentialSpec,
    pub ladder: Vec<f64>,
    pub quadrature: QuadratureSpec,
    pub rng_seed: u64,
    pub output_dir: PathBuf,
}

fn invalid<T>(e: impl std::fmt::Display) -> Result<T> {
    Err(Error::ValidationError(e.to_string()))
}

impl RawConfig {
    pub fn validate(self) -> Result<RunConfig> {
        let delta0 = self.lame.delta0.unwrap_or_else(|| {
            self.lame
                .mu
                .min(2.0 * self.lame.mu + self.lame.lambda)
        });
        let params = match LameParams::new(self.lame.mu, self.lame.lambda, delta0) {
            Ok(p) => p,
            Err(e) => return invalid(e),
        };

        if self.s_values.is_empty() {
            return invalid("s_values must not be empty");
        }
        for &s in &self.s_values {
            if let Err(e) = symbol::check_exponent(s, false) {
                return invalid(e);
            }
        }

        let grid = match SpaceTimeGrid::new(
            &self.grid.dims,
            self.grid.nt,
            &self.grid.lengths,
            self.grid.period_t,
        ) {
            Ok(g) => g,
            Err(e) => return invalid(e),
        };
        let tightest = self.grid.dims.iter().chain([&self.grid.nt]).min().copied();
        if let Some(d) = tightest {
            if 2 * self.grid.band >= d {
                return invalid(format!(
                    "band {} does not fit below the Nyquist index of the smallest axis ({d})",
                    self.grid.band
                ));
            }
        }

        let dim = grid.spatial_dim();
        let terms = match self.potential {
            Some(given) => given
                .into_iter()
                .map(|t| TrigTerm {
                    amplitude: t.amplitude,
                    k: t.k,
                    omega: t.omega,
                    phase: t.phase,
                })
                .collect(),
            None => builtin_potential_terms(dim),
        };
        let potential = match PotentialSpec::new(dim, terms) {
            Ok(v) => v,
            Err(e) => return invalid(e),
        };

        if !(self.ladder.top > 0.0)
            || !(self.ladder.ratio > 0.0)
            || !(self.ladder.ratio < 1.0)
            || self.ladder.levels < 2
        {
            return invalid(format!(
                "ladder needs top > 0, 0 < ratio < 1 and at least two levels, got top {} ratio {} levels {}",
                self.ladder.top, self.ladder.ratio, self.ladder.levels
            ));
        }
        let ladder: Vec<f64> = (0..self.ladder.levels)
            .map(|j| self.ladder.top * self.ladder.ratio.powi(j as i32))
            .collect();

        let quadrature = match QuadratureSpec::new(
            self.quadrature.rel_tol,
            self.quadrature.abs_tol,
            self.quadrature.max_subdivisions,
        ) {
            Ok(q) => q,
            Err(e) => return invalid(e),
        };

        Ok(RunConfig {
            params,
            s_values: self.s_values,
            grid,
            band: self.grid.band,
            potential,
            ladder,
            quadrature,
            rng_seed: self.rng_seed,
            output_dir: self.output_dir,
        })
    }
}

/// Demo potential used when the config omits the section: two incommensurate
/// waves with a nonzero gradient along every axis that exists.
fn builtin_potential_terms(dim: usize) -> Vec<TrigTerm> {
    let unit = |axis: usize| {
        let mut k = vec![0.0; dim];
        if axis < dim {
            k[axis] = 1.0 + axis as f64;
        }
        k
    };
    vec![
        TrigTerm {
            amplitude: 0.8,
            k: unit(0),
            omega: 0.3,
            phase: 0.2,
        },
        TrigTerm {
            amplitude: 0.5,
            k: unit(1 % dim.max(1)),
            omega: -1.0,
            phase: 1.1,
        },
    ]
}

/// Smallest config that runs: material constants only, everything else
/// defaulted.
pub const DEFAULT_CONFIG: &str = r#"{"lame": {"mu": 1.0, "lambda": 0.5}}"#;

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
    raw.validate()
}

pub fn default_config() -> RunConfig {
    parse_config(DEFAULT_CONFIG).expect("builtin default config is valid")
}
