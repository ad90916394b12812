//! Run configuration: one JSON file per run, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::groundstate::Init;
use crate::measure::io::read_table;
use crate::potential::{GaussianTerm, RadialPotential};
use crate::stability::{Criterion, DEFAULT_QUAD_TOL, DEFAULT_VERDICT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Analyze,
    Stability,
    Minimize,
    Scan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    PowerLaw {
        a: f64,
        r: f64,
        #[serde(rename = "N")]
        dim: usize,
    },
    Morse {
        #[serde(rename = "G")]
        g: f64,
        #[serde(rename = "L")]
        l: f64,
        #[serde(rename = "N")]
        dim: usize,
    },
    GaussianMix {
        /// `[amplitude, width]` pairs.
        terms: Vec<(f64, f64)>,
        #[serde(rename = "N")]
        dim: usize,
    },
    Tabulated {
        /// Two-column table of `(radius, value)`, relative to the config file.
        csv: PathBuf,
        #[serde(rename = "N")]
        dim: usize,
    },
}

impl PotentialSpec {
    pub fn build(&self, base_dir: &Path) -> crate::Result<RadialPotential<f64>> {
        match self {
            PotentialSpec::PowerLaw { a, r, dim } => RadialPotential::power_law(*a, *r, *dim),
            PotentialSpec::Morse { g, l, dim } => RadialPotential::morse(*g, *l, *dim),
            PotentialSpec::GaussianMix { terms, dim } => RadialPotential::gaussian_mix(
                terms
                    .iter()
                    .map(|(amplitude, width)| GaussianTerm {
                        amplitude: *amplitude,
                        width: *width,
                    })
                    .collect(),
                *dim,
            ),
            PotentialSpec::Tabulated { csv, dim } => {
                let path = if csv.is_absolute() { csv.clone() } else { base_dir.join(csv) };
                RadialPotential::tabulated(read_table(&path)?, *dim)
            }
        }
    }

    /// Copy with the named scalar parameter replaced.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self, String> {
        let mut out = self.clone();
        let slot = match (&mut out, name) {
            (PotentialSpec::PowerLaw { a, .. }, "a") => a,
            (PotentialSpec::PowerLaw { r, .. }, "r") => r,
            (PotentialSpec::Morse { g, .. }, "G") => g,
            (PotentialSpec::Morse { l, .. }, "L") => l,
            _ => return Err(format!("scan axis `{name}` is not a scalar parameter of this family")),
        };
        *slot = value;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanAxis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RucConfig {
    #[serde(default = "default_ruc_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_ruc_budget")]
    pub budget: usize,
}

impl Default for RucConfig {
    fn default() -> Self {
        Self {
            n_list: default_ruc_n_list(),
            budget: default_ruc_budget(),
        }
    }
}

fn default_ruc_n_list() -> Vec<usize> {
    vec![8, 16, 32, 64]
}
fn default_ruc_budget() -> usize {
    2000
}
fn default_n() -> usize {
    64
}
fn default_max_iter() -> usize {
    10_000
}
fn default_grad_tol() -> f64 {
    1e-10
}
fn default_quad_tol() -> f64 {
    DEFAULT_QUAD_TOL
}
fn default_verdict_tol() -> f64 {
    DEFAULT_VERDICT_TOL
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_init() -> Init {
    Init::RandomBall
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_criteria() -> Vec<Criterion> {
    vec![
        Criterion::Integral,
        Criterion::GaussianWeighted,
        Criterion::Fourier,
        Criterion::RucSearch,
    ]
}

/// Defaults: `n` 64, `max_iter` 10000, `grad_tol` 1e-10, `quad_tol` 1e-8,
/// `verdict_tol` 1e-6, `seeds` [0], `init` random_ball, `p_grid` 200
/// log-spaced points in [1e-3, 1e3], `xi_grid` chosen from the potential's
/// length scales, all four criteria, `ruc` n_list [8, 16, 32, 64] with
/// budget 2000, `output_dir` "out", `window` 0 (= max_iter / 4).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// When present, must match the subcommand.
    #[serde(default)]
    pub command: Option<Command>,
    pub potential: PotentialSpec,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default = "default_verdict_tol")]
    pub verdict_tol: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_init")]
    pub init: Init,
    #[serde(default)]
    pub window: usize,
    #[serde(default)]
    pub p_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub xi_grid: Option<Vec<f64>>,
    #[serde(default = "default_criteria")]
    pub criteria: Vec<Criterion>,
    #[serde(default)]
    pub ruc: RucConfig,
    #[serde(default)]
    pub scan: Vec<ScanAxis>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config: {e}"))
    }

    pub fn validate(&self, command: Command) -> Result<(), String> {
        if let Some(c) = self.command {
            if c != command {
                return Err(format!("config `command` is {c:?} but the subcommand is {command:?}"));
            }
        }
        if self.seeds.is_empty() {
            return Err("`seeds` must be nonempty".into());
        }
        if matches!(command, Command::Minimize | Command::Scan) && self.n < 2 {
            return Err(format!("`n` must be at least 2, got {}", self.n));
        }
        for (name, v) in [
            ("grad_tol", self.grad_tol),
            ("quad_tol", self.quad_tol),
            ("verdict_tol", self.verdict_tol),
        ] {
            if !(v >= 0.0 && v.is_finite()) || (name != "grad_tol" && v == 0.0) {
                return Err(format!("`{name}` must be a positive finite number, got {v}"));
            }
        }
        if self.ruc.n_list.is_empty() || self.ruc.n_list.iter().any(|n| *n < 2) {
            return Err("`ruc.n_list` must be nonempty with entries >= 2".into());
        }
        if command == Command::Scan {
            if self.scan.is_empty() {
                return Err("`scan` needs at least one axis".into());
            }
            for axis in &self.scan {
                if axis.values.is_empty() {
                    return Err(format!("scan axis `{}` has no values", axis.name));
                }
                self.potential.with_param(&axis.name, 0.0)?;
            }
        }
        Ok(())
    }
}
