//! Sufficient criteria for the existence of a probability measure with
//! nonpositive energy, each backed by a witness measure when it fires.

mod fourier;
mod gaussian;
mod integral;
mod ruc;

pub use fourier::{default_xi_grid, fourier_criterion, fourier_transform};
pub use gaussian::{default_p_grid, gaussian_criterion, gaussian_weighted_integral};
pub use integral::{ball_witness, integral_criterion, radial_integral, witness_radius};
pub use ruc::{check_ruc, fit_inverse_n, ruc_search, RucCheck, RucOptions};

use serde::{Deserialize, Serialize};

use crate::energy::{energy_grid, energy_pointcloud, EnergyReport, QuadMode};
use crate::error::Result;
use crate::measure::{GridDensity, PointCloudMeasure};
use crate::potential::RadialPotential;
use crate::scalar::Scalar;

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;
pub const DEFAULT_VERDICT_TOL: f64 = 1e-6;

/// Grids up to this many cells are evaluated by the direct double sum.
const DIRECT_CELL_LIMIT: usize = 6_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    RucSearch,
    Integral,
    GaussianWeighted,
    Fourier,
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Criterion::RucSearch => "ruc_search",
            Criterion::Integral => "integral",
            Criterion::GaussianWeighted => "gaussian_weighted",
            Criterion::Fourier => "fourier",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "HE_satisfied")]
    HeSatisfied,
    #[serde(rename = "stable_indication")]
    StableIndication,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::HeSatisfied => "HE_satisfied",
            Outcome::StableIndication => "stable_indication",
            Outcome::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness<T> {
    Grid(GridDensity<T>),
    Cloud(PointCloudMeasure<T>),
}

impl<T: Scalar> Witness<T> {
    pub fn to_point_cloud(&self) -> PointCloudMeasure<T> {
        match self {
            Witness::Grid(g) => g.to_point_cloud(),
            Witness::Cloud(c) => c.clone(),
        }
    }
}

/// A measure with its energy as computed when the verdict was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T> {
    pub witness: Witness<T>,
    pub energy: EnergyReport<T>,
    /// Name and value of the parameter that produced the witness (`R`, `p`, `xi`, `n`).
    pub parameter: (String, T),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict<T> {
    pub criterion: Criterion,
    pub outcome: Outcome,
    /// The decisive quantity: the integral, `min_p I(p)`, `min ŵ`, or the
    /// fitted limit of the per-pair minima.
    pub numeric_value: T,
    /// Location of the decisive quantity (`p` or `xi`), when there is one.
    pub argmin: Option<T>,
    /// Sampled `(parameter, value)` pairs behind `numeric_value`.
    pub scan: Vec<(T, T)>,
    /// Human-readable description of the scanned domain.
    pub domain: String,
    /// Set when the criterion is applied outside its stated hypotheses.
    pub advisory: bool,
    pub note: Option<String>,
    #[serde(skip)]
    pub certificate: Option<Certificate<T>>,
}

impl<T: Scalar> StabilityVerdict<T> {
    fn new(criterion: Criterion, outcome: Outcome, numeric_value: T) -> Self {
        Self {
            criterion,
            outcome,
            numeric_value,
            argmin: None,
            scan: Vec::new(),
            domain: String::new(),
            advisory: false,
            note: None,
            certificate: None,
        }
    }
}

/// Recomputes the energy of a certificate's witness with the `energy`
/// module, using a different evaluation path from the one that produced it
/// where possible: grids go through the direct sum when affordable and the
/// FFT sum otherwise; point clouds include the diagonal when `W(0)` is finite.
pub fn recheck_certificate<T: Scalar>(p: &RadialPotential<T>, cert: &Certificate<T>) -> Result<T> {
    match &cert.witness {
        Witness::Grid(g) => {
            let mode = if g.cell_count() <= 4 * DIRECT_CELL_LIMIT {
                QuadMode::Direct
            } else {
                QuadMode::RadialFast
            };
            Ok(energy_grid(p, g, mode)?.value)
        }
        Witness::Cloud(c) => Ok(energy_pointcloud(p, c, !p.is_singular_at_origin())?.value),
    }
}

/// Grid energy with the evaluation path chosen by size.
fn grid_energy<T: Scalar>(p: &RadialPotential<T>, g: &GridDensity<T>) -> Result<EnergyReport<T>> {
    let mode = if g.cell_count() <= DIRECT_CELL_LIMIT {
        QuadMode::Direct
    } else {
        QuadMode::RadialFast
    };
    energy_grid(p, g, mode)
}

/// Cells per axis allowed for witness grids in each dimension.
fn axis_cell_cap(dim: usize) -> usize {
    match dim {
        1 => 4000,
        2 => 160,
        _ => 40,
    }
}
