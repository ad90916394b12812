//! Diagnostics for the existence of ground states of pairwise interaction
//! energies `E(μ) = ∫∫ W(|x − y|) dμ(x) dμ(y)` over probability measures.

pub mod cli;
pub mod energy;
pub mod error;
pub mod groundstate;
pub mod measure;
pub mod potential;
pub mod quadrature;
pub mod scalar;
pub mod special;
pub mod stability;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Potential = potential::RadialPotential<f64>;
pub type PointCloud = measure::PointCloudMeasure<f64>;
pub type Grid = measure::GridDensity<f64>;
pub type Verdict = stability::StabilityVerdict<f64>;
pub type Trace = groundstate::MinimizationTrace<f64>;
pub type Energy = energy::EnergyReport<f64>;
