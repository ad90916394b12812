//! The per-pair inequality `(1/n²) Σ_{i<j} W(|x_i − x_j|) ≥ −B/n` on
//! configurations, and a multi-start search for violations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Certificate, Criterion, Outcome, StabilityVerdict, Witness, DEFAULT_VERDICT_TOL};
use crate::energy::energy_pointcloud;
use crate::error::{Error, Result};
use crate::groundstate::{minimize_particles, Init, MinimizationTrace, MinimizeOptions, StopReason};
use crate::measure::PointCloudMeasure;
use crate::potential::RadialPotential;
use crate::scalar::{compensated_sum, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RucCheck<T> {
    pub holds: bool,
    /// `(1/n²) Σ_{i<j} W(|x_i − x_j|)`.
    pub value: T,
    pub bound: T,
}

/// Evaluates the left side on an equal-weight configuration of distinct
/// points and compares it with `−B/n`.
pub fn check_ruc<T: Scalar>(p: &RadialPotential<T>, config: &PointCloudMeasure<T>, b: T) -> Result<RucCheck<T>> {
    if config.dim() != p.dim() {
        return Err(Error::DimensionMismatch(p.dim(), config.dim()));
    }
    if config.len() < 1 || !config.has_equal_weights() || !config.has_distinct_points() {
        return Err(Error::PreconditionFailed(
            "configuration must have distinct points with equal weights".into(),
        ));
    }
    let n = config.len();
    let terms = (0..n).flat_map(|i| {
        ((i + 1)..n).map(move |j| {
            let d2 = config
                .point(i)
                .iter()
                .zip(config.point(j))
                .fold(T::zero(), |s, (a, c)| s + (*a - *c) * (*a - *c));
            p.eval(d2.sqrt())
        })
    });
    let nn = T::from_usize_lossy(n);
    let value = compensated_sum(terms) / (nn * nn);
    let bound = -b / nn;
    Ok(RucCheck {
        holds: value >= bound,
        value,
        bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RucOptions<T> {
    pub n_list: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Iteration budget of each descent.
    pub budget: usize,
    pub grad_tol: T,
    pub inits: Vec<Init>,
    /// `c` below `-10 · verdict_tol` counts as catastrophic.
    pub verdict_tol: T,
}

impl<T: Scalar> Default for RucOptions<T> {
    fn default() -> Self {
        Self {
            n_list: vec![8, 16, 32, 64],
            seeds: vec![0, 1],
            budget: 2000,
            grad_tol: T::lit(1e-10),
            inits: Init::ALL.to_vec(),
            verdict_tol: T::lit(DEFAULT_VERDICT_TOL),
        }
    }
}

/// Least-squares fit of `m(n) = c + d/n`; returns `(c, d)`.
pub fn fit_inverse_n<T: Scalar>(points: &[(T, T)]) -> (T, T) {
    let k = T::from_usize_lossy(points.len());
    if points.len() < 2 {
        return (points.first().map(|p| p.1).unwrap_or_else(T::nan), T::zero());
    }
    let xs: Vec<T> = points.iter().map(|(n, _)| T::one() / *n).collect();
    let mx = xs.iter().fold(T::zero(), |s, v| s + *v) / k;
    let my = points.iter().fold(T::zero(), |s, v| s + v.1) / k;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (x, (_, y)) in xs.iter().zip(points) {
        sxy = sxy + (*x - mx) * (*y - my);
        sxx = sxx + (*x - mx) * (*x - mx);
    }
    let d = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    (my - d * mx, d)
}

/// Minimizes the per-pair energy for every `n` from every init and seed,
/// then fits the minima to `c + d/n`. `HE_satisfied` when
/// `c < -10 · verdict_tol` and the most negative configuration has negative
/// energy as a measure (diagonal included when `W(0)` is finite); otherwise
/// `stable_indication`. Singular potentials are flagged advisory.
pub fn ruc_search<T: Scalar>(p: &RadialPotential<T>, opts: &RucOptions<T>) -> Result<StabilityVerdict<T>> {
    if opts.n_list.is_empty() || opts.seeds.is_empty() || opts.inits.is_empty() {
        return Err(Error::InvalidArgument("n_list, seeds and inits must be nonempty".into()));
    }
    if let Some(n) = opts.n_list.iter().find(|n| **n < 2) {
        return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    let mut n_list = opts.n_list.clone();
    n_list.sort_unstable();
    n_list.dedup();
    let jobs: Vec<(usize, Init, u64)> = n_list
        .iter()
        .flat_map(|n| {
            opts.inits
                .iter()
                .flat_map(move |i| opts.seeds.iter().map(move |s| (*n, *i, *s)))
        })
        .collect();
    let minimize = MinimizeOptions::new(opts.budget, opts.grad_tol);
    let runs: Vec<MinimizationTrace<T>> = jobs
        .par_iter()
        .map(|(n, init, seed)| minimize_particles(p, *n, *init, *seed, &minimize))
        .collect::<Result<_>>()?;
    if runs
        .iter()
        .all(|r| r.iterates.len() <= 1 && r.stop == StopReason::LineSearchExhausted)
    {
        return Err(Error::OptimizerStalled(format!(
            "no descent made progress on {p} within {} iterations",
            opts.budget
        )));
    }

    // minimum per n, ties by job order
    let mut minima: Vec<(T, T)> = Vec::new();
    for n in &n_list {
        let best = runs
            .iter()
            .filter(|r| r.n_points == *n)
            .map(|r| r.per_pair_value())
            .fold(T::infinity(), |m, v| if v < m { v } else { m });
        minima.push((T::from_usize_lossy(*n), best));
    }
    let (c, d) = fit_inverse_n(&minima);
    let mut v = StabilityVerdict::new(Criterion::RucSearch, Outcome::StableIndication, c);
    v.scan = minima;
    v.domain = format!(
        "n in {:?}, {} seeds x {} inits, budget {}",
        n_list,
        opts.seeds.len(),
        opts.inits.len(),
        opts.budget
    );
    v.advisory = p.is_singular_at_origin();
    v.note = Some(format!("fit c + d/n with c = {c}, d = {d}"));
    if c < -T::lit(10.0) * opts.verdict_tol {
        let diag = !p.is_singular_at_origin();
        let mut best: Option<Certificate<T>> = None;
        for r in &runs {
            let energy = energy_pointcloud(p, &r.final_config, diag)?;
            if energy.value < best.as_ref().map_or(T::zero(), |b| b.energy.value) {
                best = Some(Certificate {
                    witness: Witness::Cloud(r.final_config.clone()),
                    energy,
                    parameter: ("n".into(), T::from_usize_lossy(r.n_points)),
                });
            }
        }
        match best {
            Some(cert) => {
                v.outcome = Outcome::HeSatisfied;
                v.certificate = Some(cert);
            }
            None => {
                v.outcome = Outcome::Inconclusive;
                v.note = Some(format!(
                    "fit c + d/n gives c = {c}, d = {d}, but no configuration has negative energy with its diagonal"
                ));
            }
        }
    }
    Ok(v)
}
