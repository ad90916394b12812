//! Multi-start particle descent on the discrete energy and diagnostics for
//! the fate of the resulting minimizing sequences.

mod classify;
mod scan;

pub use classify::{classify_trace, Classification, ClassifierOptions, TraceDiagnosis};
pub use scan::{ground_state_scan, ScanOptions, ScanRow, ScanSummary, ScanTable};

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::PointCloudMeasure;
use crate::potential::{Family, RadialPotential};
use crate::scalar::{CompensatedSum, Scalar};

/// Pairs closer than this exert no force.
pub const MIN_SEPARATION: f64 = 1e-10;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 80;
const MAX_SNAPSHOTS: usize = 64;
const RECENTER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Lattice,
    RandomBall,
    TwoCluster,
}

impl Init {
    pub const ALL: [Init; 3] = [Init::Lattice, Init::RandomBall, Init::TwoCluster];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate<T> {
    pub iteration: usize,
    pub energy: T,
    pub q90_radius: T,
    pub max_pair_distance: T,
    pub step: T,
    pub median_nn_distance: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    /// No step along the negative gradient decreases the energy.
    LineSearchExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizationTrace<T> {
    pub iterates: Vec<Iterate<T>>,
    pub final_config: PointCloudMeasure<T>,
    pub classification: Classification,
    pub diagnosis: TraceDiagnosis<T>,
    pub n_points: usize,
    pub seed: u64,
    pub init: Init,
    pub stop: StopReason,
    /// `(iteration, flat coordinates)` at evenly spread iterations.
    #[serde(skip)]
    pub snapshots: Vec<(usize, Vec<T>)>,
}

impl<T: Scalar> MinimizationTrace<T> {
    /// Energy of the final configuration, i.e. the lowest along the trace.
    pub fn best_energy(&self) -> T {
        self.iterates.last().map(|i| i.energy).unwrap_or_else(T::nan)
    }

    /// `(1/n²) Σ_{i<j} W(|x_i − x_j|)`, half the traced energy.
    pub fn per_pair_value(&self) -> T {
        self.best_energy() / T::lit(2.0)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "iteration",
            "energy",
            "q90_radius",
            "max_pair_distance",
            "step",
            "median_nn_distance",
        ])?;
        for it in &self.iterates {
            w.write_record([
                it.iteration.to_string(),
                format!("{:e}", it.energy),
                format!("{:e}", it.q90_radius),
                format!("{:e}", it.max_pair_distance),
                format!("{:e}", it.step),
                format!("{:e}", it.median_nn_distance),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions<T> {
    pub max_iter: usize,
    pub grad_tol: T,
    /// Classifier settings; `window = 0` means `max_iter / 4`.
    pub classifier: ClassifierOptions<T>,
}

impl<T: Scalar> MinimizeOptions<T> {
    pub fn new(max_iter: usize, grad_tol: T) -> Self {
        Self {
            max_iter,
            grad_tol,
            classifier: ClassifierOptions::default(),
        }
    }
}

/// Flat-coordinate energy `(2/n²) Σ_{i<j} W(|x_i − x_j|)` and `Σ |terms|`.
fn pair_energy<T: Scalar>(p: &RadialPotential<T>, x: &[T], dim: usize) -> (T, T) {
    let n = x.len() / dim;
    let mut acc = CompensatedSum::new();
    let mut mag = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = p.eval(dist(&x[i * dim..(i + 1) * dim], &x[j * dim..(j + 1) * dim]));
            acc.add(v);
            mag = mag + v.abs();
        }
    }
    let scale = T::lit(2.0) / T::from_usize_lossy(n * n);
    (acc.total() * scale, mag * scale)
}

/// Energy change that rounding the coordinates during a translation can cause:
/// each pair distance moves by up to a few ulps of the largest coordinate.
fn rounding_allowance<T: Scalar>(p: &RadialPotential<T>, before: &[T], after: &[T], dim: usize) -> T {
    let n = after.len() / dim;
    let reach = before
        .iter()
        .chain(after)
        .fold(T::zero(), |m, v| m.max(v.abs()));
    let mut slope = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist(&after[i * dim..(i + 1) * dim], &after[j * dim..(j + 1) * dim]);
            match p.derivative(d) {
                Ok(w) => slope = slope + w.abs(),
                Err(_) => return T::zero(),
            }
        }
    }
    let scale = T::lit(2.0) / T::from_usize_lossy(n * n);
    T::lit(8.0) * T::epsilon() * reach * T::from_usize_lossy(dim).sqrt() * slope * scale
}

fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(u, v)| (*u - *v) * (*u - *v))
        .fold(T::zero(), |s, v| s + v)
        .sqrt()
}

/// Gradient of `(2/n²) Σ_{i<j} W(|x_i − x_j|)` in flat coordinates.
pub fn energy_gradient<T: Scalar>(p: &RadialPotential<T>, x: &[T], dim: usize) -> Result<Vec<T>> {
    let n = x.len() / dim;
    let scale = T::lit(2.0) / T::from_usize_lossy(n * n);
    let mut g = vec![T::zero(); x.len()];
    let min_sep = T::lit(MIN_SEPARATION);
    for i in 0..n {
        for j in (i + 1)..n {
            let (xi, xj) = (&x[i * dim..(i + 1) * dim], &x[j * dim..(j + 1) * dim]);
            let d = dist(xi, xj);
            if d < min_sep {
                continue;
            }
            let f = scale * p.derivative(d)? / d;
            for k in 0..dim {
                let c = f * (xi[k] - xj[k]);
                g[i * dim + k] = g[i * dim + k] + c;
                g[j * dim + k] = g[j * dim + k] - c;
            }
        }
    }
    Ok(g)
}

/// The traced energy of a configuration, as used by the minimizer.
pub fn discrete_energy<T: Scalar>(p: &RadialPotential<T>, config: &PointCloudMeasure<T>) -> T {
    pair_energy(p, config.coords(), config.dim()).0
}

/// Initial configuration with roughly unit spacing.
pub fn initial_configuration<T: Scalar>(init: Init, n: usize, dim: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = (n as f64).powf(1.0 / dim as f64);
    let mut x = Vec::with_capacity(n * dim);
    match init {
        Init::Lattice => {
            let per_axis = side.ceil() as usize;
            for i in 0..n {
                let mut rest = i;
                for _ in 0..dim {
                    let k = rest % per_axis;
                    rest /= per_axis;
                    x.push(k as f64 - (per_axis - 1) as f64 / 2.0 + rng.gen_range(-0.1..0.1));
                }
            }
        }
        Init::RandomBall => {
            for _ in 0..n {
                x.extend(uniform_in_ball(&mut rng, dim, 0.5 * side, 0.0));
            }
        }
        Init::TwoCluster => {
            for i in 0..n {
                let shift = if i % 2 == 0 { -side } else { side };
                x.extend(uniform_in_ball(&mut rng, dim, 0.25 * side, shift));
            }
        }
    }
    x.into_iter().map(T::lit).collect()
}

fn uniform_in_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64, shift_x1: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            let mut v: Vec<f64> = v.into_iter().map(|c| c * radius).collect();
            v[0] += shift_x1;
            return v;
        }
    }
}

/// Steepest descent with Armijo backtracking on `(2/n²) Σ_{i<j} W`. The
/// accepted step is doubled before the next line search. Each iterate is
/// recentred at its centroid.
pub fn minimize_particles<T: Scalar>(
    p: &RadialPotential<T>,
    n: usize,
    init: Init,
    seed: u64,
    opts: &MinimizeOptions<T>,
) -> Result<MinimizationTrace<T>> {
    let dim = p.dim();
    let x0 = initial_configuration(init, n, dim, seed);
    minimize_from(p, x0, init, seed, opts)
}

/// As [`minimize_particles`], from a given flat configuration.
pub fn minimize_from<T: Scalar>(
    p: &RadialPotential<T>,
    mut x: Vec<T>,
    init: Init,
    seed: u64,
    opts: &MinimizeOptions<T>,
) -> Result<MinimizationTrace<T>> {
    if matches!(p.family(), Family::Tabulated { .. }) {
        return Err(Error::NonDifferentiable);
    }
    let dim = p.dim();
    let n = x.len() / dim;
    if n < 2 || x.len() != n * dim {
        return Err(Error::InvalidArgument(format!("need at least 2 particles, got {n}")));
    }
    if !(opts.grad_tol >= T::zero()) {
        return Err(Error::InvalidArgument("grad_tol must be nonnegative".into()));
    }
    recenter(&mut x, dim);
    let (mut energy, _) = pair_energy(p, &x, dim);
    if !energy.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "initial configuration has energy {energy}"
        )));
    }
    let mut step = initial_step(p, &x, dim)?;
    let snapshot_every = (opts.max_iter / MAX_SNAPSHOTS).max(1);
    let mut snapshots = vec![(0, x.clone())];
    let mut iterates = vec![record(0, energy, T::zero(), &x, dim)];
    let mut trial = vec![T::zero(); x.len()];
    let mut stop = StopReason::MaxIterations;

    for iter in 1..=opts.max_iter {
        let g = energy_gradient(p, &x, dim)?;
        let g2 = g.iter().fold(T::zero(), |s, v| s + *v * *v);
        if g2 == T::zero() || g2.sqrt() < opts.grad_tol {
            stop = StopReason::GradientTolerance;
            break;
        }
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            for k in 0..x.len() {
                trial[k] = x[k] - step * g[k];
            }
            let (e, _) = pair_energy(p, &trial, dim);
            // strict decrease: below the energy's resolution Armijo rounds to equality
            if e.is_finite() && e < energy && e <= energy - T::lit(ARMIJO) * step * g2 {
                accepted = Some(e);
                break;
            }
            step = step / T::lit(2.0);
        }
        let Some(e_new) = accepted else {
            stop = StopReason::LineSearchExhausted;
            break;
        };
        if e_new > energy {
            return Err(Error::InvariantViolation(format!(
                "energy rose from {energy} to {e_new} at iteration {iter}"
            )));
        }
        std::mem::swap(&mut x, &mut trial);
        recenter(&mut x, dim);
        let (e_centered, magnitude) = pair_energy(p, &x, dim);
        let shift = (e_centered - e_new).abs();
        if shift > T::lit(RECENTER_TOL) * magnitude.max(e_new.abs())
            && shift > T::lit(RECENTER_TOL) * magnitude + rounding_allowance(p, &trial, &x, dim)
        {
            return Err(Error::InvariantViolation(format!(
                "recentring changed the energy from {e_new} to {e_centered}"
            )));
        }
        energy = e_new.min(e_centered);
        iterates.push(record(iter, energy, step, &x, dim));
        if iter % snapshot_every == 0 {
            snapshots.push((iter, x.clone()));
        }
        step = step * T::lit(2.0);
    }
    if snapshots.last().map(|s| s.0) != iterates.last().map(|i| i.iteration) {
        snapshots.push((iterates.last().map_or(0, |i| i.iteration), x.clone()));
    }

    let final_config = PointCloudMeasure::empirical(dim, x)?;
    let mut trace = MinimizationTrace {
        iterates,
        final_config,
        classification: Classification::Undecided,
        diagnosis: TraceDiagnosis::default(),
        n_points: n,
        seed,
        init,
        stop,
        snapshots,
    };
    let mut copts = opts.classifier;
    if copts.window == 0 {
        copts.window = (opts.max_iter / 4).max(1);
    }
    let diagnosis = classify_trace(&trace, &copts);
    trace.classification = diagnosis.classification;
    trace.diagnosis = diagnosis;
    Ok(trace)
}

/// `1 / (n max |W'|)` over the pair distances of the starting configuration.
fn initial_step<T: Scalar>(p: &RadialPotential<T>, x: &[T], dim: usize) -> Result<T> {
    let n = x.len() / dim;
    let mut max_slope = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist(&x[i * dim..(i + 1) * dim], &x[j * dim..(j + 1) * dim]);
            if d >= T::lit(MIN_SEPARATION) {
                max_slope = max_slope.max(p.derivative(d)?.abs());
            }
        }
    }
    Ok(if max_slope > T::zero() && max_slope.is_finite() {
        T::one() / (T::from_usize_lossy(n) * max_slope)
    } else {
        T::one()
    })
}

fn recenter<T: Scalar>(x: &mut [T], dim: usize) {
    let n = x.len() / dim;
    for k in 0..dim {
        let mean = x.iter().skip(k).step_by(dim).fold(T::zero(), |s, v| s + *v) / T::from_usize_lossy(n);
        for v in x.iter_mut().skip(k).step_by(dim) {
            *v = *v - mean;
        }
    }
}

fn record<T: Scalar>(iteration: usize, energy: T, step: T, x: &[T], dim: usize) -> Iterate<T> {
    let g = geometry(x, dim);
    Iterate {
        iteration,
        energy,
        q90_radius: g.q90_radius,
        max_pair_distance: g.max_pair_distance,
        step,
        median_nn_distance: g.median_nn_distance,
    }
}

pub(crate) struct Geometry<T> {
    pub q90_radius: T,
    pub max_pair_distance: T,
    pub median_nn_distance: T,
}

/// Shape statistics of a configuration; radii are taken from the centroid.
pub(crate) fn geometry<T: Scalar>(x: &[T], dim: usize) -> Geometry<T> {
    let n = x.len() / dim;
    let mut centroid = vec![T::zero(); dim];
    for i in 0..n {
        for k in 0..dim {
            centroid[k] = centroid[k] + x[i * dim + k];
        }
    }
    for c in centroid.iter_mut() {
        *c = *c / T::from_usize_lossy(n);
    }
    let mut radii: Vec<T> = (0..n).map(|i| dist(&x[i * dim..(i + 1) * dim], &centroid)).collect();
    let mut nn = vec![T::infinity(); n];
    let mut max_pair = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist(&x[i * dim..(i + 1) * dim], &x[j * dim..(j + 1) * dim]);
            max_pair = max_pair.max(d);
            nn[i] = nn[i].min(d);
            nn[j] = nn[j].min(d);
        }
    }
    Geometry {
        q90_radius: quantile(&mut radii, 0.9),
        max_pair_distance: max_pair,
        median_nn_distance: quantile(&mut nn, 0.5),
    }
}

/// Lower empirical quantile.
fn quantile<T: Scalar>(v: &mut [T], q: f64) -> T {
    if v.is_empty() {
        return T::zero();
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[idx]
}

/// Writes a JSON document with a trailing newline.
pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| Error::Io(e.to_string()))?;
    f.write_all(b"\n")?;
    Ok(())
}
