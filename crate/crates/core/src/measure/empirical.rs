//! Cube-partition approximation of a probability measure by an empirical
//! measure on distinct points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GridDensity, PointCloudMeasure};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest half side searched for a cube holding `1 - eps/2` of the mass.
const MAX_HALF_SIDE: f64 = 1e12;
const MAX_CUBES: usize = 10_000_000;

pub enum Target<'a, T> {
    Grid(&'a GridDensity<T>),
    Cloud(&'a PointCloudMeasure<T>),
}

impl<'a, T> From<&'a GridDensity<T>> for Target<'a, T> {
    fn from(g: &'a GridDensity<T>) -> Self {
        Target::Grid(g)
    }
}

impl<'a, T> From<&'a PointCloudMeasure<T>> for Target<'a, T> {
    fn from(c: &'a PointCloudMeasure<T>) -> Self {
        Target::Cloud(c)
    }
}

#[derive(Debug, Clone)]
pub struct EmpiricalApproximation<T> {
    pub measure: PointCloudMeasure<T>,
    /// `R` with `Q_R = [-R, R]^N`.
    pub half_side: T,
    /// `l`: cubes per axis.
    pub cubes_per_axis: usize,
    /// `n_i = floor(p_i n)`, one entry per cube.
    pub cube_counts: Vec<usize>,
    /// Points placed in `Q_{2R} \ Q_R`.
    pub padding: usize,
}

impl<T: Scalar> EmpiricalApproximation<T> {
    pub fn n(&self) -> usize {
        self.measure.len()
    }
}

/// Builds an empirical measure within Lévy-Prokhorov distance `eps` of
/// `target`:
///
/// 1. `R` minimal (over atom sup-norms) with `μ(R^N \ Q_R) < eps/2`;
/// 2. `l` minimal with `√N · 2R/l < eps`;
/// 3. `n = max(n_min, ⌊2 l^N / eps⌋ + 1)`, so `l^N/n < eps/2`;
/// 4. `n_i = ⌊μ(Q_i) n⌋` distinct points in each cube `Q_i`, the remaining
///    `n - Σ n_i` in the slab of `Q_{2R} \ Q_R` beyond the `+x_1` face.
///
/// Point patterns are additive-recurrence sequences with a per-cube offset
/// drawn from `seed`.
pub fn empirical_approximation<'a, T: Scalar>(
    target: impl Into<Target<'a, T>>,
    eps: T,
    n_min: usize,
    seed: u64,
) -> Result<EmpiricalApproximation<T>> {
    let owned;
    let cloud = match target.into() {
        Target::Cloud(c) => c,
        Target::Grid(g) => {
            owned = g.to_point_cloud();
            &owned
        }
    };
    if !cloud.is_probability() {
        return Err(Error::InvalidMeasure(format!(
            "target mass {} is not 1",
            cloud.total_mass()
        )));
    }
    if !(eps > T::zero() && eps < T::lit(0.5)) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must lie in (0, 1/2)")));
    }
    if n_min == 0 {
        return Err(Error::InvalidArgument("n_min must be positive".into()));
    }
    let dim = cloud.dim();

    let half_side = capture_half_side(cloud, eps)?;
    let side_ratio = T::from_usize_lossy(dim).sqrt() * T::lit(2.0) * half_side / eps;
    let l = side_ratio.floor().to_usize().unwrap_or(usize::MAX).saturating_add(1);
    let cubes = l
        .checked_pow(dim as u32)
        .filter(|c| *c <= MAX_CUBES)
        .ok_or_else(|| Error::InvalidArgument(format!("{l}^{dim} cubes exceed the budget")))?;
    let lower = (T::lit(2.0) * T::from_usize_lossy(cubes) / eps)
        .floor()
        .to_usize()
        .unwrap_or(usize::MAX)
        .saturating_add(1);
    let n = n_min.max(lower);
    let side = T::lit(2.0) * half_side / T::from_usize_lossy(l);

    // p_i = μ(Q_i)
    let mut cube_mass = vec![T::zero(); cubes];
    for (p, w) in cloud.points().zip(cloud.weights()) {
        if let Some(idx) = cube_of(p, half_side, side, l) {
            cube_mass[idx] = cube_mass[idx] + *w;
        }
    }
    let nn = T::from_usize_lossy(n);
    let cube_counts: Vec<usize> = cube_mass
        .iter()
        .map(|m| (*m * nn).floor().to_usize().unwrap_or(0))
        .collect();
    let placed: usize = cube_counts.iter().sum();
    if placed > n {
        return Err(Error::InvariantViolation(format!(
            "cube counts {placed} exceed n = {n}"
        )));
    }
    let padding = n - placed;

    let mut coords = Vec::with_capacity(n * dim);
    let mut lo = vec![T::zero(); dim];
    for (idx, &count) in cube_counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let mut rest = idx;
        for axis in (0..dim).rev() {
            let k = rest % l;
            rest /= l;
            lo[axis] = -half_side + T::from_usize_lossy(k) * side;
        }
        let extent = vec![side; dim];
        place_points(&mut coords, &lo, &extent, count, seed, idx as u64);
    }
    if padding > 0 {
        // slab (R, 2R) × [-R, R]^{N-1}
        let mut slab_lo = vec![-half_side; dim];
        slab_lo[0] = half_side;
        let mut extent = vec![T::lit(2.0) * half_side; dim];
        extent[0] = half_side;
        place_points(&mut coords, &slab_lo, &extent, padding, seed, u64::MAX);
    }
    let measure = PointCloudMeasure::empirical(dim, coords)?;
    Ok(EmpiricalApproximation {
        measure,
        half_side,
        cubes_per_axis: l,
        cube_counts,
        padding,
    })
}

fn capture_half_side<T: Scalar>(cloud: &PointCloudMeasure<T>, eps: T) -> Result<T> {
    let mut radii: Vec<(T, T)> = cloud
        .points()
        .zip(cloud.weights())
        .map(|(p, w)| (p.iter().fold(T::zero(), |m, x| m.max(x.abs())), *w))
        .collect();
    radii.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let total = cloud.total_mass();
    let need = total - eps / T::lit(2.0);
    let mut acc = T::zero();
    let mut half_side = None;
    for (i, (r, w)) in radii.iter().enumerate() {
        acc = acc + *w;
        // atoms tied at the same sup-norm enter together
        let tied_next = radii.get(i + 1).is_some_and(|n| n.0 == *r);
        if acc > need && !tied_next {
            half_side = Some(*r);
            break;
        }
    }
    let r = half_side.ok_or(Error::MassEscapes(MAX_HALF_SIDE))?;
    if !(r <= T::lit(MAX_HALF_SIDE)) {
        return Err(Error::MassEscapes(MAX_HALF_SIDE));
    }
    // all retained mass at the origin: any positive cube works
    Ok(if r > T::zero() { r } else { eps / T::lit(4.0) })
}

/// Index of the cube of `Q_R` containing `p`; cubes are half-open except on the
/// `+R` faces.
fn cube_of<T: Scalar>(p: &[T], half_side: T, side: T, l: usize) -> Option<usize> {
    let mut idx = 0usize;
    for x in p {
        if x.abs() > half_side {
            return None;
        }
        let k = ((*x + half_side) / side).floor().to_usize().unwrap_or(0).min(l - 1);
        idx = idx * l + k;
    }
    Some(idx)
}

/// Appends `count` distinct points of the box `lo + [0, extent)` using the
/// additive recurrence `frac(offset + k α)` with `α_d` from the generalized
/// golden ratio.
fn place_points<T: Scalar>(
    out: &mut Vec<T>,
    lo: &[T],
    extent: &[T],
    count: usize,
    seed: u64,
    stream: u64,
) {
    let dim = lo.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let phi = generalized_golden(dim);
    let alpha: Vec<f64> = (1..=dim).map(|d| phi.powi(-(d as i32)).fract()).collect();
    let offset: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    for k in 0..count {
        let kk = (k + 1) as f64;
        for axis in 0..dim {
            let u = (offset[axis] + kk * alpha[axis]).fract();
            out.push(lo[axis] + extent[axis] * T::lit(u));
        }
    }
}

/// Positive root of `x^{d+1} = x + 1`.
fn generalized_golden(dim: usize) -> f64 {
    let mut x = 2.0_f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (dim as f64 + 1.0));
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_unit_interval(cells: usize) -> GridDensity<f64> {
        GridDensity::new(vec![0.0], 1.0 / cells as f64, vec![cells], vec![1.0; cells]).unwrap()
    }

    #[test]
    fn construction_counts() {
        let target = uniform_unit_interval(50);
        let approx = empirical_approximation(&target, 0.2, 10, 7).unwrap();
        let n = approx.n();
        assert!(n >= 10);
        let l = approx.cubes_per_axis;
        assert!((2.0 * approx.half_side / l as f64) < 0.2);
        assert!((l as f64) / (n as f64) < 0.1);
        let placed: usize = approx.cube_counts.iter().sum();
        assert!(placed as f64 >= 0.8 * n as f64);
        assert!(approx.measure.is_probability());
        assert!(approx.measure.has_distinct_points());
        assert_eq!(approx.measure.len(), n);
    }

    #[test]
    fn concentrated_target_lands_in_one_cube() {
        // all mass in one small cell around 0.3
        let target: GridDensity<f64> = GridDensity::new(vec![0.29], 0.02, vec![1], vec![50.0]).unwrap();
        let approx = empirical_approximation(&target, 0.4, 4, 1).unwrap();
        let occupied: Vec<_> = approx.cube_counts.iter().filter(|c| **c > 0).collect();
        assert_eq!(occupied.len(), 1);
        let inside = approx
            .measure
            .points()
            .filter(|p| p[0].abs() <= approx.half_side)
            .count();
        assert_eq!(inside, *occupied[0]);
        assert_eq!(inside + approx.padding, approx.n());
    }

    #[test]
    fn two_cell_mixture_splits_evenly() {
        // unit cells [0,1) and [2,3) carrying mass 1/2 each
        let target = GridDensity::new(vec![0.0], 1.0, vec![3], vec![0.5, 0.0, 0.5]).unwrap();
        let approx = empirical_approximation(&target, 0.1, 100, 3).unwrap();
        let n = approx.n() as f64;
        let left = approx.measure.points().filter(|p| p[0] < 1.0).count() as f64;
        let right = approx
            .measure
            .points()
            .filter(|p| p[0] >= 2.0 && p[0] <= approx.half_side)
            .count() as f64;
        assert!((left - n / 2.0).abs() <= 1.0);
        assert!((right - n / 2.0).abs() <= 1.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let target = uniform_unit_interval(4);
        assert!(empirical_approximation(&target, 0.5, 10, 0).is_err());
        assert!(empirical_approximation(&target, 0.0, 10, 0).is_err());
        let half = target.to_point_cloud().scaled(0.5).unwrap();
        assert!(empirical_approximation(&half, 0.1, 10, 0).is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        let target = uniform_unit_interval(8);
        let a = empirical_approximation(&target, 0.1, 10, 11).unwrap();
        let b = empirical_approximation(&target, 0.1, 10, 11).unwrap();
        let c = empirical_approximation(&target, 0.1, 10, 12).unwrap();
        assert_eq!(a.measure, b.measure);
        assert_ne!(a.measure, c.measure);
    }
}
