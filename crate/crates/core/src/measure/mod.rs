//! Finite nonnegative measures on R^N: weighted point clouds and
//! piecewise-constant grid densities, plus the constructive sequences used to
//! probe the energy (vanishing balls, Gaussian witnesses).

mod empirical;
pub mod io;
mod levy_prokhorov;

pub use empirical::{empirical_approximation, EmpiricalApproximation, Target};
pub use levy_prokhorov::levy_prokhorov_upper;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Scalar};
use crate::special::unit_ball_volume;

/// Tolerance of the `is_probability` predicate.
pub const PROBABILITY_TOL: f64 = 1e-12;

/// Weighted atoms `Σ w_i δ_{x_i}`; coordinates are stored flat, one row of
/// `dim` values per atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloudMeasure<T> {
    dim: usize,
    coords: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> PointCloudMeasure<T> {
    pub fn new(dim: usize, coords: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be positive".into()));
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} coordinates do not match {} weights in dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= T::zero() && w.is_finite())) {
            return Err(Error::InvalidMeasure(format!("weight {w} is not finite and >= 0")));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMeasure("coordinates must be finite".into()));
        }
        Ok(Self {
            dim,
            coords,
            weights,
        })
    }

    /// Equal-weight empirical measure `(1/n) Σ δ_{x_i}`.
    pub fn empirical(dim: usize, coords: Vec<T>) -> Result<Self> {
        let n = if dim == 0 { 0 } else { coords.len() / dim };
        if n == 0 {
            return Err(Error::InvalidMeasure("empirical measure needs points".into()));
        }
        let w = T::one() / T::from_usize_lossy(n);
        Self::new(dim, coords, vec![w; n])
    }

    pub fn dirac(point: &[T]) -> Result<Self> {
        Self::new(point.len(), point.to_vec(), vec![T::one()])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[T]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn total_mass(&self) -> T {
        compensated_sum(self.weights.iter().copied())
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass() - T::one()).abs() <= T::lit(PROBABILITY_TOL)
    }

    pub fn has_equal_weights(&self) -> bool {
        self.weights.windows(2).all(|w| w[0] == w[1])
    }

    /// True when no two atoms share a location.
    pub fn has_distinct_points(&self) -> bool {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.point(a)
                .iter()
                .zip(self.point(b))
                .map(|(x, y)| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal))
                .find(|o| *o != std::cmp::Ordering::Equal)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        idx.windows(2).all(|w| self.point(w[0]) != self.point(w[1]))
    }

    /// `c · μ`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        Self::new(
            self.dim,
            self.coords.clone(),
            self.weights.iter().map(|w| *w * c).collect(),
        )
    }

    /// Push-forward under `x ↦ x + shift`.
    pub fn translated(&self, shift: &[T]) -> Self {
        assert_eq!(shift.len(), self.dim);
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(shift).map(|(x, s)| *x + *s))
            .collect();
        Self {
            dim: self.dim,
            coords,
            weights: self.weights.clone(),
        }
    }

    /// The sum `μ + ν` of two measures, as the union of their atoms.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        let mut weights = self.weights.clone();
        weights.extend_from_slice(&other.weights);
        Self::new(self.dim, coords, weights)
    }

    pub fn centroid(&self) -> Vec<T> {
        let mass = self.total_mass();
        (0..self.dim)
            .map(|k| {
                compensated_sum(
                    self.points()
                        .zip(&self.weights)
                        .map(|(p, w)| p[k] * *w),
                ) / mass
            })
            .collect()
    }
}

/// Piecewise-constant density on a regular box grid, cells indexed row-major
/// with the last axis fastest. Cell `k` along an axis spans
/// `[origin + k h, origin + (k+1) h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity<T> {
    dim: usize,
    origin: Vec<T>,
    cell_width: T,
    extents: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> GridDensity<T> {
    pub fn new(origin: Vec<T>, cell_width: T, extents: Vec<usize>, values: Vec<T>) -> Result<Self> {
        let dim = origin.len();
        if dim == 0 || dim > 3 {
            return Err(Error::DimensionUnsupported(dim));
        }
        if extents.len() != dim {
            return Err(Error::DimensionMismatch(dim, extents.len()));
        }
        if !(cell_width > T::zero() && cell_width.is_finite()) {
            return Err(Error::InvalidMeasure("cell width must be positive".into()));
        }
        let cells: usize = extents.iter().product();
        if cells != values.len() || cells == 0 {
            return Err(Error::InvalidMeasure(format!(
                "{} cell values for extents {extents:?}",
                values.len()
            )));
        }
        if values.iter().any(|v| !(*v >= T::zero() && v.is_finite())) {
            return Err(Error::InvalidMeasure("cell values must be finite and >= 0".into()));
        }
        Ok(Self {
            dim,
            origin,
            cell_width,
            extents,
            values,
        })
    }

    /// Samples `density` at cell centers of a grid centered at the origin with
    /// `cells_per_axis` cells of width `h`, then rescales to unit mass.
    pub fn rasterize<F: Fn(&[T]) -> T>(
        dim: usize,
        cells_per_axis: usize,
        h: T,
        density: F,
    ) -> Result<Self> {
        let half = h * T::from_usize_lossy(cells_per_axis) / T::lit(2.0);
        let origin = vec![-half; dim];
        let extents = vec![cells_per_axis; dim];
        let cells = cells_per_axis.pow(dim as u32);
        let mut grid = Self::new(origin, h, extents, vec![T::zero(); cells])?;
        let mut center = vec![T::zero(); dim];
        for idx in 0..cells {
            grid.cell_center_into(idx, &mut center);
            grid.values[idx] = density(&center).max(T::zero());
        }
        grid.normalize()?;
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> &[T] {
        &self.origin
    }

    pub fn cell_width(&self) -> T {
        self.cell_width
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    pub fn cell_volume(&self) -> T {
        self.cell_width.powi(self.dim as i32)
    }

    pub fn mass(&self) -> T {
        compensated_sum(self.values.iter().copied()) * self.cell_volume()
    }

    pub fn max_density(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    /// Multi-index of a flat cell index.
    pub fn cell_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % self.extents[axis];
            flat /= self.extents[axis];
        }
        idx
    }

    pub fn cell_center_into(&self, flat: usize, out: &mut [T]) {
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            let k = rest % self.extents[axis];
            rest /= self.extents[axis];
            out[axis] = self.origin[axis]
                + (T::from_usize_lossy(k) + T::lit(0.5)) * self.cell_width;
        }
    }

    pub fn cell_center(&self, flat: usize) -> Vec<T> {
        let mut c = vec![T::zero(); self.dim];
        self.cell_center_into(flat, &mut c);
        c
    }

    fn normalize(&mut self) -> Result<()> {
        let mass = self.mass();
        if !(mass > T::zero()) {
            return Err(Error::InvalidMeasure("rasterized density has no mass".into()));
        }
        for v in &mut self.values {
            *v = *v / mass;
        }
        Ok(())
    }

    /// Atoms at cell centers carrying each cell's mass; empty cells are dropped.
    pub fn to_point_cloud(&self) -> PointCloudMeasure<T> {
        let vol = self.cell_volume();
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        let mut c = vec![T::zero(); self.dim];
        for (idx, v) in self.values.iter().enumerate() {
            if *v > T::zero() {
                self.cell_center_into(idx, &mut c);
                coords.extend_from_slice(&c);
                weights.push(*v * vol);
            }
        }
        PointCloudMeasure {
            dim: self.dim,
            coords,
            weights,
        }
    }

    /// `∫ |x|^2 ρ(x) dx` by the cell-center rule.
    pub fn second_moment(&self) -> T {
        let vol = self.cell_volume();
        let mut c = vec![T::zero(); self.dim];
        compensated_sum(self.values.iter().enumerate().map(|(idx, v)| {
            self.cell_center_into(idx, &mut c);
            let r2: T = c.iter().map(|x| *x * *x).sum();
            *v * vol * r2
        }))
    }
}

/// Grid discretization of `ρ_n(x) = n^{-N} ρ(x/n)`, `ρ = χ_{B_1}/ω_N`: the
/// uniform probability density on the ball of radius `n`, sampled at cell
/// centers with `cells_per_radius` cells per ball radius and renormalized.
pub fn vanishing_ball_sequence<T: Scalar>(
    n: usize,
    dim: usize,
    cells_per_radius: usize,
) -> Result<GridDensity<T>> {
    if n == 0 || cells_per_radius == 0 {
        return Err(Error::InvalidArgument("n and cells_per_radius must be >= 1".into()));
    }
    uniform_ball(T::from_usize_lossy(n), dim, cells_per_radius)
}

/// Uniform probability density on the ball of the given radius.
pub fn uniform_ball<T: Scalar>(
    radius: T,
    dim: usize,
    cells_per_radius: usize,
) -> Result<GridDensity<T>> {
    if dim == 0 || dim > 3 {
        return Err(Error::DimensionUnsupported(dim));
    }
    let h = radius / T::from_usize_lossy(cells_per_radius);
    let height = T::one() / (unit_ball_volume::<T>(dim) * radius.powi(dim as i32));
    let r2 = radius * radius;
    GridDensity::rasterize(dim, 2 * cells_per_radius, h, |x| {
        let d2: T = x.iter().map(|v| *v * *v).sum();
        if d2 <= r2 {
            height
        } else {
            T::zero()
        }
    })
}

/// Rasterized `ρ(x) = p^N π^{-N/2} e^{-2p²|x|²}` truncated at
/// `radius_sigmas` standard deviations (`σ = 1/(2p)`), renormalized to unit mass.
pub fn gaussian_witness_density<T: Scalar>(
    p: T,
    dim: usize,
    cells_per_sigma: usize,
    radius_sigmas: T,
) -> Result<GridDensity<T>> {
    if !(p > T::zero()) {
        return Err(Error::InvalidArgument("p must be positive".into()));
    }
    if dim == 0 || dim > 3 {
        return Err(Error::DimensionUnsupported(dim));
    }
    if cells_per_sigma == 0 || !(radius_sigmas > T::zero()) {
        return Err(Error::InvalidArgument("grid resolution must be positive".into()));
    }
    let sigma = T::one() / (T::lit(2.0) * p);
    let h = sigma / T::from_usize_lossy(cells_per_sigma);
    let half_cells = (radius_sigmas * T::from_usize_lossy(cells_per_sigma))
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(1);
    let cut2 = (radius_sigmas * sigma).powi(2);
    let prefactor = p.powi(dim as i32) / T::PI().powf(T::from_usize_lossy(dim) / T::lit(2.0));
    let two_p2 = T::lit(2.0) * p * p;
    GridDensity::rasterize(dim, 2 * half_cells, h, |x| {
        let d2: T = x.iter().map(|v| *v * *v).sum();
        if d2 <= cut2 {
            prefactor * (-two_p2 * d2).exp()
        } else {
            T::zero()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_sequence_examples() {
        let g = vanishing_ball_sequence::<f64>(1, 1, 50).unwrap();
        assert!(g.values().iter().all(|v| (*v - 0.5).abs() < 1e-12));
        assert!((g.mass() - 1.0).abs() < 1e-12);

        let g = vanishing_ball_sequence::<f64>(4, 2, 200).unwrap();
        assert!((g.mass() - 1.0).abs() < 1e-12);
        let want = 1.0 / (16.0 * PI);
        assert!((g.max_density() - want).abs() / want < 0.02);
    }

    #[test]
    fn ball_sup_norm_scaling() {
        for dim in 1..=3 {
            let cells = [400, 100, 24][dim - 1];
            for n in [1usize, 2, 5] {
                let g = vanishing_ball_sequence::<f64>(n, dim, cells).unwrap();
                let want = 1.0 / (unit_ball_volume::<f64>(dim) * (n as f64).powi(dim as i32));
                assert!((g.max_density() - want).abs() / want < 0.02, "N={dim} n={n}");
                assert!((g.mass() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_witness_normalization() {
        let g = gaussian_witness_density(1.0_f64, 1, 40, 8.0).unwrap();
        assert!((g.mass() - 1.0).abs() < 1e-12);
        // the stated profile already integrates to 2^{-N/2}; after
        // renormalization the peak is (1/√π)·√2
        let peak = g.max_density();
        assert!((peak - 2f64.sqrt() / PI.sqrt()).abs() / peak < 1e-3);
        let g2 = gaussian_witness_density(1.0_f64, 2, 10, 6.0).unwrap();
        assert!((g2.mass() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gaussian_witness_second_moment_ratio() {
        // moment quadrature oracle: ∫ x² e^{-2p²x²} / ∫ e^{-2p²x²} = 1/(4p²)
        let oracle = |p: f64| {
            let f = |x: f64| (-2.0 * p * p * x * x).exp();
            let h = 1e-4;
            let (mut num, mut den) = (0.0, 0.0);
            let mut x = -20.0;
            while x < 20.0 {
                num += x * x * f(x) * h;
                den += f(x) * h;
                x += h;
            }
            num / den
        };
        let m1 = gaussian_witness_density(1.0_f64, 1, 200, 10.0).unwrap().second_moment();
        let m2 = gaussian_witness_density(2.0_f64, 1, 200, 10.0).unwrap().second_moment();
        assert!((m1 - oracle(1.0)).abs() < 1e-5);
        assert!((m2 / m1 - 0.25).abs() < 1e-6);
    }

    #[test]
    fn cloud_validation() {
        assert!(PointCloudMeasure::new(1, vec![0.0, 1.0], vec![0.5]).is_err());
        assert!(PointCloudMeasure::new(1, vec![0.0], vec![-0.5]).is_err());
        let m = PointCloudMeasure::empirical(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(m.is_probability());
        assert!(m.has_distinct_points());
        let dup = PointCloudMeasure::empirical(1, vec![0.0, 0.0]).unwrap();
        assert!(!dup.has_distinct_points());
    }

    #[test]
    fn grid_to_cloud_preserves_mass() {
        let g = vanishing_ball_sequence::<f64>(3, 2, 20).unwrap();
        let c = g.to_point_cloud();
        assert!((c.total_mass() - 1.0).abs() < 1e-12);
    }
}
