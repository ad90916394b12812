//! Sign of the radial Fourier transform `ŵ(ξ)` on a frequency grid.

use rayon::prelude::*;

use super::integral::absolute_integral;
use super::{axis_cell_cap, grid_energy, Certificate, Criterion, Outcome, StabilityVerdict, Witness};
use crate::error::{Error, Result};
use crate::measure::GridDensity;
use crate::potential::{RadialPotential, TailClass};
use crate::quadrature::{integrate_half_line, integrate_oscillatory, HalfLine};
use crate::scalar::Scalar;
use crate::special::{bessel_j0, sinc, unit_sphere_area};

use super::radial_integral;

const GRID_POINTS: usize = 120;
/// The second, tighter evaluation uses `tol / CHECK_FACTOR`.
const CHECK_FACTOR: f64 = 16.0;
const OUTER_COVER: f64 = 64.0;

/// Default frequency grid: `0` (when `W` is absolutely integrable) and 120
/// log-spaced values from `10⁻² / outer` to `10² / fine`.
pub fn default_xi_grid<T: Scalar>(p: &RadialPotential<T>) -> Vec<T> {
    let (fine, outer) = p.length_scales();
    let lo = (T::lit(1e-2) / outer).ln();
    let hi = (T::lit(1e2) / fine).ln();
    let mut out = Vec::with_capacity(GRID_POINTS + 1);
    if p.closed_form_tail() != Some(TailClass::H3a) {
        out.push(T::zero());
    }
    out.extend((0..GRID_POINTS).map(|i| {
        (lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(GRID_POINTS - 1)).exp()
    }));
    out
}

/// `ŵ(ξ) = ∫_{R^N} W(|x|) e^{-iξ·x} dx` through the radial kernels
/// `2 cos(ξr)` (N=1), `2π J₀(ξr) r` (N=2) and `4π sinc(ξr) r²` (N=3).
/// Frequencies above zero are integrated twice at different tolerances and
/// must agree.
pub fn fourier_transform<T: Scalar>(p: &RadialPotential<T>, xi: T, quad_tol: T) -> Result<T> {
    let dim = p.dim();
    if dim == 0 || dim > 3 {
        return Err(Error::DimensionUnsupported(dim));
    }
    if xi == T::zero() {
        return radial_integral(p, |_| T::one(), quad_tol);
    }
    let once = |tol: T| -> Result<T> {
        let area: T = unit_sphere_area(dim);
        let (_, outer) = p.length_scales();
        let cfg = HalfLine::new(outer, tol / area).covering(outer * T::lit(OUTER_COVER));
        let f = |r: T| {
            let k = match dim {
                1 => (xi * r).cos(),
                2 => bessel_j0(xi * r) * r,
                _ => sinc(xi * r) * r * r,
            };
            p.eval(r) * k
        };
        Ok(integrate_oscillatory(&f, T::PI() / xi, &cfg)?.value * area)
    };
    let coarse = once(quad_tol)?;
    let tight = once(quad_tol / T::lit(CHECK_FACTOR))?;
    if (coarse - tight).abs() > quad_tol {
        return Err(Error::OscillatoryQuadratureFailure(format!(
            "transform of {p} at xi = {xi} is not self-consistent: {coarse} vs {tight}"
        )));
    }
    Ok(tight)
}

fn check_square_integrable<T: Scalar>(p: &RadialPotential<T>, quad_tol: T) -> Result<()> {
    if p.closed_form_tail() == Some(TailClass::H3a) {
        return Err(Error::NotSquareIntegrable(p.to_string()));
    }
    let dim = p.dim();
    let (_, outer) = p.length_scales();
    let cfg = HalfLine::new(outer, quad_tol).covering(outer * T::lit(OUTER_COVER));
    let f = |r: T| {
        let w = p.eval(r);
        w * w * r.powi(dim as i32 - 1)
    };
    match integrate_half_line(&f, &cfg) {
        Ok(r) if r.value.is_finite() => Ok(()),
        _ => Err(Error::NotSquareIntegrable(p.to_string())),
    }
}

/// Fourier sign criterion. `HE_satisfied` when `min ŵ < -quad_tol` and a
/// Gaussian-modulated plane wave at the minimizing frequency (or a plain
/// Gaussian) has negative grid energy; `stable_indication` when `ŵ` is above
/// `-quad_tol` everywhere on the grid and above `quad_tol` somewhere;
/// otherwise inconclusive.
pub fn fourier_criterion<T: Scalar>(
    p: &RadialPotential<T>,
    xi_grid: &[T],
    quad_tol: T,
) -> Result<StabilityVerdict<T>> {
    let dim = p.dim();
    if dim == 0 || dim > 3 {
        return Err(Error::DimensionUnsupported(dim));
    }
    if xi_grid.is_empty() || xi_grid.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
        return Err(Error::InvalidArgument("xi grid must hold finite values >= 0".into()));
    }
    check_square_integrable(p, quad_tol)?;
    let mut grid = xi_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    grid.dedup();
    if grid[0] == T::zero() && absolute_integral(p, quad_tol).is_err() {
        return Err(Error::NotAbsolutelyIntegrable(format!(
            "{p}: the transform at xi = 0 needs an absolutely integrable potential"
        )));
    }
    let values: Vec<T> = grid
        .par_iter()
        .map(|xi| fourier_transform(p, *xi, quad_tol))
        .collect::<Result<_>>()?;
    let scan: Vec<(T, T)> = grid.iter().copied().zip(values).collect();
    let (arg, min) = scan
        .iter()
        .fold((T::nan(), T::infinity()), |best, s| if s.1 < best.1 { *s } else { best });
    let max = scan.iter().fold(T::neg_infinity(), |m, s| m.max(s.1));

    let mut v = StabilityVerdict::new(Criterion::Fourier, Outcome::Inconclusive, min);
    v.argmin = Some(arg);
    v.domain = format!("xi in [{}, {}], {} points", grid[0], grid[grid.len() - 1], grid.len());
    if min < -quad_tol {
        v.certificate = witness(p, arg)?;
        if v.certificate.is_some() {
            v.outcome = Outcome::HeSatisfied;
        } else {
            v.note = Some("transform is negative but no modulated Gaussian had negative grid energy".into());
        }
    } else if max > quad_tol {
        v.outcome = Outcome::StableIndication;
    }
    v.scan = scan;
    Ok(v)
}

/// Tries plane waves `e^{-|x|²/2s²}(1 + cos(ξ x₁))` for a few envelope widths
/// `s`, then plain Gaussians on the potential's outer scale.
fn witness<T: Scalar>(p: &RadialPotential<T>, xi: T) -> Result<Option<Certificate<T>>> {
    let (fine, outer) = p.length_scales();
    let dim = p.dim();
    let cap = axis_cell_cap(dim);
    let mut candidates: Vec<(T, T)> = Vec::new();
    if xi > T::zero() {
        let period = T::TAU() / xi;
        for k in [1.0, 2.0, 4.0] {
            candidates.push((period * T::lit(k), xi));
        }
    }
    for k in [0.5, 1.0, 2.0, 4.0, 8.0] {
        candidates.push((outer * T::lit(k), T::zero()));
    }
    for (s, freq) in candidates {
        let extent = T::lit(8.0) * s;
        let mut h = fine / T::lit(4.0);
        if freq > T::zero() {
            h = h.min(T::TAU() / freq / T::lit(16.0));
        }
        let cells = (extent / h).ceil().to_usize().unwrap_or(usize::MAX).clamp(16, cap);
        let h = extent / T::from_usize_lossy(cells);
        let two_s2 = T::lit(2.0) * s * s;
        let grid = GridDensity::rasterize(dim, cells, h, |x| {
            let r2: T = x.iter().map(|v| *v * *v).sum();
            (-r2 / two_s2).exp() * (T::one() + (freq * x[0]).cos())
        })?;
        let energy = grid_energy(p, &grid)?;
        if energy.value < T::zero() {
            return Ok(Some(Certificate {
                witness: Witness::Grid(grid),
                energy,
                parameter: ("xi".into(), freq),
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::GaussianTerm;
    use std::f64::consts::PI;

    /// `Σ A (√π σ)^N e^{-σ²ξ²/4}`.
    fn mix_transform(terms: &[(f64, f64)], dim: usize, xi: f64) -> f64 {
        terms
            .iter()
            .map(|(a, s)| a * (PI.sqrt() * s).powi(dim as i32) * (-s * s * xi * xi / 4.0).exp())
            .sum()
    }

    fn mix(terms: &[(f64, f64)], dim: usize) -> RadialPotential<f64> {
        RadialPotential::gaussian_mix(
            terms.iter().map(|(a, s)| GaussianTerm { amplitude: *a, width: *s }).collect(),
            dim,
        )
        .unwrap()
    }

    #[test]
    fn gaussian_mix_matches_closed_form() {
        let terms = [(1.0, 1.0), (-0.7, 2.0)];
        for dim in 1..=3 {
            let p = mix(&terms, dim);
            for xi in [0.0, 0.05, 0.3, 1.0, 2.5, 7.0] {
                let got = fourier_transform(&p, xi, 1e-9).unwrap();
                let want = mix_transform(&terms, dim, xi);
                assert!((got - want).abs() < 1e-6, "N={dim} xi={xi}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn gaussian_is_stable() {
        let p = mix(&[(1.0, 1.0)], 1);
        let v = fourier_criterion(&p, &default_xi_grid(&p), 1e-8).unwrap();
        assert_eq!(v.outcome, Outcome::StableIndication);
        assert!(v.numeric_value > -1e-8);
    }

    #[test]
    fn two_gaussians_with_negative_mean_fire() {
        // ŵ(0) = √π (1 − 2c) < 0 for c > 1/2
        let p = mix(&[(1.0, 1.0), (-0.8, 2.0)], 1);
        let v = fourier_criterion(&p, &default_xi_grid(&p), 1e-8).unwrap();
        assert!((v.scan[0].1 - PI.sqrt() * (1.0 - 1.6)).abs() < 1e-7);
        assert_eq!(v.outcome, Outcome::HeSatisfied);
        assert!(v.certificate.unwrap().energy.value < 0.0);
    }

    #[test]
    fn zero_potential_is_inconclusive() {
        let p = mix(&[(0.0, 1.0)], 2);
        let v = fourier_criterion(&p, &[0.0, 1.0, 3.0], 1e-8).unwrap();
        assert_eq!(v.outcome, Outcome::Inconclusive);
    }

    #[test]
    fn growing_potential_is_rejected() {
        let p = RadialPotential::power_law(2.0, 1.0, 2).unwrap();
        assert!(matches!(
            fourier_criterion(&p, &[1.0], 1e-8),
            Err(Error::NotSquareIntegrable(_))
        ));
    }

    #[test]
    fn morse_transform_in_three_dimensions() {
        // ∫ e^{-r/L} e^{-iξ·x} dx = 8π L³ / (1 + L²ξ²)²
        let p = RadialPotential::morse(0.5, 2.0, 3).unwrap();
        for xi in [0.1, 0.7, 2.0] {
            let f = |l: f64| 8.0 * PI * l.powi(3) / (1.0 + l * l * xi * xi).powi(2);
            let want = f(1.0) - 0.5 * f(2.0);
            let got = fourier_transform(&p, xi, 1e-9).unwrap();
            assert!((got - want).abs() < 1e-6, "xi={xi}: {got} vs {want}");
        }
    }
}
