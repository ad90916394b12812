//! Sign of `∫_{R^N} W(|x|) dx` and the uniform-ball witness.

use super::{axis_cell_cap, grid_energy, Certificate, Criterion, Outcome, StabilityVerdict, Witness};
use crate::energy::EnergyReport;
use crate::error::{Error, Result};
use crate::measure::{uniform_ball, GridDensity};
use crate::potential::{RadialPotential, TailClass};
use crate::quadrature::{integrate_from_origin, integrate_half_line, HalfLine};
use crate::scalar::Scalar;
use crate::special::unit_sphere_area;

/// Scales tried when searching for a negative-energy ball.
const MAX_N_SCALE: usize = 64;
/// The half line is integrated at least out to this many outer length scales.
const OUTER_COVER: f64 = 64.0;

/// `S_{N-1} ∫_0^∞ W(r) weight(r) r^{N-1} dr`.
pub fn radial_integral<T: Scalar, F: Fn(T) -> T>(
    p: &RadialPotential<T>,
    weight: F,
    quad_tol: T,
) -> Result<T> {
    let (_, outer) = p.length_scales();
    weighted_integral_at(p, weight, outer, quad_tol)
}

/// As [`radial_integral`], with the dyadic pieces anchored at `scale`
/// (the width of the weight when it is narrower than the potential).
pub(super) fn weighted_integral_at<T: Scalar, F: Fn(T) -> T>(
    p: &RadialPotential<T>,
    weight: F,
    scale: T,
    quad_tol: T,
) -> Result<T> {
    let dim = p.dim();
    let area: T = unit_sphere_area(dim);
    let (_, outer) = p.length_scales();
    let cfg = HalfLine::new(scale, quad_tol / area).covering(outer * T::lit(OUTER_COVER));
    let f = |r: T| p.eval(r) * weight(r) * r.powi(dim as i32 - 1);
    Ok(integrate_half_line(&f, &cfg)?.value * area)
}

pub(super) fn absolute_integral<T: Scalar>(p: &RadialPotential<T>, quad_tol: T) -> Result<T> {
    if p.closed_form_tail() == Some(TailClass::H3a) {
        return Err(Error::NotAbsolutelyIntegrable(p.to_string()));
    }
    let dim = p.dim();
    let area: T = unit_sphere_area(dim);
    let (_, outer) = p.length_scales();
    let cfg = HalfLine::new(outer, quad_tol / area).covering(outer * T::lit(OUTER_COVER));
    let f = |r: T| p.eval(r).abs() * r.powi(dim as i32 - 1);
    match integrate_half_line(&f, &cfg) {
        Ok(r) if r.value.is_finite() => Ok(r.value * area),
        _ => Err(Error::NotAbsolutelyIntegrable(p.to_string())),
    }
}

/// Integral criterion: `HE_satisfied` when `∫ W < -quad_tol`, backed by a
/// uniform ball on which the energy is negative; `stable_indication` when
/// `∫ W > quad_tol`; otherwise inconclusive.
pub fn integral_criterion<T: Scalar>(p: &RadialPotential<T>, quad_tol: T) -> Result<StabilityVerdict<T>> {
    let abs = absolute_integral(p, quad_tol)?;
    let value = radial_integral(p, |_| T::one(), quad_tol)?;
    let mut v = StabilityVerdict::new(Criterion::Integral, Outcome::Inconclusive, value);
    v.domain = "(0, inf)".into();
    v.scan = vec![(T::zero(), value)];
    if value > quad_tol {
        v.outcome = Outcome::StableIndication;
    } else if value < -quad_tol {
        let r = witness_radius(p, value, abs, quad_tol)?;
        let mut n_scale = 1;
        let mut last = T::nan();
        while n_scale <= MAX_N_SCALE {
            match ball_witness(p, r, n_scale) {
                Ok((grid, energy)) => {
                    v.outcome = Outcome::HeSatisfied;
                    v.certificate = Some(Certificate {
                        witness: Witness::Grid(grid),
                        energy,
                        parameter: ("R".into(), r * T::from_usize_lossy(n_scale)),
                    });
                    return Ok(v);
                }
                Err(Error::WitnessFailed(e)) => last = T::lit(e),
                Err(e) => return Err(e),
            }
            n_scale *= 2;
        }
        v.note = Some(format!(
            "integral is negative but no ball up to radius {} had negative grid energy (last {last})",
            r * T::from_usize_lossy(MAX_N_SCALE)
        ));
    }
    Ok(v)
}

/// Smallest dyadic multiple `R` of the outer length scale with
/// `∫_{B_R} W < -3|I|/4` and `∫_{|x|>R} |W| < |I|/4`.
pub fn witness_radius<T: Scalar>(p: &RadialPotential<T>, total: T, abs_total: T, quad_tol: T) -> Result<T> {
    let dim = p.dim();
    let area: T = unit_sphere_area(dim);
    let (_, outer) = p.length_scales();
    let target = total.abs();
    let signed = |r: T| p.eval(r) * r.powi(dim as i32 - 1);
    let absolute = |r: T| p.eval(r).abs() * r.powi(dim as i32 - 1);
    let mut r = outer;
    for _ in 0..60 {
        let inner = integrate_from_origin(&signed, r, quad_tol / area)?.value * area;
        let inner_abs = integrate_from_origin(&absolute, r, quad_tol / area)?.value * area;
        let tail = abs_total - inner_abs;
        if inner < -T::lit(0.75) * target && tail < T::lit(0.25) * target {
            return Ok(r);
        }
        r = r * T::lit(2.0);
    }
    Err(Error::QuadratureFailure(format!(
        "no radius captures the negative part of {p}"
    )))
}

/// Uniform probability density on the ball of radius `n_scale · R` with its
/// grid energy, which must be negative.
pub fn ball_witness<T: Scalar>(
    p: &RadialPotential<T>,
    r: T,
    n_scale: usize,
) -> Result<(GridDensity<T>, EnergyReport<T>)> {
    if p.is_nonnegative() {
        return Err(Error::PreconditionFailed(format!(
            "{p} is nonnegative, so every measure has nonnegative energy"
        )));
    }
    if !(r > T::zero()) || n_scale == 0 {
        return Err(Error::InvalidArgument("radius and scale must be positive".into()));
    }
    let radius = r * T::from_usize_lossy(n_scale);
    let (fine, _) = p.length_scales();
    let dim = p.dim();
    let wanted = (radius / (fine / T::lit(2.0))).ceil().to_usize().unwrap_or(usize::MAX);
    let cells = wanted.clamp(8, axis_cell_cap(dim) / 2);
    let grid = uniform_ball(radius, dim, cells)?;
    let energy = grid_energy(p, &grid)?;
    if energy.value < T::zero() {
        Ok((grid, energy))
    } else {
        Err(Error::WitnessFailed(energy.value.as_f64()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;
    use std::f64::consts::PI;

    /// `S_{N-1} Γ(N) (1 − G L^N)`.
    fn morse_closed_form(g: f64, l: f64, dim: usize) -> f64 {
        unit_sphere_area::<f64>(dim) * gamma(dim as f64) * (1.0 - g * l.powi(dim as i32))
    }

    #[test]
    fn morse_catastrophic_example() {
        let p = RadialPotential::morse(1.0, 2.0, 2).unwrap();
        let v = integral_criterion(&p, 1e-8).unwrap();
        assert!((v.numeric_value + 6.0 * PI).abs() < 1e-7, "{}", v.numeric_value);
        assert_eq!(v.outcome, Outcome::HeSatisfied);
        assert!(v.certificate.unwrap().energy.value < 0.0);
    }

    #[test]
    fn morse_boundary_is_inconclusive() {
        for dim in 1..=3 {
            let p = RadialPotential::<f64>::morse(1.0, 1.0, dim).unwrap();
            let v = integral_criterion(&p, 1e-8).unwrap();
            assert!(v.numeric_value.abs() < 1e-8);
            assert_eq!(v.outcome, Outcome::Inconclusive);
        }
    }

    #[test]
    fn gaussian_is_stable() {
        let p = RadialPotential::gaussian(1.0, 1.0, 1).unwrap();
        let v = integral_criterion(&p, 1e-8).unwrap();
        assert!((v.numeric_value - PI.sqrt()).abs() < 1e-8);
        assert_eq!(v.outcome, Outcome::StableIndication);
    }

    #[test]
    fn morse_grid_matches_closed_form() {
        for (g, l, dim) in [(0.3, 1.7, 1), (2.0, 0.5, 2), (0.1, 3.0, 3), (1.5, 1.2, 3)] {
            let p = RadialPotential::morse(g, l, dim).unwrap();
            let got = radial_integral(&p, |_| 1.0, 1e-10).unwrap();
            let want = morse_closed_form(g, l, dim);
            assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "{p}: {got} vs {want}");
        }
    }

    #[test]
    fn power_law_attraction_is_rejected() {
        let p = RadialPotential::power_law(2.0, 1.0, 1).unwrap();
        assert!(matches!(
            integral_criterion(&p, 1e-8),
            Err(Error::NotAbsolutelyIntegrable(_))
        ));
    }

    #[test]
    fn ball_witness_examples() {
        let p = RadialPotential::morse(1.0, 2.0, 2).unwrap();
        let (_, e) = ball_witness(&p, 20.0, 8).unwrap();
        assert!(e.value < 0.0);
        let q = RadialPotential::gaussian(-1.0, 1.0, 1).unwrap();
        let (_, e) = ball_witness(&q, 0.5, 1).unwrap();
        assert!(e.value < 0.0);
        let pos = RadialPotential::gaussian(1.0, 1.0, 1).unwrap();
        assert!(matches!(ball_witness(&pos, 1.0, 1), Err(Error::PreconditionFailed(_))));
    }
}
