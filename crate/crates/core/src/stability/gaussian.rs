//! Sign of `∫ W(|x|) e^{-p²|x|²} dx` over a scan of `p`, with Gaussian witnesses.

use rayon::prelude::*;

use super::integral::{absolute_integral, integral_criterion, weighted_integral_at};
use super::{axis_cell_cap, grid_energy, Certificate, Criterion, Outcome, StabilityVerdict, Witness};
use crate::error::{Error, Result};
use crate::measure::gaussian_witness_density;
use crate::potential::{RadialPotential, TailClass};
use crate::scalar::Scalar;

use super::radial_integral;

const GRID_POINTS: usize = 200;
const GRID_LO: f64 = 1e-3;
const GRID_HI: f64 = 1e3;
const REFINE_STEPS: usize = 40;
/// Witness grids extend this many standard deviations from the origin.
const WITNESS_SIGMAS: f64 = 4.0;

/// 200 log-spaced values of `p` in `[1e-3, 1e3]`.
pub fn default_p_grid<T: Scalar>() -> Vec<T> {
    let (lo, hi) = (GRID_LO.ln(), GRID_HI.ln());
    (0..GRID_POINTS)
        .map(|i| T::lit((lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64).exp()))
        .collect()
}

/// `S_{N-1} ∫_0^∞ W(r) e^{-p² r²} r^{N-1} dr`.
pub fn gaussian_weighted_integral<T: Scalar>(p: &RadialPotential<T>, pval: T, quad_tol: T) -> Result<T> {
    let p2 = pval * pval;
    let (_, outer) = p.length_scales();
    let scale = outer.min(T::one() / pval);
    weighted_integral_at(p, |r| (-p2 * r * r).exp(), scale, quad_tol)
}

/// Gaussian-weighted criterion over `p_grid`, plus `p = 0` when `W` is
/// absolutely integrable. `HE_satisfied` needs a value below `-quad_tol`
/// and a Gaussian (or, at `p = 0`, ball) density with negative grid energy.
/// When every value is within `quad_tol` of zero the verdict is
/// inconclusive; otherwise `stable_indication` over the scanned grid.
pub fn gaussian_criterion<T: Scalar>(
    p: &RadialPotential<T>,
    p_grid: &[T],
    quad_tol: T,
) -> Result<StabilityVerdict<T>> {
    if p_grid.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
        return Err(Error::InvalidArgument("p grid must hold positive finite values".into()));
    }
    let mut grid: Vec<T> = p_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    grid.dedup();
    let values: Vec<T> = grid
        .par_iter()
        .map(|pv| gaussian_weighted_integral(p, *pv, quad_tol))
        .collect::<Result<_>>()?;
    let mut scan: Vec<(T, T)> = grid.iter().copied().zip(values).collect();
    let with_zero = absolute_integral(p, quad_tol).is_ok();
    if with_zero {
        scan.insert(0, (T::zero(), radial_integral(p, |_| T::one(), quad_tol)?));
    }

    let (mut arg, mut min) = lowest(&scan);
    let idx = scan.iter().position(|s| s.0 == arg).unwrap_or(0);
    if idx > 0 && idx + 1 < scan.len() && scan[idx - 1].0 > T::zero() {
        let (a, v) = refine(p, scan[idx - 1].0, scan[idx + 1].0, quad_tol)?;
        if v < min {
            arg = a;
            min = v;
        }
    }

    let mut v = StabilityVerdict::new(Criterion::GaussianWeighted, Outcome::StableIndication, min);
    v.argmin = Some(arg);
    v.domain = match (with_zero, grid.first(), grid.last()) {
        (z, Some(lo), Some(hi)) => format!("p in {}[{lo}, {hi}], {} points", if z { "{0} u " } else { "" }, grid.len()),
        _ => "p in {0}".into(),
    };
    v.advisory = p.closed_form_tail() == Some(TailClass::H3a);
    if min < -quad_tol {
        v.outcome = Outcome::Inconclusive;
        for pv in witness_order(&scan, arg, min) {
            if let Some(cert) = witness(p, pv, quad_tol)? {
                v.outcome = Outcome::HeSatisfied;
                v.certificate = Some(cert);
                break;
            }
        }
        if v.certificate.is_none() {
            v.note = Some("weighted integral is negative but no Gaussian witness had negative grid energy".into());
        }
    } else if scan.iter().all(|s| s.1.abs() <= quad_tol) {
        v.outcome = Outcome::Inconclusive;
    }
    v.scan = scan;
    Ok(v)
}

/// Lowest value, ties by lowest index.
fn lowest<T: Scalar>(scan: &[(T, T)]) -> (T, T) {
    scan.iter()
        .fold((T::nan(), T::infinity()), |best, s| if s.1 < best.1 { *s } else { best })
}

/// Golden-section search for the minimum in `log p` over `[lo, hi]`.
fn refine<T: Scalar>(p: &RadialPotential<T>, lo: T, hi: T, quad_tol: T) -> Result<(T, T)> {
    let f = |t: T| gaussian_weighted_integral(p, t.exp(), quad_tol);
    let phi = T::lit(0.618_033_988_749_894_8);
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..REFINE_STEPS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c.exp(), fc) } else { (d.exp(), fd) })
}

/// Candidate values of `p` for a witness: the largest `p` reaching half the
/// minimum (narrowest density, cheapest grid), then the minimizer, then the
/// remaining negative entries from large to small `p`.
fn witness_order<T: Scalar>(scan: &[(T, T)], arg: T, min: T) -> Vec<T> {
    let half = min * T::lit(0.5);
    let mut out = Vec::new();
    if let Some(s) = scan.iter().rev().find(|s| s.1 <= half) {
        out.push(s.0);
    }
    if !out.contains(&arg) {
        out.push(arg);
    }
    for s in scan.iter().rev().filter(|s| s.1 < T::zero()).step_by(8) {
        if !out.contains(&s.0) {
            out.push(s.0);
        }
    }
    out.truncate(6);
    out
}

fn witness<T: Scalar>(p: &RadialPotential<T>, pv: T, quad_tol: T) -> Result<Option<Certificate<T>>> {
    if pv == T::zero() {
        let v = integral_criterion(p, quad_tol)?;
        return Ok(v.certificate.map(|c| Certificate {
            parameter: ("p".into(), T::zero()),
            ..c
        }));
    }
    let dim = p.dim();
    let (fine, _) = p.length_scales();
    let sigma = T::one() / (T::lit(2.0) * pv);
    let cap = (axis_cell_cap(dim) / (2 * WITNESS_SIGMAS as usize)).max(4);
    let wanted = (sigma / (fine / T::lit(4.0))).ceil().to_usize().unwrap_or(usize::MAX);
    let cells = wanted.clamp(4, cap);
    let grid = gaussian_witness_density(pv, dim, cells, T::lit(WITNESS_SIGMAS))?;
    let energy = grid_energy(p, &grid)?;
    Ok((energy.value < T::zero()).then(|| Certificate {
        witness: Witness::Grid(grid),
        energy,
        parameter: ("p".into(), pv),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::GaussianTerm;
    use std::f64::consts::PI;

    #[test]
    fn attractive_gaussian_closed_form() {
        let p = RadialPotential::gaussian(-1.0, 1.0, 1).unwrap();
        for pv in [0.01, 0.5, 1.0, 3.0, 40.0] {
            let got = gaussian_weighted_integral(&p, pv, 1e-10).unwrap();
            let want = -(PI / (1.0 + pv * pv)).sqrt();
            assert!((got - want).abs() < 1e-9, "p={pv}: {got} vs {want}");
        }
        let v = gaussian_criterion(&p, &default_p_grid(), 1e-8).unwrap();
        assert_eq!(v.outcome, Outcome::HeSatisfied);
        assert!(v.certificate.unwrap().energy.value < 0.0);
    }

    #[test]
    fn nonnegative_potential_is_stable() {
        let p = RadialPotential::gaussian_mix(
            vec![
                GaussianTerm { amplitude: 1.0, width: 1.0 },
                GaussianTerm { amplitude: 0.5, width: 3.0 },
            ],
            2,
        )
        .unwrap();
        let v = gaussian_criterion(&p, &default_p_grid(), 1e-8).unwrap();
        assert_eq!(v.outcome, Outcome::StableIndication);
        assert!(v.scan.iter().all(|s| s.1 >= 0.0));
    }

    #[test]
    fn power_law_scan_matches_closed_form() {
        // 2∫(r²/2 − r) e^{-p²r²} dr = √π/(4p³) − 1/p², negative for p > √π/4
        let p = RadialPotential::power_law(2.0, 1.0, 1).unwrap();
        let grid: Vec<f64> = default_p_grid().into_iter().step_by(10).collect();
        let v = gaussian_criterion(&p, &grid, 1e-8).unwrap();
        assert!(v.advisory);
        assert_eq!(v.scan.len(), grid.len());
        for (pv, got) in &v.scan {
            let want = PI.sqrt() / (4.0 * pv.powi(3)) - 1.0 / (pv * pv);
            assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "p={pv}: {got} vs {want}");
        }
        assert_eq!(v.outcome, Outcome::HeSatisfied);
        assert!(v.certificate.unwrap().energy.value < 0.0);
    }

    #[test]
    fn small_p_reproduces_integral() {
        for (g, l, dim) in [(1.0, 2.0, 2), (0.5, 1.0, 1), (0.2, 1.5, 3)] {
            let p = RadialPotential::morse(g, l, dim).unwrap();
            let at_zero: f64 = radial_integral(&p, |_| 1.0, 1e-10).unwrap();
            let small = gaussian_weighted_integral(&p, 1e-6, 1e-10).unwrap();
            assert!((at_zero - small).abs() < 1e-8, "{p}: {at_zero} vs {small}");
        }
    }

    #[test]
    fn morse_catastrophic_gets_witness() {
        let p = RadialPotential::morse(1.0, 2.0, 2).unwrap();
        let v = gaussian_criterion(&p, &default_p_grid(), 1e-8).unwrap();
        assert_eq!(v.outcome, Outcome::HeSatisfied);
        assert!(v.numeric_value < -18.0);
        assert!(v.certificate.unwrap().energy.value < 0.0);
    }

    #[test]
    fn zero_potential_is_inconclusive() {
        let p = RadialPotential::gaussian(0.0, 1.0, 1).unwrap();
        let v = gaussian_criterion(&p, &[0.1, 1.0], 1e-8).unwrap();
        assert_eq!(v.outcome, Outcome::Inconclusive);
    }
}
