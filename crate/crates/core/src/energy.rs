//! Interaction energy `E(μ) = ∫∫ W(|x − y|) dμ(x) dμ(y)` of point clouds and
//! grid densities, and the cross term `B[μ, ν]`.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{GridDensity, PointCloudMeasure};
use crate::potential::RadialPotential;
use crate::scalar::{compensated_sum, CompensatedSum, Scalar};

const SELF_CELL_MAX_SHELLS: usize = 200;
const SELF_CELL_REL_TOL: f64 = 1e-10;
/// Subdivision depth limit per dimension (the 3-d rule already has 3375 nodes).
const SELF_CELL_MAX_DEPTH: [usize; 3] = [12, 6, 3];
/// Accepted error of the self-cell average relative to `∫|W|`.
const SELF_CELL_ACCEPT: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport<T> {
    pub value: T,
    /// Point clouds: `Σ w_i² W(0)`. Grids: the self-cell part.
    pub diagonal_contribution: T,
    pub pair_count: usize,
    pub potential_id: String,
}

impl<T: Scalar> EnergyReport<T> {
    pub fn offdiagonal_value(&self) -> T {
        if self.diagonal_contribution.is_finite() {
            self.value - self.diagonal_contribution
        } else {
            T::nan()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadMode {
    Direct,
    RadialFast,
}

fn check_dims<T: Scalar>(p: &RadialPotential<T>, dim: usize) -> Result<()> {
    if p.dim() != dim {
        Err(Error::DimensionMismatch(p.dim(), dim))
    } else {
        Ok(())
    }
}

fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x - *y) * (*x - *y))
        .fold(T::zero(), |s, v| s + v)
        .sqrt()
}

/// `Σ_i Σ_j w_i w_j W(|x_i − x_j|)` with the diagonal, or `2 Σ_{i<j}` without.
pub fn energy_pointcloud<T: Scalar>(
    p: &RadialPotential<T>,
    mu: &PointCloudMeasure<T>,
    include_diagonal: bool,
) -> Result<EnergyReport<T>> {
    check_dims(p, mu.dim())?;
    let n = mu.len();
    let w = mu.weights();
    let two = T::lit(2.0);
    let rows: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = mu.point(i);
            let mut acc = CompensatedSum::new();
            if w[i] == T::zero() {
                return T::zero();
            }
            for j in (i + 1)..n {
                if w[j] == T::zero() {
                    continue;
                }
                acc.add(w[i] * w[j] * p.eval(distance(xi, mu.point(j))));
            }
            two * acc.total()
        })
        .collect();
    let off = compensated_sum(rows);
    let diagonal = if include_diagonal {
        let w0 = p.value_at_zero();
        compensated_sum(w.iter().filter(|v| **v > T::zero()).map(|v| *v * *v * w0))
    } else {
        T::zero()
    };
    let pairs = n * n.saturating_sub(1) / 2;
    Ok(EnergyReport {
        value: off + diagonal,
        diagonal_contribution: diagonal,
        pair_count: if include_diagonal { pairs + n } else { pairs },
        potential_id: p.to_string(),
    })
}

/// `B[μ, ν] = 2 Σ_i Σ_j w^μ_i w^ν_j W(|x_i − y_j|)`.
pub fn bilinear_form<T: Scalar>(
    p: &RadialPotential<T>,
    mu: &PointCloudMeasure<T>,
    nu: &PointCloudMeasure<T>,
) -> Result<T> {
    check_dims(p, mu.dim())?;
    check_dims(p, nu.dim())?;
    let rows: Vec<T> = (0..mu.len())
        .into_par_iter()
        .map(|i| {
            let wi = mu.weights()[i];
            if wi == T::zero() {
                return T::zero();
            }
            let xi = mu.point(i);
            compensated_sum(
                nu.points()
                    .zip(nu.weights())
                    .filter(|(_, wj)| **wj != T::zero())
                    .map(|(y, wj)| wi * *wj * p.eval(distance(xi, y))),
            )
        })
        .collect();
    Ok(T::lit(2.0) * compensated_sum(rows))
}

/// Energy of a piecewise-constant density. Distinct cells interact through
/// their centers; the self-cell term uses the cell-averaged potential
/// `h^{-2N} ∫_cell ∫_cell W(|x − y|)`, estimated by seeded Monte Carlo.
pub fn energy_grid<T: Scalar>(
    p: &RadialPotential<T>,
    rho: &GridDensity<T>,
    mode: QuadMode,
) -> Result<EnergyReport<T>> {
    check_dims(p, rho.dim())?;
    let h = rho.cell_width();
    let vol = rho.cell_volume();
    let self_avg = self_cell_average(p, h)?;
    let masses: Vec<T> = rho.values().iter().map(|v| *v * vol).collect();
    let self_part = self_avg * compensated_sum(masses.iter().map(|m| *m * *m));
    let (cross, pairs) = match mode {
        QuadMode::Direct => direct_cross(p, rho, &masses),
        QuadMode::RadialFast => fast_cross(p, rho, &masses),
    };
    Ok(EnergyReport {
        value: cross + self_part,
        diagonal_contribution: self_part,
        pair_count: pairs,
        potential_id: p.to_string(),
    })
}

fn direct_cross<T: Scalar>(p: &RadialPotential<T>, rho: &GridDensity<T>, masses: &[T]) -> (T, usize) {
    let occupied: Vec<usize> = (0..masses.len()).filter(|i| masses[*i] > T::zero()).collect();
    let centers: Vec<Vec<T>> = occupied.iter().map(|i| rho.cell_center(*i)).collect();
    let rows: Vec<T> = (0..occupied.len())
        .into_par_iter()
        .map(|a| {
            let ma = masses[occupied[a]];
            let mut acc = CompensatedSum::new();
            for b in (a + 1)..occupied.len() {
                acc.add(ma * masses[occupied[b]] * p.eval(distance(&centers[a], &centers[b])));
            }
            acc.total()
        })
        .collect();
    let k = occupied.len();
    (T::lit(2.0) * compensated_sum(rows), k * k.saturating_sub(1) / 2)
}

/// Cross term via the mass autocorrelation `C(k) = Σ_a m_a m_{a+k}`:
/// `Σ_{k ≠ 0} C(k) W(|k| h)`.
fn fast_cross<T: Scalar>(p: &RadialPotential<T>, rho: &GridDensity<T>, masses: &[T]) -> (T, usize) {
    let ext = rho.extents();
    let dim = ext.len();
    let padded: Vec<usize> = ext.iter().map(|e| 2 * e).collect();
    let total: usize = padded.iter().product();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); total];
    for (i, m) in masses.iter().enumerate() {
        let idx = rho.cell_index(i);
        buf[flat(&idx, &padded)] = Complex::new(*m, T::zero());
    }
    let mut planner = FftPlanner::<T>::new();
    fft_nd(&mut planner, &mut buf, &padded, false);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), T::zero());
    }
    fft_nd(&mut planner, &mut buf, &padded, true);
    let scale = T::from_usize_lossy(total);
    let h = rho.cell_width();
    let mut acc = CompensatedSum::new();
    let mut offsets = 0usize;
    let mut idx = vec![0usize; dim];
    // FFT round-off floor; offsets below it carry no mass pairs
    let floor = T::epsilon() * T::lit(16.0) * masses.iter().fold(T::zero(), |s, m| s + *m * *m);
    for (flat_k, c) in buf.iter().enumerate() {
        if flat_k == 0 {
            continue;
        }
        let mut rest = flat_k;
        for axis in (0..dim).rev() {
            idx[axis] = rest % padded[axis];
            rest /= padded[axis];
        }
        let mut r2 = T::zero();
        for axis in 0..dim {
            // wrap to signed offset in (-ext, ext)
            let k = idx[axis] as isize;
            let k = if k >= ext[axis] as isize { k - padded[axis] as isize } else { k };
            let kk = T::lit(k as f64) * h;
            r2 = r2 + kk * kk;
        }
        let corr = c.re / scale;
        if corr.abs() <= floor {
            continue;
        }
        offsets += 1;
        acc.add(corr * p.eval(r2.sqrt()));
    }
    (acc.total(), offsets)
}

fn flat(idx: &[usize], extents: &[usize]) -> usize {
    idx.iter().zip(extents).fold(0, |f, (i, e)| f * e + i)
}

/// In-place N-dimensional FFT on a row-major buffer.
fn fft_nd<T: Scalar>(planner: &mut FftPlanner<T>, buf: &mut [Complex<T>], extents: &[usize], inverse: bool) {
    let dim = extents.len();
    let total = buf.len();
    for axis in 0..dim {
        let len = extents[axis];
        let stride: usize = extents[axis + 1..].iter().product();
        let fft = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        let mut line = vec![Complex::new(T::zero(), T::zero()); len];
        for start in 0..total {
            // first element of each line along `axis`
            if (start / stride) % len != 0 {
                continue;
            }
            for (k, slot) in line.iter_mut().enumerate() {
                *slot = buf[start + k * stride];
            }
            fft.process(&mut line);
            for (k, v) in line.iter().enumerate() {
                buf[start + k * stride] = *v;
            }
        }
    }
}

/// `E[W(h |U − V|)]` for `U, V` uniform in the unit cube. Each coordinate of
/// `U − V` has density `1 − |t|` on `[-1, 1]`, so the average is
/// `2^N ∫_{[0,1]^N} W(h|t|) Π(1 − t_k) dt`, integrated over dyadic shells
/// toward the origin with an adaptive tensor Gauss-Kronrod rule.
pub fn self_cell_average<T: Scalar>(p: &RadialPotential<T>, h: T) -> Result<T> {
    let dim = p.dim();
    let rule = crate::quadrature::gk15_rule();
    let mut total = CompensatedSum::new();
    let (mut abs_total, mut err_total) = (T::zero(), T::zero());
    let mut last = T::zero();
    let mut converged = false;
    for k in 0..SELF_CELL_MAX_SHELLS {
        let half = T::lit(0.5).powi(k as i32 + 1);
        let mut shell = T::zero();
        for corner in 1..(1usize << dim) {
            let lo: Vec<T> = (0..dim)
                .map(|a| if corner >> a & 1 == 1 { half } else { T::zero() })
                .collect();
            let c = cell_cube(p, h, &rule, &lo, half, 0)?;
            shell = shell + c.value;
            abs_total = abs_total + c.abs;
            err_total = err_total + c.error;
        }
        total.add(shell);
        // geometric tail estimate from the last two shells
        if k >= 2 && last != T::zero() {
            let ratio = (shell / last).abs();
            let tail = if ratio < T::one() { shell.abs() * ratio / (T::one() - ratio) } else { T::infinity() };
            if tail <= T::lit(SELF_CELL_REL_TOL) * abs_total {
                converged = true;
                break;
            }
        }
        if shell == T::zero() && k >= 2 {
            converged = true;
            break;
        }
        last = shell;
    }
    let scale = T::lit(2.0).powi(dim as i32);
    let value = total.total() * scale;
    if !value.is_finite() {
        return Err(Error::QuadratureFailure(format!("self-cell average of {p} is not finite")));
    }
    if !converged || err_total > T::lit(SELF_CELL_ACCEPT) * abs_total {
        return Err(Error::QuadratureFailure(format!(
            "self-cell average of {p} at h = {h} did not converge (error {err_total})"
        )));
    }
    Ok(value)
}

struct CubeValue<T> {
    value: T,
    abs: T,
    error: T,
}

/// Tensor 15-point rule over `lo + [0, side]^N`, split into `2^N` children
/// while the Kronrod and Gauss values disagree.
fn cell_cube<T: Scalar>(
    p: &RadialPotential<T>,
    h: T,
    rule: &[(f64, f64, f64); 15],
    lo: &[T],
    side: T,
    depth: usize,
) -> Result<CubeValue<T>> {
    let dim = lo.len();
    let half = side * T::lit(0.5);
    let (mut kron, mut gauss, mut abs) = (CompensatedSum::new(), T::zero(), T::zero());
    let count = 15usize.pow(dim as u32);
    for idx in 0..count {
        let (mut r2, mut density, mut wk, mut wg) = (T::zero(), T::one(), T::one(), T::one());
        let mut rest = idx;
        for l in lo {
            let (x, k, g) = rule[rest % 15];
            rest /= 15;
            let t = *l + half * (T::one() + T::lit(x));
            r2 = r2 + t * t;
            density = density * (T::one() - t);
            wk = wk * T::lit(k);
            wg = wg * T::lit(g);
        }
        let f = p.eval(h * r2.sqrt()) * density;
        kron.add(f * wk);
        gauss = gauss + f * wg;
        abs = abs + f.abs() * wk;
    }
    let vol = half.powi(dim as i32);
    let (value, abs) = (kron.total() * vol, abs * vol);
    let error = (value - gauss * vol).abs();
    if error <= T::lit(SELF_CELL_REL_TOL) * abs || depth >= *SELF_CELL_MAX_DEPTH.get(dim - 1).unwrap_or(&0) {
        return Ok(CubeValue { value, abs, error });
    }
    let mut out = CubeValue { value: T::zero(), abs: T::zero(), error: T::zero() };
    for corner in 0..(1usize << dim) {
        let child: Vec<T> = lo
            .iter()
            .enumerate()
            .map(|(a, l)| if corner >> a & 1 == 1 { *l + half } else { *l })
            .collect();
        let c = cell_cube(p, h, rule, &child, half, depth + 1)?;
        out.value = out.value + c.value;
        out.abs = out.abs + c.abs;
        out.error = out.error + c.error;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::vanishing_ball_sequence;
    use crate::potential::probe_hypotheses;
    use proptest::prelude::*;

    fn cloud(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> PointCloudMeasure<f64> {
        PointCloudMeasure::new(dim, coords, weights).unwrap()
    }

    #[test]
    fn single_atom_is_w_at_zero() {
        let p = RadialPotential::gaussian(-1.0, 1.0, 1).unwrap();
        let mu = PointCloudMeasure::dirac(&[0.0]).unwrap();
        let e = energy_pointcloud(&p, &mu, true).unwrap();
        assert_eq!(e.value, -1.0);
        assert_eq!(e.diagonal_contribution, -1.0);
    }

    #[test]
    fn split_mass_under_linear_attraction() {
        // W(r) = -r: the only cross pair contributes 2 (1 - 1/n)(1/n)(-n)
        let p = RadialPotential::tabulated(vec![(0.0, 0.0), (1e3, -1e3)], 1).unwrap();
        for n in [2.0, 5.0, 10.0] {
            let mu = cloud(1, vec![0.0, n], vec![1.0 - 1.0 / n, 1.0 / n]);
            let e = energy_pointcloud(&p, &mu, true).unwrap();
            assert!((e.value + 2.0 * (1.0 - 1.0 / n)).abs() < 1e-12, "{}", e.value);
        }
    }

    #[test]
    fn two_equal_atoms() {
        let p = RadialPotential::morse(1.0, 2.0, 2).unwrap();
        let x = [0.3, -1.2];
        let mu = cloud(2, vec![0.0, 0.0, x[0], x[1]], vec![0.5, 0.5]);
        let e = energy_pointcloud(&p, &mu, true).unwrap();
        let d = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let want = 0.5 * p.eval(0.0) + 0.5 * p.eval(d);
        assert!((e.value - want).abs() < 1e-15);
    }

    #[test]
    fn singular_diagonal_is_infinite() {
        let p = RadialPotential::power_law(2.0, -0.5, 1).unwrap();
        let mu = cloud(1, vec![0.0, 1.0], vec![0.5, 0.5]);
        let on = energy_pointcloud(&p, &mu, true).unwrap();
        assert!(on.value.is_infinite() && on.value > 0.0);
        let off = energy_pointcloud(&p, &mu, false).unwrap();
        assert!(off.value.is_finite());
    }

    #[test]
    fn bilinear_of_diracs() {
        let p = RadialPotential::<f64>::morse(2.0, 1.0, 1).unwrap();
        let a = PointCloudMeasure::dirac(&[0.0]).unwrap();
        let b = PointCloudMeasure::dirac(&[1.7]).unwrap();
        let v = bilinear_form(&p, &a, &b).unwrap();
        assert!((v - 2.0 * p.eval(1.7)).abs() < 1e-15);
    }

    #[test]
    fn zero_potential_grid() {
        let p = RadialPotential::gaussian(0.0, 1.0, 2).unwrap();
        let rho = vanishing_ball_sequence::<f64>(1, 2, 4).unwrap();
        for mode in [QuadMode::Direct, QuadMode::RadialFast] {
            assert_eq!(energy_grid(&p, &rho, mode).unwrap().value, 0.0);
        }
    }

    fn erf(x: f64) -> f64 {
        statrs::function::erf::erf(x)
    }

    #[test]
    fn spread_ball_gaussian_decay_one_dimension() {
        // uniform density on [-n, n]: exact ∫∫ e^{-(x-y)^2}/(2n)^2
        let p = RadialPotential::gaussian(1.0, 1.0, 1).unwrap();
        for n in [2usize, 4, 8] {
            let rho = vanishing_ball_sequence::<f64>(n, 1, 64).unwrap();
            let e = energy_grid(&p, &rho, QuadMode::Direct).unwrap().value;
            let l = 2.0 * n as f64;
            let exact = (std::f64::consts::PI.sqrt() * l * erf(l) - (1.0 - (-l * l).exp())) / (l * l);
            assert!((e - exact).abs() / exact < 0.01, "n={n}: {e} vs {exact}");
        }
    }

    #[test]
    fn fast_mode_matches_direct() {
        let cases = [
            RadialPotential::morse(1.0, 2.0, 2).unwrap(),
            RadialPotential::power_law(2.0, -0.5, 2).unwrap(),
            RadialPotential::gaussian(1.0, 0.7, 3).unwrap(),
        ];
        for p in cases {
            let dim = p.dim();
            let cells = if dim == 3 { 6 } else { 12 };
            let rho = GridDensity::rasterize(dim, cells, 0.3, |x: &[f64]| {
                (-(x.iter().map(|v| v * v).sum::<f64>()) + 0.2 * x[0]).exp()
            })
            .unwrap();
            let a = energy_grid(&p, &rho, QuadMode::Direct).unwrap().value;
            let b = energy_grid(&p, &rho, QuadMode::RadialFast).unwrap().value;
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{p}: {a} vs {b}");
        }
    }

    #[test]
    fn self_cell_average_of_smooth_and_singular() {
        // E|U - V| = 1/3 on the unit interval
        let p = RadialPotential::<f64>::tabulated(vec![(0.0, 0.0), (10.0, 10.0)], 1).unwrap();
        let v = self_cell_average(&p, 1.0).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-3, "{v}");
        let q = RadialPotential::<f64>::power_law(2.0, -0.5, 1).unwrap();
        // W = d^2/2 + 2 d^{-1/2}, with E|U - V|^2 = 1/6 and E|U - V|^{-1/2} = 8/3
        let v = self_cell_average(&q, 1.0).unwrap();
        let want = 1.0 / 12.0 + 16.0 / 3.0;
        assert!((v - want).abs() / want < 0.02, "{v} vs {want}");
    }

    fn arb_cloud(dim: usize) -> impl Strategy<Value = PointCloudMeasure<f64>> {
        (1usize..9).prop_flat_map(move |n| {
            (
                prop::collection::vec(-3.0f64..3.0, n * dim),
                prop::collection::vec(0.05f64..1.0, n),
            )
                .prop_map(move |(c, w)| {
                    let s: f64 = w.iter().sum();
                    let w = w.into_iter().map(|v| v / s).collect();
                    PointCloudMeasure::new(dim, c, w).unwrap()
                })
        })
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    proptest! {
        #[test]
        fn scaling_and_translation(mu in arb_cloud(2), shift in prop::array::uniform2(-5.0f64..5.0), c in prop::sample::select(vec![0.0, 0.5, 2.0])) {
            let p = RadialPotential::morse(1.5, 2.0, 2).unwrap();
            let e = energy_pointcloud(&p, &mu, true).unwrap().value;
            let scaled = energy_pointcloud(&p, &mu.scaled(c).unwrap(), true).unwrap().value;
            prop_assert!(close(scaled, c * c * e, 1e-12) || (c == 0.0 && scaled == 0.0));
            let moved = energy_pointcloud(&p, &mu.translated(&shift), true).unwrap().value;
            prop_assert!(close(moved, e, 1e-12));
        }

        #[test]
        fn additivity_and_symmetry(mu in arb_cloud(1), nu in arb_cloud(1)) {
            let p = RadialPotential::power_law(2.0, 1.0, 1).unwrap();
            let sum = mu.sum(&nu).unwrap();
            let lhs = energy_pointcloud(&p, &sum, true).unwrap().value;
            let b = bilinear_form(&p, &mu, &nu).unwrap();
            let rhs = energy_pointcloud(&p, &mu, true).unwrap().value
                + energy_pointcloud(&p, &nu, true).unwrap().value + b;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            prop_assert!((b - bilinear_form(&p, &nu, &mu).unwrap()).abs() <= 1e-12 * (1.0 + b.abs()));
            let self_b = bilinear_form(&p, &mu, &mu).unwrap();
            let e = energy_pointcloud(&p, &mu, true).unwrap().value;
            prop_assert!((self_b - 2.0 * e).abs() <= 1e-12 * (1.0 + e.abs()));
        }

        #[test]
        fn bounded_below_by_infimum(mu in arb_cloud(2)) {
            let p = RadialPotential::morse(2.0, 1.0, 2).unwrap();
            let c_w = probe_hypotheses(&p, 1e-8).unwrap().c_w;
            let e = energy_pointcloud(&p, &mu, true).unwrap();
            prop_assert!(e.value >= c_w - 1e-12);
            let off = e.offdiagonal_value();
            prop_assert!((off + e.diagonal_contribution - e.value).abs() < 1e-12);
        }
    }
}
