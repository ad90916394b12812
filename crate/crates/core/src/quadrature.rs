//! Adaptive Gauss-Kronrod quadrature on finite intervals and dyadic / periodic
//! decompositions of the half line.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// The 15 Gauss-Kronrod nodes on `[-1, 1]` as `(node, kronrod weight,
/// gauss weight)`; the Gauss weight is zero off the 7-point Gauss nodes.
pub(crate) fn gk15_rule() -> [(f64, f64, f64); 15] {
    let mut out = [(0.0, WGK[7], WG[3]); 15];
    for j in 0..7 {
        let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        out[2 * j] = (-XGK[j], WGK[j], wg);
        out[2 * j + 1] = (XGK[j], WGK[j], wg);
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_subdivisions: usize,
}

impl<T: Scalar> QuadOptions<T> {
    pub fn new(abs_tol: T) -> Self {
        Self {
            abs_tol,
            rel_tol: T::lit(1e-12).max(T::epsilon() * T::lit(64.0)),
            max_subdivisions: 2000,
        }
    }

    fn target(&self, value: T) -> T {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

fn gk15<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let center = (a + b) * T::lit(0.5);
    let half = (b - a) * T::lit(0.5);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[j / 2]);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Scalar> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Scalar> Eq for Segment<T> {}
impl<T: Scalar> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Globally adaptive 15-point Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Endpoints are never evaluated, so integrable endpoint singularities are
/// admissible.
pub fn integrate<T: Scalar, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    opts: &QuadOptions<T>,
) -> Result<QuadResult<T>> {
    if a == b {
        return Ok(QuadResult {
            value: T::zero(),
            error: T::zero(),
            evaluations: 0,
        });
    }
    let (value, error) = gk15(f, a, b);
    check_finite(value, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut evaluations = 15;
    let mut splits = 0;
    while total_err > opts.target(total) {
        if splits >= opts.max_subdivisions {
            return Err(Error::QuadratureFailure(format!(
                "no convergence on [{a:e}, {b:e}] after {splits} subdivisions (error {total_err:e})"
            )));
        }
        let seg = heap.pop().expect("heap never empty");
        let mid = (seg.a + seg.b) * T::lit(0.5);
        if mid <= seg.a.min(seg.b) || mid >= seg.a.max(seg.b) {
            return Err(Error::QuadratureFailure(format!(
                "interval near {mid:e} cannot be subdivided further"
            )));
        }
        let (v1, e1) = gk15(f, seg.a, mid);
        let (v2, e2) = gk15(f, mid, seg.b);
        check_finite(v1 + v2, seg.a, seg.b)?;
        evaluations += 30;
        splits += 1;
        total = total - seg.value + v1 + v2;
        total_err = total_err - seg.error + e1 + e2;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
        // Re-sum periodically to shed accumulated cancellation in the running totals.
        if splits % 64 == 0 {
            let mut v = CompensatedSum::new();
            let mut e = CompensatedSum::new();
            for s in heap.iter() {
                v.add(s.value);
                e.add(s.error);
            }
            total = v.total();
            total_err = e.total();
        }
    }
    let mut v = CompensatedSum::new();
    for s in heap.iter() {
        v.add(s.value);
    }
    Ok(QuadResult {
        value: v.total(),
        error: total_err,
        evaluations,
    })
}

fn check_finite<T: Scalar>(v: T, a: T, b: T) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::QuadratureFailure(format!(
            "non-finite integrand on [{a:e}, {b:e}]"
        )))
    }
}

/// Walks a sequence of pieces whose contributions should decay, adding a
/// geometric tail estimate once the decay ratio settles.
struct DecayingSeries<T> {
    sum: CompensatedSum<T>,
    error: T,
    last: Vec<T>,
    evaluations: usize,
}

impl<T: Scalar> DecayingSeries<T> {
    fn new() -> Self {
        Self {
            sum: CompensatedSum::new(),
            error: T::zero(),
            last: Vec::new(),
            evaluations: 0,
        }
    }

    fn push(&mut self, r: QuadResult<T>) {
        self.sum.add(r.value);
        self.error = self.error + r.error;
        self.evaluations += r.evaluations;
        self.last.push(r.value.abs());
    }

    /// Returns the geometric tail bound when the last three magnitudes decay
    /// with a ratio below 0.95 and the tail is below `tol`.
    fn converged_tail(&self, tol: T) -> Option<T> {
        let n = self.last.len();
        if n < 4 {
            return None;
        }
        let w = &self.last[n - 4..];
        if w.iter().all(|v| *v == T::zero()) {
            return Some(T::zero());
        }
        let mut q = T::zero();
        for k in 1..4 {
            if w[k - 1] == T::zero() {
                if w[k] != T::zero() {
                    return None;
                }
                continue;
            }
            q = q.max(w[k] / w[k - 1]);
        }
        if q >= T::lit(0.95) {
            return None;
        }
        let tail = w[3] * q / (T::one() - q);
        if tail <= tol {
            Some(tail)
        } else {
            None
        }
    }
}

/// Half-line decomposition parameters: dyadic pieces `[s 2^k, s 2^{k+1}]`
/// around a characteristic `scale`, covering at least `[0, min_outer]`.
#[derive(Debug, Clone, Copy)]
pub struct HalfLine<T> {
    pub scale: T,
    pub min_outer: T,
    pub max_pieces: usize,
    pub opts: QuadOptions<T>,
}

impl<T: Scalar> HalfLine<T> {
    pub fn new(scale: T, abs_tol: T) -> Self {
        Self {
            scale,
            min_outer: scale,
            max_pieces: 400,
            opts: QuadOptions::new(abs_tol),
        }
    }

    pub fn covering(mut self, min_outer: T) -> Self {
        self.min_outer = self.min_outer.max(min_outer);
        self
    }
}

fn piece_opts<T: Scalar>(opts: &QuadOptions<T>) -> QuadOptions<T> {
    QuadOptions {
        abs_tol: opts.abs_tol / T::lit(64.0),
        rel_tol: opts.rel_tol,
        max_subdivisions: opts.max_subdivisions,
    }
}

/// Integral of `f` over `(0, scale]` by inward dyadic pieces.
fn inward<T: Scalar, F: Fn(T) -> T>(f: &F, cfg: &HalfLine<T>) -> Result<QuadResult<T>> {
    let popts = piece_opts(&cfg.opts);
    let mut series = DecayingSeries::new();
    let mut hi = cfg.scale;
    for _ in 0..cfg.max_pieces {
        let lo = hi * T::lit(0.5);
        series.push(integrate(f, lo, hi, &popts)?);
        if let Some(tail) = series.converged_tail(cfg.opts.abs_tol / T::lit(4.0)) {
            let value = series.sum.total();
            return Ok(QuadResult {
                value,
                error: series.error + tail,
                evaluations: series.evaluations,
            });
        }
        hi = lo;
        if hi <= T::min_positive_value() {
            break;
        }
    }
    Err(Error::QuadratureFailure(
        "integrand is not integrable at the origin".into(),
    ))
}

/// Integral of `f` over `[start, inf)` by outward dyadic pieces.
fn outward<T: Scalar, F: Fn(T) -> T>(f: &F, cfg: &HalfLine<T>) -> Result<QuadResult<T>> {
    let popts = piece_opts(&cfg.opts);
    let mut series = DecayingSeries::new();
    let mut lo = cfg.scale;
    for _ in 0..cfg.max_pieces {
        let hi = lo * T::lit(2.0);
        series.push(integrate(f, lo, hi, &popts)?);
        lo = hi;
        if lo < cfg.min_outer {
            continue;
        }
        if let Some(tail) = series.converged_tail(cfg.opts.abs_tol / T::lit(4.0)) {
            return Ok(QuadResult {
                value: series.sum.total(),
                error: series.error + tail,
                evaluations: series.evaluations,
            });
        }
        if !lo.is_finite() {
            break;
        }
    }
    Err(Error::QuadratureFailure(
        "integrand tail does not decay".into(),
    ))
}

/// Integral of `f` over `(0, inf)`.
pub fn integrate_half_line<T: Scalar, F: Fn(T) -> T>(
    f: &F,
    cfg: &HalfLine<T>,
) -> Result<QuadResult<T>> {
    let a = inward(f, cfg)?;
    let b = outward(f, cfg)?;
    Ok(QuadResult {
        value: a.value + b.value,
        error: a.error + b.error,
        evaluations: a.evaluations + b.evaluations,
    })
}

/// Integral of `f` over `(0, upper]` with dyadic refinement toward the origin.
pub fn integrate_from_origin<T: Scalar, F: Fn(T) -> T>(
    f: &F,
    upper: T,
    abs_tol: T,
) -> Result<QuadResult<T>> {
    let cfg = HalfLine::new(upper, abs_tol);
    inward(f, &cfg)
}

/// `∫_0^∞ f(r) dr` for an integrand that oscillates with half period
/// `half_period`. Pieces follow dyadic growth near the origin and are capped at
/// one half period further out; convergence is judged on partial sums
/// accelerated by repeated averaging.
pub fn integrate_oscillatory<T: Scalar, F: Fn(T) -> T>(
    f: &F,
    half_period: T,
    cfg: &HalfLine<T>,
) -> Result<QuadResult<T>> {
    let popts = piece_opts(&cfg.opts);
    let start = cfg.scale.min(half_period);
    let head_cfg = HalfLine {
        scale: start,
        ..*cfg
    };
    let head = inward(f, &head_cfg)
        .map_err(|e| Error::OscillatoryQuadratureFailure(e.to_string()))?;
    let mut acc = CompensatedSum::new();
    acc.add(head.value);
    let mut error = head.error;
    let mut evaluations = head.evaluations;
    let mut lo = start;
    let mut partials: Vec<T> = Vec::new();
    let max_pieces = 200_000usize;
    let tol = cfg.opts.abs_tol;
    let mut stable = 0usize;
    let mut last_estimate = T::nan();
    for _ in 0..max_pieces {
        let step = lo.min(half_period);
        let hi = lo + step;
        let r = integrate(f, lo, hi, &popts)
            .map_err(|e| Error::OscillatoryQuadratureFailure(e.to_string()))?;
        acc.add(r.value);
        error = error + r.error;
        evaluations += r.evaluations;
        lo = hi;
        if step < half_period || lo < cfg.min_outer {
            continue;
        }
        partials.push(acc.total());
        if partials.len() < 8 {
            continue;
        }
        let estimate = averaged_limit(&partials[partials.len() - 8..]);
        if (estimate - last_estimate).abs() <= tol / T::lit(4.0) {
            stable += 1;
            if stable >= 3 {
                return Ok(QuadResult {
                    value: estimate,
                    error: error + (estimate - last_estimate).abs(),
                    evaluations,
                });
            }
        } else {
            stable = 0;
        }
        last_estimate = estimate;
    }
    Err(Error::OscillatoryQuadratureFailure(format!(
        "no convergence up to r = {lo:e}"
    )))
}

/// Repeated pairwise averaging of partial sums of an alternating tail.
fn averaged_limit<T: Scalar>(partials: &[T]) -> T {
    let mut level: Vec<T> = partials.to_vec();
    while level.len() > 1 {
        level = level
            .windows(2)
            .map(|w| (w[0] + w[1]) * T::lit(0.5))
            .collect();
    }
    level[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(&|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, &QuadOptions::new(1e-14)).unwrap();
        assert!((r.value - 0.0).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let r = integrate_from_origin(&|x: f64| x.powf(-0.5), 1.0, 1e-10).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn half_line_exponential() {
        // ∫_0^∞ r^2 e^{-r/3} dr = 2 * 27
        let cfg = HalfLine::new(1.0, 1e-10);
        let r = integrate_half_line(&|x: f64| x * x * (-x / 3.0).exp(), &cfg).unwrap();
        assert!((r.value - 54.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn half_line_power_tail_extrapolated() {
        // ∫_1^∞ r^{-3} dr = 1/2, pieces decay by 1/4 per doubling
        let cfg = HalfLine::new(1.0, 1e-10);
        let f = |x: f64| if x < 1.0 { 0.0 } else { x.powi(-3) };
        let r = integrate_half_line(&f, &cfg).unwrap();
        assert!((r.value - 0.5).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn divergent_tail_reported() {
        let cfg = HalfLine::new(1.0, 1e-10);
        assert!(integrate_half_line(&|x: f64| 1.0 / (1.0 + x), &cfg).is_err());
    }

    #[test]
    fn oscillatory_cosine_transform() {
        // ∫_0^∞ e^{-r} cos(2r) dr = 1/5
        let cfg = HalfLine::new(1.0, 1e-11);
        let xi = 2.0_f64;
        let r = integrate_oscillatory(
            &|x: f64| (-x).exp() * (xi * x).cos(),
            std::f64::consts::PI / xi,
            &cfg,
        )
        .unwrap();
        assert!((r.value - 0.2).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn oscillatory_slow_tail() {
        // ∫_0^∞ sin(r)/r dr = pi/2, conditionally convergent
        let cfg = HalfLine::new(1.0, 1e-7);
        let r = integrate_oscillatory(
            &|x: f64| crate::special::sinc(x),
            std::f64::consts::PI,
            &cfg,
        )
        .unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-6, "{}", r.value);
    }
}
