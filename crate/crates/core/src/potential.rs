//! Radially symmetric interaction potentials `w(x) = W(|x|)` and numerical
//! probes of the standing hypotheses on `W`: lower semicontinuity, local
//! integrability on R^N, and the behavior of the tail at infinity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::scalar::Scalar;
use crate::special::unit_sphere_area;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTerm<T> {
    pub amplitude: T,
    pub width: T,
}

/// Closed-form families plus tabulated profiles.
///
/// * `PowerLaw { a, r }`: `W(d) = d^a/a - d^r/r`, with `d^0/0` read as `ln d`.
/// * `Morse { g, l }`: `W(d) = e^{-d} - g e^{-d/l}`.
/// * `GaussianMix`: `W(d) = Σ A_k e^{-d²/σ_k²}`.
/// * `Tabulated`: linear interpolation between knots, the first value held
///   constant toward the origin and `0` beyond the last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family<T> {
    PowerLaw { a: T, r: T },
    Morse { g: T, l: T },
    GaussianMix { terms: Vec<GaussianTerm<T>> },
    Tabulated { knots: Vec<(T, T)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPotential<T> {
    family: Family<T>,
    dim: usize,
}

fn power_term<T: Scalar>(d: T, e: T) -> T {
    if e == T::zero() {
        d.ln()
    } else {
        d.powf(e) / e
    }
}

impl<T: Scalar> RadialPotential<T> {
    pub fn power_law(a: T, r: T, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let n = T::from_usize_lossy(dim);
        if !(a.is_finite() && r.is_finite()) || !(-n < r && r < a) {
            return Err(Error::InvalidPotential(format!(
                "power law requires -N < r < a, got a = {a}, r = {r}, N = {dim}"
            )));
        }
        Ok(Self {
            family: Family::PowerLaw { a, r },
            dim,
        })
    }

    pub fn morse(g: T, l: T, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(g >= T::zero() && g.is_finite()) || !(l > T::zero() && l.is_finite()) {
            return Err(Error::InvalidPotential(format!(
                "morse requires G >= 0 and L > 0, got G = {g}, L = {l}"
            )));
        }
        Ok(Self {
            family: Family::Morse { g, l },
            dim,
        })
    }

    pub fn gaussian_mix(terms: Vec<GaussianTerm<T>>, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        for t in &terms {
            if !(t.width > T::zero() && t.width.is_finite() && t.amplitude.is_finite()) {
                return Err(Error::InvalidPotential(format!(
                    "gaussian term needs finite amplitude and width > 0, got ({}, {})",
                    t.amplitude, t.width
                )));
            }
        }
        Ok(Self {
            family: Family::GaussianMix { terms },
            dim,
        })
    }

    /// Single Gaussian `amplitude · e^{-d²/width²}`.
    pub fn gaussian(amplitude: T, width: T, dim: usize) -> Result<Self> {
        Self::gaussian_mix(vec![GaussianTerm { amplitude, width }], dim)
    }

    pub fn tabulated(knots: Vec<(T, T)>, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if knots.is_empty() {
            return Err(Error::InvalidPotential("tabulated profile has no knots".into()));
        }
        if knots[0].0 < T::zero() {
            return Err(Error::InvalidPotential("tabulated radii must be >= 0".into()));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidPotential(format!(
                    "tabulated radii must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if knots.iter().any(|(r, v)| !r.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidPotential("tabulated values must be finite".into()));
        }
        Ok(Self {
            family: Family::Tabulated { knots },
            dim,
        })
    }

    pub fn family(&self) -> &Family<T> {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same profile in another ambient dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        match &self.family {
            Family::PowerLaw { a, r } => Self::power_law(*a, *r, dim),
            _ => {
                check_dim(dim)?;
                Ok(Self {
                    family: self.family.clone(),
                    dim,
                })
            }
        }
    }

    /// `W(radius)`; `+∞` only for repulsive power laws at the origin.
    pub fn eval(&self, radius: T) -> T {
        let d = radius.abs();
        match &self.family {
            Family::PowerLaw { a, r } => {
                if d == T::zero() {
                    if *r <= T::zero() {
                        T::infinity()
                    } else {
                        T::zero()
                    }
                } else {
                    power_term(d, *a) - power_term(d, *r)
                }
            }
            Family::Morse { g, l } => (-d).exp() - *g * (-d / *l).exp(),
            Family::GaussianMix { terms } => terms
                .iter()
                .map(|t| t.amplitude * (-(d * d) / (t.width * t.width)).exp())
                .sum(),
            Family::Tabulated { knots } => interpolate(knots, d),
        }
    }

    /// `W'(radius)` for `radius > 0`.
    pub fn derivative(&self, radius: T) -> Result<T> {
        let d = radius.abs();
        Ok(match &self.family {
            Family::PowerLaw { a, r } => {
                d.powf(*a - T::one()) - d.powf(*r - T::one())
            }
            Family::Morse { g, l } => -(-d).exp() + *g / *l * (-d / *l).exp(),
            Family::GaussianMix { terms } => terms
                .iter()
                .map(|t| {
                    let s2 = t.width * t.width;
                    -T::lit(2.0) * t.amplitude * d / s2 * (-(d * d) / s2).exp()
                })
                .sum(),
            Family::Tabulated { .. } => return Err(Error::NonDifferentiable),
        })
    }

    pub fn value_at_zero(&self) -> T {
        self.eval(T::zero())
    }

    pub fn is_singular_at_origin(&self) -> bool {
        !self.value_at_zero().is_finite()
    }

    /// Fine and outer length scales of the profile, used to size quadrature
    /// pieces and grids.
    pub fn length_scales(&self) -> (T, T) {
        match &self.family {
            Family::PowerLaw { a, r } => {
                let s = if *a != T::zero() && *r != T::zero() && *a / *r > T::zero() {
                    (*a / *r).powf(T::one() / (*a - *r))
                } else {
                    T::one()
                };
                (s.min(T::one()), s.max(T::one()))
            }
            Family::Morse { l, .. } => (l.min(T::one()), l.max(T::one())),
            Family::GaussianMix { terms } => {
                if terms.is_empty() {
                    (T::one(), T::one())
                } else {
                    let lo = terms.iter().map(|t| t.width).fold(T::infinity(), T::min);
                    let hi = terms.iter().map(|t| t.width).fold(T::zero(), T::max);
                    (lo, hi)
                }
            }
            Family::Tabulated { knots } => {
                let last = knots[knots.len() - 1].0;
                let first_pos = knots
                    .iter()
                    .map(|k| k.0)
                    .find(|r| *r > T::zero())
                    .unwrap_or(T::one());
                (first_pos.max(last * T::lit(1e-3)).min(T::one()), last.max(T::one()))
            }
        }
    }

    /// Tail class from the closed form, when the family has one.
    pub fn closed_form_tail(&self) -> Option<TailClass> {
        match &self.family {
            Family::PowerLaw { a, .. } => Some(if *a >= T::zero() {
                TailClass::H3a
            } else {
                TailClass::H3b
            }),
            Family::Morse { .. } | Family::GaussianMix { .. } => Some(TailClass::H3b),
            Family::Tabulated { .. } => None,
        }
    }

    /// True when the closed form shows `W >= 0` everywhere.
    pub fn is_nonnegative(&self) -> bool {
        match &self.family {
            Family::PowerLaw { .. } => false,
            Family::Morse { g, .. } => *g == T::zero(),
            Family::GaussianMix { terms } => terms.iter().all(|t| t.amplitude >= T::zero()),
            Family::Tabulated { knots } => knots.iter().all(|k| k.1 >= T::zero()),
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::InvalidPotential("dimension must be positive".into()))
    } else {
        Ok(())
    }
}

fn interpolate<T: Scalar>(knots: &[(T, T)], d: T) -> T {
    let last = knots[knots.len() - 1];
    if d > last.0 {
        return T::zero();
    }
    if d <= knots[0].0 {
        return knots[0].1;
    }
    let idx = knots.partition_point(|k| k.0 < d);
    let (r1, v1) = knots[idx];
    if r1 == d {
        return v1;
    }
    let (r0, v0) = knots[idx - 1];
    v0 + (v1 - v0) * (d - r0) / (r1 - r0)
}

impl<T: Scalar> fmt::Display for RadialPotential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::PowerLaw { a, r } => write!(f, "powerlaw(a={a},r={r},N={})", self.dim),
            Family::Morse { g, l } => write!(f, "morse(G={g},L={l},N={})", self.dim),
            Family::GaussianMix { terms } => {
                write!(f, "gaussmix(")?;
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{}x{}", t.amplitude, t.width)?;
                }
                write!(f, ",N={})", self.dim)
            }
            Family::Tabulated { knots } => {
                write!(f, "tabulated({} knots,N={})", knots.len(), self.dim)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LscStatus {
    HoldsByConstruction,
    NotChecked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrabilityStatus {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailClass {
    H3a,
    H3b,
    #[serde(rename = "neither")]
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalIntegrability<T> {
    pub status: IntegrabilityStatus,
    /// `S_{N-1} ∫_0^1 |W(r)| r^{N-1} dr`, extrapolated from the cutoff sequence.
    pub value: T,
    /// `(inner cutoff, estimate on [cutoff, 1])`.
    pub estimates: Vec<(T, T)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailProbe<T> {
    pub class: TailClass,
    pub from_closed_form: bool,
    pub probes: Vec<(T, T)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport<T> {
    pub potential: String,
    pub h1_lsc: LscStatus,
    pub h2_locally_integrable: LocalIntegrability<T>,
    pub h3: TailProbe<T>,
    pub c_w: T,
    pub c_w_radius: T,
}

/// Relative growth per decade above which the cutoff sequence is read as divergent.
const H2_GROWTH_LIMIT: f64 = 0.10;

/// Runs the hypothesis probes.
pub fn probe_hypotheses<T: Scalar>(
    p: &RadialPotential<T>,
    quad_tol: T,
) -> Result<HypothesisReport<T>> {
    if !(quad_tol > T::zero()) {
        return Err(Error::InvalidArgument("quad_tol must be positive".into()));
    }
    let h2 = local_integrability(p, quad_tol)?;
    let h3 = tail_probe(p);
    let (c_w, c_w_radius) = infimum_estimate(p);
    Ok(HypothesisReport {
        potential: p.to_string(),
        h1_lsc: LscStatus::HoldsByConstruction,
        h2_locally_integrable: h2,
        h3,
        c_w,
        c_w_radius,
    })
}

/// Nested-cutoff test of `S_{N-1} ∫_c^1 |W| r^{N-1} dr` for `c = 10^-2 … 10^-10`.
pub fn local_integrability<T: Scalar>(
    p: &RadialPotential<T>,
    quad_tol: T,
) -> Result<LocalIntegrability<T>> {
    let dim = p.dim();
    let area: T = unit_sphere_area(dim);
    let integrand = |r: T| p.eval(r).abs() * r.powi(dim as i32 - 1);
    let opts = QuadOptions::new(quad_tol);
    let mut estimates = Vec::new();
    let mut increments = Vec::new();
    let mut total = T::zero();
    let mut upper = T::one();
    for k in 2..=10 {
        let cutoff = T::lit(10f64.powi(-k));
        // the first window [1e-2, 1] spans two decades
        let piece = integrate(&integrand, cutoff, upper, &opts)?.value * area;
        total = total + piece;
        increments.push(piece);
        estimates.push((cutoff, total));
        upper = cutoff;
    }
    let n = estimates.len();
    let prev = estimates[n - 2].1;
    let last = estimates[n - 1].1;
    if last == T::zero() {
        return Ok(LocalIntegrability {
            status: IntegrabilityStatus::Holds,
            value: T::zero(),
            estimates,
        });
    }
    let growth = (last - prev) / prev.max(T::min_positive_value());
    let q = increments[n - 1] / increments[n - 2].max(T::min_positive_value());
    let (status, value) = if !last.is_finite() {
        (IntegrabilityStatus::Fails, T::infinity())
    } else if growth <= T::lit(H2_GROWTH_LIMIT) {
        let tail = if q < T::one() {
            increments[n - 1] * q / (T::one() - q)
        } else {
            T::zero()
        };
        (IntegrabilityStatus::Holds, last + tail)
    } else if q >= T::lit(0.999) {
        (IntegrabilityStatus::Fails, T::infinity())
    } else {
        (IntegrabilityStatus::Inconclusive, last)
    };
    Ok(LocalIntegrability {
        status,
        value,
        estimates,
    })
}

const TAIL_PROBE_RADII: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];

pub fn tail_probe<T: Scalar>(p: &RadialPotential<T>) -> TailProbe<T> {
    let probes: Vec<(T, T)> = TAIL_PROBE_RADII
        .iter()
        .map(|&r| (T::lit(r), p.eval(T::lit(r))))
        .collect();
    if let Some(class) = p.closed_form_tail() {
        return TailProbe {
            class,
            from_closed_form: true,
            probes,
        };
    }
    TailProbe {
        class: classify_tail(&probes),
        from_closed_form: false,
        probes,
    }
}

fn classify_tail<T: Scalar>(probes: &[(T, T)]) -> TailClass {
    if probes.iter().all(|(_, v)| v.abs() < T::lit(1e-8)) {
        return TailClass::H3b;
    }
    // probes from 1e3 outward
    let beyond: Vec<T> = probes.iter().skip(1).map(|(_, v)| *v).collect();
    let growing = beyond.windows(2).all(|w| w[1] > w[0]) && beyond[0] > T::zero();
    if growing {
        TailClass::H3a
    } else {
        TailClass::Neither
    }
}

/// Numerical infimum `C_W` of `W` on `(0, ∞)`: log grid on `[1e-8, 1e8]` with
/// 10^4 points, polished by golden-section search around the grid minimum.
pub fn infimum_estimate<T: Scalar>(p: &RadialPotential<T>) -> (T, T) {
    const POINTS: usize = 10_000;
    let lo = -8.0_f64;
    let hi = 8.0_f64;
    let step = (hi - lo) / (POINTS - 1) as f64;
    let log_r = |i: usize| lo + step * i as f64;
    let mut best = (T::infinity(), T::zero());
    let mut best_idx = 0usize;
    for i in 0..POINTS {
        let r = T::lit(10f64.powf(log_r(i)));
        let v = p.eval(r);
        if v < best.0 {
            best = (v, r);
            best_idx = i;
        }
    }
    let w0 = p.value_at_zero();
    if w0.is_finite() && w0 <= best.0 {
        return (w0, T::zero());
    }
    let a = log_r(best_idx.saturating_sub(1));
    let b = log_r((best_idx + 1).min(POINTS - 1));
    let f = |t: f64| p.eval(T::lit(10f64.powf(t)));
    let (t_min, v_min) = golden_section(&f, a, b, 1e-12);
    if v_min < best.0 {
        (v_min, T::lit(10f64.powf(t_min)))
    } else {
        best
    }
}

fn golden_section<T: Scalar, F: Fn(f64) -> T>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, T) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
