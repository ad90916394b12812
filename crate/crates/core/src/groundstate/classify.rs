//! Heuristic labels for a descent trajectory: does the configuration stay
//! put (tight), spread out (vanishing) or split into receding parts
//! (dichotomy)?

use serde::{Deserialize, Serialize};

use super::{dist, MinimizationTrace, StopReason};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Tight,
    Vanishing,
    Dichotomy,
    Undecided,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Tight => "tight",
            Classification::Vanishing => "vanishing",
            Classification::Dichotomy => "dichotomy",
            Classification::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierOptions<T> {
    /// Iterations looked back over; capped at the trace length.
    pub window: usize,
    pub growth_factor: T,
    pub cluster_gap_ratio: T,
}

impl<T: Scalar> Default for ClassifierOptions<T> {
    fn default() -> Self {
        Self {
            window: 0,
            growth_factor: T::lit(2.0),
            cluster_gap_ratio: T::lit(3.0),
        }
    }
}

/// Allowed drift of the split mass fraction across the window.
const ALPHA_DRIFT: f64 = 0.05;
/// Relative growth of the cluster gap required over the final stretch.
const RECENT_GAP_GROWTH: f64 = 0.01;
/// Relative q90 variation below which the trace counts as tight.
const TIGHT_VARIATION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDiagnosis<T> {
    pub classification: Classification,
    pub effective_window: usize,
    /// Mass fraction of the smaller cluster, when a dichotomy is detected.
    pub alpha: Option<T>,
    pub q90_ratio: T,
    pub nn_ratio: T,
    pub q90_variation: T,
    pub gap_ratio: T,
}

impl<T: Scalar> Default for TraceDiagnosis<T> {
    fn default() -> Self {
        Self {
            classification: Classification::Undecided,
            effective_window: 0,
            alpha: None,
            q90_ratio: T::nan(),
            nn_ratio: T::nan(),
            q90_variation: T::nan(),
            gap_ratio: T::nan(),
        }
    }
}

/// Checks, in order: dichotomy, vanishing, tight; otherwise undecided.
///
/// * dichotomy: a 2-means split of the final configuration into clusters of
///   at least two points has `gap / max cluster diameter ≥ cluster_gap_ratio`,
///   the gap grew over the window and over its final stretch, and the smaller
///   mass fraction moved by at most 0.05;
/// * vanishing: the 90% radius grew by `growth_factor` over the window, the
///   median nearest-neighbour distance by `√growth_factor`, and the radius is
///   still increasing at the end;
/// * tight: the 90% radius varied by less than 10% over the window, cut to
///   the last quarter of the trace, relative to the larger of its maximum there and its value
///   at the start of the trace; a run that stopped at a stationary point
///   without spreading also counts as tight.
///
/// The window is capped at the trace length, so a run that stopped early is
/// judged over its whole history.
pub fn classify_trace<T: Scalar>(
    trace: &MinimizationTrace<T>,
    opts: &ClassifierOptions<T>,
) -> TraceDiagnosis<T> {
    let its = &trace.iterates;
    let mut out = TraceDiagnosis::default();
    if its.len() < 2 {
        return out;
    }
    let last = its.len() - 1;
    // growth is judged over the full window (or the whole trace when it
    // stopped early); tightness over the final stretch
    let long = opts.window.max(1).min(last);
    let short = opts.window.max(1).min((its.len() / 4).max(1));
    out.effective_window = long;
    let end = &its[last];
    let start = &its[last - long];
    let ratio = |a: T, b: T| {
        if b > T::zero() {
            a / b
        } else if a > T::zero() {
            T::infinity()
        } else {
            T::one()
        }
    };
    out.q90_ratio = ratio(end.q90_radius, start.q90_radius);
    out.nn_ratio = ratio(end.median_nn_distance, start.median_nn_distance);
    let still_spreading = end.q90_radius > its[last - short].q90_radius;
    let (lo, hi) = its[last - short..].iter().fold((T::infinity(), T::zero()), |(lo, hi), it| {
        (lo.min(it.q90_radius), hi.max(it.q90_radius))
    });
    let reference = hi.max(its[0].q90_radius);
    out.q90_variation = if reference > T::zero() { (hi - lo) / reference } else { T::zero() };

    let dim = trace.final_config.dim();
    let fin = split(trace.final_config.coords(), dim);
    out.gap_ratio = fin.gap_ratio;
    if fin.gap_ratio >= opts.cluster_gap_ratio && fin.smaller >= 2 {
        let snapshot_at = |iteration: usize| {
            trace
                .snapshots
                .iter()
                .rev()
                .find(|s| s.0 <= iteration)
                .or_else(|| trace.snapshots.first())
        };
        let early = snapshot_at(start.iteration);
        let recent = snapshot_at(its[last - short].iteration);
        if let (Some((_, a)), Some((_, b))) = (early, recent) {
            let before = split(a, dim);
            let lately = split(b, dim);
            // the parts must still be moving apart at the end of the run
            if fin.gap > before.gap
                && fin.gap > lately.gap * T::lit(1.0 + RECENT_GAP_GROWTH)
                && (fin.alpha - before.alpha).abs() <= T::lit(ALPHA_DRIFT)
            {
                out.classification = Classification::Dichotomy;
                out.alpha = Some(fin.alpha);
                return out;
            }
        }
    }
    if still_spreading
        && out.q90_ratio >= opts.growth_factor
        && out.nn_ratio >= opts.growth_factor.sqrt()
    {
        out.classification = Classification::Vanishing;
    } else if out.q90_variation < T::lit(TIGHT_VARIATION) || trace.stop != StopReason::MaxIterations {
        out.classification = Classification::Tight;
    }
    out
}

struct Split<T> {
    gap: T,
    gap_ratio: T,
    /// Fraction of points in the smaller cluster.
    alpha: T,
    smaller: usize,
}

/// Two-means clustering seeded by a far pair, then gap and diameters.
fn split<T: Scalar>(x: &[T], dim: usize) -> Split<T> {
    let n = x.len() / dim;
    let pt = |i: usize| &x[i * dim..(i + 1) * dim];
    let none = Split {
        gap: T::zero(),
        gap_ratio: T::zero(),
        alpha: T::zero(),
        smaller: 0,
    };
    if n < 2 {
        return none;
    }
    let far_from = |a: usize| {
        (0..n)
            .max_by(|&i, &j| dist(pt(a), pt(i)).partial_cmp(&dist(pt(a), pt(j))).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(0)
    };
    let a = far_from(0);
    let b = far_from(a);
    let mut centers = [pt(a).to_vec(), pt(b).to_vec()];
    let mut labels = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let l = usize::from(dist(pt(i), &centers[1]) < dist(pt(i), &centers[0]));
            if l != labels[i] {
                labels[i] = l;
                changed = true;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|i| labels[*i] == c).collect();
            if members.is_empty() {
                continue;
            }
            for (k, v) in center.iter_mut().enumerate() {
                *v = members.iter().fold(T::zero(), |s, i| s + pt(*i)[k]) / T::from_usize_lossy(members.len());
            }
        }
        if !changed {
            break;
        }
    }
    let count1 = labels.iter().filter(|l| **l == 1).count();
    if count1 == 0 || count1 == n {
        return none;
    }
    let mut gap = T::infinity();
    let mut diam = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist(pt(i), pt(j));
            if labels[i] == labels[j] {
                diam = diam.max(d);
            } else {
                gap = gap.min(d);
            }
        }
    }
    let smaller = count1.min(n - count1);
    Split {
        gap,
        gap_ratio: if diam > T::zero() { gap / diam } else { T::infinity() },
        alpha: T::from_usize_lossy(smaller) / T::from_usize_lossy(n),
        smaller,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{geometry, Init, Iterate};
    use super::*;
    use crate::measure::PointCloudMeasure;

    /// Trace whose configuration at step `t` is `shape(t)`.
    fn synthetic(steps: usize, dim: usize, shape: impl Fn(usize) -> Vec<f64>) -> MinimizationTrace<f64> {
        let mut iterates = Vec::new();
        let mut snapshots = Vec::new();
        for t in 0..=steps {
            let x = shape(t);
            let g = geometry(&x, dim);
            iterates.push(Iterate {
                iteration: t,
                energy: 0.0,
                q90_radius: g.q90_radius,
                max_pair_distance: g.max_pair_distance,
                step: 1.0,
                median_nn_distance: g.median_nn_distance,
            });
            snapshots.push((t, x));
        }
        let last = shape(steps);
        let n = last.len() / dim;
        MinimizationTrace {
            iterates,
            final_config: PointCloudMeasure::empirical(dim, last).unwrap(),
            classification: Classification::Undecided,
            diagnosis: TraceDiagnosis::default(),
            n_points: n,
            seed: 0,
            init: Init::Lattice,
            stop: StopReason::MaxIterations,
            snapshots,
        }
    }

    fn base(n: usize) -> Vec<f64> {
        super::super::initial_configuration(Init::RandomBall, n, 2, 17)
    }

    fn opts(window: usize) -> ClassifierOptions<f64> {
        ClassifierOptions {
            window,
            ..ClassifierOptions::default()
        }
    }

    #[test]
    fn collapsing_trace_is_tight() {
        let x0 = base(30);
        let t = synthetic(400, 2, |t| x0.iter().map(|v| v * (-(t as f64) / 20.0).exp()).collect());
        assert_eq!(classify_trace(&t, &opts(100)).classification, Classification::Tight);
    }

    #[test]
    fn expanding_gas_is_vanishing() {
        let x0 = base(30);
        let t = synthetic(400, 2, |t| x0.iter().map(|v| v * (t as f64 / 50.0).exp()).collect());
        assert_eq!(classify_trace(&t, &opts(100)).classification, Classification::Vanishing);
    }

    #[test]
    fn receding_clusters_are_dichotomy() {
        let blob = base(20);
        let t = synthetic(400, 2, |t| {
            let shift = 10.0 + t as f64;
            let mut x: Vec<f64> = blob.iter().map(|v| 0.1 * v).collect();
            for (i, v) in blob.iter().enumerate() {
                x.push(0.1 * v + if i % 2 == 0 { shift } else { 0.0 });
            }
            x
        });
        let d = classify_trace(&t, &opts(100));
        assert_eq!(d.classification, Classification::Dichotomy);
        assert!((d.alpha.unwrap() - 0.5).abs() <= 0.05);
    }

    #[test]
    fn static_clusters_are_tight() {
        let blob = base(10);
        let t = synthetic(100, 2, |_| {
            let mut x: Vec<f64> = blob.iter().map(|v| 0.1 * v).collect();
            x.extend(blob.iter().enumerate().map(|(i, v)| 0.1 * v + if i % 2 == 0 { 8.0 } else { 0.0 }));
            x
        });
        assert_eq!(classify_trace(&t, &opts(25)).classification, Classification::Tight);
    }

    #[test]
    fn short_trace_is_undecided() {
        let x0 = base(5);
        let t = synthetic(0, 2, |_| x0.clone());
        assert_eq!(classify_trace(&t, &opts(10)).classification, Classification::Undecided);
    }
}
