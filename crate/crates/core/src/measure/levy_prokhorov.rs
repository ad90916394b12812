//! Lévy-Prokhorov distance between two atomic probability measures, rounded
//! up to a grid of candidate values.
//!
//! For atomic measures `d_LP(μ, ν) ≤ ε` holds iff some coupling puts mass at
//! least `1 − ε` on pairs at distance `≤ ε` (closed enlargements). By max-flow
//! min-cut the largest such mass is `1 − max_A [μ(A) − ν(A^ε)]`, so one flow
//! computation per grid value decides the inequality for every Borel set `A`.

use std::cmp::Ordering;
use std::collections::VecDeque;

use super::PointCloudMeasure;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Slack for rounding in the mass comparisons.
const MASS_SLACK: f64 = 1e-12;
/// Residual capacities at or below this are treated as saturated.
const FLOW_EPS: f64 = 1e-15;

/// Smallest `ε` in `eps_grid` with `d_LP(μ, ν) ≤ ε`; `+∞` when no grid value
/// passes.
pub fn levy_prokhorov_upper<T: Scalar>(
    mu: &PointCloudMeasure<T>,
    nu: &PointCloudMeasure<T>,
    eps_grid: &[T],
) -> Result<T> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch(mu.dim(), nu.dim()));
    }
    for (name, m) in [("mu", mu), ("nu", nu)] {
        if !m.is_probability() {
            return Err(Error::InvalidMeasure(format!(
                "{name} has mass {}",
                m.total_mass()
            )));
        }
    }
    let mut grid: Vec<f64> = eps_grid.iter().map(|e| e.as_f64()).collect();
    if grid.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::InvalidArgument("eps grid must be finite and nonnegative".into()));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));

    let a = atoms(mu);
    let b = atoms(nu);
    for eps in grid {
        if matched_mass(&a, &b, eps) >= 1.0 - eps - MASS_SLACK {
            return Ok(T::lit(eps));
        }
    }
    Ok(T::infinity())
}

struct Atom {
    x: Vec<f64>,
    w: f64,
}

fn atoms<T: Scalar>(m: &PointCloudMeasure<T>) -> Vec<Atom> {
    m.points()
        .zip(m.weights())
        .map(|(p, w)| Atom {
            x: p.iter().map(|v| v.as_f64()).collect(),
            w: w.as_f64(),
        })
        .collect()
}

/// Maximum mass movable from `src` to `dst` along pairs at distance `≤ eps`.
fn matched_mass(src: &[Atom], dst: &[Atom], eps: f64) -> f64 {
    let (m, n) = (src.len(), dst.len());
    let (s, t) = (m + n, m + n + 1);
    let mut g = FlowGraph::new(m + n + 2);
    for (i, a) in src.iter().enumerate() {
        g.add_edge(s, i, a.w);
    }
    for (j, b) in dst.iter().enumerate() {
        g.add_edge(m + j, t, b.w);
    }
    // candidates by first coordinate, then the full distance
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|p, q| dst[*p].x[0].partial_cmp(&dst[*q].x[0]).unwrap_or(Ordering::Equal));
    let keys: Vec<f64> = order.iter().map(|j| dst[*j].x[0]).collect();
    let eps2 = eps * eps;
    for (i, a) in src.iter().enumerate() {
        let lo = keys.partition_point(|k| *k < a.x[0] - eps);
        let hi = keys.partition_point(|k| *k <= a.x[0] + eps);
        for &j in &order[lo..hi] {
            let d2: f64 = a.x.iter().zip(&dst[j].x).map(|(u, v)| (u - v) * (u - v)).sum();
            if d2 <= eps2 {
                g.add_edge(i, m + j, f64::INFINITY);
            }
        }
    }
    g.max_flow(s, t)
}

/// Dinic's algorithm on real capacities.
struct FlowGraph {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

impl FlowGraph {
    fn new(nodes: usize) -> Self {
        Self { head: vec![Vec::new(); nodes], to: Vec::new(), cap: Vec::new() }
    }

    fn add_edge(&mut self, u: usize, v: usize, c: f64) {
        self.head[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(0.0);
    }

    fn levels(&self, s: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.head.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > FLOW_EPS && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    fn push(&mut self, u: usize, t: usize, limit: f64, level: &[usize], next: &mut [usize]) -> f64 {
        if u == t {
            return limit;
        }
        while next[u] < self.head[u].len() {
            let e = self.head[u][next[u]];
            let v = self.to[e];
            if self.cap[e] > FLOW_EPS && level[v] == level[u] + 1 {
                let pushed = self.push(v, t, limit.min(self.cap[e]), level, next);
                if pushed > 0.0 {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                    return pushed;
                }
            }
            next[u] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            let level = self.levels(s);
            if level[t] == usize::MAX {
                return total;
            }
            let mut next = vec![0; self.head.len()];
            loop {
                let pushed = self.push(s, t, f64::INFINITY, &level, &mut next);
                if pushed <= 0.0 {
                    break;
                }
                total += pushed;
            }
        }
    }
}
