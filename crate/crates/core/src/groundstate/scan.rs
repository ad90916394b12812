//! Phase table over a parameterized family of potentials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{minimize_particles, Classification, Init, MinimizeOptions};
use crate::error::Result;
use crate::potential::RadialPotential;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct ScanOptions<T> {
    pub n: usize,
    pub seeds: Vec<u64>,
    pub init: Init,
    pub minimize: MinimizeOptions<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow<T> {
    pub params: Vec<T>,
    pub seed: u64,
    pub classification: Option<Classification>,
    pub energy: Option<T>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary<T> {
    pub params: Vec<T>,
    /// Most frequent label over the seeds; ties give `undecided`.
    pub classification: Option<Classification>,
    pub best_energy: Option<T>,
    pub best_seed: Option<u64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable<T> {
    pub rows: Vec<ScanRow<T>>,
    pub summaries: Vec<ScanSummary<T>>,
}

/// Runs [`minimize_particles`] for every grid point and seed. A grid point
/// whose potential cannot be built, or whose runs fail, is recorded with the
/// error and the scan continues.
pub fn ground_state_scan<T, F>(build: F, grid: &[Vec<T>], opts: &ScanOptions<T>) -> ScanTable<T>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<RadialPotential<T>> + Sync,
{
    let jobs: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|c| opts.seeds.iter().map(move |s| (c, *s)))
        .collect();
    let rows: Vec<ScanRow<T>> = jobs
        .par_iter()
        .map(|&(cell, seed)| {
            let params = grid[cell].clone();
            let run = build(&params)
                .and_then(|p| minimize_particles(&p, opts.n, opts.init, seed, &opts.minimize));
            match run {
                Ok(trace) => ScanRow {
                    params,
                    seed,
                    classification: Some(trace.classification),
                    energy: Some(trace.best_energy()),
                    error: None,
                },
                Err(e) => ScanRow {
                    params,
                    seed,
                    classification: None,
                    energy: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let summaries = grid
        .iter()
        .enumerate()
        .map(|(cell, params)| {
            let mine = &rows[cell * opts.seeds.len()..(cell + 1) * opts.seeds.len()];
            summarize(params.clone(), mine)
        })
        .collect();
    ScanTable { rows, summaries }
}

fn summarize<T: Scalar>(params: Vec<T>, rows: &[ScanRow<T>]) -> ScanSummary<T> {
    let ok: Vec<&ScanRow<T>> = rows.iter().filter(|r| r.error.is_none()).collect();
    if ok.is_empty() {
        return ScanSummary {
            params,
            classification: None,
            best_energy: None,
            best_seed: None,
            error: rows.iter().find_map(|r| r.error.clone()),
        };
    }
    let labels = [
        Classification::Tight,
        Classification::Vanishing,
        Classification::Dichotomy,
        Classification::Undecided,
    ];
    let counts: Vec<usize> = labels
        .iter()
        .map(|l| ok.iter().filter(|r| r.classification == Some(*l)).count())
        .collect();
    let top = *counts.iter().max().unwrap_or(&0);
    let winners: Vec<Classification> = labels
        .iter()
        .zip(&counts)
        .filter(|(_, c)| **c == top)
        .map(|(l, _)| *l)
        .collect();
    let classification = if winners.len() == 1 { winners[0] } else { Classification::Undecided };
    // lowest energy, ties by lowest seed
    let best = ok
        .iter()
        .filter_map(|r| r.energy.map(|e| (e, r.seed)))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    ScanSummary {
        params,
        classification: Some(classification),
        best_energy: best.map(|b| b.0),
        best_seed: best.map(|b| b.1),
        error: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_matches_direct_run() {
        let build = |q: &[f64]| RadialPotential::power_law(q[0], q[1], 1);
        let opts = ScanOptions {
            n: 6,
            seeds: vec![4],
            init: Init::RandomBall,
            minimize: MinimizeOptions::new(300, 1e-9),
        };
        let table = ground_state_scan(build, &[vec![2.0, 1.0]], &opts);
        let p = build(&[2.0, 1.0]).unwrap();
        let direct = minimize_particles(&p, 6, Init::RandomBall, 4, &opts.minimize).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].energy, Some(direct.best_energy()));
        assert_eq!(table.summaries[0].classification, Some(direct.classification));
    }

    #[test]
    fn invalid_cell_is_isolated() {
        let build = |q: &[f64]| RadialPotential::power_law(q[0], q[1], 1);
        let opts = ScanOptions {
            n: 4,
            seeds: vec![0, 1],
            init: Init::Lattice,
            minimize: MinimizeOptions::new(100, 1e-9),
        };
        // r = -1 violates -N < r in one dimension
        let table = ground_state_scan(build, &[vec![2.0, 1.0], vec![2.0, -1.0]], &opts);
        assert_eq!(table.rows.len(), 4);
        assert!(table.summaries[0].error.is_none());
        assert!(table.summaries[1].error.is_some());
        assert!(table.summaries[1].classification.is_none());
    }
}
