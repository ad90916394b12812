//! The four subcommands. Each writes its files under the output directory
//! and returns a one-paragraph summary for the terminal.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{RunConfig, ScanAxis};
use super::CliError;
use crate::error::Error;
use crate::groundstate::{
    ground_state_scan, minimize_particles, write_json, Classification, ClassifierOptions,
    MinimizationTrace, MinimizeOptions, ScanOptions, StopReason, TraceDiagnosis,
};
use crate::measure::io::{write_grid, write_point_cloud};
use crate::potential::{probe_hypotheses, tail_probe, Family, RadialPotential, TailClass};
use crate::stability::{
    default_p_grid, default_xi_grid, fourier_criterion, gaussian_criterion, integral_criterion,
    ruc_search, Criterion, Outcome, RucOptions, StabilityVerdict, Witness,
};

fn minimize_options(cfg: &RunConfig) -> MinimizeOptions<f64> {
    MinimizeOptions {
        max_iter: cfg.max_iter,
        grad_tol: cfg.grad_tol,
        classifier: ClassifierOptions {
            window: cfg.window,
            ..ClassifierOptions::default()
        },
    }
}

fn tail_class(p: &RadialPotential<f64>) -> TailClass {
    p.closed_form_tail().unwrap_or_else(|| tail_probe(p).class)
}

fn write_scan_csv(path: &Path, column: &str, scan: &[(f64, f64)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(Error::from)?;
    w.write_record([column, "value"]).map_err(Error::from)?;
    for (x, v) in scan {
        w.write_record([format!("{x:e}"), format!("{v:e}")]).map_err(Error::from)?;
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

pub fn analyze(p: &RadialPotential<f64>, cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let report = probe_hypotheses(p, cfg.quad_tol)?;
    write_json(&out.join("hypotheses.json"), &report)?;
    Ok(format!(
        "{}\n  H1: {:?}\n  H2: {:?} (value {:e})\n  H3: {:?}\n  C_W = {:e} at r = {:e}\n",
        report.potential,
        report.h1_lsc,
        report.h2_locally_integrable.status,
        report.h2_locally_integrable.value,
        report.h3.class,
        report.c_w,
        report.c_w_radius
    ))
}

#[derive(Debug, Serialize)]
struct VerdictRecord {
    criterion: Criterion,
    #[serde(skip_serializing_if = "Option::is_none")]
    outcome: Option<Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    numeric_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    argmin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    domain: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    advisory: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scan_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate_parameter: Option<(String, f64)>,
    /// Set when the criterion was not run.
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<String>,
}

impl VerdictRecord {
    fn skipped(criterion: Criterion, reason: impl Into<String>) -> Self {
        Self {
            criterion,
            outcome: None,
            numeric_value: None,
            argmin: None,
            domain: None,
            advisory: None,
            note: None,
            scan_path: None,
            certificate_path: None,
            certificate_energy: None,
            certificate_parameter: None,
            skipped: Some(reason.into()),
        }
    }
}

/// Reason a criterion does not apply to `p`, if any.
fn inapplicable(criterion: Criterion, p: &RadialPotential<f64>, tail: TailClass) -> Option<&'static str> {
    match criterion {
        Criterion::Integral | Criterion::GaussianWeighted if tail != TailClass::H3b => Some("requires (H3b)"),
        Criterion::Fourier if tail != TailClass::H3b => Some("requires a square-integrable potential (H3b)"),
        Criterion::Fourier if p.dim() > 3 => Some("requires N <= 3"),
        Criterion::RucSearch if matches!(p.family(), Family::Tabulated { .. }) => {
            Some("requires a differentiable potential")
        }
        _ => None,
    }
}

/// Errors that mean the criterion's hypotheses fail for this potential.
fn not_applicable(e: &Error) -> bool {
    matches!(
        e,
        Error::NotAbsolutelyIntegrable(_)
            | Error::NotSquareIntegrable(_)
            | Error::DimensionUnsupported(_)
            | Error::PreconditionFailed(_)
    )
}

pub(super) fn run_criterion(
    criterion: Criterion,
    p: &RadialPotential<f64>,
    cfg: &RunConfig,
) -> crate::Result<StabilityVerdict<f64>> {
    match criterion {
        Criterion::Integral => integral_criterion(p, cfg.quad_tol),
        Criterion::GaussianWeighted => {
            let grid = cfg.p_grid.clone().unwrap_or_else(default_p_grid);
            gaussian_criterion(p, &grid, cfg.quad_tol)
        }
        Criterion::Fourier => {
            let grid = cfg.xi_grid.clone().unwrap_or_else(|| default_xi_grid(p));
            fourier_criterion(p, &grid, cfg.quad_tol)
        }
        Criterion::RucSearch => ruc_search(
            p,
            &RucOptions {
                n_list: cfg.ruc.n_list.clone(),
                seeds: cfg.seeds.clone(),
                budget: cfg.ruc.budget,
                grad_tol: cfg.grad_tol,
                verdict_tol: cfg.verdict_tol,
                ..RucOptions::default()
            },
        ),
    }
}

pub fn stability(p: &RadialPotential<f64>, cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let tail = tail_class(p);
    let mut records = Vec::new();
    let mut summary = format!("{p}\n");
    for criterion in &cfg.criteria {
        let criterion = *criterion;
        if let Some(reason) = inapplicable(criterion, p, tail) {
            summary.push_str(&format!("  {criterion}: skipped ({reason})\n"));
            records.push(VerdictRecord::skipped(criterion, reason));
            continue;
        }
        let v = match run_criterion(criterion, p, cfg) {
            Ok(v) => v,
            Err(e) if not_applicable(&e) => {
                summary.push_str(&format!("  {criterion}: skipped ({e})\n"));
                records.push(VerdictRecord::skipped(criterion, e.to_string()));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let scan_name = format!("scan_{criterion}.csv");
        let column = match criterion {
            Criterion::Integral | Criterion::GaussianWeighted => "p",
            Criterion::Fourier => "xi",
            Criterion::RucSearch => "n",
        };
        write_scan_csv(&out.join(&scan_name), column, &v.scan)?;
        let mut record = VerdictRecord {
            criterion,
            outcome: Some(v.outcome),
            numeric_value: Some(v.numeric_value),
            argmin: v.argmin,
            domain: Some(v.domain.clone()),
            advisory: Some(v.advisory),
            note: v.note.clone(),
            scan_path: Some(scan_name),
            certificate_path: None,
            certificate_energy: None,
            certificate_parameter: None,
            skipped: None,
        };
        if let Some(cert) = &v.certificate {
            let name = match &cert.witness {
                Witness::Grid(g) => {
                    let name = format!("certificate_{criterion}.json");
                    write_grid(&out.join(&name), g)?;
                    name
                }
                Witness::Cloud(c) => {
                    let name = format!("certificate_{criterion}.csv");
                    write_point_cloud(&out.join(&name), c)?;
                    name
                }
            };
            record.certificate_path = Some(name);
            record.certificate_energy = Some(cert.energy.value);
            record.certificate_parameter = Some(cert.parameter.clone());
        }
        summary.push_str(&format!("  {criterion}: {} ({:e})\n", v.outcome, v.numeric_value));
        records.push(record);
    }
    write_json(&out.join("verdicts.json"), &records)?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct RunRecord {
    seed: u64,
    classification: Classification,
    best_energy: f64,
    stop: StopReason,
    iterations: usize,
}

#[derive(Debug, Serialize)]
struct MinimizeReport {
    potential: String,
    n: usize,
    init: crate::groundstate::Init,
    /// Seed of the lowest-energy run, whose trace and configuration are written.
    best_seed: u64,
    best_energy: f64,
    /// Most frequent label over the seeds; ties give `undecided`.
    classification: Classification,
    diagnosis: TraceDiagnosis<f64>,
    runs: Vec<RunRecord>,
}

fn majority(labels: &[Classification]) -> Classification {
    let all = [
        Classification::Tight,
        Classification::Vanishing,
        Classification::Dichotomy,
        Classification::Undecided,
    ];
    let counts: Vec<usize> = all.iter().map(|l| labels.iter().filter(|x| *x == l).count()).collect();
    let top = counts.iter().copied().max().unwrap_or(0);
    let winners: Vec<_> = all.iter().zip(&counts).filter(|(_, c)| **c == top).collect();
    if winners.len() == 1 {
        *winners[0].0
    } else {
        Classification::Undecided
    }
}

pub fn minimize(p: &RadialPotential<f64>, cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    use rayon::prelude::*;
    let opts = minimize_options(cfg);
    let traces: Vec<MinimizationTrace<f64>> = cfg
        .seeds
        .par_iter()
        .map(|s| minimize_particles(p, cfg.n, cfg.init, *s, &opts))
        .collect::<crate::Result<_>>()?;
    let best = traces
        .iter()
        .min_by(|a, b| {
            a.best_energy()
                .partial_cmp(&b.best_energy())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.seed.cmp(&b.seed))
        })
        .ok_or_else(|| CliError::Config("`seeds` must be nonempty".into()))?;
    best.write_csv(&out.join("trace.csv"))?;
    write_point_cloud(&out.join("final_config.csv"), &best.final_config)?;
    let labels: Vec<Classification> = traces.iter().map(|t| t.classification).collect();
    let report = MinimizeReport {
        potential: p.to_string(),
        n: cfg.n,
        init: cfg.init,
        best_seed: best.seed,
        best_energy: best.best_energy(),
        classification: majority(&labels),
        diagnosis: best.diagnosis.clone(),
        runs: traces
            .iter()
            .map(|t| RunRecord {
                seed: t.seed,
                classification: t.classification,
                best_energy: t.best_energy(),
                stop: t.stop,
                iterations: t.iterates.last().map_or(0, |i| i.iteration),
            })
            .collect(),
    };
    write_json(&out.join("classification.json"), &report)?;
    Ok(format!(
        "{p}, n = {}: {} (best energy {:e}, seed {})\n",
        cfg.n, report.classification, report.best_energy, report.best_seed
    ))
}

fn cartesian(axes: &[ScanAxis]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut row = prefix.clone();
                    row.push(*v);
                    row
                })
            })
            .collect()
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Phase table: one row per (cell, seed), then one aggregate row per cell
/// (seed column `all`) carrying the integral-criterion verdict.
pub fn scan(cfg: &RunConfig, base_dir: &Path, out: &Path) -> Result<String, CliError> {
    use rayon::prelude::*;
    let grid = cartesian(&cfg.scan);
    let build = |params: &[f64]| -> crate::Result<RadialPotential<f64>> {
        let mut spec = cfg.potential.clone();
        for (axis, v) in cfg.scan.iter().zip(params) {
            spec = spec.with_param(&axis.name, *v).map_err(Error::InvalidArgument)?;
        }
        spec.build(base_dir)
    };
    let opts = ScanOptions {
        n: cfg.n,
        seeds: cfg.seeds.clone(),
        init: cfg.init,
        minimize: minimize_options(cfg),
    };
    let table = ground_state_scan(build, &grid, &opts);
    let integral: Vec<(String, Option<f64>)> = grid
        .par_iter()
        .map(|params| match build(params) {
            Err(_) => ("error".to_string(), None),
            Ok(p) if tail_class(&p) != TailClass::H3b => ("skipped".to_string(), None),
            Ok(p) => match integral_criterion(&p, cfg.quad_tol) {
                Ok(v) => (v.outcome.to_string(), Some(v.numeric_value)),
                Err(e) if not_applicable(&e) => ("skipped".to_string(), None),
                Err(_) => ("error".to_string(), None),
            },
        })
        .collect();

    let path = out.join("phase_table.csv");
    let mut w = csv::Writer::from_path(&path).map_err(Error::from)?;
    let mut header: Vec<String> = cfg.scan.iter().map(|a| a.name.clone()).collect();
    header.extend(
        ["seed", "classification", "energy", "integral_verdict", "integral_value", "error"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header).map_err(Error::from)?;
    let params_cols = |params: &[f64]| params.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>();
    for row in &table.rows {
        let mut rec = params_cols(&row.params);
        rec.push(row.seed.to_string());
        rec.push(row.classification.map(|c| c.to_string()).unwrap_or_default());
        rec.push(fmt_opt(row.energy));
        rec.push(String::new());
        rec.push(String::new());
        rec.push(row.error.clone().unwrap_or_default());
        w.write_record(&rec).map_err(Error::from)?;
    }
    let mut flips = 0;
    for (i, s) in table.summaries.iter().enumerate() {
        let mut rec = params_cols(&s.params);
        rec.push("all".into());
        rec.push(s.classification.map(|c| c.to_string()).unwrap_or_default());
        rec.push(fmt_opt(s.best_energy));
        rec.push(integral[i].0.clone());
        rec.push(fmt_opt(integral[i].1));
        rec.push(s.error.clone().unwrap_or_default());
        w.write_record(&rec).map_err(Error::from)?;
        if i > 0 && integral[i].0 != integral[i - 1].0 {
            flips += 1;
        }
    }
    w.flush().map_err(Error::from)?;
    let errors = table.summaries.iter().filter(|s| s.error.is_some()).count();
    Ok(format!(
        "{} cells x {} seeds, {errors} cells with errors, {flips} integral-verdict changes along the table\n",
        grid.len(),
        cfg.seeds.len()
    ))
}

pub fn ensure_dir(out: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Numerical(format!("cannot create {}: {e}", out.display())))?;
    Ok(out.to_path_buf())
}
