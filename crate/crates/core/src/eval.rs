//! Error-versus-bitstream-length evaluation of a weight table.
//!
//! Every error is `|simulated - T|` with `T` the normalized target, in
//! `[0, 1]` units, averaged over a uniform grid of input points.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Result, SmurfError};
use crate::function::{uniform_grid, TargetFunction};
use crate::machine::{smurf_expected_output, MachineConfig, SmurfMachine};
use crate::rng::split_seed;
use crate::stochastic::Probability;
use crate::table::WeightTable;

/// Metric description written into every CSV header.
pub const METRIC: &str =
    "mean over the evaluation grid of |simulated - normalized target|, normalized [0,1] units";

/// Grid points per dimension used when none is configured.
pub fn default_grid_points(arity: usize) -> usize {
    match arity {
        0..=2 => 21,
        3 => 9,
        4 => 5,
        _ => 3,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub lengths: Vec<usize>,
    pub grid_points: Option<usize>,
    pub machine: MachineConfig,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            lengths: vec![64],
            grid_points: None,
            machine: MachineConfig::default(),
        }
    }
}

/// Seed of the simulation at grid point `k` and bitstream length `length`.
pub fn point_seed(master: u64, k: usize, length: usize) -> u64 {
    split_seed(split_seed(master, k as u64), length as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    pub index: usize,
    pub length: usize,
    /// Normalized inputs in `[0, 1]`.
    pub inputs: Vec<f64>,
    /// Inputs in the target's raw units.
    pub raw_inputs: Vec<f64>,
    pub target: f64,
    pub analytic: f64,
    pub simulated: f64,
    pub abs_error: f64,
    pub abs_error_vs_analytic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthSummary {
    pub length: usize,
    pub points: usize,
    pub avg_abs_error: f64,
    pub max_abs_error: f64,
    pub avg_abs_error_vs_analytic: f64,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub target_name: String,
    pub n_states: usize,
    pub arity: usize,
    pub grid_points: usize,
    pub master_seed: u64,
    pub burn_in: usize,
    /// Ordered by length, then by grid point.
    pub records: Vec<PointRecord>,
    pub summaries: Vec<LengthSummary>,
}

impl EvalReport {
    pub fn summary(&self, length: usize) -> Option<&LengthSummary> {
        self.summaries.iter().find(|s| s.length == length)
    }
}

fn summarize(length: usize, records: &[PointRecord]) -> LengthSummary {
    let n = records.len() as f64;
    LengthSummary {
        length,
        points: records.len(),
        avg_abs_error: records.iter().map(|r| r.abs_error).sum::<f64>() / n,
        max_abs_error: records.iter().map(|r| r.abs_error).fold(0.0, f64::max),
        avg_abs_error_vs_analytic: records.iter().map(|r| r.abs_error_vs_analytic).sum::<f64>() / n,
    }
}

/// Simulates `table` at every grid point for every configured length.
pub fn evaluate(
    table: &WeightTable,
    target: &TargetFunction,
    options: &EvalOptions,
) -> Result<EvalReport> {
    let m = table.arity();
    if target.arity() != m {
        return Err(SmurfError::DimensionMismatch {
            expected: m,
            got: target.arity(),
        });
    }
    if options.lengths.is_empty() || options.lengths.contains(&0) {
        return Err(SmurfError::Config(
            "bitstream lengths must be a non-empty list of positive integers".into(),
        ));
    }
    let points = options
        .grid_points
        .unwrap_or_else(|| default_grid_points(m));
    if points == 0 {
        return Err(SmurfError::Config("grid points must be positive".into()));
    }
    let grid = uniform_grid(m, points);
    let input_maps = table.meta.input_maps.clone();

    struct PointInfo {
        pxs: Vec<Probability>,
        raw: Vec<f64>,
        target: f64,
        analytic: f64,
    }
    let info = grid
        .par_iter()
        .map(|p| {
            let pxs = p
                .iter()
                .map(|&x| Probability::new(x))
                .collect::<Result<Vec<_>>>()?;
            Ok(PointInfo {
                raw: p
                    .iter()
                    .zip(&input_maps)
                    .map(|(&u, map)| map.from_unit_unchecked(u))
                    .collect(),
                target: target.eval(p)?,
                analytic: smurf_expected_output(table, &pxs)?.value(),
                pxs,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let config = options.machine;
    let prototype = SmurfMachine::new(table.clone(), config)?;
    let mut records = Vec::with_capacity(grid.len() * options.lengths.len());
    let mut summaries = Vec::with_capacity(options.lengths.len());
    for &length in &options.lengths {
        let batch = info
            .par_iter()
            .enumerate()
            .map_init(
                || prototype.clone(),
                |machine, (k, pi)| {
                    let seed = point_seed(config.master_seed, k, length);
                    let simulated = machine.run(&pi.pxs, length, seed)?.value();
                    Ok(PointRecord {
                        index: k,
                        length,
                        inputs: grid[k].clone(),
                        raw_inputs: pi.raw.clone(),
                        target: pi.target,
                        analytic: pi.analytic,
                        simulated,
                        abs_error: (simulated - pi.target).abs(),
                        abs_error_vs_analytic: (simulated - pi.analytic).abs(),
                    })
                },
            )
            .collect::<Result<Vec<_>>>()?;
        summaries.push(summarize(length, &batch));
        records.extend(batch);
    }
    Ok(EvalReport {
        target_name: target.name().to_owned(),
        n_states: table.n_states(),
        arity: m,
        grid_points: points,
        master_seed: config.master_seed,
        burn_in: config.burn_in,
        records,
        summaries,
    })
}

/// One aggregate row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n_states: usize,
    pub summary: LengthSummary,
}

/// Evaluates each table (typically the same target at different `N`) over
/// an ascending list of lengths.
pub fn sweep(
    tables: &[WeightTable],
    target: &TargetFunction,
    options: &EvalOptions,
) -> Result<Vec<SweepRow>> {
    if !options.lengths.windows(2).all(|w| w[0] < w[1]) {
        return Err(SmurfError::Config(
            "sweep lengths must be sorted in strictly ascending order".into(),
        ));
    }
    let mut rows = Vec::new();
    for table in tables {
        let report = evaluate(table, target, options)?;
        rows.extend(report.summaries.into_iter().map(|summary| SweepRow {
            n_states: table.n_states(),
            summary,
        }));
    }
    Ok(rows)
}

fn header(out: &mut dyn Write, report_line: &str) -> io::Result<()> {
    writeln!(out, "# metric: {METRIC}")?;
    writeln!(out, "# {report_line}")
}

fn describe(report: &EvalReport) -> String {
    format!(
        "target={} N={} M={} grid_points={} burn_in={} master_seed={}",
        report.target_name,
        report.n_states,
        report.arity,
        report.grid_points,
        report.burn_in,
        report.master_seed
    )
}

/// Per-point CSV: one row per (length, grid point).
pub fn write_points_csv(report: &EvalReport, out: &mut dyn Write) -> io::Result<()> {
    header(out, &describe(report))?;
    let m = report.arity;
    let mut cols = vec!["length".to_owned(), "point".to_owned()];
    cols.extend((1..=m).map(|j| format!("p{j}")));
    cols.extend((1..=m).map(|j| format!("x{j}")));
    cols.extend(
        [
            "target",
            "analytic",
            "simulated",
            "abs_error",
            "abs_error_vs_analytic",
        ]
        .map(String::from),
    );
    writeln!(out, "{}", cols.join(","))?;
    for r in &report.records {
        let mut row = vec![r.length.to_string(), r.index.to_string()];
        row.extend(r.inputs.iter().map(f64::to_string));
        row.extend(r.raw_inputs.iter().map(f64::to_string));
        row.extend(
            [
                r.target,
                r.analytic,
                r.simulated,
                r.abs_error,
                r.abs_error_vs_analytic,
            ]
            .map(|v| v.to_string()),
        );
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Aggregate CSV: one row per length.
pub fn write_summary_csv(report: &EvalReport, out: &mut dyn Write) -> io::Result<()> {
    header(out, &describe(report))?;
    writeln!(
        out,
        "N,length,points,avg_abs_error,max_abs_error,avg_abs_error_vs_analytic"
    )?;
    for s in &report.summaries {
        write_summary_row(out, report.n_states, s)?;
    }
    Ok(())
}

fn write_summary_row(out: &mut dyn Write, n: usize, s: &LengthSummary) -> io::Result<()> {
    writeln!(
        out,
        "{n},{},{},{},{},{}",
        s.length, s.points, s.avg_abs_error, s.max_abs_error, s.avg_abs_error_vs_analytic
    )
}

/// Sweep CSV: one row per (N, length).
pub fn write_sweep_csv(
    target_name: &str,
    rows: &[SweepRow],
    out: &mut dyn Write,
) -> io::Result<()> {
    header(out, &format!("target={target_name}"))?;
    writeln!(
        out,
        "N,length,points,avg_abs_error,max_abs_error,avg_abs_error_vs_analytic"
    )?;
    for row in rows {
        write_summary_row(out, row.n_states, &row.summary)?;
    }
    Ok(())
}
