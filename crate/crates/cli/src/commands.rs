use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use smurf_core::eval::{write_points_csv, write_summary_csv, write_sweep_csv};
use smurf_core::{
    builtin_with_boxes, chain_steady_probs, codeword_digits, evaluate, from_expression,
    joint_steady_probs, load_table, save_table, target_from_meta, write_table, EvalOptions,
    MachineConfig, Probability, QpOptions, SynthesisOptions, TargetFunction, WeightTable,
};

use crate::config::{check_dimensions, RunConfig};
use crate::CliError;

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                CliError::Io(format!("cannot write {}: {e}", p.display()))
            })?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(path: &Path) -> Result<WeightTable, CliError> {
    load_table(path).map_err(|e| match e {
        smurf_core::SmurfError::Io(io) => {
            CliError::Io(format!("cannot read {}: {io}", path.display()))
        }
        other => CliError::Config(format!("{}: {other}", path.display())),
    })
}

/// The target named by `--target` / `--expr`, if any.
fn configured_target(
    cfg: &RunConfig,
    arity: Option<usize>,
) -> Result<Option<TargetFunction>, CliError> {
    let output = cfg.output()?;
    if let Some(name) = &cfg.target {
        let probe = builtin_with_boxes(name, None, None)?;
        let m = probe.arity();
        if let Some(a) = arity.or(cfg.arity).filter(|&a| a != m) {
            return Err(CliError::Config(format!(
                "target `{name}` has {m} inputs but M = {a} was requested"
            )));
        }
        let maps = cfg.input_maps(m)?;
        if maps.is_none() && output.is_none() {
            return Ok(Some(probe));
        }
        return Ok(Some(builtin_with_boxes(name, maps, output)?));
    }
    if let Some(text) = &cfg.expr {
        let arity = arity.or(cfg.arity);
        let m = match arity {
            Some(m) => m,
            None => from_expression(text, None, None, None)?.arity(),
        };
        let maps = cfg.input_maps(m)?;
        return Ok(Some(from_expression(text, Some(m), maps, output)?));
    }
    Ok(None)
}

fn require_target(cfg: &RunConfig) -> Result<TargetFunction, CliError> {
    configured_target(cfg, None)?
        .ok_or_else(|| CliError::Config("a target is required: pass --target or --expr".into()))
}

fn synthesis_options(cfg: &RunConfig) -> Result<SynthesisOptions, CliError> {
    if cfg.grid == Some(0) {
        return Err(CliError::Config("--grid must be positive".into()));
    }
    Ok(SynthesisOptions {
        resolution: cfg.grid,
        qp: QpOptions {
            method: cfg.qp_method()?,
            ..QpOptions::default()
        },
        master_seed: cfg.seed.unwrap_or(0),
    })
}

fn synthesize_table(
    target: &TargetFunction,
    n: usize,
    options: &SynthesisOptions,
) -> Result<WeightTable, CliError> {
    check_dimensions(n, target.arity())?;
    let table = smurf_core::synthesize(target, n, options)?;
    if let Some(s) = &table.meta.solver {
        eprintln!(
            "solver: target={} N={} M={} iterations={} phi={:.9e} residual={:.3e} regularization={:.3e}",
            target.name(),
            n,
            target.arity(),
            s.iterations,
            s.phi,
            s.residual,
            s.regularization
        );
    }
    Ok(table)
}

pub fn synthesize(cfg: &RunConfig) -> Result<(), CliError> {
    let target = require_target(cfg)?;
    let n = cfg.single_n_states()?;
    let table = synthesize_table(&target, n, &synthesis_options(cfg)?)?;
    match &cfg.out {
        Some(path) => save_table(path, &table).map_err(|e| match e {
            smurf_core::SmurfError::Io(io) => {
                CliError::Io(format!("cannot write {}: {io}", path.display()))
            }
            other => other.into(),
        })?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(write_table(&table)?.as_bytes())?;
        }
    }
    Ok(())
}

fn eval_options(cfg: &RunConfig) -> Result<EvalOptions, CliError> {
    if cfg.grid_points == Some(0) {
        return Err(CliError::Config("--grid-points must be positive".into()));
    }
    Ok(EvalOptions {
        lengths: cfg.lengths()?,
        grid_points: cfg.grid_points,
        machine: MachineConfig {
            rng: cfg.rng_kind(),
            master_seed: cfg.seed.unwrap_or(0),
            burn_in: cfg.burn_in.unwrap_or(0),
            initial_state: cfg.initial_state.unwrap_or(0),
        },
    })
}

fn target_for(cfg: &RunConfig, table: &WeightTable) -> Result<TargetFunction, CliError> {
    match configured_target(cfg, Some(table.arity()))? {
        Some(t) => Ok(t),
        None => Ok(target_from_meta(&table.meta, table.arity())?),
    }
}

pub fn eval(cfg: &RunConfig) -> Result<(), CliError> {
    let path = match cfg.coeffs.as_deref() {
        Some([one]) => one.clone(),
        Some(_) => {
            return Err(CliError::Config(
                "eval takes exactly one --coeffs file".into(),
            ))
        }
        None => return Err(CliError::Config("missing --coeffs".into())),
    };
    let table = load(&path)?;
    if let Some(n) = cfg.n_states.clone().map(|n| n.into_vec()) {
        if n != [table.n_states()] {
            return Err(CliError::Config(format!(
                "--n-states {n:?} does not match the file's N = {}",
                table.n_states()
            )));
        }
    }
    if let Some(m) = cfg.arity.filter(|&m| m != table.arity()) {
        return Err(CliError::Config(format!(
            "--arity {m} does not match the file's M = {}",
            table.arity()
        )));
    }
    let target = target_for(cfg, &table)?;
    let report = evaluate(&table, &target, &eval_options(cfg)?)?;
    if let Some(p) = &cfg.out {
        let mut out = open_output(Some(p))?;
        write_points_csv(&report, &mut out)?;
        out.flush()?;
    }
    let mut stdout = io::stdout().lock();
    write_summary_csv(&report, &mut stdout)?;
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let (tables, target) = match &cfg.coeffs {
        Some(paths) if !paths.is_empty() => {
            let tables = paths
                .iter()
                .map(|p| load(p))
                .collect::<Result<Vec<_>, _>>()?;
            let target = target_for(cfg, &tables[0])?;
            (tables, target)
        }
        _ => {
            let target = require_target(cfg)?;
            let options = synthesis_options(cfg)?;
            let tables = cfg
                .n_states_list()?
                .into_iter()
                .map(|n| synthesize_table(&target, n, &options))
                .collect::<Result<Vec<_>, _>>()?;
            (tables, target)
        }
    };
    let rows = smurf_core::sweep(&tables, &target, &eval_options(cfg)?)?;
    let mut out = open_output(cfg.out.as_deref())?;
    write_sweep_csv(target.name(), &rows, &mut out)?;
    out.flush()?;
    Ok(())
}

pub struct SteadyRequest {
    pub n_states: usize,
    pub px: Option<Vec<f64>>,
    pub curves: bool,
    pub points: usize,
    pub out: Option<PathBuf>,
    pub gnuplot: Option<PathBuf>,
}

fn probability(v: f64) -> Result<Probability, CliError> {
    Ok(Probability::new(v)?)
}

pub fn steady(req: &SteadyRequest) -> Result<(), CliError> {
    let n = req.n_states;
    check_dimensions(n, 1)?;
    let mut out = open_output(req.out.as_deref())?;
    if req.curves {
        if req.points < 2 {
            return Err(CliError::Config("--points must be at least 2".into()));
        }
        let cols: Vec<String> = (0..n).map(|i| format!("P{i}")).collect();
        writeln!(out, "px,{}", cols.join(","))?;
        for k in 0..req.points {
            let px = k as f64 / (req.points - 1) as f64;
            let v = chain_steady_probs(n, probability(px)?)?;
            let vals: Vec<String> = v.probs().iter().map(f64::to_string).collect();
            writeln!(out, "{px},{}", vals.join(","))?;
        }
        out.flush()?;
        if let (Some(script), Some(csv)) = (&req.gnuplot, &req.out) {
            write_gnuplot(script, csv, n)?;
        }
        return Ok(());
    }
    let pxs = req
        .px
        .as_ref()
        .filter(|v| !v.is_empty())
        .ok_or_else(|| CliError::Config("pass --px values or --curves".into()))?;
    let probs = pxs
        .iter()
        .map(|&v| probability(v))
        .collect::<Result<Vec<_>, _>>()?;
    if probs.len() == 1 {
        let v = chain_steady_probs(n, probs[0])?;
        writeln!(out, "state,probability")?;
        for (i, p) in v.probs().iter().enumerate() {
            writeln!(out, "{i},{p}")?;
        }
    } else {
        let m = probs.len();
        check_dimensions(n, m)?;
        let joint = joint_steady_probs(n, &probs)?;
        let digits: Vec<String> = (1..=m).map(|j| format!("i{j}")).collect();
        writeln!(out, "t,{},probability", digits.join(","))?;
        for (t, p) in joint.iter().enumerate() {
            let d: Vec<String> = codeword_digits(t, n, m)
                .iter()
                .map(usize::to_string)
                .collect();
            writeln!(out, "{t},{},{p}", d.join(","))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn write_gnuplot(script: &Path, csv: &Path, n: usize) -> Result<(), CliError> {
    let mut f = open_output(Some(script))?;
    writeln!(f, "set datafile separator ','")?;
    writeln!(f, "set key autotitle columnhead")?;
    writeln!(f, "set xlabel 'P_x'")?;
    writeln!(f, "set ylabel 'steady-state probability'")?;
    writeln!(f, "set title '{n}-state chain'")?;
    let plots: Vec<String> = (0..n)
        .map(|i| format!("'{}' using 1:{} with lines", csv.display(), i + 2))
        .collect();
    writeln!(f, "plot {}", plots.join(", \\\n     "))?;
    f.flush()?;
    Ok(())
}

pub fn show(path: &Path) -> Result<(), CliError> {
    let table = load(path)?;
    let meta = &table.meta;
    let n = table.n_states();
    let m = table.arity();
    let mut out = io::stdout().lock();
    writeln!(out, "target:      {}", meta.target_name)?;
    if let Some(e) = &meta.expression {
        writeln!(out, "expression:  {e}")?;
    }
    writeln!(out, "N = {n}, M = {m}, {} θ-gates", table.len())?;
    for (j, map) in meta.input_maps.iter().enumerate() {
        writeln!(out, "input x{}:    [{}, {}]", j + 1, map.lo, map.hi)?;
    }
    writeln!(
        out,
        "output:      [{}, {}]",
        meta.output_map.lo, meta.output_map.hi
    )?;
    if let Some(r) = meta.grid_resolution {
        writeln!(out, "quadrature:  {r} nodes per dimension")?;
    }
    if let Some(s) = &meta.solver {
        writeln!(
            out,
            "solver:      {} iterations, phi {:.9e}, residual {:.3e}",
            s.iterations, s.phi, s.residual
        )?;
    }
    writeln!(out, "seed:        {}", meta.master_seed)?;
    if m == 2 {
        writeln!(out, "weights (row i2, column i1):")?;
        for i2 in 0..n {
            let row: Vec<String> = (0..n)
                .map(|i1| format!("{:.4}", table.weight(i2 * n + i1)))
                .collect();
            writeln!(out, "  {}", row.join("  "))?;
        }
    } else {
        writeln!(out, "weights:")?;
        for t in 0..table.len() {
            let d: Vec<String> = codeword_digits(t, n, m)
                .iter()
                .map(usize::to_string)
                .collect();
            writeln!(out, "  w_{t:<5} [{}]  {:.6}", d.join(","), table.weight(t))?;
        }
    }
    Ok(())
}
