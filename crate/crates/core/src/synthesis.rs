//! Least-squares fit of the θ-gate thresholds to a target function.
//!
//! With `P_s(P)` the joint steady-state vector at input `P`, the fitted
//! surface is `P_y(P) = Σ_t P_s(t) b_t` and
//!
//! ```text
//! ∫ (P_y - T)^2 dP = bᵀ H b + 2 c b + const,
//! H = ∫ P_s P_sᵀ dP,   c = -∫ T P_s dP,
//! ```
//!
//! integrated over `[0, 1]^M` by tensor Gauss–Legendre quadrature.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::chain::steady_probs_into;
use crate::error::{Result, SmurfError};
use crate::function::TargetFunction;
use crate::machine::tensor_product_into;
use crate::qp::{objective, projected_gradient_residual, solve_box_qp, QpOptions};
use crate::quadrature::QuadratureGrid;
use crate::table::{aggregate_states, SolverSummary, TableMeta, WeightTable};

/// Tolerated negative eigenvalue of `H` before it is rejected.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Relative Tikhonov shift, scaled by `trace(H) / N^M`.
pub const REGULARIZATION: f64 = 1e-10;

#[derive(Debug, Clone, Default)]
pub struct SynthesisOptions {
    /// Quadrature nodes per dimension; `None` picks
    /// [`QuadratureGrid::default_resolution`].
    pub resolution: Option<usize>,
    pub qp: QpOptions,
    /// Recorded in the table metadata.
    pub master_seed: u64,
}

/// Values of every basis function `P_s(t)` at every quadrature node:
/// `nodes × N^M`, node order as in [`QuadratureGrid::node`].
pub fn basis_matrix(n_states: usize, grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
    let m = grid.dims();
    let cols = aggregate_states(n_states, m)?;
    let rule = grid.rule();
    let axis: Vec<Vec<f64>> = rule
        .nodes
        .iter()
        .map(|&x| {
            let mut v = vec![0.0; n_states];
            steady_probs_into(x, &mut v);
            v
        })
        .collect();
    let rows = grid.node_count();
    let mut data = vec![0.0; rows * cols];
    data.par_chunks_mut(cols).enumerate().for_each_init(
        || (vec![0usize; m], Vec::with_capacity(cols)),
        |(idx, buf), (k, row)| {
            grid.node_indices(k, idx);
            let factors: Vec<&[f64]> = idx.iter().map(|&i| axis[i].as_slice()).collect();
            tensor_product_into(&factors, buf);
            row.copy_from_slice(buf);
        },
    );
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

fn node_weights(grid: &QuadratureGrid) -> Vec<f64> {
    let mut point = vec![0.0; grid.dims()];
    (0..grid.node_count())
        .map(|k| grid.node(k, &mut point))
        .collect()
}

fn gram(basis: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let mut scaled = basis.clone();
    for (mut row, &w) in scaled.row_iter_mut().zip(weights) {
        row *= w.sqrt();
    }
    let h = scaled.tr_mul(&scaled);
    (&h + h.transpose()) * 0.5
}

/// `H[u][v] = ∫ P_s(u) P_s(v) dP`.
pub fn assemble_h(n_states: usize, grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
    let basis = basis_matrix(n_states, grid)?;
    Ok(gram(&basis, &node_weights(grid)))
}

/// Target values at every quadrature node, in node order.
pub fn target_at_nodes(target: &TargetFunction, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    if target.arity() != grid.dims() {
        return Err(SmurfError::DimensionMismatch {
            expected: grid.dims(),
            got: target.arity(),
        });
    }
    (0..grid.node_count())
        .into_par_iter()
        .map_init(
            || vec![0.0; grid.dims()],
            |point, k| {
                grid.node(k, point);
                target.eval(point)
            },
        )
        .collect()
}

fn linear_term(basis: &DMatrix<f64>, weights: &[f64], values: &[f64]) -> DVector<f64> {
    let wt = DVector::from_iterator(
        weights.len(),
        weights.iter().zip(values).map(|(w, v)| w * v),
    );
    -basis.tr_mul(&wt)
}

/// `c_t = -∫ T P_s(t) dP`.
pub fn assemble_c(
    target: &TargetFunction,
    n_states: usize,
    grid: &QuadratureGrid,
) -> Result<DVector<f64>> {
    let values = target_at_nodes(target, grid)?;
    let basis = basis_matrix(n_states, grid)?;
    Ok(linear_term(&basis, &node_weights(grid), &values))
}

/// The assembled quadratic program for one target.
#[derive(Debug, Clone)]
pub struct SynthesisProblem {
    pub n_states: usize,
    pub arity: usize,
    pub grid: QuadratureGrid,
    pub h: DMatrix<f64>,
    pub c: DVector<f64>,
    pub target_name: String,
}

impl SynthesisProblem {
    pub fn new(target: &TargetFunction, n_states: usize, grid: QuadratureGrid) -> Result<Self> {
        aggregate_states(n_states, target.arity())?;
        let values = target_at_nodes(target, &grid)?;
        let basis = basis_matrix(n_states, &grid)?;
        let weights = node_weights(&grid);
        Ok(Self {
            n_states,
            arity: target.arity(),
            h: gram(&basis, &weights),
            c: linear_term(&basis, &weights, &values),
            grid,
            target_name: target.name().to_owned(),
        })
    }

    /// `φ(b) = bᵀ H b + 2 c b`.
    pub fn objective(&self, b: &[f64]) -> f64 {
        objective(&self.h, &self.c, &DVector::from_column_slice(b))
    }
}

fn check_psd(h: &DMatrix<f64>) -> Result<()> {
    let n = h.nrows();
    let shifted = h + DMatrix::identity(n, n) * PSD_TOLERANCE;
    if shifted.cholesky().is_some() {
        return Ok(());
    }
    let min = SymmetricEigen::new(h.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE {
        Err(SmurfError::NotPositiveSemidefinite(min))
    } else {
        Ok(())
    }
}

/// Minimizes `φ` over the unit box: the regularized unconstrained solution
/// when it is feasible, otherwise the configured QP method started from its
/// projection.
pub fn solve_weights(
    problem: &SynthesisProblem,
    options: &QpOptions,
) -> Result<(Vec<f64>, SolverSummary)> {
    let h = &problem.h;
    check_psd(h)?;
    let n = h.nrows();
    let lambda = REGULARIZATION * h.trace() / n as f64;
    let h_reg = h + DMatrix::identity(n, n) * lambda;

    let start = crate::qp::solve_unconstrained(&h_reg, &problem.c).ok();
    let (mut b, iterations) = match start {
        Some(b) if b.iter().all(|v| (0.0..=1.0).contains(v)) => (b, 0),
        start => {
            let mut b0 = start.unwrap_or_else(|| DVector::from_element(n, 0.5));
            b0.iter_mut().for_each(|v| {
                *v = if v.is_finite() {
                    v.clamp(0.0, 1.0)
                } else {
                    0.5
                }
            });
            let sol = solve_box_qp(&h_reg, &problem.c, b0, options)?;
            if !sol.converged {
                return Err(SmurfError::NoConvergence(sol.iterations));
            }
            (sol.b, sol.iterations)
        }
    };
    b.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    let summary = SolverSummary {
        iterations,
        phi: objective(h, &problem.c, &b),
        residual: projected_gradient_residual(h, &problem.c, &b),
        regularization: lambda,
    };
    Ok((b.iter().copied().collect(), summary))
}

/// Assembles and solves the fit of `target` with `N = n_states` per chain.
pub fn synthesize(
    target: &TargetFunction,
    n_states: usize,
    options: &SynthesisOptions,
) -> Result<WeightTable> {
    let m = target.arity();
    aggregate_states(n_states, m)?;
    let resolution = options
        .resolution
        .unwrap_or_else(|| QuadratureGrid::default_resolution(m));
    let grid = QuadratureGrid::new(resolution, m)?;
    let problem = SynthesisProblem::new(target, n_states, grid)?;
    let (weights, summary) = solve_weights(&problem, &options.qp)?;
    let meta = TableMeta {
        target_name: target.name().to_owned(),
        expression: target.expression().map(str::to_owned),
        input_maps: target.input_maps(),
        output_map: target.output_map(),
        grid_resolution: Some(resolution),
        solver: Some(summary),
        master_seed: options.master_seed,
    };
    WeightTable::with_meta(n_states, m, weights, meta)
}
