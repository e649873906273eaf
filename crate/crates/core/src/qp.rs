//! Box-constrained convex quadratic programs
//!
//! ```text
//! minimize   φ(b) = bᵀ H b + 2 c b    subject to 0 <= b <= 1
//! ```
//!
//! with `H` symmetric positive (semi)definite. The half-gradient `H b + c`
//! is what every routine here works with.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Result, SmurfError};

/// Which iterative method handles an unconstrained solution that leaves the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QpMethod {
    /// Primal active-set method; exact up to round-off, finite termination.
    #[default]
    ActiveSet,
    /// Projected gradient with step `1 / λ_max`.
    ProjectedGradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    pub method: QpMethod,
    pub max_iterations: usize,
    /// Projected-gradient stopping rule on the largest entry update.
    pub update_tolerance: f64,
    /// Keep the objective value of every iterate.
    pub record_trace: bool,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            method: QpMethod::ActiveSet,
            max_iterations: 200_000,
            update_tolerance: 1e-10,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub b: DVector<f64>,
    pub iterations: usize,
    pub phi: f64,
    /// Largest projected half-gradient component at `b`.
    pub residual: f64,
    pub converged: bool,
    pub trace: Vec<f64>,
}

/// `bᵀ H b + 2 c b`.
pub fn objective(h: &DMatrix<f64>, c: &DVector<f64>, b: &DVector<f64>) -> f64 {
    b.dot(&(h * b)) + 2.0 * c.dot(b)
}

/// Largest violation of the box KKT conditions, measured on `H b + c`.
pub fn projected_gradient_residual(h: &DMatrix<f64>, c: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let g = h * b + c;
    b.iter()
        .zip(g.iter())
        .map(|(&bi, &gi)| {
            if bi <= 0.0 {
                (-gi).max(0.0)
            } else if bi >= 1.0 {
                gi.max(0.0)
            } else {
                gi.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Largest eigenvalue of a PSD matrix by power iteration.
pub fn largest_eigenvalue(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let w = h * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lambda).abs() <= 1e-14 * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

fn clamp_unit(b: &mut DVector<f64>) {
    b.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
}

/// Solves `H b = -c` by Cholesky.
pub fn solve_unconstrained(h: &DMatrix<f64>, c: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = Cholesky::new(h.clone()).ok_or(SmurfError::NotPositiveSemidefinite(0.0))?;
    Ok(chol.solve(&(-c)))
}

/// Minimizes the box QP starting from `start` (projected onto the box).
pub fn solve_box_qp(
    h: &DMatrix<f64>,
    c: &DVector<f64>,
    start: DVector<f64>,
    options: &QpOptions,
) -> Result<QpSolution> {
    if h.nrows() != h.ncols() || h.nrows() != c.len() || start.len() != c.len() {
        return Err(SmurfError::DimensionMismatch {
            expected: h.nrows(),
            got: c.len(),
        });
    }
    match options.method {
        QpMethod::ActiveSet => active_set(h, c, start, options),
        QpMethod::ProjectedGradient => projected_gradient(h, c, start, options),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

fn active_set(
    h: &DMatrix<f64>,
    c: &DVector<f64>,
    mut b: DVector<f64>,
    options: &QpOptions,
) -> Result<QpSolution> {
    let n = c.len();
    clamp_unit(&mut b);
    let mut bounds: Vec<Bound> = b
        .iter()
        .map(|&x| {
            if x <= 0.0 {
                Bound::Lower
            } else if x >= 1.0 {
                Bound::Upper
            } else {
                Bound::Free
            }
        })
        .collect();
    let scale = h.amax().max(c.amax()).max(f64::MIN_POSITIVE);
    let multiplier_tol = 1e-13 * scale;
    let mut trace = Vec::new();
    if options.record_trace {
        trace.push(objective(h, c, &b));
    }
    let cap = options.max_iterations.min(50 * n + 1000);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cap {
        iterations += 1;
        let free: Vec<usize> = (0..n).filter(|&i| bounds[i] == Bound::Free).collect();
        if !free.is_empty() {
            let y = solve_free(h, c, &b, &free)?;
            let mut alpha = 1.0;
            let mut blocking = None;
            for (k, &i) in free.iter().enumerate() {
                let step = y[k] - b[i];
                if y[k] < 0.0 && step < 0.0 {
                    let a = -b[i] / step;
                    if a < alpha {
                        alpha = a;
                        blocking = Some((i, Bound::Lower));
                    }
                } else if y[k] > 1.0 && step > 0.0 {
                    let a = (1.0 - b[i]) / step;
                    if a < alpha {
                        alpha = a;
                        blocking = Some((i, Bound::Upper));
                    }
                }
            }
            for (k, &i) in free.iter().enumerate() {
                b[i] += alpha * (y[k] - b[i]);
            }
            if let Some((i, bound)) = blocking {
                b[i] = if bound == Bound::Lower { 0.0 } else { 1.0 };
                bounds[i] = bound;
                clamp_unit(&mut b);
                if options.record_trace {
                    trace.push(objective(h, c, &b));
                }
                continue;
            }
            clamp_unit(&mut b);
            if options.record_trace {
                trace.push(objective(h, c, &b));
            }
        }
        // Subspace minimum reached: release the worst multiplier, if any.
        let g = h * &b + c;
        let release = (0..n)
            .filter_map(|i| match bounds[i] {
                Bound::Lower if g[i] < -multiplier_tol => Some((i, -g[i])),
                Bound::Upper if g[i] > multiplier_tol => Some((i, g[i])),
                _ => None,
            })
            .max_by(|a, b| a.1.total_cmp(&b.1));
        match release {
            Some((i, _)) => bounds[i] = Bound::Free,
            None => {
                converged = true;
                break;
            }
        }
    }

    Ok(QpSolution {
        phi: objective(h, c, &b),
        residual: projected_gradient_residual(h, c, &b),
        b,
        iterations,
        converged,
        trace,
    })
}

/// Minimizer of φ over the free coordinates with the others held fixed.
fn solve_free(
    h: &DMatrix<f64>,
    c: &DVector<f64>,
    b: &DVector<f64>,
    free: &[usize],
) -> Result<DVector<f64>> {
    let n = c.len();
    let k = free.len();
    let mut is_free = vec![false; n];
    free.iter().for_each(|&i| is_free[i] = true);
    let sub = DMatrix::from_fn(k, k, |r, s| h[(free[r], free[s])]);
    let rhs = DVector::from_fn(k, |r, _| {
        let i = free[r];
        let fixed: f64 = (0..n)
            .filter(|&j| !is_free[j] && b[j] != 0.0)
            .map(|j| h[(i, j)] * b[j])
            .sum();
        -(c[i] + fixed)
    });
    let chol: Cholesky<f64, Dyn> =
        Cholesky::new(sub).ok_or(SmurfError::NotPositiveSemidefinite(0.0))?;
    Ok(chol.solve(&rhs))
}

fn projected_gradient(
    h: &DMatrix<f64>,
    c: &DVector<f64>,
    mut b: DVector<f64>,
    options: &QpOptions,
) -> Result<QpSolution> {
    clamp_unit(&mut b);
    let lipschitz = largest_eigenvalue(h);
    let mut trace = Vec::new();
    if options.record_trace {
        trace.push(objective(h, c, &b));
    }
    if lipschitz <= 0.0 {
        return Ok(QpSolution {
            phi: objective(h, c, &b),
            residual: projected_gradient_residual(h, c, &b),
            b,
            iterations: 0,
            converged: true,
            trace,
        });
    }
    let step = 1.0 / lipschitz;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let g = h * &b + c;
        let mut update = 0.0f64;
        for (bi, gi) in b.iter_mut().zip(g.iter()) {
            let next = (*bi - step * gi).clamp(0.0, 1.0);
            update = update.max((next - *bi).abs());
            *bi = next;
        }
        if options.record_trace {
            trace.push(objective(h, c, &b));
        }
        if update < options.update_tolerance {
            converged = true;
            break;
        }
    }
    Ok(QpSolution {
        phi: objective(h, c, &b),
        residual: projected_gradient_residual(h, c, &b),
        b,
        iterations,
        converged,
        trace,
    })
}
