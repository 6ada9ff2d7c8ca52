//! Sparse linear solvers and condition estimates.

use cutnitsche_core::sparse::CsrMatrix;
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const GMRES_RESTART: usize = 50;
pub const GMRES_MAX_ITERATIONS: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolverMethod {
    #[default]
    Direct,
    Iterative,
}

impl SolverMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverMethod::Direct => "direct",
            SolverMethod::Iterative => "iterative",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// `||b - A x|| / ||b||` (absolute when `b = 0`)
    pub residual: f64,
    /// method that produced the solution (after any fallback)
    pub method: SolverMethod,
    /// Krylov iterations; zero for the direct path
    pub iterations: usize,
    /// the iterative path stagnated and the direct solver took over
    pub fell_back: bool,
    /// factorisation produced finite values and met the residual contract
    pub pivots_ok: bool,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let nb = norm(b);
    if nb > 0.0 {
        norm(&r) / nb
    } else {
        norm(&r)
    }
}

/// Sparse LU with partial pivoting.
pub struct DirectSolver {
    n: usize,
    lu: Lu<usize, f64>,
}

impl DirectSolver {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Config("matrix must be square".into()));
        }
        let n = a.nrows();
        if n == 0 {
            return Err(Error::Singular);
        }
        let triplets: Vec<Triplet<usize, usize, f64>> =
            a.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::SolverFailure(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|_| Error::Singular)?;
        Ok(Self { n, lu })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_transpose_in_place(rhs.as_mut());
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }
}

fn check_system(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<()> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::Config("system dimensions do not match".into()));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Config("tolerance must lie in (0, 1)".into()));
    }
    Ok(())
}

pub fn solve_direct(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<SolveReport> {
    check_system(a, b, tol)?;
    let lu = DirectSolver::factor(a)?;
    let mut x = lu.solve(b);
    let mut residual = relative_residual(a, &x, b);
    if !residual.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    // one step of iterative refinement when the first pass misses
    if residual > tol {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let d = lu.solve(&r);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += di;
        }
        residual = relative_residual(a, &x, b);
    }
    if !residual.is_finite() {
        return Err(Error::Singular);
    }
    if residual > tol {
        return Err(Error::SolverFailure(format!(
            "direct solve residual {residual:.3e} above tolerance {tol:.1e}"
        )));
    }
    Ok(SolveReport {
        solution: x,
        residual,
        method: SolverMethod::Direct,
        iterations: 0,
        fell_back: false,
        pivots_ok: true,
    })
}

/// Incomplete LU with the sparsity pattern of `A`, stored in one CSR array.
pub struct Ilu0 {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let row_ptr = a.row_ptr().to_vec();
        let col_idx = a.col_idx().to_vec();
        let mut values = a.values().to_vec();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                if col_idx[p] == i {
                    diag[i] = p;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::SolverFailure(format!("ILU(0): no diagonal in row {i}")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[p]] = p;
            }
            for p in row_ptr[i]..diag[i] {
                let k = col_idx[p];
                let pivot = values[diag[k]];
                if pivot == 0.0 || !pivot.is_finite() {
                    return Err(Error::SolverFailure(format!("ILU(0): zero pivot in row {k}")));
                }
                let f = values[p] / pivot;
                values[p] = f;
                for q in diag[k] + 1..row_ptr[k + 1] {
                    let j = col_idx[q];
                    if pos[j] != usize::MAX {
                        values[pos[j]] -= f * values[q];
                    }
                }
            }
            for p in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[p]] = usize::MAX;
            }
            if values[diag[i]] == 0.0 {
                return Err(Error::SolverFailure(format!("ILU(0): zero pivot in row {i}")));
            }
        }
        Ok(Self {
            row_ptr,
            col_idx,
            values,
            diag,
        })
    }

    /// `x = (LU)^{-1} b`
    pub fn apply(&self, b: &[f64], x: &mut [f64]) {
        let n = b.len();
        for i in 0..n {
            let mut s = b[i];
            for p in self.row_ptr[i]..self.diag[i] {
                s -= self.values[p] * x[self.col_idx[p]];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for p in self.diag[i] + 1..self.row_ptr[i + 1] {
                s -= self.values[p] * x[self.col_idx[p]];
            }
            x[i] = s / self.values[self.diag[i]];
        }
    }
}

pub struct GmresOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Right-preconditioned restarted GMRES; the residual it monitors is the
/// true relative residual of the unpreconditioned system.
pub fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    precond: &Ilu0,
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> GmresOutcome {
    let n = b.len();
    let nb = norm(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return GmresOutcome {
            solution: x,
            iterations: 0,
            converged: true,
        };
    }
    let m = restart.max(1);
    let mut iterations = 0;
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    while iterations < max_iterations {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        if beta / nb <= tol {
            return GmresOutcome {
                solution: x,
                iterations,
                converged: true,
            };
        }
        // stagnation across restarts
        if beta >= 0.999 * best {
            stalled += 1;
            if stalled >= 3 {
                break;
            }
        } else {
            stalled = 0;
            best = beta;
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            if iterations >= max_iterations {
                break;
            }
            iterations += 1;
            precond.apply(&v[j], &mut z);
            a.mul_vec_into(&z, &mut w);
            for i in 0..=j {
                h[i][j] = dot(&w, &v[i]);
                for (wk, vk) in w.iter_mut().zip(&v[i]) {
                    *wk -= h[i][j] * vk;
                }
            }
            h[j + 1][j] = norm(&w);
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let rho = h[j][j].hypot(h[j + 1][j]);
            if rho == 0.0 {
                used = j;
                break;
            }
            cs[j] = h[j][j] / rho;
            sn[j] = h[j + 1][j] / rho;
            let hj1 = h[j + 1][j];
            h[j][j] = rho;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            if hj1 == 0.0 || g[j + 1].abs() / nb <= 0.1 * tol {
                break;
            }
            v.push(w.iter().map(|wk| wk / hj1).collect());
        }
        // back substitution for the Krylov coefficients
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = (i + 1..used).map(|k| h[i][k] * y[k]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut u = vec![0.0; n];
        for (i, yi) in y.iter().enumerate() {
            for (uk, vk) in u.iter_mut().zip(&v[i]) {
                *uk += yi * vk;
            }
        }
        precond.apply(&u, &mut z);
        for (xk, zk) in x.iter_mut().zip(&z) {
            *xk += zk;
        }
        if used == 0 {
            break;
        }
    }
    let converged = relative_residual(a, &x, b) <= tol;
    GmresOutcome {
        solution: x,
        iterations,
        converged,
    }
}

/// GMRES(50) with ILU(0); falls back to the direct solver on stagnation or
/// a failed factorisation.
pub fn solve_iterative(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<SolveReport> {
    check_system(a, b, tol)?;
    let outcome = Ilu0::new(a).map(|p| gmres(a, b, &p, tol, GMRES_RESTART, GMRES_MAX_ITERATIONS));
    match outcome {
        Ok(o) if o.converged => {
            let residual = relative_residual(a, &o.solution, b);
            Ok(SolveReport {
                solution: o.solution,
                residual,
                method: SolverMethod::Iterative,
                iterations: o.iterations,
                fell_back: false,
                pivots_ok: true,
            })
        }
        other => {
            let iterations = other.as_ref().map_or(0, |o| o.iterations);
            log::warn!("GMRES did not converge after {iterations} iterations, using the direct solver");
            let mut report = solve_direct(a, b, tol).map_err(|e| match e {
                Error::Singular => Error::Singular,
                e => Error::SolverFailure(format!("iterative solve failed and fallback failed: {e}")),
            })?;
            report.iterations = iterations;
            report.fell_back = true;
            Ok(report)
        }
    }
}

pub fn solve(a: &CsrMatrix, b: &[f64], tol: f64, method: SolverMethod) -> Result<SolveReport> {
    match method {
        SolverMethod::Direct => solve_direct(a, b, tol),
        SolverMethod::Iterative => solve_iterative(a, b, tol),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionEstimate {
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// `sigma_max / sigma_min`; infinite when the matrix is singular
    pub cond: f64,
}

impl ConditionEstimate {
    pub fn singular() -> Self {
        Self {
            sigma_max: f64::NAN,
            sigma_min: 0.0,
            cond: f64::INFINITY,
        }
    }

    pub fn is_singular(&self) -> bool {
        !self.cond.is_finite()
    }
}

const LANCZOS_MAX_STEPS: usize = 150;
const LANCZOS_CHECK_EVERY: usize = 5;
const LANCZOS_TOL: f64 = 1e-10;

fn start_vector(n: usize) -> Vec<f64> {
    // deterministic, not orthogonal to any coordinate direction
    let v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    let s = norm(&v);
    v.into_iter().map(|x| x / s).collect()
}

fn largest_ritz_value(alpha: &[f64], beta: &[f64]) -> f64 {
    let m = alpha.len();
    let t = Mat::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    t.self_adjoint_eigenvalues(faer::Side::Lower)
        .ok()
        .and_then(|ev| ev.last().copied())
        .unwrap_or(f64::NAN)
}

/// Largest eigenvalue of the symmetric positive semidefinite operator `op`,
/// by Lanczos with full reorthogonalisation.
fn largest_eigenvalue(n: usize, mut op: impl FnMut(&[f64]) -> Vec<f64>) -> f64 {
    let mut basis = vec![start_vector(n)];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut estimate = 0.0;
    for step in 0..LANCZOS_MAX_STEPS.min(n) {
        let mut w = op(&basis[step]);
        if !w.iter().all(|x| x.is_finite()) {
            return f64::INFINITY;
        }
        alpha.push(dot(&w, &basis[step]));
        // two Gram-Schmidt passes keep the basis orthogonal to rounding
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm(&w);
        let done = step + 1 == LANCZOS_MAX_STEPS.min(n) || b <= f64::EPSILON * alpha[step].abs().max(b);
        if done || (step + 1) % LANCZOS_CHECK_EVERY == 0 {
            let next = largest_ritz_value(&alpha, &beta);
            if done || (next - estimate).abs() <= LANCZOS_TOL * next.abs() {
                return next;
            }
            estimate = next;
        }
        beta.push(b);
        basis.push(w.into_iter().map(|x| x / b).collect());
    }
    estimate
}

/// Two-norm condition number: `sigma_max` from Lanczos on `A^T A`,
/// `sigma_min` from Lanczos on `(A^T A)^{-1}` through the LU factors.
pub fn estimate_condition(a: &CsrMatrix) -> Result<ConditionEstimate> {
    let n = a.nrows();
    if n != a.ncols() || n == 0 {
        return Err(Error::Config("condition estimate needs a nonempty square matrix".into()));
    }
    let lu = match DirectSolver::factor(a) {
        Ok(lu) => lu,
        Err(Error::Singular) => return Ok(ConditionEstimate::singular()),
        Err(e) => return Err(e),
    };
    let lmax = largest_eigenvalue(n, |v| a.mul_transpose_vec(&a.mul_vec(v)));
    let inv = largest_eigenvalue(n, |v| lu.solve(&lu.solve_transpose(v)));
    if !inv.is_finite() || inv <= 0.0 {
        return Ok(ConditionEstimate::singular());
    }
    let sigma_max = lmax.sqrt();
    let sigma_min = 1.0 / inv.sqrt();
    let cond = sigma_max / sigma_min;
    // rows the factorisation cannot resolve
    if !cond.is_finite() || cond > 1.0 / f64::EPSILON {
        return Ok(ConditionEstimate {
            sigma_max,
            sigma_min,
            cond: f64::INFINITY,
        });
    }
    Ok(ConditionEstimate {
        sigma_max,
        sigma_min,
        cond,
    })
}
