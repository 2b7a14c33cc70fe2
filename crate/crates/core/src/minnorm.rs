//! Exact minimum-norm solutions of the linearized substep
//! `min { ||z|| : A z = b }` for l1, l2 and linf domain norms.
//!
//! The l2 case goes through QR of `A^T`; the l1 and linf cases are
//! reformulated as standard-form linear programs and solved by a small
//! self-contained two-phase primal simplex with Bland's rule. A
//! basis-enumeration oracle for small instances lives here too, used by
//! tests and the `oracle-check` CLI verb.

use crate::linalg::{
    self, qr_factor, smallest_singular_value, solve_upper_transposed, vector_norm, Matrix,
    NormKind, RANK_TOL,
};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MinNormError {
    #[error("coefficient matrix is rank-deficient")]
    RankDeficient,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite input data")]
    NonFinite,
    #[error("LP is infeasible")]
    LpInfeasible,
    #[error("LP is unbounded")]
    LpUnbounded,
    #[error("simplex iteration cap reached")]
    CycleLimit,
    #[error("instance too large for the enumeration oracle (n <= {max_n}, m <= {max_m})")]
    SizeLimit { max_n: usize, max_m: usize },
}

/// A consistent underdetermined linear system `A z = b` with full row rank.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    a: Matrix,
    b: Vec<f64>,
}

impl LinearSystem {
    pub fn new(a: Matrix, b: Vec<f64>) -> Result<LinearSystem, MinNormError> {
        if a.rows() > a.cols() {
            return Err(MinNormError::DimensionMismatch(format!(
                "need m <= n, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.len() != a.rows() {
            return Err(MinNormError::DimensionMismatch(format!(
                "rhs length {} does not match {} rows",
                b.len(),
                a.rows()
            )));
        }
        if !a.is_finite() || !linalg::all_finite(&b) {
            return Err(MinNormError::NonFinite);
        }
        if smallest_singular_value(&a) == 0.0 {
            return Err(MinNormError::RankDeficient);
        }
        Ok(LinearSystem { a, b })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }
}

/// Standard-form LP: minimize `cost . x` subject to `a x = b`, `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub a: Matrix,
    pub b: Vec<f64>,
}

const PIVOT_TOL: f64 = 1e-9;

/// Two-phase primal simplex with Bland's rule. Returns the optimal value
/// and a vertex minimizer.
pub fn simplex_solve(lp: &LinearProgram) -> Result<(f64, Vec<f64>), MinNormError> {
    let m = lp.a.rows();
    let n = lp.a.cols();
    if lp.cost.len() != n || lp.b.len() != m {
        return Err(MinNormError::DimensionMismatch(
            "LP cost/rhs sizes inconsistent with constraint matrix".into(),
        ));
    }
    let cap = 50 * (m + n);

    // Tableau rows: [B^-1 A | B^-1 b], columns 0..n original, n..n+m artificial.
    let width = n + m + 1;
    let mut t: Vec<Vec<f64>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![0.0; width];
        let sign = if lp.b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = sign * lp.a[(i, j)];
        }
        row[n + i] = 1.0;
        row[width - 1] = sign * lp.b[i];
        t.push(row);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimize the sum of artificials.
    let phase1_cost: Vec<f64> = (0..n + m).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    run_simplex(&mut t, &mut basis, &phase1_cost, n + m, cap)?;
    let phase1_obj: f64 = basis
        .iter()
        .zip(t.iter())
        .map(|(&bj, row)| phase1_cost[bj] * row[width - 1])
        .sum();
    if phase1_obj > 1e-7 {
        return Err(MinNormError::LpInfeasible);
    }

    // Drive remaining artificials out of the basis; a row with no
    // original-column pivot is redundant and gets dropped.
    let mut keep = vec![true; t.len()];
    for i in 0..t.len() {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].abs() > PIVOT_TOL) {
                pivot(&mut t, &mut basis, i, j);
            } else {
                keep[i] = false;
            }
        }
    }
    let mut t2 = Vec::new();
    let mut basis2 = Vec::new();
    for (i, row) in t.into_iter().enumerate() {
        if keep[i] {
            // Strip artificial columns for phase 2.
            let mut r: Vec<f64> = row[..n].to_vec();
            r.push(row[width - 1]);
            t2.push(r);
            basis2.push(basis[i]);
        }
    }

    run_simplex(&mut t2, &mut basis2, &lp.cost, n, cap)?;

    let mut x = vec![0.0; n];
    for (i, &bj) in basis2.iter().enumerate() {
        x[bj] = t2[i][n];
    }
    let value = lp.cost.iter().zip(&x).map(|(c, xi)| c * xi).sum();
    Ok((value, x))
}

/// Runs Bland-rule pivots to optimality on an existing feasible tableau.
/// `ncols` is the number of structural columns (rhs is the final column).
fn run_simplex(
    t: &mut Vec<Vec<f64>>,
    basis: &mut Vec<usize>,
    cost: &[f64],
    ncols: usize,
    cap: usize,
) -> Result<(), MinNormError> {
    let rhs_col = t.first().map_or(0, |r| r.len() - 1);
    for _iter in 0..cap {
        // Reduced costs; Bland's rule picks the lowest-index negative one.
        let mut entering = None;
        for j in 0..ncols {
            if basis.contains(&j) {
                continue;
            }
            let rc = cost[j]
                - basis
                    .iter()
                    .zip(t.iter())
                    .map(|(&bi, row)| cost[bi] * row[j])
                    .sum::<f64>();
            if rc < -PIVOT_TOL {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else {
            return Ok(());
        };
        // Ratio test; ties broken by smallest basis index (Bland).
        let mut leave: Option<(usize, f64)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[j] > PIVOT_TOL {
                let ratio = row[rhs_col] / row[j];
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - PIVOT_TOL
                            || (ratio < lr + PIVOT_TOL && basis[i] < basis[li])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((i, _)) = leave else {
            return Err(MinNormError::LpUnbounded);
        };
        pivot(t, basis, i, j);
    }
    Err(MinNormError::CycleLimit)
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], i: usize, j: usize) {
    let p = t[i][j];
    for v in t[i].iter_mut() {
        *v /= p;
    }
    for r in 0..t.len() {
        if r != i && t[r][j] != 0.0 {
            let f = t[r][j];
            for k in 0..t[r].len() {
                t[r][k] -= f * t[i][k];
            }
        }
    }
    basis[i] = j;
}

/// Minimum l2-norm solution `A^T (A A^T)^{-1} b` via QR of `A^T`.
pub fn min_norm_l2(sys: &LinearSystem) -> Result<Vec<f64>, MinNormError> {
    let (q, r) = qr_factor(&sys.a.transpose()).map_err(|_| MinNormError::RankDeficient)?;
    // z = Q R^{-T} b lies in the row space of A by construction.
    let w = solve_upper_transposed(&r, &sys.b);
    Ok(q.matvec(&w))
}

/// LP reformulation of the l1 problem: `z = p - q`, `p, q >= 0`,
/// minimize the sum of all parts.
pub fn l1_reformulation(sys: &LinearSystem) -> LinearProgram {
    let m = sys.a.rows();
    let n = sys.a.cols();
    let a = Matrix::from_fn(m, 2 * n, |i, j| {
        if j < n {
            sys.a[(i, j)]
        } else {
            -sys.a[(i, j - n)]
        }
    });
    LinearProgram {
        cost: vec![1.0; 2 * n],
        a,
        b: sys.b.clone(),
    }
}

fn l1_extract(sys: &LinearSystem, x: &[f64]) -> Vec<f64> {
    let n = sys.a.cols();
    (0..n).map(|j| x[j] - x[n + j]).collect()
}

/// LP reformulation of the linf problem. Variables `[w, s, t]` with
/// `z = w - t 1`, `w + s = 2 t` componentwise, all nonnegative; minimize
/// the bound `t`.
pub fn linf_reformulation(sys: &LinearSystem) -> LinearProgram {
    let m = sys.a.rows();
    let n = sys.a.cols();
    let rows = m + n;
    let cols = 2 * n + 1;
    let mut a = Matrix::zeros(rows, cols);
    let mut b = vec![0.0; rows];
    for i in 0..m {
        let mut row_sum = 0.0;
        for j in 0..n {
            a[(i, j)] = sys.a[(i, j)];
            row_sum += sys.a[(i, j)];
        }
        a[(i, 2 * n)] = -row_sum;
        b[i] = sys.b[i];
    }
    for j in 0..n {
        a[(m + j, j)] = 1.0;
        a[(m + j, n + j)] = 1.0;
        a[(m + j, 2 * n)] = -2.0;
    }
    let mut cost = vec![0.0; cols];
    cost[2 * n] = 1.0;
    LinearProgram { cost, a, b }
}

fn linf_extract(sys: &LinearSystem, x: &[f64]) -> Vec<f64> {
    let n = sys.a.cols();
    let t = x[2 * n];
    (0..n).map(|j| x[j] - t).collect()
}

pub fn min_norm_l1(sys: &LinearSystem) -> Result<Vec<f64>, MinNormError> {
    let (_, x) = simplex_solve(&l1_reformulation(sys))?;
    Ok(l1_extract(sys, &x))
}

pub fn min_norm_linf(sys: &LinearSystem) -> Result<Vec<f64>, MinNormError> {
    let (_, x) = simplex_solve(&linf_reformulation(sys))?;
    Ok(linf_extract(sys, &x))
}

/// Minimum-norm solution of `A z = b` in the requested domain norm.
pub fn min_norm(sys: &LinearSystem, kind: NormKind) -> Result<Vec<f64>, MinNormError> {
    match kind {
        NormKind::L1 => min_norm_l1(sys),
        NormKind::L2 => min_norm_l2(sys),
        NormKind::LInf => min_norm_linf(sys),
    }
}

const ORACLE_MAX_N: usize = 6;
const ORACLE_MAX_M: usize = 4;

/// Exact optimal norm by enumerating every basis of the LP reformulation
/// (or, for l2, by solving the normal equations with Gaussian elimination,
/// a route independent of the QR path). Test/diagnostic use only.
pub fn oracle_min_norm(sys: &LinearSystem, kind: NormKind) -> Result<f64, MinNormError> {
    let m = sys.a.rows();
    let n = sys.a.cols();
    if n > ORACLE_MAX_N || m > ORACLE_MAX_M {
        return Err(MinNormError::SizeLimit {
            max_n: ORACLE_MAX_N,
            max_m: ORACLE_MAX_M,
        });
    }
    match kind {
        NormKind::L2 => {
            // Normal equations A A^T w = b, z = A^T w.
            let aat = sys.a.matmul(&sys.a.transpose());
            let rows: Vec<Vec<f64>> = (0..m).map(|i| aat.row(i).to_vec()).collect();
            let w = gauss_solve(&rows, &sys.b).ok_or(MinNormError::RankDeficient)?;
            let z = sys.a.transpose().matvec(&w);
            Ok(vector_norm(&z, NormKind::L2))
        }
        NormKind::L1 => Ok(enumerate_lp_optimum(&l1_reformulation(sys))?),
        NormKind::LInf => Ok(enumerate_lp_optimum(&linf_reformulation(sys))?),
    }
}

/// Brute-force LP optimum over all basic feasible solutions.
fn enumerate_lp_optimum(lp: &LinearProgram) -> Result<f64, MinNormError> {
    let m = lp.a.rows();
    let n = lp.a.cols();
    let mut best: Option<f64> = None;
    let mut combo: Vec<usize> = (0..m).collect();
    loop {
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|i| combo.iter().map(|&j| lp.a[(i, j)]).collect())
            .collect();
        if let Some(w) = gauss_solve(&cols, &lp.b) {
            if w.iter().all(|&v| v >= -1e-9) {
                let value: f64 = combo.iter().zip(&w).map(|(&j, &v)| lp.cost[j] * v).sum();
                best = Some(best.map_or(value, |b: f64| b.min(value)));
            }
        }
        // Next combination in lexicographic order.
        let mut i = m;
        loop {
            if i == 0 {
                return best.ok_or(MinNormError::LpInfeasible);
            }
            i -= 1;
            if combo[i] != i + n - m {
                break;
            }
        }
        combo[i] += 1;
        for k in i + 1..m {
            combo[k] = combo[k - 1] + 1;
        }
    }
}

/// Gaussian elimination with partial pivoting on a square system given as
/// rows. Returns `None` when (numerically) singular.
fn gauss_solve(rows: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .zip(b)
        .map(|(r, &bi)| {
            let mut row = r.clone();
            row.push(bi);
            row
        })
        .collect();
    let scale = a
        .iter()
        .flat_map(|r| r[..n].iter())
        .fold(0.0f64, |acc, &x| acc.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    for k in 0..n {
        let (piv, pval) = (k..n)
            .map(|i| (i, a[i][k].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())?;
        if pval < RANK_TOL * scale {
            return None;
        }
        a.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..=n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = a[i][n];
        for j in i + 1..n {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}
