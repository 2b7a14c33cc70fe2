//! Small dense linear algebra: vectors are plain `Vec<f64>` / `&[f64]`,
//! matrices are row-major. Everything here is sized for desk-scale problems
//! (tens of rows/columns), so the factorizations are plain Householder QR
//! and one-sided Jacobi sweeps rather than anything blocked.

use thiserror::Error;

/// Relative threshold below which a matrix is treated as rank-deficient:
/// the matrix is deficient when `sigma_m < RANK_TOL * sigma_1`.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum LinAlgError {
    #[error("matrix is rank-deficient (pivot {pivot} below tolerance)")]
    RankDeficient { pivot: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
}

/// Which vector norm is used (in the domain or the image space).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
    LInf,
}

impl NormKind {
    /// The dual norm: l1 <-> linf, l2 is self-dual.
    pub fn dual(self) -> NormKind {
        match self {
            NormKind::L1 => NormKind::LInf,
            NormKind::L2 => NormKind::L2,
            NormKind::LInf => NormKind::L1,
        }
    }

    pub fn parse(s: &str) -> Option<NormKind> {
        match s {
            "l1" => Some(NormKind::L1),
            "l2" => Some(NormKind::L2),
            "linf" => Some(NormKind::LInf),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::L1 => "l1",
            NormKind::L2 => "l2",
            NormKind::LInf => "linf",
        }
    }
}

pub fn vector_norm(v: &[f64], kind: NormKind) -> f64 {
    match kind {
        NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
        NormKind::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        NormKind::LInf => v.iter().fold(0.0, |acc, x| acc.max(x.abs())),
    }
}

/// Norm of `v` measured in the dual of `kind`.
pub fn dual_norm(v: &[f64], kind: NormKind) -> f64 {
    vector_norm(v, kind.dual())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(alpha: f64, v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| alpha * x).collect()
}

pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Dense row-major matrix with immutable dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix, LinAlgError> {
        let r = rows.len();
        assert!(r >= 1, "matrix must have at least one row");
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinAlgError::DimensionMismatch(format!(
                    "ragged rows: expected {c} columns, got {}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(LinAlgError::NonFinite(i));
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Matrix {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        Matrix::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| self[(i, k)] * other[(k, j)]).sum()
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Thin Householder QR of a tall (rows >= cols) full-column-rank matrix.
///
/// Returns `(Q, R)` with `Q` of shape rows x cols having orthonormal
/// columns and `R` upper triangular cols x cols with nonnegative diagonal,
/// so that `A = Q R`.
pub fn qr_factor(a: &Matrix) -> Result<(Matrix, Matrix), LinAlgError> {
    let m = a.rows();
    let n = a.cols();
    if m < n {
        return Err(LinAlgError::DimensionMismatch(format!(
            "qr_factor needs rows >= cols, got {m}x{n}"
        )));
    }
    let mut r = a.clone();
    // Householder vectors, one per column.
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = vec![0.0; m - k];
        for i in k..m {
            v[i - k] = r[(i, k)];
        }
        let norm = vector_norm(&v, NormKind::L2);
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * norm;
        let vnorm = vector_norm(&v, NormKind::L2);
        if vnorm > 0.0 {
            for vi in v.iter_mut() {
                *vi /= vnorm;
            }
            // Apply reflector to trailing columns.
            for j in k..n {
                let mut s = 0.0;
                for i in k..m {
                    s += v[i - k] * r[(i, j)];
                }
                for i in k..m {
                    r[(i, j)] -= 2.0 * s * v[i - k];
                }
            }
        }
        vs.push(v);
    }
    // Accumulate thin Q by applying reflectors in reverse to the first n
    // columns of the identity.
    let mut q = Matrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 });
    for k in (0..n).rev() {
        let v = &vs[k];
        for j in 0..n {
            let mut s = 0.0;
            for i in k..m {
                s += v[i - k] * q[(i, j)];
            }
            for i in k..m {
                q[(i, j)] -= 2.0 * s * v[i - k];
            }
        }
    }
    // Normalize to nonnegative diagonal of R.
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            for j in k..n {
                r[(k, j)] = -r[(k, j)];
            }
            for i in 0..m {
                q[(i, k)] = -q[(i, k)];
            }
        }
        // Zero the subdiagonal noise left by the reflections.
        for i in k + 1..n {
            r[(i, k)] = 0.0;
        }
    }
    let rr = Matrix::from_fn(n, n, |i, j| if j >= i { r[(i, j)] } else { 0.0 });
    let max_diag = (0..n).map(|i| rr[(i, i)].abs()).fold(0.0, f64::max);
    for i in 0..n {
        if rr[(i, i)].abs() < RANK_TOL * max_diag || max_diag == 0.0 {
            return Err(LinAlgError::RankDeficient { pivot: i });
        }
    }
    Ok((q, rr))
}

/// Solves `R x = b` for upper triangular `R`.
pub fn solve_upper_triangular(r: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = r.cols();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        for j in i + 1..n {
            x[i] -= r[(i, j)] * x[j];
        }
        x[i] /= r[(i, i)];
    }
    x
}

/// Solves `R^T x = b` (forward substitution on the transpose).
pub fn solve_upper_transposed(r: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = r.cols();
    let mut x = b.to_vec();
    for i in 0..n {
        for j in 0..i {
            x[i] -= r[(j, i)] * x[j];
        }
        x[i] /= r[(i, i)];
    }
    x
}

/// All singular values of `a`, descending, via one-sided Jacobi sweeps on
/// the columns of the thinner orientation. Accurate for the small dense
/// matrices this crate works with.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    // Work on columns of the taller orientation so each rotation touches
    // long vectors and there are few columns.
    let work = if a.rows() <= a.cols() { a.transpose() } else { a.clone() };
    let m = work.rows();
    let n = work.cols();
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| work[(i, j)]).collect())
        .collect();
    let eps = 1e-15;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                let app = dot(&cols[p], &cols[p]);
                let aqq = dot(&cols[q], &cols[q]);
                let apq = dot(&cols[p], &cols[q]);
                if apq.abs() <= eps * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                off = off.max(apq.abs() / (app * aqq).sqrt().max(f64::MIN_POSITIVE));
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let vp = cols[p][i];
                    let vq = cols[q][i];
                    cols[p][i] = c * vp - s * vq;
                    cols[q][i] = s * vp + c * vq;
                }
            }
        }
        if off < 1e-14 {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| vector_norm(c, NormKind::L2)).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

/// Smallest singular value `sigma_m(A)` for `m <= n`.
///
/// Returns 0 for rank-deficient input (no error).
pub fn smallest_singular_value(a: &Matrix) -> f64 {
    let sv = singular_values(a);
    let min = *sv.last().unwrap();
    let max = sv[0];
    if min < RANK_TOL * max {
        0.0
    } else {
        min
    }
}

pub fn largest_singular_value(a: &Matrix) -> f64 {
    singular_values(a)[0]
}

/// Certified lower bound on `min_{||h||_* = 1} ||A^T h||_*`, where the
/// first dual is taken in the image norm and the second in the domain
/// norm.
///
/// Exact (equal to `sigma_m`) when both norms are Euclidean. Otherwise a
/// conservative bound: `sigma_m` scaled by `1/sqrt(n)` for a non-Euclidean
/// domain norm and `1/sqrt(m)` for a non-Euclidean image norm.
pub fn mu_lower_bound(a: &Matrix, domain: NormKind, image: NormKind) -> f64 {
    let sigma = smallest_singular_value(a);
    let fd = if domain == NormKind::L2 {
        1.0
    } else {
        1.0 / (a.cols() as f64).sqrt()
    };
    let fi = if image == NormKind::L2 {
        1.0
    } else {
        1.0 / (a.rows() as f64).sqrt()
    };
    sigma * fd * fi
}

/// Eigenvalues of a symmetric matrix via the classical Jacobi rotation
/// method. Input symmetry is the caller's responsibility.
pub fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    let mut m = a.clone();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + m.frobenius_norm()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_on_3_4() {
        let v = [3.0, -4.0];
        assert_eq!(vector_norm(&v, NormKind::L2), 5.0);
        assert_eq!(vector_norm(&v, NormKind::L1), 7.0);
        assert_eq!(vector_norm(&v, NormKind::LInf), 4.0);
    }

    #[test]
    fn dual_norms_on_3_4() {
        let v = [3.0, -4.0];
        assert_eq!(dual_norm(&v, NormKind::L1), 4.0);
        assert_eq!(dual_norm(&v, NormKind::LInf), 7.0);
        assert_eq!(dual_norm(&v, NormKind::L2), 5.0);
    }

    #[test]
    fn dual_is_involutive() {
        for k in [NormKind::L1, NormKind::L2, NormKind::LInf] {
            assert_eq!(k.dual().dual(), k);
        }
    }

    #[test]
    fn qr_identity() {
        let a = Matrix::identity(3);
        let (q, r) = qr_factor(&a).unwrap();
        assert_eq!(q, Matrix::identity(3));
        assert_eq!(r, Matrix::identity(3));
    }

    #[test]
    fn qr_column_norm() {
        let a = Matrix::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let (_, r) = qr_factor(&a).unwrap();
        assert!((r[(0, 0)] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn qr_rank_deficient_detected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        assert!(matches!(qr_factor(&a), Err(LinAlgError::RankDeficient { .. })));
    }

    #[test]
    fn svd_trivial_cases() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!((smallest_singular_value(&a) - 1.0).abs() < 1e-12);
        let b = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!((smallest_singular_value(&b) - 5f64.sqrt()).abs() < 1e-12);
        let c = Matrix::from_rows(&[
            vec![3.0, 0.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0, 0.0],
        ])
        .unwrap();
        assert!((smallest_singular_value(&c) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mu_bound_euclidean_exact() {
        let a = Matrix::identity(2);
        assert_eq!(mu_lower_bound(&a, NormKind::L2, NormKind::L2), smallest_singular_value(&a));
        let b = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!((mu_lower_bound(&b, NormKind::L2, NormKind::L2) - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mu_bound_l1_below_grid_minimum() {
        // For the 2x2 identity with l1/l1 norms the exact minimum of
        // ||A^T h||_inf over ||h||_inf = 1 is 1; the conservative bound
        // must stay below it. Dense grid over the dual sphere.
        let a = Matrix::identity(2);
        let bound = mu_lower_bound(&a, NormKind::L1, NormKind::L1);
        assert!((bound - 0.5).abs() < 1e-12); // sigma_m / (sqrt(2) * sqrt(2))
        let mut grid_min = f64::INFINITY;
        let steps = 400;
        for i in 0..=steps {
            let t = -1.0 + 2.0 * i as f64 / steps as f64;
            for h in [[1.0, t], [t, 1.0], [-1.0, t], [t, -1.0]] {
                let ath = a.transpose().matvec(&h);
                grid_min = grid_min.min(vector_norm(&ath, NormKind::LInf));
            }
        }
        assert!(bound <= grid_min + 1e-12);
    }

    #[test]
    fn symmetric_eigenvalues_diag() {
        let a = Matrix::from_rows(&[vec![9.0, 0.0], vec![0.0, 16.0]]).unwrap();
        let ev = symmetric_eigenvalues(&a);
        assert!((ev[0] - 16.0).abs() < 1e-12);
        assert!((ev[1] - 9.0).abs() < 1e-12);
    }
}
