//! Ready-made problem families: quadratic maps, structured maps built
//! from a scalar nonlinearity applied row-wise, scalar equations and
//! inequalities, and the slack/squared-variable transforms that turn
//! inequality systems into underdetermined equations.

use crate::linalg::{self, dual_norm, smallest_singular_value, symmetric_eigenvalues, vector_norm, Matrix, NormKind};
use crate::solvers::{IterationRecord, ProblemDefinition, SolveOutcome, SolveStatus, SolverConfig, Stage};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("gradient is zero while the function value is not")]
    ZeroGradient,
}

/// Quadratic map `g_i(x) = (A_i x, x)/2 + (b_i, x)` with target `y`,
/// presented to the solvers as `P = g - y`.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    pub a: Vec<Matrix>,
    pub b: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    /// Largest asymmetry found in the ingested `A_i` before
    /// symmetrization; callers may warn when it exceeds 1e-12.
    pub max_asymmetry: f64,
}

impl QuadraticProblem {
    pub fn new(a: Vec<Matrix>, b: Vec<Vec<f64>>, y: Vec<f64>) -> Result<QuadraticProblem, ProblemError> {
        let m = y.len();
        if a.len() != m || b.len() != m {
            return Err(ProblemError::DimensionMismatch(format!(
                "expected {m} matrices and vectors, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        let n = b[0].len();
        let mut max_asym = 0.0f64;
        let mut sym = Vec::with_capacity(m);
        for ai in &a {
            if ai.rows() != n || ai.cols() != n {
                return Err(ProblemError::DimensionMismatch(format!(
                    "A_i must be {n}x{n}, got {}x{}",
                    ai.rows(),
                    ai.cols()
                )));
            }
            for i in 0..n {
                for j in 0..n {
                    max_asym = max_asym.max((ai[(i, j)] - ai[(j, i)]).abs());
                }
            }
            sym.push(Matrix::from_fn(n, n, |i, j| 0.5 * (ai[(i, j)] + ai[(j, i)])));
        }
        for bi in &b {
            if bi.len() != n {
                return Err(ProblemError::DimensionMismatch("b_i length mismatch".into()));
            }
        }
        Ok(QuadraticProblem { a: sym, b, y, max_asymmetry: max_asym })
    }

    pub fn n(&self) -> usize {
        self.b[0].len()
    }

    pub fn m(&self) -> usize {
        self.y.len()
    }

    /// Matrix of rows `b_i`, the Jacobian at the origin.
    pub fn h_matrix(&self) -> Matrix {
        Matrix::from_fn(self.m(), self.n(), |i, j| self.b[i][j])
    }

    pub fn to_problem(&self) -> ProblemDefinition {
        let q = self.clone();
        let qj = self.clone();
        ProblemDefinition::new(self.n(), self.m(), move |x| quadratic_eval(&q, x))
            .with_jacobian(move |x| quadratic_jacobian(&qj, x))
    }
}

/// `P_i(x) = g_i(x) - y_i`.
pub fn quadratic_eval(q: &QuadraticProblem, x: &[f64]) -> Vec<f64> {
    (0..q.m())
        .map(|i| {
            let ax = q.a[i].matvec(x);
            0.5 * linalg::dot(&ax, x) + linalg::dot(&q.b[i], x) - q.y[i]
        })
        .collect()
}

/// Row `i` is `x^T A_i + b_i^T`.
pub fn quadratic_jacobian(q: &QuadraticProblem, x: &[f64]) -> Matrix {
    let mut jac = Matrix::zeros(q.m(), q.n());
    for i in 0..q.m() {
        let ax = q.a[i].matvec(x);
        for j in 0..q.n() {
            jac[(i, j)] = ax[j] + q.b[i][j];
        }
    }
    jac
}

/// Lipschitz bound `sqrt(lambda_max(sum A_i^T A_i))` for the Jacobian of a
/// quadratic map (Euclidean norms).
pub fn quadratic_l1(q: &QuadraticProblem) -> f64 {
    let n = q.n();
    let mut s = Matrix::zeros(n, n);
    for ai in &q.a {
        let ata = ai.transpose().matmul(ai);
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] += ata[(i, j)];
            }
        }
    }
    symmetric_eigenvalues(&s)[0].max(0.0).sqrt()
}

/// Covering constant at the origin: smallest singular value of the matrix
/// of rows `b_i`. Zero flags a rank-deficient linearization.
pub fn quadratic_mu0(q: &QuadraticProblem) -> f64 {
    smallest_singular_value(&q.h_matrix())
}

type PhiFn = dyn Fn(f64) -> (f64, f64) + Send + Sync;

/// Row-wise structured map `P_i(x) = phi(c_i . x - b_i) - y_i` whose
/// Jacobian is `diag(phi'(.)) C`. The Stage-1 decrement then depends only
/// on the scalar constants `mu_phi` and `m_bound`, not on `C`.
#[derive(Clone)]
pub struct StructuredProblem {
    pub c: Matrix,
    pub offsets: Vec<f64>,
    pub y: Vec<f64>,
    phi: Arc<PhiFn>,
    /// Lower bound on `|phi'|` over the whole line.
    pub mu_phi: f64,
    /// Upper bound on `|phi''|` over the whole line.
    pub m_bound: f64,
}

impl StructuredProblem {
    pub fn new(
        c: Matrix,
        offsets: Vec<f64>,
        y: Vec<f64>,
        phi: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static,
        mu_phi: f64,
        m_bound: f64,
    ) -> Result<StructuredProblem, ProblemError> {
        if offsets.len() != c.rows() || y.len() != c.rows() {
            return Err(ProblemError::DimensionMismatch(
                "offsets/target length must match the row count of C".into(),
            ));
        }
        assert!(mu_phi > 0.0 && m_bound.is_finite());
        Ok(StructuredProblem {
            c,
            offsets,
            y,
            phi: Arc::new(phi),
            mu_phi,
            m_bound,
        })
    }

    /// The saturating sigmoid-like map used by the benchmark, with its
    /// certified constants `mu_phi = 0.5`, `M = 2`.
    pub fn sigmoid(c: Matrix, offsets: Vec<f64>, y: Vec<f64>) -> Result<StructuredProblem, ProblemError> {
        StructuredProblem::new(c, offsets, y, sigmoid_phi, 0.5, 2.0)
    }

    /// Stage threshold `mu_phi^2 / M` certified by the structure alone.
    pub fn effective_beta(&self) -> f64 {
        self.mu_phi * self.mu_phi / self.m_bound
    }

    pub fn to_problem(&self) -> ProblemDefinition {
        let s = self.clone();
        let sj = self.clone();
        ProblemDefinition::new(self.c.cols(), self.c.rows(), move |x| structured_eval(&s, x))
            .with_jacobian(move |x| structured_jacobian(&sj, x))
    }
}

impl std::fmt::Debug for StructuredProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StructuredProblem")
            .field("m", &self.c.rows())
            .field("n", &self.c.cols())
            .field("mu_phi", &self.mu_phi)
            .field("m_bound", &self.m_bound)
            .finish()
    }
}

pub fn structured_eval(s: &StructuredProblem, x: &[f64]) -> Vec<f64> {
    let cx = s.c.matvec(x);
    (0..s.c.rows())
        .map(|i| (s.phi)(cx[i] - s.offsets[i]).0 - s.y[i])
        .collect()
}

pub fn structured_jacobian(s: &StructuredProblem, x: &[f64]) -> Matrix {
    let cx = s.c.matvec(x);
    let mut jac = Matrix::zeros(s.c.rows(), s.c.cols());
    for i in 0..s.c.rows() {
        let d = (s.phi)(cx[i] - s.offsets[i]).1;
        for j in 0..s.c.cols() {
            jac[(i, j)] = d * s.c[(i, j)];
        }
    }
    jac
}

/// `phi(t) = t / (1 + e^-|t|)` and its derivative
/// `(1 + (1 + |t|) e^-|t|) / (1 + e^-|t|)^2`. The certified constants are
/// `phi' >= 0.5` and `|phi''| <= 2` on the whole line.
pub fn sigmoid_phi(t: f64) -> (f64, f64) {
    let e = (-t.abs()).exp();
    let denom = 1.0 + e;
    let value = t / denom;
    let deriv = (1.0 + (1.0 + t.abs()) * e) / (denom * denom);
    (value, deriv)
}

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A single equation `f(x) = 0` in n unknowns, with gradient and a
/// Lipschitz constant for the gradient.
#[derive(Clone)]
pub struct ScalarProblem {
    pub n: usize,
    f: Arc<ScalarFn>,
    grad: Arc<GradFn>,
    pub lipschitz: f64,
}

impl ScalarProblem {
    pub fn new(
        n: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        lipschitz: f64,
    ) -> ScalarProblem {
        ScalarProblem {
            n,
            f: Arc::new(f),
            grad: Arc::new(grad),
            lipschitz,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }

    pub fn to_problem(&self) -> ProblemDefinition {
        let s = self.clone();
        let sj = self.clone();
        ProblemDefinition::new(self.n, 1, move |x| vec![s.value(x)]).with_jacobian(move |x| {
            let g = sj.gradient(x);
            Matrix::from_fn(1, sj.n, |_, j| g[j])
        })
    }
}

impl std::fmt::Debug for ScalarProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarProblem")
            .field("n", &self.n)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

/// Closed-form minimum-norm substep for a scalar equation. All three
/// variants satisfy the linearization identity `grad f . z = f` and have
/// `||z|| = |f| / ||grad f||_*` in their own norm.
pub fn scalar_step(sp: &ScalarProblem, x: &[f64], kind: NormKind) -> Result<Vec<f64>, ProblemError> {
    let f = sp.value(x);
    let g = sp.gradient(x);
    scalar_step_from_parts(f, &g, kind)
}

pub fn scalar_step_from_parts(f: f64, g: &[f64], kind: NormKind) -> Result<Vec<f64>, ProblemError> {
    let gnorm = vector_norm(g, NormKind::L2);
    if gnorm == 0.0 {
        if f == 0.0 {
            return Ok(vec![0.0; g.len()]);
        }
        return Err(ProblemError::ZeroGradient);
    }
    Ok(match kind {
        NormKind::L1 => {
            // Lowest index attaining max |g_i|; the sign factor keeps the
            // linearization identity when that component is negative.
            let mut idx = 0;
            for (i, gi) in g.iter().enumerate() {
                if gi.abs() > g[idx].abs() {
                    idx = i;
                }
            }
            let mut z = vec![0.0; g.len()];
            z[idx] = f / g[idx].abs() * g[idx].signum();
            z
        }
        NormKind::L2 => {
            let s = f / (gnorm * gnorm);
            g.iter().map(|gi| s * gi).collect()
        }
        NormKind::LInf => {
            let s = f / vector_norm(g, NormKind::L1);
            g.iter().map(|gi| s * gi.signum()).collect()
        }
    })
}

/// Solves the inequality `f(x) <= 0` by damped/pure steps over the
/// violation set: stop as soon as `f <= 0`, damp with step `grad f / L`
/// while `||grad f||^2 < L f`, otherwise take the full substep
/// `(f / ||grad f||^2) grad f`.
pub fn solve_scalar_inequality(sp: &ScalarProblem, x0: &[f64], cfg: &SolverConfig) -> SolveOutcome {
    let mut x = x0.to_vec();
    let l = sp.lipschitz;
    let mut trace = Vec::new();
    let mut stage1_count = 0;
    for k in 0..=cfg.max_iter {
        let f = sp.value(&x);
        if f <= 0.0 {
            trace.push(IterationRecord {
                k,
                u: 0.0,
                step_norm: 0.0,
                alpha: 1.0,
                beta: 0.0,
                stage: Stage::Pure,
                inner_reductions: 0,
            });
            return SolveOutcome {
                status: SolveStatus::Converged,
                x,
                trace,
                stage1_count,
            };
        }
        if k == cfg.max_iter {
            trace.push(IterationRecord {
                k,
                u: f,
                step_norm: 0.0,
                alpha: 1.0,
                beta: 0.0,
                stage: Stage::Pure,
                inner_reductions: 0,
            });
            return SolveOutcome {
                status: SolveStatus::MaxIter,
                x,
                trace,
                stage1_count,
            };
        }
        let g = sp.gradient(&x);
        let g2 = linalg::dot(&g, &g);
        if g2 == 0.0 {
            trace.push(IterationRecord {
                k,
                u: f,
                step_norm: 0.0,
                alpha: 1.0,
                beta: 0.0,
                stage: Stage::Pure,
                inner_reductions: 0,
            });
            return SolveOutcome {
                status: SolveStatus::ZeroGradient,
                x,
                trace,
                stage1_count,
            };
        }
        let (step, stage, alpha) = if g2 < l * f {
            // Damped branch: the Euclidean Stage-1 step of the basic
            // method reduces to a fixed gradient step of length 1/L.
            stage1_count += 1;
            (linalg::scale(1.0 / l, &g), Stage::Damped, g2 / (l * f))
        } else {
            (linalg::scale(f / g2, &g), Stage::Pure, 1.0)
        };
        trace.push(IterationRecord {
            k,
            u: f,
            step_norm: vector_norm(&step, NormKind::L2),
            alpha,
            beta: 0.0,
            stage,
            inner_reductions: 0,
        });
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi -= si;
        }
    }
    unreachable!()
}

/// A system of scalar inequalities `g_i(x) <= 0` over `R^ell`.
#[derive(Clone)]
pub struct InequalitySystem {
    pub ell: usize,
    funcs: Vec<(Arc<ScalarFn>, Arc<GradFn>)>,
}

impl InequalitySystem {
    pub fn new(ell: usize) -> InequalitySystem {
        InequalitySystem { ell, funcs: Vec::new() }
    }

    pub fn push(
        &mut self,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) {
        self.funcs.push((Arc::new(f), Arc::new(grad)));
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    pub fn value(&self, i: usize, x: &[f64]) -> f64 {
        (self.funcs[i].0)(x)
    }
}

/// Slack transform: `g_i(x) <= 0` becomes `g_i(x) + s_i^2 = 0` over
/// `R^{ell+m}`. A root gives a feasible point of the original system.
pub fn slack_transform(ineq: &InequalitySystem) -> ProblemDefinition {
    let m = ineq.len();
    let ell = ineq.ell;
    let sys = ineq.clone();
    let sysj = ineq.clone();
    ProblemDefinition::new(ell + m, m, move |xs| {
        let (x, s) = xs.split_at(ell);
        (0..m).map(|i| (sys.funcs[i].0)(x) + s[i] * s[i]).collect()
    })
    .with_jacobian(move |xs| {
        let (x, s) = xs.split_at(ell);
        let mut jac = Matrix::zeros(m, ell + m);
        for i in 0..m {
            let g = (sysj.funcs[i].1)(x);
            for j in 0..ell {
                jac[(i, j)] = g[j];
            }
            jac[(i, ell + i)] = 2.0 * s[i];
        }
        jac
    })
}

/// Squared-variable transform of linear feasibility `A x = b, x >= 0`:
/// `P_i(z) = sum_j A_ij z_j^2 - b_i`. A root `z` yields the feasible point
/// `x_j = z_j^2`.
pub fn linear_feasibility_transform(a: Matrix, b: Vec<f64>) -> ProblemDefinition {
    assert_eq!(b.len(), a.rows());
    let aj = a.clone();
    let m = a.rows();
    let n = a.cols();
    ProblemDefinition::new(n, m, move |z| {
        (0..m)
            .map(|i| (0..n).map(|j| a[(i, j)] * z[j] * z[j]).sum::<f64>() - b[i])
            .collect()
    })
    .with_jacobian(move |z| Matrix::from_fn(m, n, |i, j| 2.0 * aj[(i, j)] * z[j]))
}

/// Certified gradient dual-norm at a point, usable as `mu0` for scalar
/// problems.
pub fn scalar_mu0(sp: &ScalarProblem, x: &[f64], domain: NormKind) -> f64 {
    dual_norm(&sp.gradient(x), domain)
}
