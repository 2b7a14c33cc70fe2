//! Solvers for underdetermined systems of nonlinear equations
//! `P(x) = 0` with `m` equations and `n >= m` unknowns.
//!
//! Each iteration solves the linearized equation `P'(x) z = P(x)` for the
//! minimum-norm correction `z` (in the l1, l2 or l-infinity norm) and
//! blends damped steps, which guarantee a fixed residual decrease per
//! iteration, with pure Newton steps, which contract quadratically once
//! the residual falls under the threshold `beta = mu^2 / L`. The crate
//! provides:
//!
//! - [`solvers`]: the basic, adaptive, Lipschitz-only, pure-Newton, and
//!   constant-damping iteration drivers over user problems;
//! - [`minnorm`]: exact minimum-norm substeps via QR (l2) or a dense
//!   two-phase simplex (l1, l-infinity), plus a brute-force oracle for
//!   cross-checking on small instances;
//! - [`theory`]: the closed-form machinery behind the convergence
//!   guarantees — tail sums `H_k`, their inverse, stage-count bounds,
//!   rate envelopes, and solvability regions with certified radii;
//! - [`problems`]: quadratic and structured problem families, scalar
//!   equations/inequalities, and transforms that turn inequality systems
//!   into underdetermined equations;
//! - [`probfile`]: a versioned TOML problem-file format with seeded
//!   generators;
//! - [`linalg`] and [`rng`]: the dense kernels and the deterministic
//!   generator everything above is built on.
//!
//! The `undersolve` binary exposes the same functionality on the command
//! line (`solve`, `certify`, `bench-paper`, `oracle-check`).

pub mod linalg;
pub mod minnorm;
pub mod probfile;
pub mod problems;
pub mod rng;
pub mod solvers;
pub mod theory;

pub use linalg::{Matrix, NormKind};
pub use problems::{QuadraticProblem, ScalarProblem, StructuredProblem};
pub use solvers::{
    solve_adaptive, solve_basic, solve_damped_constant, solve_l_known, solve_pure,
    ProblemDefinition, SolveOutcome, SolveStatus, SolverConfig,
};

/// Dimensions of the reference benchmark instance.
pub const BENCH_N: usize = 60;
pub const BENCH_M: usize = 21;

/// Builds the seeded sigmoid benchmark: a standard-normal `21 x 60`
/// matrix `C`, offsets `b`, and target `y`, with the saturating sigmoid
/// row map. Draw order is `C` row-major, then `b`, then `y`, so the
/// instance is reproducible bit-for-bit from the seed.
pub fn benchmark_problem(seed: u64) -> StructuredProblem {
    let mut rng = rng::Rng::seed_from_u64(seed);
    let c = Matrix::from_fn(BENCH_M, BENCH_N, |_, _| rng.standard_normal());
    let offsets = rng.normal_vec(BENCH_M);
    let y = rng.normal_vec(BENCH_M);
    StructuredProblem::sigmoid(c, offsets, y).expect("benchmark dimensions are consistent")
}

/// Conservative `(mu, L)` for a structured sigmoid problem, derived from
/// the singular values of `C` alone: `mu = 0.5 sigma_min(C)` and
/// `L = 2 sigma_max(C)`. These certify the basic method but ignore the
/// row structure, so the resulting stage threshold `mu^2 / L` is much
/// smaller than the structured threshold `mu_phi^2 / M`.
pub fn conservative_constants(s: &StructuredProblem) -> (f64, f64) {
    let sv = linalg::singular_values(&s.c);
    let smax = sv[0];
    let smin = sv[sv.len() - 1];
    (s.mu_phi * smin, s.m_bound * smax)
}
