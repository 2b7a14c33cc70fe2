//! Command-line front end: solve problem files, certify solvability
//! regions, reproduce the reference benchmark, and cross-check the
//! minimum-norm substeps against a brute-force oracle.
//!
//! Exit codes: 0 converged/pass, 1 usage or input error, 2 algorithmic
//! non-convergence.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::time::Instant;
use undersolve::linalg::{vector_norm, Matrix, NormKind};
use undersolve::minnorm::{min_norm, oracle_min_norm, LinearSystem};
use undersolve::probfile::{load_problem, FileConstants, LoadedProblem};
use undersolve::problems::{quadratic_l1, quadratic_mu0};
use undersolve::rng::Rng;
use undersolve::solvers::{
    solve_adaptive, solve_basic, solve_damped_constant, solve_l_known, solve_pure, SolveOutcome,
    SolveStatus, SolverConfig,
};
use undersolve::theory::{region_thm2, region_thm5, region_thm6, SolvabilityRegion};
use undersolve::{benchmark_problem, conservative_constants};

#[derive(Parser)]
#[command(name = "undersolve", version, about = "Newton-type solvers for underdetermined nonlinear systems")]
struct Cli {
    /// RNG seed for generator-backed commands.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output directory for traces and summaries.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Norm used on the domain (step size).
    #[arg(long = "norm-domain", global = true, default_value = "l2", value_parser = parse_norm)]
    norm_domain: NormKind,
    /// Norm used on the image (residual).
    #[arg(long = "norm-image", global = true, default_value = "l2", value_parser = parse_norm)]
    norm_image: NormKind,
    /// Relative stopping tolerance on the residual.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Iteration cap.
    #[arg(long = "max-iter", global = true, default_value_t = 500)]
    max_iter: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a problem file; writes trace.csv and summary.toml.
    Solve(SolveArgs),
    /// Print solvability-region certificates for a problem file.
    Certify { file: PathBuf },
    /// Reproduce the seeded n=60, m=21 sigmoid benchmark (three runs).
    BenchPaper,
    /// Cross-check simplex minimum-norm steps against the enumeration oracle.
    OracleCheck(OracleArgs),
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    /// Step-size rule.
    #[arg(long, default_value = "basic", value_parser = ["basic", "adaptive", "l", "pure", "constant"])]
    algorithm: String,
    /// Covering constant (overrides the file).
    #[arg(long)]
    mu: Option<f64>,
    /// Jacobian Lipschitz constant (overrides the file).
    #[arg(long)]
    l: Option<f64>,
    /// Initial threshold for the adaptive rule (overrides the file).
    #[arg(long)]
    beta0: Option<f64>,
    /// Threshold reduction factor in (0,1) for the adaptive rule.
    #[arg(long)]
    q: Option<f64>,
    /// Fixed damping in (0,1] for algorithm=constant.
    #[arg(long)]
    alpha: Option<f64>,
    /// Trust-ball radius (overrides the file).
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args)]
struct OracleArgs {
    /// Number of random systems to check.
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Absolute tolerance on the optimal values.
    #[arg(long, default_value_t = 1e-9)]
    oracle_tol: f64,
}

fn parse_norm(s: &str) -> Result<NormKind, String> {
    NormKind::parse(s).ok_or_else(|| format!("expected one of l1, l2, linf, got '{s}'"))
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let cfg = SolverConfig {
        domain_norm: cli.norm_domain,
        image_norm: cli.norm_image,
        stop_tol: cli.tol,
        max_iter: cli.max_iter,
        ..SolverConfig::default()
    };
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        eprintln!("error: --tol must be positive and finite");
        return 1;
    }
    match &cli.cmd {
        Cmd::Solve(args) => cmd_solve(&cli, args, cfg),
        Cmd::Certify { file } => cmd_certify(file),
        Cmd::BenchPaper => cmd_bench_paper(cli.seed, &cli.out, cfg),
        Cmd::OracleCheck(args) => cmd_oracle_check(cli.seed, args),
    }
}

fn resolve(cli_val: Option<f64>, file_val: Option<f64>, name: &str) -> Result<f64, String> {
    cli_val
        .or(file_val)
        .ok_or_else(|| format!("constant '{name}' is required (pass --{name} or set [constants] in the file)"))
}

fn cmd_solve(cli: &Cli, args: &SolveArgs, mut cfg: SolverConfig) -> i32 {
    let lp = match load_problem(&args.file) {
        Ok(lp) => lp,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let c: FileConstants = lp.constants;
    if let Some(rho) = args.rho.or(c.rho) {
        cfg.trust_radius = rho;
    }
    let start = Instant::now();
    let outcome = match args.algorithm.as_str() {
        "basic" => {
            let (mu, l) = match (resolve(args.mu, c.mu, "mu"), resolve(args.l, c.l, "l")) {
                (Ok(mu), Ok(l)) => (mu, l),
                (Err(e), _) | (_, Err(e)) => {
                    eprintln!("error: {e}");
                    return 1;
                }
            };
            solve_basic(&lp.problem, &lp.x0, mu, l, &cfg)
        }
        "adaptive" => {
            let beta0 = match resolve(args.beta0, c.beta0, "beta0") {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 1;
                }
            };
            cfg.q = args.q.or(c.q).unwrap_or(0.5);
            if !(cfg.q > 0.0 && cfg.q < 1.0) {
                eprintln!("error: constant 'q' must lie in (0, 1)");
                return 1;
            }
            solve_adaptive(&lp.problem, &lp.x0, beta0, &cfg)
        }
        "l" => {
            let l = match resolve(args.l, c.l, "l") {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 1;
                }
            };
            solve_l_known(&lp.problem, &lp.x0, l, &cfg)
        }
        "pure" => solve_pure(&lp.problem, &lp.x0, &cfg),
        "constant" => {
            let alpha = match args.alpha.ok_or("constant 'alpha' is required (pass --alpha)") {
                Ok(v) if v > 0.0 && v <= 1.0 => v,
                Ok(_) => {
                    eprintln!("error: --alpha must lie in (0, 1]");
                    return 1;
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return 1;
                }
            };
            solve_damped_constant(&lp.problem, &lp.x0, alpha, &cfg)
        }
        _ => unreachable!("clap validates the algorithm"),
    };
    let wall = start.elapsed();

    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create output directory: {e}");
        return 1;
    }
    let trace_path = cli.out.join("trace.csv");
    if let Err(e) = write_trace(&trace_path, &outcome) {
        eprintln!("error: cannot write trace: {e}");
        return 1;
    }
    let summary = format!(
        "status = \"{}\"\nalgorithm = \"{}\"\nkind = \"{}\"\niterations = {}\nstage1_count = {}\nfinal_residual = {:e}\nwall_time_ms = {:.3}\n",
        outcome.status.as_str(),
        args.algorithm,
        lp.kind.as_str(),
        outcome.iterations(),
        outcome.stage1_count,
        outcome.final_residual(),
        wall.as_secs_f64() * 1e3,
    );
    if let Err(e) = std::fs::write(cli.out.join("summary.toml"), &summary) {
        eprintln!("error: cannot write summary: {e}");
        return 1;
    }
    print!("{summary}");
    match outcome.status {
        SolveStatus::Converged => 0,
        _ => 2,
    }
}

fn region_line(name: &str, region: &SolvabilityRegion, ynorm: f64) -> String {
    let inside = if ynorm < region.radius_y { "inside" } else { "outside" };
    format!(
        "{name}: radius_y = {:.10e}, radius_x = {:.10e}, y is {inside}",
        region.radius_y, region.radius_x
    )
}

fn cmd_certify(file: &Path) -> i32 {
    let lp = match load_problem(file) {
        Ok(lp) => lp,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let (mu0, l1) = match certify_constants(&lp) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    println!("mu0 = {mu0:.10e}");
    println!("l1 = {l1:.10e}");
    if mu0 <= 0.0 {
        println!("mu0 = 0, no region");
        return 0;
    }
    let ynorm = lp
        .y
        .as_deref()
        .map(|y| vector_norm(y, NormKind::L2))
        .unwrap_or(f64::INFINITY);
    println!("y_norm = {ynorm:.10e}");
    let rho = lp.constants.rho.unwrap_or(f64::INFINITY);
    println!("{}", region_line("thm2", &region_thm2(mu0, l1, rho), ynorm));
    println!("{}", region_line("thm5", &region_thm5(mu0, l1), ynorm));
    println!("{}", region_line("thm6", &region_thm6(mu0, l1), ynorm));
    0
}

/// Certified `(mu0, L)` for certification: computed from the problem data
/// when the kind is quadratic, otherwise taken from the file constants.
fn certify_constants(lp: &LoadedProblem) -> Result<(f64, f64), String> {
    if let Some(q) = &lp.quadratic {
        return Ok((quadratic_mu0(q), quadratic_l1(q)));
    }
    let mu0 = lp
        .constants
        .mu0
        .ok_or("constant 'mu0' is required to certify a non-quadratic problem")?;
    let l = lp
        .constants
        .l
        .ok_or("constant 'l' is required to certify a non-quadratic problem")?;
    Ok((mu0, l))
}

fn cmd_bench_paper(seed: u64, out: &Path, mut cfg: SolverConfig) -> i32 {
    let s = benchmark_problem(seed);
    let p = s.to_problem();
    let x0 = vec![0.0; p.n];
    cfg.stop_tol = cfg.stop_tol.min(1e-12);
    if let Err(e) = std::fs::create_dir_all(out) {
        eprintln!("error: cannot create output directory: {e}");
        return 1;
    }

    let (mu_c, l_c) = conservative_constants(&s);
    let conservative = solve_basic(&p, &x0, mu_c, l_c, &cfg);
    // The structured constants depend only on the row nonlinearity, not on
    // the conditioning of C, and give the threshold mu_phi^2 / M = 0.125.
    let structured = solve_basic(&p, &x0, s.mu_phi, s.m_bound, &cfg);
    let adaptive = solve_adaptive(&p, &x0, 5.0, &cfg);

    let runs = [
        ("conservative", &conservative),
        ("structured", &structured),
        ("adaptive", &adaptive),
    ];
    for (name, outcome) in runs {
        let path = out.join(format!("{name}.csv"));
        if let Err(e) = write_trace(&path, outcome) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return 1;
        }
        let reductions: usize = outcome.trace.iter().map(|r| r.inner_reductions).sum();
        println!(
            "{name}: status = {}, iterations = {}, stage1 = {}, reductions = {}, final_u = {:e}",
            outcome.status.as_str(),
            outcome.iterations(),
            outcome.stage1_count,
            reductions,
            outcome.final_residual(),
        );
    }
    if runs.iter().all(|(_, o)| o.status == SolveStatus::Converged) {
        0
    } else {
        2
    }
}

fn cmd_oracle_check(seed: u64, args: &OracleArgs) -> i32 {
    if !(args.oracle_tol.is_finite() && args.oracle_tol > 0.0) {
        eprintln!("error: --oracle-tol must be positive and finite");
        return 1;
    }
    let mut rng = Rng::seed_from_u64(seed);
    let mut pass = 0usize;
    let mut fail = 0usize;
    let mut generated = 0usize;
    while generated < args.count {
        let n = rng.uniform_range(1, 6);
        let m = rng.uniform_range(1, n.min(4));
        let a = Matrix::from_fn(m, n, |_, _| rng.standard_normal());
        let b = rng.normal_vec(m);
        let sys = match LinearSystem::new(a, b) {
            Ok(s) => s,
            // Gaussian matrices are almost surely full rank; resample the
            // measure-zero degenerate draws.
            Err(_) => continue,
        };
        generated += 1;
        let mut ok = true;
        for kind in [NormKind::L1, NormKind::L2, NormKind::LInf] {
            let solved = min_norm(&sys, kind).map(|z| vector_norm(&z, kind));
            let oracle = oracle_min_norm(&sys, kind);
            match (solved, oracle) {
                (Ok(v), Ok(o)) if (v - o).abs() <= args.oracle_tol => {}
                (v, o) => {
                    ok = false;
                    eprintln!("mismatch ({}, m={m}, n={n}): solver {v:?} vs oracle {o:?}", kind.as_str());
                }
            }
        }
        if ok {
            pass += 1;
        } else {
            fail += 1;
        }
    }
    println!("oracle-check: {pass} pass, {fail} fail (of {})", args.count);
    if fail == 0 {
        0
    } else {
        2
    }
}

/// Writes the iteration trace with the fixed header and 17 significant
/// digits so identical runs produce byte-identical files.
fn write_trace(path: &Path, outcome: &SolveOutcome) -> std::io::Result<()> {
    let mut text = String::from("k,u,alpha,beta,stage,step_norm,inner\n");
    for r in &outcome.trace {
        text.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{},{:.16e},{}\n",
            r.k,
            r.u,
            r.alpha,
            r.beta,
            r.stage.as_str(),
            r.step_norm,
            r.inner_reductions
        ));
    }
    std::fs::write(path, text)
}
