mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use conelab::corner_spectra::{
    admissibility_csv, admissibility_scan, compute_tau, find_fadle_roots, roots_csv, Branch,
};
use conelab::strip_solver::{estimate_rho0, solve_full};
use conelab::transforms::{read_polar_csv, write_polar_csv, write_strip_csv, PolarField};
use conelab::verification::{consistency_suite, make_manufactured, SuiteOptions};
use conelab::weighted_analysis::{lp_gamma_norm, regularity_table, solution_regularity_check};
use conelab::{Error, Result};

use config::{parse_real, RunConfig};

const DEFAULT_SEED: u64 = 20240;

#[derive(Parser, Debug)]
#[command(
    name = "conelab",
    version,
    about = "Clamped fourth-order problems on finite cones"
)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (single-table commands) or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fadle roots of sinh z +- z = 0 and the constant tau.
    Roots {
        /// Roots per branch.
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
    },
    /// Scan the admissible (omega, p) region.
    Admissible {
        /// `value` or `start:stop:count`; `pi` multiples are accepted.
        #[arg(long, allow_hyphen_values = true)]
        omega: String,
        #[arg(long, allow_hyphen_values = true)]
        p: String,
    },
    /// Solve the truncated cone problem for polar data.
    Solve {
        #[command(flatten)]
        input: SolveInput,
        /// Polar field to compare the solution against.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Estimate the contraction radius rho0.
    Rho0 {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 50.0)]
        rho_max: f64,
        /// Overrides `k` from the configuration.
        #[arg(long)]
        k: Option<f64>,
    },
    /// Weighted norm table of solutions or of given fields.
    Norms {
        #[arg(long, requires = "rhs", conflicts_with = "field")]
        config: Option<PathBuf>,
        #[arg(long)]
        rhs: Option<PathBuf>,
        /// Polar fields on vertex cutoffs, coarsest first.
        #[arg(long, requires = "p")]
        field: Vec<PathBuf>,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Run the cross-module consistency suite.
    Verify {
        #[arg(long, default_value = "pi/2")]
        omega: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Use a deliberately wrong stencil; the suite must fail.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Write the manufactured right-hand side and reference solution.
    Manufacture {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 4.0)]
        alpha: f64,
    },
}

#[derive(Args, Debug)]
struct SolveInput {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    rhs: PathBuf,
}

/// Writes `contents` next to `path` and renames it into place.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn out_dir(cli_out: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    cli_out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn parse_range(name: &str, text: &str) -> Result<Vec<f64>> {
    let bad = || {
        Error::InvalidArgument(format!(
            "--{name}: '{text}' is not a value or start:stop:count range"
        ))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![parse_real(v).ok_or_else(bad)?]),
        [a, b, n] => {
            let (a, b) = (
                parse_real(a).ok_or_else(bad)?,
                parse_real(b).ok_or_else(bad)?,
            );
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            if n == 0 || b < a || (n == 1 && a != b) {
                return Err(Error::InvalidArgument(format!(
                    "--{name}: range '{text}' is empty"
                )));
            }
            if n == 1 {
                return Ok(vec![a]);
            }
            Ok((0..n)
                .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
                .collect())
        }
        _ => Err(bad()),
    }
}

fn read_field(path: &Path) -> Result<PolarField> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    read_polar_csv(&text)
}

fn cmd_roots(count: usize, tolerance: f64, out: Option<&Path>) -> Result<()> {
    let mut roots = find_fadle_roots(Branch::Plus, count, tolerance)?;
    roots.extend(find_fadle_roots(Branch::Minus, count, tolerance)?);
    let tau = compute_tau(&roots)?;
    emit(out, &roots_csv(&roots))?;
    eprintln!("tau = {tau:.12}");
    Ok(())
}

fn cmd_admissible(omega: &str, p: &str, out: Option<&Path>) -> Result<()> {
    let omegas = parse_range("omega", omega)?;
    let ps = parse_range("p", p)?;
    let verdicts = admissibility_scan(&omegas, &ps)?;
    emit(out, &admissibility_csv(&verdicts))
}

fn cmd_solve(input: &SolveInput, reference: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let cfg = RunConfig::load(&input.config)?;
    let solver = cfg.solver()?;
    let g = read_field(&input.rhs)?;
    let reference = reference.map(read_field).transpose()?;
    let dir = out_dir(out, &cfg);
    let sol = match solve_full(&g, &solver) {
        Ok(s) => s,
        Err(Error::Divergence { ratios }) => {
            let mut s = String::from("iteration,ratio,residual\n");
            for (m, r) in ratios.iter().enumerate() {
                s.push_str(&format!("{},{:.16e},\n", m + 2, r));
            }
            write_atomic(&dir.join("solve_report.csv"), &s)?;
            return Err(Error::Divergence { ratios });
        }
        Err(e) => return Err(e),
    };
    let norms = regularity_table(std::slice::from_ref(&sol.v), &solver.exponents())?;
    write_atomic(&dir.join("solution_polar.csv"), &write_polar_csv(&sol.v))?;
    write_atomic(
        &dir.join("solution_strip.csv"),
        &write_strip_csv(&sol.strip),
    )?;
    write_atomic(&dir.join("solve_report.csv"), &sol.report.to_csv())?;
    write_atomic(&dir.join("norms.csv"), &norms.to_csv())?;
    let r = &sol.report;
    println!(
        "converged in {} iterations; residual {:.3e}; compatibility {:.3e}",
        r.iterations, r.final_residual, r.compatibility_residual
    );
    if r.stalled {
        println!(
            "note: updates reached the roundoff floor before tol = {:e}",
            solver.tol
        );
    }
    if let Some(reference) = reference {
        let diff = sol.v.combine(1.0, &reference, -1.0)?;
        let p = solver.p();
        let err = lp_gamma_norm(&diff, 0.0, p)? / lp_gamma_norm(&reference, 0.0, p)?;
        println!("relative L^p error against reference: {err:.6e}");
    }
    Ok(())
}

fn cmd_rho0(config: &Path, rho_max: f64, k: Option<f64>, out: Option<&Path>) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let mut solver = cfg.solver()?;
    if let Some(k) = k {
        solver = solver.with_k(k)?;
    }
    let est = estimate_rho0(&solver, rho_max)?;
    let mut s = String::from(
        "# numerical surrogate: depends on the grid, T and the probe data\nrho,ratio\n",
    );
    for (rho, ratio) in &est.probes {
        s.push_str(&format!("{rho:.16e},{ratio:.16e}\n"));
    }
    write_atomic(&out_dir(out, &cfg).join("rho0.csv"), &s)?;
    println!(
        "rho0 = {:.6e} (numerical surrogate; unsaturated = {}, monotone = {})",
        est.rho0, est.unsaturated, est.monotone
    );
    Ok(())
}

fn cmd_norms(
    config: Option<&Path>,
    rhs: Option<&Path>,
    fields: &[PathBuf],
    p: Option<f64>,
    out: Option<&Path>,
) -> Result<()> {
    let (report, dir) = match (config, rhs) {
        (Some(c), Some(r)) => {
            let cfg = RunConfig::load(c)?;
            let g = read_field(r)?;
            (
                solution_regularity_check(&g, &cfg.solver()?)?,
                out_dir(out, &cfg),
            )
        }
        _ if !fields.is_empty() => {
            let exp = conelab::transforms::Exponents::new(p.unwrap_or(2.0))?;
            let levels = fields
                .iter()
                .map(|f| read_field(f))
                .collect::<Result<Vec<_>>>()?;
            (
                regularity_table(&levels, &exp)?,
                out.map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from(".")),
            )
        }
        _ => {
            return Err(Error::InvalidArgument(
                "norms needs --config with --rhs, or --field".into(),
            ))
        }
    };
    write_atomic(&dir.join("norms.csv"), &report.to_csv())?;
    let membership = match report.final_membership {
        Some(true) => "true",
        Some(false) => "false",
        None => "unknown (single level)",
    };
    println!(
        "uniform-weight membership: {membership}; all entries stable: {}",
        report.all_stable()
    );
    Ok(())
}

/// Exit code 0 when every check passes, 3 for an inadmissible pair, 2 otherwise.
fn cmd_verify(
    seed: u64,
    omega: &str,
    p: f64,
    inject_fault: bool,
    out: Option<&Path>,
) -> Result<u8> {
    let omega = parse_real(omega)
        .ok_or_else(|| Error::InvalidArgument(format!("--omega: '{omega}' is not a number")))?;
    let verdict = conelab::corner_spectra::check_admissible(omega, p)?;
    let report = consistency_suite(SuiteOptions {
        seed,
        omega,
        p,
        inject_fault,
    });
    emit(out, &report.to_csv())?;
    for c in report.failures() {
        eprintln!(
            "{} [{}] {}: {}",
            c.verdict.as_str(),
            c.module,
            c.name,
            c.detail
        );
    }
    Ok(if report.passed() {
        0
    } else if !verdict.admissible {
        3
    } else {
        2
    })
}

fn cmd_manufacture(config: &Path, alpha: f64, out: Option<&Path>) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let solver = cfg.solver()?;
    let case = make_manufactured(alpha, solver.cone(), solver.k())?;
    let g = case.sample_g(&solver)?;
    let v = case.sample_v(&solver)?;
    let dir = out_dir(out, &cfg);
    write_atomic(&dir.join("rhs.csv"), &write_polar_csv(&g))?;
    write_atomic(&dir.join("reference.csv"), &write_polar_csv(&v))?;
    println!(
        "wrote {} and {}",
        dir.join("rhs.csv").display(),
        dir.join("reference.csv").display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    let out = cli.out.as_deref();
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let done = |r: Result<()>| r.map(|()| 0);
    match &cli.command {
        Command::Roots { count, tolerance } => done(cmd_roots(*count, *tolerance, out)),
        Command::Admissible { omega, p } => done(cmd_admissible(omega, p, out)),
        Command::Solve { input, reference } => done(cmd_solve(input, reference.as_deref(), out)),
        Command::Rho0 { config, rho_max, k } => done(cmd_rho0(config, *rho_max, *k, out)),
        Command::Norms {
            config,
            rhs,
            field,
            p,
        } => done(cmd_norms(config.as_deref(), rhs.as_deref(), field, *p, out)),
        Command::Verify {
            omega,
            p,
            inject_fault,
        } => cmd_verify(seed, omega, *p, *inject_fault, out),
        Command::Manufacture { config, alpha } => done(cmd_manufacture(config, *alpha, out)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
