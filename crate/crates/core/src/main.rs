//! Command-line driver: convergence studies, verification and mesh export.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use quadcurl::experiments::{convergence_study_with, run_verification_suite, StudyConfig, VerifyConfig};
use quadcurl::mesh::build_uniform_cube_mesh;
use quadcurl::solver::{Backend, Method};
use quadcurl::Error;

#[derive(Parser)]
#[command(
    name = "quadcurl",
    version,
    about = "Quad-curl singular perturbation solvers on cube meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mixed,
    Nitsche,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Direct,
    Minres,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study with the manufactured solution.
    Study {
        #[arg(long, value_enum, default_value = "mixed")]
        method: MethodArg,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 10.0)]
        sigma: f64,
        /// Subdivisions per axis, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        levels: Vec<usize>,
        #[arg(long, value_enum, default_value = "direct")]
        solver: SolverArg,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10)]
        quad_degree: usize,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run the structural and stability checks.
    Verify {
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        levels: Vec<usize>,
        /// Element degrees, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 10.0)]
        sigma: f64,
        /// Also write the full report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write the uniform cube mesh as legacy VTK.
    MeshDump {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Solver(_) => 3,
        _ => 2,
    }
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn study(cfg: StudyConfig, out: &Option<PathBuf>, format: Format) -> Result<(), Error> {
    let table = convergence_study_with(&cfg, |r| {
        eprintln!(
            "n={:>3}  dim={:>7}+{:<6} L2={:.3e} curl={:.3e} energy={:.3e}  {} ({} it) {:.0} ms, total {:.0} ms",
            r.n,
            r.dim_u,
            r.dim_lambda,
            r.errors.l2,
            r.errors.curl,
            r.errors.energy,
            r.backend,
            r.iterations,
            r.solve_ms,
            r.wall_ms
        );
    })?;
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    let text = match format {
        Format::Csv => table.to_csv(),
        Format::Markdown => table.to_markdown(),
    };
    let mut w = sink(out)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn verify(cfg: VerifyConfig, json: &Option<PathBuf>) -> Result<bool, Error> {
    let report = run_verification_suite(&cfg)?;
    for c in &report.checks {
        println!(
            "{} {:<40} {:>12.4e}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.detail
        );
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if json.is_some() {
        let mut w = sink(json)?;
        serde_json::to_writer_pretty(&mut w, &report).map_err(io::Error::from)?;
        writeln!(w)?;
    }
    Ok(report.passed)
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Study {
            method,
            eps,
            k,
            sigma,
            levels,
            solver,
            tol,
            quad_degree,
            out,
            format,
        } => {
            let cfg = StudyConfig {
                method: match method {
                    MethodArg::Mixed => Method::Mixed,
                    MethodArg::Nitsche => Method::Nitsche,
                },
                eps,
                k,
                sigma,
                levels,
                backend: match solver {
                    SolverArg::Direct => Backend::Direct,
                    SolverArg::Minres => Backend::Minres,
                },
                tol,
                quad_degree,
            };
            study(cfg, &out, format)?;
            Ok(true)
        }
        Command::Verify { levels, k, sigma, json } => {
            let cfg = VerifyConfig {
                levels,
                ks: k,
                sigma,
                ..VerifyConfig::default()
            };
            verify(cfg, &json)
        }
        Command::MeshDump { n, out } => {
            let mesh = build_uniform_cube_mesh(n)?;
            let mut w = sink(&out)?;
            mesh.write_vtk(&mut w)?;
            w.flush()?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
