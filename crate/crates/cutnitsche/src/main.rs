use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use cutnitsche::io::{write_matrix_market, write_mesh, write_sweep, write_table, Format};
use cutnitsche::solver::{SolverMethod, DEFAULT_TOL};
use cutnitsche::study::{
    default_sweep_offsets, discretize, run_conditioning_sweep, run_convergence, CaseKind, RunConfig, VariantKind,
};
use cutnitsche::Result;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CaseArg {
    Radial,
    TrigJump,
    LinearPatch,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Penalized,
    PenaltyFree,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    Direct,
    Iterative,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Convergence studies and conditioning sweeps for unfitted Nitsche
/// discretisations of two-phase interface problems.
#[derive(Debug, Parser)]
#[command(name = "cutnitsche", version)]
struct Cli {
    #[arg(long, value_enum, default_value = "radial")]
    case: CaseArg,
    #[arg(long, value_enum, default_value = "penalized")]
    variant: VariantArg,
    /// Polynomial degree (1 or 2).
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    mu1: f64,
    #[arg(long, default_value_t = 1000.0)]
    mu2: f64,
    /// Ghost-penalty parameter.
    #[arg(long = "gamma-g", default_value_t = 0.5)]
    gamma_g: f64,
    /// Circle radius, or line position for the patch test.
    #[arg(long)]
    r0: Option<f64>,
    /// Subdivisions per side on the coarsest level.
    #[arg(long, default_value_t = 8)]
    n0: usize,
    #[arg(long, default_value_t = 5)]
    levels: usize,
    #[arg(long, value_enum, default_value = "direct")]
    solver: SolverArg,
    /// Relative residual tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the interface-position conditioning sweep on the n0 mesh instead
    /// of a convergence study.
    #[arg(long = "cond-sweep")]
    cond_sweep: bool,
    /// Add a sweep column with the ghost penalty switched off.
    #[arg(long = "no-ghost")]
    no_ghost: bool,
    /// Add s_h to the penalised variant.
    #[arg(long = "ghost-penalized")]
    ghost_penalized: bool,
    /// Estimate condition numbers in convergence runs.
    #[arg(long = "with-cond")]
    with_cond: bool,
    /// Write the finest mesh as "v x y" / "c i j k" lines.
    #[arg(long = "mesh-out")]
    mesh_out: Option<PathBuf>,
    /// Write the finest system matrix in MatrixMarket coordinate format.
    #[arg(long = "matrix-out")]
    matrix_out: Option<PathBuf>,
}

impl Cli {
    fn config(&self) -> RunConfig {
        RunConfig {
            case: match self.case {
                CaseArg::Radial => CaseKind::Radial,
                CaseArg::TrigJump => CaseKind::TrigJump,
                CaseArg::LinearPatch => CaseKind::LinearPatch,
            },
            variant: match self.variant {
                VariantArg::Penalized => VariantKind::Penalized,
                VariantArg::PenaltyFree => VariantKind::PenaltyFree,
            },
            k: self.k,
            mu1: self.mu1,
            mu2: self.mu2,
            gamma_g: self.gamma_g,
            ghost_on_penalized: self.ghost_penalized,
            position: self.r0,
            n0: self.n0,
            levels: self.levels,
            solver: match self.solver {
                SolverArg::Direct => SolverMethod::Direct,
                SolverArg::Iterative => SolverMethod::Iterative,
            },
            tol: self.tol,
            with_cond: self.with_cond,
        }
    }

    fn format(&self) -> Format {
        match self.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: &Cli) -> Result<()> {
    let config = cli.config();
    config.validate()?;
    if cli.cond_sweep {
        let rows = run_conditioning_sweep(&config, &default_sweep_offsets(), cli.no_ghost)?;
        let mut out = output(&cli.out)?;
        write_sweep(&rows, cli.format(), &mut out)?;
        out.flush()?;
        return Ok(());
    }
    let table = run_convergence(&config)?;
    {
        let mut out = output(&cli.out)?;
        write_table(&table, &config, cli.format(), &mut out)?;
        out.flush()?;
    }
    if cli.mesh_out.is_some() || cli.matrix_out.is_some() {
        let level = config.levels - 1;
        let case = config.manufactured_case()?;
        let d = discretize(
            &case,
            &case.levelset,
            config.subdivisions(level),
            level,
            config.k,
            config.method(),
        )?;
        if let Some(p) = &cli.mesh_out {
            let mut w = BufWriter::new(File::create(p)?);
            write_mesh(&d.mesh, &mut w)?;
            w.flush()?;
        }
        if let Some(p) = &cli.matrix_out {
            let mut w = BufWriter::new(File::create(p)?);
            write_matrix_market(&d.system.matrix, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
