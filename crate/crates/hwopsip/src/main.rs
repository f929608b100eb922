//! Command-line driver for convergence studies and mesh audits.
//!
//! Exit codes: 0 on success (and on a passing comparison), 1 when a
//! `--compare` check fails, 2 when the linear solver fails to converge.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hwopsip::geometry;
use hwopsip::mesh::{FamilyKind, MeshFamily};
use hwopsip::study::{self, StudyConfig};

#[derive(Parser)]
#[command(name = "hwopsip", version, about = "HWOPSIP Poisson solver on anisotropic meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mesh -> assemble -> solve -> error pipeline over an N grid.
    Study(StudyArgs),
    /// Emit per-element anisotropy metrics as CSV.
    Audit(AuditArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Mesh family: standard | shishkin | cosine | quadratic.
    #[arg(long)]
    family: FamilyKind,
    /// Comma-separated division counts, e.g. 32,64,128.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Shishkin transition parameter; accepts fractions like 1/128.
    #[arg(long, default_value = "1/128", value_parser = parse_fraction)]
    delta: f64,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Penalty exponent.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Relative residual tolerance for the conjugate-gradient solver.
    #[arg(long, default_value_t = 1e-10)]
    cg_tol: f64,
    /// Quadrature degree for the error norms (5 or 7).
    #[arg(long, default_value_t = 5)]
    norm_quad: usize,
    /// Write the study table as CSV to this path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare against a reference CSV and set the exit code accordingly.
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Dump each mesh in plain-text format next to the output.
    #[arg(long)]
    dump_mesh: bool,
    /// Dump each system matrix in MatrixMarket format next to the output.
    #[arg(long)]
    dump_matrix: bool,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output CSV path; multiple N values get the N appended to the stem.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|e| format!("{e}"))?;
            let den: f64 = den.trim().parse().map_err(|e| format!("{e}"))?;
            if den == 0.0 {
                return Err("zero denominator".into());
            }
            num / den
        }
        None => s.parse().map_err(|e| format!("{e}"))?,
    };
    if value <= 0.0 {
        return Err(format!("delta must be positive, got {value}"));
    }
    Ok(value)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Study(args) => run_study_command(args),
        Command::Audit(args) => run_audit_command(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run_study_command(args: StudyArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let mut config = StudyConfig::new(args.common.family, args.common.n);
    config.delta = args.common.delta;
    config.beta = args.beta;
    config.cg_tol = args.cg_tol;
    config.norm_quad_degree = args.norm_quad;
    config.dump_mesh = args.dump_mesh;
    config.dump_matrix = args.dump_matrix;
    config.verbose = true;
    if let Some(out) = &args.out {
        if let Some(dir) = out.parent() {
            if !dir.as_os_str().is_empty() {
                config.dump_dir = dir.to_path_buf();
            }
        }
    }

    let rows = study::run_study(&config)?;
    print!("{}", study::emit_markdown(&rows));
    if let Some(out) = &args.out {
        fs::write(out, study::emit_csv(&rows))?;
        eprintln!("wrote {}", out.display());
    }

    let solver_failed = rows.iter().any(|r| !r.converged);
    if let Some(path) = &args.compare {
        let reference = study::parse_csv(&fs::read_to_string(path)?)?;
        let report = study::compare_reference(&rows, &reference)?;
        print!("comparison against {}:\n{report}", path.display());
        if solver_failed {
            return Ok(ExitCode::from(2));
        }
        return Ok(ExitCode::from(u8::from(!report.pass)));
    }
    Ok(ExitCode::from(if solver_failed { 2 } else { 0 }))
}

fn run_audit_command(args: AuditArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    for &n in &args.common.n {
        let mesh = MeshFamily::with_delta(args.common.family, n, args.common.delta).generate()?;
        let mut csv = String::from("elem,area,hT,h1,h2,HT,ratio,max_angle\n");
        for t in 0..mesh.n_elements() {
            let g = geometry::characterize(&mesh.triangle_vertices(t))?;
            csv.push_str(&format!(
                "{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.4},{:.6}\n",
                t, g.area, g.h_t, g.h1, g.h2, g.big_h,
                g.ratio(), g.max_angle
            ));
        }
        match &args.out {
            Some(path) => {
                let target = if args.common.n.len() == 1 {
                    path.clone()
                } else {
                    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
                    let ext = path.extension().map(|e| e.to_string_lossy().into_owned());
                    let name = match ext {
                        Some(ext) => format!("{stem}_n{n}.{ext}"),
                        None => format!("{stem}_n{n}"),
                    };
                    path.with_file_name(name)
                };
                fs::write(&target, csv)?;
                eprintln!("wrote {}", target.display());
            }
            None => {
                println!("# family={} N={}", args.common.family.name(), n);
                print!("{csv}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
