//! Convergence-study driver: mesh -> assemble -> solve -> error pipeline,
//! table emission, and comparison against the vendored reference tables.
//!
//! Relative errors share one pair of denominators per study, computed with
//! degree-7 quadrature on the finest mesh of the run. Error norms themselves
//! default to degree-5 quadrature, which is also what the reference tables
//! reflect; degree 7 is available as a sensitivity check.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use thiserror::Error;

use crate::assembly::{self, PenaltyParams};
use crate::errors::{self, DiscreteSolution, ExactSolution};
use crate::mesh::{FamilyKind, MeshError, MeshFamily, DEFAULT_DELTA};
use crate::quadrature;
use crate::solver::{self, CgOptions};

/// Relative tolerance on E_H1 and E_L2 against the reference tables.
pub const TOLERANCE_REL_ERROR: f64 = 0.03;
/// Absolute tolerance on the convergence indicator r.
pub const TOLERANCE_ABS_RATE: f64 = 0.05;
/// Relative tolerance on the mesh size h (tables carry 3 significant digits).
pub const TOLERANCE_REL_H: f64 = 5e-3;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("invalid study configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] assembly::AssemblyError),
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
    #[error("failed to parse table at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("reference table has no row for N = {0}")]
    GridMismatch(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub family: FamilyKind,
    pub n_values: Vec<usize>,
    pub delta: f64,
    pub beta: f64,
    pub cg_tol: f64,
    /// Quadrature degree for the error norms: 5 (default) or 7.
    pub norm_quad_degree: usize,
    pub dump_mesh: bool,
    pub dump_matrix: bool,
    /// Directory for mesh/matrix dumps.
    pub dump_dir: PathBuf,
    /// Progress lines on stderr.
    pub verbose: bool,
}

impl StudyConfig {
    pub fn new(family: FamilyKind, n_values: Vec<usize>) -> StudyConfig {
        StudyConfig {
            family,
            n_values,
            delta: DEFAULT_DELTA,
            beta: 1.0,
            cg_tol: 1e-10,
            norm_quad_degree: 5,
            dump_mesh: false,
            dump_matrix: false,
            dump_dir: PathBuf::from("."),
            verbose: false,
        }
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let ns = &self.n_values;
        if ns.is_empty() {
            return Err(StudyError::InvalidConfig("empty N list".into()));
        }
        if !ns.windows(2).all(|w| w[0] < w[1]) {
            return Err(StudyError::InvalidConfig(format!(
                "N list must be strictly ascending, got {ns:?}"
            )));
        }
        for &n in ns {
            if n < 4 || n % 2 != 0 {
                return Err(StudyError::InvalidConfig(format!(
                    "division counts must be even and >= 4, got {n}"
                )));
            }
        }
        if !(self.norm_quad_degree == 5 || self.norm_quad_degree == 7) {
            return Err(StudyError::InvalidConfig(format!(
                "norm quadrature degree must be 5 or 7, got {}",
                self.norm_quad_degree
            )));
        }
        if self.cg_tol <= 0.0 {
            return Err(StudyError::InvalidConfig("cg tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// One table row of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub np: usize,
    pub h: f64,
    pub e_h1: f64,
    pub r_h1: Option<f64>,
    pub e_l2: f64,
    pub r_l2: Option<f64>,
    pub iterations: usize,
    pub seconds: f64,
    pub converged: bool,
}

/// Run the full pipeline for each N in ascending order.
pub fn run_study(config: &StudyConfig) -> Result<Vec<StudyRow>, StudyError> {
    config.validate()?;
    let exact = ExactSolution::boundary_layer();
    let norm_rule = quadrature::triangle_rule(config.norm_quad_degree)
        .map_err(assembly::AssemblyError::from)?;
    let reference_rule = quadrature::triangle_rule(7).map_err(assembly::AssemblyError::from)?;

    // denominators on the finest mesh of the study, computed once
    let finest = *config.n_values.last().unwrap();
    let denominators = {
        let mesh = MeshFamily::with_delta(config.family, finest, config.delta).generate()?;
        errors::reference_norms(&mesh, &exact, &reference_rule)
    };
    if config.verbose {
        eprintln!(
            "{}: |u|_H1 = {:.6e}, ||u||_L2 = {:.6e} (denominators on N = {})",
            config.family.name(),
            denominators.h1_seminorm,
            denominators.l2_norm,
            finest
        );
    }

    let mut rows: Vec<StudyRow> = Vec::with_capacity(config.n_values.len());
    for &n in &config.n_values {
        let started = Instant::now();
        let mesh = MeshFamily::with_delta(config.family, n, config.delta).generate()?;
        let params = PenaltyParams::new(config.beta, &mesh);
        let rhs_f = |x| exact.rhs(x);
        let (matrix, b, dofs) = assembly::assemble_system(&mesh, rhs_f, &params, 5)?;

        if config.dump_mesh {
            let path = self::dump_path(config, n, "mesh.txt");
            let mut out = fs::File::create(path)?;
            mesh.write_text(&mut out)?;
        }
        if config.dump_matrix {
            let path = self::dump_path(config, n, "mtx");
            let mut out = fs::File::create(path)?;
            matrix.write_matrix_market(&mut out)?;
        }

        let opts = CgOptions::with_tol(config.cg_tol);
        let (x, report) = solver::cg_solve(&matrix, &b, &opts)?;
        let sol = DiscreteSolution::from_reduced(&dofs, &x, config.beta);

        let e_h1 = errors::energy_error(&mesh, &sol, &exact, &norm_rule) / denominators.h1_seminorm;
        let e_l2 = errors::l2_error(&mesh, &sol, &exact, &norm_rule) / denominators.l2_norm;
        let seconds = started.elapsed().as_secs_f64();

        let (r_h1, r_l2) = match rows.last() {
            Some(prev) => (
                errors::convergence_indicator(prev.e_h1, e_h1).ok(),
                errors::convergence_indicator(prev.e_l2, e_l2).ok(),
            ),
            None => (None, None),
        };
        if config.verbose {
            eprintln!(
                "{} N={n}: E_H1 = {e_h1:.6e}, E_L2 = {e_l2:.6e}, {} cg iterations, {seconds:.1}s{}",
                config.family.name(),
                report.iterations,
                if report.converged { "" } else { " [solver did not converge]" }
            );
        } else if !report.converged {
            eprintln!(
                "warning: solver did not converge for {} N={n} (residual {:.3e})",
                config.family.name(),
                report.final_relative_residual
            );
        }
        rows.push(StudyRow {
            n,
            np: dofs.total_points(),
            h: mesh.size(),
            e_h1,
            r_h1,
            e_l2,
            r_l2,
            iterations: report.iterations,
            seconds,
            converged: report.converged,
        });
    }
    Ok(rows)
}

fn dump_path(config: &StudyConfig, n: usize, ext: &str) -> PathBuf {
    config.dump_dir.join(format!("{}_n{}.{}", config.family.name(), n, ext))
}

pub const CSV_HEADER: &str = "N,Np,h,E_H1,r_H1,E_L2,r_L2,iters,seconds";

fn opt_rate(r: Option<f64>) -> String {
    match r {
        Some(v) => format!("{v:.2}"),
        None => "-".to_string(),
    }
}

/// CSV table with 6-significant-digit floats and `-` for empty rate cells.
pub fn emit_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.5e},{:.5e},{},{:.5e},{},{},{:.3}",
            r.n,
            r.np,
            r.h,
            r.e_h1,
            opt_rate(r.r_h1),
            r.e_l2,
            opt_rate(r.r_l2),
            r.iterations,
            r.seconds
        );
    }
    out
}

/// Markdown table mirroring the reference table layout.
pub fn emit_markdown(rows: &[StudyRow]) -> String {
    let mut out = String::new();
    out.push_str("| N | #Np | h | E_H1 | r | E_L2 | r |\n");
    out.push_str("|---|-----|---|------|---|------|---|\n");
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {:.2e} | {:.5e} | {} | {:.5e} | {} |",
            r.n,
            r.np,
            r.h,
            r.e_h1,
            opt_rate(r.r_h1),
            r.e_l2,
            opt_rate(r.r_l2)
        );
    }
    out
}

/// Parse a study or reference CSV. Reference tables carry only the first
/// seven columns; iteration and timing cells then default to zero.
pub fn parse_csv(text: &str) -> Result<Vec<StudyRow>, StudyError> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('N') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 7 {
            return Err(StudyError::Parse {
                line: idx + 1,
                reason: format!("expected at least 7 fields, got {}", fields.len()),
            });
        }
        let parse_f = |s: &str, what: &str| -> Result<f64, StudyError> {
            s.parse::<f64>().map_err(|e| StudyError::Parse {
                line: idx + 1,
                reason: format!("{what}: {e}"),
            })
        };
        let parse_rate = |s: &str| -> Result<Option<f64>, StudyError> {
            if s == "-" || s.is_empty() {
                Ok(None)
            } else {
                parse_f(s, "rate").map(Some)
            }
        };
        rows.push(StudyRow {
            n: fields[0].parse().map_err(|e| StudyError::Parse {
                line: idx + 1,
                reason: format!("N: {e}"),
            })?,
            np: fields[1].parse().map_err(|e| StudyError::Parse {
                line: idx + 1,
                reason: format!("Np: {e}"),
            })?,
            h: parse_f(fields[2], "h")?,
            e_h1: parse_f(fields[3], "E_H1")?,
            r_h1: parse_rate(fields[4])?,
            e_l2: parse_f(fields[5], "E_L2")?,
            r_l2: parse_rate(fields[6])?,
            iterations: fields.get(7).and_then(|s| s.parse().ok()).unwrap_or(0),
            seconds: fields.get(8).and_then(|s| s.parse().ok()).unwrap_or(0.0),
            converged: true,
        });
    }
    Ok(rows)
}

/// Reference convergence tables vendored as CSV assets.
pub fn reference_table(kind: FamilyKind) -> &'static str {
    match kind {
        FamilyKind::Standard => include_str!("../data/standard.csv"),
        FamilyKind::Shishkin => include_str!("../data/shishkin.csv"),
        FamilyKind::CosineGraded => include_str!("../data/cosine.csv"),
        FamilyKind::QuadraticGraded => include_str!("../data/quadratic.csv"),
    }
}

#[derive(Debug, Clone)]
pub struct CellCheck {
    pub n: usize,
    pub column: &'static str,
    pub got: f64,
    pub want: f64,
    /// Relative deviation for error columns, absolute for rate columns.
    pub deviation: f64,
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub pass: bool,
    pub cells: Vec<CellCheck>,
}

impl CompareReport {
    pub fn failures(&self) -> impl Iterator<Item = &CellCheck> {
        self.cells.iter().filter(|c| !c.ok)
    }

    pub fn max_deviation(&self, column: &str) -> f64 {
        self.cells
            .iter()
            .filter(|c| c.column == column)
            .map(|c| c.deviation)
            .fold(0.0, f64::max)
    }
}

impl std::fmt::Display for CompareReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.cells {
            writeln!(
                f,
                "  {} N={:<4} {:<5} got {:<12.6} want {:<12.6} deviation {:.2e} (tol {:.0e})",
                if c.ok { "ok  " } else { "FAIL" },
                c.n,
                c.column,
                c.got,
                c.want,
                c.deviation,
                c.tolerance
            )?;
        }
        writeln!(f, "  => {}", if self.pass { "PASS" } else { "FAIL" })
    }
}

/// Per-cell comparison of computed rows against a reference table.
///
/// E columns are compared relatively, r columns absolutely, h to the three
/// significant digits the tables carry, and #Np exactly.
pub fn compare_reference(
    rows: &[StudyRow],
    reference: &[StudyRow],
) -> Result<CompareReport, StudyError> {
    let mut cells = Vec::new();
    for row in rows {
        let want = reference
            .iter()
            .find(|r| r.n == row.n)
            .ok_or(StudyError::GridMismatch(row.n))?;
        let np_dev = (row.np as f64 - want.np as f64).abs();
        cells.push(CellCheck {
            n: row.n,
            column: "Np",
            got: row.np as f64,
            want: want.np as f64,
            deviation: np_dev,
            tolerance: 0.0,
            ok: np_dev == 0.0,
        });
        let h_dev = (row.h - want.h).abs() / want.h;
        cells.push(CellCheck {
            n: row.n,
            column: "h",
            got: row.h,
            want: want.h,
            deviation: h_dev,
            tolerance: TOLERANCE_REL_H,
            ok: h_dev <= TOLERANCE_REL_H,
        });
        for (column, got, want_v) in
            [("E_H1", row.e_h1, want.e_h1), ("E_L2", row.e_l2, want.e_l2)]
        {
            let deviation = (got - want_v).abs() / want_v;
            cells.push(CellCheck {
                n: row.n,
                column,
                got,
                want: want_v,
                deviation,
                tolerance: TOLERANCE_REL_ERROR,
                ok: deviation <= TOLERANCE_REL_ERROR,
            });
        }
        for (column, got, want_v) in [("r_H1", row.r_h1, want.r_h1), ("r_L2", row.r_l2, want.r_l2)]
        {
            if let (Some(got), Some(want_v)) = (got, want_v) {
                let deviation = (got - want_v).abs();
                cells.push(CellCheck {
                    n: row.n,
                    column,
                    got,
                    want: want_v,
                    deviation,
                    tolerance: TOLERANCE_ABS_RATE,
                    ok: deviation <= TOLERANCE_ABS_RATE,
                });
            }
        }
    }
    let pass = cells.iter().all(|c| c.ok);
    Ok(CompareReport { pass, cells })
}
