//! Unpreconditioned conjugate gradients for the assembled SPD system.
//!
//! The over-penalty makes the conditioning roughly h^-4, so the default
//! relative tolerance of 1e-10 is tight enough that discretisation error
//! dominates the convergence tables; iteration counts grow accordingly. Dot
//! products and the matrix-vector product are serial, so a solve is
//! deterministic for fixed inputs.

use std::time::Instant;

use thiserror::Error;

use crate::assembly::CsrMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("dimension mismatch: matrix is {n}x{n}, rhs has length {rhs}")]
    DimensionMismatch { n: usize, rhs: usize },
    #[error("breakdown at iteration {iteration}: p.Ap = {p_ap:.3e} <= 0 (matrix not SPD?)")]
    Breakdown { iteration: usize, p_ap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOptions {
    /// Relative residual target ||b - Ax|| / ||b||.
    pub tol: f64,
    /// Iteration cap; defaults to 20n when `None`.
    pub max_iter: Option<usize>,
    /// Starting vector; zero when `None`.
    pub x0: Option<Vec<f64>>,
    /// Emit (iteration, residual) on stderr every this many iterations.
    pub log_stride: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { tol: 1e-10, max_iter: None, x0: None, log_stride: None }
    }
}

impl CgOptions {
    pub fn with_tol(tol: f64) -> Self {
        CgOptions { tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// True relative residual ||b - Ax|| / ||b|| at exit.
    pub final_relative_residual: f64,
    pub converged: bool,
    pub wall_seconds: f64,
    /// Largest |r_k . r_{k-1}| / (||r_k|| ||r_{k-1}||) sampled every 100
    /// iterations; loss of local residual orthogonality signals trouble.
    pub ortho_drift: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    opts: &CgOptions,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    let n = a.n;
    if b.len() != n {
        return Err(SolverError::DimensionMismatch { n, rhs: b.len() });
    }
    if let Some(x0) = &opts.x0 {
        if x0.len() != n {
            return Err(SolverError::DimensionMismatch { n, rhs: x0.len() });
        }
    }
    let start = Instant::now();
    let max_iter = opts.max_iter.unwrap_or(20 * n);
    let b_norm = dot(b, b).sqrt();

    let mut x = opts.x0.clone().unwrap_or_else(|| vec![0.0; n]);
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                final_relative_residual: 0.0,
                converged: true,
                wall_seconds: start.elapsed().as_secs_f64(),
                ortho_drift: 0.0,
            },
        ));
    }

    let mut r = if opts.x0.is_some() {
        let ax = a.apply(&x);
        b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect::<Vec<f64>>()
    } else {
        b.to_vec()
    };
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let target = opts.tol * b_norm;

    let mut iterations = 0;
    let mut converged = rr.sqrt() <= target;
    let mut ortho_drift = 0.0f64;
    let mut r_prev: Vec<f64> = Vec::new();

    while !converged && iterations < max_iter {
        let sample = (iterations + 1) % 100 == 0;
        if sample {
            r_prev.clear();
            r_prev.extend_from_slice(&r);
        }
        a.mul_into(&p, &mut ap);
        let p_ap = dot(&p, &ap);
        if p_ap <= 0.0 {
            return Err(SolverError::Breakdown { iteration: iterations, p_ap });
        }
        let alpha = rr / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if sample {
            let denom = rr_new.sqrt() * dot(&r_prev, &r_prev).sqrt();
            if denom > 0.0 {
                ortho_drift = ortho_drift.max(dot(&r, &r_prev).abs() / denom);
            }
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        iterations += 1;
        converged = rr.sqrt() <= target;
        if let Some(stride) = opts.log_stride {
            if iterations % stride == 0 {
                eprintln!("cg iter {iterations}: rel residual {:.3e}", rr.sqrt() / b_norm);
            }
        }
    }

    let final_relative_residual = a.residual_norm(&x, b) / b_norm;
    Ok((
        x,
        SolveReport {
            iterations,
            final_relative_residual,
            converged,
            wall_seconds: start.elapsed().as_secs_f64(),
            ortho_drift,
        },
    ))
}

/// Dense Gaussian elimination with partial pivoting; test fallback for
/// systems up to a few hundred unknowns.
pub fn dense_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, SolverError> {
    let n = a.n;
    if b.len() != n {
        return Err(SolverError::DimensionMismatch { n, rhs: b.len() });
    }
    assert!(n <= 200, "dense fallback is for small test systems");
    let mut m = vec![vec![0.0f64; n + 1]; n];
    for r in 0..n {
        for k in a.row_ptr[r]..a.row_ptr[r + 1] {
            m[r][a.cols[k]] = a.vals[k];
        }
        m[r][n] = b[r];
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let d = m[col][col];
        assert!(d != 0.0, "singular matrix in dense solve");
        for row in 0..n {
            if row != col && m[row][col] != 0.0 {
                let factor = m[row][col] / d;
                for k in col..=n {
                    m[row][k] -= factor * m[col][k];
                }
            }
        }
    }
    Ok((0..n).map(|r| m[r][n] / m[r][r]).collect())
}
