//! Assembly of the penalised linear system.
//!
//! Unknowns are the 3*Ne element-local face-mean coefficients followed by one
//! multiplier per face. Each element contributes its 3x3 stiffness block
//! (constant gradients times area); each (element, face) incidence contributes
//! the penalty block kappa*|F| [[1,-1],[-1,1]] coupling the element's face
//! mean with the face multiplier, where kappa = h^(-2*beta)/ell_{T,F} uses the
//! global mesh size h. The face mean of a local function equals its own
//! coefficient, so penalty blocks need no quadrature. Boundary multipliers are
//! fixed to zero and eliminated symmetrically; the element coefficients on
//! boundary faces stay and are constrained only through the penalty.

use std::io::{self, Write};

use thiserror::Error;

use crate::geometry::{self, Point};
use crate::mesh::Mesh;
use crate::quadrature;

#[derive(Debug, Error, PartialEq)]
pub enum AssemblyError {
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Quadrature(#[from] quadrature::QuadratureError),
    #[error("penalty exponent beta must be positive, got {0}")]
    InvalidBeta(f64),
}

/// Numbering of element coefficients and face multipliers.
///
/// Full numbering: coefficient (t, i) -> 3t+i, multiplier f -> 3*Ne + f.
/// The reduced numbering skips constrained (boundary) multipliers.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub n_elements: usize,
    pub n_faces: usize,
    /// True for boundary faces, whose multipliers are eliminated.
    pub constrained: Vec<bool>,
    reduced_multiplier: Vec<usize>,
    n_interior: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> DofMap {
        let n_faces = mesh.n_faces();
        let constrained: Vec<bool> = mesh.faces.iter().map(|f| f.is_boundary()).collect();
        let mut reduced_multiplier = vec![usize::MAX; n_faces];
        let mut rank = 0usize;
        for f in 0..n_faces {
            if !constrained[f] {
                reduced_multiplier[f] = rank;
                rank += 1;
            }
        }
        DofMap {
            n_elements: mesh.n_elements(),
            n_faces,
            constrained,
            reduced_multiplier,
            n_interior: rank,
        }
    }

    pub fn n_coefficients(&self) -> usize {
        3 * self.n_elements
    }

    /// Total nodal points including boundary multipliers (the #Np count).
    pub fn total_points(&self) -> usize {
        self.n_coefficients() + self.n_faces
    }

    /// Dimension of the boundary-eliminated system.
    pub fn reduced_dim(&self) -> usize {
        self.n_coefficients() + self.n_interior
    }

    pub fn coefficient_index(&self, element: usize, local_face: usize) -> usize {
        3 * element + local_face
    }

    /// Multiplier index in the full numbering.
    pub fn multiplier_index(&self, face: usize) -> usize {
        self.n_coefficients() + face
    }

    /// Multiplier index in the reduced numbering; `None` when eliminated.
    pub fn reduced_multiplier_index(&self, face: usize) -> Option<usize> {
        if self.constrained[face] {
            None
        } else {
            Some(self.n_coefficients() + self.reduced_multiplier[face])
        }
    }
}

/// Over-penalty configuration: kappa = h_global^(-2*beta) / ell_{T,F}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    pub beta: f64,
    pub h_global: f64,
}

impl PenaltyParams {
    pub fn new(beta: f64, mesh: &Mesh) -> PenaltyParams {
        PenaltyParams { beta, h_global: mesh.size() }
    }

    pub fn scale(&self) -> f64 {
        self.h_global.powf(-2.0 * self.beta)
    }

    pub fn kappa(&self, ell: f64) -> f64 {
        self.scale() / ell
    }
}

/// Symmetric sparse matrix in compressed-row layout (both triangles stored).
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Compress triplets, summing duplicates. Column indices end up sorted.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> CsrMatrix {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_counts = vec![0usize; n];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_counts[r] += 1;
                last = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for r in 0..n {
            row_ptr[r + 1] = row_ptr[r] + row_counts[r];
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// y = A x.
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n, "dimension mismatch");
        assert_eq!(y.len(), self.n, "dimension mismatch");
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[r] = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    /// Euclidean norm of b - A x.
    pub fn residual_norm(&self, x: &[f64], b: &[f64]) -> f64 {
        assert_eq!(b.len(), self.n, "dimension mismatch");
        let ax = self.apply(x);
        b.iter()
            .zip(&ax)
            .map(|(bi, axi)| (bi - axi) * (bi - axi))
            .sum::<f64>()
            .sqrt()
    }

    /// x . A x, the assembled quadratic form.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let ax = self.apply(x);
        x.iter().zip(&ax).map(|(a, b)| a * b).sum()
    }

    /// Largest relative asymmetry |a_ij - a_ji| / max|a|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        let amax = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                let vt = self.get(c, r);
                worst = worst.max((self.vals[k] - vt).abs());
            }
        }
        if amax > 0.0 {
            worst / amax
        } else {
            0.0
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.cols[lo..hi].binary_search(&c) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    /// Coordinate-format dump (`%%MatrixMarket matrix coordinate real
    /// symmetric`), lower triangle only, 1-based indices.
    pub fn write_matrix_market(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
        let mut count = 0usize;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.cols[k] <= r {
                    count += 1;
                }
            }
        }
        writeln!(out, "{} {} {}", self.n, self.n, count)?;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.cols[k] <= r {
                    writeln!(out, "{} {} {:.17e}", r + 1, self.cols[k] + 1, self.vals[k])?;
                }
            }
        }
        Ok(())
    }
}

/// Assemble the reduced system matrix, right-hand side and dof map.
pub fn assemble_system(
    mesh: &Mesh,
    f: impl Fn(Point) -> f64,
    params: &PenaltyParams,
    rhs_quad_degree: usize,
) -> Result<(CsrMatrix, Vec<f64>, DofMap), AssemblyError> {
    if params.beta <= 0.0 {
        return Err(AssemblyError::InvalidBeta(params.beta));
    }
    let dofs = DofMap::new(mesh);
    let rule = quadrature::triangle_rule(rhs_quad_degree)?;
    let scale = params.scale();

    let n = dofs.reduced_dim();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(13 * mesh.n_elements());
    let mut rhs = vec![0.0; n];

    for t in 0..mesh.n_elements() {
        let tri = mesh.triangle_vertices(t);
        let area = geometry::signed_area(&tri).abs();
        if area <= geometry::DEGENERACY_TOL {
            return Err(geometry::GeometryError::DegenerateTriangle(area).into());
        }
        let grads = geometry::barycentric_gradients(&tri);

        for i in 0..3 {
            for j in 0..3 {
                let v = 4.0 * area * geometry::dot(grads[i], grads[j]);
                triplets.push((dofs.coefficient_index(t, i), dofs.coefficient_index(t, j), v));
            }
        }

        let jac = 2.0 * area;
        for i in 0..3 {
            let mut acc = 0.0;
            for (lam, w) in rule.points.iter().zip(&rule.weights) {
                acc += w * f(quadrature::bary_to_point(&tri, lam)) * (1.0 - 2.0 * lam[i]);
            }
            rhs[dofs.coefficient_index(t, i)] = acc * jac;
        }

        for loc in 0..3 {
            let fi = mesh.element_faces[t][loc];
            let len = mesh.faces[fi].length;
            let ell = 2.0 * area / len;
            let penalty = scale / ell * len;
            let ci = dofs.coefficient_index(t, loc);
            triplets.push((ci, ci, penalty));
            if let Some(li) = dofs.reduced_multiplier_index(fi) {
                triplets.push((li, li, penalty));
                triplets.push((ci, li, -penalty));
                triplets.push((li, ci, -penalty));
            }
        }
    }

    Ok((CsrMatrix::from_triplets(n, triplets), rhs, dofs))
}
