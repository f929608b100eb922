//! Discrete error norms and the convergence indicator.
//!
//! The energy error of a discrete pair (u_h, lambda_h) against an exact
//! solution u splits into the broken H1 part and the penalty-weighted jump
//! part. On each (element, face) incidence the projected jump of the error
//! pair reduces to lambda_F - m_{T,F}, where m_{T,F} is the face-mean
//! coefficient of u_h: the face mean of u cancels against the exact trace.
//! Jump weights always use beta = 1 regardless of the beta the system was
//! assembled with.

use thiserror::Error;

use crate::assembly::DofMap;
use crate::geometry::{self, Point};
use crate::mesh::Mesh;
use crate::quadrature::{self, TriangleRule};

#[derive(Debug, Error, PartialEq)]
pub enum ErrorsError {
    #[error("convergence indicator needs positive errors, got ({0}, {1})")]
    NonPositiveError(f64, f64),
}

/// Closed-form exact solution with gradient and Laplacian.
#[derive(Clone, Copy)]
pub struct ExactSolution {
    pub u: fn(Point) -> f64,
    pub gradient: fn(Point) -> Point,
    pub laplacian: fn(Point) -> f64,
}

impl ExactSolution {
    /// Right-hand side of the strong form, f = -laplacian(u).
    pub fn rhs(&self, x: Point) -> f64 {
        -(self.laplacian)(x)
    }

    /// u = x1^2 (x1-1)^2 x2^2 (x2-1)^2 exp(-128 x2): zero on the boundary of
    /// the unit square, with a sharp layer along x2 = 0.
    pub fn boundary_layer() -> ExactSolution {
        ExactSolution {
            u: |p| g(p[0]) * q(p[1]),
            gradient: |p| [g1(p[0]) * q(p[1]), g(p[0]) * q1(p[1])],
            laplacian: |p| g2(p[0]) * q(p[1]) + g(p[0]) * q2(p[1]),
        }
    }

    pub fn zero() -> ExactSolution {
        ExactSolution { u: |_| 0.0, gradient: |_| [0.0, 0.0], laplacian: |_| 0.0 }
    }
}

fn g(s: f64) -> f64 {
    let t = s * (s - 1.0);
    t * t
}

fn g1(s: f64) -> f64 {
    2.0 * s * (s - 1.0) * (2.0 * s - 1.0)
}

fn g2(s: f64) -> f64 {
    12.0 * s * s - 12.0 * s + 2.0
}

fn q(s: f64) -> f64 {
    g(s) * (-128.0 * s).exp()
}

fn q1(s: f64) -> f64 {
    (g1(s) - 128.0 * g(s)) * (-128.0 * s).exp()
}

fn q2(s: f64) -> f64 {
    (g2(s) - 256.0 * g1(s) + 16384.0 * g(s)) * (-128.0 * s).exp()
}

/// Discrete pair: face-mean coefficients per element plus face multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    /// 3*Ne coefficients in element-major order.
    pub coefficients: Vec<f64>,
    /// One value per face; boundary entries are identically zero.
    pub multipliers: Vec<f64>,
    /// Penalty exponent the system was assembled with.
    pub beta: f64,
}

impl DiscreteSolution {
    /// Expand a reduced solution vector, reinserting zero boundary multipliers.
    pub fn from_reduced(dofs: &DofMap, reduced: &[f64], beta: f64) -> DiscreteSolution {
        assert_eq!(reduced.len(), dofs.reduced_dim(), "dimension mismatch");
        let coefficients = reduced[..dofs.n_coefficients()].to_vec();
        let mut multipliers = vec![0.0; dofs.n_faces];
        for f in 0..dofs.n_faces {
            if let Some(k) = dofs.reduced_multiplier_index(f) {
                multipliers[f] = reduced[k];
            }
        }
        DiscreteSolution { coefficients, multipliers, beta }
    }

    /// Flatten back to the reduced vector (boundary multipliers dropped).
    pub fn to_reduced(&self, dofs: &DofMap) -> Vec<f64> {
        let mut x = vec![0.0; dofs.reduced_dim()];
        x[..dofs.n_coefficients()].copy_from_slice(&self.coefficients);
        for f in 0..dofs.n_faces {
            if let Some(k) = dofs.reduced_multiplier_index(f) {
                x[k] = self.multipliers[f];
            }
        }
        x
    }

    pub fn coefficient(&self, element: usize, local_face: usize) -> f64 {
        self.coefficients[3 * element + local_face]
    }

    /// Constant gradient of the local function on element `t`.
    pub fn gradient(&self, mesh: &Mesh, t: usize) -> Point {
        let tri = mesh.triangle_vertices(t);
        let grads = geometry::barycentric_gradients(&tri);
        let mut out = [0.0; 2];
        for i in 0..3 {
            let c = self.coefficient(t, i);
            out[0] -= 2.0 * c * grads[i][0];
            out[1] -= 2.0 * c * grads[i][1];
        }
        out
    }
}

/// Sum of kappa_{F(beta)} |F| (lambda_F - m_{T,F})^2 over (element, face)
/// incidences; interior faces contribute twice, boundary faces once.
fn jump_sum(mesh: &Mesh, sol: &DiscreteSolution, beta: f64) -> f64 {
    let scale = mesh.size().powf(-2.0 * beta);
    let mut acc = 0.0;
    for t in 0..mesh.n_elements() {
        let tri = mesh.triangle_vertices(t);
        let area = geometry::signed_area(&tri).abs();
        for loc in 0..3 {
            let fi = mesh.element_faces[t][loc];
            let len = mesh.faces[fi].length;
            let ell = 2.0 * area / len;
            let d = sol.multipliers[fi] - sol.coefficient(t, loc);
            acc += scale / ell * len * d * d;
        }
    }
    acc
}

/// Jump seminorm of a discrete pair at the given penalty exponent.
pub fn jump_seminorm(mesh: &Mesh, sol: &DiscreteSolution, beta: f64) -> f64 {
    jump_sum(mesh, sol, beta).sqrt()
}

/// Full seminorm of a discrete pair: broken H1 part plus jump part.
pub fn hwop_seminorm(mesh: &Mesh, sol: &DiscreteSolution, beta: f64) -> f64 {
    let mut acc = jump_sum(mesh, sol, beta);
    for t in 0..mesh.n_elements() {
        let tri = mesh.triangle_vertices(t);
        let area = geometry::signed_area(&tri).abs();
        let grad = sol.gradient(mesh, t);
        acc += area * geometry::dot(grad, grad);
    }
    acc.sqrt()
}

/// Energy-norm error |u^H - u_h^H|_{hwop(1)} against an exact solution.
pub fn energy_error(
    mesh: &Mesh,
    sol: &DiscreteSolution,
    exact: &ExactSolution,
    rule: &TriangleRule,
) -> f64 {
    let mut acc = jump_sum(mesh, sol, 1.0);
    for t in 0..mesh.n_elements() {
        let tri = mesh.triangle_vertices(t);
        let grad_h = sol.gradient(mesh, t);
        acc += rule.integrate(&tri, |x| {
            let grad = (exact.gradient)(x);
            let dx = grad[0] - grad_h[0];
            let dy = grad[1] - grad_h[1];
            dx * dx + dy * dy
        });
    }
    acc.sqrt()
}

/// L2-norm error ||u - u_h||.
pub fn l2_error(
    mesh: &Mesh,
    sol: &DiscreteSolution,
    exact: &ExactSolution,
    rule: &TriangleRule,
) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_elements() {
        let tri = mesh.triangle_vertices(t);
        acc += rule.integrate_bary(&tri, |x, lam| {
            let mut uh = 0.0;
            for i in 0..3 {
                uh += sol.coefficient(t, i) * (1.0 - 2.0 * lam[i]);
            }
            let d = (exact.u)(x) - uh;
            d * d
        });
    }
    acc.sqrt()
}

/// L2 norm of the discrete scalar part (exact for piecewise linears).
pub fn discrete_l2_norm(mesh: &Mesh, sol: &DiscreteSolution) -> f64 {
    let rule = quadrature::triangle_rule(2).unwrap();
    let mut acc = 0.0;
    for t in 0..mesh.n_elements() {
        let tri = mesh.triangle_vertices(t);
        acc += rule.integrate_bary(&tri, |_, lam| {
            let mut uh = 0.0;
            for i in 0..3 {
                uh += sol.coefficient(t, i) * (1.0 - 2.0 * lam[i]);
            }
            uh * uh
        });
    }
    acc.sqrt()
}

/// Norms of the exact solution used as relative-error denominators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceNorms {
    pub h1_seminorm: f64,
    pub l2_norm: f64,
}

/// Quadrature evaluation of |u|_{H1} and ||u||_{L2} on the given mesh.
pub fn reference_norms(mesh: &Mesh, exact: &ExactSolution, rule: &TriangleRule) -> ReferenceNorms {
    let mut h1 = 0.0;
    let mut l2 = 0.0;
    for t in 0..mesh.n_elements() {
        let tri = mesh.triangle_vertices(t);
        h1 += rule.integrate(&tri, |x| {
            let grad = (exact.gradient)(x);
            geometry::dot(grad, grad)
        });
        l2 += rule.integrate(&tri, |x| {
            let u = (exact.u)(x);
            u * u
        });
    }
    ReferenceNorms { h1_seminorm: h1.sqrt(), l2_norm: l2.sqrt() }
}

/// r = log2(e_h / e_{h/2}).
pub fn convergence_indicator(e_h: f64, e_h2: f64) -> Result<f64, ErrorsError> {
    if e_h <= 0.0 || e_h2 <= 0.0 {
        return Err(ErrorsError::NonPositiveError(e_h, e_h2));
    }
    Ok((e_h / e_h2).ln() / 2.0_f64.ln())
}

/// Deviation between the analytic right-hand side and a second-order
/// central-difference Laplacian of u at `count` deterministic interior
/// points: max_i |f_fd - f| / max_i |f|. The sample-max normalisation keeps
/// the comparison meaningful where f changes sign; the truncation floor of
/// the difference stencil itself is about step^2 * 128^2 / 12 relative.
pub fn rhs_fd_deviation(exact: &ExactSolution, count: usize, step: f64, seed: u64) -> f64 {
    let mut state = seed.max(1);
    let mut next = move || {
        // xorshift64*, mapped to (0,1)
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        let bits = state.wrapping_mul(0x2545F4914F6CDD1D);
        (bits >> 11) as f64 / (1u64 << 53) as f64
    };
    let u = exact.u;
    let mut worst_diff = 0.0f64;
    let mut largest_f = 0.0f64;
    for _ in 0..count {
        let x = step + next() * (1.0 - 2.0 * step);
        let y = step + next() * (1.0 - 2.0 * step);
        let lap_fd = (u([x + step, y]) - 2.0 * u([x, y]) + u([x - step, y])
            + u([x, y + step]) - 2.0 * u([x, y]) + u([x, y - step]))
            / (step * step);
        let f = exact.rhs([x, y]);
        worst_diff = worst_diff.max((-lap_fd - f).abs());
        largest_f = largest_f.max(f.abs());
    }
    worst_diff / largest_f
}
