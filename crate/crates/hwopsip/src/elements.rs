//! Local finite element spaces and operators.
//!
//! The scalar space is the nonconforming linear element whose degrees of
//! freedom are face mean values; the basis opposite vertex i is
//! theta_i = 1 - 2*lambda_i in two dimensions. The vector space is the
//! lowest-order face-flux element with shape functions
//! theta_i = iota_i/(2|T|) (x - P_i), where iota_i = +1 when the fixed face
//! normal points outwards. Face degrees of freedom are computed with Gauss
//! quadrature (degree 5 by default) so non-polynomial data is handled
//! uniformly.

use thiserror::Error;

use crate::geometry::{self, Point};
use crate::mesh::Mesh;
use crate::quadrature::{self, SegmentRule, TriangleRule};

#[derive(Debug, Error, PartialEq)]
pub enum ElementError {
    #[error("affine map is singular (|det| = {0:.3e})")]
    SingularMap(f64),
}

/// Scalar local function: one face-mean coefficient per local face.
#[derive(Debug, Clone, PartialEq)]
pub struct CrLocal {
    pub element: usize,
    pub coefficients: [f64; 3],
}

impl CrLocal {
    pub fn new(element: usize, coefficients: [f64; 3]) -> Self {
        CrLocal { element, coefficients }
    }

    /// Point value sum_i c_i (1 - 2 lambda_i(x)).
    pub fn eval(&self, tri: &[Point; 3], x: Point) -> f64 {
        let lam = geometry::barycentric(tri, x);
        self.eval_bary(&lam)
    }

    pub fn eval_bary(&self, lam: &[f64; 3]) -> f64 {
        (0..3).map(|i| self.coefficients[i] * (1.0 - 2.0 * lam[i])).sum()
    }

    /// Constant gradient sum_i c_i (-2 grad lambda_i).
    pub fn gradient(&self, tri: &[Point; 3]) -> Point {
        let g = geometry::barycentric_gradients(tri);
        let mut out = [0.0; 2];
        for i in 0..3 {
            out[0] -= 2.0 * self.coefficients[i] * g[i][0];
            out[1] -= 2.0 * self.coefficients[i] * g[i][1];
        }
        out
    }
}

/// Face-mean interpolation of a scalar function onto one element.
pub fn cr_interpolate(
    element: usize,
    tri: &[Point; 3],
    rule: &SegmentRule,
    f: impl Fn(Point) -> f64,
) -> CrLocal {
    let mut coefficients = [0.0; 3];
    for (loc, c) in coefficients.iter_mut().enumerate() {
        let a = tri[(loc + 1) % 3];
        let b = tri[(loc + 2) % 3];
        *c = rule.mean(a, b, &f);
    }
    CrLocal { element, coefficients }
}

/// Vector local function: signed flux through each local face.
#[derive(Debug, Clone, PartialEq)]
pub struct RtLocal {
    pub element: usize,
    /// Flux dofs chi_i = int_{F_i} v . n_{T,i} ds.
    pub fluxes: [f64; 3],
    /// iota_i: +1 where n_{T,i} is outward, -1 otherwise.
    pub signs: [f64; 3],
}

impl RtLocal {
    /// Point value sum_i chi_i iota_i/(2|T|) (x - P_i).
    pub fn eval(&self, tri: &[Point; 3], x: Point) -> Point {
        let two_area = 2.0 * geometry::signed_area(tri).abs();
        let mut out = [0.0; 2];
        for i in 0..3 {
            let s = self.fluxes[i] * self.signs[i] / two_area;
            out[0] += s * (x[0] - tri[i][0]);
            out[1] += s * (x[1] - tri[i][1]);
        }
        out
    }

    /// Constant divergence (sum of signed fluxes)/area.
    pub fn divergence(&self, tri: &[Point; 3]) -> f64 {
        let area = geometry::signed_area(tri).abs();
        (0..3).map(|i| self.fluxes[i] * self.signs[i]).sum::<f64>() / area
    }
}

/// Outward unit normal of local face `loc` for a counter-clockwise triangle.
pub fn outward_normal(tri: &[Point; 3], loc: usize) -> Point {
    let a = tri[(loc + 1) % 3];
    let b = tri[(loc + 2) % 3];
    let e = geometry::sub(b, a);
    let len = geometry::norm(e);
    let mut n = [e[1] / len, -e[0] / len];
    // robust for either vertex orientation
    let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    if geometry::dot(n, geometry::sub(mid, tri[loc])) < 0.0 {
        n = [-n[0], -n[1]];
    }
    n
}

/// Flux interpolation of a vector function with the given per-face signs.
pub fn rt_interpolate(
    element: usize,
    tri: &[Point; 3],
    signs: [f64; 3],
    rule: &SegmentRule,
    v: impl Fn(Point) -> Point,
) -> RtLocal {
    let mut fluxes = [0.0; 3];
    for loc in 0..3 {
        let a = tri[(loc + 1) % 3];
        let b = tri[(loc + 2) % 3];
        let n_out = outward_normal(tri, loc);
        let n = [signs[loc] * n_out[0], signs[loc] * n_out[1]];
        fluxes[loc] = rule.integrate(a, b, |x| geometry::dot(v(x), n));
    }
    RtLocal { element, fluxes, signs }
}

/// Flux interpolation with outward normals on every face (iota = +1).
pub fn rt_interpolate_outward(
    element: usize,
    tri: &[Point; 3],
    rule: &SegmentRule,
    v: impl Fn(Point) -> Point,
) -> RtLocal {
    rt_interpolate(element, tri, [1.0; 3], rule, v)
}

/// Invertible affine map x = A x_hat + b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub a: [[f64; 2]; 2],
    pub b: Point,
}

impl AffineMap {
    pub fn det(&self) -> f64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    pub fn apply(&self, x_hat: Point) -> Point {
        [
            self.a[0][0] * x_hat[0] + self.a[0][1] * x_hat[1] + self.b[0],
            self.a[1][0] * x_hat[0] + self.a[1][1] * x_hat[1] + self.b[1],
        ]
    }

    pub fn pull_back(&self, x: Point) -> Point {
        let d = self.det();
        let y = geometry::sub(x, self.b);
        [
            (self.a[1][1] * y[0] - self.a[0][1] * y[1]) / d,
            (-self.a[1][0] * y[0] + self.a[0][0] * y[1]) / d,
        ]
    }
}

/// Determinant-scaled push-forward of a reference vector field:
/// v(x) = A v_hat(A^-1 (x - b)) / det A. Preserves face-normal fluxes.
pub fn piola(
    map: &AffineMap,
    v_hat: impl Fn(Point) -> Point,
) -> Result<impl Fn(Point) -> Point, ElementError> {
    let d = map.det();
    if d.abs() <= 1e-300 {
        return Err(ElementError::SingularMap(d.abs()));
    }
    let map = *map;
    Ok(move |x: Point| {
        let vh = v_hat(map.pull_back(x));
        [
            (map.a[0][0] * vh[0] + map.a[0][1] * vh[1]) / d,
            (map.a[1][0] * vh[0] + map.a[1][1] * vh[1]) / d,
        ]
    })
}

/// Mean value of `f` over the triangle.
pub fn l2_project_element(tri: &[Point; 3], rule: &TriangleRule, f: impl Fn(Point) -> f64) -> f64 {
    rule.integrate(tri, f) / geometry::signed_area(tri).abs()
}

/// Mean value of `f` over the segment.
pub fn l2_project_face(a: Point, b: Point, rule: &SegmentRule, f: impl Fn(Point) -> f64) -> f64 {
    rule.mean(a, b, f)
}

/// Maximum over elements of |div of the flux interpolant - projected div v|.
///
/// The two routes meet only through the divergence theorem, so this is a
/// diagnostic of the flux dofs, orientation signs and divergence formula.
/// Both sides are evaluated with composite panel quadrature: the identity is
/// exact, and plain rules would otherwise dominate the measured defect for
/// boundary-layer fields.
pub fn commuting_defect(
    mesh: &Mesh,
    v: impl Fn(Point) -> Point,
    div_v: impl Fn(Point) -> f64,
) -> f64 {
    const FACE_PANELS: usize = 32;
    const VOLUME_LEVELS: usize = 5;
    let face_rule = quadrature::segment_rule(9).unwrap();
    let volume = composite_triangle_rule(VOLUME_LEVELS);

    let mut worst = 0.0f64;
    for t in 0..mesh.n_elements() {
        let tri = mesh.triangle_vertices(t);
        let area = geometry::signed_area(&tri).abs();
        let mut signed_flux_sum = 0.0;
        for loc in 0..3 {
            let a = tri[(loc + 1) % 3];
            let b = tri[(loc + 2) % 3];
            let n = outward_normal(&tri, loc);
            let mut flux = 0.0;
            for k in 0..FACE_PANELS {
                let t0 = k as f64 / FACE_PANELS as f64;
                let t1 = (k + 1) as f64 / FACE_PANELS as f64;
                let pa = [a[0] + t0 * (b[0] - a[0]), a[1] + t0 * (b[1] - a[1])];
                let pb = [a[0] + t1 * (b[0] - a[0]), a[1] + t1 * (b[1] - a[1])];
                flux += face_rule.integrate(pa, pb, |x| geometry::dot(v(x), n));
            }
            signed_flux_sum += flux;
        }
        let div_interp = signed_flux_sum / area;
        let projected: f64 = volume
            .iter()
            .map(|(lam, w)| 2.0 * w * div_v(quadrature::bary_to_point(&tri, lam)))
            .sum();
        worst = worst.max((div_interp - projected).abs());
    }
    worst
}

/// Degree-7 rule applied on 4^levels congruent subtriangles, in barycentric
/// coordinates of the parent; weights sum to 1/2.
fn composite_triangle_rule(levels: usize) -> Vec<([f64; 3], f64)> {
    let base = quadrature::triangle_rule(7).unwrap();
    let mut cells: Vec<[[f64; 3]; 3]> = vec![[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]];
    for _ in 0..levels {
        let mut next = Vec::with_capacity(4 * cells.len());
        for c in &cells {
            let m01 = mid(&c[0], &c[1]);
            let m12 = mid(&c[1], &c[2]);
            let m02 = mid(&c[0], &c[2]);
            next.push([c[0], m01, m02]);
            next.push([m01, c[1], m12]);
            next.push([m02, m12, c[2]]);
            next.push([m01, m12, m02]);
        }
        cells = next;
    }
    let scale = 1.0 / cells.len() as f64;
    let mut out = Vec::with_capacity(cells.len() * base.points.len());
    for c in &cells {
        for (p, w) in base.points.iter().zip(&base.weights) {
            let lam = [
                p[0] * c[0][0] + p[1] * c[1][0] + p[2] * c[2][0],
                p[0] * c[0][1] + p[1] * c[1][1] + p[2] * c[2][1],
                p[0] * c[0][2] + p[1] * c[1][2] + p[2] * c[2][2],
            ];
            out.push((lam, w * scale));
        }
    }
    out
}

fn mid(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{FamilyKind, MeshFamily};

    const REF: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    fn rule5() -> SegmentRule {
        quadrature::segment_rule(5).unwrap()
    }

    #[test]
    fn constant_coefficients_give_constant_one() {
        let local = CrLocal::new(0, [1.0, 1.0, 1.0]);
        for x in [[0.1, 0.2], [0.3, 0.3], [0.0, 0.0], [0.5, 0.5]] {
            assert!((local.eval(&REF, x) - 1.0).abs() <= 1e-15);
        }
        let g = local.gradient(&REF);
        assert!(g[0].abs() <= 1e-15 && g[1].abs() <= 1e-15);
    }

    #[test]
    fn single_basis_value_at_centroid() {
        let local = CrLocal::new(0, [1.0, 0.0, 0.0]);
        let c = [1.0 / 3.0, 1.0 / 3.0];
        assert!((local.eval(&REF, c) - 1.0 / 3.0).abs() <= 1e-15);
    }

    #[test]
    fn face_dofs_are_dual_to_the_basis() {
        let rule = rule5();
        for i in 0..3 {
            let mut coeff = [0.0; 3];
            coeff[i] = 1.0;
            let basis = CrLocal::new(0, coeff);
            for j in 0..3 {
                let a = REF[(j + 1) % 3];
                let b = REF[(j + 2) % 3];
                let mean = rule.mean(a, b, |x| basis.eval(&REF, x));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((mean - want).abs() <= 1e-14, "dof {j} of basis {i}: {mean}");
            }
        }
    }

    #[test]
    fn interpolation_reproduces_linears() {
        let tri = [[0.2, 0.1], [1.1, 0.4], [0.3, 0.9]];
        let p = |x: Point| 3.0 - 2.0 * x[0] + 5.0 * x[1];
        let local = cr_interpolate(0, &tri, &rule5(), p);
        for x in [[0.4, 0.3], [0.6, 0.5], tri[0], tri[2]] {
            assert!((local.eval(&tri, x) - p(x)).abs() <= 1e-13);
        }
        let g = local.gradient(&tri);
        assert!((g[0] + 2.0).abs() <= 1e-13 && (g[1] - 5.0).abs() <= 1e-13);
    }

    #[test]
    fn gradient_of_coordinate_interpolants() {
        let gx = cr_interpolate(0, &REF, &rule5(), |x| x[0]).gradient(&REF);
        assert!((gx[0] - 1.0).abs() <= 1e-14 && gx[1].abs() <= 1e-14);
        let gxy = cr_interpolate(0, &REF, &rule5(), |x| x[0] + 2.0 * x[1]).gradient(&REF);
        assert!((gxy[0] - 1.0).abs() <= 1e-14 && (gxy[1] - 2.0).abs() <= 1e-14);
    }

    #[test]
    fn quadratic_face_mean() {
        // f = x^2 on the face from (0,0) to (1,0): mean = 1/3
        let local = cr_interpolate(0, &REF, &rule5(), |x| x[0] * x[0]);
        assert!((local.coefficients[2] - 1.0 / 3.0).abs() <= 1e-15);
    }

    #[test]
    fn rt_reproduces_constant_and_radial_fields() {
        let tri = [[0.1, 0.0], [0.9, 0.2], [0.4, 0.7]];
        let rule = rule5();
        let c = |_: Point| [0.7, -0.3];
        let local = rt_interpolate_outward(0, &tri, &rule, c);
        for x in [[0.4, 0.2], [0.5, 0.3]] {
            let v = local.eval(&tri, x);
            assert!((v[0] - 0.7).abs() <= 1e-13 && (v[1] + 0.3).abs() <= 1e-13);
        }
        let radial = |x: Point| x;
        let local = rt_interpolate_outward(0, &tri, &rule, radial);
        for x in [[0.3, 0.1], [0.45, 0.35]] {
            let v = local.eval(&tri, x);
            assert!((v[0] - x[0]).abs() <= 1e-13 && (v[1] - x[1]).abs() <= 1e-13);
        }
        assert!((local.divergence(&tri) - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn rt_flux_dofs_are_dual_to_the_shape_functions() {
        let tri = [[0.0, 0.0], [2.0, 0.0], [0.5, 1.5]];
        let rule = rule5();
        for i in 0..3 {
            let mut fluxes = [0.0; 3];
            fluxes[i] = 1.0;
            let shape = RtLocal { element: 0, fluxes, signs: [1.0; 3] };
            for j in 0..3 {
                let a = tri[(j + 1) % 3];
                let b = tri[(j + 2) % 3];
                let n = outward_normal(&tri, j);
                let flux = rule.integrate(a, b, |x| geometry::dot(shape.eval(&tri, x), n));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((flux - want).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn rt_divergence_matches_projected_divergence_of_gradient_field() {
        // v = grad(x^2 y): div v = 2y; element mean of 2y over the reference
        // triangle is 2/3
        let rule = rule5();
        let v = |x: Point| [2.0 * x[0] * x[1], x[0] * x[0]];
        let local = rt_interpolate_outward(0, &REF, &rule, v);
        let tri5 = quadrature::triangle_rule(5).unwrap();
        let mean = l2_project_element(&REF, &tri5, |x| 2.0 * x[1]);
        assert!((local.divergence(&REF) - mean).abs() <= 1e-12);
    }

    #[test]
    fn piola_identity_and_scaling() {
        let id = AffineMap { a: [[1.0, 0.0], [0.0, 1.0]], b: [0.0, 0.0] };
        let v = piola(&id, |x| [x[0], x[1]]).unwrap();
        let got = v([0.3, 0.4]);
        assert!((got[0] - 0.3).abs() <= 1e-15 && (got[1] - 0.4).abs() <= 1e-15);

        let scale = AffineMap { a: [[2.0, 0.0], [0.0, 2.0]], b: [0.0, 0.0] };
        let v = piola(&scale, |_| [1.0, 0.0]).unwrap();
        let got = v([0.5, 0.5]);
        assert!((got[0] - 0.5).abs() <= 1e-15 && got[1].abs() <= 1e-15);
    }

    #[test]
    fn piola_preserves_face_fluxes() {
        // reference field (1,0) through the reference face from (1,0) to (0,1)
        let map = AffineMap { a: [[1.3, 0.4], [-0.2, 0.8]], b: [0.3, 0.1] };
        let rule = rule5();
        let v_hat = |_: Point| [1.0, 0.0];
        let v = piola(&map, v_hat).unwrap();

        let a_hat = [1.0, 0.0];
        let b_hat = [0.0, 1.0];
        let n_hat = outward_normal(&REF, 0);
        let ref_flux = rule.integrate(a_hat, b_hat, |x| geometry::dot(v_hat(x), n_hat));

        let a = map.apply(a_hat);
        let b = map.apply(b_hat);
        let mapped = [map.apply(REF[0]), map.apply(REF[1]), map.apply(REF[2])];
        let mut n = outward_normal(&mapped, 0);
        if map.det() < 0.0 {
            n = [-n[0], -n[1]];
        }
        let flux = rule.integrate(a, b, |x| geometry::dot(v(x), n));
        assert!((flux - ref_flux).abs() <= 1e-13, "{flux} vs {ref_flux}");
    }

    #[test]
    fn singular_map_rejected() {
        let map = AffineMap { a: [[1.0, 2.0], [2.0, 4.0]], b: [0.0, 0.0] };
        assert!(piola(&map, |x| x).is_err());
    }

    #[test]
    fn projections_of_constants_and_linears() {
        let tri5 = quadrature::triangle_rule(5).unwrap();
        assert!((l2_project_element(&REF, &tri5, |_| 4.5) - 4.5).abs() <= 1e-14);
        // mean of x over the unit right triangle is the centroid value 1/3
        assert!((l2_project_element(&REF, &tri5, |x| x[0]) - 1.0 / 3.0).abs() <= 1e-14);
        let rule = rule5();
        assert!((l2_project_face([0.0, 0.0], [1.0, 0.0], &rule, |_| 2.0) - 2.0).abs() <= 1e-15);
    }

    #[test]
    fn projection_orthogonality() {
        let tri = [[0.2, 0.1], [0.9, 0.3], [0.4, 0.8]];
        let tri5 = quadrature::triangle_rule(5).unwrap();
        let f = |x: Point| (x[0] * 3.0).sin() + x[1] * x[1];
        let mean = l2_project_element(&tri, &tri5, f);
        let resid = tri5.integrate(&tri, |x| f(x) - mean);
        assert!(resid.abs() <= 1e-13);

        let rule = rule5();
        let a = [0.1, 0.9];
        let b = [0.8, 0.4];
        let fmean = l2_project_face(a, b, &rule, f);
        let fres = rule.integrate(a, b, |x| f(x) - fmean);
        assert!(fres.abs() <= 1e-13);
    }

    #[test]
    fn commuting_defect_vanishes_for_divergence_free_field() {
        let mesh = MeshFamily::new(FamilyKind::Standard, 4).generate().unwrap();
        let d = commuting_defect(&mesh, |x| [x[1], -x[0]], |_| 0.0);
        assert!(d <= 1e-12, "defect {d}");
    }

    #[test]
    fn commuting_defect_small_for_polynomial_field() {
        let mesh = MeshFamily::new(FamilyKind::Standard, 8).generate().unwrap();
        let d = commuting_defect(&mesh, |x| [x[0] * x[0], x[1] * x[1]], |x| 2.0 * x[0] + 2.0 * x[1]);
        assert!(d <= 1e-12, "defect {d}");
    }
}
