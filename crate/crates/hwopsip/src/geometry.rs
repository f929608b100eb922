//! Per-element anisotropy metrics.
//!
//! A triangle is characterised by relabelling its vertices so that the edge
//! p2-p3 is the longest (length h_T), with h1 = |p1-p2| >= h2 = |p1-p3|. The
//! unit vectors r1, r2 point from the apex p1 along those two edges, and the
//! anisotropy parameter is H_T = h1*h2*h_T/area. A mesh family is semi-regular
//! when H_T/h_T stays bounded, which is equivalent to the maximum-angle
//! condition; for right triangles H_T/h_T = 2 exactly.

use thiserror::Error;

use crate::mesh::Mesh;

pub type Point = [f64; 2];

/// Triangles with |area| at or below this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-14;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("degenerate triangle: |area| = {0:.3e} <= {DEGENERACY_TOL:.0e}")]
    DegenerateTriangle(f64),
}

/// Anisotropy record for one triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    /// Diameter h_T (longest edge).
    pub h_t: f64,
    /// Characterised edge lengths, h2 <= h1 <= h_T.
    pub h1: f64,
    pub h2: f64,
    /// Unit vectors from the apex along the h1 and h2 edges.
    pub r1: Point,
    pub r2: Point,
    /// Anisotropy parameter H_T = h1*h2*h_T/area.
    pub big_h: f64,
    /// Altitude over each local face (indexed opposite the input vertices).
    pub ell: [f64; 3],
    /// Largest interior angle, in (0, pi).
    pub max_angle: f64,
}

impl ElementGeometry {
    /// Semi-regularity ratio H_T/h_T (>= 2, with equality for right triangles).
    pub fn ratio(&self) -> f64 {
        self.big_h / self.h_t
    }
}

pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Signed area; positive for counter-clockwise vertex order.
pub fn signed_area(tri: &[Point; 3]) -> f64 {
    0.5 * cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]))
}

/// Barycentric coordinates of `x` with respect to `tri`.
pub fn barycentric(tri: &[Point; 3], x: Point) -> [f64; 3] {
    let two_a = 2.0 * signed_area(tri);
    let mut lam = [0.0; 3];
    for i in 0..3 {
        let a = tri[(i + 1) % 3];
        let b = tri[(i + 2) % 3];
        lam[i] = cross(sub(b, a), sub(x, a)) / two_a;
    }
    lam
}

/// Gradients of the barycentric coordinate functions (constant over the triangle).
pub fn barycentric_gradients(tri: &[Point; 3]) -> [Point; 3] {
    let two_a = 2.0 * signed_area(tri);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let a = tri[(i + 1) % 3];
        let b = tri[(i + 2) % 3];
        g[i] = [(a[1] - b[1]) / two_a, (b[0] - a[0]) / two_a];
    }
    g
}

/// Altitude of the triangle over local face `k` (the face opposite vertex `k`):
/// ell_{T,F} = 2*area/|F|.
pub fn ell_of(tri: &[Point; 3], k: usize) -> f64 {
    let len = norm(sub(tri[(k + 2) % 3], tri[(k + 1) % 3]));
    2.0 * signed_area(tri).abs() / len
}

/// Characterise a triangle given in any vertex order.
///
/// Ties in edge lengths are broken towards the lexicographically smallest
/// sorted local vertex-index pair, so the result is deterministic.
pub fn characterize(tri: &[Point; 3]) -> Result<ElementGeometry, GeometryError> {
    let area = signed_area(tri).abs();
    if area <= DEGENERACY_TOL {
        return Err(GeometryError::DegenerateTriangle(area));
    }

    // edge k is opposite vertex k; sorted index pairs order as k = 2, 1, 0
    let lengths = [
        norm(sub(tri[2], tri[1])),
        norm(sub(tri[2], tri[0])),
        norm(sub(tri[1], tri[0])),
    ];
    let mut apex = 2;
    for k in [1, 0] {
        if lengths[k] > lengths[apex] {
            apex = k;
        }
    }
    let h_t = lengths[apex];

    let u = (apex + 1) % 3;
    let v = (apex + 2) % 3;
    let du = norm(sub(tri[u], tri[apex]));
    let dv = norm(sub(tri[v], tri[apex]));
    let (p2, p3, h1, h2) = if du > dv || (du == dv && u < v) {
        (u, v, du, dv)
    } else {
        (v, u, dv, du)
    };
    let r1 = sub(tri[p2], tri[apex]);
    let r2 = sub(tri[p3], tri[apex]);

    let ell = [ell_of(tri, 0), ell_of(tri, 1), ell_of(tri, 2)];
    let max_angle = (0..3)
        .map(|i| {
            let a = sub(tri[(i + 1) % 3], tri[i]);
            let b = sub(tri[(i + 2) % 3], tri[i]);
            (dot(a, b) / (norm(a) * norm(b))).clamp(-1.0, 1.0).acos()
        })
        .fold(0.0, f64::max);

    Ok(ElementGeometry {
        area,
        h_t,
        h1,
        h2,
        r1: [r1[0] / h1, r1[1] / h1],
        r2: [r2[0] / h2, r2[1] / h2],
        big_h: h1 * h2 * h_t / area,
        ell,
        max_angle,
    })
}

/// Semi-regularity diagnostics over a whole mesh.
#[derive(Debug, Clone)]
pub struct SemiRegularity {
    pub max_ratio: f64,
    pub ratios: Vec<f64>,
}

pub fn semi_regularity(mesh: &Mesh) -> SemiRegularity {
    let ratios: Vec<f64> = (0..mesh.n_elements())
        .map(|t| {
            characterize(&mesh.triangle_vertices(t))
                .expect("mesh contains a degenerate triangle")
                .ratio()
        })
        .collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    SemiRegularity { max_ratio, ratios }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn unit_right_triangle() {
        let g = characterize(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!((g.h_t - SQRT2).abs() <= 1e-15);
        assert_eq!(g.h1, 1.0);
        assert_eq!(g.h2, 1.0);
        assert!((g.big_h - 2.0 * SQRT2).abs() <= 1e-14);
        assert!((g.ratio() - 2.0).abs() <= 1e-14);
        assert!((g.max_angle - std::f64::consts::FRAC_PI_2).abs() <= 1e-14);
    }

    #[test]
    fn thin_right_triangle_stays_semi_regular() {
        let eps = 1e-3;
        let g = characterize(&[[0.0, 0.0], [1.0, 0.0], [0.0, eps]]).unwrap();
        assert!((g.h_t - (1.0 + eps * eps).sqrt()).abs() <= 1e-15);
        assert_eq!(g.h1, 1.0);
        assert_eq!(g.h2, eps);
        assert!((g.ratio() - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn cap_triangle_flagged_as_irregular() {
        // nearly-degenerate cap: max angle close to pi, ratio ~ 500
        let eps = 1e-3;
        let g = characterize(&[[0.0, 0.0], [1.0, 0.0], [0.5, eps]]).unwrap();
        let h12 = (0.25 + eps * eps).sqrt();
        let expected = h12 * h12 / (0.5 * eps);
        assert!((g.ratio() - expected).abs() / expected <= 1e-12);
        assert!(g.ratio() > 400.0);
        assert!(g.max_angle > 3.0);
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let r = characterize(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        assert!(matches!(r, Err(GeometryError::DegenerateTriangle(_))));
    }

    #[test]
    fn altitudes_of_unit_right_triangle() {
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        // face 0 is the hypotenuse, faces 1 and 2 are the legs
        assert!((ell_of(&tri, 0) - 1.0 / SQRT2).abs() <= 1e-15);
        assert!((ell_of(&tri, 1) - 1.0).abs() <= 1e-15);
        assert!((ell_of(&tri, 2) - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn area_consistent_with_characterised_edges() {
        // area = h1*h2*sin(angle at apex)/2
        let tri = [[0.1, 0.2], [0.9, 0.4], [0.3, 0.8]];
        let g = characterize(&tri).unwrap();
        let sin_apex = cross(g.r1, g.r2).abs();
        assert!((g.area - 0.5 * g.h1 * g.h2 * sin_apex).abs() <= 1e-12);
    }

    fn arb_triangle() -> impl Strategy<Value = [Point; 3]> {
        // skewed triangles with a wide range of aspect ratios, area kept
        // above the degeneracy tolerance
        (
            -1.0..1.0f64,
            -1.0..1.0f64,
            1e-3..1.0f64,
            -1.0..1.0f64,
            1e-4..1.0f64,
        )
            .prop_map(|(x0, y0, a, bx, by)| {
                [[x0, y0], [x0 + a, y0], [x0 + bx, y0 + by]]
            })
    }

    proptest! {
        #[test]
        fn characterization_is_permutation_invariant(tri in arb_triangle(), perm in 0usize..6) {
            let perms = [[0,1,2],[0,2,1],[1,0,2],[1,2,0],[2,0,1],[2,1,0]];
            let p = perms[perm];
            let shuffled = [tri[p[0]], tri[p[1]], tri[p[2]]];
            let a = characterize(&tri).unwrap();
            let b = characterize(&shuffled).unwrap();
            prop_assert!((a.h_t - b.h_t).abs() <= 1e-12 * a.h_t);
            prop_assert!((a.h1 - b.h1).abs() <= 1e-12 * a.h_t);
            prop_assert!((a.h2 - b.h2).abs() <= 1e-12 * a.h_t);
            prop_assert!((a.big_h - b.big_h).abs() <= 1e-9 * a.big_h);
            prop_assert!((a.max_angle - b.max_angle).abs() <= 1e-9);
        }

        #[test]
        fn altitude_identity_and_bounds(tri in arb_triangle()) {
            let g = characterize(&tri).unwrap();
            // sum of ell*|F| over the three faces equals 6*area
            let mut acc = 0.0;
            for k in 0..3 {
                let len = norm(sub(tri[(k + 2) % 3], tri[(k + 1) % 3]));
                let ell = ell_of(&tri, k);
                prop_assert!(ell <= g.h_t * (1.0 + 1e-12));
                acc += ell * len;
            }
            prop_assert!((acc - 6.0 * g.area).abs() <= 1e-12 * 6.0 * g.area);
            // right-triangle-style lower bound
            prop_assert!(g.ratio() >= 2.0 - 1e-12);
            prop_assert!(g.h2 <= g.h1 && g.h1 <= g.h_t + 1e-15);
            let unit = |v: Point| (norm(v) - 1.0).abs() <= 1e-12;
            prop_assert!(unit(g.r1) && unit(g.r2));
        }
    }
}
