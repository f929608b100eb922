//! Numerical integration rules on reference triangles and segments.
//!
//! Triangle rules are symmetric rules stored in barycentric coordinates with
//! weights summing to the reference area 1/2; segment rules are Gauss-Legendre
//! rules on [0,1] with weights summing to 1. Rule coefficients come from
//! standard tabulations and are checked against closed-form monomial integrals
//! by the exactness tests rather than trusted.

use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuadratureError {
    #[error("no triangle rule of degree {0} (supported: 1, 2, 3, 5, 7)")]
    UnsupportedTriangleDegree(usize),
    #[error("no segment rule of degree {0} (supported: 1..=9)")]
    UnsupportedSegmentDegree(usize),
}

/// Quadrature rule on the reference triangle, in barycentric coordinates.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Gauss-Legendre rule on the reference segment [0,1].
#[derive(Debug, Clone)]
pub struct SegmentRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Symmetric rule exact for polynomials up to `degree` on the triangle.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule, QuadratureError> {
    let (points, weights): (Vec<[f64; 3]>, Vec<f64>) = match degree {
        1 => (vec![[1.0 / 3.0; 3]], vec![1.0]),
        2 => {
            let mut p = Vec::new();
            push_orbit3(&mut p, 2.0 / 3.0);
            (p, vec![1.0 / 3.0; 3])
        }
        3 => {
            // 4-point Strang rule; the centroid weight is negative.
            let mut p = vec![[1.0 / 3.0; 3]];
            push_orbit3(&mut p, 0.6);
            (p, vec![-27.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0])
        }
        5 => {
            let s15 = 15.0_f64.sqrt();
            let w1 = (155.0 - s15) / 1200.0;
            let w2 = (155.0 + s15) / 1200.0;
            let mut p = vec![[1.0 / 3.0; 3]];
            push_orbit3(&mut p, 1.0 - 2.0 * (6.0 - s15) / 21.0);
            push_orbit3(&mut p, 1.0 - 2.0 * (6.0 + s15) / 21.0);
            (p, vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2])
        }
        7 => {
            // 13-point rule; constants refined against the moment equations.
            let w1 = 0.17561525743320474;
            let w2 = 0.053347235608838742;
            let w3 = 0.077113760890256735;
            let mut p = vec![[1.0 / 3.0; 3]];
            push_orbit3(&mut p, 0.47930806784192266);
            push_orbit3(&mut p, 0.86973979419556806);
            push_orbit6(&mut p, 0.63844418856980934, 0.31286549600487450);
            let mut w = vec![-0.14957004446767085, w1, w1, w1, w2, w2, w2];
            w.extend([w3; 6]);
            (p, w)
        }
        d => return Err(QuadratureError::UnsupportedTriangleDegree(d)),
    };
    // stored weights sum to the reference area 1/2
    let weights = weights.into_iter().map(|w| 0.5 * w).collect();
    Ok(TriangleRule { points, weights, degree })
}

fn push_orbit3(points: &mut Vec<[f64; 3]>, a: f64) {
    let b = 0.5 * (1.0 - a);
    points.push([a, b, b]);
    points.push([b, a, b]);
    points.push([b, b, a]);
}

fn push_orbit6(points: &mut Vec<[f64; 3]>, a: f64, b: f64) {
    let c = 1.0 - a - b;
    points.push([a, b, c]);
    points.push([a, c, b]);
    points.push([b, a, c]);
    points.push([b, c, a]);
    points.push([c, a, b]);
    points.push([c, b, a]);
}

/// Gauss-Legendre rule on [0,1] exact for polynomials up to `degree`.
pub fn segment_rule(degree: usize) -> Result<SegmentRule, QuadratureError> {
    if degree == 0 || degree > 9 {
        return Err(QuadratureError::UnsupportedSegmentDegree(degree));
    }
    let n = degree / 2 + 1;
    // nodes/weights on [-1,1] in closed form, mapped to [0,1]
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let t = 1.0 / 3.0_f64.sqrt();
            (vec![-t, t], vec![1.0, 1.0])
        }
        3 => {
            let t = (3.0 / 5.0_f64).sqrt();
            (vec![-t, 0.0, t], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let s = (6.0 / 5.0_f64).sqrt();
            let t1 = ((3.0 - 2.0 * s) / 7.0).sqrt();
            let t2 = ((3.0 + 2.0 * s) / 7.0).sqrt();
            let w1 = (18.0 + 30.0_f64.sqrt()) / 36.0;
            let w2 = (18.0 - 30.0_f64.sqrt()) / 36.0;
            (vec![-t2, -t1, t1, t2], vec![w2, w1, w1, w2])
        }
        5 => {
            let s = (10.0 / 7.0_f64).sqrt();
            let t1 = (5.0 - 2.0 * s).sqrt() / 3.0;
            let t2 = (5.0 + 2.0 * s).sqrt() / 3.0;
            let w1 = (322.0 + 13.0 * 70.0_f64.sqrt()) / 900.0;
            let w2 = (322.0 - 13.0 * 70.0_f64.sqrt()) / 900.0;
            (vec![-t2, -t1, 0.0, t1, t2], vec![w2, w1, 128.0 / 225.0, w1, w2])
        }
        _ => unreachable!(),
    };
    Ok(SegmentRule {
        points: nodes.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        weights: weights.iter().map(|w| 0.5 * w).collect(),
        degree,
    })
}

impl TriangleRule {
    /// Integrate `f` over the physical triangle with the given vertices.
    pub fn integrate(&self, tri: &[Point; 3], f: impl Fn(Point) -> f64) -> f64 {
        let jac = 2.0 * crate::geometry::signed_area(tri).abs();
        let mut acc = 0.0;
        for (lam, w) in self.points.iter().zip(&self.weights) {
            acc += w * f(bary_to_point(tri, lam));
        }
        acc * jac
    }

    /// Integrate with access to the barycentric coordinates of each point.
    pub fn integrate_bary(&self, tri: &[Point; 3], f: impl Fn(Point, &[f64; 3]) -> f64) -> f64 {
        let jac = 2.0 * crate::geometry::signed_area(tri).abs();
        let mut acc = 0.0;
        for (lam, w) in self.points.iter().zip(&self.weights) {
            acc += w * f(bary_to_point(tri, lam), lam);
        }
        acc * jac
    }
}

pub fn bary_to_point(tri: &[Point; 3], lam: &[f64; 3]) -> Point {
    [
        lam[0] * tri[0][0] + lam[1] * tri[1][0] + lam[2] * tri[2][0],
        lam[0] * tri[0][1] + lam[1] * tri[1][1] + lam[2] * tri[2][1],
    ]
}

impl SegmentRule {
    /// Integrate `f` along the segment from `a` to `b` (arc-length measure).
    pub fn integrate(&self, a: Point, b: Point, f: impl Fn(Point) -> f64) -> f64 {
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        self.integrate_param(a, b, f) * len
    }

    /// Mean value of `f` along the segment (weights sum to 1).
    pub fn mean(&self, a: Point, b: Point, f: impl Fn(Point) -> f64) -> f64 {
        self.integrate_param(a, b, f)
    }

    fn integrate_param(&self, a: Point, b: Point, f: impl Fn(Point) -> f64) -> f64 {
        let mut acc = 0.0;
        for (t, w) in self.points.iter().zip(&self.weights) {
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            acc += w * f(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
    fn monomial_exact(a: u32, b: u32) -> f64 {
        let fact = |k: u32| (1..=k as u64).product::<u64>() as f64;
        fact(a) * fact(b) / fact(a + b + 2)
    }

    const REF: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    #[test]
    fn triangle_exactness_all_supported_degrees() {
        for degree in [1usize, 2, 3, 5, 7] {
            let rule = triangle_rule(degree).unwrap();
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let got = rule.integrate(&REF, |p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    let exact = monomial_exact(a, b);
                    let rel = ((got - exact) / exact).abs();
                    assert!(
                        rel <= 1e-13,
                        "degree {degree} rule fails on x^{a} y^{b}: got {got}, want {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn triangle_weights_sum_to_reference_area() {
        for degree in [1usize, 2, 3, 5, 7] {
            let rule = triangle_rule(degree).unwrap();
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 0.5).abs() <= 1e-14, "degree {degree}: {sum}");
        }
    }

    #[test]
    fn degree_five_rule_has_seven_points() {
        assert_eq!(triangle_rule(5).unwrap().points.len(), 7);
    }

    #[test]
    fn degree_one_rule_is_centroid() {
        let rule = triangle_rule(1).unwrap();
        assert_eq!(rule.points, vec![[1.0 / 3.0; 3]]);
        assert_eq!(rule.weights, vec![0.5]);
    }

    #[test]
    fn unsupported_triangle_degree_rejected() {
        assert_eq!(
            triangle_rule(4).unwrap_err(),
            QuadratureError::UnsupportedTriangleDegree(4)
        );
        assert!(triangle_rule(9).is_err());
    }

    #[test]
    fn segment_midpoint_rule() {
        let rule = segment_rule(1).unwrap();
        assert_eq!(rule.points, vec![0.5]);
        assert_eq!(rule.weights, vec![1.0]);
    }

    #[test]
    fn segment_gauss_cubic_and_quintic() {
        // two-point rule: int_0^1 t^3 dt = 1/4
        let r3 = segment_rule(3).unwrap();
        assert_eq!(r3.points.len(), 2);
        let got = r3.integrate([0.0, 0.0], [1.0, 0.0], |p| p[0].powi(3));
        assert!((got - 0.25).abs() <= 1e-15);
        // three-point rule: int_0^1 t^5 dt = 1/6
        let r5 = segment_rule(5).unwrap();
        assert_eq!(r5.points.len(), 3);
        let got = r5.integrate([0.0, 0.0], [1.0, 0.0], |p| p[0].powi(5));
        assert!((got - 1.0 / 6.0).abs() <= 1e-15);
    }

    #[test]
    fn segment_exactness_through_degree_nine() {
        for degree in 1..=9usize {
            let rule = segment_rule(degree).unwrap();
            for k in 0..=degree as u32 {
                let got = rule.integrate([0.0, 0.0], [1.0, 0.0], |p| p[0].powi(k as i32));
                let exact = 1.0 / (k as f64 + 1.0);
                assert!(
                    (got - exact).abs() <= 1e-14,
                    "degree {degree} rule fails on t^{k}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn segment_degree_out_of_range() {
        assert!(segment_rule(0).is_err());
        assert!(segment_rule(10).is_err());
    }

    #[test]
    fn integrate_constant_gives_area() {
        let tri = [[0.2, 0.1], [0.9, 0.3], [0.4, 0.8]];
        let area = crate::geometry::signed_area(&tri).abs();
        let rule = triangle_rule(5).unwrap();
        let got = rule.integrate(&tri, |_| 1.0);
        assert!((got - area).abs() <= 1e-15);
    }

    #[test]
    fn integrate_linear_over_unit_right_triangle() {
        let rule = triangle_rule(5).unwrap();
        let got = rule.integrate(&REF, |p| p[0]);
        assert!((got - 1.0 / 6.0).abs() <= 1e-15);
    }

    #[test]
    fn boundary_layer_integrand_stable_between_degrees() {
        // exp(-128 x2) on a tile of size 1/32: degree 5 and 7 agree to 1e-3 rel
        let s = 1.0 / 32.0;
        let tri = [[0.0, 0.0], [s, 0.0], [s, s]];
        let f = |p: Point| (-128.0 * p[1]).exp();
        let v5 = triangle_rule(5).unwrap().integrate(&tri, f);
        let v7 = triangle_rule(7).unwrap().integrate(&tri, f);
        assert!(((v5 - v7) / v7).abs() <= 1e-3, "{v5} vs {v7}");
    }
}
