//! Structured triangulations of the unit square and their connectivity.
//!
//! Four grid families share the same x1 spacing i/N and differ in the x2
//! grading: uniform, Shishkin (piecewise uniform with transition point
//! tau = 4*delta*|ln N|), cosine-graded and quadratic-graded. Every grid cell
//! is split by the diagonal from its lower-left to its upper-right corner,
//! lower triangle first, cells in row-major order.
//!
//! Face normals are fixed: the outward normal of the lower-indexed incident
//! element, which on the boundary is the outward normal of the domain.

use std::collections::HashMap;
use std::io::{self, Write};

use thiserror::Error;

use crate::geometry::{self, Point};

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("division count must be an even integer >= 2, got {0}")]
    InvalidDivision(usize),
    #[error("delta must be positive, got {0}")]
    InvalidDelta(f64),
    #[error("Shishkin transition point tau = {0} must be < 1 (reduce delta or N)")]
    TransitionTooLarge(f64),
    #[error("triangle {0} has non-positive signed area")]
    NonPositiveArea(usize),
    #[error("face shared by more than two triangles (vertices {0} and {1})")]
    NonConformal(usize, usize),
}

/// Mesh grading in the x2 direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Standard,
    Shishkin,
    CosineGraded,
    QuadraticGraded,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] = [
        FamilyKind::Standard,
        FamilyKind::Shishkin,
        FamilyKind::CosineGraded,
        FamilyKind::QuadraticGraded,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FamilyKind::Standard => "standard",
            FamilyKind::Shishkin => "shishkin",
            FamilyKind::CosineGraded => "cosine",
            FamilyKind::QuadraticGraded => "quadratic",
        }
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(FamilyKind::Standard),
            "shishkin" => Ok(FamilyKind::Shishkin),
            "cosine" => Ok(FamilyKind::CosineGraded),
            "quadratic" => Ok(FamilyKind::QuadraticGraded),
            other => Err(format!(
                "unknown mesh family '{other}' (expected standard, shishkin, cosine or quadratic)"
            )),
        }
    }
}

/// A mesh family instance: grading, division count and (for Shishkin) delta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshFamily {
    pub kind: FamilyKind,
    pub n: usize,
    pub delta: f64,
}

pub const DEFAULT_DELTA: f64 = 1.0 / 128.0;

impl MeshFamily {
    pub fn new(kind: FamilyKind, n: usize) -> Self {
        MeshFamily { kind, n, delta: DEFAULT_DELTA }
    }

    pub fn with_delta(kind: FamilyKind, n: usize, delta: f64) -> Self {
        MeshFamily { kind, n, delta }
    }

    /// Shishkin transition point tau = 4*delta*|ln N|.
    pub fn tau(&self) -> f64 {
        4.0 * self.delta * (self.n as f64).ln().abs()
    }

    /// Grid coordinates (x1 then x2), each of length N+1.
    pub fn grid_points(&self) -> Result<(Vec<f64>, Vec<f64>), MeshError> {
        let n = self.n;
        if n < 2 || n % 2 != 0 {
            return Err(MeshError::InvalidDivision(n));
        }
        if self.delta <= 0.0 {
            return Err(MeshError::InvalidDelta(self.delta));
        }
        let nf = n as f64;
        let x1: Vec<f64> = (0..=n).map(|i| i as f64 / nf).collect();
        let x2: Vec<f64> = match self.kind {
            FamilyKind::Standard => x1.clone(),
            FamilyKind::Shishkin => {
                let tau = self.tau();
                if tau >= 1.0 {
                    return Err(MeshError::TransitionTooLarge(tau));
                }
                (0..=n)
                    .map(|i| {
                        if i <= n / 2 {
                            tau * (2.0 / nf) * i as f64
                        } else {
                            tau + (1.0 - tau) * (2.0 / nf) * (i - n / 2) as f64
                        }
                    })
                    .collect()
            }
            FamilyKind::CosineGraded => (0..=n)
                .map(|i| 0.5 * (1.0 - (i as f64 * std::f64::consts::PI / nf).cos()))
                .collect(),
            FamilyKind::QuadraticGraded => (0..=n).map(|i| (i as f64 / nf).powi(2)).collect(),
        };
        Ok((x1, x2))
    }

    pub fn generate(&self) -> Result<Mesh, MeshError> {
        let (x1, x2) = self.grid_points()?;
        let n = self.n;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([x1[i], x2[j]]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let ll = j * (n + 1) + i;
                let lr = ll + 1;
                let ul = ll + n + 1;
                let ur = ul + 1;
                triangles.push([ll, lr, ur]);
                triangles.push([ll, ur, ul]);
            }
        }
        Mesh::from_cells(vertices, triangles)
    }
}

/// An oriented mesh face (edge).
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Endpoint vertex indices, lower index first.
    pub vertices: [usize; 2],
    /// Incident element with the lower index.
    pub left: usize,
    /// Second incident element; `None` on the boundary.
    pub right: Option<usize>,
    /// Unit normal: outward for `left` (so it points from left to right).
    pub normal: Point,
    pub length: f64,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

/// Conformal triangulation with face connectivity.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub faces: Vec<Face>,
    /// Per element, the global face index opposite each local vertex.
    pub element_faces: Vec<[usize; 3]>,
    /// Orientation sign n_{T,F}: +1 where the face normal is outward for T.
    pub face_signs: Vec<[i8; 3]>,
}

impl Mesh {
    /// Build connectivity from raw cells. Triangles must be counter-clockwise.
    pub fn from_cells(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Mesh, MeshError> {
        for (t, tri) in triangles.iter().enumerate() {
            let p = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            if geometry::signed_area(&p) <= 0.0 {
                return Err(MeshError::NonPositiveArea(t));
            }
        }
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut faces: Vec<Face> = Vec::new();
        let mut element_faces = vec![[usize::MAX; 3]; triangles.len()];
        let mut face_signs = vec![[0i8; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for loc in 0..3 {
                let a = tri[(loc + 1) % 3];
                let b = tri[(loc + 2) % 3];
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    None => {
                        let pa = vertices[a];
                        let pb = vertices[b];
                        let e = geometry::sub(pb, pa);
                        let len = geometry::norm(e);
                        // outward normal of a ccw triangle on the edge a -> b
                        let normal = [e[1] / len, -e[0] / len];
                        lookup.insert(key, faces.len());
                        element_faces[t][loc] = faces.len();
                        face_signs[t][loc] = 1;
                        faces.push(Face {
                            vertices: [key.0, key.1],
                            left: t,
                            right: None,
                            normal,
                            length: len,
                        });
                    }
                    Some(&fi) => {
                        if faces[fi].right.is_some() {
                            return Err(MeshError::NonConformal(key.0, key.1));
                        }
                        faces[fi].right = Some(t);
                        element_faces[t][loc] = fi;
                        face_signs[t][loc] = -1;
                    }
                }
            }
        }
        Ok(Mesh { vertices, triangles, faces, element_faces, face_signs })
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn triangle_vertices(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    /// Endpoints of local face `loc` of element `t`, in local orientation.
    pub fn face_endpoints(&self, t: usize, loc: usize) -> (Point, Point) {
        let tri = self.triangles[t];
        (self.vertices[tri[(loc + 1) % 3]], self.vertices[tri[(loc + 2) % 3]])
    }

    /// Largest triangle diameter h = max_T diam(T).
    pub fn size(&self) -> f64 {
        self.faces.iter().map(|f| f.length).fold(0.0, f64::max)
    }

    pub fn boundary_faces(&self) -> Vec<usize> {
        (0..self.faces.len()).filter(|&f| self.faces[f].is_boundary()).collect()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements())
            .map(|t| geometry::signed_area(&self.triangle_vertices(t)))
            .sum()
    }

    /// Plain-text export: `Ne Nv Nf` header, then vertex, triangle and face
    /// lines (`v0 v1 leftT rightT`, rightT = -1 on the boundary).
    pub fn write_text(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "{} {} {}", self.n_elements(), self.vertices.len(), self.n_faces())?;
        for v in &self.vertices {
            writeln!(out, "{} {}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        for f in &self.faces {
            let right = f.right.map_or(-1, |r| r as i64);
            writeln!(out, "{} {} {} {}", f.vertices[0], f.vertices[1], f.left, right)?;
        }
        Ok(())
    }
}
