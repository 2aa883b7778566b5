//! Triangle meshes, oriented points and the circle/surface intersection
//! kernel that QUICCI generation is built on.

mod intersect;
mod io;

pub use intersect::{circle_mesh_intersection_count, circle_triangle_intersections};
pub use io::{load_mesh, parse_obj, parse_ply, write_obj, MeshFormat};

use nalgebra::{Isometry3, Point3, Vector3};

use crate::error::{Error, Result};

pub type Point = Point3<f64>;
pub type Vector = Vector3<f64>;

const UNIT_TOLERANCE: f64 = 1e-6;

/// An indexed triangle mesh in raw model units.
///
/// Construction drops zero-area faces; vertex order is never changed.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    triangles: Vec<[u32; 3]>,
    /// `None` entries are vertices without any incident triangle.
    normals: Option<Vec<Option<Vector>>>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(bad) = vertices.iter().position(|v| !v.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {bad} is not finite")));
        }
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&idx| idx as usize >= n) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {i} references a vertex out of range (vertex count {n})"
                )));
            }
        }
        let triangles = triangles
            .into_iter()
            .filter(|t| !is_degenerate(&vertices, t))
            .collect();
        Ok(TriangleMesh {
            vertices,
            triangles,
            normals: None,
        })
    }

    pub fn empty() -> Self {
        TriangleMesh {
            vertices: Vec::new(),
            triangles: Vec::new(),
            normals: None,
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> Option<&[Option<Vector>]> {
        self.normals.as_deref()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, index: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[index];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Attaches per-vertex normals. Every present normal must be unit length.
    pub fn with_normals(mut self, normals: Vec<Option<Vector>>) -> Result<Self> {
        if normals.len() != self.vertices.len() {
            return Err(Error::InvalidMesh(format!(
                "{} normals for {} vertices",
                normals.len(),
                self.vertices.len()
            )));
        }
        if let Some(i) = normals
            .iter()
            .position(|n| n.is_some_and(|n| (n.norm() - 1.0).abs() > UNIT_TOLERANCE))
        {
            return Err(Error::InvalidMesh(format!("normal {i} is not unit length")));
        }
        self.normals = Some(normals);
        Ok(self)
    }

    /// The oriented point at `vertex`, or `None` when the vertex has no normal.
    pub fn oriented_point(&self, vertex: usize) -> Option<OrientedPoint> {
        let normal = (*self.normals.as_ref()?.get(vertex)?)?;
        Some(OrientedPoint {
            position: self.vertices[vertex],
            normal,
        })
    }

    /// Applies a rigid transform to positions and normals.
    pub fn transformed(&self, iso: &Isometry3<f64>) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|p| iso * p).collect(),
            triangles: self.triangles.clone(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| ns.iter().map(|n| n.map(|n| iso * n)).collect()),
        }
    }

    /// Center and radius of a sphere enclosing all vertices (centered on the
    /// vertex centroid, not minimal).
    pub fn bounding_sphere(&self) -> (Point, f64) {
        if self.vertices.is_empty() {
            return (Point::origin(), 0.0);
        }
        let sum = self
            .vertices
            .iter()
            .fold(Vector::zeros(), |acc, p| acc + p.coords);
        let center = Point::from(sum / self.vertices.len() as f64);
        let radius = self
            .vertices
            .iter()
            .map(|p| (p - center).norm())
            .fold(0.0, f64::max);
        (center, radius)
    }
}

fn is_degenerate(vertices: &[Point], t: &[u32; 3]) -> bool {
    if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
        return true;
    }
    let [a, b, c] = t.map(|i| vertices[i as usize]);
    (b - a).cross(&(c - a)).norm_squared() == 0.0
}

/// Area-weighted vertex normals. Vertices with no incident triangle get no
/// normal and therefore produce no descriptor.
pub fn compute_vertex_normals(mesh: &TriangleMesh) -> TriangleMesh {
    let mut acc = vec![Vector::zeros(); mesh.vertices.len()];
    let mut touched = vec![false; mesh.vertices.len()];
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| mesh.vertices[i as usize]);
        // |cross| is twice the area, so summing raw cross products weights by area.
        let face = (b - a).cross(&(c - a));
        for &i in t {
            acc[i as usize] += face;
            touched[i as usize] = true;
        }
    }
    let normals = acc
        .into_iter()
        .zip(touched)
        .map(|(n, used)| {
            let len = n.norm();
            (used && len > 0.0).then(|| n / len)
        })
        .collect();
    TriangleMesh {
        normals: Some(normals),
        ..mesh.clone()
    }
}

/// A surface position with its unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedPoint {
    pub position: Point,
    pub normal: Vector,
}

impl OrientedPoint {
    /// Normalizes `normal`; fails for a zero or non-finite normal.
    pub fn new(position: Point, normal: Vector) -> Result<Self> {
        let len = normal.norm();
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::InvalidParameter("normal must be non-zero".into()));
        }
        Ok(OrientedPoint {
            position,
            normal: normal / len,
        })
    }

    pub fn transformed(&self, iso: &Isometry3<f64>) -> OrientedPoint {
        OrientedPoint {
            position: iso * self.position,
            normal: iso * self.normal,
        }
    }
}

/// A circle lying in the plane through `center` perpendicular to `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle3D {
    center: Point,
    radius: f64,
    axis: Vector,
}

impl Circle3D {
    pub fn new(center: Point, radius: f64, axis: Vector) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "circle radius must be positive, got {radius}"
            )));
        }
        let len = axis.norm();
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::InvalidParameter("circle axis must be non-zero".into()));
        }
        Ok(Circle3D {
            center,
            radius,
            axis: axis / len,
        })
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn axis(&self) -> Vector {
        self.axis
    }
}

/// An orthonormal basis `(u, v)` spanning the plane perpendicular to `n`.
pub(crate) fn plane_basis(n: &Vector) -> (Vector, Vector) {
    let helper = if n.x.abs() < 0.9 {
        Vector::x()
    } else {
        Vector::y()
    };
    let u = n.cross(&helper).normalize();
    let v = n.cross(&u);
    (u, v)
}
