//! Partial views: the triangles of a mesh that a camera at a viewpoint sees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Point, TriangleMesh, Vector};

/// Default camera distance for random views, in bounding radii.
pub const DEFAULT_VIEW_DISTANCE: f64 = 1.3;

/// Where a partial view is taken from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewSpec {
    pub viewpoint: Point,
    pub seed: u64,
}

impl ViewSpec {
    /// Fails when `viewpoint` lies inside the mesh's bounding sphere.
    pub fn new(mesh: &TriangleMesh, viewpoint: Point, seed: u64) -> Result<Self> {
        let (center, radius) = mesh.bounding_sphere();
        if (viewpoint - center).norm() <= radius {
            return Err(Error::InvalidParameter(format!(
                "viewpoint ({}, {}, {}) is inside the bounding sphere",
                viewpoint.x, viewpoint.y, viewpoint.z
            )));
        }
        Ok(ViewSpec { viewpoint, seed })
    }

    /// A uniformly random direction from the bounding-sphere center, at
    /// `distance_factor` bounding radii (must exceed 1).
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn random(mesh: &TriangleMesh, seed: u64, distance_factor: f64) -> Result<Self> {
        if !(distance_factor > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "distance factor {distance_factor} must exceed 1"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let s = (1.0 - z * z).sqrt();
        let dir = Vector::new(s * phi.cos(), s * phi.sin(), z);
        let (center, radius) = mesh.bounding_sphere();
        let viewpoint = center + dir * radius.max(f64::MIN_POSITIVE) * distance_factor;
        ViewSpec::new(mesh, viewpoint, seed)
    }
}

/// A partial mesh plus its link back to the mesh it was cut from.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialView {
    pub mesh: TriangleMesh,
    /// `correspondence[i]` is the source vertex of partial vertex `i`.
    pub correspondence: Vec<u32>,
    /// Source triangle index of each partial triangle.
    pub source_triangles: Vec<u32>,
}

/// Möller-Trumbore. Returns the ray parameter of the hit, if any.
pub(crate) fn ray_triangle(origin: &Point, dir: &Vector, tri: &[Point; 3]) -> Option<f64> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(&q) * inv)
}

fn centroid(tri: &[Point; 3]) -> Point {
    Point::from((tri[0].coords + tri[1].coords + tri[2].coords) / 3.0)
}

fn front_facing(tri: &[Point; 3], viewpoint: &Point) -> bool {
    let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    n.dot(&(viewpoint - centroid(tri))) > 0.0
}

/// True when the segment from `viewpoint` to the centroid of `target` hits
/// another triangle strictly before reaching it.
pub fn is_occluded(mesh: &TriangleMesh, target: usize, viewpoint: &Point) -> bool {
    let c = centroid(&mesh.triangle(target));
    let dir = c - viewpoint;
    let len = dir.norm();
    // Hits within this distance of the centroid count as the target itself.
    let eps = 1e-9 * len.max(1.0);
    (0..mesh.triangle_count()).any(|j| {
        j != target
            && ray_triangle(viewpoint, &dir, &mesh.triangle(j))
                .is_some_and(|t| t > 0.0 && t * len < len - eps)
    })
}

/// Keeps triangles that face the viewpoint and whose centroid is not hidden
/// behind another triangle. Unreferenced vertices are dropped; normals, if
/// the source has them, are carried over.
pub fn generate_partial_view(mesh: &TriangleMesh, view: &ViewSpec) -> Result<PartialView> {
    if mesh.is_empty() {
        return Err(Error::EmptyInput("partial view needs a non-empty mesh"));
    }
    let vp = view.viewpoint;
    let keep: Vec<u32> = (0..mesh.triangle_count())
        .into_par_iter()
        .filter(|&t| front_facing(&mesh.triangle(t), &vp) && !is_occluded(mesh, t, &vp))
        .map(|t| t as u32)
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyView);
    }

    let mut remap = vec![u32::MAX; mesh.vertex_count()];
    let mut correspondence = Vec::new();
    let triangles: Vec<[u32; 3]> = keep
        .iter()
        .map(|&t| {
            mesh.triangles()[t as usize].map(|v| {
                if remap[v as usize] == u32::MAX {
                    remap[v as usize] = correspondence.len() as u32;
                    correspondence.push(v);
                }
                remap[v as usize]
            })
        })
        .collect();
    let vertices = correspondence
        .iter()
        .map(|&v| mesh.vertices()[v as usize])
        .collect();
    let mut partial = TriangleMesh::new(vertices, triangles)?;
    if let Some(normals) = mesh.normals() {
        let carried = correspondence.iter().map(|&v| normals[v as usize]).collect();
        partial = partial.with_normals(carried)?;
    }
    Ok(PartialView {
        mesh: partial,
        correspondence,
        source_triangles: keep,
    })
}

/// Reads `partialVertexIndex,completeVertexIndex` rows (header required).
pub fn read_correspondence(text: &str) -> Result<Vec<u32>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CORRESPONDENCE_HEADER => {}
        _ => return Err(Error::parse("line 1", format!("expected header `{CORRESPONDENCE_HEADER}`"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let loc = format!("line {}", i + 1);
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(&loc, "expected two comma-separated fields"))?;
        let a: usize = a.trim().parse().map_err(|e| Error::parse(&loc, format!("{e}")))?;
        let b: u32 = b.trim().parse().map_err(|e| Error::parse(&loc, format!("{e}")))?;
        if a != out.len() {
            return Err(Error::parse(&loc, format!("expected partial vertex {}, found {a}", out.len())));
        }
        out.push(b);
    }
    Ok(out)
}

pub const CORRESPONDENCE_HEADER: &str = "partialVertexIndex,completeVertexIndex";

pub fn write_correspondence(correspondence: &[u32], mut out: impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "{CORRESPONDENCE_HEADER}")?;
    for (i, c) in correspondence.iter().enumerate() {
        writeln!(out, "{i},{c}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::shapes::{box_mesh, uv_sphere};

    #[test]
    fn box_from_plus_x_keeps_one_face() {
        let mesh = box_mesh(Point::new(-1., -1., -1.), Point::new(1., 1., 1.));
        let view = ViewSpec::new(&mesh, Point::new(10., 0., 0.), 0).unwrap();
        let pv = generate_partial_view(&mesh, &view).unwrap();
        assert_eq!(pv.mesh.triangle_count(), 2);
        assert!(pv.mesh.vertices().iter().all(|p| p.x == 1.0));
    }

    #[test]
    fn box_from_corner_direction_keeps_three_faces() {
        let mesh = box_mesh(Point::new(-1., -1., -1.), Point::new(1., 1., 1.));
        let view = ViewSpec::new(&mesh, Point::new(10., 7., 5.), 0).unwrap();
        let pv = generate_partial_view(&mesh, &view).unwrap();
        assert_eq!(pv.mesh.triangle_count(), 6);
        assert_eq!(pv.mesh.vertex_count(), 7);
        for (i, &src) in pv.correspondence.iter().enumerate() {
            assert_eq!(pv.mesh.vertices()[i], mesh.vertices()[src as usize]);
        }
    }

    #[test]
    fn sphere_keeps_about_half() {
        let mesh = uv_sphere(Point::new(3., -2., 1.), 10.0, 24, 32);
        for seed in 0..5 {
            let view = ViewSpec::random(&mesh, seed, 10.0).unwrap();
            let pv = generate_partial_view(&mesh, &view).unwrap();
            let frac = pv.mesh.triangle_count() as f64 / mesh.triangle_count() as f64;
            assert!((0.4..=0.6).contains(&frac), "fraction {frac}");
        }
    }

    #[test]
    fn open_plane_facing_viewpoint_is_kept_whole() {
        let mut vertices = Vec::new();
        for y in 0..5 {
            for x in 0..5 {
                vertices.push(Point::new(x as f64, y as f64, 0.0));
            }
        }
        let mut triangles = Vec::new();
        for y in 0..4u32 {
            for x in 0..4u32 {
                let a = y * 5 + x;
                triangles.push([a, a + 1, a + 6]);
                triangles.push([a, a + 6, a + 5]);
            }
        }
        let mesh = TriangleMesh::new(vertices, triangles).unwrap();
        let view = ViewSpec::new(&mesh, Point::new(2., 2., 50.), 0).unwrap();
        let pv = generate_partial_view(&mesh, &view).unwrap();
        assert_eq!(pv.mesh.triangle_count(), 32);
        assert_eq!(pv.source_triangles, (0..32).collect::<Vec<_>>());
    }

    #[test]
    fn hidden_box_is_dropped() {
        let near = box_mesh(Point::new(5., -2., -2.), Point::new(6., 2., 2.));
        let far = box_mesh(Point::new(-1., -1., -1.), Point::new(1., 1., 1.));
        let mut vertices = far.vertices().to_vec();
        vertices.extend_from_slice(near.vertices());
        let mut triangles = far.triangles().to_vec();
        triangles.extend(near.triangles().iter().map(|t| t.map(|v| v + 8)));
        let scene = TriangleMesh::new(vertices, triangles).unwrap();
        let view = ViewSpec::new(&scene, Point::new(30., 0., 0.), 0).unwrap();
        let pv = generate_partial_view(&scene, &view).unwrap();
        assert_eq!(pv.mesh.triangle_count(), 2);
        assert!(pv.source_triangles.iter().all(|&t| t >= 12));
    }

    #[test]
    fn viewpoint_inside_bounding_sphere_rejected() {
        let mesh = box_mesh(Point::new(-1., -1., -1.), Point::new(1., 1., 1.));
        assert!(ViewSpec::new(&mesh, Point::new(0.5, 0., 0.), 0).is_err());
        assert!(ViewSpec::random(&mesh, 0, 1.0).is_err());
    }

    #[test]
    fn empty_view_is_an_error() {
        let mesh = TriangleMesh::new(
            vec![Point::new(0., 0., 0.), Point::new(1., 0., 0.), Point::new(0., 1., 0.)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let view = ViewSpec::new(&mesh, Point::new(0., 0., -5.), 0).unwrap();
        assert!(matches!(generate_partial_view(&mesh, &view), Err(Error::EmptyView)));
    }

    #[test]
    fn correspondence_csv_round_trip() {
        let mut buf = Vec::new();
        write_correspondence(&[4, 9, 2], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(read_correspondence(&text).unwrap(), [4, 9, 2]);
        assert!(read_correspondence("0,1\n").is_err());
        assert!(read_correspondence(&format!("{CORRESPONDENCE_HEADER}\n1,3\n")).is_err());
    }
}
