use rayon::prelude::*;

use super::{BitDescriptor, DescriptorParams};
use crate::geometry::{compute_vertex_normals, plane_basis, Circle3D, OrientedPoint, Point, TriangleMesh};

/// Height of layer `row` above the oriented point, along its normal.
///
/// Layers are spaced `2R/N` apart and symmetric about the point.
pub fn layer_height(row: usize, params: &DescriptorParams) -> f64 {
    let n = params.resolution() as f64;
    (row as f64 - (n - 1.0) / 2.0) * (2.0 * params.support_radius() / n)
}

/// Radius of circle `col` in every layer; the outermost circle has the
/// support radius.
pub fn circle_radius(col: usize, params: &DescriptorParams) -> f64 {
    (col + 1) as f64 * (params.support_radius() / params.resolution() as f64)
}

/// The `N x N` circle grid around `point`, row-major.
pub fn layer_circles(point: &OrientedPoint, params: &DescriptorParams) -> Vec<Circle3D> {
    let n = params.resolution() as usize;
    let mut circles = Vec::with_capacity(n * n);
    for row in 0..n {
        let center = point.position + point.normal * layer_height(row, params);
        for col in 0..n {
            circles.push(
                Circle3D::new(center, circle_radius(col, params), point.normal)
                    .expect("layer circles are valid by construction"),
            );
        }
    }
    circles
}

/// Per-circle surface intersection counts, row-major like a descriptor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionCounts {
    resolution: u8,
    counts: Vec<u32>,
}

impl IntersectionCounts {
    pub fn from_counts(resolution: u8, counts: Vec<u32>) -> Self {
        assert_eq!(counts.len(), resolution as usize * resolution as usize);
        IntersectionCounts { resolution, counts }
    }

    pub fn resolution(&self) -> u8 {
        self.resolution
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.counts[row * self.resolution as usize + col]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.counts
    }
}

/// Sets bit `(r, c)` when `|count(r, c) - count(r, c - 1)| >= delta_threshold`,
/// with an implicit zero count left of column 0.
pub fn counts_to_descriptor(counts: &IntersectionCounts, delta_threshold: u8) -> BitDescriptor {
    let n = counts.resolution as usize;
    let mut d = BitDescriptor::zeros(counts.resolution);
    for row in 0..n {
        let mut previous = 0u32;
        for col in 0..n {
            let current = counts.get(row, col);
            if current.abs_diff(previous) >= delta_threshold as u32 {
                d.set_bit(row * n + col, true);
            }
            previous = current;
        }
    }
    d
}

/// Precomputed per-mesh state for generating many descriptors.
///
/// Counts are computed by slicing each nearby triangle with every layer
/// plane it crosses and measuring the radial extent of the resulting
/// segment; circle `c` of that layer meets the segment once per monotone
/// piece of the radial distance that passes through its radius. This gives
/// the same counts as intersecting every circle with every triangle.
pub struct DescriptorGenerator<'a> {
    mesh: &'a TriangleMesh,
    params: DescriptorParams,
    bounds: Vec<(Point, f64)>,
    radii: Vec<f64>,
    heights: Vec<f64>,
}

impl<'a> DescriptorGenerator<'a> {
    pub fn new(mesh: &'a TriangleMesh, params: DescriptorParams) -> Self {
        let bounds = (0..mesh.triangle_count())
            .map(|i| {
                let [a, b, c] = mesh.triangle(i);
                let centroid = Point::from((a.coords + b.coords + c.coords) / 3.0);
                let r = [a, b, c]
                    .iter()
                    .map(|p| (p - centroid).norm())
                    .fold(0.0, f64::max);
                (centroid, r)
            })
            .collect();
        let n = params.resolution() as usize;
        DescriptorGenerator {
            mesh,
            params,
            bounds,
            radii: (0..n).map(|c| circle_radius(c, &params)).collect(),
            heights: (0..n).map(|r| layer_height(r, &params)).collect(),
        }
    }

    pub fn params(&self) -> &DescriptorParams {
        &self.params
    }

    pub fn counts(&self, point: &OrientedPoint) -> IntersectionCounts {
        let n = self.params.resolution() as usize;
        // Farthest circle point sits at height R(N-1)/N and radius R.
        let reach = self.params.support_radius() * std::f64::consts::SQRT_2;
        let (u, v) = plane_basis(&point.normal);
        let w = point.normal;
        let mut diff = vec![0i32; n * (n + 1)];

        for (ti, (centroid, r)) in self.bounds.iter().enumerate() {
            let limit = reach + r;
            if (centroid - point.position).norm_squared() > limit * limit {
                continue;
            }
            let local = self.mesh.triangle(ti).map(|p| {
                let d = p - point.position;
                [d.dot(&u), d.dot(&v), d.dot(&w)]
            });
            let zmin = local.iter().map(|p| p[2]).fold(f64::INFINITY, f64::min);
            let zmax = local.iter().map(|p| p[2]).fold(f64::NEG_INFINITY, f64::max);
            for (row, &h) in self.heights.iter().enumerate() {
                if h < zmin || h > zmax {
                    continue;
                }
                if let Some((a, b)) = slice_triangle(&local, h) {
                    self.add_segment(&mut diff[row * (n + 1)..(row + 1) * (n + 1)], a, b);
                }
            }
        }

        let mut counts = vec![0u32; n * n];
        for row in 0..n {
            let mut running = 0i32;
            for col in 0..n {
                running += diff[row * (n + 1) + col];
                counts[row * n + col] = running as u32;
            }
        }
        IntersectionCounts {
            resolution: self.params.resolution(),
            counts,
        }
    }

    /// Adds the crossings of segment `a..b` (in layer-plane coordinates
    /// centred on the axis) with every circle of one layer.
    fn add_segment(&self, diff: &mut [i32], a: [f64; 2], b: [f64; 2]) {
        let d = [b[0] - a[0], b[1] - a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = if len2 > 0.0 {
            (-(a[0] * d[0] + a[1] * d[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let closest = [a[0] + t * d[0], a[1] + t * d[1]];
        let r_min = closest[0].hypot(closest[1]);
        let r_a = a[0].hypot(a[1]);
        let r_b = b[0].hypot(b[1]);
        // Radial distance falls from r_a to r_min, then rises to r_b. The
        // minimum itself belongs to the first piece only.
        self.add_range(diff, r_min, r_a, true);
        self.add_range(diff, r_min, r_b, false);
    }

    /// +1 to every circle whose radius lies in `[lo, hi]` (`(lo, hi]` when
    /// `include_lo` is false).
    fn add_range(&self, diff: &mut [i32], lo: f64, hi: f64, include_lo: bool) {
        let first = if include_lo {
            self.radii.partition_point(|&r| r < lo)
        } else {
            self.radii.partition_point(|&r| r <= lo)
        };
        let end = self.radii.partition_point(|&r| r <= hi);
        if first < end {
            diff[first] += 1;
            diff[end] -= 1;
        }
    }

    pub fn descriptor(&self, point: &OrientedPoint) -> BitDescriptor {
        counts_to_descriptor(&self.counts(point), self.params.delta_threshold())
    }
}

/// Intersection of a triangle (local coordinates, z along the normal) with
/// the plane `z = h`. A vertex counts as above when `z >= h`, so a triangle
/// lying in the plane yields nothing.
fn slice_triangle(tri: &[[f64; 3]; 3], h: f64) -> Option<([f64; 2], [f64; 2])> {
    let above = tri.map(|p| p[2] >= h);
    let n_above = above.iter().filter(|&&x| x).count();
    if n_above == 0 || n_above == 3 {
        return None;
    }
    let mut points = [[0.0; 2]; 2];
    let mut k = 0;
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        if above[i] != above[j] {
            let (p, q) = (tri[i], tri[j]);
            let t = (h - p[2]) / (q[2] - p[2]);
            points[k] = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
            k += 1;
        }
    }
    debug_assert_eq!(k, 2);
    Some((points[0], points[1]))
}

/// Intersection counts for every circle around `point`.
pub fn compute_intersection_counts(
    mesh: &TriangleMesh,
    point: &OrientedPoint,
    params: &DescriptorParams,
) -> IntersectionCounts {
    DescriptorGenerator::new(mesh, *params).counts(point)
}

/// Descriptor with the delta threshold taken from `params`.
pub fn compute_descriptor(
    mesh: &TriangleMesh,
    point: &OrientedPoint,
    params: &DescriptorParams,
) -> BitDescriptor {
    counts_to_descriptor(
        &compute_intersection_counts(mesh, point, params),
        params.delta_threshold(),
    )
}

/// Original QUICCI: every count change sets a bit.
pub fn compute_quicci(mesh: &TriangleMesh, point: &OrientedPoint, params: &DescriptorParams) -> BitDescriptor {
    counts_to_descriptor(&compute_intersection_counts(mesh, point, params), 1)
}

/// Modified QUICCI for partial queries: only count changes of at least 2
/// set a bit, which suppresses single crossings caused by open boundaries.
pub fn compute_modified_quicci(
    mesh: &TriangleMesh,
    point: &OrientedPoint,
    params: &DescriptorParams,
) -> BitDescriptor {
    counts_to_descriptor(&compute_intersection_counts(mesh, point, params), 2)
}

/// One descriptor per vertex that has a normal, in vertex order. Normals are
/// computed first when the mesh has none.
pub fn descriptors_for_object(mesh: &TriangleMesh, params: &DescriptorParams) -> Vec<(u32, BitDescriptor)> {
    let with_normals;
    let mesh = if mesh.normals().is_some() {
        mesh
    } else {
        with_normals = compute_vertex_normals(mesh);
        &with_normals
    };
    let generator = DescriptorGenerator::new(mesh, *params);
    (0..mesh.vertex_count())
        .into_par_iter()
        .filter_map(|v| {
            let point = mesh.oriented_point(v)?;
            Some((v as u32, generator.descriptor(&point)))
        })
        .collect()
}
