use super::{Circle3D, Point, TriangleMesh};

/// Number of points where `circle` crosses the triangle `tri`: 0, 1 or 2.
///
/// The circle is cut with the triangle's plane and each resulting point is
/// kept when it lies inside the triangle, edges included up to `tolerance`
/// (a length). Two roots closer than `tolerance` collapse into one. A circle
/// parallel to the triangle's plane (including the coplanar case) yields 0.
pub fn circle_triangle_intersections(circle: &Circle3D, tri: &[Point; 3], tolerance: f64) -> u8 {
    let [a, b, c] = *tri;
    let face = (b - a).cross(&(c - a));
    let face_len = face.norm();
    if face_len == 0.0 {
        return 0;
    }
    let m = face / face_len;
    let n = circle.axis();

    let line_dir = n.cross(&m);
    let sin = line_dir.norm();
    if sin < 1e-12 {
        return 0;
    }
    let line_dir = line_dir / sin;
    // In-plane direction from the center perpendicular to the cut line.
    let towards_line = line_dir.cross(&n);
    let center = circle.center();
    let offset = m.dot(&(a - center)) / m.dot(&towards_line);
    let radius = circle.radius();
    if offset.abs() > radius + tolerance {
        return 0;
    }
    let foot = center + towards_line * offset;
    let half_chord = (radius * radius - offset * offset).max(0.0).sqrt();

    let inside = |p: &Point| {
        [(a, b), (b, c), (c, a)].iter().all(|(from, to)| {
            let inward = m.cross(&(to - from)).normalize();
            inward.dot(&(p - from)) >= -tolerance
        })
    };

    if 2.0 * half_chord <= tolerance {
        return inside(&foot) as u8;
    }
    let p0 = foot + line_dir * half_chord;
    let p1 = foot - line_dir * half_chord;
    inside(&p0) as u8 + inside(&p1) as u8
}

/// Sum of [`circle_triangle_intersections`] over every triangle of `mesh`.
pub fn circle_mesh_intersection_count(mesh: &TriangleMesh, circle: &Circle3D, tolerance: f64) -> u32 {
    (0..mesh.triangle_count())
        .map(|i| circle_triangle_intersections(circle, &mesh.triangle(i), tolerance) as u32)
        .sum()
}
