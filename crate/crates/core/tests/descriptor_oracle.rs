use nalgebra::{Isometry3, Translation3, UnitQuaternion};
use proptest::prelude::*;
use quicci_core::datagen::{generate_partial_view, synthetic_object_set, ViewSpec};
use quicci_core::descriptor::{
    compute_intersection_counts, compute_modified_quicci, compute_quicci, counts_to_descriptor, layer_circles,
    DescriptorParams, IntersectionCounts,
};
use quicci_core::geometry::{circle_mesh_intersection_count, compute_vertex_normals, OrientedPoint, Point, TriangleMesh, Vector};

/// Counts by testing every circle against every triangle.
fn brute_force_counts(mesh: &TriangleMesh, point: &OrientedPoint, params: &DescriptorParams) -> IntersectionCounts {
    let counts = layer_circles(point, params)
        .iter()
        .map(|c| circle_mesh_intersection_count(mesh, c, params.tolerance()))
        .collect();
    IntersectionCounts::from_counts(params.resolution(), counts)
}

fn random_mesh(coords: Vec<[f64; 9]>) -> TriangleMesh {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for t in coords {
        let base = vertices.len() as u32;
        for k in 0..3 {
            vertices.push(Point::new(t[3 * k], t[3 * k + 1], t[3 * k + 2]));
        }
        triangles.push([base, base + 1, base + 2]);
    }
    TriangleMesh::new(vertices, triangles).unwrap()
}

fn coord() -> impl Strategy<Value = f64> {
    -12.0..12.0f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_counts_match_brute_force(
        tris in prop::collection::vec(prop::array::uniform9(coord()), 1..25),
        nx in -1.0..1.0f64, ny in -1.0..1.0f64, nz in 0.2..1.0f64,
        px in -3.0..3.0f64, py in -3.0..3.0f64, pz in -3.0..3.0f64,
    ) {
        let mesh = random_mesh(tris);
        let params = DescriptorParams::new(16, 10.0, 1).unwrap();
        let point = OrientedPoint::new(Point::new(px, py, pz), Vector::new(nx, ny, nz)).unwrap();
        let fast = compute_intersection_counts(&mesh, &point, &params);
        let slow = brute_force_counts(&mesh, &point, &params);
        prop_assert_eq!(fast.as_slice(), slow.as_slice());
    }

    #[test]
    fn modified_is_subset_of_original(
        tris in prop::collection::vec(prop::array::uniform9(coord()), 1..25),
        nz in 0.2..1.0f64,
    ) {
        let mesh = random_mesh(tris);
        let params = DescriptorParams::new(16, 10.0, 1).unwrap();
        let point = OrientedPoint::new(Point::origin(), Vector::new(0.3, -0.2, nz)).unwrap();
        let original = compute_quicci(&mesh, &point, &params);
        let modified = compute_modified_quicci(&mesh, &point, &params);
        prop_assert!(modified.is_subset_of(&original).unwrap());
    }

    #[test]
    fn rigid_motion_leaves_counts_unchanged(
        tris in prop::collection::vec(prop::array::uniform9(coord()), 1..15),
        axis in prop::array::uniform3(-1.0..1.0f64),
        angle in 0.0..std::f64::consts::TAU,
        shift in prop::array::uniform3(-50.0..50.0f64),
    ) {
        let mesh = random_mesh(tris);
        let params = DescriptorParams::new(8, 10.0, 1).unwrap();
        let point = OrientedPoint::new(Point::new(0.5, 0.25, -0.5), Vector::new(0.1, 0.2, 1.0)).unwrap();
        let rot = UnitQuaternion::from_scaled_axis(Vector::from(axis).normalize() * angle);
        let iso = Isometry3::from_parts(Translation3::from(Vector::from(shift)), rot);
        let before = compute_intersection_counts(&mesh, &point, &params);
        let after = compute_intersection_counts(&mesh.transformed(&iso), &point.transformed(&iso), &params);
        prop_assert_eq!(before.as_slice(), after.as_slice());
    }
}

#[test]
fn vessel_descriptors_match_brute_force() {
    let (_, mesh) = synthetic_object_set(2, 11).remove(1);
    let mesh = compute_vertex_normals(&mesh);
    let params = DescriptorParams::new(16, 100.0, 1).unwrap();
    for v in (0..mesh.vertex_count()).step_by(97) {
        let point = mesh.oriented_point(v).unwrap();
        let fast = compute_intersection_counts(&mesh, &point, &params);
        let slow = brute_force_counts(&mesh, &point, &params);
        assert_eq!(fast.as_slice(), slow.as_slice(), "vertex {v}");
    }
}

#[test]
fn partial_view_descriptors_match_brute_force() {
    let (_, mesh) = synthetic_object_set(1, 5).remove(0);
    let mesh = compute_vertex_normals(&mesh);
    let view = ViewSpec::random(&mesh, 3, 1.5).unwrap();
    let partial = generate_partial_view(&mesh, &view).unwrap().mesh;
    let params = DescriptorParams::new(16, 100.0, 1).unwrap();
    for v in (0..partial.vertex_count()).step_by(41) {
        let point = partial.oriented_point(v).unwrap();
        let slow = brute_force_counts(&partial, &point, &params);
        let fast = compute_intersection_counts(&partial, &point, &params);
        assert_eq!(fast.as_slice(), slow.as_slice(), "vertex {v}");
        let original = counts_to_descriptor(&slow, 1);
        let modified = counts_to_descriptor(&slow, 2);
        assert!(modified.is_subset_of(&original).unwrap());
    }
}
