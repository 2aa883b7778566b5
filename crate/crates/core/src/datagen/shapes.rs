//! Closed test meshes: boxes, spheres and pottery-like solids of revolution.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Point, TriangleMesh};

/// Axis-aligned box, 12 outward-facing triangles.
pub fn box_mesh(lo: Point, hi: Point) -> TriangleMesh {
    let corner = |x: bool, y: bool, z: bool| {
        Point::new(
            if x { hi.x } else { lo.x },
            if y { hi.y } else { lo.y },
            if z { hi.z } else { lo.z },
        )
    };
    let vertices = vec![
        corner(false, false, false),
        corner(true, false, false),
        corner(true, true, false),
        corner(false, true, false),
        corner(false, false, true),
        corner(true, false, true),
        corner(true, true, true),
        corner(false, true, true),
    ];
    let quads: [[u32; 4]; 6] = [
        [0, 3, 2, 1],
        [4, 5, 6, 7],
        [0, 1, 5, 4],
        [2, 3, 7, 6],
        [1, 2, 6, 5],
        [0, 4, 7, 3],
    ];
    let triangles = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriangleMesh::new(vertices, triangles).expect("box is valid")
}

/// Latitude/longitude sphere with poles, outward winding.
pub fn uv_sphere(center: Point, radius: f64, rings: usize, segments: usize) -> TriangleMesh {
    let profile: Vec<(f64, f64)> = (1..rings)
        .map(|i| {
            let phi = PI * i as f64 / rings as f64;
            (radius * phi.sin(), -radius * phi.cos())
        })
        .collect();
    let mesh = revolve(&profile, segments, -radius, radius, |_, _| 1.0);
    let shifted = mesh
        .vertices()
        .iter()
        .map(|p| Point::new(p.x + center.x, p.y + center.y, p.z + center.z))
        .collect();
    TriangleMesh::new(shifted, mesh.triangles().to_vec()).expect("sphere is valid")
}

/// Revolves `profile` (pairs of radius and height, bottom to top) around the
/// z axis and closes both ends with pole vertices at `bottom` and `top`.
/// `scale(z, theta)` multiplies the radius at height `z` and angle `theta`.
///
/// The profile may run up one side and back down (a hollow vessel): the
/// surface orientation follows the profile direction.
fn revolve(
    profile: &[(f64, f64)],
    segments: usize,
    bottom: f64,
    top: f64,
    scale: impl Fn(f64, f64) -> f64,
) -> TriangleMesh {
    let rings = profile.len();
    let mut vertices = Vec::with_capacity(rings * segments + 2);
    for &(r, z) in profile {
        for s in 0..segments {
            let theta = TAU * s as f64 / segments as f64;
            let rr = r * scale(z, theta);
            vertices.push(Point::new(rr * theta.cos(), rr * theta.sin(), z));
        }
    }
    let bottom_pole = vertices.len() as u32;
    vertices.push(Point::new(0.0, 0.0, bottom));
    let top_pole = vertices.len() as u32;
    vertices.push(Point::new(0.0, 0.0, top));

    let idx = |ring: usize, seg: usize| (ring * segments + seg % segments) as u32;
    let mut triangles = Vec::with_capacity(2 * rings * segments);
    for s in 0..segments {
        triangles.push([bottom_pole, idx(0, s + 1), idx(0, s)]);
    }
    for ring in 0..rings - 1 {
        for s in 0..segments {
            let (a, b) = (idx(ring, s), idx(ring, s + 1));
            let (c, d) = (idx(ring + 1, s + 1), idx(ring + 1, s));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    for s in 0..segments {
        triangles.push([top_pole, idx(rings - 1, s), idx(rings - 1, s + 1)]);
    }
    TriangleMesh::new(vertices, triangles).expect("revolved mesh is valid")
}

/// Shape parameters of one synthetic vessel.
#[derive(Debug, Clone, PartialEq)]
struct VesselShape {
    height: f64,
    base_radius: f64,
    belly: f64,
    belly_at: f64,
    belly_width: f64,
    neck: f64,
    neck_at: f64,
    ripple: f64,
    ripple_count: f64,
    ripple_phase: f64,
    lobes: u32,
    lobe_depth: f64,
    lobe_phase: f64,
    twist: f64,
    /// Wall thickness of an open, hollow vessel; `None` for a closed solid.
    wall: Option<f64>,
}

impl VesselShape {
    fn sample(index: usize, rng: &mut ChaCha8Rng) -> Self {
        // Index-driven spacing keeps profiles apart; the RNG adds jitter.
        let golden = 0.618_033_988_749_895;
        let spread = |k: f64| (index as f64 * golden * k).fract();
        VesselShape {
            height: 320.0 + 160.0 * spread(1.0) + rng.gen_range(-10.0..10.0),
            base_radius: 70.0 + 40.0 * spread(2.0) + rng.gen_range(-5.0..5.0),
            belly: 0.15 + 0.45 * spread(3.0),
            belly_at: 0.2 + 0.5 * spread(5.0) + rng.gen_range(-0.03..0.03),
            belly_width: 0.12 + 0.15 * spread(7.0),
            neck: 0.1 + 0.35 * spread(11.0),
            neck_at: 0.75 + 0.15 * spread(13.0),
            ripple: [0.0, 0.03, 0.07, 0.12][index % 4] + rng.gen_range(0.0..0.02),
            ripple_count: 2.0 + (index % 5) as f64 * 1.5 + rng.gen_range(0.0..0.5),
            ripple_phase: rng.gen_range(0.0..TAU),
            lobes: [0, 2, 3, 4, 5][(index / 2) % 5],
            lobe_depth: 0.04 + 0.08 * spread(17.0),
            lobe_phase: rng.gen_range(0.0..TAU),
            twist: rng.gen_range(-1.0..1.0),
            wall: (!index.is_multiple_of(3)).then(|| 3.0 + 5.0 * spread(19.0)),
        }
    }

    fn radius(&self, t: f64) -> f64 {
        let gauss = |center: f64, width: f64| (-((t - center) / width).powi(2)).exp();
        let shape = 0.7 + self.belly * gauss(self.belly_at, self.belly_width)
            - self.neck * gauss(self.neck_at, 0.08)
            + self.ripple * (TAU * self.ripple_count * t + self.ripple_phase).sin();
        // Round off the foot (and the lip of a closed solid) so the caps stay small.
        let t_end = if self.wall.is_some() { t.min(0.5) } else { t };
        let ends = (PI * t_end.clamp(0.0, 1.0)).sin().powf(0.35).max(0.25);
        self.base_radius * shape.max(0.2) * ends
    }

    fn angular_scale(&self, z: f64, theta: f64) -> f64 {
        if self.lobes == 0 {
            return 1.0;
        }
        let t = z / self.height;
        1.0 + self.lobe_depth * (self.lobes as f64 * theta + self.lobe_phase + self.twist * t * TAU).cos()
    }

    fn mesh(&self) -> TriangleMesh {
        const RINGS: usize = 40;
        const SEGMENTS: usize = 48;
        let mut profile: Vec<(f64, f64)> = (0..RINGS)
            .map(|i| {
                let t = (i as f64 + 0.5) / RINGS as f64;
                (self.radius(t), t * self.height)
            })
            .collect();
        let scale = |z, theta| self.angular_scale(z, theta);
        let Some(wall) = self.wall else {
            return revolve(&profile, SEGMENTS, 0.0, self.height, scale);
        };
        // Over the rim and down the inside to a floor above the foot ring.
        let rim = profile[RINGS - 1].1;
        let floor = profile[0].1 + wall;
        for j in 0..RINGS {
            let z = rim - (rim - floor) * j as f64 / (RINGS - 1) as f64;
            let outer = self.radius(z / self.height);
            profile.push(((outer - wall).max(0.35 * outer), z));
        }
        revolve(&profile, SEGMENTS, 0.0, floor, scale)
    }
}

/// `count` distinct closed vessel meshes, deterministic in `seed`.
///
/// Two in three are open thin-walled pots, the rest closed solids. Each is
/// a few hundred units tall, so a support radius of 100 sees a sizeable but
/// local neighbourhood.
pub fn synthetic_object_set(count: usize, seed: u64) -> Vec<(String, TriangleMesh)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let shape = VesselShape::sample(i, &mut rng);
            (format!("vessel_{i:03}"), shape.mesh())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    /// Every undirected edge used by exactly two triangles, in opposite directions.
    fn is_watertight(mesh: &TriangleMesh) -> bool {
        let mut directed: HashMap<(u32, u32), usize> = HashMap::new();
        for t in mesh.triangles() {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *directed.entry((a, b)).or_default() += 1;
            }
        }
        directed
            .iter()
            .all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
    }

    #[test]
    fn primitives_are_watertight() {
        assert!(is_watertight(&box_mesh(Point::origin(), Point::new(1., 2., 3.))));
        assert!(is_watertight(&uv_sphere(Point::origin(), 5.0, 12, 16)));
    }

    #[test]
    fn vessels_are_closed_sized_and_distinct() {
        let set = synthetic_object_set(10, 7);
        assert_eq!(set.len(), 10);
        for (name, mesh) in &set {
            assert!(is_watertight(mesh), "{name} is not watertight");
            assert!((1000..=5000).contains(&mesh.vertex_count()));
            assert_eq!(mesh.triangle_count(), 2 * mesh.vertex_count() - 4);
        }
        for i in 0..set.len() {
            for j in i + 1..set.len() {
                assert_ne!(set[i].1.vertices(), set[j].1.vertices());
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(synthetic_object_set(3, 42), synthetic_object_set(3, 42));
        assert_ne!(synthetic_object_set(3, 42)[0].1, synthetic_object_set(3, 43)[0].1);
    }
}
