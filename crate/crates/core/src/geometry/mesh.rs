use super::transform::RigidTransform;
use super::vec3::{Aabb, Vec3};
use crate::rng::rng_for;
use rand::Rng;

/// Indexed triangle mesh.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_area(&self, t: [usize; 3]) -> f64 {
        let [a, b, c] = t;
        (self.vertices[b] - self.vertices[a])
            .cross(self.vertices[c] - self.vertices[a])
            .norm()
            * 0.5
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|&t| self.triangle_area(t)).sum()
    }

    pub fn face_normal(&self, t: [usize; 3]) -> Vec3 {
        let [a, b, c] = t;
        (self.vertices[b] - self.vertices[a])
            .cross(self.vertices[c] - self.vertices[a])
            .normalized()
    }

    /// Enclosed volume by the divergence theorem; sign follows the winding.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                self.vertices[a].dot(self.vertices[b].cross(self.vertices[c])) / 6.0
            })
            .sum()
    }

    pub fn bbox(&self) -> Option<Aabb> {
        let mut it = self.vertices.iter();
        let first = *it.next()?;
        let mut bb = Aabb::new(first, first);
        for &v in it {
            bb.min = bb.min.min_elem(v);
            bb.max = bb.max.max_elem(v);
        }
        Some(bb)
    }

    pub fn transformed(&self, t: &RigidTransform) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&v| t.apply(v)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    pub fn scaled(&self, s: f64, about: Vec3) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&v| about + (v - about) * s).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Drops triangles with area <= 1e-12 and unreferenced vertices.
    pub fn cleaned(&self) -> TriangleMesh {
        let kept: Vec<[usize; 3]> = self
            .triangles
            .iter()
            .copied()
            .filter(|&t| self.triangle_area(t) > 1e-12)
            .collect();
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        let mut triangles = Vec::with_capacity(kept.len());
        for t in kept {
            let mut nt = [0usize; 3];
            for (k, &vi) in t.iter().enumerate() {
                if remap[vi] == usize::MAX {
                    remap[vi] = vertices.len();
                    vertices.push(self.vertices[vi]);
                }
                nt[k] = remap[vi];
            }
            triangles.push(nt);
        }
        TriangleMesh { vertices, triangles }
    }

    /// Area-weighted surface samples with face normals, deterministic per seed.
    pub fn sample_surface(&self, n: usize, seed: u64) -> Vec<(Vec3, Vec3)> {
        assert!(!self.is_empty());
        let mut cumulative = Vec::with_capacity(self.triangles.len());
        let mut total = 0.0;
        for &t in &self.triangles {
            total += self.triangle_area(t);
            cumulative.push(total);
        }
        let mut rng = rng_for(seed, 0x3e5);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let r = rng.gen_range(0.0..total);
            let ti = cumulative.partition_point(|&c| c < r).min(self.triangles.len() - 1);
            let [a, b, c] = self.triangles[ti];
            let (mut u, mut v) = (rng.gen::<f64>(), rng.gen::<f64>());
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            let p = self.vertices[a]
                + (self.vertices[b] - self.vertices[a]) * u
                + (self.vertices[c] - self.vertices[a]) * v;
            out.push((p, self.face_normal(self.triangles[ti])));
        }
        out
    }

    /// Every triangle index must reference a vertex.
    pub fn indices_in_range(&self) -> bool {
        self.triangles.iter().all(|t| t.iter().all(|&i| i < self.vertices.len()))
    }
}
