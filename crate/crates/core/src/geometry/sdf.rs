use super::vec3::{Aabb, Vec3};

/// Parametric mug-like object: hollow capped cylinder body standing on z = 0,
/// optional half-torus handle attached to the outer wall at `handle_azimuth`.
/// All base lengths are in meters before `global_scale` / `z_scale` are applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectSpec {
    pub body_radius: f64,
    pub body_height: f64,
    pub wall_thickness: f64,
    pub handle_present: bool,
    pub handle_tube_radius: f64,
    pub handle_loop_radius: f64,
    /// Direction of the handle in the xy plane, radians.
    pub handle_azimuth: f64,
    pub global_scale: f64,
    /// Extra stretch along z, applied before the global scale.
    pub z_scale: f64,
}

impl ObjectSpec {
    pub fn is_valid(&self) -> bool {
        self.body_radius > 0.0
            && self.body_height > 0.0
            && self.wall_thickness > 0.0
            && self.wall_thickness < self.body_radius
            && self.global_scale > 0.0
            && self.z_scale > 0.0
            && (!self.handle_present
                || (self.handle_tube_radius > 0.0
                    && self.handle_loop_radius > self.handle_tube_radius
                    && self.handle_loop_radius + self.handle_tube_radius < self.body_height / 2.0))
    }

    /// Tight axis-aligned bounding box of the scaled object.
    pub fn bbox(&self) -> Aabb {
        let r = self.body_radius;
        let mut bb = Aabb::new(Vec3::new(-r, -r, 0.0), Vec3::new(r, r, self.body_height));
        if self.handle_present {
            let reach = r + self.handle_loop_radius + self.handle_tube_radius;
            let zc = self.body_height / 2.0;
            let half_h = self.handle_loop_radius + self.handle_tube_radius;
            let (s, c) = self.handle_azimuth.sin_cos();
            let u = Vec3::new(c, s, 0.0);
            let v = Vec3::new(-s, c, 0.0);
            // The half torus sweeps a ∈ [0, reach-r], w ∈ [-tr, tr] in the (u, v) frame.
            let mut hmin = Vec3::new(f64::INFINITY, f64::INFINITY, zc - half_h);
            let mut hmax = Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, zc + half_h);
            for &a in &[0.0, reach - r] {
                for &w in &[-self.handle_tube_radius, self.handle_tube_radius] {
                    let p = u * (r + a) + v * w;
                    hmin = hmin.min_elem(Vec3::new(p.x, p.y, hmin.z));
                    hmax = hmax.max_elem(Vec3::new(p.x, p.y, hmax.z));
                }
            }
            bb = bb.union(&Aabb::new(hmin, hmax));
        }
        let scale_xy = self.global_scale;
        let scale_z = self.global_scale * self.z_scale;
        Aabb::new(
            Vec3::new(bb.min.x * scale_xy, bb.min.y * scale_xy, bb.min.z * scale_z),
            Vec3::new(bb.max.x * scale_xy, bb.max.y * scale_xy, bb.max.z * scale_z),
        )
    }

    pub fn max_extent(&self) -> f64 {
        self.bbox().max_extent()
    }
}

/// Exact distance to a solid capped cylinder with axis z, radius `r`, caps at z0/z1.
fn sd_capped_cylinder(p: Vec3, r: f64, z0: f64, z1: f64) -> f64 {
    let dr = (p.x * p.x + p.y * p.y).sqrt() - r;
    let dz = (z0 - p.z).max(p.z - z1);
    let outside = (dr.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt();
    outside + dr.max(dz).min(0.0)
}

fn body_sdf_base(spec: &ObjectSpec, p: Vec3) -> f64 {
    let outer = sd_capped_cylinder(p, spec.body_radius, 0.0, spec.body_height);
    // The cavity extends above the rim so the subtraction opens the top.
    let cavity = sd_capped_cylinder(
        p,
        spec.body_radius - spec.wall_thickness,
        spec.wall_thickness,
        spec.body_height + spec.body_radius,
    );
    outer.max(-cavity)
}

fn handle_sdf_base(spec: &ObjectSpec, p: Vec3) -> f64 {
    let (s, c) = spec.handle_azimuth.sin_cos();
    let u = Vec3::new(c, s, 0.0);
    let v = Vec3::new(-s, c, 0.0);
    let center = u * spec.body_radius;
    let zc = spec.body_height / 2.0;
    let d = p - center;
    let a = d.dot(u);
    let w = d.dot(v);
    let b = p.z - zc;
    let ring = ((a * a + b * b).sqrt() - spec.handle_loop_radius).hypot(w);
    let torus = ring - spec.handle_tube_radius;
    // 180-degree arc: keep the half facing away from the body.
    torus.max(-a)
}

fn scale_in(spec: &ObjectSpec, p: Vec3) -> (Vec3, f64) {
    let g = spec.global_scale;
    let zs = spec.z_scale;
    let q = Vec3::new(p.x / g, p.y / g, p.z / (g * zs));
    (q, g * zs.min(1.0))
}

/// Signed distance to the full object (body min-union handle).
/// Negative inside material. Exact for the body shell at unit scales; a
/// sign-preserving Lipschitz bound under anisotropic z scaling and near the
/// handle arc clip.
pub fn sdf_object(spec: &ObjectSpec, p: Vec3) -> f64 {
    let (q, f) = scale_in(spec, p);
    let mut d = body_sdf_base(spec, q);
    if spec.handle_present {
        d = d.min(handle_sdf_base(spec, q));
    }
    d * f
}

/// Signed distance to the body shell alone.
pub fn sdf_body(spec: &ObjectSpec, p: Vec3) -> f64 {
    let (q, f) = scale_in(spec, p);
    body_sdf_base(spec, q) * f
}

/// Signed distance to the handle alone; +inf when the spec has no handle.
pub fn sdf_handle(spec: &ObjectSpec, p: Vec3) -> f64 {
    if !spec.handle_present {
        return f64::INFINITY;
    }
    let (q, f) = scale_in(spec, p);
    handle_sdf_base(spec, q) * f
}

/// Central-difference SDF gradient, normalized. Used for surface normals.
pub fn sdf_normal(spec: &ObjectSpec, p: Vec3, h: f64) -> Vec3 {
    let dx = sdf_object(spec, p + Vec3::new(h, 0.0, 0.0)) - sdf_object(spec, p - Vec3::new(h, 0.0, 0.0));
    let dy = sdf_object(spec, p + Vec3::new(0.0, h, 0.0)) - sdf_object(spec, p - Vec3::new(0.0, h, 0.0));
    let dz = sdf_object(spec, p + Vec3::new(0.0, 0.0, h)) - sdf_object(spec, p - Vec3::new(0.0, 0.0, h));
    Vec3::new(dx, dy, dz).normalized()
}
