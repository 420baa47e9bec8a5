//! Parallel-jaw grasp candidates on a completed mesh, uncertain-region
//! filtering, and a collision-rate proxy against the ground-truth object.

use crate::geometry::{sdf_object, ObjectSpec, Region3, RigidTransform, TriangleMesh, Vec3};
use crate::rng::rng_for;
use rand::Rng;

/// Probe pitch for swept-volume collision checks, meters.
pub const PROBE_PITCH: f64 = 0.005;

/// Parallel-jaw gripper geometry. The gripper frame has x along the closing
/// axis, z along the approach, origin at the contact midpoint; fingers close
/// on (+-jaw_span/2, 0, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripperDims {
    /// Finger box extents (x, y, z); the long side runs along the approach.
    pub finger: [f64; 3],
    /// Palm box extents; the long side bridges the fingers along x.
    pub palm: [f64; 3],
    pub jaw_span: f64,
}

impl Default for GripperDims {
    fn default() -> Self {
        GripperDims {
            finger: [0.02, 0.02, 0.06],
            palm: [0.08, 0.03, 0.03],
            jaw_span: 0.08,
        }
    }
}

/// Axis-aligned box in the gripper frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripperBox {
    pub center: Vec3,
    pub half: Vec3,
}

impl GripperBox {
    pub fn contains(&self, p: Vec3) -> bool {
        let d = p - self.center;
        d.x.abs() <= self.half.x && d.y.abs() <= self.half.y && d.z.abs() <= self.half.z
    }
}

impl GripperDims {
    /// Swept volume as three boxes: two fingers just outside the jaw opening
    /// (tips reaching slightly past the contact plane) and the palm behind
    /// them on the approach axis.
    pub fn boxes(&self) -> [GripperBox; 3] {
        let fh = Vec3::new(self.finger[0] / 2.0, self.finger[1] / 2.0, self.finger[2] / 2.0);
        let fx = self.jaw_span / 2.0 + fh.x;
        // Fingers span z in [-0.05, 0.01] at default dims: contacts sit near
        // the tips, palm backs onto the finger roots.
        let fz = -fh.z + 0.01;
        let ph = Vec3::new(self.palm[0] / 2.0, self.palm[1] / 2.0, self.palm[2] / 2.0);
        let pz = fz - fh.z - ph.z;
        [
            GripperBox { center: Vec3::new(-fx, 0.0, fz), half: fh },
            GripperBox { center: Vec3::new(fx, 0.0, fz), half: fh },
            GripperBox { center: Vec3::new(0.0, 0.0, pz), half: ph },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspCandidate {
    /// Gripper frame to world.
    pub pose: RigidTransform,
    pub jaw_span: f64,
    /// Contact points in world coordinates.
    pub contacts: [Vec3; 2],
}

/// Orthonormal frame with the given x axis; z picks up the `approach` hint
/// projected off x when that is non-degenerate.
fn frame_from_axis(x: Vec3, approach: Vec3) -> RigidTransform {
    let xn = x.normalized();
    let mut z = approach - xn * approach.dot(xn);
    if z.norm() < 1e-8 {
        let r = if xn.z.abs() < 0.9 {
            Vec3::new(0.0, 0.0, 1.0)
        } else {
            Vec3::new(1.0, 0.0, 0.0)
        };
        z = r - xn * r.dot(xn);
    }
    let zn = z.normalized();
    let yn = zn.cross(xn);
    RigidTransform::from_parts(
        [
            [xn.x, yn.x, zn.x],
            [xn.y, yn.y, zn.y],
            [xn.z, yn.z, zn.z],
        ],
        Vec3::ZERO,
    )
}

/// Antipodal candidate sampling: surface point pairs with opposing normals
/// (dot < -0.8) that fit inside the jaw span. The approach axis follows the
/// bisector of the two inward contact normals. Deterministic given the seed;
/// may return fewer than `n` (or none) when the mesh offers no valid pairs.
pub fn sample_grasps(
    mesh: &TriangleMesh,
    n: usize,
    dims: &GripperDims,
    seed: u64,
) -> Vec<GraspCandidate> {
    assert!(n > 0);
    if mesh.is_empty() {
        return Vec::new();
    }
    let surf = mesh.sample_surface((4 * n).max(256), seed);
    let mut rng = rng_for(seed, 0x96a5);
    let mut out = Vec::new();
    for _ in 0..200 * n {
        if out.len() >= n {
            break;
        }
        let (p1, n1) = surf[rng.gen_range(0..surf.len())];
        let (p2, n2) = surf[rng.gen_range(0..surf.len())];
        if n1.dot(n2) >= -0.8 {
            continue;
        }
        let d = p2 - p1;
        let dist = d.norm();
        if dist < 1e-5 || dist > dims.jaw_span {
            continue;
        }
        // Closing axis must actually oppose the surface normals.
        let axis = d / dist;
        if axis.dot(n1) > -0.5 || axis.dot(n2) < 0.5 {
            continue;
        }
        let approach = (n1 + n2) * -0.5;
        let mut pose = frame_from_axis(axis, approach);
        pose.translation = (p1 + p2) * 0.5;
        out.push(GraspCandidate { pose, jaw_span: dims.jaw_span, contacts: [p1, p2] });
    }
    out
}

/// True when any swept-volume box contains at least one region voxel center;
/// a center exactly on a box face counts.
pub fn intersects_region(g: &GraspCandidate, region: &Region3, dims: &GripperDims) -> bool {
    let inv = g.pose.inverse();
    let boxes = dims.boxes();
    let [nx, ny, nz] = region.lattice.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if !region.contains_index(x, y, z) {
                    continue;
                }
                let p = inv.apply(region.lattice.point(x, y, z));
                if boxes.iter().any(|b| b.contains(p)) {
                    return true;
                }
            }
        }
    }
    false
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<GraspCandidate>,
    pub removed: usize,
    /// Every candidate was blocked: grasping failure.
    pub all_blocked: bool,
}

/// Keeps the candidates whose swept volume avoids the region, in order.
pub fn filter_grasps(
    candidates: &[GraspCandidate],
    region: &Region3,
    dims: &GripperDims,
) -> FilterOutcome {
    let kept: Vec<GraspCandidate> = candidates
        .iter()
        .filter(|g| !intersects_region(g, region, dims))
        .copied()
        .collect();
    let removed = candidates.len() - kept.len();
    FilterOutcome { all_blocked: kept.is_empty() && !candidates.is_empty(), kept, removed }
}

fn candidate_collides(
    g: &GraspCandidate,
    spec: &ObjectSpec,
    obj_to_world: &RigidTransform,
    dims: &GripperDims,
    pitch: f64,
) -> bool {
    let world_to_obj = obj_to_world.inverse();
    for b in dims.boxes() {
        let steps = [
            (b.half.x * 2.0 / pitch).ceil() as usize,
            (b.half.y * 2.0 / pitch).ceil() as usize,
            (b.half.z * 2.0 / pitch).ceil() as usize,
        ];
        for i in 0..=steps[0] {
            for j in 0..=steps[1] {
                for k in 0..=steps[2] {
                    let local = b.center - b.half
                        + Vec3::new(
                            b.half.x * 2.0 * i as f64 / steps[0] as f64,
                            b.half.y * 2.0 * j as f64 / steps[1] as f64,
                            b.half.z * 2.0 * k as f64 / steps[2] as f64,
                        );
                    let p = world_to_obj.apply(g.pose.apply(local));
                    if sdf_object(spec, p) < 0.0 {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Fraction of candidates whose swept volume penetrates the ground-truth
/// object, probed on a lattice of the given pitch inside each box.
pub fn collision_rate_with_pitch(
    candidates: &[GraspCandidate],
    spec: &ObjectSpec,
    obj_to_world: &RigidTransform,
    dims: &GripperDims,
    pitch: f64,
) -> f64 {
    assert!(!candidates.is_empty());
    let hits = candidates
        .iter()
        .filter(|g| candidate_collides(g, spec, obj_to_world, dims, pitch))
        .count();
    hits as f64 / candidates.len() as f64
}

pub fn collision_rate(
    candidates: &[GraspCandidate],
    spec: &ObjectSpec,
    obj_to_world: &RigidTransform,
    dims: &GripperDims,
) -> f64 {
    collision_rate_with_pitch(candidates, spec, obj_to_world, dims, PROBE_PITCH)
}
