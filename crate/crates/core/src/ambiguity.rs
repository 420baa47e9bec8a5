//! Ground-truth uncertain regions: find the rigid transforms that leave the
//! observation (near-)unchanged and split space into certain and uncertain
//! occupancy over that pose set.

use crate::error::GeometryError;
use crate::geometry::{
    sdf_object, GridLattice, ObjectSpec, Region3, RigidTransform, Vec3,
};
use crate::rng::rng_for;
use crate::synthdata::camera::CameraModel;
use crate::synthdata::render::trace_ray;
use rand::Rng;

/// Signature image resolution; signatures rendered from the observation
/// camera are downscaled to this so comparisons stay cheap.
pub const SIG_RES: usize = 48;

/// Depth difference that maps similarity to 0, in meters. Handle-scale so
/// that a handle appearing or vanishing in the view is decisive even though
/// it covers few pixels.
pub const DEPTH_SCALE: f64 = 0.02;

/// Low-resolution depth render used for view comparison. `depth` is 0 where
/// `valid` is false.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewSignature {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
    pub valid: Vec<bool>,
}

/// Transforms accepted as producing (near-)identical views, with their
/// similarity scores. The identity is always present at index 0.
#[derive(Debug, Clone)]
pub struct AmbiguousPoseSet {
    pub transforms: Vec<RigidTransform>,
    /// z-rotation angle of each transform, radians in (-pi, pi].
    pub angles: Vec<f64>,
    pub scores: Vec<f64>,
    pub theta_sim: f64,
}

impl AmbiguousPoseSet {
    pub fn identity_only() -> Self {
        AmbiguousPoseSet {
            transforms: vec![RigidTransform::identity()],
            angles: vec![0.0],
            scores: vec![1.0],
            theta_sim: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.transforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transforms.is_empty()
    }

    /// Width of the accepted arc around identity, radians.
    pub fn arc_width(&self) -> f64 {
        let lo = self.angles.iter().cloned().fold(0.0f64, f64::min);
        let hi = self.angles.iter().cloned().fold(0.0f64, f64::max);
        hi - lo
    }
}

fn signature_camera(cam: &CameraModel) -> CameraModel {
    CameraModel {
        focal_px: cam.focal_px * SIG_RES as f64 / cam.width as f64,
        width: SIG_RES,
        height: SIG_RES,
        ..*cam
    }
}

/// Deterministic low-resolution depth render of the posed object from the
/// observation camera.
pub fn signature(spec: &ObjectSpec, pose: &RigidTransform, cam: &CameraModel) -> ViewSignature {
    let cam = signature_camera(cam);
    let world_to_obj = pose.inverse();
    let rot = cam.cam_to_world();
    let mut depth = vec![0.0; cam.width * cam.height];
    let mut valid = vec![false; cam.width * cam.height];
    for py in 0..cam.height {
        for px in 0..cam.width {
            let dir = rot.rotate(cam.ray_dir_cam(px, py));
            let t = trace_ray(spec, &world_to_obj, cam.position, dir);
            if t > 0.0 {
                let i = py * cam.width + px;
                depth[i] = t;
                valid[i] = true;
            }
        }
    }
    ViewSignature { width: cam.width, height: cam.height, depth, valid }
}

/// 1 minus the mean absolute depth difference over the union of both validity
/// masks, scaled by [`DEPTH_SCALE`] and clamped to [0, 1]. A pixel seen in
/// only one view contributes its full depth as the difference.
pub fn similarity(a: &ViewSignature, b: &ViewSignature) -> Result<f64, GeometryError> {
    if a.width != b.width || a.height != b.height {
        return Err(GeometryError::DimensionMismatch {
            a: [a.width, a.height],
            b: [b.width, b.height],
        });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..a.depth.len() {
        if a.valid[i] || b.valid[i] {
            sum += (a.depth[i] - b.depth[i]).abs();
            count += 1;
        }
    }
    if count == 0 {
        return Ok(1.0);
    }
    Ok((1.0 - sum / count as f64 / DEPTH_SCALE).clamp(0.0, 1.0))
}

/// Searches z-rotations about the world z axis for transforms whose view
/// matches the observation. Candidates are stratified over the circle with a
/// random phase; the identity is always accepted and listed first.
/// `translation_jitter` > 0 additionally perturbs each candidate in xy.
pub fn find_ambiguous_poses(
    spec: &ObjectSpec,
    pose: &RigidTransform,
    cam: &CameraModel,
    n_samples: usize,
    theta_sim: f64,
    translation_jitter: f64,
    seed: u64,
) -> AmbiguousPoseSet {
    assert!(n_samples > 0);
    assert!(theta_sim > 0.0 && theta_sim <= 1.0);
    let reference = signature(spec, pose, cam);
    let mut rng = rng_for(seed, 0xa3b1);
    let phase: f64 = rng.gen_range(0.0..1.0);
    let mut set = AmbiguousPoseSet {
        transforms: vec![RigidTransform::identity()],
        angles: vec![0.0],
        scores: vec![1.0],
        theta_sim,
    };
    let tau = std::f64::consts::TAU;
    for i in 0..n_samples {
        let mut angle = (i as f64 + phase) / n_samples as f64 * tau;
        if angle > std::f64::consts::PI {
            angle -= tau;
        }
        let mut t = RigidTransform::rotation_z(angle);
        if translation_jitter > 0.0 {
            let shift = Vec3::new(
                rng.gen_range(-translation_jitter..translation_jitter),
                rng.gen_range(-translation_jitter..translation_jitter),
                0.0,
            );
            t = RigidTransform::translation(shift).compose(&t);
        }
        let candidate_pose = t.compose(pose);
        let sig = signature(spec, &candidate_pose, cam);
        let score = similarity(&reference, &sig).expect("equal dims by construction");
        if score >= theta_sim {
            set.transforms.push(t);
            set.angles.push(angle);
            set.scores.push(score);
        }
    }
    set
}

/// Voxel occupancy of the object under `t ∘ pose` on the lattice (voxel
/// centers tested against the SDF).
pub fn pose_occupancy(
    spec: &ObjectSpec,
    pose: &RigidTransform,
    t: &RigidTransform,
    lattice: &GridLattice,
) -> Vec<bool> {
    let world_to_obj = t.compose(pose).inverse();
    let bb = spec.bbox();
    // Conservative bounding-sphere radius about the world origin; candidate
    // transforms rotate about z through the origin so the sphere is shared.
    let r_max = bb.min.norm().max(bb.max.norm())
        + (if t.translation.norm() > 0.0 { t.translation.norm() } else { 0.0 })
        + pose.translation.norm();
    let r2 = r_max * r_max;
    let [nx, ny, nz] = lattice.dims;
    let mut mask = vec![false; lattice.len()];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let p = lattice.point(x, y, z);
                if p.dot(p) > r2 {
                    continue;
                }
                if sdf_object(spec, world_to_obj.apply(p)) < 0.0 {
                    mask[lattice.index(x, y, z)] = true;
                }
            }
        }
    }
    mask
}

/// Per-voxel union and intersection of occupancy over the accepted poses.
/// Uncertain = union minus intersection; certain = intersection.
pub fn region_split(
    spec: &ObjectSpec,
    pose: &RigidTransform,
    poses: &AmbiguousPoseSet,
    lattice: &GridLattice,
) -> (Region3, Region3) {
    assert!(!poses.is_empty());
    let mut union = vec![false; lattice.len()];
    let mut inter = vec![true; lattice.len()];
    for t in &poses.transforms {
        let occ = pose_occupancy(spec, pose, t, lattice);
        for i in 0..occ.len() {
            union[i] |= occ[i];
            inter[i] &= occ[i];
        }
    }
    let uncertain: Vec<bool> = union.iter().zip(&inter).map(|(&u, &i)| u && !i).collect();
    (
        Region3::from_mask(lattice.clone(), uncertain),
        Region3::from_mask(lattice.clone(), inter),
    )
}

/// The region that may or may not contain material depending on which
/// accepted pose is the true one.
pub fn uncertain_region(
    spec: &ObjectSpec,
    pose: &RigidTransform,
    poses: &AmbiguousPoseSet,
    lattice: &GridLattice,
) -> Region3 {
    region_split(spec, pose, poses, lattice).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sdf_body, sdf_handle, Aabb};
    use crate::synthdata::dataset::posed_bbox;

    fn mug(handle: bool, azimuth: f64) -> ObjectSpec {
        ObjectSpec {
            body_radius: 0.05,
            body_height: 0.1,
            wall_thickness: 0.01,
            handle_present: handle,
            handle_tube_radius: 0.007,
            handle_loop_radius: 0.022,
            handle_azimuth: azimuth,
            global_scale: 1.0,
            z_scale: 1.0,
        }
    }

    fn front_camera() -> CameraModel {
        CameraModel {
            position: Vec3::new(-0.4, 0.0, 0.15),
            target: Vec3::new(0.0, 0.0, 0.05),
            up: Vec3::new(0.0, 0.0, 1.0),
            focal_px: 80.0,
            width: 64,
            height: 64,
        }
    }

    fn lattice_for(spec: &ObjectSpec) -> GridLattice {
        let bb = posed_bbox(spec, &RigidTransform::identity());
        // Cover the full rotation sweep of the bbox about the z axis.
        let r = bb.min.norm().max(bb.max.norm());
        let swept = Aabb::new(Vec3::new(-r, -r, bb.min.z), Vec3::new(r, r, bb.max.z));
        GridLattice::covering(&swept.padded(0.05), 48)
    }

    #[test]
    fn same_pose_gives_identical_signature() {
        let spec = mug(true, 0.0);
        let cam = front_camera();
        let a = signature(&spec, &RigidTransform::identity(), &cam);
        let b = signature(&spec, &RigidTransform::identity(), &cam);
        assert_eq!(a, b);
        assert_eq!(similarity(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn handleless_body_is_rotation_invariant() {
        let spec = mug(false, 0.0);
        let cam = front_camera();
        let a = signature(&spec, &RigidTransform::identity(), &cam);
        let b = signature(&spec, &RigidTransform::rotation_z(1.3), &cam);
        assert!(similarity(&a, &b).unwrap() > 0.9999);
    }

    #[test]
    fn handle_occluded_to_visible_breaks_similarity() {
        // Handle starts behind the body (pointing away from the camera on +x),
        // rotating 180 degrees swings it into view.
        let spec = mug(true, 0.0);
        let cam = front_camera();
        let a = signature(&spec, &RigidTransform::identity(), &cam);
        let b = signature(&spec, &RigidTransform::rotation_z(std::f64::consts::PI), &cam);
        assert!(similarity(&a, &b).unwrap() < 0.98);
    }

    #[test]
    fn similarity_is_symmetric_and_rejects_dim_mismatch() {
        let spec = mug(true, 2.0);
        let cam = front_camera();
        let a = signature(&spec, &RigidTransform::identity(), &cam);
        let b = signature(&spec, &RigidTransform::rotation_z(0.7), &cam);
        assert_eq!(similarity(&a, &b).unwrap(), similarity(&b, &a).unwrap());
        let small = ViewSignature { width: 2, height: 2, depth: vec![0.0; 4], valid: vec![false; 4] };
        assert!(similarity(&a, &small).is_err());
    }

    #[test]
    fn disjoint_silhouettes_score_low() {
        // Two constructed masks of equal area with no overlap at depth 0.06:
        // every union pixel contributes its full depth.
        let mut a = ViewSignature { width: 4, height: 4, depth: vec![0.0; 16], valid: vec![false; 16] };
        let mut b = a.clone();
        for i in 0..8 {
            a.depth[i] = 0.06;
            a.valid[i] = true;
            b.depth[i + 8] = 0.06;
            b.valid[i + 8] = true;
        }
        assert!(similarity(&a, &b).unwrap() < 0.5);
    }

    #[test]
    fn handleless_object_accepts_all_rotations() {
        let spec = mug(false, 0.0);
        let set = find_ambiguous_poses(
            &spec,
            &RigidTransform::identity(),
            &front_camera(),
            24,
            0.98,
            0.0,
            1,
        );
        assert_eq!(set.len(), 25);
        assert!(set.scores.iter().all(|&s| s >= 0.98));
        assert_eq!(set.angles[0], 0.0);
    }

    #[test]
    fn visible_handle_pins_the_pose() {
        // Handle on the camera side: any appreciable rotation moves it.
        let spec = mug(true, std::f64::consts::PI);
        let set = find_ambiguous_poses(
            &spec,
            &RigidTransform::identity(),
            &front_camera(),
            72,
            0.98,
            0.0,
            2,
        );
        for &a in &set.angles {
            assert!(a.abs() < 15f64.to_radians(), "accepted angle {a}");
        }
    }

    /// Brute-force handle visibility: does any signature-resolution ray hit
    /// the handle surface under this transform?
    fn handle_visible(spec: &ObjectSpec, t: &RigidTransform, cam: &CameraModel) -> bool {
        let cam = super::signature_camera(cam);
        let world_to_obj = t.inverse();
        let rot = cam.cam_to_world();
        for py in 0..cam.height {
            for px in 0..cam.width {
                let dir = rot.rotate(cam.ray_dir_cam(px, py));
                let d = trace_ray(spec, &world_to_obj, cam.position, dir);
                if d > 0.0 {
                    let hit = world_to_obj.apply(cam.position + dir * d);
                    if sdf_handle(spec, hit) < 1e-4 {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[test]
    fn occluded_handle_arc_matches_visibility_cone() {
        // Handle hidden behind the body: the accepted arc should match the
        // set of rotations keeping it hidden, within one sampling step.
        let spec = mug(true, 0.0);
        let cam = front_camera();
        let n = 72;
        let set = find_ambiguous_poses(
            &spec,
            &RigidTransform::identity(),
            &cam,
            n,
            0.98,
            0.0,
            3,
        );
        assert!(set.len() > 3, "occlusion should admit several poses");
        let step = std::f64::consts::TAU / n as f64;
        for (&angle, t) in set.angles.iter().zip(&set.transforms).skip(1) {
            // Every accepted rotation must keep the handle out of view, up to
            // a one-step tolerance at the cone boundary.
            if handle_visible(&spec, t, &cam) {
                let neighbor = RigidTransform::rotation_z(angle - step.copysign(angle));
                assert!(
                    !handle_visible(&spec, &neighbor, &cam),
                    "accepted angle {angle} far inside the visible cone"
                );
            }
        }
        // And rotations that clearly reveal the handle are rejected.
        let revealed = RigidTransform::rotation_z(std::f64::consts::PI);
        let sig0 = signature(&spec, &RigidTransform::identity(), &cam);
        let sig1 = signature(&spec, &revealed.compose(&RigidTransform::identity()), &cam);
        assert!(similarity(&sig0, &sig1).unwrap() < 0.98);
    }

    #[test]
    fn identity_only_gives_empty_uncertain_region() {
        let spec = mug(true, 0.0);
        let lat = lattice_for(&spec);
        let (unc, cert) = region_split(
            &spec,
            &RigidTransform::identity(),
            &AmbiguousPoseSet::identity_only(),
            &lat,
        );
        assert_eq!(unc.voxel_count(), 0);
        assert!(cert.voxel_count() > 0);
    }

    #[test]
    fn full_rotation_sweep_matches_brute_force_union() {
        // Uncertain volume from the accepted-pose split should be within 10%
        // of the handle sweep computed from a dense 360-pose voxel union.
        let spec = mug(true, 0.0);
        let lat = lattice_for(&spec);
        let n = 72;
        let mut set = AmbiguousPoseSet::identity_only();
        for i in 1..n {
            let a = i as f64 / n as f64 * std::f64::consts::TAU;
            set.transforms.push(RigidTransform::rotation_z(a));
            set.angles.push(a);
            set.scores.push(1.0);
        }
        let unc = uncertain_region(&spec, &RigidTransform::identity(), &set, &lat);

        // Oracle: voxel in the sweep iff occupied under some of 360 dense
        // rotations but not under all of them.
        let mut union = vec![false; lat.len()];
        let mut inter = vec![true; lat.len()];
        for i in 0..360 {
            let a = i as f64 / 360.0 * std::f64::consts::TAU;
            let occ = pose_occupancy(&spec, &RigidTransform::identity(), &RigidTransform::rotation_z(a), &lat);
            for j in 0..occ.len() {
                union[j] |= occ[j];
                inter[j] &= occ[j];
            }
        }
        let oracle: usize = union.iter().zip(&inter).filter(|(&u, &i)| u && !i).count();
        let got = unc.voxel_count();
        let rel = (got as f64 - oracle as f64).abs() / oracle as f64;
        assert!(rel < 0.10, "got {got}, oracle {oracle}");
    }

    #[test]
    fn two_poses_give_two_handle_blobs_and_exclude_body() {
        let spec = mug(true, 0.0);
        let lat = lattice_for(&spec);
        let mut set = AmbiguousPoseSet::identity_only();
        set.transforms.push(RigidTransform::rotation_z(std::f64::consts::PI));
        set.angles.push(std::f64::consts::PI);
        set.scores.push(1.0);
        let (unc, cert) = region_split(&spec, &RigidTransform::identity(), &set, &lat);
        assert_eq!(unc.component_counts.len(), 2, "expected two handle blobs");
        // Body voxels stay certain.
        let [nx, ny, nz] = lat.dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let p = lat.point(x, y, z);
                    if sdf_body(&spec, p) < -1e-9 {
                        assert!(!unc.contains_index(x, y, z), "body voxel uncertain at {p:?}");
                        assert!(cert.contains_index(x, y, z));
                    }
                }
            }
        }
    }

    #[test]
    fn certain_region_shrinks_as_poses_are_added() {
        let spec = mug(true, 0.0);
        let lat = lattice_for(&spec);
        let mut set = AmbiguousPoseSet::identity_only();
        let (_, mut prev) = region_split(&spec, &RigidTransform::identity(), &set, &lat);
        for k in 1..5 {
            let a = k as f64 * 0.9;
            set.transforms.push(RigidTransform::rotation_z(a));
            set.angles.push(a);
            set.scores.push(1.0);
            let (_, cert) = region_split(&spec, &RigidTransform::identity(), &set, &lat);
            assert!(cert.voxel_count() <= prev.voxel_count());
            assert_eq!(cert.intersect(&prev).voxel_count(), cert.voxel_count());
            prev = cert;
        }
    }

    #[test]
    fn true_handle_lies_in_uncertain_union_certain() {
        let spec = mug(true, 0.0);
        let cam = front_camera();
        let set = find_ambiguous_poses(&spec, &RigidTransform::identity(), &cam, 72, 0.98, 0.0, 5);
        let lat = lattice_for(&spec);
        let (unc, cert) = region_split(&spec, &RigidTransform::identity(), &set, &lat);
        let [nx, ny, nz] = lat.dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let p = lat.point(x, y, z);
                    if sdf_handle(&spec, p) < -1e-9 && sdf_body(&spec, p) > 0.0 {
                        assert!(
                            unc.contains_index(x, y, z) || cert.contains_index(x, y, z),
                            "true handle voxel outside both regions at {p:?}"
                        );
                    }
                }
            }
        }
    }
}
