use super::augment::augment;
use super::camera::{sample_camera, CameraModel, CameraSampling};
use super::render::{project_to_cloud, render, to_robot_world, OrientedPointCloud};
use crate::ambiguity::{find_ambiguous_poses, uncertain_region};
use crate::geometry::{
    sample_points, sdf_normal, sdf_object, Aabb, GridLattice, ObjectSpec, Region3, RigidTransform,
    Vec3,
};
use crate::rng::rng_for;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub const LABEL_FREE: u8 = 0;
pub const LABEL_OCCUPIED: u8 = 1;
pub const LABEL_UNCERTAIN: u8 = 2;

/// Labeled query points for occupancy supervision.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    pub points: Vec<Vec3>,
    pub labels: Vec<u8>,
}

/// One generated observation with everything needed for training and
/// evaluation: the augmented partial cloud in the robot world frame, labeled
/// queries, and the ground truth behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSample {
    pub id: u64,
    pub spec: ObjectSpec,
    pub pose: RigidTransform,
    pub camera: CameraModel,
    pub cloud: OrientedPointCloud,
    pub queries: QuerySet,
    pub uncertain: Region3,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Spec-index pools per split. In novel-view mode all splits share the full
/// pool; in novel-instance mode the pools are disjoint at 70/10/20.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSets {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitSets {
    pub fn pool(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

pub fn split_specs(n_specs: usize, novel_instance: bool, seed: u64) -> SplitSets {
    let all: Vec<usize> = (0..n_specs).collect();
    if !novel_instance {
        return SplitSets { train: all.clone(), val: all.clone(), test: all };
    }
    let mut shuffled = all;
    shuffled.shuffle(&mut rng_for(seed, 0x5b1));
    let n_train = ((n_specs as f64) * 0.7).round() as usize;
    let n_val = ((n_specs as f64) * 0.1).round() as usize;
    let n_val = n_val.min(n_specs - n_train);
    SplitSets {
        train: shuffled[..n_train].to_vec(),
        val: shuffled[n_train..n_train + n_val].to_vec(),
        test: shuffled[n_train + n_val..].to_vec(),
    }
}

/// Random mug-like object at unit scale; scaling is applied separately by
/// [`scale_object`].
pub fn sample_object_spec(seed: u64) -> ObjectSpec {
    let mut rng = rng_for(seed, 0x0b7);
    let spec = ObjectSpec {
        body_radius: rng.gen_range(0.035..0.055),
        body_height: rng.gen_range(0.08..0.12),
        wall_thickness: rng.gen_range(0.006..0.012),
        handle_present: rng.gen_range(0.0..1.0) < 0.8,
        handle_tube_radius: rng.gen_range(0.005..0.008),
        handle_loop_radius: rng.gen_range(0.016..0.028),
        handle_azimuth: rng.gen_range(0.0..std::f64::consts::TAU),
        global_scale: 1.0,
        z_scale: 1.0,
    };
    debug_assert!(spec.is_valid());
    spec
}

/// Draws a target max extent from U(0.05, 0.15) m and a z stretch from
/// U(0.8, 1.2), then solves for the global scale that realizes the target
/// exactly.
pub fn scale_object(spec: &ObjectSpec, seed: u64) -> ObjectSpec {
    let mut rng = rng_for(seed, 0x5ca);
    let target = rng.gen_range(0.05..0.15);
    let z_scale = rng.gen_range(0.8..1.2);
    let mut out = ObjectSpec { global_scale: 1.0, z_scale, ..*spec };
    out.global_scale = target / out.max_extent();
    out
}

/// Uniform z-rotation pose; the object frame already stands on the table at
/// the world origin, so rotation about the world z axis is the full pose
/// family for this object class.
pub fn sample_pose(seed: u64) -> RigidTransform {
    let mut rng = rng_for(seed, 0x905e);
    RigidTransform::rotation_z(rng.gen_range(0.0..std::f64::consts::TAU))
}

/// World-frame bounding box of the posed object (transformed corners).
pub fn posed_bbox(spec: &ObjectSpec, pose: &RigidTransform) -> Aabb {
    let bb = spec.bbox();
    let mut min = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut max = Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..8 {
        let c = Vec3::new(
            if i & 1 == 0 { bb.min.x } else { bb.max.x },
            if i & 2 == 0 { bb.min.y } else { bb.max.y },
            if i & 4 == 0 { bb.min.z } else { bb.max.z },
        );
        let p = pose.apply(c);
        min = min.min_elem(p);
        max = max.max_elem(p);
    }
    Aabb::new(min, max)
}

/// Label for a world-frame point: uncertain wins, then occupancy by the
/// ground-truth SDF under the true pose, then free.
pub fn label_point(
    spec: &ObjectSpec,
    world_to_obj: &RigidTransform,
    uncertain: &Region3,
    p: Vec3,
) -> u8 {
    if uncertain.contains_point(p) {
        LABEL_UNCERTAIN
    } else if sdf_object(spec, world_to_obj.apply(p)) < 0.0 {
        LABEL_OCCUPIED
    } else {
        LABEL_FREE
    }
}

/// Projects an object-frame point onto the zero level set by gradient descent
/// on the SDF. Returns None when the iteration does not converge.
fn project_to_surface(spec: &ObjectSpec, mut p: Vec3) -> Option<Vec3> {
    for _ in 0..20 {
        let d = sdf_object(spec, p);
        if d.abs() < 1e-6 {
            return Some(p);
        }
        p -= sdf_normal(spec, p, 1e-5) * d;
    }
    None
}

/// n labeled query points: half uniform in the padded world bbox of object
/// plus uncertain region, half near the true surface (projected points with
/// N(0, 0.01) offsets).
pub fn make_query_set(
    spec: &ObjectSpec,
    pose: &RigidTransform,
    uncertain: &Region3,
    n: usize,
    seed: u64,
) -> QuerySet {
    assert!(n > 0);
    let world_to_obj = pose.inverse();
    let mut bbox = posed_bbox(spec, pose);
    if uncertain.voxel_count() > 0 {
        bbox = bbox.union(&uncertain.lattice.bbox());
    }
    let bbox = bbox.padded(0.1);
    let n_uniform = n / 2;
    let mut points = sample_points(&bbox, n_uniform.max(1), seed ^ 0x11f0);
    points.truncate(n_uniform);

    let offset = Normal::new(0.0, 0.01).unwrap();
    let mut rng = rng_for(seed, 0x9e4);
    let obj_bb = spec.bbox().padded(0.1);
    while points.len() < n {
        let p = Vec3::new(
            rng.gen_range(obj_bb.min.x..obj_bb.max.x),
            rng.gen_range(obj_bb.min.y..obj_bb.max.y),
            rng.gen_range(obj_bb.min.z..obj_bb.max.z),
        );
        if let Some(s) = project_to_surface(spec, p) {
            let q = pose.apply(s)
                + Vec3::new(
                    offset.sample(&mut rng),
                    offset.sample(&mut rng),
                    offset.sample(&mut rng),
                );
            points.push(q);
        }
    }
    let labels = points
        .iter()
        .map(|&p| label_point(spec, &world_to_obj, uncertain, p))
        .collect();
    QuerySet { points, labels }
}

/// Knobs for one-sample generation; defaults follow the run configuration
/// documented in the CLI.
#[derive(Debug, Clone)]
pub struct GenParams {
    pub camera: CameraSampling,
    pub n_queries: usize,
    pub grid_res: usize,
    pub pose_samples: usize,
    pub theta_sim: f64,
    pub translation_jitter: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            camera: CameraSampling::default(),
            n_queries: 2048,
            grid_res: 48,
            pose_samples: 72,
            theta_sim: 0.98,
            translation_jitter: 0.0,
        }
    }
}

/// Lattice covering the full z-rotation sweep of the posed object, so every
/// candidate pose's occupancy fits on it.
pub fn sweep_lattice(spec: &ObjectSpec, pose: &RigidTransform, res: usize) -> GridLattice {
    let bb = posed_bbox(spec, pose);
    let r = [bb.min, bb.max, Vec3::new(bb.min.x, bb.max.y, 0.0), Vec3::new(bb.max.x, bb.min.y, 0.0)]
        .iter()
        .map(|c| c.x.hypot(c.y))
        .fold(0.0f64, f64::max);
    let swept = Aabb::new(Vec3::new(-r, -r, bb.min.z), Vec3::new(r, r, bb.max.z));
    GridLattice::covering(&swept.padded(0.05), res)
}

/// Full observation pipeline for one sample: scale, pose, camera, render,
/// project, augment, world transform, ambiguity analysis, query labeling.
/// Deterministic in (base spec, seed); retries with derived seeds in the rare
/// case augmentation empties the cloud.
pub fn generate_sample(
    base: &ObjectSpec,
    id: u64,
    seed: u64,
    params: &GenParams,
) -> DatasetSample {
    for attempt in 0..10 {
        let s = seed.wrapping_add(attempt * 0x9e37_79b9_7f4a_7c15);
        let spec = scale_object(base, s);
        let pose = sample_pose(s);
        let center = posed_bbox(&spec, &pose).center();
        let camera = sample_camera(center, &params.camera, s);
        let img = render(&spec, &pose, &camera);
        let cloud_cam = project_to_cloud(&img, &camera);
        // The camera sits at the origin of its own frame.
        let cloud_cam = augment(&cloud_cam, Vec3::ZERO, s);
        if cloud_cam.is_empty() {
            continue;
        }
        let cloud = to_robot_world(&cloud_cam, &camera);
        let poses = find_ambiguous_poses(
            &spec,
            &pose,
            &camera,
            params.pose_samples,
            params.theta_sim,
            params.translation_jitter,
            s,
        );
        let lattice = sweep_lattice(&spec, &pose, params.grid_res);
        let uncertain = uncertain_region(&spec, &pose, &poses, &lattice);
        let queries = make_query_set(&spec, &pose, &uncertain, params.n_queries, s);
        return DatasetSample { id, spec, pose, camera, cloud, queries, uncertain, seed: s };
    }
    panic!("no visible observation after 10 attempts for seed {seed}");
}
