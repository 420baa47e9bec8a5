use super::camera::CameraModel;
use crate::geometry::{sdf_object, ObjectSpec, RigidTransform, Vec3};

/// Per-pixel depth (distance along the ray, 0 = miss) and world-frame unit
/// normals, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthNormalImage {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
    pub normals: Vec<Vec3>,
}

impl DepthNormalImage {
    pub fn hit_count(&self) -> usize {
        self.depth.iter().filter(|&&d| d > 0.0).count()
    }
}

/// Which frame a point cloud lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Camera,
    RobotWorld,
}

/// Point cloud with per-point unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedPointCloud {
    pub points: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub frame: Frame,
}

impl OrientedPointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

const SURFACE_EPS: f64 = 1e-5;
const MAX_RAY_LEN: f64 = 2.0;
const MAX_STEPS: usize = 512;

/// Sphere-traces one ray against the posed object. Returns distance along the
/// (unit) direction, or 0.0 on a miss.
pub fn trace_ray(
    spec: &ObjectSpec,
    world_to_obj: &RigidTransform,
    origin: Vec3,
    dir: Vec3,
) -> f64 {
    let mut t = 0.0;
    for _ in 0..MAX_STEPS {
        let p = origin + dir * t;
        let d = sdf_object(spec, world_to_obj.apply(p));
        if d < SURFACE_EPS {
            return t;
        }
        t += d;
        if t > MAX_RAY_LEN {
            return 0.0;
        }
    }
    0.0
}

fn posed_normal(spec: &ObjectSpec, world_to_obj: &RigidTransform, p: Vec3, h: f64) -> Vec3 {
    let f = |q: Vec3| sdf_object(spec, world_to_obj.apply(q));
    Vec3::new(
        f(p + Vec3::new(h, 0.0, 0.0)) - f(p - Vec3::new(h, 0.0, 0.0)),
        f(p + Vec3::new(0.0, h, 0.0)) - f(p - Vec3::new(0.0, h, 0.0)),
        f(p + Vec3::new(0.0, 0.0, h)) - f(p - Vec3::new(0.0, 0.0, h)),
    )
    .normalized()
}

/// Depth + normal rendering by per-pixel sphere tracing of the object SDF.
pub fn render(spec: &ObjectSpec, pose: &RigidTransform, cam: &CameraModel) -> DepthNormalImage {
    let world_to_obj = pose.inverse();
    let cam_rot = cam.cam_to_world();
    let mut depth = vec![0.0; cam.width * cam.height];
    let mut normals = vec![Vec3::ZERO; cam.width * cam.height];
    for py in 0..cam.height {
        for px in 0..cam.width {
            let dir = cam_rot.rotate(cam.ray_dir_cam(px, py));
            let t = trace_ray(spec, &world_to_obj, cam.position, dir);
            if t > 0.0 {
                let i = py * cam.width + px;
                depth[i] = t;
                normals[i] = posed_normal(spec, &world_to_obj, cam.position + dir * t, 1e-4);
            }
        }
    }
    DepthNormalImage { width: cam.width, height: cam.height, depth, normals }
}

/// One point per hit pixel via inverse pinhole projection, in the camera frame.
pub fn project_to_cloud(img: &DepthNormalImage, cam: &CameraModel) -> OrientedPointCloud {
    let world_to_cam = cam.cam_to_world().inverse();
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for py in 0..img.height {
        for px in 0..img.width {
            let i = py * img.width + px;
            if img.depth[i] > 0.0 {
                points.push(cam.ray_dir_cam(px, py) * img.depth[i]);
                normals.push(world_to_cam.rotate(img.normals[i]));
            }
        }
    }
    OrientedPointCloud { points, normals, frame: Frame::Camera }
}

/// Applies the known camera-to-world transform, landing the cloud in the
/// gravity-aligned robot world frame.
pub fn to_robot_world(cloud: &OrientedPointCloud, cam: &CameraModel) -> OrientedPointCloud {
    assert_eq!(cloud.frame, Frame::Camera);
    let t = cam.cam_to_world();
    OrientedPointCloud {
        points: cloud.points.iter().map(|&p| t.apply(p)).collect(),
        normals: cloud.normals.iter().map(|&n| t.rotate(n)).collect(),
        frame: Frame::RobotWorld,
    }
}
