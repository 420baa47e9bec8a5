use crate::geometry::{RigidTransform, Vec3};
use crate::rng::rng_for;
use rand::Rng;

/// Pinhole camera looking at a target point. Camera frame: +z forward,
/// +x right, +y down (image row direction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub position: Vec3,
    pub target: Vec3,
    pub up: Vec3,
    pub focal_px: f64,
    pub width: usize,
    pub height: usize,
}

/// Camera sampling bounds for Alg.-style data generation.
#[derive(Debug, Clone, Copy)]
pub struct CameraSampling {
    pub dist_min: f64,
    pub dist_max: f64,
    pub focal_px: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraSampling {
    fn default() -> Self {
        CameraSampling { dist_min: 0.3, dist_max: 0.6, focal_px: 80.0, width: 64, height: 64 }
    }
}

impl CameraModel {
    pub fn is_valid(&self) -> bool {
        (self.position - self.target).norm() > 0.0 && self.width >= 16 && self.height >= 16
    }

    /// Orthonormal camera basis (right, down, forward) in world coordinates.
    pub fn basis(&self) -> (Vec3, Vec3, Vec3) {
        let forward = (self.target - self.position).normalized();
        let mut right = forward.cross(self.up).normalized();
        if right.norm() < 0.5 {
            // Looking straight along `up`; pick any horizontal right axis.
            right = forward.cross(Vec3::new(1.0, 0.0, 0.0)).normalized();
            if right.norm() < 0.5 {
                right = forward.cross(Vec3::new(0.0, 1.0, 0.0)).normalized();
            }
        }
        let down = forward.cross(right);
        (right, down, forward)
    }

    /// Camera-to-world rigid transform.
    pub fn cam_to_world(&self) -> RigidTransform {
        let (r, d, f) = self.basis();
        RigidTransform::from_parts(
            [[r.x, d.x, f.x], [r.y, d.y, f.y], [r.z, d.z, f.z]],
            self.position,
        )
    }

    /// Unit ray direction through pixel center (px, py), in camera frame.
    pub fn ray_dir_cam(&self, px: usize, py: usize) -> Vec3 {
        let cx = self.width as f64 / 2.0 - 0.5;
        let cy = self.height as f64 / 2.0 - 0.5;
        Vec3::new(
            (px as f64 - cx) / self.focal_px,
            (py as f64 - cy) / self.focal_px,
            1.0,
        )
        .normalized()
    }

    /// Unit ray direction through pixel center, in world frame.
    pub fn ray_dir_world(&self, px: usize, py: usize) -> Vec3 {
        self.cam_to_world().rotate(self.ray_dir_cam(px, py))
    }
}

/// Camera position uniform on the upper unit hemisphere around `center`,
/// scaled by a distance drawn from U(dist_min, dist_max), looking at `center`.
pub fn sample_camera(center: Vec3, sampling: &CameraSampling, seed: u64) -> CameraModel {
    let mut rng = rng_for(seed, 0xca3);
    let azimuth = rng.gen_range(0.0..std::f64::consts::TAU);
    let z: f64 = rng.gen_range(0.0..1.0);
    let r = (1.0 - z * z).sqrt();
    let dir = Vec3::new(r * azimuth.cos(), r * azimuth.sin(), z);
    let dist = rng.gen_range(sampling.dist_min..sampling.dist_max);
    CameraModel {
        position: center + dir * dist,
        target: center,
        up: Vec3::new(0.0, 0.0, 1.0),
        focal_px: sampling.focal_px,
        width: sampling.width,
        height: sampling.height,
    }
}
