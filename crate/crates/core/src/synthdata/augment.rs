use super::render::OrientedPointCloud;
use crate::geometry::Vec3;
use crate::rng::rng_for;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Sensor-style augmentation: per point, add N(0, 0.005) jitter, then use the
/// cosine similarity between the point normal and the direction to the camera
/// as the retention probability (grazing surfaces drop out more often), and
/// add extra N(0, 0.01) noise with the same |s|-controlled probability
/// (independent draw). Point order is preserved.
///
/// `camera_pos` is the camera position expressed in the cloud's frame (the
/// origin for camera-frame clouds).
pub fn augment(cloud: &OrientedPointCloud, camera_pos: Vec3, seed: u64) -> OrientedPointCloud {
    let base_noise = Normal::new(0.0, 0.005).unwrap();
    let extra_noise = Normal::new(0.0, 0.01).unwrap();
    let mut rng = rng_for(seed, 0xa96);
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for (&p0, &n) in cloud.points.iter().zip(&cloud.normals) {
        let mut p = p0
            + Vec3::new(
                base_noise.sample(&mut rng),
                base_noise.sample(&mut rng),
                base_noise.sample(&mut rng),
            );
        let s = cosine_to_camera(p0, n, camera_pos);
        let keep: f64 = rng.gen();
        if s.abs() < keep {
            continue;
        }
        let extra: f64 = rng.gen();
        if s.abs() < extra {
            p += Vec3::new(
                extra_noise.sample(&mut rng),
                extra_noise.sample(&mut rng),
                extra_noise.sample(&mut rng),
            );
        }
        points.push(p);
        normals.push(n);
    }
    OrientedPointCloud { points, normals, frame: cloud.frame }
}

/// s = n·(c - p) / (|n||c - p|).
pub fn cosine_to_camera(p: Vec3, n: Vec3, camera_pos: Vec3) -> f64 {
    let to_cam = camera_pos - p;
    let denom = n.norm() * to_cam.norm();
    if denom == 0.0 {
        0.0
    } else {
        n.dot(to_cam) / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthdata::render::Frame;

    fn cloud_with_normal(n: Vec3, count: usize) -> OrientedPointCloud {
        OrientedPointCloud {
            points: vec![Vec3::new(0.0, 0.0, 0.2); count],
            normals: vec![n; count],
            frame: Frame::Camera,
        }
    }

    #[test]
    fn frontal_points_always_retained() {
        // |s| = 1 beats every U(0,1) draw.
        let c = cloud_with_normal(Vec3::new(0.0, 0.0, -1.0), 1000);
        let out = augment(&c, Vec3::ZERO, 3);
        assert_eq!(out.len(), 1000);
    }

    #[test]
    fn perpendicular_points_always_removed() {
        let c = cloud_with_normal(Vec3::new(1.0, 0.0, 0.0), 1000);
        let out = augment(&c, Vec3::ZERO, 3);
        assert_eq!(out.len(), 0);
    }

    #[test]
    fn retention_rate_matches_cosine() {
        // Bernoulli oracle: fixed |s| = 0.5 keeps half the points.
        let n = Vec3::new(0.0, 0.0, -1.0);
        let tilt = Vec3::new((3.0f64).sqrt() / 2.0, 0.0, -0.5); // 60 degrees off
        let c = cloud_with_normal(tilt.normalized(), 100_000);
        let s = cosine_to_camera(c.points[0], c.normals[0], Vec3::ZERO);
        assert!((s.abs() - 0.5).abs() < 1e-12, "s = {s}");
        let out = augment(&c, Vec3::ZERO, 7);
        let rate = out.len() as f64 / c.len() as f64;
        assert!((rate - 0.5).abs() < 0.01, "rate {rate}");
        let _ = n;
    }

    #[test]
    fn augment_never_grows_the_cloud_and_keeps_order() {
        let mut c = cloud_with_normal(Vec3::new(0.0, 0.0, -1.0), 50);
        // Tag points by x coordinate to check order.
        for (i, p) in c.points.iter_mut().enumerate() {
            p.x = i as f64;
        }
        let out = augment(&c, Vec3::ZERO, 1);
        assert!(out.len() <= c.len());
        for w in out.points.windows(2) {
            assert!(w[0].x < w[1].x + 0.5); // jitter is mm-scale, order visible
        }
    }
}
