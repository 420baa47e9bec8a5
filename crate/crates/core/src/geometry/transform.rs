use super::vec3::Vec3;

/// Rigid transform: rotation (row-major 3x3 orthonormal, det +1) plus translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: [[f64; 3]; 3],
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: Vec3::ZERO,
        }
    }

    /// Rotation by `angle` radians about the world z axis, no translation.
    pub fn rotation_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RigidTransform {
            rotation: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
            translation: Vec3::ZERO,
        }
    }

    /// Rotation about z through an arbitrary center point.
    pub fn rotation_z_about(angle: f64, center: Vec3) -> Self {
        let r = Self::rotation_z(angle);
        let t = center - r.rotate(center);
        RigidTransform { rotation: r.rotation, translation: t }
    }

    pub fn translation(t: Vec3) -> Self {
        RigidTransform { rotation: Self::identity().rotation, translation: t }
    }

    pub fn from_parts(rotation: [[f64; 3]; 3], translation: Vec3) -> Self {
        RigidTransform { rotation, translation }
    }

    /// Rotation part only.
    pub fn rotate(&self, p: Vec3) -> Vec3 {
        let r = &self.rotation;
        Vec3::new(
            r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z,
            r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z,
            r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z,
        )
    }

    /// R*p + t.
    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotate(p) + self.translation
    }

    /// self ∘ other: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        let mut rot = [[0.0; 3]; 3];
        for (i, row) in rot.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.rotation[i][k] * other.rotation[k][j]).sum();
            }
        }
        RigidTransform { rotation: rot, translation: self.apply(other.translation) }
    }

    pub fn inverse(&self) -> RigidTransform {
        let r = &self.rotation;
        let rt = [
            [r[0][0], r[1][0], r[2][0]],
            [r[0][1], r[1][1], r[2][1]],
            [r[0][2], r[1][2], r[2][2]],
        ];
        let inv = RigidTransform { rotation: rt, translation: Vec3::ZERO };
        let t = -inv.rotate(self.translation);
        RigidTransform { rotation: rt, translation: t }
    }

    /// Checks R^T R = I and det R = +1 within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let r = &self.rotation;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot - expect).abs() > tol {
                    return false;
                }
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        (det - 1.0).abs() <= tol && self.translation.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_transform(rng: &mut impl Rng) -> RigidTransform {
        // Random rotation from three Euler-style factors about fixed axes.
        let rz = RigidTransform::rotation_z(rng.gen_range(0.0..std::f64::consts::TAU));
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        let (s, c) = a.sin_cos();
        let rx = RigidTransform::from_parts(
            [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
            Vec3::ZERO,
        );
        let mut t = rz.compose(&rx).compose(&RigidTransform::rotation_z(rng.gen_range(0.0..1.0)));
        t.translation = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        t
    }

    #[test]
    fn identity_leaves_point() {
        let p = Vec3::new(0.3, 0.0, 0.1);
        assert_eq!(RigidTransform::identity().apply(p), p);
    }

    #[test]
    fn z_rotation_quarter_turn() {
        let t = RigidTransform::rotation_z(std::f64::consts::FRAC_PI_2);
        let q = t.apply(Vec3::new(1.0, 0.0, 0.0));
        assert!((q - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn composition_matches_sequential_application() {
        // Oracle: matrix-product composition vs applying the factors in turn.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let t1 = random_transform(&mut rng);
            let t2 = random_transform(&mut rng);
            let p = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let a = t1.compose(&t2).apply(p);
            let b = t1.apply(t2.apply(p));
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn transforms_are_isometries() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let t = random_transform(&mut rng);
            assert!(t.is_valid(1e-9));
            let p = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let q = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let before = (p - q).norm();
            let after = (t.apply(p) - t.apply(q)).norm();
            assert!((before - after).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = random_transform(&mut rng);
        let p = Vec3::new(0.2, -0.4, 0.9);
        assert!((t.inverse().apply(t.apply(p)) - p).norm() < 1e-12);
    }
}
