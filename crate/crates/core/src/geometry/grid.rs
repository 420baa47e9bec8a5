use super::vec3::{Aabb, Vec3};
use crate::error::GeometryError;

/// Node lattice shared by scalar grids and voxel regions: `dims` nodes per
/// axis starting at `origin` with isotropic `spacing`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridLattice {
    pub origin: Vec3,
    pub spacing: f64,
    pub dims: [usize; 3],
}

impl GridLattice {
    pub fn new(origin: Vec3, spacing: f64, dims: [usize; 3]) -> Self {
        GridLattice { origin, spacing, dims }
    }

    /// Lattice covering `bbox` with `res` nodes along the longest axis.
    pub fn covering(bbox: &Aabb, res: usize) -> Self {
        assert!(res >= 2);
        let spacing = bbox.max_extent() / (res - 1) as f64;
        let e = bbox.extent();
        let dims = [
            ((e.x / spacing).ceil() as usize + 1).max(2),
            ((e.y / spacing).ceil() as usize + 1).max(2),
            ((e.z / spacing).ceil() as usize + 1).max(2),
        ];
        GridLattice { origin: bbox.min, spacing, dims }
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.dims[1] + y) * self.dims[0] + x
    }

    #[inline]
    pub fn point(&self, x: usize, y: usize, z: usize) -> Vec3 {
        self.origin
            + Vec3::new(
                x as f64 * self.spacing,
                y as f64 * self.spacing,
                z as f64 * self.spacing,
            )
    }

    /// Nearest node to `p`, or None when `p` is outside the lattice box.
    pub fn nearest_node(&self, p: Vec3) -> Option<[usize; 3]> {
        let q = (p - self.origin) / self.spacing;
        let r = [q.x.round(), q.y.round(), q.z.round()];
        for (i, v) in r.iter().enumerate() {
            if *v < 0.0 || *v > (self.dims[i] - 1) as f64 {
                return None;
            }
        }
        Some([r[0] as usize, r[1] as usize, r[2] as usize])
    }

    pub fn bbox(&self) -> Aabb {
        let e = Vec3::new(
            (self.dims[0] - 1) as f64 * self.spacing,
            (self.dims[1] - 1) as f64 * self.spacing,
            (self.dims[2] - 1) as f64 * self.spacing,
        );
        Aabb::new(self.origin, self.origin + e)
    }
}

/// Regular scalar field sampled at lattice nodes. Values are stored
/// x-fastest, channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid3 {
    pub lattice: GridLattice,
    pub channels: usize,
    pub values: Vec<f64>,
}

impl ScalarGrid3 {
    pub fn zeros(lattice: GridLattice, channels: usize) -> Self {
        ScalarGrid3 { lattice, channels, values: vec![0.0; lattice.len() * channels] }
    }

    pub fn from_fn(lattice: GridLattice, mut f: impl FnMut(Vec3) -> f64) -> Self {
        let mut g = Self::zeros(lattice, 1);
        for z in 0..lattice.dims[2] {
            for y in 0..lattice.dims[1] {
                for x in 0..lattice.dims[0] {
                    let i = lattice.index(x, y, z);
                    g.values[i] = f(lattice.point(x, y, z));
                }
            }
        }
        g
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize, c: usize) -> f64 {
        self.values[self.lattice.index(x, y, z) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, c: usize, v: f64) {
        let i = self.lattice.index(x, y, z) * self.channels + c;
        self.values[i] = v;
    }

    /// Single channel extracted as its own grid.
    pub fn channel(&self, c: usize) -> ScalarGrid3 {
        assert!(c < self.channels);
        let values = self
            .values
            .chunks_exact(self.channels)
            .map(|chunk| chunk[c])
            .collect();
        ScalarGrid3 { lattice: self.lattice, channels: 1, values }
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.values.iter().sum::<f64>() / self.values.len() as f64
        }
    }
}

/// Per-node spatial gradient of a single-channel grid: central differences in
/// the interior, one-sided at boundary faces. Output has 3 channels (d/dx,
/// d/dy, d/dz) in units of 1/meter times the field unit.
pub fn grid_gradient(grid: &ScalarGrid3) -> Result<ScalarGrid3, GeometryError> {
    if grid.channels != 1 {
        return Err(GeometryError::ChannelMismatch { expected: 1, got: grid.channels });
    }
    let d = grid.lattice.dims;
    if d[0] < 3 || d[1] < 3 || d[2] < 3 {
        return Err(GeometryError::GridTooSmall { min: 3, dims: d });
    }
    let h = grid.lattice.spacing;
    let mut out = ScalarGrid3::zeros(grid.lattice, 3);
    for z in 0..d[2] {
        for y in 0..d[1] {
            for x in 0..d[0] {
                let diff = |axis: usize, i: usize| -> f64 {
                    let n = d[axis];
                    let get = |j: usize| match axis {
                        0 => grid.at(j, y, z, 0),
                        1 => grid.at(x, j, z, 0),
                        _ => grid.at(x, y, j, 0),
                    };
                    if i == 0 {
                        (get(1) - get(0)) / h
                    } else if i == n - 1 {
                        (get(n - 1) - get(n - 2)) / h
                    } else {
                        (get(i + 1) - get(i - 1)) / (2.0 * h)
                    }
                };
                let i = grid.lattice.index(x, y, z) * 3;
                out.values[i] = diff(0, x);
                out.values[i + 1] = diff(1, y);
                out.values[i + 2] = diff(2, z);
            }
        }
    }
    Ok(out)
}

/// Magnitude of `grid_gradient` as a single-channel grid.
pub fn gradient_magnitude(grid: &ScalarGrid3) -> Result<ScalarGrid3, GeometryError> {
    let g = grid_gradient(grid)?;
    let values = g
        .values
        .chunks_exact(3)
        .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
        .collect();
    Ok(ScalarGrid3 { lattice: grid.lattice, channels: 1, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice() -> GridLattice {
        GridLattice::new(Vec3::new(-0.5, -0.5, -0.5), 0.1, [11, 11, 11])
    }

    #[test]
    fn gradient_of_constant_field_is_zero() {
        let g = ScalarGrid3::from_fn(lattice(), |_| 0.7);
        let grad = grid_gradient(&g).unwrap();
        assert!(grad.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn gradient_of_linear_field_is_exact() {
        let g = ScalarGrid3::from_fn(lattice(), |p| p.x);
        let grad = grid_gradient(&g).unwrap();
        for chunk in grad.values.chunks_exact(3) {
            assert!((chunk[0] - 1.0).abs() < 1e-9);
            assert!(chunk[1].abs() < 1e-9);
            assert!(chunk[2].abs() < 1e-9);
        }
    }

    #[test]
    fn central_differences_exact_on_quadratic_interior() {
        // Central differences are exact for quadratics: d/dx x^2 = 2x.
        let lat = lattice();
        let g = ScalarGrid3::from_fn(lat, |p| p.x * p.x);
        let grad = grid_gradient(&g).unwrap();
        for z in 1..lat.dims[2] - 1 {
            for y in 1..lat.dims[1] - 1 {
                for x in 1..lat.dims[0] - 1 {
                    let p = lat.point(x, y, z);
                    assert!((grad.at(x, y, z, 0) - 2.0 * p.x).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn gradient_magnitude_finite_for_probability_grid() {
        let g = ScalarGrid3::from_fn(lattice(), |p| (p.x.sin().abs()).min(1.0));
        let m = gradient_magnitude(&g).unwrap();
        assert!(m.values.iter().all(|v| v.is_finite()));
    }
}
