use super::decoder::{decode_batch, probabilities};
use super::encoder::{encode, Encoding};
use super::params::{Mode, ModelParams};
use crate::error::ModelError;
use crate::geometry::{gradient_magnitude, GridLattice, ScalarGrid3, Vec3};
use crate::rng::rng_for;
use crate::synthdata::render::OrientedPointCloud;

/// Class probabilities for one query point: [ŷ] in binary mode,
/// [p_free, p_occupied, p_uncertain] in trinary mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probs: Vec<f64>,
}

/// Deterministic single-point decode. Shares its code path with
/// [`predict_grid`], so the two agree bit for bit.
pub fn decode(params: &ModelParams, enc: &Encoding, p: Vec3) -> Prediction {
    let (logits, _) = decode_batch(params, enc, &[p], None);
    let probs = probabilities(&logits);
    Prediction { probs: probs.row(0).to_vec() }
}

/// Evaluates the decoder at every lattice node with dropout disabled.
/// Channels: 1 (occupancy probability) or 3 (class probabilities).
pub fn predict_grid(
    params: &ModelParams,
    cloud: &OrientedPointCloud,
    lattice: &GridLattice,
) -> Result<ScalarGrid3, ModelError> {
    let (enc, _) = encode(params, cloud)?;
    let k = params.config.mode.classes();
    let mut grid = ScalarGrid3::zeros(*lattice, k);
    let [nx, ny, nz] = lattice.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let pred = decode(params, &enc, lattice.point(x, y, z));
                for (c, &v) in pred.probs.iter().enumerate() {
                    grid.set(x, y, z, c, v);
                }
            }
        }
    }
    Ok(grid)
}

/// Occupied-class probability as a 1-channel grid: channel 0 for binary
/// predictions, channel 1 (occupied) for trinary.
pub fn occupied_channel(grid: &ScalarGrid3, mode: Mode) -> ScalarGrid3 {
    match mode {
        Mode::Binary => grid.channel(0),
        Mode::Trinary => grid.channel(1),
    }
}

/// Per-node sample variance of the occupied-class probability over
/// `n_passes` stochastic decoder passes. Each (node, pass) pair draws its
/// dropout masks from its own deterministic RNG stream.
pub fn mc_dropout_variance(
    params: &ModelParams,
    cloud: &OrientedPointCloud,
    lattice: &GridLattice,
    n_passes: usize,
    seed: u64,
) -> Result<ScalarGrid3, ModelError> {
    if n_passes < 2 {
        return Err(ModelError::TooFewPasses(n_passes));
    }
    let (enc, _) = encode(params, cloud)?;
    if params.config.dropout == 0.0 {
        // Every pass is the deterministic decoder; the variance is exactly 0.
        return Ok(ScalarGrid3::zeros(*lattice, 1));
    }
    let occ_col = match params.config.mode {
        Mode::Binary => 0,
        Mode::Trinary => 1,
    };
    let mut grid = ScalarGrid3::zeros(*lattice, 1);
    let [nx, ny, nz] = lattice.dims;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let node = lattice.index(x, y, z) as u64;
                let p = lattice.point(x, y, z);
                let mut sum = 0.0;
                let mut sum2 = 0.0;
                for pass in 0..n_passes {
                    let mut rng = rng_for(seed, node.wrapping_mul(0x10001) ^ pass as u64);
                    let (logits, _) = decode_batch(params, &enc, &[p], Some(&mut rng));
                    let v = probabilities(&logits)[(0, occ_col)];
                    sum += v;
                    sum2 += v * v;
                }
                let n = n_passes as f64;
                let var = ((sum2 - sum * sum / n) / (n - 1.0)).max(0.0);
                grid.set(x, y, z, 0, var);
            }
        }
    }
    Ok(grid)
}

/// |∇ŷ| per node of a 1-channel probability grid.
pub fn occupancy_gradient(grid: &ScalarGrid3) -> Result<ScalarGrid3, ModelError> {
    Ok(gradient_magnitude(grid)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;
    use crate::model::params::ModelConfig;
    use crate::synthdata::render::Frame;

    fn cloud() -> OrientedPointCloud {
        let mut points = Vec::new();
        for i in 0..50 {
            let a = i as f64 * 0.37;
            points.push(Vec3::new(0.05 * a.cos(), 0.05 * a.sin(), 0.002 * i as f64));
        }
        OrientedPointCloud {
            normals: vec![Vec3::new(0.0, 0.0, 1.0); points.len()],
            points,
            frame: Frame::RobotWorld,
        }
    }

    fn lattice() -> GridLattice {
        GridLattice::covering(
            &Aabb::new(Vec3::new(-0.08, -0.08, -0.02), Vec3::new(0.08, 0.08, 0.12)),
            8,
        )
    }

    #[test]
    fn grid_matches_looped_decode_bit_for_bit() {
        let params = ModelParams::init(ModelConfig::small(Mode::Trinary), 1);
        let c = cloud();
        let lat = lattice();
        let grid = predict_grid(&params, &c, &lat).unwrap();
        let (enc, _) = encode(&params, &c).unwrap();
        let [nx, ny, nz] = lat.dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let pred = decode(&params, &enc, lat.point(x, y, z));
                    for ch in 0..3 {
                        assert_eq!(grid.at(x, y, z, ch), pred.probs[ch]);
                    }
                }
            }
        }
    }

    #[test]
    fn grid_probabilities_are_normalized() {
        let params = ModelParams::init(ModelConfig::small(Mode::Trinary), 2);
        let grid = predict_grid(&params, &cloud(), &lattice()).unwrap();
        let [nx, ny, nz] = grid.lattice.dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let s: f64 = (0..3).map(|c| grid.at(x, y, z, c)).sum();
                    assert!((s - 1.0).abs() < 1e-6);
                    for c in 0..3 {
                        let v = grid.at(x, y, z, c);
                        assert!((0.0..=1.0).contains(&v));
                    }
                }
            }
        }
        let binary = ModelParams::init(ModelConfig::small(Mode::Binary), 2);
        let bgrid = predict_grid(&binary, &cloud(), &lattice()).unwrap();
        assert!(bgrid.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn zero_dropout_gives_zero_variance() {
        let mut cfg = ModelConfig::small(Mode::Binary);
        cfg.dropout = 0.0;
        let params = ModelParams::init(cfg, 3);
        let var = mc_dropout_variance(&params, &cloud(), &lattice(), 8, 4).unwrap();
        assert!(var.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn variance_is_nonnegative_and_stabilizes() {
        let params = ModelParams::init(ModelConfig::small(Mode::Binary), 5);
        let c = cloud();
        let lat = GridLattice::covering(
            &Aabb::new(Vec3::new(-0.08, -0.08, -0.02), Vec3::new(0.08, 0.08, 0.12)),
            5,
        );
        let v64 = mc_dropout_variance(&params, &c, &lat, 64, 6).unwrap();
        let v128 = mc_dropout_variance(&params, &c, &lat, 128, 6).unwrap();
        assert!(v64.values.iter().all(|&v| v >= 0.0));
        let mean_diff: f64 = v64
            .values
            .iter()
            .zip(&v128.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / v64.values.len() as f64;
        assert!(mean_diff < 0.01, "mean diff {mean_diff}");
    }

    #[test]
    fn too_few_passes_is_an_error() {
        let params = ModelParams::init(ModelConfig::small(Mode::Binary), 7);
        assert!(matches!(
            mc_dropout_variance(&params, &cloud(), &lattice(), 1, 0),
            Err(ModelError::TooFewPasses(1))
        ));
    }

    #[test]
    fn step_field_concentrates_gradient_at_the_step() {
        let lat = GridLattice::new(Vec3::ZERO, 0.1, [9, 5, 5]);
        let grid = ScalarGrid3::from_fn(lat, |p| if p.x < 0.45 { 0.0 } else { 1.0 });
        let mag = occupancy_gradient(&grid).unwrap();
        // Highest magnitudes must sit in the two x-slices around the step.
        let peak = mag.values.iter().cloned().fold(0.0f64, f64::max);
        let [nx, ny, nz] = lat.dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let v = mag.at(x, y, z, 0);
                    if v > peak / 2.0 {
                        assert!((4..=5).contains(&x), "large gradient away from step at x={x}");
                    }
                }
            }
        }
    }

    #[test]
    fn gradient_magnitude_is_rotation_covariant() {
        // Rotating the field a quarter turn about z permutes the magnitudes.
        let lat = GridLattice::new(Vec3::ZERO, 0.1, [7, 7, 3]);
        let f = |p: Vec3| (7.0 * p.x).sin() + p.y * p.y;
        let grid = ScalarGrid3::from_fn(lat, f);
        // Same field with x and y swapped (mirror, an isometry of the lattice).
        let swapped = ScalarGrid3::from_fn(lat, |p| f(Vec3::new(p.y, p.x, p.z)));
        let a = occupancy_gradient(&grid).unwrap();
        let b = occupancy_gradient(&swapped).unwrap();
        for x in 0..7 {
            for y in 0..7 {
                for z in 0..3 {
                    assert!((a.at(x, y, z, 0) - b.at(y, x, z, 0)).abs() < 1e-9);
                }
            }
        }
    }
}
