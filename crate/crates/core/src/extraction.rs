//! From predicted grids to regions and meshes: occupied extraction plus the
//! three uncertain-region extraction methods (binary gradient, trinary
//! classes, dropout variance).

use crate::error::GeometryError;
use crate::geometry::{
    connected_components, gradient_magnitude, marching_cubes, Region3, ScalarGrid3, TriangleMesh,
};

/// Which occupancy values count as uncertain candidates in the binary and
/// variance methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UncertainRule {
    /// tau_u <= y < tau.
    Band,
    /// y < tau_u (the literal low-threshold reading; kept for comparison).
    Below,
}

impl UncertainRule {
    pub fn name(self) -> &'static str {
        match self {
            UncertainRule::Band => "band",
            UncertainRule::Below => "below",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "band" => Some(UncertainRule::Band),
            "below" => Some(UncertainRule::Below),
            _ => None,
        }
    }

    fn admits(self, y: f64, tau_u: f64, tau: f64) -> bool {
        match self {
            UncertainRule::Band => (tau_u..tau).contains(&y),
            UncertainRule::Below => y < tau_u,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionConfig {
    /// Occupied threshold on the occupancy probability.
    pub tau: f64,
    /// Lower threshold bounding the uncertain candidate band.
    pub tau_u: f64,
    pub rule: UncertainRule,
    /// Connected components smaller than this are dropped.
    pub min_voxels: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig { tau: 0.5, tau_u: 0.2, rule: UncertainRule::Band, min_voxels: 0 }
    }
}

impl ExtractionConfig {
    pub fn is_valid(&self) -> bool {
        0.0 < self.tau_u && self.tau_u < self.tau && self.tau < 1.0
    }

    /// Parameter echo for the provenance sidecar.
    pub fn to_params_text(&self) -> String {
        format!(
            "tau = {}\ntau_u = {}\nuncertain_rule = {}\nmin_component_voxels = {}\n",
            self.tau,
            self.tau_u,
            self.rule.name(),
            self.min_voxels
        )
    }
}

/// Default small-component cutoff: 0.1% of the grid's voxels.
pub fn default_min_voxels(n_grid_voxels: usize) -> usize {
    n_grid_voxels / 1000
}

/// Superlevel set {y >= tau} with small components removed, plus the marching
/// cubes isosurface at tau.
pub fn extract_occupied(
    prob: &ScalarGrid3,
    tau: f64,
    min_voxels: usize,
) -> Result<(Region3, TriangleMesh), GeometryError> {
    assert_eq!(prob.channels, 1);
    let region = connected_components(&Region3::from_grid_threshold(prob, |v| v >= tau), min_voxels);
    let mesh = marching_cubes(prob, tau)?;
    Ok((region, mesh))
}

/// Binary-gradient method: the candidate band intersected with nodes whose
/// occupancy gradient magnitude does not exceed the grid-wide mean. The
/// comparison is non-strict so a perfectly flat field (all magnitudes equal
/// to the mean) is fully admitted.
pub fn extract_uncertain_binary(
    prob: &ScalarGrid3,
    cfg: &ExtractionConfig,
) -> Result<Region3, GeometryError> {
    assert_eq!(prob.channels, 1);
    assert!(cfg.is_valid());
    let mag = gradient_magnitude(prob)?;
    let mean = mag.mean();
    let mask = prob
        .values
        .iter()
        .zip(&mag.values)
        .map(|(&y, &m)| cfg.rule.admits(y, cfg.tau_u, cfg.tau) && m <= mean)
        .collect();
    Ok(connected_components(
        &Region3::from_mask(prob.lattice, mask),
        cfg.min_voxels,
    ))
}

/// Threshold-calibrated argmax over class probabilities: the winning class
/// maximizes p_c / theta_c. Uniform thetas recover the plain argmax.
pub fn calibrated_argmax(probs: [f64; 3], thetas: [f64; 3]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for c in 0..3 {
        let v = probs[c] / thetas[c];
        if v > best_v {
            best_v = v;
            best = c;
        }
    }
    best
}

/// Trinary method: nodes whose calibrated argmax lands on the uncertain
/// class, with small components removed.
pub fn extract_uncertain_trinary(
    prob3: &ScalarGrid3,
    thetas: [f64; 3],
    min_voxels: usize,
) -> Region3 {
    assert_eq!(prob3.channels, 3);
    assert!(thetas.iter().all(|&t| t > 0.0));
    let n = prob3.lattice.len();
    let mut mask = vec![false; n];
    for (i, m) in mask.iter_mut().enumerate() {
        let p = [
            prob3.values[3 * i],
            prob3.values[3 * i + 1],
            prob3.values[3 * i + 2],
        ];
        *m = calibrated_argmax(p, thetas) == 2;
    }
    connected_components(&Region3::from_mask(prob3.lattice, mask), min_voxels)
}

/// Dropout-variance method: the candidate band intersected with nodes whose
/// MC-dropout variance is strictly above the grid-wide mean.
pub fn extract_uncertain_variance(
    prob: &ScalarGrid3,
    var: &ScalarGrid3,
    cfg: &ExtractionConfig,
) -> Result<Region3, GeometryError> {
    assert_eq!(prob.channels, 1);
    assert_eq!(var.channels, 1);
    assert!(cfg.is_valid());
    if prob.lattice != var.lattice {
        return Err(GeometryError::LatticeMismatch);
    }
    let mean = var.mean();
    let mask = prob
        .values
        .iter()
        .zip(&var.values)
        .map(|(&y, &v)| cfg.rule.admits(y, cfg.tau_u, cfg.tau) && v > mean)
        .collect();
    Ok(connected_components(
        &Region3::from_mask(prob.lattice, mask),
        cfg.min_voxels,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GridLattice, Vec3};
    use crate::rng::rng_for;
    use rand::Rng;

    fn lat(n: usize) -> GridLattice {
        GridLattice::new(Vec3::ZERO, 1.0 / (n as f64 - 1.0), [n, n, n])
    }

    fn sphere_prob(n: usize, r: f64) -> ScalarGrid3 {
        // Perfect step field: 1 inside the sphere around the cube center.
        ScalarGrid3::from_fn(lat(n), |p| {
            if (p - Vec3::new(0.5, 0.5, 0.5)).norm() < r {
                1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn step_sphere_region_is_the_interior() {
        let prob = sphere_prob(24, 0.3);
        let (region, mesh) = extract_occupied(&prob, 0.5, 0).unwrap();
        let l = prob.lattice;
        let [nx, ny, nz] = l.dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let inside = (l.point(x, y, z) - Vec3::new(0.5, 0.5, 0.5)).norm() < 0.3;
                    assert_eq!(region.contains_index(x, y, z), inside);
                }
            }
        }
        assert!(!mesh.triangles.is_empty());
    }

    #[test]
    fn lower_threshold_gives_superset() {
        let prob = ScalarGrid3::from_fn(lat(16), |p| {
            (1.0 - (p - Vec3::new(0.5, 0.5, 0.5)).norm()).clamp(0.0, 1.0)
        });
        let (a, _) = extract_occupied(&prob, 0.3, 0).unwrap();
        let (b, _) = extract_occupied(&prob, 0.5, 0).unwrap();
        assert!(b.voxel_count() < a.voxel_count());
        assert_eq!(a.intersect(&b).voxel_count(), b.voxel_count());
    }

    #[test]
    fn mesh_vertices_hug_the_region_boundary() {
        let prob = ScalarGrid3::from_fn(lat(24), |p| {
            (1.0 - 2.0 * (p - Vec3::new(0.5, 0.5, 0.5)).norm()).clamp(0.0, 1.0)
        });
        let (region, mesh) = extract_occupied(&prob, 0.5, 0).unwrap();
        let spacing = prob.lattice.spacing;
        for &v in &mesh.vertices {
            // Within one voxel of some region voxel and of some non-region node.
            let nearest = region.lattice.nearest_node(v).unwrap();
            let mut near_in = false;
            let mut near_out = false;
            for dz in -1i64..=1 {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (x, y, z) = (
                            nearest[0] as i64 + dx,
                            nearest[1] as i64 + dy,
                            nearest[2] as i64 + dz,
                        );
                        if x < 0 || y < 0 || z < 0 {
                            continue;
                        }
                        let (x, y, z) = (x as usize, y as usize, z as usize);
                        let [nx, ny, nzd] = region.lattice.dims;
                        if x >= nx || y >= ny || z >= nzd {
                            continue;
                        }
                        if region.contains_index(x, y, z) {
                            near_in = true;
                        } else {
                            near_out = true;
                        }
                    }
                }
            }
            assert!(near_in && near_out, "vertex {v:?} not near boundary ({spacing})");
        }
    }

    #[test]
    fn constant_band_grid_is_fully_uncertain() {
        let prob = ScalarGrid3::from_fn(lat(8), |_| 0.3);
        let cfg = ExtractionConfig { tau: 0.5, tau_u: 0.1, ..Default::default() };
        let r = extract_uncertain_binary(&prob, &cfg).unwrap();
        assert_eq!(r.voxel_count(), 8 * 8 * 8);
        let zeros = ScalarGrid3::from_fn(lat(8), |_| 0.0);
        assert_eq!(extract_uncertain_binary(&zeros, &cfg).unwrap().voxel_count(), 0);
    }

    #[test]
    fn steep_shell_excluded_flat_plateau_kept() {
        // A steep 0 -> 1 wall at x = 0.5 and a flat 0.3 plateau in front of it
        // (x > 0.7): the plateau is in the band with low gradient; the wall
        // band nodes carry a large gradient and are removed.
        let prob = ScalarGrid3::from_fn(lat(21), |p| {
            if p.x < 0.5 {
                1.0
            } else if p.x < 0.7 {
                1.0 - (p.x - 0.5) * 3.5
            } else {
                0.3
            }
        });
        let cfg = ExtractionConfig { tau: 0.5, tau_u: 0.1, ..Default::default() };
        let r = extract_uncertain_binary(&prob, &cfg).unwrap();
        assert!(r.voxel_count() > 0);
        let l = prob.lattice;
        let [nx, ny, nz] = l.dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    if r.contains_index(x, y, z) {
                        assert!(l.point(x, y, z).x > 0.7, "shell node survived");
                    }
                }
            }
        }
        // Plateau interior is retained.
        assert!(r.contains_index(17, 10, 10));
    }

    #[test]
    fn trinary_examples_and_argmax_reduction() {
        assert_eq!(calibrated_argmax([0.1, 0.1, 0.8], [1.0 / 3.0, 1.0 / 3.0, 0.5]), 2);
        assert_eq!(calibrated_argmax([0.98, 0.01, 0.01], [1.0 / 3.0, 1.0 / 3.0, 0.5]), 0);
        let mut rng = rng_for(8, 0);
        let u = [1.0 / 3.0; 3];
        for _ in 0..1000 {
            let a: f64 = rng.gen();
            let b: f64 = rng.gen_range(0.0..(1.0 - a).max(1e-9));
            let p = [a, b, 1.0 - a - b];
            let plain = (0..3).max_by(|&i, &j| p[i].total_cmp(&p[j])).unwrap();
            assert_eq!(calibrated_argmax(p, u), plain);
        }
    }

    #[test]
    fn trinary_region_picks_uncertain_nodes() {
        let l = lat(6);
        let mut grid = ScalarGrid3::zeros(l, 3);
        for z in 0..6 {
            for y in 0..6 {
                for x in 0..6 {
                    if x < 3 {
                        grid.set(x, y, z, 0, 0.9);
                        grid.set(x, y, z, 1, 0.05);
                        grid.set(x, y, z, 2, 0.05);
                    } else {
                        grid.set(x, y, z, 0, 0.2);
                        grid.set(x, y, z, 1, 0.2);
                        grid.set(x, y, z, 2, 0.6);
                    }
                }
            }
        }
        let r = extract_uncertain_trinary(&grid, [1.0 / 3.0; 3], 0);
        assert_eq!(r.voxel_count(), 3 * 6 * 6);
    }

    #[test]
    fn variance_method_examples() {
        let prob = ScalarGrid3::from_fn(lat(8), |_| 0.3);
        let cfg = ExtractionConfig { tau: 0.5, tau_u: 0.1, ..Default::default() };
        let zero_var = ScalarGrid3::from_fn(lat(8), |_| 0.0);
        assert_eq!(
            extract_uncertain_variance(&prob, &zero_var, &cfg).unwrap().voxel_count(),
            0
        );
        let uniform_var = ScalarGrid3::from_fn(lat(8), |_| 0.25);
        assert_eq!(
            extract_uncertain_variance(&prob, &uniform_var, &cfg).unwrap().voxel_count(),
            0
        );
        // High-variance blob inside the band: exactly that blob survives.
        let blob_var = ScalarGrid3::from_fn(lat(8), |p| {
            if p.x < 0.3 && p.y < 0.3 && p.z < 0.3 {
                1.0
            } else {
                0.0
            }
        });
        let r = extract_uncertain_variance(&prob, &blob_var, &cfg).unwrap();
        let expect = Region3::from_grid_threshold(&blob_var, |v| v > 0.5);
        assert_eq!(r.mask, expect.mask);
        // Lattice mismatch is an error.
        let other = ScalarGrid3::from_fn(lat(9), |_| 0.0);
        assert!(matches!(
            extract_uncertain_variance(&prob, &other, &cfg),
            Err(GeometryError::LatticeMismatch)
        ));
    }

    #[test]
    fn occupied_and_uncertain_are_disjoint() {
        let mut rng = rng_for(3, 1);
        let prob = ScalarGrid3::from_fn(lat(10), |_| rng.gen());
        let cfg = ExtractionConfig::default();
        let (occ, _) = extract_occupied(&prob, cfg.tau, 0).unwrap();
        let unc = extract_uncertain_binary(&prob, &cfg).unwrap();
        assert_eq!(occ.intersect(&unc).voxel_count(), 0);
        let mut rng2 = rng_for(3, 2);
        let var = ScalarGrid3::from_fn(lat(10), |_| rng2.gen());
        let uv = extract_uncertain_variance(&prob, &var, &cfg).unwrap();
        assert_eq!(occ.intersect(&uv).voxel_count(), 0);
    }

    #[test]
    fn lower_tau_u_grows_the_candidate_set() {
        let mut rng = rng_for(4, 1);
        let prob = ScalarGrid3::from_fn(lat(10), |_| rng.gen());
        let a = extract_uncertain_binary(
            &prob,
            &ExtractionConfig { tau: 0.6, tau_u: 0.3, ..Default::default() },
        )
        .unwrap();
        let b = extract_uncertain_binary(
            &prob,
            &ExtractionConfig { tau: 0.6, tau_u: 0.1, ..Default::default() },
        )
        .unwrap();
        assert_eq!(a.intersect(&b).voxel_count(), a.voxel_count());
    }

    #[test]
    fn component_filter_applies() {
        // One 3x3x3 blob (27 voxels) and one isolated voxel in the band.
        let l = lat(10);
        let prob = ScalarGrid3::from_fn(l, |p| {
            let blob = p.x < 0.3 && p.y < 0.3 && p.z < 0.3;
            let speck = (p.x - 1.0).abs() < 0.01 && (p.y - 1.0).abs() < 0.01 && (p.z - 1.0).abs() < 0.01;
            if blob || speck {
                0.3
            } else {
                0.0
            }
        });
        let cfg = ExtractionConfig { tau: 0.5, tau_u: 0.1, min_voxels: 5, ..Default::default() };
        let r = extract_uncertain_binary(&prob, &cfg).unwrap();
        assert!(r.component_counts.iter().all(|&c| c >= 5));
        assert!(!r.contains_index(9, 9, 9));
        assert!(r.voxel_count() > 0);
    }
}
