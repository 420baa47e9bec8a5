//! Quantitative evaluation: volumetric confusion counts and segmentation
//! metrics, grasp-risk rates, Chamfer distance between meshes, and
//! IoU-maximizing threshold calibration.

use crate::error::GeometryError;
use crate::geometry::{sample_points, Aabb, Region3, TriangleMesh, Vec3};
use std::collections::HashMap;

/// One-vs-rest counts for a single region class, with the false-positive
/// point indices retained for union accounting across classes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_count: usize,
    pub tn: usize,
    pub fp_idx: Vec<usize>,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_count + self.tn
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfusionCounts {
    pub occ: ClassCounts,
    pub unc: ClassCounts,
    pub n_points: usize,
}

/// Tight bounding box over a region's set voxels.
fn region_bbox(r: &Region3) -> Option<Aabb> {
    let [nx, ny, nz] = r.lattice.dims;
    let mut out: Option<Aabb> = None;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if r.contains_index(x, y, z) {
                    let p = r.lattice.point(x, y, z);
                    let b = Aabb::new(p, p);
                    out = Some(match out {
                        Some(o) => o.union(&b),
                        None => b,
                    });
                }
            }
        }
    }
    out
}

/// Sampling domain for confusion counts: the union bbox of all nonempty
/// regions padded by 10% per side. Falls back to the ground-truth occupied
/// lattice box when every region is empty.
pub fn confusion_domain(regions: &[&Region3]) -> Aabb {
    let mut out: Option<Aabb> = None;
    for r in regions {
        if let Some(b) = region_bbox(r) {
            out = Some(match out {
                Some(o) => o.union(&b),
                None => b,
            });
        }
    }
    out.unwrap_or_else(|| regions[0].lattice.bbox()).padded(0.1)
}

/// Uniform sample points over the confusion domain.
pub fn confusion_points(regions: &[&Region3], n: usize, seed: u64) -> Vec<Vec3> {
    sample_points(&confusion_domain(regions), n, seed)
}

/// Classifies each sample point against predicted and ground-truth regions,
/// one-vs-rest per class.
pub fn confusion(
    pred_occ: &Region3,
    pred_unc: &Region3,
    gt_occ: &Region3,
    gt_unc: &Region3,
    points: &[Vec3],
) -> ConfusionCounts {
    let mut out = ConfusionCounts { n_points: points.len(), ..Default::default() };
    for (i, &p) in points.iter().enumerate() {
        for (pred, gt, c) in [
            (pred_occ, gt_occ, &mut out.occ),
            (pred_unc, gt_unc, &mut out.unc),
        ] {
            match (pred.contains_point(p), gt.contains_point(p)) {
                (true, true) => c.tp += 1,
                (true, false) => {
                    c.fp += 1;
                    c.fp_idx.push(i);
                }
                (false, true) => c.fn_count += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    out
}

/// Standard segmentation rates. `valid` is false when any denominator was
/// zero; the affected metrics are reported as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionMetrics {
    pub iou: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub valid: bool,
}

fn ratio(num: usize, den: usize, valid: &mut bool) -> f64 {
    if den == 0 {
        *valid = false;
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn segmentation_metrics(c: &ClassCounts) -> RegionMetrics {
    let mut valid = true;
    let iou = ratio(c.tp, c.tp + c.fp + c.fn_count, &mut valid);
    let precision = ratio(c.tp, c.tp + c.fp, &mut valid);
    let recall = ratio(c.tp, c.tp + c.fn_count, &mut valid);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        valid = false;
        0.0
    };
    RegionMetrics { iou, f1, precision, recall, valid }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspRisks {
    /// Grasp collision risk: missed volume over all relevant volume.
    pub gcr: f64,
    /// Grasp miss risk: hallucinated occupied volume over predicted occupied.
    pub gmr: f64,
    /// Grasp exclusion risk: distinct false-positive locations over the
    /// predicted-free-of-occupied volume.
    pub ger: f64,
    pub valid: bool,
}

pub fn grasp_risks(c: &ConfusionCounts) -> GraspRisks {
    let mut valid = true;
    let gcr = ratio(
        c.occ.fn_count + c.unc.fn_count,
        c.occ.tp + c.occ.fn_count + c.unc.tp + c.unc.fn_count,
        &mut valid,
    );
    let gmr = ratio(c.occ.fp, c.occ.fp + c.occ.tp, &mut valid);
    let mut union: Vec<usize> = c.occ.fp_idx.iter().chain(&c.unc.fp_idx).copied().collect();
    union.sort_unstable();
    union.dedup();
    let ger = ratio(union.len(), c.occ.fp + c.occ.tn, &mut valid);
    GraspRisks { gcr, gmr, ger, valid }
}

/// Closest-point-on-triangle Euclidean distance.
fn point_triangle_dist(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (ap - ab * v).norm();
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (ap - ac * w).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp - (c - b) * w).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (ap - ab * v - ac * w).norm()
}

/// Voxel hash over triangles for nearest-surface queries. Triangles are
/// registered in every cell their bounding box touches.
struct TriGrid {
    cell: f64,
    tris: Vec<[Vec3; 3]>,
    map: HashMap<[i64; 3], Vec<usize>>,
    key_min: [i64; 3],
    key_max: [i64; 3],
}

impl TriGrid {
    fn build(tris: Vec<[Vec3; 3]>, cell: f64) -> Self {
        let mut map: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut key_min = [i64::MAX; 3];
        let mut key_max = [i64::MIN; 3];
        for (i, t) in tris.iter().enumerate() {
            let lo = t[0].min_elem(t[1]).min_elem(t[2]);
            let hi = t[0].max_elem(t[1]).max_elem(t[2]);
            let k0 = Self::key(lo, cell);
            let k1 = Self::key(hi, cell);
            for z in k0[2]..=k1[2] {
                for y in k0[1]..=k1[1] {
                    for x in k0[0]..=k1[0] {
                        map.entry([x, y, z]).or_default().push(i);
                    }
                }
            }
            for a in 0..3 {
                key_min[a] = key_min[a].min(k0[a]);
                key_max[a] = key_max[a].max(k1[a]);
            }
        }
        TriGrid { cell, tris, map, key_min, key_max }
    }

    fn key(p: Vec3, cell: f64) -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    }

    fn brute(&self, q: Vec3) -> f64 {
        self.tris
            .iter()
            .map(|t| point_triangle_dist(q, t[0], t[1], t[2]))
            .fold(f64::INFINITY, f64::min)
    }

    fn nearest(&self, q: Vec3) -> f64 {
        let k0 = Self::key(q, self.cell);
        let max_ring = (0..3)
            .map(|a| (k0[a] - self.key_min[a]).abs().max((k0[a] - self.key_max[a]).abs()))
            .max()
            .unwrap_or(0)
            + 1;
        let mut best = f64::INFINITY;
        for ring in 0..=max_ring {
            // Anything registered in a cell at Chebyshev ring r is at least
            // (r-1)*cell away, so the search can stop once that bound passes
            // the best distance found.
            if best <= (ring - 1) as f64 * self.cell {
                return best;
            }
            // Far queries would walk many empty rings; finish by brute force
            // instead once the ring enumeration gets large.
            if ring > 24 {
                return best.min(self.brute(q));
            }
            for dz in -ring..=ring {
                for dy in -ring..=ring {
                    for dx in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        if let Some(v) = self.map.get(&[k0[0] + dx, k0[1] + dy, k0[2] + dz]) {
                            for &i in v {
                                let t = &self.tris[i];
                                best = best.min(point_triangle_dist(q, t[0], t[1], t[2]));
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

fn normalized_tris(mesh: &TriangleMesh, center: Vec3, scale: f64) -> Vec<[Vec3; 3]> {
    mesh.triangles
        .iter()
        .map(|t| {
            [
                (mesh.vertices[t[0]] - center) * scale,
                (mesh.vertices[t[1]] - center) * scale,
                (mesh.vertices[t[2]] - center) * scale,
            ]
        })
        .collect()
}

fn directed_mean(points: &[Vec3], grid: &TriGrid) -> f64 {
    points.iter().map(|&p| grid.nearest(p)).sum::<f64>() / points.len() as f64
}

/// Chamfer-L1 distance: both meshes are normalized jointly so that `mesh_gt`
/// fits the unit cube, then surface samples of each mesh are measured against
/// the other mesh's surface (unsquared point-to-triangle distances) and the
/// two directed means are averaged.
pub fn chamfer_l1(
    mesh_gt: &TriangleMesh,
    mesh_pred: &TriangleMesh,
    n_samples: usize,
    seed: u64,
) -> Result<f64, GeometryError> {
    if mesh_gt.is_empty() || mesh_pred.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    let bbox = mesh_gt.bbox().ok_or(GeometryError::EmptyMesh)?;
    let scale = 1.0 / bbox.max_extent().max(1e-12);
    let center = bbox.center();
    let a_pts: Vec<Vec3> = mesh_gt
        .sample_surface(n_samples, seed)
        .into_iter()
        .map(|(p, _)| (p - center) * scale)
        .collect();
    let b_pts: Vec<Vec3> = mesh_pred
        .sample_surface(n_samples, seed ^ 0x9e37_79b9)
        .into_iter()
        .map(|(p, _)| (p - center) * scale)
        .collect();
    let cell = 1.0 / 24.0;
    let a_grid = TriGrid::build(normalized_tris(mesh_gt, center, scale), cell);
    let b_grid = TriGrid::build(normalized_tris(mesh_pred, center, scale), cell);
    Ok(0.5 * (directed_mean(&a_pts, &b_grid) + directed_mean(&b_pts, &a_grid)))
}

/// One evaluated point of a threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub score: f64,
}

/// Evaluates `score` at each sweep value and returns the argmax along with
/// the full curve. Ties are broken toward 0.5.
pub fn calibrate(sweep: &[f64], mut score: impl FnMut(f64) -> f64) -> (f64, Vec<SweepPoint>) {
    assert!(!sweep.is_empty());
    let curve: Vec<SweepPoint> = sweep
        .iter()
        .map(|&v| SweepPoint { value: v, score: score(v) })
        .collect();
    let best_score = curve.iter().map(|p| p.score).fold(f64::NEG_INFINITY, f64::max);
    let best = curve
        .iter()
        .filter(|p| (p.score - best_score).abs() < 1e-12)
        .min_by(|a, b| {
            (a.value - 0.5).abs().total_cmp(&(b.value - 0.5).abs())
        })
        .unwrap();
    (best.value, curve)
}

/// Voxelwise IoU between two regions on the same lattice.
pub fn voxel_iou(a: &Region3, b: &Region3) -> f64 {
    assert_eq!(a.lattice, b.lattice);
    let mut inter = 0usize;
    let mut union = 0usize;
    for (x, y) in a.mask.iter().zip(&b.mask) {
        if *x && *y {
            inter += 1;
        }
        if *x || *y {
            union += 1;
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Column order of the per-sample evaluation report.
pub const REPORT_HEADER: &str =
    "id,iou_occ,f1_occ,prec_occ,rec_occ,cd_occ,iou_unc,f1_unc,prec_unc,rec_unc,cd_unc,gcr,gmr,ger";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub id: String,
    /// Values in REPORT_HEADER order after `id`.
    pub values: [f64; 13],
}

/// CSV with the fixed header, one row per sample, and a final `mean` summary
/// row averaging every column.
pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.id);
        for v in r.values {
            out.push_str(&format!(",{v:.6}"));
        }
        out.push('\n');
    }
    if !rows.is_empty() {
        out.push_str("mean");
        for j in 0..13 {
            let m = rows.iter().map(|r| r.values[j]).sum::<f64>() / rows.len() as f64;
            out.push_str(&format!(",{m:.6}"));
        }
        out.push('\n');
    }
    out
}
