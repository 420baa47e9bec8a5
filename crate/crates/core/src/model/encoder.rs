use super::params::{Linear, ModelParams};
use crate::error::ModelError;
use crate::geometry::{Aabb, Vec3};
use crate::synthdata::render::OrientedPointCloud;
use ndarray::{Array1, Array2, Axis};

/// Pooled cloud features: a global max-pooled vector and a coarse lattice of
/// per-cell max-pooled features, with the bounding box that anchors the
/// lattice in space.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub global: Array1<f64>,
    /// [cells, local_dim], x-fastest cell order.
    pub local: Array2<f64>,
    pub bbox: Aabb,
}

/// Intermediate activations kept for the backward pass.
pub struct EncCache {
    /// Activations per layer, acts[0] = input points [N, 3].
    pub acts: Vec<Array2<f64>>,
    /// Winning point index per global feature dimension.
    pub global_arg: Vec<usize>,
    /// Post-ReLU projected per-point features [N, local_dim].
    pub projected: Array2<f64>,
    /// Cell index per point.
    pub cell: Vec<usize>,
    /// Winning point per (cell, dim); usize::MAX = empty cell.
    pub local_arg: Array2<usize>,
}

fn relu_inplace(a: &mut Array2<f64>) {
    a.mapv_inplace(|v| v.max(0.0));
}

/// Cell index of a point on the local lattice over `bbox`.
pub fn cell_of(p: Vec3, bbox: &Aabb, res: usize) -> usize {
    let e = bbox.extent();
    let f = |v: f64, lo: f64, ext: f64| -> usize {
        if ext <= 0.0 {
            return 0;
        }
        (((v - lo) / ext * res as f64) as isize).clamp(0, res as isize - 1) as usize
    };
    let (x, y, z) = (
        f(p.x, bbox.min.x, e.x),
        f(p.y, bbox.min.y, e.y),
        f(p.z, bbox.min.z, e.z),
    );
    (z * res + y) * res + x
}

/// Trilinear interpolation stencil over cell centers: 8 (cell, weight) pairs.
/// Queries outside the box clamp to the boundary cells.
pub fn interp_stencil(p: Vec3, bbox: &Aabb, res: usize) -> [(usize, f64); 8] {
    let e = bbox.extent();
    let coord = |v: f64, lo: f64, ext: f64| -> (usize, usize, f64) {
        if ext <= 0.0 || res == 1 {
            return (0, 0, 0.0);
        }
        let u = (v - lo) / ext * res as f64 - 0.5;
        let u = u.clamp(0.0, res as f64 - 1.0);
        let i0 = (u.floor() as usize).min(res - 2);
        (i0, i0 + 1, u - i0 as f64)
    };
    let (x0, x1, fx) = coord(p.x, bbox.min.x, e.x);
    let (y0, y1, fy) = coord(p.y, bbox.min.y, e.y);
    let (z0, z1, fz) = coord(p.z, bbox.min.z, e.z);
    let idx = |x: usize, y: usize, z: usize| (z * res + y) * res + x;
    [
        (idx(x0, y0, z0), (1.0 - fx) * (1.0 - fy) * (1.0 - fz)),
        (idx(x1, y0, z0), fx * (1.0 - fy) * (1.0 - fz)),
        (idx(x0, y1, z0), (1.0 - fx) * fy * (1.0 - fz)),
        (idx(x1, y1, z0), fx * fy * (1.0 - fz)),
        (idx(x0, y0, z1), (1.0 - fx) * (1.0 - fy) * fz),
        (idx(x1, y0, z1), fx * (1.0 - fy) * fz),
        (idx(x0, y1, z1), (1.0 - fx) * fy * fz),
        (idx(x1, y1, z1), fx * fy * fz),
    ]
}

/// Runs the per-point MLP and both pooling stages.
pub fn encode(
    params: &ModelParams,
    cloud: &OrientedPointCloud,
) -> Result<(Encoding, EncCache), ModelError> {
    if cloud.is_empty() {
        return Err(ModelError::EmptyCloud);
    }
    let cfg = &params.config;
    let n = cloud.len();
    let mut bbox = Aabb::new(cloud.points[0], cloud.points[0]);
    for &p in &cloud.points {
        bbox.min = bbox.min.min_elem(p);
        bbox.max = bbox.max.max_elem(p);
    }
    let bbox = bbox.padded(0.1);

    let mut acts = Vec::with_capacity(cfg.n_encoder_layers() + 1);
    let mut a = Array2::from_shape_fn((n, 3), |(i, j)| {
        let p = cloud.points[i];
        [p.x, p.y, p.z][j] * super::params::COORD_SCALE
    });
    acts.push(a.clone());
    for l in 0..cfg.n_encoder_layers() {
        let layer = params.enc(l);
        a = a.dot(&layer.w) + &layer.b;
        relu_inplace(&mut a);
        acts.push(a.clone());
    }

    let f = cfg.global_dim();
    let mut global = Array1::zeros(f);
    let mut global_arg = vec![0usize; f];
    for j in 0..f {
        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            if a[(i, j)] > best {
                best = a[(i, j)];
                global_arg[j] = i;
            }
        }
        global[j] = best;
    }

    let proj = params.local_proj();
    let mut projected = a.dot(&proj.w) + &proj.b;
    relu_inplace(&mut projected);

    let cell: Vec<usize> = cloud
        .points
        .iter()
        .map(|&p| cell_of(p, &bbox, cfg.local_res))
        .collect();
    let cells = cfg.cells();
    let mut local = Array2::zeros((cells, cfg.local_dim));
    let mut local_arg = Array2::from_elem((cells, cfg.local_dim), usize::MAX);
    let mut seen = vec![false; cells];
    for i in 0..n {
        let c = cell[i];
        for d in 0..cfg.local_dim {
            if !seen[c] || projected[(i, d)] > local[(c, d)] {
                local[(c, d)] = projected[(i, d)];
                local_arg[(c, d)] = i;
            }
        }
        seen[c] = true;
    }

    Ok((
        Encoding { global, local, bbox },
        EncCache { acts, global_arg, projected, cell, local_arg },
    ))
}

/// Accumulates parameter gradients from upstream gradients on the pooled
/// features. `d_global` is [F], `d_local` is [cells, local_dim].
pub fn encode_backward(
    params: &ModelParams,
    cache: &EncCache,
    d_global: &Array1<f64>,
    d_local: &Array2<f64>,
    grads: &mut [Linear],
) {
    let cfg = &params.config;
    let n = cache.acts[0].nrows();
    let f = cfg.global_dim();

    // Route local-lattice gradients through the max-pool to projected
    // features, then through the ReLU and projection layer.
    let mut d_projected = Array2::zeros((n, cfg.local_dim));
    for c in 0..cfg.cells() {
        for d in 0..cfg.local_dim {
            let i = cache.local_arg[(c, d)];
            if i != usize::MAX {
                d_projected[(i, d)] += d_local[(c, d)];
            }
        }
    }
    for ((i, d), g) in d_projected.indexed_iter_mut() {
        if cache.projected[(i, d)] <= 0.0 {
            *g = 0.0;
        }
    }
    let h = cache.acts.last().unwrap();
    let e = cfg.n_encoder_layers();
    {
        let g = &mut grads[e];
        g.w += &h.t().dot(&d_projected);
        g.b += &d_projected.sum_axis(Axis(0));
    }
    let mut d_h = d_projected.dot(&params.local_proj().w.t());

    // Global max-pool routes each feature's gradient to its winning point.
    for j in 0..f {
        d_h[(cache.global_arg[j], j)] += d_global[j];
    }

    // Back through the per-point MLP.
    let mut d_a = d_h;
    for l in (0..e).rev() {
        // ReLU gate on this layer's output.
        for ((i, j), g) in d_a.indexed_iter_mut() {
            if cache.acts[l + 1][(i, j)] <= 0.0 {
                *g = 0.0;
            }
        }
        let g = &mut grads[l];
        g.w += &cache.acts[l].t().dot(&d_a);
        g.b += &d_a.sum_axis(Axis(0));
        if l > 0 {
            d_a = d_a.dot(&params.enc(l).w.t());
        }
    }
}
