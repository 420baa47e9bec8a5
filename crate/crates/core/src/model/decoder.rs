use super::encoder::{interp_stencil, Encoding};
use super::params::{Linear, ModelParams};
use crate::geometry::Vec3;
use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const LOGIT_CLAMP: f64 = 15.0;

/// Per-batch intermediates for the backward pass.
pub struct DecCache {
    /// Decoder input rows [Q, 3 + F + D].
    pub x: Array2<f64>,
    /// Trilinear stencil per query.
    pub stencil: Vec<[(usize, f64); 8]>,
    /// Hidden activations post-ReLU, pre-dropout.
    pub u1: Array2<f64>,
    pub u2: Array2<f64>,
    /// Dropout keep masks scaled by 1/(1-p); all ones when dropout is off.
    pub m1: Array2<f64>,
    pub m2: Array2<f64>,
}

fn dropout_mask(rows: usize, cols: usize, p: f64, rng: Option<&mut ChaCha8Rng>) -> Array2<f64> {
    match rng {
        Some(rng) if p > 0.0 => {
            let keep = 1.0 - p;
            Array2::from_shape_fn((rows, cols), |_| {
                if rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
        }
        _ => Array2::ones((rows, cols)),
    }
}

/// Forward pass over a batch of queries. `dropout_rng` enables the stochastic
/// path (training, MC dropout); None gives the deterministic decoder.
/// Returns raw (unclamped) logits [Q, K].
pub fn decode_batch(
    params: &ModelParams,
    enc: &Encoding,
    queries: &[Vec3],
    dropout_rng: Option<&mut ChaCha8Rng>,
) -> (Array2<f64>, DecCache) {
    let cfg = &params.config;
    let q = queries.len();
    let f = cfg.global_dim();
    let d = cfg.local_dim;
    let mut x = Array2::zeros((q, 3 + f + d));
    let mut stencil = Vec::with_capacity(q);
    for (i, &p) in queries.iter().enumerate() {
        x[(i, 0)] = p.x * super::params::COORD_SCALE;
        x[(i, 1)] = p.y * super::params::COORD_SCALE;
        x[(i, 2)] = p.z * super::params::COORD_SCALE;
        for j in 0..f {
            x[(i, 3 + j)] = enc.global[j];
        }
        let st = interp_stencil(p, &enc.bbox, cfg.local_res);
        for &(c, w) in &st {
            if w != 0.0 {
                for k in 0..d {
                    x[(i, 3 + f + k)] += w * enc.local[(c, k)];
                }
            }
        }
        stencil.push(st);
    }

    let mut rng = dropout_rng;
    let l1 = params.dec(0);
    let mut u1 = x.dot(&l1.w) + &l1.b;
    u1.mapv_inplace(|v| v.max(0.0));
    let m1 = dropout_mask(q, cfg.decoder_hidden, cfg.dropout, rng.as_deref_mut());
    let u1d = &u1 * &m1;

    let l2 = params.dec(1);
    let mut u2 = u1d.dot(&l2.w) + &l2.b;
    u2.mapv_inplace(|v| v.max(0.0));
    let m2 = dropout_mask(q, cfg.decoder_hidden, cfg.dropout, rng);
    let u2d = &u2 * &m2;

    let l3 = params.dec(2);
    let logits = u2d.dot(&l3.w) + &l3.b;
    (logits, DecCache { x, stencil, u1, u2, m1, m2 })
}

/// Backward pass: accumulates decoder parameter gradients and returns the
/// gradients flowing into the pooled features (d_global, d_local).
pub fn decode_backward(
    params: &ModelParams,
    cache: &DecCache,
    d_logits: &Array2<f64>,
    grads: &mut [Linear],
) -> (Array1<f64>, Array2<f64>) {
    let cfg = &params.config;
    let e = cfg.n_encoder_layers();
    let f = cfg.global_dim();
    let d = cfg.local_dim;

    let u2d = &cache.u2 * &cache.m2;
    {
        let g = &mut grads[e + 3];
        g.w += &u2d.t().dot(d_logits);
        g.b += &d_logits.sum_axis(Axis(0));
    }
    let mut d_u2 = d_logits.dot(&params.dec(2).w.t()) * &cache.m2;
    for ((i, j), g) in d_u2.indexed_iter_mut() {
        if cache.u2[(i, j)] <= 0.0 {
            *g = 0.0;
        }
    }

    let u1d = &cache.u1 * &cache.m1;
    {
        let g = &mut grads[e + 2];
        g.w += &u1d.t().dot(&d_u2);
        g.b += &d_u2.sum_axis(Axis(0));
    }
    let mut d_u1 = d_u2.dot(&params.dec(1).w.t()) * &cache.m1;
    for ((i, j), g) in d_u1.indexed_iter_mut() {
        if cache.u1[(i, j)] <= 0.0 {
            *g = 0.0;
        }
    }

    {
        let g = &mut grads[e + 1];
        g.w += &cache.x.t().dot(&d_u1);
        g.b += &d_u1.sum_axis(Axis(0));
    }
    let d_x = d_u1.dot(&params.dec(0).w.t());

    let mut d_global = Array1::zeros(f);
    for i in 0..d_x.nrows() {
        for j in 0..f {
            d_global[j] += d_x[(i, 3 + j)];
        }
    }
    let mut d_local = Array2::zeros((cfg.cells(), d));
    for (i, st) in cache.stencil.iter().enumerate() {
        for &(c, w) in st {
            if w != 0.0 {
                for k in 0..d {
                    d_local[(c, k)] += w * d_x[(i, 3 + f + k)];
                }
            }
        }
    }
    (d_global, d_local)
}

/// Numerically safe class probabilities from logits, clamped to
/// [-LOGIT_CLAMP, LOGIT_CLAMP]. Binary: one sigmoid column. Trinary: softmax.
pub fn probabilities(logits: &Array2<f64>) -> Array2<f64> {
    let k = logits.ncols();
    let z = logits.mapv(|v| v.clamp(-LOGIT_CLAMP, LOGIT_CLAMP));
    if k == 1 {
        z.mapv(|v| 1.0 / (1.0 + (-v).exp()))
    } else {
        let mut out = z;
        for mut row in out.rows_mut() {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - m).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn binary_probabilities_are_sigmoid() {
        let p = probabilities(&array![[0.0], [2.0], [-40.0]]);
        assert!((p[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((p[(1, 0)] - 1.0 / (1.0 + (-2.0f64).exp())).abs() < 1e-12);
        // Clamp keeps the extreme case strictly inside (0, 1).
        assert!(p[(2, 0)] > 0.0);
    }

    #[test]
    fn trinary_probabilities_sum_to_one() {
        let p = probabilities(&array![[1.0, -2.0, 0.3], [30.0, -30.0, 0.0]]);
        for row in p.rows() {
            let s: f64 = row.sum();
            assert!((s - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
    }
}
