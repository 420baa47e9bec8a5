use super::decoder::{decode_batch, probabilities, LOGIT_CLAMP};
use super::encoder::{encode, encode_backward};
use super::params::{Linear, Mode, ModelConfig, ModelParams};
use crate::error::ModelError;
use crate::geometry::{sdf_object, Vec3};
use crate::rng::rng_for;
use crate::synthdata::dataset::{DatasetSample, LABEL_OCCUPIED};
use crate::synthdata::render::OrientedPointCloud;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub queries_per_sample: usize,
    /// Cloud points are subsampled to at most this many per sample.
    pub cloud_points: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Multiply the learning rate by this factor whenever validation loss
    /// has not improved for a third of the patience window. 1.0 disables.
    pub plateau_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            batch_size: 16,
            queries_per_sample: 512,
            cloud_points: 512,
            max_epochs: 200,
            patience: 10,
            plateau_decay: 0.5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn is_valid(&self) -> bool {
        self.lr > 0.0
            && self.patience >= 1
            && self.batch_size >= 1
            && self.max_epochs >= 1
            && (0.0..=1.0).contains(&self.plateau_decay)
            && self.plateau_decay > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Binary cross-entropy from logits [Q, 1] against {0,1} labels.
/// Returns (mean loss, d loss / d logits).
pub fn bce_loss(logits: &Array2<f64>, labels: &[u8]) -> Result<(f64, Array2<f64>), ModelError> {
    assert_eq!(logits.nrows(), labels.len());
    assert_eq!(logits.ncols(), 1);
    let q = labels.len() as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros(logits.raw_dim());
    for (i, &l) in labels.iter().enumerate() {
        if l > 1 {
            return Err(ModelError::LabelOutOfRange(l, 2));
        }
        let z = logits[(i, 0)].clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
        let p = 1.0 / (1.0 + (-z).exp());
        let y = l as f64;
        loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        grad[(i, 0)] = (p - y) / q;
    }
    Ok((loss / q, grad))
}

/// Categorical cross-entropy from logits [Q, 3] against class labels.
pub fn ce_loss(logits: &Array2<f64>, labels: &[u8]) -> Result<(f64, Array2<f64>), ModelError> {
    assert_eq!(logits.nrows(), labels.len());
    let k = logits.ncols();
    let q = labels.len() as f64;
    let probs = probabilities(logits);
    let mut loss = 0.0;
    let mut grad = Array2::zeros(logits.raw_dim());
    for (i, &l) in labels.iter().enumerate() {
        if l as usize >= k {
            return Err(ModelError::LabelOutOfRange(l, k));
        }
        loss -= probs[(i, l as usize)].max(1e-12).ln();
        for c in 0..k {
            let y = if c == l as usize { 1.0 } else { 0.0 };
            grad[(i, c)] = (probs[(i, c)] - y) / q;
        }
    }
    Ok((loss / q, grad))
}

pub fn loss_from_logits(
    mode: Mode,
    logits: &Array2<f64>,
    labels: &[u8],
) -> Result<(f64, Array2<f64>), ModelError> {
    match mode {
        Mode::Binary => bce_loss(logits, labels),
        Mode::Trinary => ce_loss(logits, labels),
    }
}

/// Training view of one dataset sample: subsampled cloud plus per-mode query
/// labels. Binary labels come from the ground-truth SDF under the true pose,
/// so uncertain-labeled queries get their actual occupancy.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub cloud: OrientedPointCloud,
    pub queries: Vec<Vec3>,
    pub labels: Vec<u8>,
}

pub fn prepare_sample(sample: &DatasetSample, mode: Mode, cloud_points: usize) -> PreparedSample {
    let mut cloud = sample.cloud.clone();
    if cloud.len() > cloud_points {
        let mut idx: Vec<usize> = (0..cloud.len()).collect();
        idx.shuffle(&mut rng_for(sample.seed, 0x50b));
        idx.truncate(cloud_points);
        idx.sort_unstable();
        cloud.points = idx.iter().map(|&i| cloud.points[i]).collect();
        cloud.normals = idx.iter().map(|&i| cloud.normals[i]).collect();
    }
    let labels = match mode {
        Mode::Trinary => sample.queries.labels.clone(),
        Mode::Binary => {
            let w2o = sample.pose.inverse();
            sample
                .queries
                .points
                .iter()
                .zip(&sample.queries.labels)
                .map(|(&p, &l)| {
                    if l == LABEL_OCCUPIED {
                        1
                    } else {
                        (sdf_object(&sample.spec, w2o.apply(p)) < 0.0) as u8
                    }
                })
                .collect()
        }
    };
    PreparedSample { cloud, queries: sample.queries.points.clone(), labels }
}

/// Forward + backward over one sample's selected queries; accumulates into
/// `grads` and returns the loss. Dropout active iff `dropout_rng` is Some.
pub fn sample_loss_grad(
    params: &ModelParams,
    prep: &PreparedSample,
    query_idx: &[usize],
    dropout_rng: Option<&mut rand_chacha::ChaCha8Rng>,
    grads: Option<&mut [Linear]>,
) -> Result<f64, ModelError> {
    let (enc, ecache) = encode(params, &prep.cloud)?;
    let queries: Vec<Vec3> = query_idx.iter().map(|&i| prep.queries[i]).collect();
    let labels: Vec<u8> = query_idx.iter().map(|&i| prep.labels[i]).collect();
    let (logits, dcache) = decode_batch(params, &enc, &queries, dropout_rng);
    let (loss, dlogits) = loss_from_logits(params.config.mode, &logits, &labels)?;
    if let Some(grads) = grads {
        let (dg, dl) = super::decoder::decode_backward(params, &dcache, &dlogits, grads);
        encode_backward(params, &ecache, &dg, &dl, grads);
    }
    Ok(loss)
}

struct Adam {
    m: Vec<Linear>,
    v: Vec<Linear>,
    t: usize,
    lr: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(params: &ModelParams, lr: f64) -> Self {
        Adam { m: params.zeros_like(), v: params.zeros_like(), t: 0, lr }
    }

    fn step(&mut self, params: &mut ModelParams, grads: &[Linear]) {
        self.t += 1;
        let bc1 = 1.0 - Self::B1.powi(self.t as i32);
        let bc2 = 1.0 - Self::B2.powi(self.t as i32);
        for (i, g) in grads.iter().enumerate() {
            let layer = &mut params.layers[i];
            let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64, lr: f64| {
                *m = Self::B1 * *m + (1.0 - Self::B1) * g;
                *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
                let mh = *m / bc1;
                let vh = *v / bc2;
                *p -= lr * mh / (vh.sqrt() + Self::EPS);
            };
            for ((p, &gv), (m, v)) in layer
                .w
                .iter_mut()
                .zip(g.w.iter())
                .zip(self.m[i].w.iter_mut().zip(self.v[i].w.iter_mut()))
            {
                update(p, gv, m, v, self.lr);
            }
            for ((p, &gv), (m, v)) in layer
                .b
                .iter_mut()
                .zip(g.b.iter())
                .zip(self.m[i].b.iter_mut().zip(self.v[i].b.iter_mut()))
            {
                update(p, gv, m, v, self.lr);
            }
        }
    }
}

/// Stops after `patience` observations without improvement over the best.
pub struct EarlyStop {
    pub patience: usize,
    pub best: f64,
    pub since_best: usize,
}

impl EarlyStop {
    pub fn new(patience: usize) -> Self {
        EarlyStop { patience, best: f64::INFINITY, since_best: 0 }
    }

    /// Returns (improved, should_stop).
    pub fn observe(&mut self, val: f64) -> (bool, bool) {
        if val < self.best {
            self.best = val;
            self.since_best = 0;
            (true, false)
        } else {
            self.since_best += 1;
            (false, self.since_best >= self.patience)
        }
    }
}

/// Adam training loop over prepared samples with best-checkpoint early
/// stopping on validation loss. Fully reproducible given the config seed.
pub fn train(
    model_cfg: ModelConfig,
    train_set: &[DatasetSample],
    val_set: &[DatasetSample],
    cfg: &TrainConfig,
) -> Result<(ModelParams, Vec<TrainLogRow>), ModelError> {
    assert!(cfg.is_valid());
    if train_set.is_empty() {
        return Err(ModelError::EmptySplit("train"));
    }
    if val_set.is_empty() {
        return Err(ModelError::EmptySplit("val"));
    }
    let mode = model_cfg.mode;
    let prepared: Vec<PreparedSample> = train_set
        .iter()
        .map(|s| prepare_sample(s, mode, cfg.cloud_points))
        .collect();
    let val_prepared: Vec<PreparedSample> = val_set
        .iter()
        .map(|s| prepare_sample(s, mode, cfg.cloud_points))
        .collect();

    let mut params = ModelParams::init(model_cfg, cfg.seed);
    let mut adam = Adam::new(&params, cfg.lr);
    let mut stopper = EarlyStop::new(cfg.patience);
    let mut best_params = params.clone();
    let mut log = Vec::new();

    for epoch in 0..cfg.max_epochs {
        let mut order: Vec<usize> = (0..prepared.len()).collect();
        order.shuffle(&mut rng_for(cfg.seed, 0xe90c ^ epoch as u64));
        let mut dropout_rng = rng_for(cfg.seed, 0xd309 ^ epoch as u64);
        let mut query_rng = rng_for(cfg.seed, 0x93e1 ^ epoch as u64);

        let mut train_loss = 0.0;
        let mut steps = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = params.zeros_like();
            let mut batch_loss = 0.0;
            for &si in batch {
                let prep = &prepared[si];
                let q_idx = pick_indices(prep.queries.len(), cfg.queries_per_sample, &mut query_rng);
                let loss = sample_loss_grad(
                    &params,
                    prep,
                    &q_idx,
                    Some(&mut dropout_rng),
                    Some(&mut grads),
                )?;
                if !loss.is_finite() {
                    return Err(ModelError::NonFiniteLoss { epoch, step: steps });
                }
                batch_loss += loss;
            }
            let scale = 1.0 / batch.len() as f64;
            for g in &mut grads {
                g.w *= scale;
                g.b *= scale;
            }
            adam.step(&mut params, &grads);
            train_loss += batch_loss * scale;
            steps += 1;
        }
        train_loss /= steps as f64;

        let mut val_loss = 0.0;
        for prep in &val_prepared {
            let all: Vec<usize> = (0..prep.queries.len()).collect();
            val_loss += sample_loss_grad(&params, prep, &all, None, None)?;
        }
        val_loss /= val_prepared.len() as f64;
        if !val_loss.is_finite() {
            return Err(ModelError::NonFiniteLoss { epoch, step: steps });
        }
        log.push(TrainLogRow { epoch, train_loss, val_loss });

        let (improved, stop) = stopper.observe(val_loss);
        if improved {
            best_params = params.clone();
        } else {
            let window = (cfg.patience / 3).max(1);
            if stopper.since_best % window == 0 {
                adam.lr *= cfg.plateau_decay;
            }
        }
        if stop {
            break;
        }
    }
    Ok((best_params, log))
}

fn pick_indices(n: usize, k: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<usize> {
    if n <= k {
        return (0..n).collect();
    }
    // Floyd's algorithm for a k-subset, then sorted for cache friendliness.
    let mut chosen = std::collections::BTreeSet::new();
    for j in (n - k)..n {
        let t = rng.gen_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    chosen.into_iter().collect()
}
