use crate::rng::rng_for;
use ndarray::{Array1, Array2};
use rand::Rng;

/// Input coordinates are multiplied by this before entering the network so
/// that desk-scale positions (a few centimeters) land near unit magnitude.
pub const COORD_SCALE: f64 = 10.0;

/// Output head: 1 sigmoid logit or 3 softmax logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Binary,
    Trinary,
}

impl Mode {
    pub fn classes(self) -> usize {
        match self {
            Mode::Binary => 1,
            Mode::Trinary => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Binary => "binary",
            Mode::Trinary => "trinary",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "binary" => Some(Mode::Binary),
            "trinary" => Some(Mode::Trinary),
            _ => None,
        }
    }
}

/// Architecture description. The encoder is a per-point MLP max-pooled into a
/// global feature plus a coarse local-feature lattice; the decoder maps
/// query coordinate + global + interpolated local feature to class logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub mode: Mode,
    /// Per-point MLP widths, starting at 3.
    pub encoder_widths: Vec<usize>,
    /// Local feature lattice resolution per axis.
    pub local_res: usize,
    /// Feature dimension per local cell.
    pub local_dim: usize,
    pub decoder_hidden: usize,
    pub dropout: f64,
}

impl ModelConfig {
    pub fn default_for(mode: Mode) -> Self {
        ModelConfig {
            mode,
            encoder_widths: vec![3, 64, 128, 256],
            local_res: 8,
            local_dim: 32,
            decoder_hidden: 256,
            dropout: 0.1,
        }
    }

    /// Middle ground: enough capacity for usable completions on a few
    /// hundred samples while staying trainable in tens of minutes on one
    /// core.
    pub fn mid(mode: Mode) -> Self {
        ModelConfig {
            mode,
            encoder_widths: vec![3, 48, 96, 160],
            local_res: 6,
            local_dim: 24,
            decoder_hidden: 128,
            dropout: 0.1,
        }
    }

    /// Reduced architecture for CPU-budget experiments.
    pub fn small(mode: Mode) -> Self {
        ModelConfig {
            mode,
            encoder_widths: vec![3, 32, 64, 128],
            local_res: 4,
            local_dim: 16,
            decoder_hidden: 96,
            dropout: 0.1,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.encoder_widths.len() >= 2
            && self.encoder_widths[0] == 3
            && self.encoder_widths.iter().all(|&w| w > 0)
            && self.local_res > 0
            && self.local_dim > 0
            && self.decoder_hidden > 0
            && (0.0..1.0).contains(&self.dropout)
    }

    pub fn global_dim(&self) -> usize {
        *self.encoder_widths.last().unwrap()
    }

    pub fn cells(&self) -> usize {
        self.local_res.pow(3)
    }

    pub fn decoder_input(&self) -> usize {
        3 + self.global_dim() + self.local_dim
    }

    pub fn n_encoder_layers(&self) -> usize {
        self.encoder_widths.len() - 1
    }

    /// Total layer count: encoder MLP, local projection, 3 decoder layers.
    pub fn n_layers(&self) -> usize {
        self.n_encoder_layers() + 1 + 3
    }

    /// (in, out) shape of layer `i` in flat layer order.
    pub fn layer_shape(&self, i: usize) -> (usize, usize) {
        let e = self.n_encoder_layers();
        if i < e {
            (self.encoder_widths[i], self.encoder_widths[i + 1])
        } else if i == e {
            (self.global_dim(), self.local_dim)
        } else if i == e + 1 {
            (self.decoder_input(), self.decoder_hidden)
        } else if i == e + 2 {
            (self.decoder_hidden, self.decoder_hidden)
        } else {
            assert_eq!(i, e + 3);
            (self.decoder_hidden, self.mode.classes())
        }
    }
}

/// Dense layer, y = x W + b with W of shape [in, out].
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Linear { w: Array2::zeros((n_in, n_out)), b: Array1::zeros(n_out) }
    }

    fn kaiming(rng: &mut impl Rng, n_in: usize, n_out: usize) -> Self {
        let scale = (2.0 / n_in as f64).sqrt();
        let w = Array2::from_shape_fn((n_in, n_out), |_| {
            // Uniform on [-sqrt(3), sqrt(3)] * scale has the He variance.
            (rng.gen::<f64>() * 2.0 - 1.0) * scale * 3f64.sqrt()
        });
        Linear { w, b: Array1::zeros(n_out) }
    }
}

/// All trainable tensors in flat layer order:
/// encoder layers, local projection, decoder 1/2/head.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub layers: Vec<Linear>,
}

impl ModelParams {
    pub fn init(config: ModelConfig, seed: u64) -> Self {
        assert!(config.is_valid());
        let mut rng = rng_for(seed, 0x1417);
        let layers = (0..config.n_layers())
            .map(|i| {
                let (n_in, n_out) = config.layer_shape(i);
                Linear::kaiming(&mut rng, n_in, n_out)
            })
            .collect();
        ModelParams { config, layers }
    }

    pub fn enc(&self, i: usize) -> &Linear {
        &self.layers[i]
    }

    pub fn local_proj(&self) -> &Linear {
        &self.layers[self.config.n_encoder_layers()]
    }

    pub fn dec(&self, i: usize) -> &Linear {
        &self.layers[self.config.n_encoder_layers() + 1 + i]
    }

    pub fn zeros_like(&self) -> Vec<Linear> {
        (0..self.config.n_layers())
            .map(|i| {
                let (n_in, n_out) = self.config.layer_shape(i);
                Linear::zeros(n_in, n_out)
            })
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.w.iter().all(|v| v.is_finite()) && l.b.iter().all(|v| v.is_finite())
        })
    }

    /// All parameters as one flat vector (w row-major, then b, per layer).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn assign_flat(&mut self, flat: &[f64]) {
        let mut k = 0;
        for l in &mut self.layers {
            for v in l.w.iter_mut() {
                *v = flat[k];
                k += 1;
            }
            for v in l.b.iter_mut() {
                *v = flat[k];
                k += 1;
            }
        }
        assert_eq!(k, flat.len());
    }
}
