use crate::CliError;
use occfield_core::extraction::UncertainRule;
use occfield_core::grasping::GripperDims;
use occfield_core::model::{Mode, ModelConfig, TrainConfig};
use occfield_core::synthdata::{CameraSampling, GenParams};
use std::collections::BTreeMap;
use std::path::Path;

/// Dataset regime: novel-view reuses every object spec across splits,
/// novel-instance keeps the spec pools disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetMode {
    NovelView,
    NovelInstance,
}

impl DatasetMode {
    pub fn name(self) -> &'static str {
        match self {
            DatasetMode::NovelView => "novel-view",
            DatasetMode::NovelInstance => "novel-instance",
        }
    }
}

/// Extraction method selection; `Auto` follows the model head (binary model
/// -> gradient method, trinary model -> trinary method).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Auto,
    Binary,
    Trinary,
    Variance,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Binary => "binary",
            Method::Trinary => "trinary",
            Method::Variance => "variance",
        }
    }
}

/// Every knob of the pipeline as a flat key = value map. Unknown keys are
/// rejected; the resolved config is echoed next to each command's outputs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub jobs: usize,
    pub mode: DatasetMode,
    pub n_specs: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub grid_res: usize,
    pub n_queries: usize,
    pub pose_samples: usize,
    pub theta_sim: f64,
    pub translation_jitter: f64,
    pub cam_width: usize,
    pub cam_height: usize,
    pub cam_focal_px: f64,
    pub cam_dist_min: f64,
    pub cam_dist_max: f64,
    pub model: Mode,
    pub arch: String,
    pub dropout: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub queries_per_sample: usize,
    pub cloud_points: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub tau: f64,
    pub tau_u: f64,
    pub uncertain_rule: UncertainRule,
    pub min_voxels: usize,
    pub method: Method,
    pub mc_passes: usize,
    pub theta_free: f64,
    pub theta_occ: f64,
    pub theta_unc: f64,
    pub sweep_start: f64,
    pub sweep_stop: f64,
    pub sweep_step: f64,
    pub eval_points: usize,
    pub cd_samples: usize,
    pub n_grasps: usize,
    pub jaw_span: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            jobs: 1,
            mode: DatasetMode::NovelView,
            n_specs: 201,
            n_train: 500,
            n_val: 100,
            n_test: 200,
            grid_res: 48,
            n_queries: 2048,
            pose_samples: 72,
            theta_sim: 0.98,
            translation_jitter: 0.0,
            cam_width: 64,
            cam_height: 64,
            cam_focal_px: 80.0,
            cam_dist_min: 0.3,
            cam_dist_max: 0.6,
            model: Mode::Binary,
            arch: "small".into(),
            dropout: 0.1,
            lr: 1e-4,
            batch_size: 16,
            queries_per_sample: 512,
            cloud_points: 512,
            max_epochs: 200,
            patience: 10,
            tau: 0.5,
            tau_u: 0.2,
            uncertain_rule: UncertainRule::Band,
            min_voxels: 0,
            method: Method::Auto,
            mc_passes: 16,
            theta_free: 1.0 / 3.0,
            theta_occ: 1.0 / 3.0,
            theta_unc: 1.0 / 3.0,
            sweep_start: 0.05,
            sweep_stop: 0.95,
            sweep_step: 0.05,
            eval_points: 10000,
            cd_samples: 100_000,
            n_grasps: 64,
            jaw_span: 0.08,
        }
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("invalid value for `{key}`: {msg}"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        macro_rules! num {
            ($field:expr) => {
                $field = value.parse().map_err(|e| bad(key, e))?
            };
        }
        match key {
            "seed" => num!(self.seed),
            "jobs" => {
                num!(self.jobs);
                if self.jobs == 0 {
                    return Err(bad(key, "must be >= 1"));
                }
            }
            "mode" => {
                self.mode = match value {
                    "novel-view" => DatasetMode::NovelView,
                    "novel-instance" => DatasetMode::NovelInstance,
                    _ => return Err(bad(key, "expected novel-view or novel-instance")),
                }
            }
            "n_specs" => num!(self.n_specs),
            "n_train" => num!(self.n_train),
            "n_val" => num!(self.n_val),
            "n_test" => num!(self.n_test),
            "grid_res" => num!(self.grid_res),
            "n_queries" => num!(self.n_queries),
            "pose_samples" => num!(self.pose_samples),
            "theta_sim" => num!(self.theta_sim),
            "translation_jitter" => num!(self.translation_jitter),
            "cam_width" => num!(self.cam_width),
            "cam_height" => num!(self.cam_height),
            "cam_focal_px" => num!(self.cam_focal_px),
            "cam_dist_min" => num!(self.cam_dist_min),
            "cam_dist_max" => num!(self.cam_dist_max),
            "model" => {
                self.model = Mode::parse(value).ok_or_else(|| bad(key, "expected binary or trinary"))?
            }
            "arch" => {
                if value != "small" && value != "mid" && value != "default" {
                    return Err(bad(key, "expected small, mid, or default"));
                }
                self.arch = value.into();
            }
            "dropout" => num!(self.dropout),
            "lr" => num!(self.lr),
            "batch_size" => num!(self.batch_size),
            "queries_per_sample" => num!(self.queries_per_sample),
            "cloud_points" => num!(self.cloud_points),
            "max_epochs" => num!(self.max_epochs),
            "patience" => num!(self.patience),
            "tau" => num!(self.tau),
            "tau_u" => num!(self.tau_u),
            "uncertain_rule" => {
                self.uncertain_rule = UncertainRule::parse(value)
                    .ok_or_else(|| bad(key, "expected band or below"))?
            }
            "min_voxels" => num!(self.min_voxels),
            "method" => {
                self.method = match value {
                    "auto" => Method::Auto,
                    "binary" => Method::Binary,
                    "trinary" => Method::Trinary,
                    "variance" => Method::Variance,
                    _ => return Err(bad(key, "expected auto, binary, trinary or variance")),
                }
            }
            "mc_passes" => num!(self.mc_passes),
            "theta_free" => num!(self.theta_free),
            "theta_occ" => num!(self.theta_occ),
            "theta_unc" => num!(self.theta_unc),
            "sweep_start" => num!(self.sweep_start),
            "sweep_stop" => num!(self.sweep_stop),
            "sweep_step" => num!(self.sweep_step),
            "eval_points" => num!(self.eval_points),
            "cd_samples" => num!(self.cd_samples),
            "n_grasps" => num!(self.n_grasps),
            "jaw_span" => num!(self.jaw_span),
            _ => return Err(CliError::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = RunConfig::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("expected `key = value`, got `{line}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(0.0 < self.tau_u && self.tau_u < self.tau && self.tau < 1.0) {
            return Err(CliError::Config("need 0 < tau_u < tau < 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(CliError::Config("dropout must be in [0, 1)".into()));
        }
        if self.sweep_step <= 0.0 || self.sweep_start <= 0.0 || self.sweep_stop >= 1.0 {
            return Err(CliError::Config("sweep grid must lie inside (0, 1)".into()));
        }
        if self.grid_res < 2 {
            return Err(CliError::Config("grid_res must be >= 2".into()));
        }
        Ok(())
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut kv = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        kv("seed", self.seed.to_string());
        kv("jobs", self.jobs.to_string());
        kv("mode", self.mode.name().into());
        kv("n_specs", self.n_specs.to_string());
        kv("n_train", self.n_train.to_string());
        kv("n_val", self.n_val.to_string());
        kv("n_test", self.n_test.to_string());
        kv("grid_res", self.grid_res.to_string());
        kv("n_queries", self.n_queries.to_string());
        kv("pose_samples", self.pose_samples.to_string());
        kv("theta_sim", self.theta_sim.to_string());
        kv("translation_jitter", self.translation_jitter.to_string());
        kv("cam_width", self.cam_width.to_string());
        kv("cam_height", self.cam_height.to_string());
        kv("cam_focal_px", self.cam_focal_px.to_string());
        kv("cam_dist_min", self.cam_dist_min.to_string());
        kv("cam_dist_max", self.cam_dist_max.to_string());
        kv("model", self.model.name().into());
        kv("arch", self.arch.clone());
        kv("dropout", self.dropout.to_string());
        kv("lr", self.lr.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("queries_per_sample", self.queries_per_sample.to_string());
        kv("cloud_points", self.cloud_points.to_string());
        kv("max_epochs", self.max_epochs.to_string());
        kv("patience", self.patience.to_string());
        kv("tau", self.tau.to_string());
        kv("tau_u", self.tau_u.to_string());
        kv("uncertain_rule", self.uncertain_rule.name().into());
        kv("min_voxels", self.min_voxels.to_string());
        kv("method", self.method.name().into());
        kv("mc_passes", self.mc_passes.to_string());
        kv("theta_free", self.theta_free.to_string());
        kv("theta_occ", self.theta_occ.to_string());
        kv("theta_unc", self.theta_unc.to_string());
        kv("sweep_start", self.sweep_start.to_string());
        kv("sweep_stop", self.sweep_stop.to_string());
        kv("sweep_step", self.sweep_step.to_string());
        kv("eval_points", self.eval_points.to_string());
        kv("cd_samples", self.cd_samples.to_string());
        kv("n_grasps", self.n_grasps.to_string());
        kv("jaw_span", self.jaw_span.to_string());
        m
    }

    /// Writes the resolved configuration next to a command's outputs.
    pub fn write_resolved(&self, dir: &Path) -> Result<(), CliError> {
        let mut out = String::new();
        for (k, v) in self.to_map() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        std::fs::write(dir.join("config.txt"), out)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
    }

    pub fn gen_params(&self) -> GenParams {
        GenParams {
            camera: CameraSampling {
                dist_min: self.cam_dist_min,
                dist_max: self.cam_dist_max,
                focal_px: self.cam_focal_px,
                width: self.cam_width,
                height: self.cam_height,
            },
            n_queries: self.n_queries,
            grid_res: self.grid_res,
            pose_samples: self.pose_samples,
            theta_sim: self.theta_sim,
            translation_jitter: self.translation_jitter,
        }
    }

    pub fn model_config(&self) -> ModelConfig {
        let mut c = match self.arch.as_str() {
            "default" => ModelConfig::default_for(self.model),
            "mid" => ModelConfig::mid(self.model),
            _ => ModelConfig::small(self.model),
        };
        c.dropout = self.dropout;
        c
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            batch_size: self.batch_size,
            queries_per_sample: self.queries_per_sample,
            cloud_points: self.cloud_points,
            max_epochs: self.max_epochs,
            patience: self.patience,
            plateau_decay: self.plateau_decay,
            seed: self.seed,
        }
    }

    pub fn gripper(&self) -> GripperDims {
        GripperDims { jaw_span: self.jaw_span, ..Default::default() }
    }

    pub fn thetas(&self) -> [f64; 3] {
        [self.theta_free, self.theta_occ, self.theta_unc]
    }

    pub fn sweep(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut v = self.sweep_start;
        while v <= self.sweep_stop + 1e-9 {
            out.push((v * 1e9).round() / 1e9);
            v += self.sweep_step;
        }
        out
    }
}
