use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("grid needs at least {min} nodes per axis, got {dims:?}")]
    GridTooSmall { min: usize, dims: [usize; 3] },
    #[error("expected {expected}-channel grid, got {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("grids are on different lattices")]
    LatticeMismatch,
    #[error("signature dimensions differ: {a:?} vs {b:?}")]
    DimensionMismatch { a: [usize; 2], b: [usize; 2] },
    #[error("mesh is empty")]
    EmptyMesh,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("label {0} out of range for {1} classes")]
    LabelOutOfRange(u8, usize),
    #[error("training diverged: non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },
    #[error("monte carlo variance needs at least 2 passes, got {0}")]
    TooFewPasses(usize),
    #[error("dataset split is empty: {0}")]
    EmptySplit(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error)]
pub enum IoFormatError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{file}: {msg}")]
    Parse { file: String, msg: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {msg}")]
    BadValue { key: String, msg: String },
}

impl IoFormatError {
    pub fn parse(file: impl Into<String>, msg: impl Into<String>) -> Self {
        IoFormatError::Parse { file: file.into(), msg: msg.into() }
    }
}
