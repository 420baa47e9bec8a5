use crate::CliError;
use occfield_core::error::IoFormatError;
use occfield_core::geometry::{marching_cubes, Region3, RigidTransform, ScalarGrid3, TriangleMesh};
use occfield_core::io;
use occfield_core::synthdata::DatasetSample;
use std::path::{Path, PathBuf};

pub fn io_err(e: IoFormatError) -> CliError {
    match e {
        IoFormatError::UnknownKey(k) => CliError::Config(format!("unknown config key `{k}`")),
        other => CliError::Io(other.to_string()),
    }
}

pub fn fs_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn mkdir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| fs_err(path, e))
}

/// Loads every sample of one split subdirectory of a dataset root.
pub fn load_split(data: &Path, split: &str) -> Result<Vec<DatasetSample>, CliError> {
    let root = data.join(split);
    let dirs = io::list_sample_dirs(&root)
        .map_err(|_| CliError::Io(format!("missing dataset split {}", root.display())))?;
    if dirs.is_empty() {
        return Err(CliError::Io(format!("no samples under {}", root.display())));
    }
    dirs.iter().map(|d| io::load_sample(d).map_err(io_err)).collect()
}

/// Ground-truth occupied voxels of a sample on its uncertain-region lattice.
pub fn gt_occupied(sample: &DatasetSample) -> Region3 {
    let lattice = sample.uncertain.lattice;
    let mask = occfield_core::ambiguity::pose_occupancy(
        &sample.spec,
        &sample.pose,
        &RigidTransform::identity(),
        &lattice,
    );
    Region3::from_mask(lattice, mask)
}

/// Mesh of a voxel region via marching cubes on its 0/1 grid.
pub fn region_mesh(region: &Region3) -> Result<TriangleMesh, CliError> {
    marching_cubes(&region.to_grid(), 0.5).map_err(|e| CliError::Io(e.to_string()))
}

/// Predicted probability grid for one sample on its uncertain-region lattice.
pub fn predict_sample_grid(
    params: &occfield_core::model::ModelParams,
    sample: &DatasetSample,
) -> Result<ScalarGrid3, CliError> {
    occfield_core::model::predict_grid(params, &sample.cloud, &sample.uncertain.lattice)
        .map_err(|e| CliError::Io(e.to_string()))
}

/// Per-sample prediction directories under an extraction output root,
/// sorted by numeric id.
pub fn list_pred_dirs(pred: &Path) -> Result<Vec<(u64, PathBuf)>, CliError> {
    let mut out = Vec::new();
    let rd = std::fs::read_dir(pred).map_err(|e| fs_err(pred, e))?;
    for e in rd {
        let p = e.map_err(|e| fs_err(pred, e))?.path();
        if !p.is_dir() {
            continue;
        }
        if let Some(id) = p.file_name().and_then(|n| n.to_str()).and_then(|n| n.parse().ok()) {
            out.push((id, p));
        }
    }
    out.sort_by_key(|(id, _)| *id);
    if out.is_empty() {
        return Err(CliError::Io(format!("no prediction directories under {}", pred.display())));
    }
    Ok(out)
}
