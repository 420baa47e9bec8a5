use super::params::{Mode, ModelConfig, ModelParams};
use crate::error::IoFormatError;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Writes a checkpoint: an ASCII header describing the architecture followed
/// by all weights as little-endian f32 (w row-major then b, per layer).
pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<(), IoFormatError> {
    let cfg = &params.config;
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let widths: Vec<String> = cfg.encoder_widths.iter().map(|v| v.to_string()).collect();
    writeln!(
        w,
        "OCCNET1 mode={} dropout={} widths={} local={}x{} hidden={}",
        cfg.mode.name(),
        cfg.dropout,
        widths.join(","),
        cfg.local_res,
        cfg.local_dim,
        cfg.decoder_hidden
    )?;
    let flat = params.flatten();
    writeln!(w, "floats {}", flat.len())?;
    for v in flat {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

fn header_field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.split_whitespace()
        .find_map(|tok| tok.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

/// Reads a checkpoint written by [`save_checkpoint`]. Weights come back at
/// f32 precision.
pub fn load_checkpoint(path: &Path) -> Result<ModelParams, IoFormatError> {
    let name = path.display().to_string();
    let perr = |msg: &str| IoFormatError::parse(name.clone(), msg);
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);
    let mut header = String::new();
    r.read_line(&mut header)?;
    if !header.starts_with("OCCNET1 ") {
        return Err(perr("not a checkpoint file"));
    }
    let field = |key: &str| header_field(&header, key).ok_or_else(|| perr("incomplete header"));
    let mode = Mode::parse(field("mode")?).ok_or_else(|| perr("unknown mode"))?;
    let dropout: f64 = field("dropout")?.parse().map_err(|_| perr("bad dropout"))?;
    let widths: Vec<usize> = field("widths")?
        .split(',')
        .map(|v| v.parse().map_err(|_| perr("bad width")))
        .collect::<Result<_, _>>()?;
    let (res, dim) = field("local")?
        .split_once('x')
        .ok_or_else(|| perr("bad local spec"))?;
    let cfg = ModelConfig {
        mode,
        encoder_widths: widths,
        local_res: res.parse().map_err(|_| perr("bad local res"))?,
        local_dim: dim.parse().map_err(|_| perr("bad local dim"))?,
        decoder_hidden: field("hidden")?.parse().map_err(|_| perr("bad hidden"))?,
        dropout,
    };
    if !cfg.is_valid() {
        return Err(perr("invalid architecture in header"));
    }
    let mut count_line = String::new();
    r.read_line(&mut count_line)?;
    let n: usize = count_line
        .trim()
        .strip_prefix("floats ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| perr("bad float count line"))?;
    let mut blob = vec![0u8; n * 4];
    r.read_exact(&mut blob)?;
    let flat: Vec<f64> = blob
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let mut params = ModelParams::init(cfg, 0);
    if params.flatten().len() != n {
        return Err(perr("weight count does not match architecture"));
    }
    params.assign_flat(&flat);
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_round_trips_at_f32_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let params = ModelParams::init(ModelConfig::small(Mode::Trinary), 9);
        save_checkpoint(&params, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.config, params.config);
        for (a, b) in params.flatten().iter().zip(loaded.flatten()) {
            assert!((a - b).abs() <= a.abs() * 1e-6 + 1e-7);
        }
        // A second save of the loaded params is byte-identical.
        let path2 = dir.path().join("model2.ckpt");
        save_checkpoint(&loaded, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn corrupt_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, b"not a checkpoint\n").unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
