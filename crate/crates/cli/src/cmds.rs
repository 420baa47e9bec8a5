use crate::config::{DatasetMode, Method, RunConfig};
use crate::pipeline::{
    fs_err, gt_occupied, io_err, list_pred_dirs, load_split, mkdir, predict_sample_grid,
    region_mesh,
};
use crate::CliError;
use occfield_core::evaluation::{
    calibrate, chamfer_l1, confusion, confusion_points, grasp_risks, report_csv,
    segmentation_metrics, voxel_iou, ReportRow,
};
use occfield_core::extraction::{
    default_min_voxels, extract_occupied, extract_uncertain_binary, extract_uncertain_trinary,
    extract_uncertain_variance, ExtractionConfig,
};
use occfield_core::geometry::Region3;
use occfield_core::grasping::{collision_rate, filter_grasps, intersects_region, sample_grasps};
use occfield_core::io;
use occfield_core::model::{
    load_checkpoint, mc_dropout_variance, occupied_channel, save_checkpoint, train, Mode,
};
use occfield_core::rng::rng_for;
use occfield_core::synthdata::{generate_sample, sample_object_spec, split_specs, Split};
use rand::Rng;
use std::path::Path;

pub fn cmd_gen(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    mkdir(out)?;
    let specs: Vec<_> = (0..cfg.n_specs)
        .map(|i| sample_object_spec(cfg.seed.wrapping_add(i as u64)))
        .collect();
    let splits = split_specs(cfg.n_specs, cfg.mode == DatasetMode::NovelInstance, cfg.seed);
    let params = cfg.gen_params();
    let jobs = [
        (Split::Train, "train", cfg.n_train),
        (Split::Val, "val", cfg.n_val),
        (Split::Test, "test", cfg.n_test),
    ];
    for (k, (split, name, count)) in jobs.into_iter().enumerate() {
        let pool = splits.pool(split);
        let mut rng = rng_for(cfg.seed, 0x6e5 ^ k as u64);
        for id in 0..count {
            let spec = &specs[pool[rng.gen_range(0..pool.len())]];
            let sample_seed: u64 = rng.gen();
            let sample = generate_sample(spec, id as u64, sample_seed, &params);
            let dir = out.join(name).join("samples").join(id.to_string());
            io::save_sample(&dir, &sample).map_err(io_err)?;
        }
        println!("gen: {count} {name} samples");
    }
    cfg.write_resolved(out)
}

pub fn cmd_train(cfg: &RunConfig, data: &Path, out: &Path) -> Result<(), CliError> {
    let train_set = load_split(data, "train")?;
    let val_set = load_split(data, "val")?;
    mkdir(out)?;
    let (params, log) = train(cfg.model_config(), &train_set, &val_set, &cfg.train_config())
        .map_err(|e| CliError::Io(e.to_string()))?;
    save_checkpoint(&params, &out.join("model.ckpt")).map_err(io_err)?;
    io::write_train_log(&out.join("log.csv"), &log).map_err(io_err)?;
    cfg.write_resolved(out)?;
    let best = log.iter().map(|r| r.val_loss).fold(f64::INFINITY, f64::min);
    println!(
        "train: {} model, {} epochs, best val loss {best:.4}",
        cfg.model.name(),
        log.len()
    );
    Ok(())
}

pub fn cmd_calibrate(
    cfg: &RunConfig,
    data: &Path,
    model: &Path,
    out: &Path,
) -> Result<(), CliError> {
    let val_set = load_split(data, "val")?;
    let params = load_checkpoint(model).map_err(io_err)?;
    mkdir(out)?;
    let mode = params.config.mode;
    let mut fields = Vec::new();
    for s in &val_set {
        let prob = occupied_channel(&predict_sample_grid(&params, s)?, mode);
        fields.push((prob, gt_occupied(s)));
    }
    let sweep = cfg.sweep();
    let (tau, curve) = calibrate(&sweep, |t| {
        let mut sum = 0.0;
        for (prob, gt) in &fields {
            sum += voxel_iou(&Region3::from_grid_threshold(prob, |v| v >= t), gt);
        }
        sum / fields.len() as f64
    });
    io::write_sweep_csv(&out.join("sweep.csv"), &curve).map_err(io_err)?;
    std::fs::write(out.join("calibration.txt"), format!("tau = {tau}\n"))
        .map_err(|e| fs_err(out, e))?;
    cfg.write_resolved(out)?;
    println!("calibrate: tau = {tau} over {} sweep values", curve.len());
    Ok(())
}

fn resolve_method(cfg: &RunConfig, mode: Mode) -> Result<Method, CliError> {
    let m = match cfg.method {
        Method::Auto => match mode {
            Mode::Binary => Method::Binary,
            Mode::Trinary => Method::Trinary,
        },
        other => other,
    };
    if m == Method::Trinary && mode != Mode::Trinary {
        return Err(CliError::Config(
            "trinary extraction needs a trinary model".into(),
        ));
    }
    Ok(m)
}

pub fn cmd_extract(
    cfg: &RunConfig,
    data: &Path,
    split: &str,
    model: &Path,
    out: &Path,
) -> Result<(), CliError> {
    let samples = load_split(data, split)?;
    let params = load_checkpoint(model).map_err(io_err)?;
    let mode = params.config.mode;
    let method = resolve_method(cfg, mode)?;
    mkdir(out)?;
    for s in &samples {
        let grid = predict_sample_grid(&params, s)?;
        let prob = occupied_channel(&grid, mode);
        let mv = if cfg.min_voxels == 0 {
            default_min_voxels(grid.lattice.len())
        } else {
            cfg.min_voxels
        };
        let ecfg = ExtractionConfig {
            tau: cfg.tau,
            tau_u: cfg.tau_u,
            rule: cfg.uncertain_rule,
            min_voxels: mv,
        };
        if !ecfg.is_valid() {
            return Err(CliError::Config("need 0 < tau_u < tau < 1".into()));
        }
        let (occ, mesh) =
            extract_occupied(&prob, cfg.tau, mv).map_err(|e| CliError::Io(e.to_string()))?;
        let unc = match method {
            Method::Auto => unreachable!("resolved above"),
            Method::Binary => {
                extract_uncertain_binary(&prob, &ecfg).map_err(|e| CliError::Io(e.to_string()))?
            }
            Method::Trinary => extract_uncertain_trinary(&grid, cfg.thetas(), mv),
            Method::Variance => {
                let var = mc_dropout_variance(
                    &params,
                    &s.cloud,
                    &grid.lattice,
                    cfg.mc_passes,
                    cfg.seed ^ s.id,
                )
                .map_err(|e| CliError::Io(e.to_string()))?;
                extract_uncertain_variance(&prob, &var, &ecfg)
                    .map_err(|e| CliError::Io(e.to_string()))?
            }
        };
        let dir = out.join(s.id.to_string());
        mkdir(&dir)?;
        io::write_sg3(&dir.join("prob.sg3"), &grid).map_err(io_err)?;
        io::write_region_sg3(&dir.join("occupied.sg3"), &occ).map_err(io_err)?;
        io::write_obj(&dir.join("occupied.obj"), &mesh).map_err(io_err)?;
        io::write_region_sg3(&dir.join("uncertain.sg3"), &unc).map_err(io_err)?;
        let sidecar = format!("{}method = {}\n", ecfg.to_params_text(), method.name());
        std::fs::write(dir.join("params.txt"), sidecar).map_err(|e| fs_err(&dir, e))?;
    }
    cfg.write_resolved(out)?;
    println!(
        "extract: {} samples, {} model, {} method",
        samples.len(),
        mode.name(),
        method.name()
    );
    Ok(())
}

fn chamfer_or_zero(
    gt: &occfield_core::geometry::TriangleMesh,
    pred: &occfield_core::geometry::TriangleMesh,
    n: usize,
    seed: u64,
) -> f64 {
    if gt.is_empty() || pred.is_empty() {
        return 0.0;
    }
    chamfer_l1(gt, pred, n, seed).unwrap_or(0.0)
}

pub fn cmd_eval(
    cfg: &RunConfig,
    data: &Path,
    split: &str,
    pred: &Path,
    out: &Path,
) -> Result<(), CliError> {
    let samples = load_split(data, split)?;
    mkdir(out)?;
    let mut rows = Vec::new();
    for (id, pdir) in list_pred_dirs(pred)? {
        let s = samples
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| CliError::Io(format!("prediction {id} has no sample in split {split}")))?;
        let pred_occ = io::read_region_sg3(&pdir.join("occupied.sg3")).map_err(io_err)?;
        let pred_unc = io::read_region_sg3(&pdir.join("uncertain.sg3")).map_err(io_err)?;
        let gt_occ = gt_occupied(s);
        let gt_unc = &s.uncertain;
        let pts = confusion_points(
            &[&pred_occ, &pred_unc, &gt_occ, gt_unc],
            cfg.eval_points,
            cfg.seed ^ id,
        );
        let counts = confusion(&pred_occ, &pred_unc, &gt_occ, gt_unc, &pts);
        let mo = segmentation_metrics(&counts.occ);
        let mu = segmentation_metrics(&counts.unc);
        let risks = grasp_risks(&counts);
        let pred_mesh = io::read_obj(&pdir.join("occupied.obj")).map_err(io_err)?;
        let cd_occ = chamfer_or_zero(
            &region_mesh(&gt_occ)?,
            &pred_mesh,
            cfg.cd_samples,
            cfg.seed ^ id,
        );
        let cd_unc = chamfer_or_zero(
            &region_mesh(gt_unc)?,
            &region_mesh(&pred_unc)?,
            cfg.cd_samples,
            cfg.seed ^ id ^ 1,
        );
        rows.push(ReportRow {
            id: id.to_string(),
            values: [
                mo.iou, mo.f1, mo.precision, mo.recall, cd_occ, mu.iou, mu.f1, mu.precision,
                mu.recall, cd_unc, risks.gcr, risks.gmr, risks.ger,
            ],
        });
    }
    let csv = report_csv(&rows);
    std::fs::write(out.join("report.csv"), &csv).map_err(|e| fs_err(out, e))?;
    cfg.write_resolved(out)?;
    let mean = |j: usize| rows.iter().map(|r| r.values[j]).sum::<f64>() / rows.len() as f64;
    println!(
        "eval: {} samples, mean occupied IoU {:.4}, mean uncertain IoU {:.4}, mean CDx100 {:.3}",
        rows.len(),
        mean(0),
        mean(5),
        mean(4) * 100.0
    );
    Ok(())
}

pub fn cmd_grasp(
    cfg: &RunConfig,
    data: &Path,
    split: &str,
    pred: &Path,
    out: &Path,
) -> Result<(), CliError> {
    let samples = load_split(data, split)?;
    mkdir(out)?;
    let dims = cfg.gripper();
    let mut summary = String::from("id,n_grasps,n_blocked,all_blocked,rate_before,rate_after\n");
    let mut rates = Vec::new();
    for (id, pdir) in list_pred_dirs(pred)? {
        let s = samples
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| CliError::Io(format!("prediction {id} has no sample in split {split}")))?;
        let mesh = io::read_obj(&pdir.join("occupied.obj")).map_err(io_err)?;
        let region = io::read_region_sg3(&pdir.join("uncertain.sg3")).map_err(io_err)?;
        let grasps = if mesh.is_empty() {
            Vec::new()
        } else {
            sample_grasps(&mesh, cfg.n_grasps, &dims, cfg.seed ^ id)
        };
        let blocked: Vec<bool> = grasps
            .iter()
            .map(|g| intersects_region(g, &region, &dims))
            .collect();
        io::write_grasps(&out.join(format!("{id}.grasps.txt")), &grasps, &blocked)
            .map_err(io_err)?;
        if grasps.is_empty() {
            summary.push_str(&format!("{id},0,0,0,0,0\n"));
            continue;
        }
        let outcome = filter_grasps(&grasps, &region, &dims);
        let before = collision_rate(&grasps, &s.spec, &s.pose, &dims);
        let after = if outcome.kept.is_empty() {
            0.0
        } else {
            collision_rate(&outcome.kept, &s.spec, &s.pose, &dims)
        };
        summary.push_str(&format!(
            "{id},{},{},{},{before},{after}\n",
            grasps.len(),
            outcome.removed,
            outcome.all_blocked as u8
        ));
        rates.push((before, after));
    }
    std::fs::write(out.join("summary.csv"), &summary).map_err(|e| fs_err(out, e))?;
    cfg.write_resolved(out)?;
    if rates.is_empty() {
        println!("grasp: no candidates found on any sample");
    } else {
        let n = rates.len() as f64;
        let before: f64 = rates.iter().map(|r| r.0).sum::<f64>() / n;
        let after: f64 = rates.iter().map(|r| r.1).sum::<f64>() / n;
        println!(
            "grasp: {} scenes, mean collision rate {before:.4} -> {after:.4} after filtering",
            rates.len()
        );
    }
    Ok(())
}
