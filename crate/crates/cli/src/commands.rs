//! The five pipeline subcommands.

use crate::config::RunConfig;
use beamfp::channel::{
    beamformed_csi, best_beam_snr, build_codebook, calibrate_noise, trace_paths, BeamCodebook,
    Scene,
};
use beamfp::dataset::{
    generate_reference_set_with, generate_test_set_with, load_dataset, save_dataset, split,
    DatasetProvenance, FingerprintDataset,
};
use beamfp::nn::{resume, train, Checkpoint, EpochMetrics, TrainData, TrainOutcome};
use beamfp::positioning::{evaluate, track_min_mean_error, ErrorReport, ReferenceMap};
use beamfp::{wire, Error, Result};
use std::fs;
use std::io::Write;
use std::path::Path;

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn hex_hash(cfg: &RunConfig) -> Result<String> {
    Ok(wire::to_hex(&cfg.hash()?))
}

/// Generate the scene file and print a per-point LOS summary.
pub fn cmd_scene(cfg: &RunConfig) -> Result<()> {
    let mut scene = cfg.build_scene()?;
    scene.config_hash = Some(hex_hash(cfg)?);
    ensure_parent(&cfg.scene.file)?;
    scene.save(&cfg.scene.file)?;

    println!("scene written to {}", cfg.scene.file.display());
    println!(
        "reference points: {}   test points: {}   buildings: {}",
        scene.reference_points.len(),
        scene.test_points.len(),
        scene.buildings.len()
    );
    let mut nlos_test = 0usize;
    for (kind, points) in [
        ("reference", &scene.reference_points),
        ("test", &scene.test_points),
    ] {
        for (i, &p) in points.iter().enumerate() {
            let paths = trace_paths(&scene, p)?;
            let los = paths.has_los();
            if kind == "test" && !los {
                nlos_test += 1;
            }
            println!(
                "  {kind} {i:>3} at ({:>8.2}, {:>8.2})  {}  paths: {}",
                p.0,
                p.1,
                if los { "LOS " } else { "NLOS" },
                paths.paths.len()
            );
        }
    }
    println!("NLOS test points: {nlos_test}");
    Ok(())
}

fn load_scene_checked(cfg: &RunConfig) -> Result<Scene> {
    if !cfg.scene.file.exists() {
        return Err(Error::Config(format!(
            "scene file {} not found; run `beamfp scene` first",
            cfg.scene.file.display()
        )));
    }
    Scene::load(&cfg.scene.file)
}

fn codebook_for(cfg: &RunConfig, scene: &Scene) -> Result<BeamCodebook> {
    build_codebook(&scene.array, cfg.dataset.n_az_beams, cfg.dataset.n_el_beams)
}

/// Calibrate the link budget, generate and split samples, save the dataset.
pub fn cmd_dataset(cfg: &RunConfig) -> Result<()> {
    let scene = load_scene_checked(cfg)?;
    let codebook = codebook_for(cfg, &scene)?;
    let budget = calibrate_noise(&scene, &codebook)?;
    println!(
        "calibrated noise power: {:.6e} (tx gain {})",
        budget.noise_power, budget.tx_gain
    );

    let all = generate_reference_set_with(
        &scene,
        &codebook,
        cfg.dataset.samples_per_reference,
        &budget,
        cfg.dataset.noise_seed,
    )?;
    let (train_set, val_set) = split(&all, cfg.dataset.train_fraction, cfg.dataset.split_seed)?;
    let test_set = generate_test_set_with(
        &scene,
        &codebook,
        cfg.dataset.samples_per_test,
        &budget,
        cfg.dataset.noise_seed,
    )?;

    let dataset = FingerprintDataset {
        n_subcarriers: scene.n_subcarriers,
        n_beams: codebook.n_beams(),
        train: train_set,
        validation: val_set,
        test: test_set,
        reference_map: scene
            .reference_points
            .iter()
            .map(|&(x, y)| (x as f32, y as f32))
            .collect(),
        provenance: DatasetProvenance {
            scene_hash: wire::sha256_file(&cfg.scene.file)?,
            config_hash: cfg.hash()?,
            noise_seed: cfg.dataset.noise_seed,
            split_seed: cfg.dataset.split_seed,
            noise_power: budget.noise_power,
            tx_gain: budget.tx_gain,
        },
    };
    ensure_parent(&cfg.dataset.file)?;
    save_dataset(&dataset, &cfg.dataset.file)?;

    println!(
        "dataset written to {} ({} train / {} validation / {} test)",
        cfg.dataset.file.display(),
        dataset.train.len(),
        dataset.validation.len(),
        dataset.test.len()
    );
    println!(
        "per-class split: {} train / {} validation",
        dataset.train.len() / dataset.n_classes(),
        dataset.validation.len() / dataset.n_classes()
    );

    println!("noiseless best-beam SNR per point (dB):");
    for (kind, points) in [
        ("reference", &scene.reference_points),
        ("test", &scene.test_points),
    ] {
        for (i, &p) in points.iter().enumerate() {
            let paths = trace_paths(&scene, p)?;
            let csi = beamformed_csi(&scene, &paths, &codebook)?;
            let (beam, snr) = best_beam_snr(&csi, budget.noise_power);
            println!("  {kind} {i:>3}: beam {beam:>2}, {snr:>7.2} dB");
        }
    }
    Ok(())
}

fn load_dataset_checked(cfg: &RunConfig) -> Result<FingerprintDataset> {
    if !cfg.dataset.file.exists() {
        return Err(Error::Config(format!(
            "dataset file {} not found; run `beamfp dataset` first",
            cfg.dataset.file.display()
        )));
    }
    load_dataset(&cfg.dataset.file)
}

fn format_metric(v: f64) -> String {
    format!("{v}")
}

fn write_metrics_csv(cfg: &RunConfig, hash_hex: &str, history: &[EpochMetrics]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# config_hash={hash_hex}\n"));
    out.push_str(&format!(
        "# noise_seed={} split_seed={} shuffle_seed={} init_seed={}\n",
        cfg.dataset.noise_seed, cfg.dataset.split_seed, cfg.train.shuffle_seed,
        cfg.network.init_seed
    ));
    out.push_str("epoch,train_loss,train_acc,val_loss,val_acc\n");
    for m in history {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            m.epoch,
            format_metric(m.train_loss),
            format_metric(m.train_acc),
            format_metric(m.val_loss),
            format_metric(m.val_acc)
        ));
    }
    fs::write(cfg.metrics_path(), out)?;
    Ok(())
}

/// Train (or resume) and write checkpoints, metrics, and the per-epoch
/// test-error curve.
pub fn cmd_train(cfg: &RunConfig, resume_run: bool) -> Result<()> {
    let dataset = load_dataset_checked(cfg)?;
    let hash_hex = hex_hash(cfg)?;
    fs::create_dir_all(&cfg.run.output_dir)?;

    let net_cfg = cfg.network_config(
        dataset.n_subcarriers,
        dataset.n_beams,
        dataset.n_classes(),
    );
    let train_cfg = cfg.train_config();
    println!(
        "learning rate: {} (reference default: 1e-6), weight decay: {}, epochs: {}",
        train_cfg.learning_rate, train_cfg.weight_decay, train_cfg.epochs
    );

    let data = TrainData {
        train: &dataset.train,
        validation: &dataset.validation,
        n_classes: dataset.n_classes(),
    };

    // Per-epoch test positioning error, matching the error curves the
    // evaluation stage reports.
    let ref_map = ReferenceMap::from_f32(&dataset.reference_map);
    let mut epoch_reports: Vec<ErrorReport> = Vec::new();
    let mut hook_error: Option<Error> = None;
    let track = cfg.train.track_test_error && !dataset.test.is_empty();
    let mut hook = |_: usize, net: &beamfp::nn::Network| {
        if hook_error.is_some() {
            return;
        }
        match evaluate(net, &dataset.test, &ref_map, cfg.positioning.top_r) {
            Ok(report) => epoch_reports.push(report),
            Err(e) => hook_error = Some(e),
        }
    };

    let started = std::time::Instant::now();
    let outcome: TrainOutcome = if resume_run {
        let last = Checkpoint::load(&cfg.last_checkpoint_path())?;
        let best = Checkpoint::load(&cfg.best_checkpoint_path())?;
        resume(
            &last,
            &best,
            &train_cfg,
            &data,
            track.then_some(&mut hook as &mut beamfp::nn::EpochHook),
        )?
    } else {
        train(
            net_cfg,
            &train_cfg,
            &data,
            track.then_some(&mut hook as &mut beamfp::nn::EpochHook),
        )?
    };
    if let Some(e) = hook_error {
        return Err(e);
    }
    let elapsed = started.elapsed().as_secs_f64();

    let dataset_hash = wire::sha256_file(&cfg.dataset.file)?;
    let config_hash = cfg.hash()?;
    let mut best = outcome.best;
    let mut last = outcome.last;
    best.config_hash = config_hash;
    best.dataset_hash = dataset_hash;
    last.config_hash = config_hash;
    last.dataset_hash = dataset_hash;
    best.save(&cfg.best_checkpoint_path())?;
    last.save(&cfg.last_checkpoint_path())?;
    write_metrics_csv(cfg, &hash_hex, &outcome.history)?;

    if track {
        // Resumed runs only observe the continuation epochs; keep any
        // earlier rows already on disk.
        let first_epoch = cfg.train.epochs - epoch_reports.len();
        let kept: Vec<String> = fs::read_to_string(cfg.test_error_path())
            .ok()
            .map(|text| {
                text.lines()
                    .filter(|l| {
                        l.split(',')
                            .next()
                            .and_then(|e| e.parse::<usize>().ok())
                            .is_some_and(|e| e < first_epoch)
                    })
                    .map(str::to_owned)
                    .collect()
            })
            .unwrap_or_default();
        let mut out = String::new();
        out.push_str(&format!("# config_hash={hash_hex}\n"));
        out.push_str("epoch,mean_error_m\n");
        for line in kept {
            out.push_str(&line);
            out.push('\n');
        }
        for (offset, report) in epoch_reports.iter().enumerate() {
            if let Some(mean) = report.overall_mean {
                out.push_str(&format!("{},{}\n", first_epoch + offset, format_metric(mean)));
            }
        }
        fs::write(cfg.test_error_path(), out)?;
    }

    let max_val = outcome
        .history
        .iter()
        .map(|m| m.val_acc)
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "trained {} epochs in {elapsed:.1} s; max validation accuracy {:.2}% (best epoch {})",
        outcome.history.len(),
        100.0 * max_val,
        best.epoch
    );
    if let Some((idx, mean)) = track_min_mean_error(&epoch_reports) {
        let first_epoch = cfg.train.epochs - epoch_reports.len();
        println!(
            "min mean test error so far: {mean:.4} m at epoch {}",
            first_epoch + idx
        );
    }
    println!(
        "checkpoints written to {} and {}",
        cfg.best_checkpoint_path().display(),
        cfg.last_checkpoint_path().display()
    );
    Ok(())
}

/// Evaluate the best checkpoint; optionally sweep R.
pub fn cmd_eval(cfg: &RunConfig, sweep: bool) -> Result<()> {
    let dataset = load_dataset_checked(cfg)?;
    let best_path = cfg.best_checkpoint_path();
    if !best_path.exists() {
        return Err(Error::Config(format!(
            "checkpoint {} not found; run `beamfp train` first",
            best_path.display()
        )));
    }
    let checkpoint = Checkpoint::load(&best_path)?;
    let net = checkpoint.to_network()?;
    let ref_map = ReferenceMap::from_f32(&dataset.reference_map);
    let r = cfg.positioning.top_r;
    let hash_hex = hex_hash(cfg)?;

    let report = evaluate(&net, &dataset.test, &ref_map, r)?;

    fs::create_dir_all(&cfg.run.output_dir)?;
    let mut csv = String::new();
    csv.push_str(&format!("# config_hash={hash_hex}\n"));
    csv.push_str("test_point_id,sample_idx,error_m\n");
    for s in &report.per_sample {
        csv.push_str(&format!(
            "{},{},{}\n",
            s.point_id,
            s.sample_idx,
            format_metric(s.error_m)
        ));
    }
    fs::write(cfg.report_path(), csv)?;

    // Min-mean test error across epochs, from the training-time curve.
    let min_mean = fs::read_to_string(cfg.test_error_path())
        .ok()
        .and_then(|text| {
            let rows: Vec<(usize, f64)> = text
                .lines()
                .filter(|l| !l.starts_with('#') && !l.starts_with("epoch"))
                .filter_map(|l| {
                    let mut it = l.split(',');
                    Some((it.next()?.parse().ok()?, it.next()?.parse().ok()?))
                })
                .collect();
            rows.into_iter().min_by(|a, b| a.1.total_cmp(&b.1))
        });

    let best_val = checkpoint.history.last().map(|m| m.val_acc).unwrap_or(0.0);
    let mut summary = String::new();
    summary.push_str("evaluation summary\n");
    summary.push_str(&format!("config_hash: {hash_hex}\n"));
    summary.push_str(&format!(
        "checkpoint: best (epoch {}, validation accuracy {:.2}%)\n",
        checkpoint.epoch,
        100.0 * best_val
    ));
    summary.push_str(&format!("R: {r}\n"));
    summary.push_str("per-point mean error (m):\n");
    for &(id, mean) in &report.per_point_mean {
        summary.push_str(&format!("  point {id}: {mean:.4}\n"));
    }
    match report.overall_mean {
        Some(mean) => summary.push_str(&format!("overall mean error: {mean:.4} m\n")),
        None => summary.push_str("overall mean error: n/a (empty test set)\n"),
    }
    match min_mean {
        Some((epoch, mean)) => summary.push_str(&format!(
            "min mean test error across epochs: {mean:.4} m at epoch {epoch}\n"
        )),
        None => summary.push_str("min mean test error across epochs: n/a\n"),
    }
    match report.median_latency() {
        Some(s) => summary.push_str(&format!(
            "median inference latency: {:.3} ms per sample\n",
            s * 1e3
        )),
        None => summary.push_str("median inference latency: n/a\n"),
    }
    fs::write(cfg.summary_path(), &summary)?;
    print!("{summary}");

    if sweep {
        let max_r = 8.min(ref_map.len());
        let mut sweep_csv = String::new();
        sweep_csv.push_str(&format!("# config_hash={hash_hex}\n"));
        sweep_csv.push_str("r,overall_mean_m\n");
        println!("R sweep (overall mean error):");
        for r_probe in 1..=max_r {
            let rep = evaluate(&net, &dataset.test, &ref_map, r_probe)?;
            let mean = rep.overall_mean.unwrap_or(f64::NAN);
            sweep_csv.push_str(&format!("{r_probe},{}\n", format_metric(mean)));
            println!("  R = {r_probe}: {mean:.4} m");
        }
        fs::write(cfg.sweep_path(), sweep_csv)?;
        println!("sweep written to {}", cfg.sweep_path().display());
    }
    Ok(())
}

enum CheckOutcome {
    Ok(String),
    Absent(String),
    Fail(String),
}

/// Recompute the hash chain and compare against every present artifact.
pub fn cmd_verify(cfg: &RunConfig) -> Result<()> {
    let config_hash = cfg.hash()?;
    let hash_hex = wire::to_hex(&config_hash);
    let mut checks: Vec<CheckOutcome> = Vec::new();

    // Scene: embeds the config hash.
    let scene_present = cfg.scene.file.exists();
    if scene_present {
        let scene = Scene::load(&cfg.scene.file)?;
        match &scene.config_hash {
            Some(h) if *h == hash_hex => checks.push(CheckOutcome::Ok("scene".into())),
            Some(_) => checks.push(CheckOutcome::Fail(
                "scene: config hash does not match this configuration".into(),
            )),
            None => checks.push(CheckOutcome::Fail(
                "scene: no provenance recorded".into(),
            )),
        }
    } else {
        checks.push(CheckOutcome::Absent("scene".into()));
    }

    // Dataset: embeds the config hash, the scene file hash, and the seeds.
    let dataset_present = cfg.dataset.file.exists();
    if dataset_present {
        if !scene_present {
            checks.push(CheckOutcome::Fail(
                "dataset: present but scene file is missing".into(),
            ));
        } else {
            let ds = load_dataset(&cfg.dataset.file)?;
            let p = &ds.provenance;
            let scene_hash = wire::sha256_file(&cfg.scene.file)?;
            if p.config_hash != config_hash {
                checks.push(CheckOutcome::Fail("dataset: config hash mismatch".into()));
            } else if p.scene_hash != scene_hash {
                checks.push(CheckOutcome::Fail("dataset: scene hash mismatch".into()));
            } else if p.noise_seed != cfg.dataset.noise_seed
                || p.split_seed != cfg.dataset.split_seed
            {
                checks.push(CheckOutcome::Fail("dataset: seed mismatch".into()));
            } else {
                checks.push(CheckOutcome::Ok("dataset".into()));
            }
        }
    } else {
        checks.push(CheckOutcome::Absent("dataset".into()));
    }

    // Checkpoints: embed the config hash and the dataset file hash.
    for (name, path) in [
        ("checkpoint_best", cfg.best_checkpoint_path()),
        ("checkpoint_last", cfg.last_checkpoint_path()),
    ] {
        if !path.exists() {
            checks.push(CheckOutcome::Absent(name.into()));
            continue;
        }
        if !dataset_present {
            checks.push(CheckOutcome::Fail(format!(
                "{name}: present but dataset file is missing"
            )));
            continue;
        }
        let ckpt = Checkpoint::load(&path)?;
        let dataset_hash = wire::sha256_file(&cfg.dataset.file)?;
        if ckpt.config_hash != config_hash {
            checks.push(CheckOutcome::Fail(format!("{name}: config hash mismatch")));
        } else if ckpt.dataset_hash != dataset_hash {
            checks.push(CheckOutcome::Fail(format!("{name}: dataset hash mismatch")));
        } else {
            checks.push(CheckOutcome::Ok(name.into()));
        }
    }

    // Metrics: header comment carries the config hash.
    let metrics_path = cfg.metrics_path();
    if metrics_path.exists() {
        let text = fs::read_to_string(&metrics_path)?;
        if text.lines().next() == Some(&format!("# config_hash={hash_hex}")) {
            checks.push(CheckOutcome::Ok("metrics".into()));
        } else {
            checks.push(CheckOutcome::Fail("metrics: config hash mismatch".into()));
        }
    } else {
        checks.push(CheckOutcome::Absent("metrics".into()));
    }

    let mut any_ok = false;
    let mut failures = Vec::new();
    let mut stdout = std::io::stdout().lock();
    for check in &checks {
        match check {
            CheckOutcome::Ok(name) => {
                any_ok = true;
                writeln!(stdout, "  ok      {name}")?;
            }
            CheckOutcome::Absent(name) => {
                writeln!(stdout, "  absent  {name}")?;
            }
            CheckOutcome::Fail(msg) => {
                failures.push(msg.clone());
                writeln!(stdout, "  FAIL    {msg}")?;
            }
        }
    }
    if !failures.is_empty() {
        return Err(Error::Verification(failures.join("; ")));
    }
    if !any_ok {
        return Err(Error::Verification(
            "no artifacts found for this configuration".into(),
        ));
    }
    println!("hash chain verified");
    Ok(())
}
