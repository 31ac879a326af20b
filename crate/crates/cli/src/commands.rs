use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use crowddest::experiments::{sweep_position, sweep_size, sweep_trees, CutoutSweep, SweepReport};
use crowddest::forest::{fit_predictor, ForestParams};
use crowddest::heatmap::{extract_dataset, CameraCutout, ExtractOptions, KernelParams};
use crowddest::metrics::{evaluate, relative_error, split_dataset, ErrorSummary, SplitSpec, SUMMARY_HEADER};
use crowddest::sim::{run_many, Scenario, TrajectoryLog};
use crowddest::{seed, Dataset, DestinationPredictor, Error, Rect};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::ConfigFile;
use crate::manifest::{hash_file, sidecar, RunManifest};
use crate::{Command, CutoutArgs, DatasetArgs, EvaluateArgs, ForestArgs, SimulateArgs, SweepArgs, SweepCommand, TrainArgs};

const LOGS_MANIFEST: &str = "manifest.json";
const SPLIT_STREAM: u64 = 1;
const FOREST_STREAM: u64 = 2;

pub fn run(cmd: Command, jobs: usize) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a, jobs),
        Command::Dataset(a) => dataset(a, jobs),
        Command::Train(a) => train(a, jobs),
        Command::Evaluate(a) => evaluate_cmd(a, jobs),
        Command::Sweep(s) => sweep(s, jobs),
    }
}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(Error::Config(msg.into()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn simulate(a: SimulateArgs, jobs: usize) -> Result<()> {
    if a.runs == 0 {
        return Err(config_err("--runs must be >= 1"));
    }
    let mut cfg = ConfigFile::load(a.config.as_deref())?;
    if let Some(d) = a.duration {
        cfg.sim.duration = d;
    }
    if let Some(s) = a.seed {
        cfg.sim.rng_seed = s;
    }
    cfg.validate()?;
    let scenario = cfg.scenario();
    let base_seed = cfg.sim.rng_seed;
    let logs = run_many(&scenario, &cfg.sim, a.runs, base_seed)?;

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut manifest = RunManifest::new("simulate", jobs, json!({ "file": cfg, "runs": a.runs }));
    manifest.seed("base", base_seed);
    if let Some(c) = &a.config {
        manifest.input(c)?;
    }
    let width = a.runs.saturating_sub(1).to_string().len().max(3);
    for (k, log) in logs.iter().enumerate() {
        let path = a.out.join(format!("run_{k:0width$}.csv"));
        let mut w = create(&path)?;
        log.write_csv(&mut w)?;
        w.flush()?;
        drop(w);
        manifest.output(&path)?;
        if log.deferred_spawns > 0 {
            log::warn!("run {k}: {} spawns deferred for lack of space", log.deferred_spawns);
        }
    }
    manifest.write(&a.out.join(LOGS_MANIFEST))?;
    log::info!("wrote {} runs to {}", logs.len(), a.out.display());
    Ok(())
}

struct Logs {
    logs: Vec<TrajectoryLog>,
    paths: Vec<PathBuf>,
    config: ConfigFile,
    /// Hash over the per-file hashes, in file order.
    id: String,
}

fn load_logs(dir: &Path, args: &CutoutArgs) -> Result<Logs> {
    let recorded: Option<ConfigFile> = {
        let m = dir.join(LOGS_MANIFEST);
        if m.exists() {
            let manifest = RunManifest::read(&m)?;
            Some(serde_json::from_value(manifest.config["file"].clone()).with_context(|| format!("config in {}", m.display()))?)
        } else {
            None
        }
    };
    let config = match &args.config {
        Some(p) => ConfigFile::load(Some(p))?,
        None => recorded.clone().unwrap_or_default(),
    };
    let duration = args.duration.or(recorded.as_ref().map(|c| c.sim.duration)).unwrap_or(500.0);
    let log_interval = args.log_interval.or(recorded.as_ref().map(|c| c.sim.log_interval)).unwrap_or(0.4);

    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .with_context(|| format!("listing {}", dir.display()))?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "csv"));
    paths.sort();
    if paths.is_empty() {
        bail!(Error::EmptyDataset("no trajectory CSV files in the logs directory"));
    }
    let mut logs = Vec::with_capacity(paths.len());
    let mut hasher = Sha256::new();
    for p in &paths {
        let log = TrajectoryLog::read_csv(open(p)?, duration, log_interval).with_context(|| format!("{}", p.display()))?;
        logs.push(log);
        hasher.update(hash_file(p)?.sha256.as_bytes());
    }
    Ok(Logs {
        logs,
        paths,
        config,
        id: hex::encode(hasher.finalize()),
    })
}

fn parse_pair(s: &str, sep: char, what: &str) -> Result<(f64, f64)> {
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| config_err(format!("bad {what} `{s}`")));
    let (a, b) = s.split_once(sep).ok_or_else(|| config_err(format!("bad {what} `{s}`")))?;
    Ok((parse(a)?, parse(b)?))
}

/// Fails unless `rect` lies in the walkable area clear of obstacles.
fn check_placement(scenario: &Scenario, rect: &Rect) -> Result<()> {
    if !scenario.walkable_bounds.contains_rect(rect) || scenario.obstacles.iter().any(|o| o.intersects(rect)) {
        return Err(config_err(format!(
            "cutout [{}, {}]x[{}, {}] is not inside the walkable area",
            rect.x0, rect.x1, rect.y0, rect.y1
        )));
    }
    Ok(())
}

fn dataset(a: DatasetArgs, jobs: usize) -> Result<()> {
    let (w, h) = parse_pair(&a.cutout, 'x', "cutout size")?;
    if !(w > 0.0 && h > 0.0) {
        return Err(config_err("cutout width and height must be > 0"));
    }
    let logs = load_logs(&a.logs, &a.cutout_args)?;
    let scenario = logs.config.scenario();
    let rect = match &a.at {
        Some(at) => {
            let (x, y) = parse_pair(at, ',', "corner")?;
            Rect::new(x, y, x + w, y + h)
        }
        None => {
            let layout = &logs.config.layout;
            let top = layout.crossing_y() - a.distance;
            let x0 = (layout.street_width - w) / 2.0;
            Rect::new(x0, top - h, x0 + w, top)
        }
    };
    check_placement(&scenario, &rect)?;
    let cutout = CameraCutout::new(rect, a.cutout_args.resolution)?;
    let opts = ExtractOptions {
        frame_interval: a.interval,
        warmup: a.cutout_args.warmup,
        permissive: a.permissive,
    };
    let kernel = KernelParams::<f64>::default();
    let ds = extract_dataset(&logs.logs, &cutout, &opts, &kernel)?;
    if ds.is_empty() {
        log::warn!("no frames fall in the sampling window; writing an empty dataset");
    }
    let mut out = create(&a.out)?;
    ds.write_csv(&mut out)?;
    out.flush()?;
    drop(out);

    let mut manifest = RunManifest::new(
        "dataset",
        jobs,
        json!({
            "cutout": cutout,
            "extract": opts,
            "kernel": kernel,
            "duration": logs.logs[0].duration,
            "log_interval": logs.logs[0].log_interval,
            "logs_id": logs.id,
            "rows": ds.len(),
            "skipped_frames": ds.skipped,
        }),
    );
    for p in &logs.paths {
        manifest.input(p)?;
    }
    manifest.output(&a.out)?.write(&sidecar(&a.out, ".manifest.json"))?;
    log::info!("{} samples with {} features", ds.len(), ds.feature_dim);
    Ok(())
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    Dataset::read_csv(open(path)?).with_context(|| format!("{}", path.display()))
}

/// Base split and forest settings derived from `--seed`. Repetition k of a
/// sweep uses `derive(base, [k])`; `train` is repetition 0.
fn forest_setup(f: &ForestArgs) -> (ForestParams, SplitSpec) {
    let params = ForestParams {
        n_trees: f.trees,
        mtry: f.mtry,
        min_samples_split: f.min_samples_split,
        max_depth: f.max_depth,
        bootstrap: !f.no_bootstrap,
        rng_seed: seed::derive(f.seed, &[FOREST_STREAM]),
    };
    let spec = SplitSpec {
        train_fraction: f.train_fraction,
        rng_seed: seed::derive(f.seed, &[SPLIT_STREAM]),
    };
    (params, spec)
}

fn check_fraction(f: f64) -> Result<()> {
    if !(f > 0.0 && f < 1.0) {
        return Err(config_err(format!("--train-fraction must be in (0, 1), got {f}")));
    }
    Ok(())
}

fn train(a: TrainArgs, jobs: usize) -> Result<()> {
    check_fraction(a.forest.train_fraction)?;
    let ds = read_dataset(&a.data)?;
    let (base, spec) = forest_setup(&a.forest);
    base.validate(ds.feature_dim)?;
    let split = SplitSpec {
        rng_seed: seed::derive(spec.rng_seed, &[0]),
        ..spec
    };
    let params = ForestParams {
        rng_seed: seed::derive(base.rng_seed, &[0]),
        ..base
    };
    let (train_set, test_set) = split_dataset(&ds, &split)?;
    let model = fit_predictor(&train_set, &params)?;

    let data_hash = hash_file(&a.data)?.sha256;
    let extra = BTreeMap::from([
        ("split_seed".to_string(), split.rng_seed.to_string()),
        ("train_fraction".to_string(), split.train_fraction.to_string()),
        ("n_train".to_string(), train_set.len().to_string()),
        ("dataset_sha256".to_string(), data_hash),
    ]);
    let mut out = create(&a.out)?;
    model.write_model(&mut out, &extra)?;
    out.flush()?;
    drop(out);

    let mut manifest = RunManifest::new("train", jobs, json!({ "forest": params, "split": split }));
    manifest.seed("base", a.forest.seed).seed("split", split.rng_seed).seed("forest", params.rng_seed);
    manifest.input(&a.data)?.output(&a.out)?.write(&sidecar(&a.out, ".manifest.json"))?;
    log::info!("trained on {} samples, {} held out", train_set.len(), test_set.len());
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs, jobs: usize) -> Result<()> {
    let (model, extra) = DestinationPredictor::read_model(open(&a.model)?).with_context(|| format!("{}", a.model.display()))?;
    let ds = read_dataset(&a.data)?;
    let expected = model.forests[0].feature_dim;
    if ds.feature_dim != expected {
        return Err(anyhow!(Error::DimensionMismatch {
            expected,
            got: ds.feature_dim
        }));
    }
    let test = if a.all {
        ds
    } else {
        let get = |k: &str| {
            extra
                .get(k)
                .ok_or_else(|| config_err(format!("model has no `{k}` entry; use --all to score every sample")))
        };
        let split = SplitSpec {
            train_fraction: get("train_fraction")?.parse().map_err(|_| config_err("bad train_fraction in model"))?,
            rng_seed: get("split_seed")?.parse().map_err(|_| config_err("bad split_seed in model"))?,
        };
        if extra.get("dataset_sha256") != Some(&hash_file(&a.data)?.sha256) {
            log::warn!("dataset differs from the one the model was trained on; the held-out split may overlap training data");
        }
        split_dataset(&ds, &split)?.1
    };

    let summary = {
        let mut s = evaluate(&model, &test)?;
        s.label = "model".into();
        s
    };
    let uniform = [100.0 / 3.0; 3];
    let baseline_errors = test
        .samples
        .iter()
        .map(|s| relative_error(s.response, uniform))
        .collect::<crowddest::Result<Vec<f64>>>()?;
    let baseline = ErrorSummary::from_errors("uniform", baseline_errors)?;

    let mut out = create(&a.out)?;
    writeln!(out, "{SUMMARY_HEADER}")?;
    writeln!(out, "{}", summary.csv_row())?;
    writeln!(out, "{}", baseline.csv_row())?;
    out.flush()?;
    drop(out);

    let mut manifest = RunManifest::new("evaluate", jobs, json!({ "all": a.all, "model_header": extra }));
    manifest.input(&a.model)?.input(&a.data)?.output(&a.out)?;
    if let Some(path) = &a.errors {
        let mut w = create(path)?;
        writeln!(w, "run,t,error")?;
        for (s, e) in test.samples.iter().zip(&summary.per_sample_errors) {
            writeln!(w, "{},{},{}", s.run, s.t, e)?;
        }
        w.flush()?;
        drop(w);
        manifest.output(path)?;
    }
    manifest.write(&sidecar(&a.out, ".manifest.json"))?;
    println!(
        "mean error {:.3}% (std {:.3}) on {} samples; uniform baseline {:.3}%",
        summary.mean_relative_error, summary.std_relative_error, summary.n_test, baseline.mean_relative_error
    );
    Ok(())
}

fn sweep(cmd: SweepCommand, jobs: usize) -> Result<()> {
    let (name, common, mut report, inputs, config) = match cmd {
        SweepCommand::Trees { data, counts, common } => {
            check_fraction(common.forest.train_fraction)?;
            let ds = read_dataset(&data)?;
            let (params, spec) = forest_setup(&common.forest);
            let mut report = sweep_trees(&ds, &counts, &params, &spec, common.reps)?;
            report.provenance.dataset_id = Some(hash_file(&data)?.sha256);
            let config = json!({ "counts": counts, "forest": params, "split": spec, "reps": common.reps });
            ("trees", common, report, vec![data], config)
        }
        SweepCommand::Position {
            logs,
            distances,
            height,
            cutout,
            common,
        } => {
            let (loaded, cfg) = cutout_sweep_setup(&logs, &cutout, &common)?;
            let mut report = sweep_position(&loaded.logs, &distances, height, &cfg)?;
            report.provenance.dataset_id = Some(loaded.id.clone());
            let config = json!({ "distances": distances, "height": height, "warmup": cfg.warmup, "resolution": cfg.resolution });
            ("position", common, report, loaded.paths, config)
        }
        SweepCommand::Size {
            logs,
            heights,
            cutout,
            common,
        } => {
            let (loaded, cfg) = cutout_sweep_setup(&logs, &cutout, &common)?;
            let mut report = sweep_size(&loaded.logs, &heights, &cfg)?;
            report.provenance.dataset_id = Some(loaded.id.clone());
            let config = json!({ "heights": heights, "warmup": cfg.warmup, "resolution": cfg.resolution });
            ("size", common, report, loaded.paths, config)
        }
    };
    report.provenance.worker_threads = jobs;
    report.provenance.timing_parallel = jobs > 1;
    if jobs > 1 {
        log::warn!("training ran on {jobs} threads; train_time_s is not comparable to single-thread timings");
    }
    write_report(name, &common, &report, &inputs, config, jobs)
}

fn cutout_sweep_setup(dir: &Path, args: &CutoutArgs, common: &SweepArgs) -> Result<(Logs, CutoutSweep<f64>)> {
    check_fraction(common.forest.train_fraction)?;
    let loaded = load_logs(dir, args)?;
    let (forest, split) = forest_setup(&common.forest);
    let cfg = CutoutSweep {
        layout: loaded.config.layout,
        resolution: args.resolution,
        kernel: KernelParams::default(),
        warmup: args.warmup,
        speed_mean: loaded.config.sim.speed_mean,
        forest,
        split,
        repetitions: common.reps,
    };
    Ok((loaded, cfg))
}

fn write_report(
    name: &str,
    common: &SweepArgs,
    report: &SweepReport,
    inputs: &[PathBuf],
    config: serde_json::Value,
    jobs: usize,
) -> Result<()> {
    let mut out = create(&common.out)?;
    report.write_csv(&mut out)?;
    out.flush()?;
    drop(out);
    let prov = sidecar(&common.out, ".provenance.json");
    fs::write(&prov, serde_json::to_string_pretty(report)? + "\n").with_context(|| format!("writing {}", prov.display()))?;

    let mut manifest = RunManifest::new(&format!("sweep {name}"), jobs, config);
    manifest.seed("base", common.forest.seed);
    for p in inputs {
        manifest.input(p)?;
    }
    manifest.output(&common.out)?.output(&prov)?;
    manifest.write(&sidecar(&common.out, ".manifest.json"))?;
    for r in &report.rows {
        println!(
            "{name} {}: mean error {:.3}% (std {:.3}), baseline {:.3}%, {} samples, {:.3} s",
            r.value, r.mean_err, r.std_err, r.baseline_err, r.n_samples, r.train_time_s
        );
    }
    Ok(())
}
