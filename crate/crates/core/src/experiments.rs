//! Tree-count, cutout-position and cutout-size sweeps.
//!
//! Every sweep point runs [`repeated_evaluation`] with the same split and
//! forest seeds, so rows differ only in the swept quantity. Cutout sweeps
//! rebuild the dataset from one shared set of trajectory logs.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::ForestParams;
use crate::heatmap::{extract_dataset, CameraCutout, Dataset, ExtractOptions, KernelParams};
use crate::metrics::{repeated_evaluation, RepeatedEvaluation, SplitSpec};
use crate::num::Scalar;
use crate::sim::{CrossroadLayout, TrajectoryLog};

pub const REPORT_HEADER: &str = "sweep,value,mean_err,std_err,train_time_s,n_samples,seed";

/// Heights of the size sweep (m), all at full street width.
pub const DEFAULT_HEIGHTS: [f64; 8] = [2.5, 5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0];
/// Distances of the cutout's upper edge below the crossing (m).
pub const DEFAULT_DISTANCES: [f64; 5] = [0.0, 2.5, 5.0, 7.5, 10.0];
pub const DEFAULT_TREE_COUNTS: [usize; 6] = [1, 2, 5, 10, 20, 50];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Trees,
    Position,
    Size,
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Trees => "trees",
            Self::Position => "position",
            Self::Size => "size",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Trees per forest, distance (m) or cutout area (m²).
    pub value: f64,
    pub mean_err: f64,
    /// Std over all pooled test errors.
    pub std_err: f64,
    /// Std of the per-repetition mean errors.
    pub std_of_means: f64,
    pub baseline_err: f64,
    /// Mean wall-clock training time per repetition (s).
    pub train_time_s: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Everything needed to rebuild this row's dataset and models.
    pub setup: RowSetup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowSetup {
    pub forest: ForestParams,
    pub split: SplitSpec,
    pub repetitions: usize,
    /// Present for cutout sweeps.
    pub cutout: Option<CameraCutout>,
    pub extract: Option<ExtractOptions>,
    pub skipped_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    /// Identifies the input data, e.g. a content hash; set by the caller.
    pub dataset_id: Option<String>,
    pub kernel: Option<KernelParams<f64>>,
    pub layout: Option<CrossroadLayout>,
    pub worker_threads: usize,
    /// True when training ran on more than one thread, so timings may be skewed.
    pub timing_parallel: bool,
}

impl Provenance {
    fn new() -> Self {
        let threads = rayon::current_num_threads();
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            dataset_id: None,
            kernel: None,
            layout: None,
            worker_threads: threads,
            timing_parallel: threads > 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub sweep: SweepKind,
    /// Sorted by `value`.
    pub rows: Vec<SweepRow>,
    pub provenance: Provenance,
}

impl SweepReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{REPORT_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                self.sweep.as_str(),
                r.value,
                r.mean_err,
                r.std_err,
                r.train_time_s,
                r.n_samples,
                r.seed
            )?;
        }
        Ok(())
    }

    pub fn row(&self, value: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| (r.value - value).abs() < 1e-9)
    }

    fn sort(&mut self) {
        self.rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    }
}

/// Shared settings of the cutout sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoutSweep<T> {
    pub layout: CrossroadLayout,
    pub resolution: f64,
    pub kernel: KernelParams<T>,
    pub warmup: f64,
    pub speed_mean: f64,
    pub forest: ForestParams,
    pub split: SplitSpec,
    pub repetitions: usize,
}

impl<T: Scalar> Default for CutoutSweep<T> {
    fn default() -> Self {
        Self {
            layout: CrossroadLayout::default(),
            resolution: 0.5,
            kernel: KernelParams::default(),
            warmup: 12.0,
            speed_mean: 1.34,
            forest: ForestParams::default(),
            split: SplitSpec::default(),
            repetitions: 5,
        }
    }
}

fn row_from<T: Scalar>(value: f64, n_samples: usize, eval: &RepeatedEvaluation<T>, setup: RowSetup) -> SweepRow {
    SweepRow {
        value,
        mean_err: eval.mean_error.as_f64(),
        std_err: eval.pooled_std.as_f64(),
        std_of_means: eval.std_of_means.as_f64(),
        baseline_err: eval.mean_baseline_error.as_f64(),
        train_time_s: eval.mean_train_time_s,
        n_samples,
        seed: setup.forest.rng_seed,
        setup,
    }
}

pub fn sweep_trees<T: Scalar>(
    ds: &Dataset<T>,
    tree_counts: &[usize],
    params: &ForestParams,
    spec: &SplitSpec,
    repetitions: usize,
) -> Result<SweepReport> {
    if tree_counts.is_empty() {
        return Err(Error::Config("tree_counts must not be empty".into()));
    }
    if let Some(&c) = tree_counts.iter().find(|&&c| c == 0) {
        return Err(Error::Config(format!("tree count must be >= 1, got {c}")));
    }
    let mut rows = Vec::with_capacity(tree_counts.len());
    for &n_trees in tree_counts {
        let forest = ForestParams { n_trees, ..*params };
        let eval = repeated_evaluation(ds, &forest, spec, repetitions)?;
        log::info!("trees {n_trees}: mean error {:.3}", eval.mean_error.as_f64());
        let setup = RowSetup {
            forest,
            split: *spec,
            repetitions,
            cutout: ds.meta.map(|m| m.cutout),
            extract: None,
            skipped_frames: ds.skipped,
        };
        rows.push(row_from(n_trees as f64, ds.len(), &eval, setup));
    }
    let mut report = SweepReport {
        sweep: SweepKind::Trees,
        rows,
        provenance: Provenance::new(),
    };
    report.sort();
    Ok(report)
}

/// Cutouts at full street width, upper edge `distance` below the crossing.
pub fn sweep_position<T: Scalar>(
    logs: &[TrajectoryLog],
    distances: &[f64],
    height: f64,
    cfg: &CutoutSweep<T>,
) -> Result<SweepReport> {
    if distances.is_empty() {
        return Err(Error::Config("distances must not be empty".into()));
    }
    let interval = frame_interval_for(height, cfg.speed_mean);
    let points: Vec<(f64, CameraCutout, ExtractOptions)> = distances
        .iter()
        .map(|&d| {
            let cutout = placed_cutout(cfg, d, height)?;
            let opts = ExtractOptions {
                frame_interval: interval,
                warmup: cfg.warmup,
                permissive: false,
            };
            Ok((d, cutout, opts))
        })
        .collect::<Result<_>>()?;
    run_cutout_sweep(SweepKind::Position, logs, points, cfg)
}

/// Cutouts of each height at full street width, upper edge at the crossing.
/// The frame interval follows the time a pedestrian needs to cross the cutout,
/// and frames with an empty cutout are skipped.
pub fn sweep_size<T: Scalar>(logs: &[TrajectoryLog], heights: &[f64], cfg: &CutoutSweep<T>) -> Result<SweepReport> {
    if heights.is_empty() {
        return Err(Error::Config("heights must not be empty".into()));
    }
    let points: Vec<(f64, CameraCutout, ExtractOptions)> = heights
        .iter()
        .map(|&h| {
            let cutout = placed_cutout(cfg, 0.0, h)?;
            let opts = ExtractOptions {
                frame_interval: frame_interval_for(h, cfg.speed_mean),
                warmup: cfg.warmup,
                permissive: true,
            };
            Ok((cutout.rect.area(), cutout, opts))
        })
        .collect::<Result<_>>()?;
    run_cutout_sweep(SweepKind::Size, logs, points, cfg)
}

/// `ceil(height / speed_mean)` seconds.
pub fn frame_interval_for(height: f64, speed_mean: f64) -> f64 {
    (height / speed_mean - 1e-9).ceil().max(1.0)
}

fn placed_cutout<T: Scalar>(cfg: &CutoutSweep<T>, distance: f64, height: f64) -> Result<CameraCutout> {
    if !(height > 0.0) || !(distance >= 0.0) {
        return Err(Error::Config(format!(
            "cutout needs height > 0 and distance >= 0, got {height} and {distance}"
        )));
    }
    let rect = cfg.layout.cutout_below_crossing(distance, height);
    let scenario = cfg.layout.scenario();
    if !scenario.walkable_bounds.contains_rect(&rect) || scenario.obstacles.iter().any(|o| o.intersects(&rect)) {
        return Err(Error::Config(format!(
            "cutout [{}, {}]x[{}, {}] leaves the corridor",
            rect.x0, rect.x1, rect.y0, rect.y1
        )));
    }
    CameraCutout::new(rect, cfg.resolution)
}

fn run_cutout_sweep<T: Scalar>(
    kind: SweepKind,
    logs: &[TrajectoryLog],
    points: Vec<(f64, CameraCutout, ExtractOptions)>,
    cfg: &CutoutSweep<T>,
) -> Result<SweepReport> {
    let mut rows = Vec::with_capacity(points.len());
    for (value, cutout, opts) in points {
        let ds = extract_dataset(logs, &cutout, &opts, &cfg.kernel)?;
        let eval = repeated_evaluation(&ds, &cfg.forest, &cfg.split, cfg.repetitions)?;
        log::info!(
            "{} {value}: {} samples, mean error {:.3}",
            kind.as_str(),
            ds.len(),
            eval.mean_error.as_f64()
        );
        let setup = RowSetup {
            forest: cfg.forest,
            split: cfg.split,
            repetitions: cfg.repetitions,
            cutout: Some(cutout),
            extract: Some(opts),
            skipped_frames: ds.skipped,
        };
        rows.push(row_from(value, ds.len(), &eval, setup));
    }
    let mut provenance = Provenance::new();
    provenance.kernel = Some(KernelParams {
        torso_diameter: cfg.kernel.torso_diameter.as_f64(),
        scale: cfg.kernel.scale.as_f64(),
    });
    provenance.layout = Some(cfg.layout);
    let mut report = SweepReport {
        sweep: kind,
        rows,
        provenance,
    };
    report.sort();
    Ok(report)
}
