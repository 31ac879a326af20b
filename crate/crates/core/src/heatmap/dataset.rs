use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::num::Scalar;
use crate::sim::{AgentState, TrajectoryLog};

use super::{rasterize, CameraCutout, KernelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSample<T> {
    pub features: Vec<T>,
    /// Percent of in-cutout pedestrians heading L, S, R.
    pub response: [T; 3],
    pub run: usize,
    pub t: f64,
    pub n_in_cutout: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub cutout: CameraCutout,
    pub frame_interval: f64,
    pub warmup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub samples: Vec<HeatmapSample<T>>,
    pub feature_dim: usize,
    /// Extraction settings; absent for datasets read back from CSV.
    pub meta: Option<DatasetMeta>,
    /// Frames skipped because the cutout was empty (permissive extraction only).
    pub skipped: usize,
}

/// Sampling protocol for [`extract_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractOptions {
    pub frame_interval: f64,
    pub warmup: f64,
    /// Skip empty-cutout frames with a warning instead of failing.
    pub permissive: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            frame_interval: 8.0,
            warmup: 12.0,
            permissive: false,
        }
    }
}

impl ExtractOptions {
    /// Number of sampled frames in a run of length `duration`.
    pub fn frames_per_run(&self, duration: f64) -> usize {
        let n = (duration - self.warmup) / self.frame_interval;
        if n <= 0.0 {
            0
        } else {
            (n + 1e-9).floor() as usize
        }
    }

    pub fn frame_time(&self, k: usize) -> f64 {
        ((self.warmup + k as f64 * self.frame_interval) * 1e9).round() / 1e9
    }
}

/// Per-destination share (percent) of the pedestrians inside the cutout and
/// their count; `None` when the cutout is empty.
pub fn frame_response<T: Scalar>(agents: &[AgentState], cutout: &CameraCutout) -> Option<([T; 3], usize)> {
    let mut counts = [0usize; 3];
    for a in agents.iter().filter(|a| cutout.contains(a.position)) {
        counts[a.destination] += 1;
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return None;
    }
    let pct = counts.map(|c| T::lit(100.0 * c as f64 / total as f64));
    Some((pct, total))
}

/// Samples each run at `warmup + k·frame_interval`, `k = 1, 2, …`, rasterizing
/// the in-cutout pedestrians and labelling each heatmap with its response.
/// Rows are ordered by (run, t).
pub fn extract_dataset<T: Scalar>(
    logs: &[TrajectoryLog],
    cutout: &CameraCutout,
    opts: &ExtractOptions,
    params: &KernelParams<T>,
) -> Result<Dataset<T>> {
    cutout.validate()?;
    if !(opts.frame_interval > 0.0) {
        return Err(Error::Config(format!("frame_interval must be > 0, got {}", opts.frame_interval)));
    }
    if logs.is_empty() {
        return Err(Error::EmptyDataset("no trajectory logs"));
    }
    let per_run: Vec<Result<(Vec<HeatmapSample<T>>, usize)>> = logs
        .par_iter()
        .enumerate()
        .map(|(run, log)| {
            let mut samples = Vec::new();
            let mut skipped = 0;
            let mut positions: Vec<Point> = Vec::new();
            for k in 1..=opts.frames_per_run(log.duration) {
                let t = opts.frame_time(k);
                let agents = log.snapshot_at(t);
                let Some((response, n_in_cutout)) = frame_response::<T>(agents, cutout) else {
                    if opts.permissive {
                        skipped += 1;
                        continue;
                    }
                    return Err(Error::EmptyCutout { run, t });
                };
                positions.clear();
                positions.extend(agents.iter().map(|a| a.position));
                samples.push(HeatmapSample {
                    features: rasterize(&positions, cutout, params).into_features(),
                    response,
                    run,
                    t,
                    n_in_cutout,
                });
            }
            Ok((samples, skipped))
        })
        .collect();

    let mut ds = Dataset {
        samples: Vec::new(),
        feature_dim: cutout.n_pixels(),
        meta: Some(DatasetMeta {
            cutout: *cutout,
            frame_interval: opts.frame_interval,
            warmup: opts.warmup,
        }),
        skipped: 0,
    };
    for r in per_run {
        let (samples, skipped) = r?;
        ds.samples.extend(samples);
        ds.skipped += skipped;
    }
    if ds.skipped > 0 {
        log::warn!("{} empty-cutout frames skipped", ds.skipped);
    }
    Ok(ds)
}

impl<T: Scalar> Dataset<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// New dataset holding the samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            feature_dim: self.feature_dim,
            meta: self.meta,
            skipped: 0,
        }
    }

    pub fn csv_header(feature_dim: usize) -> String {
        let width = (feature_dim.saturating_sub(1).to_string().len()).max(3);
        let mut h: Vec<String> = (0..feature_dim).map(|i| format!("f{i:0width$}")).collect();
        h.extend(
            ["resp_L", "resp_S", "resp_R", "run", "t", "n_in_cutout"]
                .iter()
                .map(|s| s.to_string()),
        );
        h.join(",")
    }

    /// Writes every float with its shortest round-trip representation.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::csv_header(self.feature_dim))?;
        let mut line = String::new();
        for s in &self.samples {
            line.clear();
            for v in s.features.iter().chain(&s.response) {
                line.push_str(&v.to_string());
                line.push(',');
            }
            line.push_str(&format!("{},{},{}", s.run, s.t, s.n_in_cutout));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        let feature_dim = cols.len().saturating_sub(6);
        if cols.len() < 7 || header.trim() != Self::csv_header(feature_dim) {
            return Err(Error::Parse {
                line: 1,
                msg: "header does not match `f000,...,resp_L,resp_S,resp_R,run,t,n_in_cutout`".into(),
            });
        }
        let mut samples = Vec::new();
        for (n, line) in lines.enumerate() {
            let line_no = n + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: line_no, msg };
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != feature_dim + 6 {
                return Err(perr(format!("expected {} columns, found {}", feature_dim + 6, fields.len())));
            }
            let parse_t = |s: &str| -> Result<T> {
                s.parse::<T>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| perr(format!("invalid number `{s}`")))
            };
            let features = fields[..feature_dim].iter().map(|s| parse_t(s)).collect::<Result<Vec<T>>>()?;
            let response = [
                parse_t(fields[feature_dim])?,
                parse_t(fields[feature_dim + 1])?,
                parse_t(fields[feature_dim + 2])?,
            ];
            let run = fields[feature_dim + 3]
                .parse()
                .map_err(|_| perr(format!("invalid run `{}`", fields[feature_dim + 3])))?;
            let t = fields[feature_dim + 4]
                .parse()
                .map_err(|_| perr(format!("invalid time `{}`", fields[feature_dim + 4])))?;
            let n_in_cutout = fields[feature_dim + 5]
                .parse()
                .map_err(|_| perr(format!("invalid count `{}`", fields[feature_dim + 5])))?;
            samples.push(HeatmapSample {
                features,
                response,
                run,
                t,
                n_in_cutout,
            });
        }
        Ok(Self {
            samples,
            feature_dim,
            meta: None,
            skipped: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use crate::sim::Frame;

    fn agents(counts: [usize; 3]) -> Vec<AgentState> {
        let mut v = Vec::new();
        for (d, &n) in counts.iter().enumerate() {
            for k in 0..n {
                v.push(AgentState {
                    id: v.len() as u32,
                    position: Point::new(0.1 + 0.2 * k as f64, 1.0 + 3.0 * d as f64),
                    destination: d,
                });
            }
        }
        v
    }

    fn cutout() -> CameraCutout {
        CameraCutout::new(Rect::new(0.0, 0.0, 10.0, 10.0), 0.5).unwrap()
    }

    #[test]
    fn table_responses() {
        let (r, n) = frame_response::<f64>(&agents([13, 18, 15]), &cutout()).unwrap();
        assert_eq!(n, 46);
        for (got, want) in r.iter().zip([28.3, 39.1, 32.6]) {
            assert!((got - want).abs() < 0.05, "{r:?}");
        }
        let (r, _) = frame_response::<f64>(&agents([7, 10, 8]), &cutout()).unwrap();
        assert_eq!(r, [28.0, 40.0, 32.0]);
        let (r, _) = frame_response::<f64>(&agents([4, 0, 0]), &cutout()).unwrap();
        assert_eq!(r, [100.0, 0.0, 0.0]);
        assert!(frame_response::<f64>(&[], &cutout()).is_none());
    }

    fn constant_log(duration: f64, agents: Vec<AgentState>) -> TrajectoryLog {
        let n = (duration / 0.4).round() as usize;
        TrajectoryLog {
            duration,
            log_interval: 0.4,
            frames: (0..=n)
                .map(|k| Frame {
                    t: ((k as f64 * 0.4) * 1e9).round() / 1e9,
                    agents: agents.clone(),
                })
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn one_sample_in_short_run() {
        let log = constant_log(20.0, agents([1, 1, 1]));
        let ds = extract_dataset::<f64>(&[log], &cutout(), &ExtractOptions::default(), &KernelParams::default()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.samples[0].t, 20.0);
        assert_eq!(ds.samples[0].features.len(), 400);
    }

    #[test]
    fn empty_cutout_is_an_error_unless_permissive() {
        let log = constant_log(36.0, vec![]);
        let opts = ExtractOptions::default();
        let err = extract_dataset::<f64>(&[log.clone()], &cutout(), &opts, &KernelParams::default());
        assert!(matches!(err, Err(Error::EmptyCutout { run: 0, .. })));
        let permissive = ExtractOptions { permissive: true, ..opts };
        let ds = extract_dataset::<f64>(&[log], &cutout(), &permissive, &KernelParams::default()).unwrap();
        assert_eq!((ds.len(), ds.skipped), (0, 3));
    }

    #[test]
    fn empty_window_gives_no_samples() {
        let log = constant_log(500.0, agents([1, 0, 0]));
        let opts = ExtractOptions { warmup: 500.0, ..Default::default() };
        assert_eq!(opts.frames_per_run(500.0), 0);
        let ds = extract_dataset::<f64>(&[log], &cutout(), &opts, &KernelParams::default()).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn full_protocol_frame_count() {
        assert_eq!(ExtractOptions::default().frames_per_run(500.0), 61);
    }

    #[test]
    fn decorrelation_interval_covers_crossing_time() {
        // a pedestrian at mean speed needs 10 / 1.34 ≈ 7.46 s to cross a 10 m cutout
        assert!(ExtractOptions::default().frame_interval >= 10.0 / 1.34);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let log = constant_log(36.0, agents([2, 3, 1]));
        let ds = extract_dataset::<f64>(&[log], &cutout(), &ExtractOptions::default(), &KernelParams::default()).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let header = std::str::from_utf8(&buf).unwrap().lines().next().unwrap().to_string();
        assert!(header.starts_with("f000,f001,"));
        assert!(header.ends_with("f399,resp_L,resp_S,resp_R,run,t,n_in_cutout"));
        let back = Dataset::<f64>::read_csv(&buf[..]).unwrap();
        assert_eq!(back.samples, ds.samples);
    }

    #[test]
    fn csv_rejects_bad_rows() {
        let mut text = Dataset::<f64>::csv_header(2);
        text.push_str("\n0.1,0.2,50,50,0,0,20,2\n0.1,x,50,50,0,0,28,2\n");
        match Dataset::<f64>::read_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
