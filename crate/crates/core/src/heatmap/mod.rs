//! Gaussian density heatmaps over a camera cutout.

mod dataset;
mod kernel;

pub use dataset::{extract_dataset, frame_response, Dataset, DatasetMeta, ExtractOptions, HeatmapSample};
pub use kernel::{gaussian_density, rasterize, CameraCutout, Heatmap, KernelParams};
