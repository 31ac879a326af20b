//! Destination-distribution inference for a pedestrian crossroad.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`sim`] walks pedestrians from an origin strip to one of three
//!    destinations (left, straight, right) with a floor-field step model.
//! 2. [`heatmap`] turns snapshots inside a camera cutout into Gaussian density
//!    grids, each labelled with the share of in-cutout pedestrians per destination.
//! 3. [`forest`] fits one bagged regression-tree ensemble per destination and
//!    normalizes the three outputs onto the 100-simplex.
//! 4. [`metrics`] and [`experiments`] score predictions and run the tree-count
//!    and cutout-placement sweeps.
//!
//! The numerical kernels of the last three stages are generic over the scalar
//! type (see [`Scalar`]); the aliases below fix them to `f64`, which is what
//! the simulator produces.

pub mod error;
pub mod experiments;
pub mod forest;
pub mod geometry;
pub mod heatmap;
pub mod metrics;
pub mod num;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
pub use geometry::{Point, Rect};
pub use num::Scalar;

/// Destination labels in response order.
pub const DESTINATION_LABELS: [&str; 3] = ["L", "S", "R"];


pub type Heatmap = heatmap::Heatmap<f64>;
pub type HeatmapSample = heatmap::HeatmapSample<f64>;
pub type Dataset = heatmap::Dataset<f64>;
pub type KernelParams = heatmap::KernelParams<f64>;
pub type TreeNode = forest::TreeNode<f64>;
pub type Forest = forest::Forest<f64>;
pub type DestinationPredictor = forest::DestinationPredictor<f64>;
pub type ErrorSummary = metrics::ErrorSummary<f64>;

pub type Heatmap32 = heatmap::Heatmap<f32>;
pub type Dataset32 = heatmap::Dataset<f32>;
pub type DestinationPredictor32 = forest::DestinationPredictor<f32>;
