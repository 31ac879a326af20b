use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::num::Scalar;

/// Kernel constants: torso diameter `d_p` and spread `S`, both in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams<T> {
    pub torso_diameter: T,
    pub scale: T,
}

impl<T: Scalar> Default for KernelParams<T> {
    fn default() -> Self {
        Self {
            torso_diameter: T::lit(0.195),
            scale: T::lit(0.7),
        }
    }
}

impl<T: Scalar> KernelParams<T> {
    /// `d_p²·√3 / (4π·S²)`, the density a single pedestrian contributes at its own position.
    pub fn prefactor(&self) -> T {
        let s2 = self.scale * self.scale;
        self.torso_diameter * self.torso_diameter * T::lit(3.0).sqrt() / (T::lit(4.0) * T::PI() * s2)
    }

    fn inv_two_s2(&self) -> T {
        (T::lit(2.0) * self.scale * self.scale).recip()
    }
}

/// Density (persons/m²) at `z` from pedestrians at `positions`:
/// `prefactor · Σ exp(−‖xᵢ − z‖² / 2S²)`.
pub fn gaussian_density<T: Scalar>(positions: &[[T; 2]], z: [T; 2], params: &KernelParams<T>) -> T {
    let k = params.inv_two_s2();
    let sum = positions.iter().fold(T::zero(), |acc, x| {
        let dx = x[0] - z[0];
        let dy = x[1] - z[1];
        acc + (-(dx * dx + dy * dy) * k).exp()
    });
    params.prefactor() * sum
}

/// Rectangular camera view in world meters, split into square pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraCutout {
    pub rect: Rect,
    pub resolution: f64,
}

impl CameraCutout {
    pub fn new(rect: Rect, resolution: f64) -> Result<Self> {
        let c = Self { rect, resolution };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::Config(format!("cutout resolution must be > 0, got {}", self.resolution)));
        }
        if !self.rect.is_valid() {
            return Err(Error::Config("cutout must have positive extent".into()));
        }
        for (name, len) in [("width", self.rect.width()), ("height", self.rect.height())] {
            let n = len / self.resolution;
            if (n - n.round()).abs() > 1e-6 {
                return Err(Error::Config(format!(
                    "cutout {name} {len} is not a multiple of the resolution {}",
                    self.resolution
                )));
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        (self.rect.height() / self.resolution).round() as usize
    }

    pub fn cols(&self) -> usize {
        (self.rect.width() / self.resolution).round() as usize
    }

    pub fn n_pixels(&self) -> usize {
        self.rows() * self.cols()
    }

    /// Center of pixel `(row, col)`; row 0 is the top (largest `y`) row.
    pub fn pixel_center(&self, row: usize, col: usize) -> Point {
        Point::new(
            self.rect.x0 + (col as f64 + 0.5) * self.resolution,
            self.rect.y1 - (row as f64 + 0.5) * self.resolution,
        )
    }

    /// Half-open membership: left and bottom edges belong to the cutout.
    pub fn contains(&self, p: Point) -> bool {
        self.rect.contains_half_open(p)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self {
            rect: self.rect.translate(dx, dy),
            resolution: self.resolution,
        }
    }
}

/// Row-major density grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap<T> {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> Heatmap<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![T::zero(); rows * cols],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }

    /// Row-wise flattening used as the feature vector.
    pub fn into_features(self) -> Vec<T> {
        self.values
    }
}

/// Evaluates the density at every pixel center. Only pedestrians inside the
/// cutout contribute.
///
/// The kernel factorizes as `exp(−dx²/2S²)·exp(−dy²/2S²)`, so each pedestrian
/// costs one pass over the columns and one over the rows.
pub fn rasterize<T: Scalar>(positions: &[Point], cutout: &CameraCutout, params: &KernelParams<T>) -> Heatmap<T> {
    let (rows, cols) = (cutout.rows(), cutout.cols());
    let mut map = Heatmap::zeros(rows, cols);
    let k = params.inv_two_s2();
    let pre = params.prefactor();
    let xs: Vec<T> = (0..cols).map(|c| T::lit(cutout.pixel_center(0, c).x)).collect();
    let ys: Vec<T> = (0..rows).map(|r| T::lit(cutout.pixel_center(r, 0).y)).collect();
    let mut ex = vec![T::zero(); cols];
    for p in positions.iter().filter(|p| cutout.contains(**p)) {
        let (px, py) = (T::lit(p.x), T::lit(p.y));
        for (e, x) in ex.iter_mut().zip(&xs) {
            let d = *x - px;
            *e = (-d * d * k).exp();
        }
        for (r, y) in ys.iter().enumerate() {
            let d = *y - py;
            let ey = pre * (-d * d * k).exp();
            let row = &mut map.values[r * cols..(r + 1) * cols];
            for (v, e) in row.iter_mut().zip(&ex) {
                *v = *v + ey * *e;
            }
        }
    }
    map
}
