//! Image and coefficient containers.
//!
//! Both are row-major and channel-last; transforms act on each channel
//! independently through [`Plane`] views.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::SubbandLayout;

/// An `height × width × channels` array of reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::Shape(format!(
                "{height}x{width}x{channels} image needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if channels == 0 {
            return Err(Error::Shape("image needs at least one channel".into()));
        }
        Ok(ImageTensor {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        ImageTensor {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    /// Builds an image from `f(row, col, channel)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for r in 0..height {
            for c in 0..width {
                for ch in 0..channels {
                    data.push(f(r, c, ch));
                }
            }
        }
        ImageTensor {
            height,
            width,
            channels,
            data,
        }
    }

    pub fn from_planes(planes: &[Plane]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::Shape("no channel planes".into()))?;
        if planes
            .iter()
            .any(|p| p.rows != first.rows || p.cols != first.cols)
        {
            return Err(Error::Shape("channel planes differ in size".into()));
        }
        let (h, w, c) = (first.rows, first.cols, planes.len());
        let mut data = vec![0.0; h * w * c];
        for (ch, plane) in planes.iter().enumerate() {
            for (i, &v) in plane.data.iter().enumerate() {
                data[i * c + ch] = v;
            }
        }
        Ok(ImageTensor {
            height: h,
            width: w,
            channels: c,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, value: f64) {
        self.data[(row * self.width + col) * self.channels + ch] = value;
    }

    pub fn plane(&self, ch: usize) -> Plane {
        Plane {
            rows: self.height,
            cols: self.width,
            data: self
                .data
                .iter()
                .skip(ch)
                .step_by(self.channels)
                .copied()
                .collect(),
        }
    }

    pub fn planes(&self) -> Vec<Plane> {
        (0..self.channels).map(|c| self.plane(c)).collect()
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        ImageTensor {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Whether every sample is within `[0, 255]`.
    pub fn is_ingest_range(&self) -> bool {
        self.data.iter().all(|v| (0.0..=255.0).contains(v))
    }
}

/// One channel of an image or coefficient canvas.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Plane {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.at(r, c)).collect()
    }

    /// Applies `f` to every row, producing a plane whose width is the output length.
    pub fn map_rows(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Plane {
        let mut out = Vec::new();
        let mut cols = 0;
        for r in 0..self.rows {
            let row = f(self.row(r));
            cols = row.len();
            out.extend(row);
        }
        Plane {
            rows: self.rows,
            cols,
            data: out,
        }
    }

    /// Applies `f` to every column.
    pub fn map_cols(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Plane {
        let mut columns = Vec::with_capacity(self.cols);
        let mut rows = 0;
        let mut buf = vec![0.0; self.rows];
        for c in 0..self.cols {
            for (r, b) in buf.iter_mut().enumerate() {
                *b = self.at(r, c);
            }
            let col = f(&buf);
            rows = col.len();
            columns.push(col);
        }
        let mut data = vec![0.0; rows * self.cols];
        for (c, col) in columns.iter().enumerate() {
            for (r, &v) in col.iter().enumerate() {
                data[r * self.cols + c] = v;
            }
        }
        Plane {
            rows,
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Plane {
        let mut data = vec![0.0; self.data.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        Plane {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Copies a `src.rows × src.cols` plane into `self` at the given offset.
    pub fn paste(&mut self, src: &Plane, row0: usize, col0: usize) {
        for r in 0..src.rows {
            let dst = (row0 + r) * self.cols + col0;
            self.data[dst..dst + src.cols].copy_from_slice(src.row(r));
        }
    }

    pub fn crop(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Plane {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for r in rows.clone() {
            data.extend_from_slice(&self.data[r * self.cols + cols.start..r * self.cols + cols.end]);
        }
        Plane {
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    }
}

/// Transform output: a coefficient canvas plus its sub-band layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub data: Vec<f64>,
    pub channels: usize,
    pub layout: SubbandLayout,
}

impl CoefficientSet {
    pub fn new(data: Vec<f64>, channels: usize, layout: SubbandLayout) -> Result<Self> {
        if data.len() != layout.rows * layout.cols * channels {
            return Err(Error::Shape(format!(
                "coefficient data has {} values, layout {}x{}x{channels} needs {}",
                data.len(),
                layout.rows,
                layout.cols,
                layout.rows * layout.cols * channels
            )));
        }
        Ok(CoefficientSet {
            data,
            channels,
            layout,
        })
    }

    pub fn from_planes(planes: &[Plane], layout: SubbandLayout) -> Result<Self> {
        if planes
            .iter()
            .any(|p| p.rows != layout.rows || p.cols != layout.cols)
        {
            return Err(Error::Layout(format!(
                "plane size does not match layout {}x{}",
                layout.rows, layout.cols
            )));
        }
        let img = ImageTensor::from_planes(planes)?;
        Ok(CoefficientSet {
            channels: img.channels(),
            data: img.into_data(),
            layout,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.layout.rows, self.layout.cols, self.channels)
    }

    pub fn plane(&self, ch: usize) -> Plane {
        Plane {
            rows: self.layout.rows,
            cols: self.layout.cols,
            data: self
                .data
                .iter()
                .skip(ch)
                .step_by(self.channels)
                .copied()
                .collect(),
        }
    }

    pub fn planes(&self) -> Vec<Plane> {
        (0..self.channels).map(|c| self.plane(c)).collect()
    }

    /// The canvas viewed as an image (same memory order).
    pub fn to_image(&self) -> ImageTensor {
        ImageTensor {
            height: self.layout.rows,
            width: self.layout.cols,
            channels: self.channels,
            data: self.data.clone(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
