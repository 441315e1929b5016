//! Dense row-major `f32` tensors.
//!
//! Feature maps are stored as `[h, w, c]` with the channel index fastest.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape:?} needs {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn filled(shape: Vec<usize>, value: f32) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![value; n],
        }
    }

    /// A `[h, w, c]` map.
    pub fn map(h: usize, w: usize, c: usize) -> Self {
        Self::zeros(vec![h, w, c])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `(h, w, c)` of a 3-D map; a 2-D tensor is read as a single channel.
    pub fn dims3(&self) -> Result<(usize, usize, usize)> {
        match self.shape.as_slice() {
            [h, w] => Ok((*h, *w, 1)),
            [h, w, c] => Ok((*h, *w, *c)),
            other => Err(Error::ShapeMismatch(format!(
                "expected a [h, w, c] map, got shape {other:?}"
            ))),
        }
    }

    pub fn channels(&self) -> usize {
        self.dims3().map(|(_, _, c)| c).unwrap_or(0)
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize, c: usize) -> f32 {
        let (_, w, ch) = (self.shape[0], self.shape[1], self.channels_fast());
        self.data[(y * w + x) * ch + c]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f32) {
        let (w, ch) = (self.shape[1], self.channels_fast());
        self.data[(y * w + x) * ch + c] = v;
    }

    #[inline]
    fn channels_fast(&self) -> usize {
        if self.shape.len() == 3 {
            self.shape[2]
        } else {
            1
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }

    /// Extracts one channel as an `f64` plane of `h * w` values.
    pub fn channel_plane(&self, c: usize) -> Result<Vec<f64>> {
        let (h, w, ch) = self.dims3()?;
        if c >= ch {
            return Err(Error::OutOfBounds(format!("channel {c} of {ch}")));
        }
        Ok((0..h * w).map(|i| self.data[i * ch + c] as f64).collect())
    }

    pub fn set_channel_plane(&mut self, c: usize, plane: &[f64]) -> Result<()> {
        let (h, w, ch) = self.dims3()?;
        if c >= ch || plane.len() != h * w {
            return Err(Error::ShapeMismatch(format!(
                "plane of {} values into channel {c} of [{h}, {w}, {ch}]",
                plane.len()
            )));
        }
        for (i, v) in plane.iter().enumerate() {
            self.data[i * ch + c] = *v as f32;
        }
        Ok(())
    }

    pub fn min_max(&self) -> Option<(f32, f32)> {
        self.data.iter().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }
}
