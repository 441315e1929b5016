use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A nonnegative `h x w` map summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl SaliencyMap {
    /// Normalizes `data` to unit mass.
    pub fn from_weights(height: usize, width: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width || data.is_empty() {
            return Err(Error::ShapeMismatch(format!("{} values for a {height}x{width} map", data.len())));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("saliency weights must be finite and nonnegative".into()));
        }
        let total: f64 = data.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("saliency map has zero mass".into()));
        }
        data.iter_mut().for_each(|v| *v /= total);
        Ok(Self { height, width, data })
    }

    pub fn uniform(height: usize, width: usize) -> Self {
        let n = height * width;
        Self {
            height,
            width,
            data: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let total: f64 = self.data.iter().sum();
        if self.data.iter().any(|v| !v.is_finite() || *v < 0.0) || (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!("saliency map is not a distribution (mass {total})")));
        }
        Ok(())
    }

    pub fn at(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(vec![self.height, self.width], self.data.iter().map(|&v| v as f32).collect())
            .expect("shape matches data")
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        let (h, w, c) = t.dims3()?;
        if c != 1 {
            return Err(Error::ShapeMismatch(format!("saliency tensor has {c} channels")));
        }
        Self::from_weights(h, w, t.data().iter().map(|&v| v as f64).collect())
    }

    /// Binary PGM (P5), scaled so the maximum maps to 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        let m = self.max();
        out.extend(self.data.iter().map(|&v| if m > 0.0 { (v / m * 255.0).round() as u8 } else { 0 }));
        out
    }
}
