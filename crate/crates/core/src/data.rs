//! Observation matrices.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Borrowed row-major `n x d` view.
#[derive(Clone, Copy, Debug)]
pub struct Points<'a> {
    data: &'a [f64],
    dim: usize,
}

impl<'a> Points<'a> {
    pub fn new(data: &'a [f64], dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::invalid("data length is not a multiple of the dimension"));
        }
        Ok(Points { data, dim })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'a, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &'a [f64] {
        self.data
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("observations contain non-finite values"))
        }
    }
}

/// Owned observations with optional ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub data: Vec<f64>,
    pub dim: usize,
    /// Generating cluster of each row, when known.
    pub labels: Option<Vec<usize>>,
    /// Rows replaced by a contaminating distribution.
    pub outliers: Option<Vec<bool>>,
}

impl Dataset {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        Points::new(&data, dim)?;
        Ok(Dataset { data, dim, labels: None, outliers: None })
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_outliers(mut self, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: flags.len() });
        }
        self.outliers = Some(flags);
        Ok(self)
    }

    pub fn points(&self) -> Points<'_> {
        Points { data: &self.data, dim: self.dim }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}
