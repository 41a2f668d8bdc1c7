//! Dense row-major tensors of f64.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense array with an explicit shape. Values are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Dimension(format!("zero-sized axis in {shape:?}")));
        }
        if n != values.len() {
            return Err(Error::Dimension(format!(
                "shape {:?} wants {} values, got {}",
                shape,
                n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite value in tensor".into()));
        }
        Ok(Self { shape, values })
    }

    pub fn vector(values: Vec<f64>) -> Self {
        Self { shape: vec![values.len()], values }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Matrix rows, for rank-2 tensors.
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Matrix columns, for rank-2 tensors.
    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    /// Entry (r, c) of a rank-2 tensor.
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols() + c]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
