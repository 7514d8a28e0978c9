use alloc::vec::Vec;

use crate::{Error, Result};

/// Dense row-major point matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    data: Vec<f64>,
    dim: usize,
}

impl Points {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::RaggedPoints {
                len: data.len(),
                dim,
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("points must be finite".into()));
        }
        Ok(Points { data, dim })
    }

    pub fn from_rows<I, R>(rows: I, dim: usize) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[f64]>,
    {
        let mut data = Vec::new();
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::RaggedPoints {
                    len: data.len() + row.len(),
                    dim,
                });
            }
            data.extend_from_slice(row);
        }
        Points::new(data, dim)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Euclidean distance between rows `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.row(i), self.row(j))
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
}
