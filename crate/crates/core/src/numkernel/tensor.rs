//! Dense row-major f64 tensor with shape metadata.

#![allow(clippy::needless_range_loop)]

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor {
            shape: shape.to_vec(),
            values: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], values: Vec<f64>) -> Result<Tensor> {
        let expect: usize = shape.iter().product();
        if values.len() != expect {
            return Err(Error::ShapeMismatch {
                op: "from_vec",
                detail: format!("shape {shape:?} wants {expect} values, got {}", values.len()),
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Rows of a rank-2 tensor.
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Columns of a rank-2 tensor.
    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.values[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.values[r * c..(r + 1) * c]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// y += M·x for a rank-2 `m` of shape [rows, cols].
pub fn matvec_acc(m: &Tensor, x: &[f64], y: &mut [f64]) {
    let (rows, cols) = (m.rows(), m.cols());
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(y.len(), rows);
    for r in 0..rows {
        let mrow = &m.values[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for (a, b) in mrow.iter().zip(x.iter()) {
            acc += a * b;
        }
        y[r] += acc;
    }
}

/// y += Mᵀ·g, the input-gradient half of a matvec backward pass.
pub fn matvec_t_acc(m: &Tensor, g: &[f64], y: &mut [f64]) {
    let (rows, cols) = (m.rows(), m.cols());
    debug_assert_eq!(g.len(), rows);
    debug_assert_eq!(y.len(), cols);
    for r in 0..rows {
        let mrow = &m.values[r * cols..(r + 1) * cols];
        let gr = g[r];
        for (yc, a) in y.iter_mut().zip(mrow.iter()) {
            *yc += gr * a;
        }
    }
}

/// grad(M) += g ⊗ x, the weight-gradient half of a matvec backward pass.
pub fn outer_acc(grad: &mut Tensor, g: &[f64], x: &[f64]) {
    let cols = grad.cols();
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(g.len(), grad.rows());
    for (r, gr) in g.iter().enumerate() {
        let row = &mut grad.values[r * cols..(r + 1) * cols];
        for (cell, xv) in row.iter_mut().zip(x.iter()) {
            *cell += gr * xv;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn matvec_and_transpose() {
        let m = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let x = [1.0, 0.0, -1.0];
        let mut y = [0.0, 0.0];
        matvec_acc(&m, &x, &mut y);
        assert_eq!(y, [-2.0, -2.0]);

        let g = [1.0, 1.0];
        let mut xt = [0.0; 3];
        matvec_t_acc(&m, &g, &mut xt);
        assert_eq!(xt, [5.0, 7.0, 9.0]);
    }
}
