//! Dense row-major tensor over f64. Deliberately minimal: the layers in this
//! crate only need shape bookkeeping, element access and a few fused loops.

use serde::{Deserialize, Serialize};

use super::NeuralError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor {
            shape: shape.to_vec(),
            values: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_values(shape: &[usize], values: Vec<f64>) -> Result<Tensor, NeuralError> {
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(NeuralError::ShapeMismatch {
                context: "tensor construction",
                expected,
                got: values.len(),
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            values,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn fill(&mut self, value: f64) {
        self.values.iter_mut().for_each(|v| *v = value);
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// out += M x for a 2-D tensor of shape (rows, cols) and x of length cols.
    pub fn matvec_acc(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(self.shape.len(), 2);
        let (rows, cols) = (self.shape[0], self.shape[1]);
        debug_assert_eq!(x.len(), cols);
        debug_assert_eq!(out.len(), rows);
        for (row, o) in self.values.chunks_exact(cols).zip(out) {
            let mut acc = 0.0;
            for (w, xv) in row.iter().zip(x) {
                acc += w * xv;
            }
            *o += acc;
        }
    }

    /// out += M^T y for a 2-D tensor of shape (rows, cols) and y of length rows.
    pub fn matvec_transpose_acc(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(self.shape.len(), 2);
        let (rows, cols) = (self.shape[0], self.shape[1]);
        debug_assert_eq!(y.len(), rows);
        debug_assert_eq!(out.len(), cols);
        for (row, yv) in self.values.chunks_exact(cols).zip(y) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += yv * w;
            }
        }
    }

    /// self += a b^T (outer product accumulate) for shape (len a, len b).
    pub fn outer_acc(&mut self, a: &[f64], b: &[f64]) {
        debug_assert_eq!(self.shape, &[a.len(), b.len()]);
        let cols = b.len();
        for (r, av) in a.iter().enumerate() {
            let row = &mut self.values[r * cols..(r + 1) * cols];
            for (w, bv) in row.iter_mut().zip(b) {
                *w += av * bv;
            }
        }
    }

    /// self += scale * other, elementwise.
    pub fn add_scaled(&mut self, other: &Tensor, scale: f64) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks_element_count() {
        assert!(Tensor::from_values(&[2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::from_values(&[2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn matvec_and_transpose() {
        // M = [[1, 2], [3, 4], [5, 6]]
        let m = Tensor::from_values(&[3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut out = vec![0.0; 3];
        m.matvec_acc(&[1.0, 1.0], &mut out);
        assert_eq!(out, vec![3.0, 7.0, 11.0]);

        let mut back = vec![0.0; 2];
        m.matvec_transpose_acc(&[1.0, 0.0, 1.0], &mut back);
        assert_eq!(back, vec![6.0, 8.0]);
    }

    #[test]
    fn outer_accumulates() {
        let mut g = Tensor::zeros(&[2, 2]);
        g.outer_acc(&[1.0, 2.0], &[3.0, 4.0]);
        g.outer_acc(&[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(g.values(), &[6.0, 8.0, 12.0, 16.0]);
    }
}
