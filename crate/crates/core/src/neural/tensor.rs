use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major tensor of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "{} values for shape {shape:?} ({expected} expected)",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("tensor values must be finite".into()));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Row `i` of a 2-D tensor.
    pub fn row(&self, i: usize) -> &[f64] {
        let cols = self.shape[1];
        &self.data[i * cols..(i + 1) * cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let cols = self.shape[1];
        &mut self.data[i * cols..(i + 1) * cols]
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.shape == other.shape
    }
}

/// Strided matrix view used by [`gemm`]: element (i, j) lives at
/// `data[i * row_stride + j * col_stride]`.
#[derive(Clone, Copy)]
pub(crate) struct MatRef<'a> {
    pub data: &'a [f64],
    pub row_stride: usize,
    pub col_stride: usize,
}

/// C (m×n, row-major with row stride `ldc`) = beta·C + A (m×k) · B (k×n).
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: MatRef<'_>,
    b: MatRef<'_>,
    beta: f64,
    c: &mut [f64],
    ldc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    let last = |v: MatRef<'_>, rows: usize, cols: usize| {
        (rows.saturating_sub(1)) * v.row_stride + (cols.saturating_sub(1)) * v.col_stride
    };
    assert!(
        k == 0 || last(a, m, k) < a.data.len(),
        "gemm: A out of bounds"
    );
    assert!(
        k == 0 || last(b, k, n) < b.data.len(),
        "gemm: B out of bounds"
    );
    assert!((m - 1) * ldc + n <= c.len(), "gemm: C out of bounds");
    // SAFETY: every index touched by the kernel is bounded by the asserts above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.row_stride as isize,
            a.col_stride as isize,
            b.data.as_ptr(),
            b.row_stride as isize,
            b.col_stride as isize,
            beta,
            c.as_mut_ptr(),
            ldc as isize,
            1,
        );
    }
}
