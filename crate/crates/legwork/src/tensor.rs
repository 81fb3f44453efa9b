//! Dense row-major f64 tensors.
//!
//! Everything in this crate runs on 64-bit reals: the curvature probe and the
//! finite-difference gradient checks need the precision headroom, and at desk
//! scale throughput is a secondary concern.

use crate::error::{Error, Result};

/// Dense n-dimensional array of f64 in row-major order.
///
/// A scalar has `shape == []` and one data element. Tensors are immutable
/// values in the public API; mutation stays inside this crate.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::ShapeMismatch {
                context: "Tensor::new".into(),
                expected: shape.clone(),
                found: vec![data.len()],
            });
        }
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::invalid(format!("zero-sized dimension in {shape:?}")));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor {
            shape: vec![],
            data: vec![v],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Single element of a scalar (or one-element) tensor.
    pub fn item(&self) -> Result<f64> {
        if self.data.len() != 1 {
            return Err(Error::invalid(format!(
                "item() on tensor of shape {:?}",
                self.shape
            )));
        }
        Ok(self.data[0])
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rows/cols of a rank-2 tensor.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            _ => Err(Error::invalid(format!(
                "expected rank-2 tensor, found shape {:?}",
                self.shape
            ))),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combine; shapes must match exactly.
    pub fn zip_map(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                context: "zip_map".into(),
                expected: self.shape.clone(),
                found: other.shape.clone(),
            });
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Tensor {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn dot(&self, other: &Tensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                context: "dot".into(),
                expected: self.shape.clone(),
                found: other.shape.clone(),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .sum())
    }

    pub fn sq_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.sq_norm().sqrt()
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// C = A @ B for rank-2 tensors, (m,k) x (k,n) -> (m,n).
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, ka) = a.dims2()?;
    let (kb, n) = b.dims2()?;
    if ka != kb {
        return Err(Error::ShapeMismatch {
            context: "matmul".into(),
            expected: vec![ka],
            found: vec![kb],
        });
    }
    let mut out = Tensor::zeros(&[m, n]);
    gemm(
        m,
        ka,
        n,
        a.data(),
        [ka as isize, 1],
        b.data(),
        [n as isize, 1],
        out.data_mut(),
    );
    Ok(out)
}

/// C = A @ B^T, (m,k) x (n,k) -> (m,n). Used by backward passes to avoid
/// materializing transposes.
pub fn matmul_nt(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, ka) = a.dims2()?;
    let (n, kb) = b.dims2()?;
    if ka != kb {
        return Err(Error::ShapeMismatch {
            context: "matmul_nt".into(),
            expected: vec![ka],
            found: vec![kb],
        });
    }
    let mut out = Tensor::zeros(&[m, n]);
    gemm(
        m,
        ka,
        n,
        a.data(),
        [ka as isize, 1],
        b.data(),
        [1, kb as isize],
        out.data_mut(),
    );
    Ok(out)
}

/// C = A^T @ B, (k,m) x (k,n) -> (m,n).
pub fn matmul_tn(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (ka, m) = a.dims2()?;
    let (kb, n) = b.dims2()?;
    if ka != kb {
        return Err(Error::ShapeMismatch {
            context: "matmul_tn".into(),
            expected: vec![ka],
            found: vec![kb],
        });
    }
    let mut out = Tensor::zeros(&[m, n]);
    gemm(
        m,
        ka,
        n,
        a.data(),
        [1, m as isize],
        b.data(),
        [n as isize, 1],
        out.data_mut(),
    );
    Ok(out)
}

fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    [rsa, csa]: [isize; 2],
    b: &[f64],
    [rsb, csb]: [isize; 2],
    c: &mut [f64],
) {
    // Safety: strides describe in-bounds layouts of the input slices and the
    // output buffer is sized m*n by the callers above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// L2 norm over a set of tensors viewed as one flat vector.
pub fn joint_norm(tensors: &[Tensor]) -> f64 {
    tensors.iter().map(Tensor::sq_norm).sum::<f64>().sqrt()
}

/// Total element count of a set of tensors.
pub fn joint_len(tensors: &[Tensor]) -> usize {
    tensors.iter().map(Tensor::len).sum()
}
