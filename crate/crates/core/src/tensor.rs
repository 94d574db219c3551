//! Dense row-major tensors of rank 1 to 3.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_RANK: usize = 3;

/// Row-major tensor with finite elements.
///
/// Construction validates the shape (rank 1..=3, every extent at least 1,
/// data length equal to the extent product) and rejects NaN and infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.len() > MAX_RANK {
        return Err(Error::InvalidTensor(format!(
            "rank {} outside 1..={MAX_RANK}",
            shape.len()
        )));
    }
    if let Some(axis) = shape.iter().position(|&e| e == 0) {
        return Err(Error::InvalidTensor(format!(
            "extent of axis {axis} is zero"
        )));
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &e| acc.checked_mul(e))
        .ok_or_else(|| Error::InvalidTensor(format!("shape {shape:?} overflows")))
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let len = check_shape(&shape)?;
        if data.len() != len {
            return Err(Error::InvalidTensor(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Tensor { shape, data })
    }

    /// Tensor of the given shape with every element set to `value`.
    pub fn full(shape: Vec<usize>, value: T) -> Result<Self> {
        let len = check_shape(&shape)?;
        Tensor::new(shape, vec![value; len])
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        Tensor::full(shape, T::zero())
    }

    /// Build a rank-2 tensor from rows of equal length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let h = rows.len();
        let w = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != w) {
            return Err(Error::InvalidTensor("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Tensor::new(vec![h, w], data)
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

    /// Always false: tensors hold at least one element.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Element at a multi-index. Panics on rank mismatch or out-of-bounds.
    pub fn get(&self, index: &[usize]) -> T {
        assert_eq!(index.len(), self.rank(), "index rank");
        let mut flat = 0;
        for (&i, &e) in index.iter().zip(&self.shape) {
            assert!(i < e, "index {index:?} out of bounds for {:?}", self.shape);
            flat = flat * e + i;
        }
        self.data[flat]
    }

    /// Same data under a new shape with the same element count.
    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        let len = check_shape(&shape)?;
        if len != self.data.len() {
            return Err(Error::Dimension(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        Ok(Tensor {
            shape,
            data: self.data,
        })
    }

    /// Apply `f` elementwise. Fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Tensor::new(
            self.shape.clone(),
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Combine two tensors of identical shape elementwise.
    pub fn zip_map(&self, other: &Tensor<T>, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.require_same_shape(other)?;
        Tensor::new(
            self.shape.clone(),
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &Tensor<T>) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor<T>) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor<T>) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: T) -> Result<Self> {
        self.map(|v| v * c)
    }

    pub fn require_same_shape(&self, other: &Tensor<T>) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "shapes {:?} and {:?} differ",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub fn max_value(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min_value(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    /// Sum accumulated in `f64`.
    pub fn sum(&self) -> f64 {
        self.data.iter().map(|v| v.to_wide()).sum()
    }

    /// Flat indices of every element equal to the maximum.
    pub fn argmax_set(&self) -> Vec<usize> {
        let m = self.max_value();
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == m)
            .map(|(i, _)| i)
            .collect()
    }

    /// Element type conversion, rounding through `f64`.
    pub fn cast<U: Scalar>(&self) -> Result<Tensor<U>> {
        Tensor::new(
            self.shape.clone(),
            self.data
                .iter()
                .map(|v| U::from_wide(v.to_wide()))
                .collect(),
        )
    }
}

/// `C` feature maps of `H x W` activations, stored channel-first as `[C, H, W]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack<T> {
    tensor: Tensor<T>,
}

impl<T: Scalar> FeatureStack<T> {
    pub fn new(tensor: Tensor<T>) -> Result<Self> {
        if tensor.rank() != 3 {
            return Err(Error::Dimension(format!(
                "feature stack must be [C, H, W], got shape {:?}",
                tensor.shape()
            )));
        }
        Ok(FeatureStack { tensor })
    }

    pub fn channels(&self) -> usize {
        self.tensor.shape()[0]
    }

    pub fn height(&self) -> usize {
        self.tensor.shape()[1]
    }

    pub fn width(&self) -> usize {
        self.tensor.shape()[2]
    }

    /// The `k`-th `H * W` feature map in row-major order.
    pub fn channel(&self, k: usize) -> &[T] {
        let plane = self.height() * self.width();
        &self.tensor.data()[k * plane..(k + 1) * plane]
    }

    pub fn tensor(&self) -> &Tensor<T> {
        &self.tensor
    }
}

/// Final-layer weight vector of one output class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights<T> {
    tensor: Tensor<T>,
    class_index: usize,
}

impl<T: Scalar> ClassWeights<T> {
    pub fn new(tensor: Tensor<T>, class_index: usize) -> Result<Self> {
        if tensor.rank() != 1 {
            return Err(Error::Dimension(format!(
                "class weights must be a vector, got shape {:?}",
                tensor.shape()
            )));
        }
        Ok(ClassWeights {
            tensor,
            class_index,
        })
    }

    /// Select one row of a `[K, C]` weight matrix.
    pub fn from_matrix_row(matrix: &Tensor<T>, class_index: usize) -> Result<Self> {
        if matrix.rank() != 2 {
            return Err(Error::Dimension(format!(
                "weight matrix must be [K, C], got shape {:?}",
                matrix.shape()
            )));
        }
        let (rows, cols) = (matrix.shape()[0], matrix.shape()[1]);
        if class_index >= rows {
            return Err(Error::Parameter(format!(
                "class index {class_index} out of range for {rows} weight rows"
            )));
        }
        let row = matrix.data()[class_index * cols..(class_index + 1) * cols].to_vec();
        ClassWeights::new(Tensor::new(vec![cols], row)?, class_index)
    }

    pub fn len(&self) -> usize {
        self.tensor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensor.is_empty()
    }

    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn values(&self) -> &[T] {
        self.tensor.data()
    }
}
