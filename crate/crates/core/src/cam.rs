//! Class activation maps: the class-weighted sum of final convolutional
//! feature maps.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{ClassWeights, FeatureStack, Tensor};

/// A class activation map for one class of one expert network.
#[derive(Debug, Clone, PartialEq)]
pub struct Cam<T> {
    map: Tensor<T>,
    class_index: usize,
    model_id: String,
}

impl<T: Scalar> Cam<T> {
    pub fn new(map: Tensor<T>, class_index: usize, model_id: impl Into<String>) -> Result<Self> {
        if map.rank() != 2 {
            return Err(Error::Dimension(format!(
                "activation map must be [H, W], got shape {:?}",
                map.shape()
            )));
        }
        Ok(Cam {
            map,
            class_index,
            model_id: model_id.into(),
        })
    }

    pub fn map(&self) -> &Tensor<T> {
        &self.map
    }

    pub fn into_map(self) -> Tensor<T> {
        self.map
    }

    pub fn height(&self) -> usize {
        self.map.shape()[0]
    }

    pub fn width(&self) -> usize {
        self.map.shape()[1]
    }

    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    /// Same labels, different map.
    pub(crate) fn with_map(&self, map: Tensor<T>) -> Result<Self> {
        Cam::new(map, self.class_index, self.model_id.clone())
    }
}

/// Weighted sum of feature maps, `sum_k w[k] * f[k, i, j]`.
///
/// Accumulates in `f64` and rounds once per cell. The fully connected bias
/// is not part of the map.
pub fn compute_cam<T: Scalar>(
    features: &FeatureStack<T>,
    weights: &ClassWeights<T>,
    model_id: impl Into<String>,
) -> Result<Cam<T>> {
    if weights.len() != features.channels() {
        return Err(Error::Dimension(format!(
            "weights have {} channels but features have {}",
            weights.len(),
            features.channels()
        )));
    }
    let plane = features.height() * features.width();
    let mut acc = vec![0f64; plane];
    for (k, &w) in weights.values().iter().enumerate() {
        let w = w.to_wide();
        if w == 0.0 {
            continue;
        }
        for (a, &f) in acc.iter_mut().zip(features.channel(k)) {
            *a += w * f.to_wide();
        }
    }
    let map = Tensor::new(
        vec![features.height(), features.width()],
        acc.into_iter().map(T::from_wide).collect(),
    )
    .map_err(|e| match e {
        Error::NonFinite { index } => Error::InvalidTensor(format!(
            "weighted sum overflows storage precision at cell {index}"
        )),
        e => e,
    })?;
    Cam::new(map, weights.class_index(), model_id)
}

/// Divide every cell by the map maximum. Fails unless the maximum is positive.
///
/// The maximum cell becomes exactly 1.
pub fn normalize_by_max<T: Scalar>(cam: &Cam<T>) -> Result<Cam<T>> {
    let max = cam.map().max_value();
    if max <= T::zero() {
        return Err(Error::NonPositiveMax { max: max.to_wide() });
    }
    cam.with_map(cam.map().map(|v| v / max)?)
}
