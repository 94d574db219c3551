//! Amplified directed divergence kernel.
//!
//! For two activation maps of the same shape,
//!
//! ```text
//! K(x, x') = exp(alpha * (x / max(x) - x' / max(x')))
//! ```
//!
//! Cells where the class-of-interest map `x` exceeds the competing map `x'`
//! (after max-normalization) are amplified; the rest decay toward zero. The
//! kernel is directed: `K(x, x') * K(x', x) = 1` cellwise.
//!
//! Large `alpha` can push `K` past the range of the storage type, so the
//! exponent is always kept (`log_values`) and the display map is derived as
//! `exp(log - max(log))`, which is `K / max(K)` without overflow.

use crate::cam::{normalize_by_max, Cam};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Amplification used when the caller does not choose one.
pub const DEFAULT_ALPHA: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AddkResult<T> {
    raw: Option<Tensor<T>>,
    log_values: Tensor<T>,
    normalized: Tensor<T>,
    alpha: T,
}

impl<T: Scalar> AddkResult<T> {
    /// Kernel values, or `None` when some cell is not representable as a
    /// finite positive `T`.
    pub fn raw(&self) -> Option<&Tensor<T>> {
        self.raw.as_ref()
    }

    /// `alpha * (x / max(x) - x' / max(x'))` per cell.
    pub fn log_values(&self) -> &Tensor<T> {
        &self.log_values
    }

    /// Kernel values divided by their maximum; the peak cell is exactly 1.
    pub fn normalized(&self) -> &Tensor<T> {
        &self.normalized
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// Number of cells whose normalized value is at least `level`.
    pub fn concentration(&self, level: T) -> Result<usize> {
        concentration(self, level)
    }
}

/// Evaluate the kernel with `x` as the class of interest and `x_prime` as
/// the competing class.
pub fn addk<T: Scalar>(x: &Cam<T>, x_prime: &Cam<T>, alpha: T) -> Result<AddkResult<T>> {
    if alpha.is_nan() || alpha <= T::zero() || alpha.is_infinite() {
        return Err(Error::Parameter(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    x.map().require_same_shape(x_prime.map())?;
    let xn = normalize_by_max(x)?;
    let xpn = normalize_by_max(x_prime)?;

    let a = alpha.to_wide();
    let log_values = xn.map().zip_map(xpn.map(), |u, v| {
        T::from_wide(a * (u.to_wide() - v.to_wide()))
    })?;

    // raw and normalized both derive from the stored exponents so that
    // normalized == raw / max(raw) up to one final rounding
    let peak = log_values.max_value().to_wide();
    let normalized = log_values.map(|l| T::from_wide((l.to_wide() - peak).exp()))?;

    let raw_values: Vec<T> = log_values
        .data()
        .iter()
        .map(|l| T::from_wide(l.to_wide().exp()))
        .collect();
    let representable = raw_values.iter().all(|v| v.is_finite() && *v > T::zero());
    let raw = if representable {
        Some(Tensor::new(log_values.shape().to_vec(), raw_values)?)
    } else {
        None
    };

    Ok(AddkResult {
        raw,
        log_values,
        normalized,
        alpha,
    })
}

/// Count of cells with normalized value `>= level`, for `level` in (0, 1).
///
/// Non-increasing in `alpha` for fixed inputs and level.
pub fn concentration<T: Scalar>(result: &AddkResult<T>, level: T) -> Result<usize> {
    if !(level > T::zero() && level < T::one()) {
        return Err(Error::Parameter(format!(
            "concentration level must be in (0, 1), got {level}"
        )));
    }
    Ok(result
        .normalized
        .data()
        .iter()
        .filter(|&&v| v >= level)
        .count())
}
