//! Discriminative localization under class overlap.
//!
//! Two binary expert networks each yield a class activation map for the same
//! image. The amplified directed divergence kernel compares the map of the
//! class of interest against the competing one and keeps the regions where
//! the class-of-interest expert is the more confident of the two. The
//! [`imaging`] module renders the maps as heatmap overlays and [`pipeline`]
//! wires everything together from files.

pub mod cam;
pub mod error;
pub mod imaging;
pub mod kernel;
pub mod npy;
pub mod pipeline;
pub mod scalar;
pub mod tensor;

pub use cam::{compute_cam, normalize_by_max, Cam};
pub use error::{Error, Result};
pub use kernel::{addk, concentration, AddkResult};
pub use npy::{load_tensor, save_tensor};
pub use scalar::Scalar;
pub use tensor::{ClassWeights, FeatureStack, Tensor};

pub type Tensor32 = Tensor<f32>;
pub type Tensor64 = Tensor<f64>;
pub type FeatureStack32 = FeatureStack<f32>;
pub type ClassWeights32 = ClassWeights<f32>;
pub type Cam32 = Cam<f32>;
pub type Cam64 = Cam<f64>;
pub type AddkResult32 = AddkResult<f32>;
pub type AddkResult64 = AddkResult<f64>;
