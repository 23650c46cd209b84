//! Activity recognition from tri-axial accelerometer recordings via
//! recurrence-plot textures, dense local descriptors and bag-of-visual-words
//! features, with time/frequency baselines and a repeated-split protocol.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod baseline;
pub mod bovw;
pub mod classify;
pub mod descriptors;
pub mod error;
pub mod eval;
pub mod feature;
pub mod image;
pub mod ingest;
pub mod rp;
pub mod scalar;

pub use error::{Error, Result};
pub use image::{RpImage, RpVariant};
pub use scalar::Real;

pub type SensorSample64 = ingest::SensorSample<f64>;
pub type SensorSample32 = ingest::SensorSample<f32>;
pub type Dataset64 = ingest::Dataset<f64>;
pub type Dataset32 = ingest::Dataset<f32>;
pub type FeatureVector64 = feature::FeatureVector<f64>;
pub type FeatureVector32 = feature::FeatureVector<f32>;
pub type Codebook64 = bovw::Codebook<f64>;
pub type Codebook32 = bovw::Codebook<f32>;
pub type LinearModel64 = classify::LinearModel<f64>;
pub type LinearModel32 = classify::LinearModel<f32>;
