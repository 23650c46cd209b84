use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A per-sample feature vector tagged with the method that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector<T = f64> {
    pub values: Vec<T>,
    pub descriptor_id: String,
}

impl<T: Real> FeatureVector<T> {
    pub fn new(descriptor_id: impl Into<String>, values: Vec<T>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite feature value at index {pos}"
            )));
        }
        Ok(Self {
            values,
            descriptor_id: descriptor_id.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}
