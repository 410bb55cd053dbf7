//! Noise suppression and global translational stabilization.

mod bilateral;
mod median;
mod phase;

pub use bilateral::bilateral;
pub use median::median;
pub use phase::{apply_shift, estimate_shift, phase_correlation_surface, Shift, MIN_CONFIDENCE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseParams {
    pub enabled: bool,
    pub median_radius: usize,
    pub bilateral_sigma_spatial: f64,
    /// In normalized intensity units.
    pub bilateral_sigma_range: f64,
    pub bilateral_radius: usize,
}

impl Default for DenoiseParams {
    fn default() -> Self {
        Self {
            enabled: true,
            median_radius: 1,
            bilateral_sigma_spatial: 2.0,
            bilateral_sigma_range: 0.04,
            bilateral_radius: 2,
        }
    }
}

impl DenoiseParams {
    pub fn validate(&self) -> Result<()> {
        if self.median_radius < 1 {
            return Err(Error::param("median_radius", "must be >= 1"));
        }
        if self.bilateral_radius < 1 {
            return Err(Error::param("bilateral_radius", "must be >= 1"));
        }
        if !(self.bilateral_sigma_spatial > 0.0) {
            return Err(Error::param("bilateral_sigma_spatial", "must be > 0"));
        }
        if !(self.bilateral_sigma_range > 0.0) {
            return Err(Error::param("bilateral_sigma_range", "must be > 0"));
        }
        Ok(())
    }
}

/// Median then bilateral filtering; identity when disabled.
pub fn denoise(frame: &Frame, params: &DenoiseParams) -> Frame {
    if !params.enabled {
        return frame.clone();
    }
    let m = median(frame, params.median_radius);
    bilateral(
        &m,
        params.bilateral_radius,
        params.bilateral_sigma_spatial,
        params.bilateral_sigma_range,
    )
}
