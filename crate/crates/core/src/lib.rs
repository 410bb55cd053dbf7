//! Motion-salient region-of-interest compression for time-lapse microscopy.

pub mod codec;
pub mod config;
pub mod error;
pub mod filters;
pub mod flow;
pub mod frame;
pub mod io;
pub mod mask;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod roi;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use frame::{BitDepth, Frame, Plane, Sequence};
pub use mask::RoiMask;
pub use scalar::Real;
pub use codec::{CodecParams, RoiBitstream};
pub use config::PipelineConfig;

pub type Plane32 = Plane<f32>;
pub type Plane64 = Plane<f64>;
pub type FlowField32 = flow::FlowField<f32>;
pub type FlowField64 = flow::FlowField<f64>;
pub type SaliencyMap32 = roi::SaliencyMap<f32>;
pub type SaliencyMap64 = roi::SaliencyMap<f64>;
