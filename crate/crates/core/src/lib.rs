//! Cloud detection by marker-controlled watershed segmentation of
//! multiscale morphological gradients, with a threshold-growing baseline,
//! hydrometeor truth masks and categorical verification scores.
//!
//! The raster algorithms are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the element type. Computation normally runs in `f64`
//! and files store `f32`.
//!
//! ```
//! use gms::{synth::Preset, pipeline::{run_gms, GmsConfig}};
//!
//! let spec = Preset::WarmStratiform.spec(96, 96, 42);
//! let (image, _volume) = gms::synth::generate_scene::<f64>(&spec).unwrap();
//! let out = run_gms(&image, "ir_window", &GmsConfig::default()).unwrap();
//! assert!(out.mask.cloudy_count() > 0);
//! ```

pub mod baseline;
pub mod codec;
pub mod error;
pub mod grid;
pub mod labeling;
pub mod markers;
pub mod metrics;
pub mod morphology;
pub mod pipeline;
pub mod scalar;
pub mod synth;
pub mod truth;
pub mod watershed;

pub use error::{Error, FormatError, Result};
pub use grid::{ChannelId, CloudMask, MarkerMap, MultiChannelImage, Raster2D, SegmentMap, StructuringElement, Units};
pub use metrics::{contingency, verify, ContingencyTable, VerificationReport};
pub use morphology::{GradientConfig, GradientField};
pub use scalar::Scalar;

pub type Raster = Raster2D<f64>;
pub type Raster32 = Raster2D<f32>;
pub type Image = MultiChannelImage<f64>;
pub type Image32 = MultiChannelImage<f32>;
pub type Gradient = GradientField<f64>;
pub type Gradient32 = GradientField<f32>;
pub type Volume = truth::HydrometeorVolume<f64>;
