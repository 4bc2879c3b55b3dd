//! Depth-guided upsampling of low-resolution thermal images.
//!
//! A time-of-flight (TOF) camera and a thermopile array (IR) are mounted side
//! by side. Given the rig calibration, every TOF pixel is projected into the
//! IR image and receives a temperature; the segment method splits each IR
//! pixel's footprint into a near and a far surface and solves for the
//! temperature of each.
//!
//! All algorithms are generic over [`scalar::Real`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`.

// `!(x > 0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod calibration;
pub mod cli;
pub mod detection;
pub mod error;
pub mod formats;
pub mod fusion;
pub mod geometry;
pub mod metrics;
pub mod raster;
pub mod scalar;
pub mod simulation;

pub use error::{Error, Result};
pub use fusion::FusionMethod;
pub use raster::{Mask, Raster};
pub use scalar::Real;

pub type Intrinsics = geometry::Intrinsics<f64>;
pub type Extrinsics = geometry::Extrinsics<f64>;
pub type TaitBryanAngles = geometry::TaitBryanAngles<f64>;
pub type Point3 = geometry::Point3<f64>;
pub type PixelCoord = geometry::PixelCoord<f64>;
pub type Matrix3 = geometry::Matrix3<f64>;
pub type DepthImage = raster::DepthImage<f64>;
pub type ThermalImage = raster::ThermalImage<f64>;
pub type FusedImage = raster::FusedImage<f64>;
pub type ProjectionMap = fusion::ProjectionMap<f64>;
pub type SegmentParams = fusion::SegmentParams<f64>;
pub type SceneSpec = simulation::SceneSpec<f64>;
pub type RigCalibration = calibration::RigCalibration<f64>;
pub type CalibResult = calibration::CalibResult<f64>;
pub type ErrorReport = metrics::ErrorReport<f64>;
pub type Track = detection::Track<f64>;

/// Single-precision variants for memory-constrained targets.
pub mod f32 {
    pub type Intrinsics = crate::geometry::Intrinsics<f32>;
    pub type Extrinsics = crate::geometry::Extrinsics<f32>;
    pub type DepthImage = crate::raster::DepthImage<f32>;
    pub type ThermalImage = crate::raster::ThermalImage<f32>;
    pub type FusedImage = crate::raster::FusedImage<f32>;
    pub type ProjectionMap = crate::fusion::ProjectionMap<f32>;
}
