//! Monitoring and evaluation toolkit for garbage vulnerable points (GVPs).
//!
//! Frames with box detections go in; ROI waste-coverage series, behavioural
//! profiles, dumping/cleaning events and detection-quality metrics come out.
//! A scenario generator produces synthetic streams with known ground truth.

pub mod analytics;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod simulate;

pub use error::{Error, ErrorClass, Result};
pub use geometry::{
    clip_box, coverage_fraction, iou, norm_to_pixel, pixel_to_norm, union_area, BBox, Detection,
    FrameRecord, GroundTruthBox, NormBox, RoiPolygon, NON_WASTE, WASTE,
};
