//! Procedural synthetic scene layouts for detector pretraining data.
//!
//! The crate assembles scenes from triangle-mesh models, rasterizes
//! per-pixel instance labels, measures scene-complexity proxy metrics
//! (occlusion, scale distribution, object count, viewpoints), searches
//! layout parameters against metric targets, and simulates the
//! contrastive memory-bank training loop used for instance detection.

// Validation uses `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod obj;
pub mod pretrain;
pub mod raster;
pub mod scene;
pub mod search;
