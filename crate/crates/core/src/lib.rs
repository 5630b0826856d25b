//! Event-camera tracking core.
//!
//! Address-event streams are folded into per-bin spike-count frames, which a
//! compressive tracker follows with sparse rectangle features and an online
//! Gaussian naive-Bayes classifier. A behavioral DVS simulator produces
//! streams from parametric intensity scenes.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. File formats, rendering and the command line live in the
//! `dvstrack` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod classifier;
pub mod coding;
pub mod event;
pub mod features;
pub mod sim;
pub mod tracker;

pub use classifier::{ClassifierError, ClassifierParams};
pub use coding::{bin_events, frame_stats, BinningConfig, FrameStats, PolarityMode, SpikeCountFrame};
pub use event::{validate_stream, Event, EventStream, Geometry, Polarity, Violation};
pub use features::{FeatureIndexMap, FeatureVector, IntegralImage, PlacementError, Rect, SparseMeasurementMatrix};
pub use tracker::{track, BoundingBox, TrackError, TrackerConfig, TrackerState, TrajectoryRecord};
