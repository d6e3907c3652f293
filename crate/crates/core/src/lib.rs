//! Unsupervised anomaly detection for analog/mixed-signal (AMS) circuit signals.
//!
//! The pipeline runs end to end:
//!
//! * [`waveforms`] simulates behavioral circuits: a four-block voltage
//!   reference chain, a bandgap-style reference at component level, an opamp,
//!   and k-stage non-inverting amplifiers built from one opamp model.
//! * [`inject`] adds point anomalies to waveforms and component faults to models.
//! * [`features`] extracts mean/variance/slope, windows and normalizes them.
//! * [`cluster`] fits 2-cluster k-means, GMM, BIRCH and spectral models.
//! * [`centroid`] refines cluster centroids from the global feature distribution.
//! * [`earlydetect`] runs windowed detection and latency accounting.
//! * [`model`] stores fitted models as versioned JSON.
//! * [`bench`] generates balanced datasets and evaluates experiment suites.

// Negated float comparisons are how NaN gets rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod centroid;
pub mod cluster;
pub mod earlydetect;
mod error;
pub mod features;
pub mod inject;
pub mod model;
pub mod seed;
pub mod waveforms;

pub use error::{Error, Result};
