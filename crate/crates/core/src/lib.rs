//! Anomaly detection for functional data.
//!
//! Curves live on a shared sampling grid ([`FunctionalDataset`]). Detectors
//! produce a [`ScoreVector`] where larger means more anomalous:
//!
//! - integrated functional depths built from a univariate depth per time
//!   stamp (Tukey, projection, asymmetric projection), see [`integrated`];
//! - the area-of-convex-hull depth, see [`ach`];
//! - functional isolation forests on dictionary projections, see [`fif`];
//! - filtering pipelines (FPCA or Haar coefficients followed by a
//!   multivariate detector), see [`filtering`] and [`baselines`];
//! - MS-plot and FOM feature maps followed by an isolation forest, see
//!   [`featuremaps`].
//!
//! [`simulate`] builds labelled benchmarks by injecting the four classic
//! anomaly types into normal curves and [`metrics`] evaluates scores
//! against labels.
//!
//! The crate is `no_std` + `alloc`. The default `std` feature turns on
//! rayon parallelism; results do not depend on the number of threads.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod ach;
pub mod baselines;
pub mod data;
pub mod detector;
mod error;
pub mod featuremaps;
pub mod fif;
pub mod filtering;
pub mod integrated;
mod math;
pub mod metrics;
mod par;
pub mod rng;
pub mod simulate;
pub mod udepth;

pub use data::{FunctionalDataset, Grid, Label, LabelVector, ScoreVector};
pub use error::{Error, Result};
