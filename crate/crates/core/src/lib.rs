//! Instance-level indoor scene understanding and navigation assistance.
//!
//! The crate takes a labeled point cloud (per-point semantic class and offset
//! vector, normally produced by a segmentation network and here supplied by a
//! file or a noise-controllable oracle) and turns it into:
//!
//! * scored instance predictions ([`grouping`]), via radius clustering on the
//!   original and on the offset-shifted coordinates followed by NMS,
//! * average-precision metrics against ground truth ([`evalmetrics`]),
//! * an egocentric top view with a 12-sector direction model ([`topview`]),
//! * answers to obstacle-avoidance and object-finding queries ([`assist`]).
//!
//! [`session`] and [`service`] wrap the pipeline into an interactive simulator
//! reachable over HTTP, and [`cli`] is the `hida` command line front end.

pub mod assist;
pub mod cli;
pub mod cloudio;
pub mod error;
pub mod evalmetrics;
pub mod grouping;
pub mod pipeline;
pub mod preprocess;
pub mod service;
pub mod session;
pub mod topview;

pub use error::{Error, Result};
