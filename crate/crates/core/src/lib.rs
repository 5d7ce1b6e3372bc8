//! Curvature-informed furthest point sampling.
//!
//! The crate downsamples point clouds by running classical furthest point
//! sampling (FPS) to completion, turning the entry order into a soft rank,
//! and swapping the least useful core points for the most useful discarded
//! ones according to a joint rank built from soft rank and estimated mean
//! curvature. How many points to swap is either fixed or drawn from a small
//! Beta-distribution policy trained with REINFORCE.
//!
//! ```
//! use cfps::{cfps::{cfps_sample, CombineMode}, curvature, index::NeighborIndex, synth};
//!
//! let shape = synth::gen_torus(2.0, 0.5, 512, 3);
//! let index = NeighborIndex::build(&shape.cloud);
//! let curv = curvature::estimate(&shape.cloud, &index, 16).unwrap();
//! let result = cfps_sample(&shape.cloud, &curv, 64, 0.05, CombineMode::Additive, 0).unwrap();
//! assert_eq!(result.selection.len(), 64);
//! assert_eq!(result.n_exchange, 25);
//! ```

// `!(x > 0.0)` is written on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cfps;
pub mod cli;
pub mod cloud;
pub mod curvature;
pub mod error;
pub mod fps;
pub mod index;
pub mod io;
pub mod metrics;
pub mod policy;
pub mod synth;

pub use cloud::{PointCloud, SampleSelection};
pub use error::{Error, ParseError, Result};
