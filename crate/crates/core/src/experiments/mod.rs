//! Synthetic data, Poisson sampling and the fluctuation-exponent pipeline.

pub mod chi;
pub mod datasets;
pub mod ppp;
pub mod sampling;

pub use chi::{estimate_chi, ChiConfig, ChiEstimate};
pub use datasets::{gen_dataset, DatasetSpec, Layout};
pub use ppp::{sample_ppp, Region};
pub use sampling::{sample_points, Distribution};
