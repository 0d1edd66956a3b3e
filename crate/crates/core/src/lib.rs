pub mod cloud;
pub mod distance;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod kernels;
pub mod neighbors;
pub mod pwspd;
pub mod rng;
pub mod spanner;
pub mod spectral;
pub mod stats;

pub use cloud::{load_point_cloud, parse_point_cloud, PairwiseMetric, PointCloud};
pub use distance::{pairwise_euclidean, DistanceMatrix, MetricKind};
pub use error::{Error, Result};
pub use graph::{power_weights, NeighborGraph, Neighborhood, Power, PoweredWeights};
pub use rng::RngHandle;
