//! Double-layered multi-agent solvers for `A x = b`.
//!
//! A network of clusters, each holding a connected sub-network of agents,
//! solves a linear equation that no single agent fully knows. Two schemes are
//! provided:
//!
//! * **row scheme**: each cluster knows a block row of `A`, split column-wise
//!   among its agents. Agents enforce conservation inside the cluster; clusters
//!   reach consensus on the stacked solution.
//! * **column scheme**: each cluster knows a block column of `A`, split
//!   row-wise among its agents. Agents reach consensus inside the cluster;
//!   clusters enforce conservation across the network.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! and scenario handling live in the `bilayer` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dynamics;
pub mod graph;
pub mod linalg;
pub mod partition;
pub mod simulator;
pub mod spectral;

pub use dynamics::{NetworkState, ResidualReport, StateDerivative};
pub use graph::{Graph, GraphError, Laplacian, Topology};
pub use linalg::{DenseMatrix, DenseVector, LinalgError};
pub use partition::{ColumnPartition, Layout, Partition, PartitionError, ProblemInstance, RowPartition, Scheme};
pub use simulator::{SimConfig, SimError, SimOutcome, Trajectory};
pub use spectral::{CompactSystem, LemmaCheckInput, SpectralError, SpectralVerdict};
