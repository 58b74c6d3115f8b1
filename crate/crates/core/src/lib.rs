//! Numerical laboratory for the two-time structure of the narrow-wedge KPZ
//! equation: SHE solver, composition law, Brownian Gibbs line ensembles,
//! Brownian last passage percolation and the covariance toolkit used to read
//! exponents off simulations.

pub mod appendix;
pub mod bridge;
pub mod composition;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod noise;
pub mod rng;
pub mod she;
pub mod stats;
pub mod zerotemp;

pub use error::{Error, Result};
pub use grid::{Grid1D, SamplePath};
pub use rng::RngStream;
