//! Simulation and numerical verification of smooth shot noise processes
//! on the real line.

pub mod error;
pub mod kernels;
pub mod ppp;
pub mod quad;
pub mod rng;
pub mod roots;
pub mod paths;
pub mod stats;
pub mod crossings;
pub mod spectral;
pub mod scalespace;
pub mod io;
pub mod verify;

pub use error::{Error, Result};
pub use kernels::{parse_kernel, GaussianKernel, Kernel, KernelRef, SechKernel};
pub use paths::{PathOptions, SamplePath, Truncation};
pub use ppp::{ImpulseSpec, PointConfiguration, Window};
pub use rng::{SeedInfo, StreamFamily};
pub use stats::Estimate;
