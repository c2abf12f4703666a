//! Spectral fractional Laplacian on model domains.

pub mod conformance;
pub mod dirichlet;
pub mod domain;
pub mod grid;
pub mod error;
pub mod heat;
pub mod kernels;
pub mod large;
pub mod measure;
pub mod nystrom;
pub mod operator;
pub mod quadrature;
pub mod rate;
pub mod semilinear;
pub mod special;
pub mod spectral;

pub use domain::{pt, BoundaryPoint, DomainKind, Face, Mode, Point, Side, SpectralDomain};
pub use error::{Error, Result};
pub use heat::HeatKernel;
pub use kernels::{KernelEvaluator, TimePlan};
pub use spectral::{Bump, BumpShape, Regularity, SpectralField, TestFunction};
