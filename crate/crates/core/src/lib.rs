pub mod besov;
pub mod commutator;
pub mod error;
pub mod euler;
pub mod fft;
pub mod fields;
pub mod fit;
pub mod heat;
pub mod io;
pub mod report;
pub mod schedule;
pub mod spectral;
pub mod sphere;
pub mod torus;

pub use error::{Error, Result};
pub use heat::{apply_heat, Bochner, BochnerIdentity, HeatReport};
pub use schedule::HeatSchedule;
pub use spectral::{Backend, SpectralField};
pub use sphere::{apply_curvature, CurvatureSign, GridTensor, SphereBasis, SphereField};
pub use torus::{TorusField, TorusGrid, TorusScalar, TorusTensor};
pub use besov::{BesovMode, BesovSpec};
pub use commutator::{commutator_direct, duhamel_reconstruct, flux, flux_decay_fit, FluxReport, GradedQuadrature};
pub use euler::{EulerTrajectory, TimeBump};
pub use fields::{AnyField, GeneratorSpec};
pub use report::{Check, Report, ReportFormat};
