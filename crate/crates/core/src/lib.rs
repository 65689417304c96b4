pub mod boundary;
pub mod dispersion;
pub mod error;
pub mod exterior;
pub mod harmonics;
pub mod interior;
pub mod linalg;
pub mod model;
pub mod oracles;
pub mod quadrature;
pub mod specfun;
pub mod transport;
pub mod validation;

pub use num_complex::Complex64 as C64;

pub use boundary::{BoundaryData, BoundaryGrid};
pub use dispersion::{Band, BandPoint, DispersionSolver, DtnMatrix, Eigenfunction, StopReason};
pub use error::{Error, Result};
pub use exterior::ExteriorDtn;
pub use interior::{Discretization, InteriorOperator};
pub use model::{
    AdmissibleBasis, ModeClass, ModeIndex, ModeKind, PotentialSpec, RadialProfile, SeparableTerm,
    Tolerances, Truncation, WaveguideConfig,
};
pub use specfun::ScaledBessel;
pub use transport::{Envelope, TransportRecord, WavepacketSpec};
