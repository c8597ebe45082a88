//! Time-harmonic elastic scattering by penetrable anisotropic obstacles in an
//! isotropic background.
//!
//! The computational domain is a disk `B_R` closed by an exact
//! Dirichlet-to-Neumann (DtN) map on its boundary. Inside the disk the
//! Navier system is discretised with conforming P1 elements on meshes that
//! fit the obstacle interfaces. On top of the forward solver sit far-field
//! extraction, the shape derivative of the boundary measurement map and a
//! multi-frequency descent for recovering star-shaped obstacles.
//!
//! The scalar kernels (special functions, material tensors, incident fields,
//! DtN mode matrices) are generic over [`Real`]. Anything that touches a
//! mesh or a sparse factorisation runs in `f64`.

pub mod benchmarks;
pub mod dtn2d;
pub mod dtn3d;
pub mod error;
pub mod farfield;
pub mod fem;
pub mod incident;
pub mod inverse;
pub mod material;
pub mod mesh;
pub mod special_functions;

mod linalg;

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

pub use error::{Error, Result};

/// Floating-point scalar accepted by the generic kernels.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for the implemented types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion back to `f64` for reporting.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over a [`Real`].
pub type Cplx<T> = num_complex::Complex<T>;

/// Double precision complex number used by the mesh-based solvers.
pub type C64 = num_complex::Complex<f64>;

pub type HankelRatio = special_functions::HankelRatio<f64>;
pub type StiffnessTensor2D = material::StiffnessTensor2D<f64>;
pub type IsotropicMedium = material::IsotropicMedium<f64>;
pub type PlaneWaveMode = material::PlaneWaveMode<f64>;
pub type IncidentField = incident::IncidentField<f64>;
pub type DtnParams = dtn2d::DtnParams<f64>;
pub type ModeMatrices = dtn2d::ModeMatrices<f64>;
pub type DtnParams3D = dtn3d::DtnParams3D<f64>;
pub type ModeMatrices3D = dtn3d::ModeMatrices3D<f64>;

pub use dtn2d::{BoundaryTrace, RadiatingCoeffs};
pub use farfield::FarField;
pub use fem::{Problem, Solution};
pub use inverse::ShapeParams;
pub use mesh::{Mesh2D, StarCurve};
