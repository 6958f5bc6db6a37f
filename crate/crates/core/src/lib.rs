//! Numerical laboratory for Hankel operators on weighted Fock spaces of the
//! complex plane.

pub mod dbar;
pub mod decomposition;
pub mod error;
pub mod fock;
pub mod hankel;
pub mod lattice;
pub mod linalg;
pub mod oscillation;
pub mod quadrature;
pub mod scalar;
pub mod symbols;
pub mod weight;

pub use error::{Error, Result};
pub use scalar::{Cplx, Real};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Double-precision instantiations.
pub mod f64 {
    pub type Complex = crate::Cplx<f64>;
    pub type WeightModel = crate::weight::WeightModel<f64>;
    pub type PlaneRule = crate::quadrature::PlaneRule<f64>;
    pub type BallRule = crate::quadrature::BallRule<f64>;
    pub type FockBasis = crate::fock::FockBasis<f64>;
    pub type KernelEval = crate::fock::KernelEval<f64>;
    pub type Lattice = crate::lattice::Lattice<f64>;
    pub type Symbol = crate::symbols::Symbol<f64>;
    pub type Decomposition = crate::decomposition::Decomposition<f64>;
    pub type DbarSolver = crate::dbar::DbarSolver<f64>;
    pub type HankelGram = crate::hankel::HankelGram<f64>;
    pub type SingularSpectrum = crate::hankel::SingularSpectrum<f64>;
}

/// Single-precision instantiations.
pub mod f32 {
    pub type Complex = crate::Cplx<f32>;
    pub type WeightModel = crate::weight::WeightModel<f32>;
    pub type PlaneRule = crate::quadrature::PlaneRule<f32>;
    pub type BallRule = crate::quadrature::BallRule<f32>;
    pub type FockBasis = crate::fock::FockBasis<f32>;
    pub type KernelEval = crate::fock::KernelEval<f32>;
    pub type Lattice = crate::lattice::Lattice<f32>;
    pub type Symbol = crate::symbols::Symbol<f32>;
    pub type Decomposition = crate::decomposition::Decomposition<f32>;
    pub type DbarSolver = crate::dbar::DbarSolver<f32>;
    pub type HankelGram = crate::hankel::HankelGram<f32>;
    pub type SingularSpectrum = crate::hankel::SingularSpectrum<f32>;
}
