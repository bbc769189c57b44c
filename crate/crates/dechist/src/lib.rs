//! Markovian (Haken-Strobl) open-quantum dynamics on small exciton networks,
//! analyzed through the decoherent-histories formalism: decoherence matrices
//! over projector histories, entropy-based coherence measures, interference
//! decompositions, and transport efficiency.
//!
//! The numerical core is generic over the real scalar type (see [`Scalar`]);
//! concrete `f64` aliases are exported at the crate root and are what the CLI
//! and most tests use.

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps};

pub mod config;
pub mod dynamics;
mod error;
pub mod histories;
pub mod measures;
pub mod numerics;
pub mod report;

pub use error::{Error, Result};

/// Real scalar the library is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssignOps
    + Sum<Self>
    + Send
    + Sync
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + 'static
{
    /// Convert an `f64` constant into the scalar type.
    fn real(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + NumAssignOps
        + Sum<T>
        + Send
        + Sync
        + fmt::Debug
        + fmt::Display
        + fmt::LowerExp
        + 'static
{
}

pub type C64 = num_complex::Complex<f64>;
pub type CMatrix64 = numerics::CMatrix<f64>;
pub type HermitianEigen64 = numerics::HermitianEigen<f64>;
pub type NetworkModel64 = dynamics::NetworkModel<f64>;
pub type DensityMatrix64 = dynamics::DensityMatrix<f64>;
pub type Propagator64 = dynamics::Propagator<f64>;
pub type HistorySpec64 = histories::HistorySpec<f64>;
pub type DecoherenceMatrix64 = histories::DecoherenceMatrix<f64>;
pub type CoherenceScan64 = measures::CoherenceScan<f64>;
pub type InterferenceTrace64 = measures::InterferenceTrace<f64>;
