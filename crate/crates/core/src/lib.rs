//! Marchenko parametrization of reflectionless Jacobi and Schrödinger operators.
//!
//! A positive measure `σ` on the admissible set determines the Herglotz
//! function `F`, the half-line m-functions `m±`, and from those the Jacobi
//! coefficients ([`jacobi`]) or the potential `V(x)` ([`schrodinger`]).
//! Every reconstruction has an independent oracle to check it against.

// Negated comparisons are deliberate: they route NaN into the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the recurrences they implement.
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod herglotz;
pub mod jacobi;
pub mod measure;
pub mod quadrature;
pub mod scalar;
pub mod schrodinger;
pub mod series;

pub use herglotz::{HerglotzError, Representation, Setting, SettingKind, Side};
pub use jacobi::{JacobiError, JacobiWindow};
pub use measure::{Measure, MeasureError};
pub use scalar::{Real, C};
pub use schrodinger::{MomentFlowState, PotentialTrace, SchrodingerError};
pub use series::SeriesError;

pub type Measure64 = Measure<f64>;
pub type Measure32 = Measure<f32>;
pub type Setting64 = Setting<f64>;
pub type Representation64 = Representation<f64>;
pub type JacobiWindow64 = JacobiWindow<f64>;
pub type PotentialTrace64 = PotentialTrace<f64>;
pub type MomentFlowState64 = MomentFlowState<f64>;

/// Any library error.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Herglotz(#[from] HerglotzError),
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
    #[error(transparent)]
    Schrodinger(#[from] SchrodingerError),
}
