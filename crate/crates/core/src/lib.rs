//! Mixed model-order reduction for stable SISO transfer functions, applied to
//! current-controller design for a two-quadrant converter-fed DC motor drive.
//!
//! - [`poly`], [`roots`], [`tf`], [`stability`]: polynomial and transfer
//!   function kernel, including the even/odd stability-equation factoring.
//! - [`mor`]: the three-step reduction (stability-equation denominator,
//!   magnitude-matched numerator, percentage adjustment).
//! - [`drive`]: drive constants and current-loop transfer functions from
//!   nameplate data.
//! - [`design`]: damping-ratio gain placement, gain sweeps and
//!   full-versus-reduced comparisons.
//! - [`sim`]: step and frequency responses, metrics, integral square error.
//! - [`cli`]: the `mordrive` command-line front end.

pub mod cli;
pub mod design;
pub mod drive;
pub mod error;
pub mod mor;
pub mod poly;
pub mod roots;
pub mod sim;
pub mod stability;
pub mod tf;

pub use error::{Error, Result};
pub use poly::Polynomial;
pub use tf::TransferFunction;
