//! Numerical toolkit for the fully nonlinear Loewner–Nirenberg problem of
//! conformal k-Ricci curvature on Euclidean domains.
//!
//! * [`symfun`]: elementary symmetric functions and Gårding cones.
//! * [`conformal`]: the operators W[u], 𝒲[v], residuals and linearization.
//! * [`closed_forms`]: explicit solutions and barriers as radial profiles.
//! * [`radial`]: damped Newton with continuation for radial reductions.
//! * [`regularity`]: codimension classification and growth-rate fits.

pub mod closed_forms;
pub mod conformal;
pub mod error;
pub mod radial;
pub mod regularity;
pub mod symfun;

pub use error::{Error, Result};
