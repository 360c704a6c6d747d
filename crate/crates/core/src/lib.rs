//! Maximal averaging operators on the affine group `G_n = R^n ⋊ R_+`.
//!
//! The crate is organized bottom-up:
//!
//! - [`group`]: exact group law, Haar and modular densities, geodesics.
//! - [`field`]: grids in `(x, u = ln y)`, sampled fields, norms, generators.
//! - [`operators`]: translation, dilation, geodesic and dyadic maximal operators.
//! - [`stochastic`]: random walks, convolution powers, Brownian motion.
//! - [`verify`]: experiments that compare computed quantities to closed forms.

pub mod error;
pub mod field;
pub mod group;
pub mod numeric;
pub mod operators;
pub mod stochastic;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Axis, LogGrid, RadiusSet, SampledField, UWindow};
pub use group::{AffineGroup, Direction, GroupElement};
