//! A numerical laboratory for L-geometry on backward Ricci flows over
//! symmetric model spaces.
//!
//! The pipeline: closed-form or integrated backward flows ∂g/∂τ = 2 Ric on
//! flat space, round spheres, round cylinders, and warped products
//! ([`geometry`]); the L-functional, reduced distance l = L/(2√τ), reduced
//! volume, and the conjugate heat residual for e^{-l} ([`lgeo`]); the
//! shrinking-breather → ancient-flow concatenation with its Type I and
//! uniform-l certificates ([`breather`]); and shrinking-soliton residuals,
//! the F-functional, and κ-noncollapsing probes for the blow-down snapshots
//! ([`soliton`]).
//!
//! Everything works in reduced coordinates: 1-2 scalars per model family,
//! with diagonal metric coefficients throughout. All τ are backward times,
//! τ = 0 being the singular/terminal slice.

pub mod breather;
pub mod config;
pub mod csvio;
pub mod error;
pub mod geometry;
pub mod lgeo;
pub mod optim;
pub mod quad;
pub mod soliton;

pub use error::{Error, Result};
pub use geometry::{BackwardFlow, EvolveOptions, FlowModel, ModelGeometry, SpacetimePoint};
pub use lgeo::{LgeoOptions, ReducedDistance, SpacetimeCurve};
pub use breather::{AncientFlow, BreatherSpec, DiffeoDescriptor, TauLadder};
pub use soliton::{MetricSnapshot, SolitonReport};
