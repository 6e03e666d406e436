//! Monte Carlo laboratory for cut points of random-walk approximations of
//! Brownian motion.
//!
//! The crate is organised bottom-up:
//!
//! * [`paths`] samples the discrete path models (simple random walks,
//!   grid-rounded Gaussian bridges, half-plane excursions) and provides the
//!   sphere decomposition and inversion utilities.
//! * [`cut`] finds cut times and cut points in linear time.
//! * [`content`] measures Minkowski content profiles of finite point sets.
//! * [`nonintersect`] runs two-walk non-intersection experiments and fits
//!   intersection exponents.
//! * [`greens`] estimates one- and two-point cut-point Green's functions.
//!
//! Geometry and statistics are generic over the floating point type through
//! [`Real`]; the aliases below fix the common `f64` instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod content;
pub mod cut;
pub mod error;
pub mod geometry;
pub mod greens;
pub mod lattice;
pub mod nonintersect;
pub mod parallel;
pub mod paths;
pub mod rng;
pub mod scalar;
pub mod spatial;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::Site;
pub use scalar::Real;

pub type Point = geometry::Point<f64>;
pub type Aabb = geometry::Aabb<f64>;
pub type Region = content::Region<f64>;
pub type ContentProfile = content::ContentProfile<f64>;
pub type PlateauEstimate = content::PlateauEstimate<f64>;
pub type SphereSpec = paths::SphereSpec<f64>;
pub type LineFit = stats::LineFit<f64>;
pub type ExponentFit = nonintersect::ExponentFit<f64>;
pub type DecayFit = stats::DecayFit<f64>;
pub type SpatialHash = spatial::SpatialHash<f64>;

pub type Point32 = geometry::Point<f32>;
pub type Region32 = content::Region<f32>;
pub type ContentProfile32 = content::ContentProfile<f32>;
pub type GreensSample = greens::GreensSample;
