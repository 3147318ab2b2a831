//! Computation of Assouad-type dimensions of fractal measures.
//!
//! The crate has three layers:
//!
//! * exact machinery for self-similar measures of finite type on the line:
//!   arithmetic in a real algebraic number field ([`field`]), net intervals and
//!   characteristic vectors ([`net`]), the transition graph and the
//!   matrix-product bounds for the lower Assouad dimension ([`graph`],
//!   [`bounds`]);
//! * closed forms and one-sided bounds: Moran-construction lower bounds and the
//!   section outer measure ([`moran`], [`affine`]), Bedford-McMullen carpet
//!   formulas with an approximate-square oracle ([`carpet`]);
//! * black-box measure oracles and empirical estimators for the dimension
//!   functions H-bar/H-underbar, the Assouad spectrum, local dimensions and the
//!   covering/packing counting functions ([`oracle`], [`estimate`],
//!   [`counting`], [`numtheo`]).
//!
//! All rational arithmetic is arbitrary precision; every estimator reports
//! which of its outputs are exact and which are estimates or one-sided bounds.

pub mod affine;
pub mod bounds;
pub mod carpet;
pub mod counting;
pub mod error;
pub mod estimate;
pub mod field;
pub mod graph;
pub mod ifs;
pub mod moran;
pub mod net;
pub mod numtheo;
pub mod oracle;
pub mod parallel;
pub mod rational;

pub use error::{Error, Result};
