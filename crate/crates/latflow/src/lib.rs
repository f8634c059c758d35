//! Computational laboratory for diagonal and horospherical flows on the
//! space of unimodular lattices and grids.
//!
//! Layers, bottom up: [`lattice`] (reduction, enumeration, wedges),
//! [`flows`] (the slice `a_τ u(ξ)Γ` and its group actions), [`heights`]
//! (height functions and their dynamical variants), [`diophantine`]
//! (Littlewood quantities and Dani-type checks), and [`lab`] (quadrature,
//! constant fitting and contraction reports).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments, clippy::type_complexity)]

pub mod error;
pub mod diophantine;
pub mod exact;
pub mod flows;
pub mod heights;
pub mod lab;
pub mod lattice;
mod linalg;
pub mod tracker;

pub use error::{Error, Flag, Result};
