//! Finite-dimensional toolkit for checking algebraic quantum field theories
//! presented as double functors from discrete spacetime double categories
//! into the double category of finite von Neumann algebras, correspondences
//! and intertwiners.
//!
//! Module layering, bottom to top: [`numkit`], [`vna`], [`l2`], [`corr`],
//! [`dbl`], [`mink`], [`functor`], [`nets`].

pub mod corr;
pub mod dbl;
pub mod error;
pub mod functor;
pub mod l2;
pub mod mink;
pub mod nets;
pub mod numkit;
pub mod vna;

pub use error::{Error, Result};
