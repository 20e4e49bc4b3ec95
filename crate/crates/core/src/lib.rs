//! Lie point symmetries of the (1+2)-dimensional reaction-diffusion-convection class
//!
//! ```text
//! u_t = (D(u) u_x)_x + (D(u) u_y)_y + K1(u) u_x + K2(u) u_y + R(u)
//! ```
//!
//! Modules, bottom-up: [`expr`] (symbolic kernel), [`model`] (equations,
//! generators, algebras), [`prolong`] (invariance criterion), [`transform`]
//! (equivalence and form-preserving transformations), [`classify`]
//! (canonical forms), [`reduce`] (reduction and exact solutions), [`cli`].

pub mod classify;
pub mod cli;
pub mod expr;
pub mod model;
pub mod prolong;
pub mod reduce;
pub mod template;
pub mod transform;
