//! Two-scale (FE²) finite element solver for small-strain solid mechanics.
//!
//! Every macroscopic integration point carries its own periodic RVE
//! (representative volume element) whose homogenized response replaces a
//! constitutive law. Two Newton drivers are provided side by side:
//!
//! * **staggered**: each RVE is iterated to equilibrium inside every macro
//!   iteration;
//! * **monolithic**: macro and micro unknowns are linearized together and the
//!   micro unknowns are eliminated by static condensation, so each RVE
//!   performs exactly one linear update per macro iteration.
//!
//! Module map: [`linalg`] (CSR, ordering, direct solver), [`mesh`] (elements
//! and B-operators), [`material`] (J2 plasticity), [`rve`] (micro problem),
//! [`twoscale`] (macro drivers and load stepping).

pub mod linalg;
pub mod material;
pub mod mesh;
pub mod rve;
pub mod twoscale;
