//! Corner singularities and stress intensity factors for the penalized Lame
//! and Stokes systems on polygons with one re-entrant corner.

pub mod angular;
pub mod geometry;
pub mod mesh;
pub mod modes;
pub mod quadrature;
pub mod spectral;
pub mod boundary;
pub mod expr;
pub mod extraction;
pub mod fem;
pub mod field;
pub mod harness;
