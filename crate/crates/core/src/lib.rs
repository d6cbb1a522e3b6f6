//! Discontinuous Galerkin solver for the one-dimensional multicomponent Euler
//! equations with pressure-equilibrium-preserving and energy-consistent schemes.

pub mod basis;
pub mod cases;
pub mod corrections;
pub mod diagnostics;
pub mod flux;
pub mod residual;
pub mod runner;
pub mod scheme;
pub mod thermo;
pub mod thermo_parser;
pub mod time;
pub mod units;
