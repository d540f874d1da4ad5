//! Thermodynamic relaxation of isothermal quantum and classical systems.
//!
//! A density `rho` on a coordinate `a` (momentum, position, or the phase
//! plane) relaxes as `d rho/dt = d/da (rho L dF/da)`, a gradient flow of a
//! free-energy field `F` that is stationary on the canonical Gibbs density.
//! The crate provides the grids and stencils ([`numerics`]), eigenstates of
//! the discretized Hamiltonian ([`spectrum`]), canonical ensembles
//! ([`equilibrium`]), free-energy backends ([`free_energy`]), the
//! conservative stepper ([`relaxation`]), closed-form oscillator laws
//! ([`oscillator`]) and analytic references used by the test suites
//! ([`oracles`]).

pub mod equilibrium;
pub mod free_energy;
pub mod numerics;
pub mod oracles;
pub mod oscillator;
pub mod relaxation;
pub mod spectrum;
