//! Closed-form references for the test suites.
//!
//! Nothing here runs a second numerical solver, so a disagreement with the
//! main code points at the main code.

use crate::equilibrium::DensityField;
use crate::free_energy::FreeEnergyBackend;
use crate::numerics::{Field, Grid1D};
use crate::relaxation::{
    drift_diffusion_rate, KineticCoefficients, RelaxationError, RelaxationState, Space,
};

/// Ornstein-Uhlenbeck process in momentum space with friction `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    pub friction: f64,
    pub mass: f64,
    pub temperature: f64,
    pub mean0: f64,
    pub var0: f64,
}

/// `(mean, variance)` of the OU density at time `t`.
pub fn ou_analytic_moments(params: &OuParams, t: f64) -> (f64, f64) {
    let rate = params.friction / params.mass;
    let var_eq = params.mass * params.temperature;
    let mean = params.mean0 * (-rate * t).exp();
    let decay = (-2.0 * rate * t).exp();
    let var = params.var0 * decay + var_eq * (1.0 - decay);
    (mean, var)
}

/// Harmonic ground state `(m w / pi hbar)^{1/4} exp(-m w x^2 / 2 hbar)`.
pub fn analytic_ground_state(grid: &Grid1D, mass: f64, omega: f64, hbar: f64) -> Field {
    let alpha = mass * omega / hbar;
    let norm = (alpha / std::f64::consts::PI).powf(0.25);
    grid.sample(|x| norm * (-0.5 * alpha * x * x).exp())
}

/// `max |d rho/dt|` of the line scheme at `rho`: zero exactly when the
/// discrete flux vanishes on every face.
pub fn stationarity_residual(
    rho: &DensityField,
    backend: &FreeEnergyBackend,
    coefficients: &KineticCoefficients,
    space: Space,
) -> Result<f64, RelaxationError> {
    let state = RelaxationState::new(rho.clone(), space)?;
    let rate = drift_diffusion_rate(&state, backend, coefficients)?;
    Ok(rate.iter().fold(0.0, |m, v| m.max(v.abs())))
}
