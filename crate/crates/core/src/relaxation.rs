//! Conservative time stepping of `d rho/dt = d/da (rho L dF/da)`.
//!
//! Every backend splits `F = V + kT ln rho`, and each face between two
//! nodes carries the exponentially fitted flux
//!
//! ```text
//! J = (L kT / h) [B(x) rho_i - B(-x) rho_{i+1}],  x = (V_{i+1} - V_i) / kT,
//! B(x) = x / (e^x - 1).
//! ```
//!
//! To leading order this is the arithmetic-average drift flux plus the
//! diffusion `kT L d2rho`, but it also keeps `rho ~ exp(-V/kT)` exactly
//! stationary and stays non-negative under the step bound returned by
//! [`stable_dt`]. End nodes own half cells, so the trapezoid mass is
//! conserved to roundoff and no flux crosses the boundary.
//!
//! Phase-space runs add the reversible fluxes `rho dF_p/dp` (along `q`) and
//! `-rho dF_q/dq` (along `p`) to dissipative fluxes of the same fitted form
//! along both axes.

use thiserror::Error;

use crate::equilibrium::{
    density_moment, mean_variance, DensityField, Support, NEGATIVE_TOLERANCE,
};
use crate::free_energy::{Axis, BackendError, BackendKind, FreeEnergyBackend};
use crate::numerics::{gradient_slice, Grid1D, Grid2D};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelaxationError {
    #[error("friction b must be positive and finite, got {0}")]
    BadFriction(f64),
    #[error("position mobility must be positive and finite, got {0}")]
    BadMobility(f64),
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error("density support does not match {0:?} space")]
    SpaceMismatch(Space),
    #[error("q and p backends disagree on temperature ({q} vs {p})")]
    TemperatureMismatch { q: f64, p: f64 },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("unstable dt: density reached {min} against max {max}")]
    UnstableDt { min: f64, max: f64 },
    #[error("NaN detected in density")]
    NanDetected,
    #[error("end time {t_end} is not after start time {start}")]
    BadHorizon { start: f64, t_end: f64 },
    #[error("output stride must be at least 1")]
    BadStride,
    #[error("safety factor must lie in (0, 1], got {0}")]
    BadSafety(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Momentum,
    Position,
    Phase,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Momentum => "momentum",
            Space::Position => "position",
            Space::Phase => "phase",
        }
    }
}

/// Kinetic coefficients: `L_pp = b`, `L_qq = 1/b` and the antisymmetric
/// coupling `L_pq = -L_qp = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticCoefficients {
    friction: f64,
    position_mobility: Option<f64>,
}

impl KineticCoefficients {
    pub fn new(friction: f64) -> Result<Self, RelaxationError> {
        if !(friction > 0.0 && friction.is_finite()) {
            return Err(RelaxationError::BadFriction(friction));
        }
        Ok(Self {
            friction,
            position_mobility: None,
        })
    }

    /// Replaces the default `L_qq = 1/b`. Useful for nearly frictionless
    /// phase-space runs, where `1/b` would make the configuration diffusion
    /// dominate.
    pub fn with_position_mobility(mut self, mobility: f64) -> Result<Self, RelaxationError> {
        if !(mobility > 0.0 && mobility.is_finite()) {
            return Err(RelaxationError::BadMobility(mobility));
        }
        self.position_mobility = Some(mobility);
        Ok(self)
    }

    pub fn friction(&self) -> f64 {
        self.friction
    }

    pub fn momentum_mobility(&self) -> f64 {
        self.friction
    }

    pub fn position_mobility(&self) -> f64 {
        self.position_mobility.unwrap_or(1.0 / self.friction)
    }

    /// `L_pq`; `L_qp` is its negative.
    pub fn coupling(&self) -> f64 {
        1.0
    }

    fn line_mobility(&self, space: Space) -> f64 {
        match space {
            Space::Position => self.position_mobility(),
            _ => self.momentum_mobility(),
        }
    }
}

/// Discretization of the reversible phase-space fluxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdvectionScheme {
    /// Second-order centered fluxes, including the `kT` cross terms.
    #[default]
    Centered,
    /// First-order upwinding of the potential-part velocity. Monotone, so it
    /// stays non-negative without any dissipation.
    Upwind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationState {
    density: DensityField,
    space: Space,
    step_count: u64,
}

impl RelaxationState {
    pub fn new(density: DensityField, space: Space) -> Result<Self, RelaxationError> {
        let ok = matches!(
            (density.support(), space),
            (Support::Line(_), Space::Momentum | Space::Position)
                | (Support::Plane(_), Space::Phase)
        );
        if !ok {
            return Err(RelaxationError::SpaceMismatch(space));
        }
        Ok(Self {
            density,
            space,
            step_count: 0,
        })
    }

    pub fn density(&self) -> &DensityField {
        &self.density
    }

    pub fn into_density(self) -> DensityField {
        self.density
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn time(&self) -> f64 {
        self.density.time()
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    fn line_grid(&self) -> Result<Grid1D, RelaxationError> {
        match (self.density.support(), self.space) {
            (Support::Line(g), Space::Momentum | Space::Position) => Ok(*g),
            _ => Err(RelaxationError::SpaceMismatch(self.space)),
        }
    }

    fn plane_grid(&self) -> Result<Grid2D, RelaxationError> {
        match (self.density.support(), self.space) {
            (Support::Plane(g), Space::Phase) => Ok(*g),
            _ => Err(RelaxationError::SpaceMismatch(self.space)),
        }
    }

    fn advance(&self, rate: &[f64], dt: f64) -> Result<Self, RelaxationError> {
        let values: Vec<f64> = self
            .density
            .values()
            .iter()
            .zip(rate)
            .map(|(r, d)| r + dt * d)
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RelaxationError::NanDetected);
        }
        let max = values.iter().copied().fold(0.0, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_TOLERANCE * max {
            return Err(RelaxationError::UnstableDt { min, max });
        }
        Ok(Self {
            density: DensityField::from_raw(
                *self.density.support(),
                values,
                self.density.time() + dt,
            ),
            space: self.space,
            step_count: self.step_count + 1,
        })
    }
}

fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - 0.5 * x + x * x / 12.0
    } else {
        x / x.exp_m1()
    }
}

/// Coefficients `(a, c)` of the face flux `J = a rho_left - c rho_right`;
/// `lh` is `L / h`.
fn face_weights(dv: f64, kt: f64, lh: f64) -> (f64, f64) {
    if kt > 0.0 {
        let x = dv / kt;
        (lh * kt * bernoulli(x), lh * kt * bernoulli(-x))
    } else {
        (lh * (-dv).max(0.0), lh * dv.max(0.0))
    }
}

/// Adds the dissipative rate of one line to `out`.
fn accumulate_line(rho: &[f64], v: &[f64], kt: f64, mobility: f64, grid: &Grid1D, out: &mut [f64]) {
    let lh = mobility / grid.spacing();
    for i in 0..rho.len() - 1 {
        let (a, c) = face_weights(v[i + 1] - v[i], kt, lh);
        let flux = a * rho[i] - c * rho[i + 1];
        out[i] -= flux / grid.weight(i);
        out[i + 1] += flux / grid.weight(i + 1);
    }
}

/// Largest per-node outflow rate of the dissipative line operator.
fn line_outflow(v: &[f64], kt: f64, mobility: f64, grid: &Grid1D, out: &mut [f64]) {
    let lh = mobility / grid.spacing();
    for i in 0..v.len() - 1 {
        let (a, c) = face_weights(v[i + 1] - v[i], kt, lh);
        out[i] += a / grid.weight(i);
        out[i + 1] += c / grid.weight(i + 1);
    }
}

fn check_dt(dt: f64) -> Result<(), RelaxationError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(RelaxationError::BadTimeStep(dt))
    }
}

/// `d rho/dt` of the line scheme.
pub fn drift_diffusion_rate(
    state: &RelaxationState,
    backend: &FreeEnergyBackend,
    coefficients: &KineticCoefficients,
) -> Result<Vec<f64>, RelaxationError> {
    let grid = state.line_grid()?;
    backend.check_line(&grid)?;
    let rho = state.density.values();
    let (v, _) = backend.potential_part(rho, &grid);
    let mut rate = vec![0.0; rho.len()];
    accumulate_line(
        rho,
        &v,
        backend.temperature(),
        coefficients.line_mobility(state.space),
        &grid,
        &mut rate,
    );
    Ok(rate)
}

/// One explicit step on a line. A step that would push the density below
/// `-1e-12 max(rho)` is rejected rather than clipped.
pub fn drift_diffusion_step(
    state: &RelaxationState,
    backend: &FreeEnergyBackend,
    coefficients: &KineticCoefficients,
    dt: f64,
) -> Result<RelaxationState, RelaxationError> {
    check_dt(dt)?;
    let rate = drift_diffusion_rate(state, backend, coefficients)?;
    state.advance(&rate, dt)
}

/// Extra outflow rate that bounds the step of a bohm backend. Linearized,
/// the Bohm term acts as fourth-order diffusion `-(hbar^2 L / 4m) d4rho`,
/// whose explicit step must stay below `h^2 / (4 |off| L)` with `off` the
/// kinetic off-diagonal of `H`. Zero for the other backends.
fn dispersive_rate(backend: &FreeEnergyBackend, mobility: f64, h: f64) -> f64 {
    match backend.kind() {
        BackendKind::Bohm { hamiltonian } => {
            let off = hamiltonian
                .offdiag()
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.abs()));
            4.0 * off * mobility / (h * h)
        }
        _ => 0.0,
    }
}

/// Largest dt for which the line step keeps every node non-negative. Pure
/// diffusion gives `h^2 / (2 kT L)`; drift and stiff potentials shrink it,
/// and a bohm backend adds its fourth-order stability rate.
pub fn stable_dt(
    state: &RelaxationState,
    backend: &FreeEnergyBackend,
    coefficients: &KineticCoefficients,
) -> Result<f64, RelaxationError> {
    let grid = state.line_grid()?;
    backend.check_line(&grid)?;
    let (v, _) = backend.potential_part(state.density.values(), &grid);
    let mobility = coefficients.line_mobility(state.space);
    let mut outflow = vec![0.0; v.len()];
    line_outflow(&v, backend.temperature(), mobility, &grid, &mut outflow);
    let rate = outflow.iter().copied().fold(0.0, f64::max);
    Ok(1.0 / (rate + dispersive_rate(backend, mobility, grid.spacing())))
}

/// `int rho F`: energy plus entropy for classical and bohm backends, the
/// relative entropy `kT int rho ln(rho/rho_e)` for the canonical backend.
pub fn lyapunov_functional(
    state: &RelaxationState,
    backend: &FreeEnergyBackend,
) -> Result<f64, RelaxationError> {
    let grid = state.line_grid()?;
    let f = backend.evaluate(&state.density)?;
    let integrand: Vec<f64> = f
        .values()
        .iter()
        .zip(state.density.values())
        .map(|(f, r)| f * r)
        .collect();
    Ok(crate::numerics::integrate_slice(&integrand, &grid))
}

/// Free-energy backends acting along `q` and `p` of a phase-space density.
/// `q` sees each fixed-`p` row and `p` each fixed-`q` column.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBackends {
    pub q: FreeEnergyBackend,
    pub p: FreeEnergyBackend,
    pub advection: AdvectionScheme,
}

impl PhaseBackends {
    pub fn new(q: FreeEnergyBackend, p: FreeEnergyBackend) -> Self {
        Self {
            q,
            p,
            advection: AdvectionScheme::default(),
        }
    }

    pub fn with_advection(mut self, advection: AdvectionScheme) -> Self {
        self.advection = advection;
        self
    }

    fn temperature(&self) -> Result<f64, RelaxationError> {
        let (q, p) = (self.q.temperature(), self.p.temperature());
        if (q - p).abs() > 1e-12 * q.max(p) {
            return Err(RelaxationError::TemperatureMismatch { q, p });
        }
        Ok(q)
    }

    fn check(&self, grid: &Grid2D) -> Result<f64, RelaxationError> {
        self.q.check_plane(grid, Axis::Q)?;
        self.p.check_plane(grid, Axis::P)?;
        self.temperature()
    }
}

/// `d rho/dt` of a phase-space step, split into the reversible and the
/// dissipative part.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRates {
    pub reversible: Vec<f64>,
    pub dissipative: Vec<f64>,
}

/// Phase-space operator frozen at one set of potentials. Classical and
/// canonical backends do not depend on `rho`, so [`evolve`] builds it once;
/// bohm backends rebuild it every step.
struct PhaseOperator {
    nq: usize,
    np: usize,
    hq: f64,
    hp: f64,
    inv_wq: Vec<f64>,
    inv_wp: Vec<f64>,
    /// Fitted weights of the faces `(i, j)-(i+1, j)`, indexed `i * np + j`.
    q_faces: Vec<(f64, f64)>,
    /// Fitted weights of the faces `(i, j)-(i, j+1)`, indexed `i * (np-1) + j`.
    p_faces: Vec<(f64, f64)>,
    /// Node velocities `L_pq dV_p/dp` along `q` and `-L_pq dV_q/dq` along `p`.
    vel_q: Vec<f64>,
    vel_p: Vec<f64>,
    /// `kT L_pq`, the weight of the cross-derivative terms.
    kt_cross: f64,
    scheme: AdvectionScheme,
    dispersive: f64,
}

impl PhaseOperator {
    fn build(
        rho: &[f64],
        grid: &Grid2D,
        backends: &PhaseBackends,
        coefficients: &KineticCoefficients,
    ) -> Result<Self, RelaxationError> {
        let kt = backends.check(grid)?;
        let (nq, np) = (grid.q.len(), grid.p.len());
        let (hq, hp) = (grid.q.spacing(), grid.p.spacing());
        let v_q = backends.q.potential_part_plane(rho, grid, Axis::Q);
        let v_p = backends.p.potential_part_plane(rho, grid, Axis::P);
        let (lq, lp) = (
            coefficients.position_mobility(),
            coefficients.momentum_mobility(),
        );
        let q_faces = (0..(nq - 1) * np)
            .map(|k| face_weights(v_q[k + np] - v_q[k], kt, lq / hq))
            .collect();
        let p_faces = (0..nq * (np - 1))
            .map(|f| {
                let k = f / (np - 1) * np + f % (np - 1);
                face_weights(v_p[k + 1] - v_p[k], kt, lp / hp)
            })
            .collect();
        let c = coefficients.coupling();
        let mut vel_q = vec![0.0; nq * np];
        let mut vel_p = vec![0.0; nq * np];
        derivative_along_p(&v_p, np, hp, &mut vel_q);
        derivative_along_q(&v_q, nq, np, hq, &mut vel_p);
        vel_q.iter_mut().for_each(|v| *v *= c);
        vel_p.iter_mut().for_each(|v| *v *= -c);
        let dispersive =
            dispersive_rate(&backends.q, lq, hq) + dispersive_rate(&backends.p, lp, hp);
        Ok(Self {
            nq,
            np,
            hq,
            hp,
            inv_wq: (0..nq).map(|i| 1.0 / grid.q.weight(i)).collect(),
            inv_wp: (0..np).map(|j| 1.0 / grid.p.weight(j)).collect(),
            q_faces,
            p_faces,
            vel_q,
            vel_p,
            kt_cross: kt * c,
            scheme: backends.advection,
            dispersive,
        })
    }

    fn dissipative(&self, rho: &[f64], out: &mut [f64]) {
        let np = self.np;
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.nq - 1 {
            for j in 0..np {
                let k = i * np + j;
                let (a, c) = self.q_faces[k];
                let flux = a * rho[k] - c * rho[k + np];
                out[k] -= flux * self.inv_wq[i];
                out[k + np] += flux * self.inv_wq[i + 1];
            }
        }
        for i in 0..self.nq {
            for j in 0..np - 1 {
                let k = i * np + j;
                let (a, c) = self.p_faces[i * (np - 1) + j];
                let flux = a * rho[k] - c * rho[k + 1];
                out[k] -= flux * self.inv_wp[j];
                out[k + 1] += flux * self.inv_wp[j + 1];
            }
        }
    }

    fn reversible(&self, rho: &[f64], out: &mut [f64], flux_q: &mut [f64], flux_p: &mut [f64]) {
        let (nq, np) = (self.nq, self.np);
        out.iter_mut().for_each(|v| *v = 0.0);
        match self.scheme {
            AdvectionScheme::Centered => {
                // Node fluxes rho v + kT drho along the transverse axis; the
                // face flux is their average.
                derivative_along_p(rho, np, self.hp, flux_q);
                derivative_along_q(rho, nq, np, self.hq, flux_p);
                for k in 0..nq * np {
                    flux_q[k] = rho[k] * self.vel_q[k] + self.kt_cross * flux_q[k];
                    flux_p[k] = rho[k] * self.vel_p[k] - self.kt_cross * flux_p[k];
                }
                for i in 0..nq - 1 {
                    for j in 0..np {
                        let k = i * np + j;
                        let f = 0.5 * (flux_q[k] + flux_q[k + np]);
                        out[k] -= f * self.inv_wq[i];
                        out[k + np] += f * self.inv_wq[i + 1];
                    }
                }
                for i in 0..nq {
                    for j in 0..np - 1 {
                        let k = i * np + j;
                        let f = 0.5 * (flux_p[k] + flux_p[k + 1]);
                        out[k] -= f * self.inv_wp[j];
                        out[k + 1] += f * self.inv_wp[j + 1];
                    }
                }
            }
            AdvectionScheme::Upwind => {
                for i in 0..nq - 1 {
                    for j in 0..np {
                        let k = i * np + j;
                        let v = 0.5 * (self.vel_q[k] + self.vel_q[k + np]);
                        let f = v.max(0.0) * rho[k] + v.min(0.0) * rho[k + np];
                        out[k] -= f * self.inv_wq[i];
                        out[k + np] += f * self.inv_wq[i + 1];
                    }
                }
                for i in 0..nq {
                    for j in 0..np - 1 {
                        let k = i * np + j;
                        let v = 0.5 * (self.vel_p[k] + self.vel_p[k + 1]);
                        let f = v.max(0.0) * rho[k] + v.min(0.0) * rho[k + 1];
                        out[k] -= f * self.inv_wp[j];
                        out[k + 1] += f * self.inv_wp[j + 1];
                    }
                }
            }
        }
    }

    /// Largest outflow rate over all nodes, with the advective part taken
    /// in upwind form from face velocities.
    fn stable_dt(&self) -> f64 {
        let (nq, np) = (self.nq, self.np);
        let mut rate = vec![0.0; nq * np];
        for i in 0..nq - 1 {
            for j in 0..np {
                let k = i * np + j;
                let (a, c) = self.q_faces[k];
                let v = 0.5 * (self.vel_q[k] + self.vel_q[k + np]);
                rate[k] += (a + v.max(0.0)) * self.inv_wq[i];
                rate[k + np] += (c + (-v).max(0.0)) * self.inv_wq[i + 1];
            }
        }
        for i in 0..nq {
            for j in 0..np - 1 {
                let k = i * np + j;
                let (a, c) = self.p_faces[i * (np - 1) + j];
                let v = 0.5 * (self.vel_p[k] + self.vel_p[k + 1]);
                rate[k] += (a + v.max(0.0)) * self.inv_wp[j];
                rate[k + 1] += (c + (-v).max(0.0)) * self.inv_wp[j + 1];
            }
        }
        1.0 / (rate.iter().copied().fold(0.0, f64::max) + self.dispersive)
    }

    fn rates(&self, rho: &[f64]) -> PhaseRates {
        let n = rho.len();
        let mut rates = PhaseRates {
            reversible: vec![0.0; n],
            dissipative: vec![0.0; n],
        };
        let (mut fq, mut fp) = (vec![0.0; n], vec![0.0; n]);
        self.reversible(rho, &mut rates.reversible, &mut fq, &mut fp);
        self.dissipative(rho, &mut rates.dissipative);
        rates
    }
}

/// Same stencil as `gradient_slice`, applied to every fixed-`q` row.
fn derivative_along_p(values: &[f64], np: usize, hp: f64, out: &mut [f64]) {
    for (row, dst) in values.chunks_exact(np).zip(out.chunks_exact_mut(np)) {
        dst.copy_from_slice(&gradient_slice(row, hp));
    }
}

/// Same stencil as `gradient_slice`, applied to every fixed-`p` column.
fn derivative_along_q(values: &[f64], nq: usize, np: usize, hq: f64, out: &mut [f64]) {
    let s = 0.5 / hq;
    for i in 1..nq - 1 {
        for j in 0..np {
            out[i * np + j] = s * (values[(i + 1) * np + j] - values[(i - 1) * np + j]);
        }
    }
    let last = (nq - 1) * np;
    for j in 0..np {
        out[j] = s * (-3.0 * values[j] + 4.0 * values[np + j] - values[2 * np + j]);
        out[last + j] =
            s * (3.0 * values[last + j] - 4.0 * values[last - np + j] + values[last - 2 * np + j]);
    }
}

pub fn phase_space_rates(
    state: &RelaxationState,
    backends: &PhaseBackends,
    coefficients: &KineticCoefficients,
) -> Result<PhaseRates, RelaxationError> {
    let grid = state.plane_grid()?;
    let rho = state.density.values();
    Ok(PhaseOperator::build(rho, &grid, backends, coefficients)?.rates(rho))
}

pub fn phase_space_step(
    state: &RelaxationState,
    backends: &PhaseBackends,
    coefficients: &KineticCoefficients,
    dt: f64,
) -> Result<RelaxationState, RelaxationError> {
    check_dt(dt)?;
    let rates = phase_space_rates(state, backends, coefficients)?;
    let total: Vec<f64> = rates
        .reversible
        .iter()
        .zip(&rates.dissipative)
        .map(|(a, b)| a + b)
        .collect();
    state.advance(&total, dt)
}

/// Step bound for phase space: the dissipative outflow along both axes plus
/// the advective CFL rate from face velocities, and the fourth-order rate
/// of any bohm backend.
pub fn phase_stable_dt(
    state: &RelaxationState,
    backends: &PhaseBackends,
    coefficients: &KineticCoefficients,
) -> Result<f64, RelaxationError> {
    let grid = state.plane_grid()?;
    Ok(PhaseOperator::build(state.density.values(), &grid, backends, coefficients)?.stable_dt())
}

/// Phase-space Lyapunov functional: `int rho (V_q + V_p + kT ln rho)` for
/// classical and bohm backends, the relative entropy to the reference when
/// the `q` backend is canonical.
pub fn phase_lyapunov(
    state: &RelaxationState,
    backends: &PhaseBackends,
) -> Result<f64, RelaxationError> {
    let grid = state.plane_grid()?;
    let kt = backends.check(&grid)?;
    let rho = state.density.values();
    let floor = state.density.default_floor();
    let integrand: Vec<f64> = match backends.q.kind() {
        BackendKind::Canonical { reference } => {
            let floor_e = reference.default_floor();
            rho.iter()
                .zip(reference.values())
                .map(|(&r, &e)| kt * r * (r.max(floor).ln() - e.max(floor_e).ln()))
                .collect()
        }
        _ => {
            let v_q = backends.q.potential_part_plane(rho, &grid, Axis::Q);
            let v_p = backends.p.potential_part_plane(rho, &grid, Axis::P);
            (0..rho.len())
                .map(|k| rho[k] * (v_q[k] + v_p[k] + kt * rho[k].max(floor).ln()))
                .collect()
        }
    };
    Ok(crate::numerics::integrate_2d(&integrand, &grid))
}

/// What drives a run: one backend on a line, or a pair in phase space.
#[derive(Debug, Clone, PartialEq)]
pub enum Drive {
    Line(FreeEnergyBackend),
    Phase(PhaseBackends),
}

impl Drive {
    pub fn stable_dt(
        &self,
        state: &RelaxationState,
        l: &KineticCoefficients,
    ) -> Result<f64, RelaxationError> {
        match self {
            Drive::Line(b) => stable_dt(state, b, l),
            Drive::Phase(b) => phase_stable_dt(state, b, l),
        }
    }

    pub fn step(
        &self,
        state: &RelaxationState,
        l: &KineticCoefficients,
        dt: f64,
    ) -> Result<RelaxationState, RelaxationError> {
        match self {
            Drive::Line(b) => drift_diffusion_step(state, b, l, dt),
            Drive::Phase(b) => phase_space_step(state, b, l, dt),
        }
    }

    pub fn lyapunov(&self, state: &RelaxationState) -> Result<f64, RelaxationError> {
        match self {
            Drive::Line(b) => lyapunov_functional(state, b),
            Drive::Phase(b) => phase_lyapunov(state, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub t_end: f64,
    pub output_stride: usize,
    pub safety: f64,
}

impl Schedule {
    pub const DEFAULT_SAFETY: f64 = 0.5;

    pub fn new(t_end: f64, output_stride: usize) -> Self {
        Self {
            t_end,
            output_stride,
            safety: Self::DEFAULT_SAFETY,
        }
    }

    pub fn with_safety(mut self, safety: f64) -> Self {
        self.safety = safety;
        self
    }
}

/// Moments and diagnostics at one recorded step. Columns that do not apply
/// to the run's space are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub time: f64,
    pub mean_q: Option<f64>,
    pub var_q: Option<f64>,
    pub mean_p: Option<f64>,
    pub var_p: Option<f64>,
    pub cov_qp: Option<f64>,
    pub mass: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub lyapunov: f64,
}

impl Record {
    pub fn of(state: &RelaxationState, drive: &Drive) -> Result<Self, RelaxationError> {
        let rho = &state.density;
        let mass = rho.mass();
        let mut record = Record {
            time: state.time(),
            mean_q: None,
            var_q: None,
            mean_p: None,
            var_p: None,
            cov_qp: None,
            mass,
            min_rho: rho.min(),
            max_rho: rho.max(),
            lyapunov: drive.lyapunov(state)?,
        };
        match state.space {
            Space::Momentum => {
                let (m, v) = mean_variance(rho);
                record.mean_p = Some(m);
                record.var_p = Some(v);
            }
            Space::Position => {
                let (m, v) = mean_variance(rho);
                record.mean_q = Some(m);
                record.var_q = Some(v);
            }
            Space::Phase => {
                let moment = |a, b| density_moment(rho, a, b).unwrap_or(f64::NAN) / mass;
                let (mq, mp) = (moment(1, 0), moment(0, 1));
                record.mean_q = Some(mq);
                record.mean_p = Some(mp);
                record.var_q = Some(moment(2, 0) - mq * mq);
                record.var_p = Some(moment(0, 2) - mp * mp);
                record.cov_qp = Some(moment(1, 1) - mq * mp);
            }
        }
        Ok(record)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub final_state: RelaxationState,
}

impl Trajectory {
    pub fn steps(&self) -> u64 {
        self.final_state.step_count
    }
}

/// A run that stopped early, with everything recorded up to the failure.
#[derive(Debug, Error)]
#[error("step {step}: {source}")]
pub struct EvolveFailure {
    pub step: u64,
    #[source]
    pub source: RelaxationError,
    pub partial: Trajectory,
}

/// Steps from `initial` to `schedule.t_end` with `dt = safety * stable_dt`
/// re-evaluated every step and the last step shortened to land on `t_end`.
/// Records the start, every `output_stride`-th step and the state at `t_end`.
pub fn evolve(
    initial: RelaxationState,
    drive: &Drive,
    coefficients: &KineticCoefficients,
    schedule: &Schedule,
) -> Result<Trajectory, Box<EvolveFailure>> {
    let fail = |step, source, records, state| {
        Box::new(EvolveFailure {
            step,
            source,
            partial: Trajectory {
                records,
                final_state: state,
            },
        })
    };
    let start = initial.time();
    let setup = if !(schedule.t_end > start && schedule.t_end.is_finite()) {
        Err(RelaxationError::BadHorizon {
            start,
            t_end: schedule.t_end,
        })
    } else if schedule.output_stride == 0 {
        Err(RelaxationError::BadStride)
    } else if !(schedule.safety > 0.0 && schedule.safety <= 1.0) {
        Err(RelaxationError::BadSafety(schedule.safety))
    } else {
        Record::of(&initial, drive)
    };
    let first = match setup {
        Ok(r) => r,
        Err(e) => return Err(fail(initial.step_count, e, Vec::new(), initial)),
    };
    // Density-independent phase-space potentials give a fixed operator.
    let frozen = match (drive, initial.plane_grid()) {
        (Drive::Phase(b), Ok(grid)) if !b.q.depends_on_density() && !b.p.depends_on_density() => {
            match PhaseOperator::build(initial.density.values(), &grid, b, coefficients) {
                Ok(op) => {
                    let bound = op.stable_dt();
                    Some((op, bound))
                }
                Err(e) => return Err(fail(initial.step_count, e, vec![first], initial)),
            }
        }
        _ => None,
    };
    let stride = schedule.output_stride as u64;
    let mut records = vec![first];
    let mut state = initial;
    while state.time() < schedule.t_end {
        let step = state.step_count + 1;
        let remaining = schedule.t_end - state.time();
        let bound = match &frozen {
            Some((_, bound)) => Ok(*bound),
            None => drive.stable_dt(&state, coefficients),
        };
        let dt = match bound {
            Ok(bound) => (schedule.safety * bound).min(remaining),
            Err(e) => return Err(fail(step, e, records, state)),
        };
        let attempt = match &frozen {
            Some((op, _)) => {
                let rates = op.rates(state.density.values());
                let total: Vec<f64> = rates
                    .reversible
                    .iter()
                    .zip(&rates.dissipative)
                    .map(|(a, b)| a + b)
                    .collect();
                state.advance(&total, dt)
            }
            None => drive.step(&state, coefficients, dt),
        };
        let mut next = match attempt {
            Ok(next) => next,
            Err(e) => return Err(fail(step, e, records, state)),
        };
        if dt == remaining {
            next.density = next.density.with_time(schedule.t_end);
        }
        state = next;
        if state.step_count.is_multiple_of(stride) || state.time() >= schedule.t_end {
            match Record::of(&state, drive) {
                Ok(r) => records.push(r),
                Err(e) => return Err(fail(step, e, records, state)),
            }
        }
    }
    Ok(Trajectory {
        records,
        final_state: state,
    })
}
