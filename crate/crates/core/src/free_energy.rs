//! Free-energy fields `F(a)` whose gradients drive the relaxation.
//!
//! Every backend has the form `F = V + kT ln rho`; only the "potential part"
//! `V` differs:
//!
//! * classical: `V = E(a)`, a fixed energy landscape (`U(q)` or `p^2/2m`);
//! * bohm: `V = rho^{-1/2} H rho^{1/2}`, the Hamiltonian acting on the
//!   density amplitude;
//! * canonical: `V = -kT ln rho_e`, so that `F = kT ln(rho / rho_e)`.
//!
//! The relaxation stepper consumes `V` directly and treats the entropic part
//! as diffusion, which is why [`FreeEnergyBackend::potential_part`] exists
//! alongside the full fields. Additive constants in `F` are kept as they
//! come; only gradients matter downstream.

use thiserror::Error;

use crate::equilibrium::{DensityField, Support, DEFAULT_FLOOR_RATIO};
use crate::numerics::{Field, Grid1D, Grid2D};
use crate::spectrum::HamiltonianMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("temperature kT must be positive and finite, got {0}")]
    BadTemperature(f64),
    #[error("log floor ratio must lie in (0, 1), got {0}")]
    BadFloor(f64),
    #[error("backend data lives on a different grid than the density")]
    GridMismatch,
    #[error("canonical reference must be a {expected} density")]
    ReferenceShape { expected: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendTag {
    Classical,
    Bohm,
    Canonical,
}

impl BackendTag {
    pub fn name(self) -> &'static str {
        match self {
            BackendTag::Classical => "classical",
            BackendTag::Bohm => "bohm",
            BackendTag::Canonical => "canonical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BackendKind {
    Classical { energy: Field },
    Bohm { hamiltonian: HamiltonianMatrix },
    Canonical { reference: DensityField },
}

/// Which direction a slice-wise evaluation runs along in phase space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Q,
    P,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeEnergyBackend {
    kind: BackendKind,
    temperature: f64,
    floor_ratio: f64,
}

impl FreeEnergyBackend {
    fn build(kind: BackendKind, temperature: f64) -> Result<Self, BackendError> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(BackendError::BadTemperature(temperature));
        }
        Ok(Self {
            kind,
            temperature,
            floor_ratio: DEFAULT_FLOOR_RATIO,
        })
    }

    pub fn classical(energy: Field, temperature: f64) -> Result<Self, BackendError> {
        Self::build(BackendKind::Classical { energy }, temperature)
    }

    pub fn bohm(hamiltonian: HamiltonianMatrix, temperature: f64) -> Result<Self, BackendError> {
        Self::build(BackendKind::Bohm { hamiltonian }, temperature)
    }

    pub fn canonical(reference: DensityField, temperature: f64) -> Result<Self, BackendError> {
        Self::build(BackendKind::Canonical { reference }, temperature)
    }

    pub fn with_floor_ratio(mut self, ratio: f64) -> Result<Self, BackendError> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(BackendError::BadFloor(ratio));
        }
        self.floor_ratio = ratio;
        Ok(self)
    }

    pub fn kind(&self) -> &BackendKind {
        &self.kind
    }

    pub fn tag(&self) -> BackendTag {
        match self.kind {
            BackendKind::Classical { .. } => BackendTag::Classical,
            BackendKind::Bohm { .. } => BackendTag::Bohm,
            BackendKind::Canonical { .. } => BackendTag::Canonical,
        }
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Whether the potential part changes with the density (bohm only).
    pub fn depends_on_density(&self) -> bool {
        matches!(self.kind, BackendKind::Bohm { .. })
    }

    pub fn floor_ratio(&self) -> f64 {
        self.floor_ratio
    }

    /// Checks that the backend's data fits a line density on `grid`.
    pub fn check_line(&self, grid: &Grid1D) -> Result<(), BackendError> {
        let own = match &self.kind {
            BackendKind::Classical { energy } => *energy.grid(),
            BackendKind::Bohm { hamiltonian } => *hamiltonian.grid(),
            BackendKind::Canonical { reference } => {
                *reference.line_grid().ok_or(BackendError::ReferenceShape {
                    expected: "one-dimensional",
                })?
            }
        };
        if own != *grid {
            return Err(BackendError::GridMismatch);
        }
        Ok(())
    }

    /// Checks that the backend fits the `axis` slices of a phase-space grid.
    pub fn check_plane(&self, grid: &Grid2D, axis: Axis) -> Result<(), BackendError> {
        let axis_grid = match axis {
            Axis::Q => grid.q,
            Axis::P => grid.p,
        };
        match &self.kind {
            BackendKind::Canonical { reference } => {
                let g = reference.plane_grid().ok_or(BackendError::ReferenceShape {
                    expected: "phase-space",
                })?;
                if g != grid {
                    return Err(BackendError::GridMismatch);
                }
                Ok(())
            }
            _ => self.check_line(&axis_grid),
        }
    }

    /// Potential part `V` of `F = V + kT ln rho` for a line density, with
    /// the number of clamped nodes.
    pub fn potential_part(&self, rho: &[f64], grid: &Grid1D) -> (Vec<f64>, usize) {
        match &self.kind {
            BackendKind::Classical { energy } => (energy.values().to_vec(), 0),
            BackendKind::Bohm { hamiltonian } => {
                let cutoff = BOHM_RESOLVED_RATIO * max_of(rho);
                resolved_bohm_potential(rho, hamiltonian.diag(), hamiltonian.offdiag(), cutoff)
            }
            BackendKind::Canonical { reference } => {
                debug_assert_eq!(reference.line_grid(), Some(grid));
                let values = reference.values();
                let floor = self.floor_ratio * max_of(values);
                (neg_log(values, floor, self.temperature), 0)
            }
        }
    }

    /// Potential part along `axis` for every slice of a phase-space density.
    /// Classical and bohm backends act slice-wise with their 1D data; the
    /// canonical backend uses its phase-space reference directly.
    pub fn potential_part_plane(&self, rho: &[f64], grid: &Grid2D, axis: Axis) -> Vec<f64> {
        let (nq, np) = (grid.q.len(), grid.p.len());
        match &self.kind {
            BackendKind::Classical { energy } => {
                let e = energy.values();
                match axis {
                    Axis::Q => (0..nq * np).map(|k| e[k / np]).collect(),
                    Axis::P => (0..nq * np).map(|k| e[k % np]).collect(),
                }
            }
            BackendKind::Bohm { hamiltonian } => {
                let (diag, off) = (hamiltonian.diag(), hamiltonian.offdiag());
                let cutoff = BOHM_RESOLVED_RATIO * max_of(rho);
                let mut out = vec![0.0; nq * np];
                match axis {
                    Axis::P => {
                        for i in 0..nq {
                            let (v, _) = resolved_bohm_potential(
                                &rho[i * np..(i + 1) * np],
                                diag,
                                off,
                                cutoff,
                            );
                            out[i * np..(i + 1) * np].copy_from_slice(&v);
                        }
                    }
                    Axis::Q => {
                        let mut column = vec![0.0; nq];
                        for j in 0..np {
                            for i in 0..nq {
                                column[i] = rho[i * np + j];
                            }
                            let (v, _) = resolved_bohm_potential(&column, diag, off, cutoff);
                            for i in 0..nq {
                                out[i * np + j] = v[i];
                            }
                        }
                    }
                }
                out
            }
            BackendKind::Canonical { reference } => {
                let values = reference.values();
                let floor = self.floor_ratio * max_of(values);
                neg_log(values, floor, self.temperature)
            }
        }
    }

    /// Full free-energy field for a line density.
    pub fn evaluate(&self, rho: &DensityField) -> Result<FreeEnergyField, BackendError> {
        let grid = *rho.line_grid().ok_or(BackendError::ReferenceShape {
            expected: "one-dimensional",
        })?;
        self.check_line(&grid)?;
        let (potential, clamped_v) = self.potential_part(rho.values(), &grid);
        let floor = self.floor_ratio * max_of(rho.values());
        let (mut values, clamped) = entropic(rho.values(), floor, self.temperature);
        values.iter_mut().zip(&potential).for_each(|(f, v)| *f += v);
        Ok(FreeEnergyField {
            field: Field::from_raw(grid, values),
            backend: self.tag(),
            clamped: clamped.max(clamped_v),
        })
    }
}

/// `F` sampled on a grid, tagged with the backend that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeEnergyField {
    pub field: Field,
    pub backend: BackendTag,
    /// Nodes whose density fell below the log floor.
    pub clamped: usize,
}

impl FreeEnergyField {
    pub fn values(&self) -> &[f64] {
        self.field.values()
    }
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::MIN_POSITIVE, f64::max)
}

fn neg_log(values: &[f64], floor: f64, kt: f64) -> Vec<f64> {
    values.iter().map(|&v| -kt * v.max(floor).ln()).collect()
}

fn entropic(rho: &[f64], floor: f64, kt: f64) -> (Vec<f64>, usize) {
    let mut clamped = 0;
    let values = rho
        .iter()
        .map(|&r| {
            if r < floor {
                clamped += 1;
            }
            kt * r.max(floor).ln()
        })
        .collect();
    (values, clamped)
}

/// Smallest density the Bohm amplitude is taken of. Far below the log
/// floor on purpose: flattening `a` at a relative floor would put a kink,
/// and with it a spurious barrier in `Q`, wherever a tail crosses the floor.
pub const AMPLITUDE_FLOOR: f64 = f64::MIN_POSITIVE;

/// `Q_i = (H a)_i / a_i` with `a = sqrt(max(rho, AMPLITUDE_FLOOR))`.
///
/// Interior rows use the tridiagonal `H` as is. The two edge rows replace
/// the hard-wall zero beyond the grid by extrapolating `ln a` quadratically
/// from the three nearest nodes (linearly on two-node grids). A Gaussian tail
/// is reproduced exactly, and the wall does not show up as a spike in `Q`.
pub(crate) fn bohm_potential(rho: &[f64], diag: &[f64], off: &[f64]) -> (Vec<f64>, usize) {
    let floor = AMPLITUDE_FLOOR;
    let n = rho.len();
    let mut clamped = 0;
    let amp: Vec<f64> = rho
        .iter()
        .map(|&r| {
            if r < floor {
                clamped += 1;
            }
            r.max(floor).sqrt()
        })
        .collect();
    let mut q = vec![0.0; n];
    for i in 0..n {
        let left = if i > 0 {
            off[i - 1] * amp[i - 1]
        } else {
            off[0] * ghost(amp[0], amp[1], amp.get(2).copied())
        };
        let right = if i + 1 < n {
            off[i] * amp[i + 1]
        } else {
            let third = if n >= 3 { Some(amp[n - 3]) } else { None };
            off[n - 2] * ghost(amp[n - 1], amp[n - 2], third)
        };
        q[i] = (diag[i] * amp[i] + left + right) / amp[i];
    }
    (q, clamped)
}

/// Densities below this fraction of the maximum are outside the resolved
/// support as far as the dynamics is concerned.
pub const BOHM_RESOLVED_RATIO: f64 = 1e-12;

/// [`bohm_potential`] with `Q` at nodes where `rho < cutoff` replaced by the
/// value at the nearest resolved node to their left (right for a leading
/// run). At depleted nodes `(H a) / a` is dominated by `1/a` and acts as a
/// deep well on the discrete flux; holding `Q` flat there leaves only
/// diffusion, which is what the continuum flux `rho dQ` reduces to as
/// `rho -> 0`.
pub(crate) fn resolved_bohm_potential(
    rho: &[f64],
    diag: &[f64],
    off: &[f64],
    cutoff: f64,
) -> (Vec<f64>, usize) {
    let (mut q, clamped) = bohm_potential(rho, diag, off);
    let mut last = None;
    for i in 0..q.len() {
        if rho[i] >= cutoff {
            last = Some(q[i]);
        } else if let Some(v) = last {
            q[i] = v;
        }
    }
    match rho.iter().position(|&r| r >= cutoff) {
        Some(first) => {
            let v = q[first];
            q[..first].iter_mut().for_each(|x| *x = v);
        }
        None => q.iter_mut().for_each(|x| *x = 0.0),
    }
    (q, clamped)
}

fn ghost(edge: f64, inner: f64, third: Option<f64>) -> f64 {
    let (l0, l1) = (edge.ln(), inner.ln());
    match third {
        Some(a2) => (3.0 * l0 - 3.0 * l1 + a2.ln()).exp(),
        None => (2.0 * l0 - l1).exp(),
    }
}

/// `F = E + kT ln max(rho, floor)`; `temperature = 0` returns `E`.
pub fn classical_free_energy(
    rho: &DensityField,
    energy: &Field,
    temperature: f64,
) -> FreeEnergyField {
    let floor = rho.default_floor();
    let (mut values, clamped) = entropic(rho.values(), floor, temperature);
    values
        .iter_mut()
        .zip(energy.values())
        .for_each(|(f, e)| *f += e);
    FreeEnergyField {
        field: Field::from_raw(*energy.grid(), values),
        backend: BackendTag::Classical,
        clamped,
    }
}

/// `F = rho^{-1/2} H rho^{1/2} + kT ln rho` (see [`bohm_potential`] for the
/// edge rows).
pub fn bohm_free_energy(
    rho: &DensityField,
    hamiltonian: &HamiltonianMatrix,
    temperature: f64,
) -> FreeEnergyField {
    let (q, clamped_q) = bohm_potential(rho.values(), hamiltonian.diag(), hamiltonian.offdiag());
    let (mut values, clamped) = entropic(rho.values(), rho.default_floor(), temperature);
    values.iter_mut().zip(&q).for_each(|(f, v)| *f += v);
    FreeEnergyField {
        field: Field::from_raw(*hamiltonian.grid(), values),
        backend: BackendTag::Bohm,
        clamped: clamped.max(clamped_q),
    }
}

/// `F = kT (ln max(rho, floor) - ln max(rho_e, floor_e))`.
pub fn canonical_free_energy(
    rho: &DensityField,
    reference: &DensityField,
    temperature: f64,
) -> FreeEnergyField {
    let floor = rho.default_floor();
    let floor_e = reference.default_floor();
    let (mut values, clamped) = entropic(rho.values(), floor, temperature);
    values
        .iter_mut()
        .zip(neg_log(reference.values(), floor_e, temperature))
        .for_each(|(f, v)| *f += v);
    let grid = match rho.support() {
        Support::Line(g) => *g,
        Support::Plane(g) => g.q,
    };
    FreeEnergyField {
        field: Field::from_raw(grid, values),
        backend: BackendTag::Canonical,
        clamped,
    }
}
