//! Finite-difference Hamiltonians in position and momentum representation
//! and their lowest eigenpairs.

mod tridiag;

use thiserror::Error;

use crate::numerics::{Field, Grid1D};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("mass must be positive and finite, got {0}")]
    BadMass(f64),
    #[error("hbar must be positive and finite, got {0}")]
    BadHbar(f64),
    #[error("omega must be non-negative and finite, got {0}")]
    BadOmega(f64),
    #[error("potential parameter `{name}` is invalid: {value}")]
    BadPotential { name: &'static str, value: f64 },
    #[error("tabulated potential lives on a different grid")]
    GridMismatch,
    #[error("{0} potential is non-local in momentum representation")]
    NonLocalInMomentum(&'static str),
    #[error("linear force term -f*q is not real in momentum representation (f = {0})")]
    ForceInMomentum(f64),
    #[error("requested {k} eigenstates from a {n}-node matrix")]
    BadCount { k: usize, n: usize },
    #[error("eigensolver did not converge for state {index} ({stage})")]
    NoConvergence { index: usize, stage: &'static str },
}

/// Potential energy `U(q)`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Free,
    /// `U = m w^2 q^2 / 2 - f q`.
    Harmonic {
        mass: f64,
        omega: f64,
        force: f64,
    },
    /// `U = a4 q^4 - a2 q^2`; a double well for positive coefficients.
    QuarticDoubleWell {
        a2: f64,
        a4: f64,
    },
    Tabulated(Field),
}

impl PotentialSpec {
    pub fn unit_harmonic() -> Self {
        PotentialSpec::Harmonic {
            mass: 1.0,
            omega: 1.0,
            force: 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PotentialSpec::Free => "free",
            PotentialSpec::Harmonic { .. } => "harmonic",
            PotentialSpec::QuarticDoubleWell { .. } => "quartic double-well",
            PotentialSpec::Tabulated(_) => "tabulated",
        }
    }

    fn validate(&self) -> Result<(), SpectrumError> {
        match *self {
            PotentialSpec::Harmonic { mass, omega, force } => {
                positive("harmonic mass", mass)?;
                positive("harmonic omega", omega)?;
                finite("harmonic force", force)
            }
            PotentialSpec::QuarticDoubleWell { a2, a4 } => {
                finite("a2", a2)?;
                finite("a4", a4)
            }
            _ => Ok(()),
        }
    }

    /// Samples the potential on `grid`.
    pub fn sample(&self, grid: &Grid1D) -> Result<Field, SpectrumError> {
        self.validate()?;
        Ok(match self {
            PotentialSpec::Free => Field::zeros(*grid),
            PotentialSpec::Harmonic { mass, omega, force } => {
                let k = mass * omega * omega;
                grid.sample(|q| 0.5 * k * q * q - force * q)
            }
            PotentialSpec::QuarticDoubleWell { a2, a4 } => {
                grid.sample(|q| a4 * q.powi(4) - a2 * q * q)
            }
            PotentialSpec::Tabulated(field) => {
                if field.grid() != grid {
                    return Err(SpectrumError::GridMismatch);
                }
                field.clone()
            }
        })
    }

    /// Derivative `U'(q)` sampled on `grid` (analytic where available).
    pub fn force_field(&self, grid: &Grid1D) -> Result<Field, SpectrumError> {
        self.validate()?;
        Ok(match self {
            PotentialSpec::Free => Field::zeros(*grid),
            PotentialSpec::Harmonic { mass, omega, force } => {
                let k = mass * omega * omega;
                grid.sample(|q| k * q - force)
            }
            PotentialSpec::QuarticDoubleWell { a2, a4 } => {
                grid.sample(|q| 4.0 * a4 * q.powi(3) - 2.0 * a2 * q)
            }
            PotentialSpec::Tabulated(_) => crate::numerics::gradient(&self.sample(grid)?),
        })
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), SpectrumError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(SpectrumError::BadPotential { name, value })
    }
}

fn finite(name: &'static str, value: f64) -> Result<(), SpectrumError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(SpectrumError::BadPotential { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Position,
    Momentum,
}

/// Symmetric tridiagonal Hamiltonian on a uniform grid with hard walls one
/// spacing beyond either end.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    grid: Grid1D,
    representation: Representation,
    diag: Vec<f64>,
    offdiag: Vec<f64>,
    mass: f64,
    hbar: f64,
}

impl HamiltonianMatrix {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Matrix-vector product with zero values outside the grid.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        assert_eq!(v.len(), n, "vector length must match the grid");
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.offdiag[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.offdiag[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Multiplicative part of the operator (`U` or `p^2/2m`): the diagonal
    /// with the kinetic stencil's centre weight removed.
    pub fn local_part(&self) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                // Off-diagonals are constant, so -2*off is the stencil centre.
                let off = if i < n - 1 {
                    self.offdiag[i]
                } else {
                    self.offdiag[n - 2]
                };
                self.diag[i] + 2.0 * off
            })
            .collect()
    }

    /// Same operator with `hbar` replaced; the local part is kept.
    pub fn with_hbar(&self, hbar: f64) -> Result<HamiltonianMatrix, SpectrumError> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(SpectrumError::BadHbar(hbar));
        }
        let scale = (hbar / self.hbar).powi(2);
        let local = self.local_part();
        let offdiag: Vec<f64> = self.offdiag.iter().map(|o| o * scale).collect();
        let n = self.diag.len();
        let diag = (0..n)
            .map(|i| {
                let off = if i < n - 1 {
                    offdiag[i]
                } else {
                    offdiag[n - 2]
                };
                local[i] - 2.0 * off
            })
            .collect();
        Ok(HamiltonianMatrix {
            diag,
            offdiag,
            hbar,
            ..self.clone()
        })
    }
}

fn check_mass_hbar(mass: f64, hbar: f64) -> Result<(), SpectrumError> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(SpectrumError::BadMass(mass));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(SpectrumError::BadHbar(hbar));
    }
    Ok(())
}

/// `H = -(hbar^2 / 2m) d^2/dq^2 + U(q)` with the three-point stencil.
pub fn discretize_position_hamiltonian(
    grid: &Grid1D,
    mass: f64,
    hbar: f64,
    potential: &PotentialSpec,
) -> Result<HamiltonianMatrix, SpectrumError> {
    check_mass_hbar(mass, hbar)?;
    let u = potential.sample(grid)?;
    let h = grid.spacing();
    let kin = hbar * hbar / (mass * h * h);
    Ok(HamiltonianMatrix {
        grid: *grid,
        representation: Representation::Position,
        diag: u.values().iter().map(|v| kin + v).collect(),
        offdiag: vec![-0.5 * kin; grid.len() - 1],
        mass,
        hbar,
    })
}

/// `H = p^2 / 2m - (m w^2 hbar^2 / 2) d^2/dp^2`; `omega = 0` is the free gas.
pub fn discretize_momentum_hamiltonian(
    grid: &Grid1D,
    mass: f64,
    hbar: f64,
    omega: f64,
) -> Result<HamiltonianMatrix, SpectrumError> {
    check_mass_hbar(mass, hbar)?;
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(SpectrumError::BadOmega(omega));
    }
    Ok(momentum_with_stiffness(
        grid,
        mass,
        hbar,
        mass * omega * omega,
    ))
}

fn momentum_with_stiffness(
    grid: &Grid1D,
    mass: f64,
    hbar: f64,
    stiffness: f64,
) -> HamiltonianMatrix {
    let h = grid.spacing();
    let kin = stiffness * hbar * hbar / (h * h);
    HamiltonianMatrix {
        grid: *grid,
        representation: Representation::Momentum,
        diag: grid.nodes().map(|p| p * p / (2.0 * mass) + kin).collect(),
        offdiag: vec![-0.5 * kin; grid.len() - 1],
        mass,
        hbar,
    }
}

/// Momentum-space Hamiltonian for a given potential. Only quadratic
/// potentials without a linear force have a local momentum form.
pub fn momentum_hamiltonian_for(
    grid: &Grid1D,
    mass: f64,
    hbar: f64,
    potential: &PotentialSpec,
) -> Result<HamiltonianMatrix, SpectrumError> {
    check_mass_hbar(mass, hbar)?;
    potential.validate()?;
    match *potential {
        PotentialSpec::Free => Ok(momentum_with_stiffness(grid, mass, hbar, 0.0)),
        PotentialSpec::Harmonic {
            mass: mh,
            omega,
            force,
        } => {
            if force != 0.0 {
                return Err(SpectrumError::ForceInMomentum(force));
            }
            Ok(momentum_with_stiffness(
                grid,
                mass,
                hbar,
                mh * omega * omega,
            ))
        }
        ref other => Err(SpectrumError::NonLocalInMomentum(other.name())),
    }
}

/// Lowest eigenpairs with states normalized under the trapezoidal rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    energies: Vec<f64>,
    states: Vec<Field>,
    exhaustive: bool,
}

impl Spectrum {
    /// Builds a spectrum from precomputed pairs (mainly for tests and toy
    /// models). Energies must be ascending. `exhaustive` marks a complete
    /// level set, so canonical sums over it carry no truncation tail.
    pub fn from_parts(
        energies: Vec<f64>,
        states: Vec<Field>,
        exhaustive: bool,
    ) -> Result<Self, SpectrumError> {
        if energies.is_empty() || energies.len() != states.len() {
            return Err(SpectrumError::BadCount {
                k: energies.len(),
                n: states.len(),
            });
        }
        if energies.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(SpectrumError::BadPotential {
                name: "energies (not ascending)",
                value: f64::NAN,
            });
        }
        Ok(Self {
            energies,
            states,
            exhaustive,
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn count(&self) -> usize {
        self.energies.len()
    }

    /// Whether every eigenpair of the underlying operator is present.
    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    pub fn grid(&self) -> &Grid1D {
        self.states[0].grid()
    }
}

/// Lowest `k` eigenpairs of `hamiltonian`.
///
/// States are normalized so that the trapezoidal integral of `phi^2` is one,
/// and their sign is fixed so the first component above `1e-8` of the peak
/// magnitude is positive.
pub fn solve_spectrum(
    hamiltonian: &HamiltonianMatrix,
    k: usize,
) -> Result<Spectrum, SpectrumError> {
    let n = hamiltonian.diag.len();
    if k == 0 || k > n {
        return Err(SpectrumError::BadCount { k, n });
    }
    let pairs = tridiag::lowest_eigenpairs(&hamiltonian.diag, &hamiltonian.offdiag, k).map_err(
        |f| match f {
            tridiag::Failure::Bisection(index) => SpectrumError::NoConvergence {
                index,
                stage: "bisection",
            },
            tridiag::Failure::InverseIteration(index) => SpectrumError::NoConvergence {
                index,
                stage: "inverse iteration",
            },
        },
    )?;
    let grid = hamiltonian.grid;
    let states = pairs
        .vectors
        .into_iter()
        .map(|mut v| {
            let peak = crate::numerics::max_abs(&v);
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * peak) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            let norm = crate::numerics::integrate_slice(
                &v.iter().map(|x| x * x).collect::<Vec<_>>(),
                &grid,
            )
            .sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            Field::from_raw(grid, v)
        })
        .collect();
    Ok(Spectrum {
        energies: pairs.values,
        states,
        exhaustive: k == n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{build_grid, integrate};
    use std::f64::consts::PI;

    fn unit_oscillator(n: usize) -> HamiltonianMatrix {
        let g = build_grid(-12.0, 12.0, n).unwrap();
        discretize_position_hamiltonian(&g, 1.0, 1.0, &PotentialSpec::unit_harmonic()).unwrap()
    }

    #[test]
    fn position_matrix_layout() {
        let g = build_grid(-1.0, 1.0, 5).unwrap();
        let h = discretize_position_hamiltonian(&g, 2.0, 1.0, &PotentialSpec::Free).unwrap();
        // hbar^2 / (m h^2) = 1 / (2 * 0.25) = 2
        assert_eq!(h.diag(), &[2.0; 5]);
        assert_eq!(h.offdiag(), &[-1.0; 4]);
        assert_eq!(h.local_part(), vec![0.0; 5]);
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = build_grid(-1.0, 1.0, 5).unwrap();
        assert_eq!(
            discretize_position_hamiltonian(&g, 0.0, 1.0, &PotentialSpec::Free),
            Err(SpectrumError::BadMass(0.0))
        );
        assert_eq!(
            discretize_momentum_hamiltonian(&g, 1.0, -1.0, 1.0),
            Err(SpectrumError::BadHbar(-1.0))
        );
        let quartic = PotentialSpec::QuarticDoubleWell { a2: 1.0, a4: 0.1 };
        assert_eq!(
            momentum_hamiltonian_for(&g, 1.0, 1.0, &quartic),
            Err(SpectrumError::NonLocalInMomentum("quartic double-well"))
        );
        let tab = PotentialSpec::Tabulated(Field::zeros(g));
        assert!(matches!(
            momentum_hamiltonian_for(&g, 1.0, 1.0, &tab),
            Err(SpectrumError::NonLocalInMomentum(_))
        ));
        let forced = PotentialSpec::Harmonic {
            mass: 1.0,
            omega: 1.0,
            force: 0.3,
        };
        assert_eq!(
            momentum_hamiltonian_for(&g, 1.0, 1.0, &forced),
            Err(SpectrumError::ForceInMomentum(0.3))
        );
        let other = build_grid(-2.0, 1.0, 5).unwrap();
        let tab = PotentialSpec::Tabulated(Field::zeros(other));
        assert_eq!(
            discretize_position_hamiltonian(&g, 1.0, 1.0, &tab),
            Err(SpectrumError::GridMismatch)
        );
        let h = unit_oscillator(11);
        assert_eq!(
            solve_spectrum(&h, 0),
            Err(SpectrumError::BadCount { k: 0, n: 11 })
        );
        assert_eq!(
            solve_spectrum(&h, 12),
            Err(SpectrumError::BadCount { k: 12, n: 11 })
        );
    }

    #[test]
    fn tabulated_zero_equals_free() {
        let g = build_grid(0.0, 3.0, 31).unwrap();
        let free = discretize_position_hamiltonian(&g, 1.3, 0.7, &PotentialSpec::Free).unwrap();
        let tab = discretize_position_hamiltonian(
            &g,
            1.3,
            0.7,
            &PotentialSpec::Tabulated(Field::zeros(g)),
        )
        .unwrap();
        assert_eq!(free, tab);
    }

    #[test]
    fn particle_in_a_box_levels() {
        // Walls sit one spacing beyond the end nodes, so interior nodes of a
        // box of length L are h, 2h, ..., L - h.
        let n = 2001;
        let length = 1.0;
        let h = length / (n + 1) as f64;
        let g = build_grid(h, length - h, n).unwrap();
        let ham = discretize_position_hamiltonian(&g, 1.0, 1.0, &PotentialSpec::Free).unwrap();
        let spectrum = solve_spectrum(&ham, 5).unwrap();
        for (k, e) in spectrum.energies().iter().enumerate() {
            let exact = 0.5 * ((k + 1) as f64 * PI / length).powi(2);
            assert!(
                ((e - exact) / exact).abs() < 1e-3,
                "level {k}: {e} vs {exact}"
            );
        }
    }

    #[test]
    fn oscillator_levels_spacing_and_orthonormality() {
        let ham = unit_oscillator(2001);
        let spectrum = solve_spectrum(&ham, 10).unwrap();
        for (n, e) in spectrum.energies().iter().enumerate() {
            assert!((e - (n as f64 + 0.5)).abs() < 1e-3, "E_{n} = {e}");
        }
        for w in spectrum.energies().windows(2) {
            assert!((w[1] - w[0] - 1.0).abs() < 1e-3);
        }
        for (i, a) in spectrum.states().iter().enumerate() {
            for (j, b) in spectrum.states().iter().enumerate() {
                let g = a.grid().sample(|_| 0.0);
                let prod = Field::new(
                    *g.grid(),
                    a.values()
                        .iter()
                        .zip(b.values())
                        .map(|(x, y)| x * y)
                        .collect(),
                )
                .unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((integrate(&prod) - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn eigen_residuals_are_small() {
        let ham = unit_oscillator(2001);
        let spectrum = solve_spectrum(&ham, 10).unwrap();
        for (e, phi) in spectrum.energies().iter().zip(spectrum.states()) {
            let hphi = ham.apply(phi.values());
            let res = hphi
                .iter()
                .zip(phi.values())
                .map(|(a, b)| (a - e * b).abs())
                .fold(0.0, f64::max);
            assert!(res <= 1e-8 * e.abs().max(1.0), "residual {res}");
        }
    }

    #[test]
    fn parity_alternates_and_odd_states_vanish_at_centre() {
        let ham = unit_oscillator(2001);
        let spectrum = solve_spectrum(&ham, 8).unwrap();
        let n = ham.grid().len();
        for (k, phi) in spectrum.states().iter().enumerate() {
            let v = phi.values();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            for i in 0..n / 2 {
                assert!((v[i] - sign * v[n - 1 - i]).abs() < 1e-8);
            }
            if k % 2 == 1 {
                assert!(v[n / 2].abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sign_convention_first_significant_component_positive() {
        let ham = unit_oscillator(401);
        let spectrum = solve_spectrum(&ham, 6).unwrap();
        for phi in spectrum.states() {
            let peak = phi.max_abs();
            let first = phi.values().iter().find(|x| x.abs() > 1e-8 * peak).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn momentum_and_position_spectra_agree_for_unit_oscillator() {
        let g = build_grid(-12.0, 12.0, 2001).unwrap();
        let hq =
            discretize_position_hamiltonian(&g, 1.0, 1.0, &PotentialSpec::unit_harmonic()).unwrap();
        let hp = discretize_momentum_hamiltonian(&g, 1.0, 1.0, 1.0).unwrap();
        let sq = solve_spectrum(&hq, 10).unwrap();
        let sp = solve_spectrum(&hp, 10).unwrap();
        for (a, b) in sq.energies().iter().zip(sp.energies()) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn momentum_ground_state_is_mass_independent() {
        let g = build_grid(-12.0, 12.0, 2001).unwrap();
        let hp = discretize_momentum_hamiltonian(&g, 2.0, 1.0, 1.0).unwrap();
        let sp = solve_spectrum(&hp, 1).unwrap();
        assert!((sp.energies()[0] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn free_gas_momentum_matrix_is_diagonal() {
        let g = build_grid(-2.0, 2.0, 9).unwrap();
        let hp = discretize_momentum_hamiltonian(&g, 2.0, 1.0, 0.0).unwrap();
        assert!(hp.offdiag().iter().all(|&o| o == 0.0));
        for (d, p) in hp.diag().iter().zip(g.nodes()) {
            assert_eq!(*d, p * p / 4.0);
        }
        let s = solve_spectrum(&hp, 1).unwrap();
        assert!(s.energies()[0].abs() < 1e-12);
        let v = s.states()[0].values();
        for (i, x) in v.iter().enumerate() {
            if i == 4 {
                assert!(*x > 0.0);
            } else {
                assert!(x.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn levels_converge_at_second_order() {
        let levels = |n| {
            let s = solve_spectrum(&unit_oscillator(n), 10).unwrap();
            s.energies().to_vec()
        };
        let (coarse, mid, fine) = (levels(201), levels(401), levels(801));
        for k in 0..10 {
            let e1 = (coarse[k] - fine[k]).abs();
            let e2 = (mid[k] - fine[k]).abs();
            // Richardson: successive differences shrink by 2^p.
            let order = ((coarse[k] - mid[k]) / (mid[k] - fine[k])).abs().log2();
            assert!(order >= 1.9, "level {k}: order {order} ({e1}, {e2})");
        }
        // Discrete ground state lies below 1/2 by O(h^2).
        assert!(fine[0] <= 0.5 && 0.5 - fine[0] < 2.0 * (24.0_f64 / 800.0).powi(2));
    }

    #[test]
    fn with_hbar_rescales_kinetic_part() {
        let g = build_grid(-3.0, 3.0, 31).unwrap();
        let u = PotentialSpec::unit_harmonic();
        let a = discretize_position_hamiltonian(&g, 1.0, 1.0, &u).unwrap();
        let b = discretize_position_hamiltonian(&g, 1.0, 0.1, &u).unwrap();
        let c = a.with_hbar(0.1).unwrap();
        for (x, y) in b.diag().iter().zip(c.diag()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(b.offdiag().len(), c.offdiag().len());
    }
}
