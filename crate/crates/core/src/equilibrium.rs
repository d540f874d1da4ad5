//! Canonical ensembles built from discrete spectra.
//!
//! The Gibbs density mixes squared eigenstates with Boltzmann weights
//! `w_n = exp(-beta E_n) / Z`. The level sum is truncated at the number of
//! computed states; the discarded tail is estimated and reported, and a
//! tail above tolerance is an error rather than a silent bias.

use thiserror::Error;

use crate::numerics::{self, Field, Grid1D, Grid2D};
use crate::spectrum::{solve_spectrum, HamiltonianMatrix, Spectrum, SpectrumError};

/// Relative undershoot tolerated before a density counts as negative.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;
/// Allowed deviation of the trapezoidal mass from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;
/// Default log clamp, relative to the density maximum.
pub const DEFAULT_FLOOR_RATIO: f64 = 1e-30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error("density has {got} values, support has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("density value at node {index} is not finite")]
    NonFinite { index: usize },
    #[error("density value {value} at node {index} is negative")]
    Negative { index: usize, value: f64 },
    #[error("density integrates to {mass}, expected 1")]
    NotNormalized { mass: f64 },
    #[error("density has no positive mass to normalize")]
    ZeroMass,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("beta must be positive and finite, got {0}")]
    BadBeta(f64),
    #[error(
        "insufficient truncation: tail estimate {bound:e} exceeds tolerance {tolerance:e} \
         with {count} states; request more eigenstates"
    )]
    InsufficientTruncation {
        bound: f64,
        tolerance: f64,
        count: usize,
    },
    #[error("spectra mismatch at level {index}: E_q = {e_q}, E_p = {e_p}")]
    SpectraMismatch { index: usize, e_q: f64, e_p: f64 },
    #[error("p moments are undefined on a one-dimensional density")]
    MomentOnLine,
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

/// Where a density lives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Line(Grid1D),
    Plane(Grid2D),
}

impl Support {
    pub fn len(&self) -> usize {
        match self {
            Support::Line(g) => g.len(),
            Support::Plane(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Trapezoidal integral of `values` over the support.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        match self {
            Support::Line(g) => numerics::integrate_slice(values, g),
            Support::Plane(g) => numerics::integrate_2d(values, g),
        }
    }
}

/// Non-negative probability density with unit trapezoidal mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    support: Support,
    values: Vec<f64>,
    time: f64,
}

impl DensityField {
    /// Validates sign and normalization. Values down to
    /// `-NEGATIVE_TOLERANCE * max` count as zero-level roundoff.
    pub fn new(support: Support, values: Vec<f64>, time: f64) -> Result<Self, DensityError> {
        Self::check_values(&support, &values)?;
        let mass = support.integrate(&values);
        if (mass - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(DensityError::NotNormalized { mass });
        }
        Ok(Self {
            support,
            values,
            time,
        })
    }

    /// Rescales `values` to unit mass.
    pub fn normalized(
        support: Support,
        mut values: Vec<f64>,
        time: f64,
    ) -> Result<Self, DensityError> {
        Self::check_values(&support, &values)?;
        let mass = support.integrate(&values);
        if !(mass > 0.0) {
            return Err(DensityError::ZeroMass);
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Ok(Self {
            support,
            values,
            time,
        })
    }

    /// Normal density with the given moments, sampled and renormalized on
    /// the grid.
    pub fn gaussian(grid: Grid1D, mean: f64, variance: f64) -> Result<Self, DensityError> {
        let values = grid
            .nodes()
            .map(|x| (-(x - mean).powi(2) / (2.0 * variance)).exp())
            .collect();
        Self::normalized(Support::Line(grid), values, 0.0)
    }

    /// Product of two normal densities on a phase-space grid.
    pub fn gaussian_2d(
        grid: Grid2D,
        (mean_q, var_q): (f64, f64),
        (mean_p, var_p): (f64, f64),
    ) -> Result<Self, DensityError> {
        let values = grid.sample(|q, p| {
            (-(q - mean_q).powi(2) / (2.0 * var_q) - (p - mean_p).powi(2) / (2.0 * var_p)).exp()
        });
        Self::normalized(Support::Plane(grid), values, 0.0)
    }

    fn check_values(support: &Support, values: &[f64]) -> Result<(), DensityError> {
        if values.len() != support.len() {
            return Err(DensityError::LengthMismatch {
                expected: support.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(DensityError::NonFinite { index });
        }
        let max = values.iter().copied().fold(0.0, f64::max);
        if let Some(index) = values.iter().position(|&v| v < -NEGATIVE_TOLERANCE * max) {
            return Err(DensityError::Negative {
                index,
                value: values[index],
            });
        }
        Ok(())
    }

    pub(crate) fn from_raw(support: Support, values: Vec<f64>, time: f64) -> Self {
        debug_assert_eq!(values.len(), support.len());
        Self {
            support,
            values,
            time,
        }
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn line_grid(&self) -> Option<&Grid1D> {
        match &self.support {
            Support::Line(g) => Some(g),
            Support::Plane(_) => None,
        }
    }

    pub fn plane_grid(&self) -> Option<&Grid2D> {
        match &self.support {
            Support::Line(_) => None,
            Support::Plane(g) => Some(g),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn mass(&self) -> f64 {
        self.support.integrate(&self.values)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// The density as a plain field (line support only).
    pub fn as_field(&self) -> Option<Field> {
        self.line_grid()
            .map(|g| Field::from_raw(*g, self.values.clone()))
    }

    /// Absolute clamp used for logarithms: `DEFAULT_FLOOR_RATIO * max`.
    pub fn default_floor(&self) -> f64 {
        DEFAULT_FLOOR_RATIO * self.max().max(f64::MIN_POSITIVE)
    }
}

fn check_beta(beta: f64) -> Result<(), EquilibriumError> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(EquilibriumError::BadBeta(beta))
    }
}

/// Shifted Boltzmann factors `exp(-beta (E_n - E_0))` and the relative tail
/// estimate `k exp(-beta (E_{k-1} - E_0)) / sum`.
fn shifted_weights(energies: &[f64], beta: f64) -> (Vec<f64>, f64, f64) {
    let e0 = energies[0];
    let factors: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let sum: f64 = factors.iter().sum();
    let tail = energies.len() as f64 * factors[factors.len() - 1] / sum;
    (factors, sum, tail)
}

/// Partition function `Z = sum_n exp(-beta E_n)` over the computed levels,
/// with the default truncation tolerance.
pub fn partition_function(spectrum: &Spectrum, beta: f64) -> Result<f64, EquilibriumError> {
    CanonicalEnsemble::new(spectrum.clone(), beta).map(|e| e.partition_function())
}

/// Boltzmann-weighted spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalEnsemble {
    spectrum: Spectrum,
    beta: f64,
    log_z: f64,
    weights: Vec<f64>,
    truncation_bound: f64,
}

impl CanonicalEnsemble {
    pub const DEFAULT_TOLERANCE: f64 = 1e-8;

    pub fn new(spectrum: Spectrum, beta: f64) -> Result<Self, EquilibriumError> {
        Self::with_tolerance(spectrum, beta, Self::DEFAULT_TOLERANCE)
    }

    /// Builds the ensemble, failing when the estimated tail mass exceeds
    /// `tolerance`. Exhaustive spectra (every eigenpair of the matrix) have
    /// no tail.
    pub fn with_tolerance(
        spectrum: Spectrum,
        beta: f64,
        tolerance: f64,
    ) -> Result<Self, EquilibriumError> {
        check_beta(beta)?;
        let (factors, sum, tail) = shifted_weights(spectrum.energies(), beta);
        let truncation_bound = if spectrum.is_exhaustive() { 0.0 } else { tail };
        if truncation_bound > tolerance {
            return Err(EquilibriumError::InsufficientTruncation {
                bound: truncation_bound,
                tolerance,
                count: spectrum.count(),
            });
        }
        let log_z = sum.ln() - beta * spectrum.energies()[0];
        let weights = factors.iter().map(|f| f / sum).collect();
        Ok(Self {
            spectrum,
            beta,
            log_z,
            weights,
            truncation_bound,
        })
    }

    /// Solves for as many eigenstates as the tolerance requires, doubling
    /// the count from 16.
    pub fn from_hamiltonian(
        hamiltonian: &HamiltonianMatrix,
        beta: f64,
        tolerance: f64,
    ) -> Result<Self, EquilibriumError> {
        check_beta(beta)?;
        let n = hamiltonian.grid().len();
        let mut k = 16.min(n);
        loop {
            let spectrum = solve_spectrum(hamiltonian, k)?;
            match Self::with_tolerance(spectrum, beta, tolerance) {
                Err(EquilibriumError::InsufficientTruncation { .. }) if k < n => {
                    k = (2 * k).min(n);
                }
                other => return other,
            }
        }
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn truncation_bound(&self) -> f64 {
        self.truncation_bound
    }

    /// `Z`; underflows to zero for very large `beta * E_0`, see
    /// [`Self::log_partition_function`].
    pub fn partition_function(&self) -> f64 {
        self.log_z.exp()
    }

    pub fn log_partition_function(&self) -> f64 {
        self.log_z
    }
}

/// `rho_e = sum_n w_n phi_n^2`.
pub fn gibbs_density(ensemble: &CanonicalEnsemble) -> DensityField {
    let grid = *ensemble.spectrum.grid();
    let mut values = vec![0.0; grid.len()];
    for (w, phi) in ensemble.weights.iter().zip(ensemble.spectrum.states()) {
        for (v, p) in values.iter_mut().zip(phi.values()) {
            *v += w * p * p;
        }
    }
    DensityField::from_raw(Support::Line(grid), values, 0.0)
}

/// Thermal force and the number of nodes whose density was clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalForce {
    pub force: Field,
    pub clamped: usize,
}

/// `phi = -kT d/da ln max(rho, floor)`.
pub fn thermal_force(rho: &DensityField, temperature: f64, floor: f64) -> ThermalForce {
    let grid = *rho
        .line_grid()
        .expect("thermal force is defined for line densities");
    let mut clamped = 0;
    let logs: Vec<f64> = rho
        .values
        .iter()
        .map(|&v| {
            if v < floor {
                clamped += 1;
            }
            v.max(floor).ln()
        })
        .collect();
    let grad = numerics::gradient_slice(&logs, grid.spacing());
    ThermalForce {
        force: Field::from_raw(grid, grad.into_iter().map(|g| -temperature * g).collect()),
        clamped,
    }
}

/// Phase-space density `Z^-1 sum_n exp(-beta E_n) phi_n(q)^2 phi_n(p)^2`.
///
/// Both spectra must describe the same system: the first
/// `min(count_q, count_p)` energies have to agree pairwise within `1e-3`.
/// Boltzmann weights use the position-space energies.
pub fn phase_space_gibbs(
    spec_q: &Spectrum,
    spec_p: &Spectrum,
    beta: f64,
) -> Result<DensityField, EquilibriumError> {
    check_beta(beta)?;
    let k = spec_q.count().min(spec_p.count());
    for (index, (e_q, e_p)) in spec_q.energies()[..k]
        .iter()
        .zip(&spec_p.energies()[..k])
        .enumerate()
    {
        if (e_q - e_p).abs() > 1e-3 {
            return Err(EquilibriumError::SpectraMismatch {
                index,
                e_q: *e_q,
                e_p: *e_p,
            });
        }
    }
    let energies = &spec_q.energies()[..k];
    let (factors, sum, tail) = shifted_weights(energies, beta);
    let exhaustive = k == spec_q.count() && spec_q.is_exhaustive();
    if !exhaustive && tail > CanonicalEnsemble::DEFAULT_TOLERANCE {
        return Err(EquilibriumError::InsufficientTruncation {
            bound: tail,
            tolerance: CanonicalEnsemble::DEFAULT_TOLERANCE,
            count: k,
        });
    }
    let grid = Grid2D::new(*spec_q.grid(), *spec_p.grid());
    let np = grid.p.len();
    let mut values = vec![0.0; grid.len()];
    for n in 0..k {
        let w = factors[n] / sum;
        if w == 0.0 {
            continue;
        }
        let pq = spec_q.states()[n].values();
        let pp: Vec<f64> = spec_p.states()[n].values().iter().map(|x| x * x).collect();
        for (i, phi_q) in pq.iter().enumerate() {
            let a = w * phi_q * phi_q;
            let row = &mut values[i * np..(i + 1) * np];
            for (v, b) in row.iter_mut().zip(&pp) {
                *v += a * b;
            }
        }
    }
    let density = DensityField::from_raw(Support::Plane(grid), values, 0.0);
    let mass = density.mass();
    if (mass - 1.0).abs() > 1e-6 {
        return Err(DensityError::NotNormalized { mass }.into());
    }
    Ok(density)
}

/// `int rho q^i p^j`. On a line density the single coordinate takes
/// `q_power` and `p_power` must be zero.
pub fn density_moment(
    rho: &DensityField,
    q_power: u32,
    p_power: u32,
) -> Result<f64, EquilibriumError> {
    match &rho.support {
        Support::Line(g) => {
            if p_power > 0 {
                return Err(EquilibriumError::MomentOnLine);
            }
            let integrand: Vec<f64> = rho
                .values
                .iter()
                .zip(g.nodes())
                .map(|(r, x)| r * x.powi(q_power as i32))
                .collect();
            Ok(numerics::integrate_slice(&integrand, g))
        }
        Support::Plane(g) => {
            let integrand = g
                .sample(|q, p| q.powi(q_power as i32) * p.powi(p_power as i32))
                .into_iter()
                .zip(&rho.values)
                .map(|(m, r)| m * r)
                .collect::<Vec<_>>();
            Ok(numerics::integrate_2d(&integrand, g))
        }
    }
}

/// Mean and variance of a line density (or of the `q` marginal).
pub fn mean_variance(rho: &DensityField) -> (f64, f64) {
    let m0 = rho.mass();
    let m1 = density_moment(rho, 1, 0).unwrap_or(f64::NAN) / m0;
    let m2 = density_moment(rho, 2, 0).unwrap_or(f64::NAN) / m0;
    (m1, m2 - m1 * m1)
}

/// Marginal of a phase-space density: the `q` marginal when `keep_q`,
/// otherwise the `p` marginal.
pub fn marginal(rho: &DensityField, keep_q: bool) -> Option<DensityField> {
    let g = rho.plane_grid()?;
    let (nq, np) = (g.q.len(), g.p.len());
    let values: Vec<f64> = if keep_q {
        (0..nq)
            .map(|i| numerics::integrate_slice(&rho.values[i * np..(i + 1) * np], &g.p))
            .collect()
    } else {
        (0..np)
            .map(|j| {
                let column: Vec<f64> = (0..nq).map(|i| rho.values[i * np + j]).collect();
                numerics::integrate_slice(&column, &g.q)
            })
            .collect()
    };
    let axis = if keep_q { g.q } else { g.p };
    Some(DensityField::from_raw(
        Support::Line(axis),
        values,
        rho.time,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::build_grid;
    use crate::spectrum::{
        discretize_momentum_hamiltonian, discretize_position_hamiltonian, PotentialSpec,
    };

    fn unit_hamiltonian(lo: f64, hi: f64, n: usize) -> HamiltonianMatrix {
        let g = build_grid(lo, hi, n).unwrap();
        discretize_position_hamiltonian(&g, 1.0, 1.0, &PotentialSpec::unit_harmonic()).unwrap()
    }

    fn coth(z: f64) -> f64 {
        1.0 / z.tanh()
    }

    #[test]
    fn partition_function_matches_geometric_sum() {
        let h = unit_hamiltonian(-12.0, 12.0, 2001);
        let spectrum = solve_spectrum(&h, 40).unwrap();
        let z = partition_function(&spectrum, 2.0).unwrap();
        // sum exp(-2 (n + 1/2)) = 1 / (2 sinh 1)
        assert!((z - 0.425459).abs() < 1e-4, "Z = {z}");
    }

    #[test]
    fn ground_state_dominates_at_low_temperature() {
        let h = unit_hamiltonian(-12.0, 12.0, 2001);
        let spectrum = solve_spectrum(&h, 4).unwrap();
        let e0 = spectrum.energies()[0];
        let z = partition_function(&spectrum, 50.0).unwrap();
        assert!((z / (-50.0 * e0).exp() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn two_level_toy() {
        let g = build_grid(0.0, 1.0, 3).unwrap();
        let states = vec![
            Field::new(g, vec![0.0, 2.0_f64.sqrt(), 0.0]).unwrap(),
            Field::new(g, vec![2.0_f64.sqrt(), 0.0, 0.0]).unwrap(),
        ];
        let spectrum = Spectrum::from_parts(vec![0.0, 1.0], states, true).unwrap();
        let z = partition_function(&spectrum, 1.0).unwrap();
        assert!((z - 1.367879).abs() < 1e-6);
    }

    #[test]
    fn truncation_is_reported() {
        let h = unit_hamiltonian(-12.0, 12.0, 401);
        let spectrum = solve_spectrum(&h, 5).unwrap();
        let err = partition_function(&spectrum, 0.5).unwrap_err();
        assert!(matches!(
            err,
            EquilibriumError::InsufficientTruncation { count: 5, .. }
        ));
        assert!(matches!(
            partition_function(&spectrum, -1.0),
            Err(EquilibriumError::BadBeta(_))
        ));
    }

    #[test]
    fn adaptive_ensemble_meets_tolerance() {
        let h = unit_hamiltonian(-20.0, 20.0, 801);
        let e = CanonicalEnsemble::from_hamiltonian(&h, 0.5, 1e-8).unwrap();
        assert!(e.truncation_bound() <= 1e-8);
        assert!((e.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(e.weights().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn gibbs_variance_follows_coth_law() {
        let h = unit_hamiltonian(-12.0, 12.0, 2001);
        let e = CanonicalEnsemble::from_hamiltonian(&h, 2.0, 1e-8).unwrap();
        let rho = gibbs_density(&e);
        assert!((rho.mass() - 1.0).abs() < 1e-8);
        let (mean, var) = mean_variance(&rho);
        assert!(mean.abs() < 1e-8);
        assert!((var - 0.5 * coth(1.0)).abs() / 0.656518 < 5e-3);
        assert!((var - 0.656518).abs() < 0.005 * 0.656518);
    }

    #[test]
    fn gibbs_low_temperature_is_ground_state() {
        let h = unit_hamiltonian(-12.0, 12.0, 2001);
        let e = CanonicalEnsemble::from_hamiltonian(&h, 50.0, 1e-8).unwrap();
        let rho = gibbs_density(&e);
        let phi0 = &e.spectrum().states()[0];
        let diff = rho
            .values()
            .iter()
            .zip(phi0.values())
            .map(|(r, p)| (r - p * p).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-6);
    }

    #[test]
    fn gibbs_high_temperature_is_classical() {
        let h = unit_hamiltonian(-20.0, 20.0, 2001);
        let e = CanonicalEnsemble::from_hamiltonian(&h, 0.1, 1e-8).unwrap();
        let (_, var) = mean_variance(&gibbs_density(&e));
        assert!((var - 10.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn gibbs_densities_valid_across_beta_sweep() {
        let h = unit_hamiltonian(-20.0, 20.0, 1001);
        for beta in [0.1, 0.5, 1.0, 2.0, 10.0, 50.0] {
            let e = CanonicalEnsemble::from_hamiltonian(&h, beta, 1e-8).unwrap();
            let rho = gibbs_density(&e);
            DensityField::new(*rho.support(), rho.values().to_vec(), 0.0).unwrap();
        }
    }

    #[test]
    fn energy_rescaling_leaves_weights_unchanged() {
        let h = unit_hamiltonian(-12.0, 12.0, 401);
        let s = solve_spectrum(&h, 30).unwrap();
        let c = 3.7;
        let scaled = Spectrum::from_parts(
            s.energies().iter().map(|e| e * c).collect(),
            s.states().to_vec(),
            false,
        )
        .unwrap();
        let a = CanonicalEnsemble::new(s, 2.0).unwrap();
        let b = CanonicalEnsemble::new(scaled, 2.0 / c).unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            // Exponents reach ~60, so roundoff in beta*E is amplified accordingly.
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn thermal_force_of_gaussian_is_linear() {
        let g = build_grid(-6.0, 6.0, 601).unwrap();
        let s2 = 0.8;
        let rho = DensityField::gaussian(g, 0.0, s2).unwrap();
        let tf = thermal_force(&rho, 0.5, rho.default_floor());
        assert_eq!(tf.clamped, 0);
        for (i, x) in g.nodes().enumerate().skip(1).take(599) {
            assert!((tf.force.values()[i] - 0.5 * x / s2).abs() < 1e-9);
        }
    }

    #[test]
    fn thermal_force_of_uniform_vanishes_and_counts_clamps() {
        let g = build_grid(0.0, 1.0, 11).unwrap();
        let rho = DensityField::normalized(Support::Line(g), vec![1.0; 11], 0.0).unwrap();
        assert!(thermal_force(&rho, 2.0, 1e-30).force.max_abs() < 1e-12);
        let mut v = vec![1.0; 11];
        v[0] = 0.0;
        let rho = DensityField::normalized(Support::Line(g), v, 0.0).unwrap();
        assert_eq!(thermal_force(&rho, 1.0, 1e-20).clamped, 1);
    }

    #[test]
    fn thermal_force_of_classical_gibbs_is_potential_gradient() {
        let g = build_grid(-3.0, 3.0, 601).unwrap();
        let u = |q: f64| 0.25 * q.powi(4) - q * q;
        let kt = 0.7;
        let values = g.nodes().map(|q| (-u(q) / kt).exp()).collect();
        let rho = DensityField::normalized(Support::Line(g), values, 0.0).unwrap();
        let tf = thermal_force(&rho, kt, rho.default_floor());
        for (i, q) in g.nodes().enumerate().skip(1).take(599) {
            let du = q.powi(3) - 2.0 * q;
            assert!((tf.force.values()[i] - du).abs() < 1e-3);
        }
    }

    fn unit_pair(n: usize, k: usize) -> (Spectrum, Spectrum) {
        let g = build_grid(-8.0, 8.0, n).unwrap();
        let hq =
            discretize_position_hamiltonian(&g, 1.0, 1.0, &PotentialSpec::unit_harmonic()).unwrap();
        let hp = discretize_momentum_hamiltonian(&g, 1.0, 1.0, 1.0).unwrap();
        (
            solve_spectrum(&hq, k).unwrap(),
            solve_spectrum(&hp, k).unwrap(),
        )
    }

    #[test]
    fn phase_space_marginal_reproduces_line_gibbs() {
        let (sq, sp) = unit_pair(201, 40);
        let rho = phase_space_gibbs(&sq, &sp, 2.0).unwrap();
        let line = gibbs_density(&CanonicalEnsemble::new(sq, 2.0).unwrap());
        let mq = marginal(&rho, true).unwrap();
        for (a, b) in mq.values().iter().zip(line.values()) {
            assert!((a - b).abs() < 1e-6);
        }
        let var_q = density_moment(&rho, 2, 0).unwrap();
        assert!((var_q - 0.656518).abs() < 0.005 * 0.656518);
    }

    #[test]
    fn phase_space_ground_state_uncertainty() {
        let (sq, sp) = unit_pair(201, 8);
        let rho = phase_space_gibbs(&sq, &sp, 50.0).unwrap();
        let product = density_moment(&rho, 2, 0).unwrap() * density_moment(&rho, 0, 2).unwrap();
        assert!((product - 0.25).abs() < 0.0025);
    }

    #[test]
    fn phase_space_single_state_factorizes() {
        let (sq, sp) = unit_pair(101, 1);
        let sq = Spectrum::from_parts(sq.energies().to_vec(), sq.states().to_vec(), true).unwrap();
        let rho = phase_space_gibbs(&sq, &sp, 1.0).unwrap();
        let g = rho.plane_grid().unwrap();
        let (fq, fp) = (sq.states()[0].values(), sp.states()[0].values());
        for i in 0..g.q.len() {
            for j in 0..g.p.len() {
                let expect = fq[i] * fq[i] * fp[j] * fp[j];
                let got = rho.values()[g.index(i, j)];
                assert!((got - expect).abs() <= 1e-14 * expect);
            }
        }
    }

    #[test]
    fn phase_space_rejects_mismatched_spectra() {
        let (sq, _) = unit_pair(201, 8);
        let g = build_grid(-8.0, 8.0, 201).unwrap();
        let hp = discretize_momentum_hamiltonian(&g, 1.0, 1.0, 2.0).unwrap();
        let sp = solve_spectrum(&hp, 8).unwrap();
        assert!(matches!(
            phase_space_gibbs(&sq, &sp, 50.0),
            Err(EquilibriumError::SpectraMismatch { index: 0, .. })
        ));
    }

    #[test]
    fn moments_of_symmetric_density() {
        let g = build_grid(-5.0, 5.0, 201).unwrap();
        let rho = DensityField::gaussian(g, 0.0, 1.0).unwrap();
        assert!((density_moment(&rho, 0, 0).unwrap() - 1.0).abs() < 1e-8);
        assert!(density_moment(&rho, 1, 0).unwrap().abs() < 1e-8);
        assert_eq!(
            density_moment(&rho, 0, 1),
            Err(EquilibriumError::MomentOnLine)
        );
    }

    #[test]
    fn density_validation() {
        let g = build_grid(0.0, 1.0, 3).unwrap();
        let s = Support::Line(g);
        assert!(DensityField::new(s, vec![1.0, 1.0, 1.0], 0.0).is_ok());
        assert!(matches!(
            DensityField::new(s, vec![2.0, 2.0, 2.0], 0.0),
            Err(DensityError::NotNormalized { .. })
        ));
        assert!(matches!(
            DensityField::new(s, vec![1.5, -0.1, 1.5], 0.0),
            Err(DensityError::Negative { index: 1, .. })
        ));
        assert!(matches!(
            DensityField::normalized(s, vec![0.0; 3], 0.0),
            Err(DensityError::ZeroMass)
        ));
    }
}
