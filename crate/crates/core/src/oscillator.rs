//! Closed-form laws of the damped harmonic oscillator in a heat bath.
//!
//! Everything is expressed through `z = beta hbar omega / 2`. Below
//! [`SERIES_THRESHOLD`] the classical limits are returned directly, since
//! `coth z` loses relative accuracy there.

use thiserror::Error;

pub const SERIES_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OscillatorError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    mass: f64,
    omega: f64,
    hbar: f64,
    friction: f64,
    beta: f64,
}

impl OscillatorParams {
    pub fn new(
        mass: f64,
        omega: f64,
        hbar: f64,
        friction: f64,
        beta: f64,
    ) -> Result<Self, OscillatorError> {
        for (name, value) in [
            ("mass", mass),
            ("omega", omega),
            ("hbar", hbar),
            ("friction", friction),
            ("beta", beta),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(OscillatorError::NonPositive { name, value });
            }
        }
        Ok(Self {
            mass,
            omega,
            hbar,
            friction,
            beta,
        })
    }

    /// Unit mass, frequency, `hbar` and friction at inverse temperature `beta`.
    pub fn unit(beta: f64) -> Result<Self, OscillatorError> {
        Self::new(1.0, 1.0, 1.0, 1.0, beta)
    }

    pub fn with_friction(self, friction: f64) -> Result<Self, OscillatorError> {
        Self::new(self.mass, self.omega, self.hbar, friction, self.beta)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn friction(&self) -> f64 {
        self.friction
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn z(&self) -> f64 {
        0.5 * self.beta * self.hbar * self.omega
    }

    fn stiffness(&self) -> f64 {
        self.mass * self.omega * self.omega
    }

    fn classical(&self) -> bool {
        self.z() < SERIES_THRESHOLD
    }
}

/// `sigma^2 = (hbar / 2 m omega) coth z`.
pub fn stationary_dispersion(params: &OscillatorParams) -> f64 {
    if params.classical() {
        return 1.0 / (params.beta * params.stiffness());
    }
    params.hbar / (2.0 * params.mass * params.omega) / params.z().tanh()
}

/// Quantum friction `b z coth z`.
pub fn quantum_friction_factor(params: &OscillatorParams) -> f64 {
    let z = params.z();
    if params.classical() {
        return params.friction;
    }
    params.friction * z / z.tanh()
}

/// Low-temperature friction `b_ref sinh z / z`, equal to `b_ref` as `z -> 0`.
pub fn low_temperature_friction(b_ref: f64, params: &OscillatorParams) -> f64 {
    let z = params.z();
    if params.classical() {
        return b_ref;
    }
    b_ref * z.sinh() / z
}

/// Relaxation time `b z coth z / (m omega^2)` of the mean response.
pub fn relaxation_time(params: &OscillatorParams) -> f64 {
    quantum_friction_factor(params) / params.stiffness()
}

/// Integrates `(b z coth z) dy/dt + m omega^2 y = f(t)` from `y(0) = y0` with
/// classical RK4, returning `(t, y)` samples including both ends. The last
/// step is shortened to land on `t_end`.
pub fn mean_response(
    params: &OscillatorParams,
    force: impl Fn(f64) -> f64,
    y0: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>, OscillatorError> {
    for (name, value) in [("t_end", t_end), ("dt", dt)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(OscillatorError::NonPositive { name, value });
        }
    }
    let gamma = quantum_friction_factor(params);
    let k = params.stiffness();
    let rhs = |t: f64, y: f64| (force(t) - k * y) / gamma;
    let steps = (t_end / dt).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut t, mut y) = (0.0, y0);
    out.push((t, y));
    for n in 0..steps {
        let h = if n + 1 == steps { t_end - t } else { dt };
        let k1 = rhs(t, y);
        let k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
        let k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
        let k4 = rhs(t + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = if n + 1 == steps { t_end } else { t + h };
        out.push((t, y));
    }
    Ok(out)
}

/// Least-squares decay time of `y ~ exp(-t / tau)` through the positive
/// samples of an unforced response.
pub fn fit_decay_time(series: &[(f64, f64)]) -> Option<f64> {
    let points: Vec<(f64, f64)> = series
        .iter()
        .filter(|(_, y)| *y > 0.0)
        .map(|&(t, y)| (t, y.ln()))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(t, l)| (t - mt) * (l - ml)).sum();
    let sxx: f64 = points.iter().map(|(t, _)| (t - mt).powi(2)).sum();
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -1.0 / slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn dispersion_values() {
        assert!(close(
            stationary_dispersion(&OscillatorParams::unit(2.0).unwrap()),
            0.656518,
            1e-6
        ));
        assert!(close(
            stationary_dispersion(&OscillatorParams::unit(200.0).unwrap()),
            0.5,
            1e-12
        ));
        let hot = stationary_dispersion(&OscillatorParams::unit(0.1).unwrap());
        assert!(close(hot, 10.0, 0.01));
    }

    #[test]
    fn friction_factor_values() {
        let p = OscillatorParams::unit(2.0).unwrap();
        assert!(close(quantum_friction_factor(&p), 1.313035, 1e-6));
        let cold = OscillatorParams::unit(20.0)
            .unwrap()
            .with_friction(2.0)
            .unwrap();
        assert!(close(quantum_friction_factor(&cold), 20.0, 1e-4));
        let hot = OscillatorParams::unit(1e-9)
            .unwrap()
            .with_friction(3.0)
            .unwrap();
        assert_eq!(quantum_friction_factor(&hot), 3.0);
    }

    #[test]
    fn low_temperature_friction_values() {
        let p = OscillatorParams::unit(2.0).unwrap();
        assert!(close(low_temperature_friction(1.0, &p), 1.175201, 1e-6));
        let hot = OscillatorParams::unit(1e-8).unwrap();
        assert_eq!(low_temperature_friction(2.5, &hot), 2.5);
        let sweep: Vec<f64> = (1..200)
            .map(|k| {
                low_temperature_friction(1.0, &OscillatorParams::unit(0.05 * k as f64).unwrap())
            })
            .collect();
        assert!(sweep.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn quantum_friction_never_below_classical() {
        for k in 0..400 {
            let beta = 1e-7 * 1.07f64.powi(k);
            let p = OscillatorParams::unit(beta).unwrap();
            assert!(quantum_friction_factor(&p) >= p.friction());
        }
    }

    #[test]
    fn classical_branch_matches_formulas() {
        let p = OscillatorParams::new(1.7, 0.8, 1.0, 0.6, 1e-7).unwrap();
        assert!(p.z() < SERIES_THRESHOLD);
        let kt = 1.0 / p.beta();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(stationary_dispersion(&p), kt / (1.7 * 0.64)) < 1e-6);
        assert!(rel(quantum_friction_factor(&p), 0.6) < 1e-6);
        assert!(rel(relaxation_time(&p), 0.6 / (1.7 * 0.64)) < 1e-6);
        // Just above the threshold the closed forms agree with the series.
        let q = OscillatorParams::new(1.7, 0.8, 1.0, 0.6, 2.6e-6).unwrap();
        assert!(q.z() > SERIES_THRESHOLD);
        assert!(rel(stationary_dispersion(&q), 1.0 / (q.beta() * 1.7 * 0.64)) < 1e-6);
        assert!(rel(quantum_friction_factor(&q), 0.6) < 1e-6);
    }

    #[test]
    fn classical_response_is_exponential() {
        let p = OscillatorParams::unit(1e-9).unwrap();
        let series = mean_response(&p, |_| 0.0, 1.0, 1.0, 1e-3).unwrap();
        let (t, y) = *series.last().unwrap();
        assert_eq!(t, 1.0);
        assert!(close(y, (-1.0f64).exp(), 1e-6));
        assert!(close(fit_decay_time(&series).unwrap(), 1.0, 1e-6));
    }

    #[test]
    fn quantum_decay_time_is_coth_one() {
        let p = OscillatorParams::unit(2.0).unwrap();
        let series = mean_response(&p, |_| 0.0, 1.0, 5.0, 1e-3).unwrap();
        let tau = fit_decay_time(&series).unwrap();
        assert!(close(tau, 1.313035, 1e-4), "{tau}");
        assert!(close(tau, relaxation_time(&p), 1e-6));
    }

    #[test]
    fn constant_force_reaches_static_displacement() {
        let p = OscillatorParams::new(2.0, 1.5, 1.0, 1.0, 2.0).unwrap();
        let series = mean_response(&p, |_| 0.9, -0.4, 60.0, 1e-2).unwrap();
        let y = series.last().unwrap().1;
        assert!(close(y, 0.9 / (2.0 * 2.25), 1e-10));
    }

    #[test]
    fn response_is_linear() {
        let p = OscillatorParams::unit(1.3).unwrap();
        let f1 = |t: f64| (2.0 * t).sin();
        let f2 = |t: f64| 0.3 + t * (-t).exp();
        let a = mean_response(&p, f1, 0.7, 4.0, 1e-2).unwrap();
        let b = mean_response(&p, f2, -1.1, 4.0, 1e-2).unwrap();
        let c = mean_response(
            &p,
            |t| 2.0 * f1(t) - 3.0 * f2(t),
            2.0 * 0.7 + 3.3,
            4.0,
            1e-2,
        )
        .unwrap();
        for ((x, y), z) in a.iter().zip(&b).zip(&c) {
            assert!(close(z.1, 2.0 * x.1 - 3.0 * y.1, 1e-8));
        }
    }

    #[test]
    fn invalid_parameters() {
        assert_eq!(
            OscillatorParams::new(1.0, 0.0, 1.0, 1.0, 1.0),
            Err(OscillatorError::NonPositive {
                name: "omega",
                value: 0.0
            })
        );
        let p = OscillatorParams::unit(1.0).unwrap();
        assert!(mean_response(&p, |_| 0.0, 1.0, 1.0, 0.0).is_err());
        assert_eq!(fit_decay_time(&[(0.0, 1.0)]), None);
    }
}
