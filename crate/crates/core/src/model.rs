//! Narrowband far-field sources on a half-wavelength uniform linear array:
//! snapshot synthesis and covariance estimation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{DoaError, Result};
use crate::linalg::{CMatrix, CVector};

/// Source power; the noise power follows from the SNR.
pub const SIGNAL_POWER: f64 = 1.0;

/// One simulation setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n_sensors: usize,
    pub doas_deg: Vec<f64>,
    pub snapshots: usize,
    pub snr_db: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn new(n_sensors: usize, doas_deg: Vec<f64>, snapshots: usize, snr_db: f64, seed: u64) -> Result<Self> {
        let s = Self { n_sensors, doas_deg, snapshots, snr_db, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sensors < 2 {
            return Err(DoaError::domain("n_sensors must be at least 2"));
        }
        if self.snapshots < 1 {
            return Err(DoaError::domain("snapshots must be at least 1"));
        }
        if !self.snr_db.is_finite() {
            return Err(DoaError::domain("snr_db must be finite"));
        }
        validate_doas(&self.doas_deg, self.n_sensors)
    }

    pub fn num_sources(&self) -> usize {
        self.doas_deg.len()
    }

    /// `10^(-SNR/10)` with unit source power.
    pub fn noise_power(&self) -> f64 {
        noise_power_from_snr(self.snr_db)
    }
}

pub fn noise_power_from_snr(snr_db: f64) -> f64 {
    SIGNAL_POWER * 10f64.powf(-snr_db / 10.0)
}

fn validate_doas(doas_deg: &[f64], n_sensors: usize) -> Result<()> {
    if doas_deg.len() >= n_sensors {
        return Err(DoaError::domain(format!(
            "{} sources cannot be resolved by {} sensors",
            doas_deg.len(),
            n_sensors
        )));
    }
    for &d in doas_deg {
        check_angle(d)?;
    }
    for (i, a) in doas_deg.iter().enumerate() {
        if doas_deg[i + 1..].contains(a) {
            return Err(DoaError::domain(format!("duplicate direction {a} deg")));
        }
    }
    Ok(())
}

fn check_angle(theta_deg: f64) -> Result<()> {
    if theta_deg.is_finite() && theta_deg > -90.0 && theta_deg < 90.0 {
        Ok(())
    } else {
        Err(DoaError::domain(format!("angle {theta_deg} deg is outside (-90, 90)")))
    }
}

/// Snapshots drawn for a scenario, one column per time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    pub data: CMatrix,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub data: CMatrix,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }
}

/// Phase step `e^{j pi sin(theta)}` between neighbouring sensors.
pub fn spatial_phase(theta_deg: f64) -> Complex64 {
    Complex64::from_polar(1.0, PI * theta_deg.to_radians().sin())
}

/// Array response `[1, alpha, alpha^2, ...]` for a plane wave from `theta_deg`.
pub fn steering_vector(theta_deg: f64, n_sensors: usize) -> Result<CVector> {
    check_angle(theta_deg)?;
    if n_sensors == 0 {
        return Err(DoaError::domain("n_sensors must be positive"));
    }
    let s = PI * theta_deg.to_radians().sin();
    Ok(CVector::from_fn(n_sensors, |n, _| {
        if n == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, s * n as f64)
        }
    }))
}

/// Steering matrix with one column per direction.
pub fn steering_matrix(doas_deg: &[f64], n_sensors: usize) -> Result<CMatrix> {
    let mut a = CMatrix::zeros(n_sensors, doas_deg.len());
    for (l, &d) in doas_deg.iter().enumerate() {
        a.set_column(l, &steering_vector(d, n_sensors)?);
    }
    Ok(a)
}

/// Circularly-symmetric complex Gaussian with `E|z|^2 = variance`, from one
/// Box-Muller pair.
fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    // u1 in (0, 1] keeps the logarithm finite
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    Complex64::new(r * c, r * s) * (variance / 2.0).sqrt()
}

/// Draws `x(t) = A s(t) + n(t)` for `t = 1..T`. The output is a pure
/// function of the scenario, seed included.
pub fn generate_snapshots(scenario: &Scenario) -> Result<SnapshotMatrix> {
    scenario.validate()?;
    let n = scenario.n_sensors;
    let l = scenario.num_sources();
    let t = scenario.snapshots;
    let a = steering_matrix(&scenario.doas_deg, n)?;
    let noise_var = scenario.noise_power();
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);

    let mut x = CMatrix::zeros(n, t);
    let mut s = CVector::zeros(l);
    for col in 0..t {
        for v in s.iter_mut() {
            *v = complex_gaussian(&mut rng, SIGNAL_POWER);
        }
        let signal = &a * &s;
        for row in 0..n {
            x[(row, col)] = signal[row] + complex_gaussian(&mut rng, noise_var);
        }
    }
    Ok(SnapshotMatrix { data: x, scenario: scenario.clone() })
}

/// `(1/T) X X^H`, averaged with its adjoint so the result is exactly
/// Hermitian.
pub fn sample_covariance(x: &CMatrix) -> Result<CovarianceMatrix> {
    let t = x.ncols();
    if t == 0 {
        return Err(DoaError::domain("sample covariance needs at least one snapshot"));
    }
    let r = (x * x.adjoint()).unscale(t as f64);
    Ok(CovarianceMatrix { data: (&r + r.adjoint()).scale(0.5) })
}

/// `sigma_s^2 A A^H + sigma_n^2 I`, the infinite-sample covariance.
pub fn exact_covariance(doas_deg: &[f64], sigma_s2: f64, sigma_n2: f64, n_sensors: usize) -> Result<CovarianceMatrix> {
    validate_doas(doas_deg, n_sensors)?;
    if sigma_s2 < 0.0 || sigma_n2 < 0.0 {
        return Err(DoaError::domain("powers must be nonnegative"));
    }
    let a = steering_matrix(doas_deg, n_sensors)?;
    let r = (&a * a.adjoint()).scale(sigma_s2) + DMatrix::identity(n_sensors, n_sensors).scale(sigma_n2);
    Ok(CovarianceMatrix { data: (&r + r.adjoint()).scale(0.5) })
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent substream seed for a trial, keyed by the master seed and a
/// list of indices (e.g. SNR slot and trial number).
pub fn derive_seed(master: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix64(master), |acc, &k| mix64(acc ^ mix64(k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigen;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn steering_examples() {
        let a = steering_vector(0.0, 4).unwrap();
        assert!(a.iter().all(|&v| (v - c(1.0, 0.0)).norm() < 1e-15));

        let a = steering_vector(30.0, 2).unwrap();
        assert_eq!(a[0], c(1.0, 0.0));
        assert!((a[1] - c(0.0, 1.0)).norm() < 1e-15);

        let theta = (1.0f64 / 3.0).asin().to_degrees();
        assert!((theta - 19.47).abs() < 0.01);
        let a = steering_vector(theta, 3).unwrap();
        assert!((a[1] - Complex64::from_polar(1.0, PI / 3.0)).norm() < 1e-14);
        assert!((a[2] - Complex64::from_polar(1.0, 2.0 * PI / 3.0)).norm() < 1e-14);

        assert!(steering_vector(90.0, 3).is_err());
        assert!(steering_vector(-95.0, 3).is_err());
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::new(1, vec![], 10, 0.0, 0).is_err());
        assert!(Scenario::new(4, vec![10.0], 0, 0.0, 0).is_err());
        assert!(Scenario::new(4, vec![10.0, 10.0], 10, 0.0, 0).is_err());
        assert!(Scenario::new(3, vec![1.0, 2.0, 3.0], 10, 0.0, 0).is_err());
        assert!(Scenario::new(4, vec![90.0], 10, 0.0, 0).is_err());
        assert!(Scenario::new(4, vec![], 10, 0.0, 0).is_ok());
    }

    #[test]
    fn pure_noise_variance() {
        let s = Scenario::new(4, vec![], 100_000, 0.0, 3).unwrap();
        let x = generate_snapshots(&s).unwrap();
        for row in 0..4 {
            let v: f64 = x.data.row(row).iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e5;
            assert!((v - 1.0).abs() < 0.05, "row {row}: {v}");
        }
    }

    #[test]
    fn snapshots_are_deterministic() {
        let s = Scenario::new(6, vec![-10.0, 20.0], 50, 5.0, 99).unwrap();
        let a = generate_snapshots(&s).unwrap();
        let b = generate_snapshots(&s).unwrap();
        assert_eq!(a, b);
        let other = Scenario { seed: 100, ..s };
        assert_ne!(a.data, generate_snapshots(&other).unwrap().data);
    }

    #[test]
    fn sample_covariance_examples() {
        let mut x = CMatrix::zeros(3, 1);
        x[(0, 0)] = c(1.0, 0.0);
        let r = sample_covariance(&x).unwrap();
        let mut expect = CMatrix::zeros(3, 3);
        expect[(0, 0)] = c(1.0, 0.0);
        assert_eq!(r.data, expect);

        // orthogonal equal-norm columns: trace identity
        let x = CMatrix::from_fn(4, 2, |i, j| match (i, j) {
            (0, 0) | (1, 0) => c(1.0, 0.0),
            (2, 1) => c(0.0, 1.0),
            (3, 1) => c(-1.0, 0.0),
            _ => c(0.0, 0.0),
        });
        let r = sample_covariance(&x).unwrap();
        let trace: f64 = (0..4).map(|i| r.data[(i, i)].re).sum();
        let expect: f64 = x.column_iter().map(|col| col.norm_squared()).sum::<f64>() / 2.0;
        assert!((trace - expect).abs() < 1e-15);
        assert!(sample_covariance(&CMatrix::zeros(3, 0)).is_err());
    }

    #[test]
    fn exact_covariance_examples() {
        let r = exact_covariance(&[], 1.0, 0.7, 3).unwrap();
        assert_eq!(r.data, CMatrix::identity(3, 3).scale(0.7));

        let r = exact_covariance(&[0.0], 1.0, 0.0, 2).unwrap();
        assert!(r.data.iter().all(|&v| (v - c(1.0, 0.0)).norm() < 1e-15));

        for theta in [-50.0, 3.0, 41.0] {
            let n = 7;
            let r = exact_covariance(&[theta], 2.0, 0.3, n).unwrap();
            let e = hermitian_eigen(&r.data).unwrap();
            assert!((e.eigenvalues[0] - (n as f64 * 2.0 + 0.3)).abs() < 1e-12);
            for &l in &e.eigenvalues[1..] {
                assert!((l - 0.3).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sample_covariance_converges() {
        let s = Scenario::new(3, vec![25.0], 40_000, 0.0, 17).unwrap();
        let x = generate_snapshots(&s).unwrap();
        let r = sample_covariance(&x.data).unwrap();
        let exact = exact_covariance(&[25.0], 1.0, 1.0, 3).unwrap();
        // entrywise standard deviation is about sqrt(2)/sqrt(T) here
        let max_dev = (r.data - exact.data).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(max_dev < 6.0 * 2.0 / (40_000f64).sqrt(), "{max_dev}");
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, &[0, 0]);
        let b = derive_seed(1, &[0, 1]);
        let c = derive_seed(1, &[1, 0]);
        let d = derive_seed(2, &[0, 0]);
        assert!(a != b && a != c && b != c && a != d);
        assert_eq!(a, derive_seed(1, &[0, 0]));
    }
}
