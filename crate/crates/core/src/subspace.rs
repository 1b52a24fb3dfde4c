//! Eigen-structure of the array covariance: the Hermitian eigendecomposition,
//! eigenvalue-based order selection (AIC, MDL) and the root-MUSIC baseline.

use num_complex::Complex64;

use crate::error::{DoaError, Result};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::model::{steering_vector, CovarianceMatrix};
use crate::poly::ComplexPolynomial;

/// Eigenvalues in descending order with their orthonormal eigenvectors as
/// matching columns.
#[derive(Debug, Clone)]
pub struct SubspaceDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SubspaceDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvector `i` read as the polynomial `q_i^H d(z)`.
    pub fn eigenvector_polynomial(&self, i: usize) -> ComplexPolynomial {
        ComplexPolynomial::from_array_vector(self.eigenvectors.column(i).iter())
    }
}

pub fn hermitian_eig(r: &CovarianceMatrix) -> Result<SubspaceDecomposition> {
    let e = hermitian_eigen(&r.data)?;
    Ok(SubspaceDecomposition { eigenvalues: e.eigenvalues, eigenvectors: e.eigenvectors })
}

/// The `N - l_hat` eigenvectors paired with the smallest eigenvalues.
pub fn noise_subspace(d: &SubspaceDecomposition, l_hat: usize) -> Result<CMatrix> {
    let n = d.dim();
    if l_hat >= n {
        return Err(DoaError::domain(format!("l_hat = {l_hat} leaves no noise subspace for N = {n}")));
    }
    Ok(d.eigenvectors.columns(l_hat, n - l_hat).clone_owned())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InformationCriterion {
    Aic,
    Mdl,
}

/// Wax-Kailath log-likelihood term `T (N - k) log(a / g)` of the smallest
/// `N - k` eigenvalues, with `a` and `g` their arithmetic and geometric means.
fn sphericity_term(eigenvalues: &[f64], k: usize, t: f64) -> f64 {
    let tail = &eigenvalues[k..];
    let p = tail.len() as f64;
    let arith = tail.iter().sum::<f64>() / p;
    let log_geo = tail.iter().map(|l| l.ln()).sum::<f64>() / p;
    // log(a/g) >= 0; clamp round-off below zero
    t * p * (arith.ln() - log_geo).max(0.0)
}

/// Criterion values for every candidate source count `k = 0..N-1`.
pub fn criterion_values(eigenvalues: &[f64], t_snapshots: usize, criterion: InformationCriterion) -> Result<Vec<f64>> {
    if eigenvalues.is_empty() {
        return Err(DoaError::domain("no eigenvalues"));
    }
    if t_snapshots == 0 {
        return Err(DoaError::domain("T must be at least 1"));
    }
    if let Some(&bad) = eigenvalues.iter().find(|&&l| !(l > 0.0)) {
        return Err(DoaError::domain(format!("nonpositive eigenvalue {bad}")));
    }
    let n = eigenvalues.len();
    let nf = n as f64;
    let t = t_snapshots as f64;
    Ok((0..n)
        .map(|k| {
            let kf = k as f64;
            let free = kf * (2.0 * nf - kf);
            let neg_ll = sphericity_term(eigenvalues, k, t);
            match criterion {
                InformationCriterion::Aic => 2.0 * neg_ll + 2.0 * free,
                InformationCriterion::Mdl => neg_ll + 0.5 * free * t.ln(),
            }
        })
        .collect())
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Source count minimizing the Akaike information criterion.
pub fn aic_order(eigenvalues: &[f64], t_snapshots: usize) -> Result<usize> {
    Ok(argmin(&criterion_values(eigenvalues, t_snapshots, InformationCriterion::Aic)?))
}

/// Source count minimizing the minimum description length.
pub fn mdl_order(eigenvalues: &[f64], t_snapshots: usize) -> Result<usize> {
    Ok(argmin(&criterion_values(eigenvalues, t_snapshots, InformationCriterion::Mdl)?))
}

/// Degree-`2(N-1)` polynomial `z^{N-1} d^H(z) C d(z)` with `C = Q_n Q_n^H`,
/// whose coefficients are the diagonal sums of `C`.
pub fn root_music_polynomial(q_n: &CMatrix) -> ComplexPolynomial {
    let n = q_n.nrows();
    let c = q_n * q_n.adjoint();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
    for m in 0..n {
        for k in 0..n {
            // z^{-m} C[m,k] z^k contributes to power (k - m) + (N - 1)
            coeffs[k + n - 1 - m] += c[(m, k)];
        }
    }
    ComplexPolynomial::new(coeffs)
}

/// Groups roots into conjugate-reciprocal pairs `(z, 1/z*)` and returns one
/// representative per pair: the inside member averaged with the mirror of
/// its partner. Unpaired leftovers are dropped.
pub(crate) fn inside_representatives(roots: &[Complex64]) -> Vec<Complex64> {
    let mirror = |z: Complex64| 1.0 / z.conj();
    let mut order: Vec<usize> = (0..roots.len()).collect();
    order.sort_by(|&a, &b| roots[a].norm().total_cmp(&roots[b].norm()));
    let mut used = vec![false; roots.len()];
    let mut reps = Vec::new();
    for &i in &order {
        if used[i] {
            continue;
        }
        used[i] = true;
        let target = mirror(roots[i]);
        let partner = (0..roots.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (roots[a] - target).norm().total_cmp(&(roots[b] - target).norm()));
        if let Some(j) = partner {
            used[j] = true;
            let (inner, outer) = if roots[i].norm() <= roots[j].norm() { (roots[i], roots[j]) } else { (roots[j], roots[i]) };
            reps.push((inner + mirror(outer)) * 0.5);
        }
    }
    reps
}

/// Converts a root's phase to an angle in degrees via `asin(arg / pi)`.
pub fn phase_to_doa(z: Complex64) -> f64 {
    (z.arg() / std::f64::consts::PI).clamp(-1.0, 1.0).asin().to_degrees()
}

/// Root-MUSIC: the `l_hat` roots of the root-MUSIC polynomial closest to the
/// unit circle from inside, mapped to angles and sorted ascending.
pub fn root_music(q_n: &CMatrix, l_hat: usize) -> Result<Vec<f64>> {
    let n = q_n.nrows();
    if l_hat == 0 {
        return Err(DoaError::domain("root-MUSIC needs l_hat >= 1"));
    }
    if l_hat >= n || q_n.ncols() != n - l_hat {
        return Err(DoaError::domain(format!(
            "noise subspace has {} columns, expected N - l_hat = {}",
            q_n.ncols(),
            n.saturating_sub(l_hat)
        )));
    }
    let poly = root_music_polynomial(q_n);
    let roots = poly.roots()?;
    let mut inside = inside_representatives(&roots);
    if inside.len() < l_hat {
        return Err(DoaError::Degraded(format!(
            "only {} roots inside the unit circle, {} requested",
            inside.len(),
            l_hat
        )));
    }
    inside.sort_by(|a, b| {
        b.norm().min(1.0).total_cmp(&a.norm().min(1.0)).then(a.arg().total_cmp(&b.arg()))
    });
    let mut doas: Vec<f64> = inside[..l_hat].iter().map(|&z| phase_to_doa(z)).collect();
    doas.sort_by(f64::total_cmp);
    Ok(doas)
}

/// `J(theta) = a^H(theta) Q_n Q_n^H a(theta) = |Q_n^H a|^2`.
pub fn music_spectrum(q_n: &CMatrix, theta_deg: f64) -> Result<f64> {
    if q_n.ncols() == 0 {
        return Ok(0.0);
    }
    let a = steering_vector(theta_deg, q_n.nrows())?;
    Ok((q_n.adjoint() * a).norm_squared())
}
