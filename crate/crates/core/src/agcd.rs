//! Nearest and approximate polynomial GCD.
//!
//! Provides the minimal root-forcing perturbation, Sylvester matrices and
//! their smallest singular values, a top-down degree search, and the
//! Gauss-Newton refinement whose pseudo-inverse step norm certifies
//! stationarity of the nearest common-factor pair.

use num_complex::Complex64;

use crate::cluster::delta_from_uncertainty;
use crate::error::{DoaError, Result};
use crate::linalg::{jacobi_svd, lstsq, pinv_solve, CMatrix, CVector, Svd, PINV_RCOND};
use crate::poly::ComplexPolynomial;

pub const DEFAULT_GN_TOL: f64 = 1e-12;
pub const DEFAULT_GN_MAX_ITER: usize = 50;

/// `[B_{n-k}(f) | B_{m-k}(g)]` for `m = deg f`, `n = deg g`.
#[derive(Debug, Clone)]
pub struct SylvesterMatrix {
    pub data: CMatrix,
    pub k: usize,
    pub degrees: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct GcdSolution {
    /// Monic approximate GCD.
    pub u: ComplexPolynomial,
    /// One cofactor per input polynomial, `u * cofactor_i ~ input_i`.
    pub cofactors: Vec<ComplexPolynomial>,
    /// Distance from the inputs to the common-factor system `(u v, u w)`.
    pub epsilon: f64,
    /// `|J^+ (F(z) - b)|` at the returned iterate.
    pub certificate_residual: f64,
    /// Jacobian evaluations performed.
    pub iterations: usize,
    /// The step norm fell to the tolerance before the iteration cap.
    pub converged: bool,
}

impl GcdSolution {
    pub fn degree(&self) -> usize {
        self.u.degree().unwrap_or(0)
    }

    fn constant(inputs: &[ComplexPolynomial]) -> Self {
        Self {
            u: ComplexPolynomial::one(),
            cofactors: inputs.to_vec(),
            epsilon: 0.0,
            certificate_residual: 0.0,
            iterations: 0,
            converged: true,
        }
    }
}

fn powers_sum(alpha: Complex64, len: usize) -> f64 {
    let a2 = alpha.norm_sqr();
    let mut s = 0.0;
    let mut p = 1.0;
    for _ in 0..len {
        s += p;
        p *= a2;
    }
    s
}

fn epsilon_min_len(polys: &[ComplexPolynomial], alpha: Complex64, len: usize) -> f64 {
    let num: f64 = polys.iter().map(|p| p.eval(alpha).norm_sqr()).sum();
    num / powers_sum(alpha, len)
}

/// Smallest total squared coefficient perturbation that makes `alpha` a
/// common root: `sum_l |f_l(alpha)|^2 / sum_k |alpha|^{2k}`, summing `k`
/// over the coefficient slots of the longest input.
pub fn epsilon_min(polys: &[ComplexPolynomial], alpha: Complex64) -> f64 {
    let len = polys.iter().map(|p| p.coeffs().len()).max().unwrap_or(1).max(1);
    epsilon_min_len(polys, alpha, len)
}

/// `|epsilon_min(cols, z) - (1/N) d(z)^H Q Q^H d(z)|` for a point `z` on the
/// unit circle, with columns read as `q^H d(z)`.
pub fn theorem1_gap(q_n: &CMatrix, z: Complex64) -> Result<f64> {
    if (z.norm() - 1.0).abs() > 1e-12 {
        return Err(DoaError::domain(format!("|z| = {} is off the unit circle", z.norm())));
    }
    let n = q_n.nrows();
    let polys: Vec<ComplexPolynomial> =
        (0..q_n.ncols()).map(|j| ComplexPolynomial::from_array_vector(q_n.column(j).iter())).collect();
    let eps = epsilon_min_len(&polys, z, n);

    let mut d = CVector::zeros(n);
    let mut p = Complex64::new(1.0, 0.0);
    for k in 0..n {
        d[k] = p;
        p *= z;
    }
    let proj = q_n.adjoint() * &d;
    let music = proj.norm_squared() / n as f64;
    Ok((eps - music).abs())
}

/// Minimal-norm coefficient perturbations `(lambda, mu)` with
/// `(f + lambda)(alpha) = 0` and `(g + mu)(alpha) = 0`.
pub fn nearest_perturbations(
    f: &ComplexPolynomial,
    g: &ComplexPolynomial,
    alpha: Complex64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let len = f.coeffs().len().max(g.coeffs().len());
    let s = powers_sum(alpha, len);
    let perturb = |p: &ComplexPolynomial| {
        let c = -p.eval(alpha) / s;
        let mut out = Vec::with_capacity(len);
        let mut pw = Complex64::new(1.0, 0.0);
        for _ in 0..len {
            out.push(c * pw);
            pw *= alpha.conj();
        }
        out
    };
    (perturb(f), perturb(g))
}

fn conv_matrix(p: &[Complex64], n_cols: usize) -> CMatrix {
    let mut b = CMatrix::zeros(p.len() + n_cols - 1, n_cols);
    for j in 0..n_cols {
        for (i, &c) in p.iter().enumerate() {
            b[(i + j, j)] = c;
        }
    }
    b
}

fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn degree_of(p: &ComplexPolynomial, what: &str) -> Result<usize> {
    p.degree().ok_or_else(|| DoaError::domain(format!("{what} is the zero polynomial")))
}

pub fn sylvester(f: &ComplexPolynomial, g: &ComplexPolynomial, k: usize) -> Result<SylvesterMatrix> {
    let m = degree_of(f, "f")?;
    let n = degree_of(g, "g")?;
    if k < 1 || k > m.min(n) {
        return Err(DoaError::domain(format!("k = {k} outside 1..={}", m.min(n))));
    }
    let bf = conv_matrix(f.coeffs(), n - k + 1);
    let bg = conv_matrix(g.coeffs(), m - k + 1);
    let mut data = CMatrix::zeros(m + n - k + 1, bf.ncols() + bg.ncols());
    data.view_mut((0, 0), bf.shape()).copy_from(&bf);
    data.view_mut((0, bf.ncols()), bg.shape()).copy_from(&bg);
    Ok(SylvesterMatrix { data, k, degrees: (m, n) })
}

pub fn smallest_singular(s: &SylvesterMatrix) -> f64 {
    jacobi_svd(&s.data).smallest()
}

fn kernel_from_svd(s: &SylvesterMatrix, svd: &Svd) -> (ComplexPolynomial, ComplexPolynomial) {
    let (m, n) = s.degrees;
    let sv = &svd.singular_values;
    let last = sv.len() - 1;
    if sv.len() >= 2 && sv[last - 1] <= PINV_RCOND.sqrt() * sv[0].max(f64::MIN_POSITIVE) {
        log::warn!("Sylvester kernel at k = {} has dimension above one", s.k);
    }
    let x = svd.v.column(last);
    let nw = n - s.k + 1;
    let w: Vec<Complex64> = x.iter().take(nw).copied().collect();
    let v: Vec<Complex64> = x.iter().skip(nw).take(m - s.k + 1).map(|c| -c).collect();
    (ComplexPolynomial::new(w), ComplexPolynomial::new(v))
}

/// Cofactors `(w, v)` from the right singular vector `[w; -v]` of the
/// smallest singular value, with `|(w, v)| = 1`.
pub fn cofactors_from_kernel(s: &SylvesterMatrix) -> (ComplexPolynomial, ComplexPolynomial) {
    kernel_from_svd(s, &jacobi_svd(&s.data))
}

/// Least-squares `u` of `[r^H; B(v); B(w)] u = [1; f; g]`.
pub fn gcd_linear_init(
    f: &ComplexPolynomial,
    g: &ComplexPolynomial,
    v: &ComplexPolynomial,
    w: &ComplexPolynomial,
    r: &CVector,
) -> Result<ComplexPolynomial> {
    let k = r.len() - 1;
    let (fc, gc) = (f.coeffs(), g.coeffs());
    if v.coeffs().len() + k != fc.len() || w.coeffs().len() + k != gc.len() {
        return Err(DoaError::domain("cofactor degrees inconsistent with r"));
    }
    let bv = conv_matrix(v.coeffs(), k + 1);
    let bw = conv_matrix(w.coeffs(), k + 1);
    let rows = 1 + bv.nrows() + bw.nrows();
    let mut a = CMatrix::zeros(rows, k + 1);
    let mut b = CVector::zeros(rows);
    for j in 0..=k {
        a[(0, j)] = r[j].conj();
    }
    b[0] = Complex64::new(1.0, 0.0);
    a.view_mut((1, 0), bv.shape()).copy_from(&bv);
    a.view_mut((1 + bv.nrows(), 0), bw.shape()).copy_from(&bw);
    for (i, &c) in fc.iter().enumerate() {
        b[1 + i] = c;
    }
    for (i, &c) in gc.iter().enumerate() {
        b[1 + bv.nrows() + i] = c;
    }
    let svd = jacobi_svd(&a);
    if svd.rank(PINV_RCOND) < k + 1 {
        log::warn!("rank-deficient GCD initialization system; using truncated pseudo-inverse");
    }
    Ok(ComplexPolynomial::new(svd.solve(&b, PINV_RCOND).iter().copied().collect()))
}

/// Unknowns stacked as `(u, v_1, v_2, ...)` with fixed coefficient lengths.
struct Stacked<'a> {
    inputs: Vec<&'a [Complex64]>,
    r: &'a CVector,
    lu: usize,
}

impl Stacked<'_> {
    fn cofactor_len(&self, i: usize) -> usize {
        self.inputs[i].len() + 1 - self.lu
    }

    fn unknowns(&self) -> usize {
        self.lu + (0..self.inputs.len()).map(|i| self.cofactor_len(i)).sum::<usize>()
    }

    fn equations(&self) -> usize {
        1 + self.inputs.iter().map(|f| f.len()).sum::<usize>()
    }

    fn split<'z>(&self, z: &'z [Complex64]) -> (&'z [Complex64], Vec<&'z [Complex64]>) {
        let (u, mut rest) = z.split_at(self.lu);
        let mut cof = Vec::with_capacity(self.inputs.len());
        for i in 0..self.inputs.len() {
            let (c, tail) = rest.split_at(self.cofactor_len(i));
            cof.push(c);
            rest = tail;
        }
        (u, cof)
    }

    /// `F(z) - b` and, separately, the part of it excluding the scaling row.
    fn residual(&self, z: &[Complex64]) -> (CVector, f64) {
        let (u, cof) = self.split(z);
        let mut out = CVector::zeros(self.equations());
        out[0] = self.r.iter().zip(u).map(|(r, u)| r.conj() * u).sum::<Complex64>() - 1.0;
        let mut row = 1;
        let mut eps2 = 0.0;
        for (c, f) in cof.iter().zip(&self.inputs) {
            for (p, &fi) in convolve(u, c).iter().zip(f.iter()) {
                out[row] = p - fi;
                eps2 += out[row].norm_sqr();
                row += 1;
            }
        }
        (out, eps2.sqrt())
    }

    fn jacobian(&self, z: &[Complex64]) -> CMatrix {
        let (u, cof) = self.split(z);
        let mut j = CMatrix::zeros(self.equations(), self.unknowns());
        for c in 0..self.lu {
            j[(0, c)] = self.r[c].conj();
        }
        let mut row = 1;
        let mut col = self.lu;
        for c in &cof {
            let bv = conv_matrix(c, self.lu);
            let bu = conv_matrix(u, c.len());
            j.view_mut((row, 0), bv.shape()).copy_from(&bv);
            j.view_mut((row, col), bu.shape()).copy_from(&bu);
            row += bv.nrows();
            col += c.len();
        }
        j
    }
}

fn padded(p: &ComplexPolynomial, len: usize) -> Vec<Complex64> {
    let mut c = p.coeffs().to_vec();
    c.resize(len, Complex64::new(0.0, 0.0));
    c
}

/// Gauss-Newton on `F(u, v_i) = [r^H u; u v_i]` against `b = [1; f_i]`,
/// stepping `z <- z - J^+ (F(z) - b)` until the step norm is at most `tol`.
///
/// The iterate is returned with `u` made monic and the cofactors rescaled to
/// match. Three consecutive residual increases raise a divergence error.
pub fn gauss_newton_refine(
    u0: &ComplexPolynomial,
    cofactors0: &[ComplexPolynomial],
    inputs: &[ComplexPolynomial],
    r: &CVector,
    tol: f64,
    max_iter: usize,
) -> Result<GcdSolution> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(DoaError::domain("tol must be positive and max_iter nonzero"));
    }
    if cofactors0.len() != inputs.len() || inputs.is_empty() {
        return Err(DoaError::domain("one cofactor per input polynomial required"));
    }
    let lu = r.len();
    let sys = Stacked { inputs: inputs.iter().map(|p| p.coeffs()).collect(), r, lu };
    for i in 0..inputs.len() {
        if sys.inputs[i].len() < lu {
            return Err(DoaError::domain("input degree below the GCD degree"));
        }
    }
    let mut z = padded(u0, lu);
    for (i, c) in cofactors0.iter().enumerate() {
        z.extend(padded(c, sys.cofactor_len(i)));
    }

    let mut prev_res = f64::INFINITY;
    let mut rises = 0;
    let mut iterations = 0;
    let mut converged = false;
    let mut cert;
    loop {
        let (res, _) = sys.residual(&z);
        let res_norm = res.norm();
        // rises at rounding level are stagnation, not divergence
        if res_norm > prev_res * (1.0 + 1e-9) {
            rises += 1;
            if rises >= 3 {
                return Err(DoaError::Divergence { iterations, residual: res_norm, last_iterate: z });
            }
        } else {
            rises = 0;
        }
        prev_res = res_norm;

        let j = sys.jacobian(&z);
        iterations += 1;
        let step = pinv_solve(&j, &res, PINV_RCOND);
        cert = step.norm();
        if cert <= tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            for (zi, si) in z.iter_mut().zip(step.iter()) {
                *zi -= si;
            }
            let (res, _) = sys.residual(&z);
            cert = pinv_solve(&sys.jacobian(&z), &res, PINV_RCOND).norm();
            break;
        }
        for (zi, si) in z.iter_mut().zip(step.iter()) {
            *zi -= si;
        }
    }

    let (_, epsilon) = sys.residual(&z);
    let (u, cof) = sys.split(&z);
    let u = ComplexPolynomial::new(u.to_vec());
    let lead = u.leading().ok_or_else(|| DoaError::Degraded("GCD estimate vanished".into()))?;
    let cofactors = cof.iter().map(|c| ComplexPolynomial::new(c.to_vec()).scale(lead)).collect();
    Ok(GcdSolution { u: u.monic(), cofactors, epsilon, certificate_residual: cert, iterations, converged })
}

/// Approximate GCD of `f` and `g` within perturbation budget `zeta`.
///
/// Candidate degrees are tried from `min(deg f, deg g)` downwards. A degree
/// is examined when the Sylvester matrix's smallest singular value falls
/// under `zeta * sqrt(max(2j - 2, 1))`, `j` being the sweep index, and is
/// accepted when the refined perturbation is at most `zeta`. If no degree is
/// accepted the GCD is the constant 1.
pub fn uvgcd(f: &ComplexPolynomial, g: &ComplexPolynomial, zeta: f64) -> Result<GcdSolution> {
    uvgcd_with(f, g, zeta, DEFAULT_GN_TOL, DEFAULT_GN_MAX_ITER)
}

pub fn uvgcd_with(
    f: &ComplexPolynomial,
    g: &ComplexPolynomial,
    zeta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<GcdSolution> {
    if !(zeta > 0.0) {
        return Err(DoaError::domain(format!("zeta must be positive, got {zeta}")));
    }
    let m = degree_of(f, "f")?;
    let n = degree_of(g, "g")?;
    let inputs = [f.clone(), g.clone()];
    let top = m.min(n);
    for j in 0..top {
        let d = top - j;
        let s = sylvester(f, g, d)?;
        let svd = jacobi_svd(&s.data);
        let gate = zeta * ((2.0 * j as f64 - 2.0).max(1.0)).sqrt();
        if svd.smallest() >= gate {
            continue;
        }
        let (w, v) = kernel_from_svd(&s, &svd);
        if v.degree() != Some(m - d) || w.degree() != Some(n - d) {
            continue;
        }
        let Some(sol) = refine_candidate(f, g, &v, &w, d, tol, max_iter, &inputs) else {
            continue;
        };
        if sol.epsilon <= zeta {
            return Ok(sol);
        }
    }
    Ok(GcdSolution::constant(&inputs))
}

#[allow(clippy::too_many_arguments)]
fn refine_candidate(
    f: &ComplexPolynomial,
    g: &ComplexPolynomial,
    v: &ComplexPolynomial,
    w: &ComplexPolynomial,
    d: usize,
    tol: f64,
    max_iter: usize,
    inputs: &[ComplexPolynomial],
) -> Option<GcdSolution> {
    // scaling vector from an unconstrained first solve
    let bv = conv_matrix(v.coeffs(), d + 1);
    let bw = conv_matrix(w.coeffs(), d + 1);
    let mut a = CMatrix::zeros(bv.nrows() + bw.nrows(), d + 1);
    a.view_mut((0, 0), bv.shape()).copy_from(&bv);
    a.view_mut((bv.nrows(), 0), bw.shape()).copy_from(&bw);
    let b = CVector::from_iterator(a.nrows(), f.coeffs().iter().chain(g.coeffs()).copied());
    let u_pre = lstsq(&a, &b);
    let n2 = u_pre.norm_squared();
    if !(n2 > 0.0 && n2.is_finite()) {
        return None;
    }
    let r = u_pre / Complex64::from(n2);
    let u0 = gcd_linear_init(f, g, v, w, &r).ok()?;
    match gauss_newton_refine(&u0, &[v.clone(), w.clone()], inputs, &r, tol, max_iter) {
        Ok(sol) => Some(sol),
        Err(e) => {
            log::debug!("degree {d} candidate rejected: {e}");
            None
        }
    }
}

/// Perturbation budget `u_norm * ((1 + delta)^degree - 1)` for an angular
/// uncertainty of `delta_theta_deg` degrees per root.
pub fn zeta_from_uncertainty(delta_theta_deg: f64, gcd_degree: usize, u_norm: f64) -> f64 {
    let delta = delta_from_uncertainty(delta_theta_deg);
    u_norm * ((1.0 + delta).powi(gcd_degree as i32) - 1.0)
}

/// Refines a GCD estimate `u0` of `q_i` and `q_j`: least-squares cofactors
/// followed by Gauss-Newton.
pub fn certify(q_i: &ComplexPolynomial, q_j: &ComplexPolynomial, u0: &ComplexPolynomial, tol: f64) -> Result<GcdSolution> {
    certify_with(q_i, q_j, u0, tol, DEFAULT_GN_MAX_ITER)
}

pub fn certify_with(
    q_i: &ComplexPolynomial,
    q_j: &ComplexPolynomial,
    u0: &ComplexPolynomial,
    tol: f64,
    max_iter: usize,
) -> Result<GcdSolution> {
    certify_many(&[q_i.clone(), q_j.clone()], u0, tol, max_iter)
}

/// [`certify`] over any number of polynomials sharing the factor `u0`.
pub fn certify_many(inputs: &[ComplexPolynomial], u0: &ComplexPolynomial, tol: f64, max_iter: usize) -> Result<GcdSolution> {
    let k = degree_of(u0, "u0")?;
    if k < 1 {
        return Err(DoaError::domain("certify needs a GCD estimate of degree at least 1"));
    }
    let mut cofactors = Vec::with_capacity(inputs.len());
    for q in inputs {
        let dq = degree_of(q, "input")?;
        if dq < k {
            return Err(DoaError::domain("input degree below the GCD estimate degree"));
        }
        let b = conv_matrix(u0.coeffs(), dq - k + 1);
        let rhs = CVector::from_column_slice(q.coeffs());
        cofactors.push(ComplexPolynomial::new(lstsq(&b, &rhs).iter().copied().collect()));
    }
    let r = CVector::from_column_slice(u0.coeffs()) / Complex64::from(u0.norm().powi(2));
    gauss_newton_refine(u0, &cofactors, inputs, &r, tol, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real(coeffs: &[f64]) -> ComplexPolynomial {
        ComplexPolynomial::from_real(coeffs)
    }

    fn random_poly(rng: &mut ChaCha8Rng, deg: usize) -> ComplexPolynomial {
        ComplexPolynomial::new((0..=deg).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect())
    }

    fn max_root_error(found: &[Complex64], truth: &[Complex64]) -> f64 {
        truth
            .iter()
            .map(|t| found.iter().map(|z| (z - t).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }

    #[test]
    fn epsilon_min_examples() {
        let a0 = c(0.3, 0.4);
        let p = ComplexPolynomial::new(vec![-a0, c(1.0, 0.0)]);
        assert!(epsilon_min(&[p], a0) < 1e-30);
        let k = ComplexPolynomial::constant(c(2.0, -1.0));
        assert!((epsilon_min(&[k], Complex64::from_polar(1.0, 0.7)) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn gap_reduced_case_and_off_circle() {
        let q = CMatrix::from_column_slice(3, 1, &[c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)]);
        assert!(theorem1_gap(&q, c(1.0, 0.0)).unwrap() <= 1e-12);
        assert!(theorem1_gap(&q, c(1.1, 0.0)).is_err());
    }

    #[test]
    fn nearest_perturbations_examples() {
        let f = real(&[-1.0, 1.0]);
        let g = real(&[1.0, 1.0]);
        let (l, m) = nearest_perturbations(&f, &g, c(0.0, 0.0));
        for (a, b) in l.iter().zip(&m) {
            assert!((a + b).norm() < 1e-15);
        }
        let e: f64 = l.iter().chain(&m).map(|x| x.norm_sqr()).sum();
        assert!((e - epsilon_min(&[f.clone(), g], c(0.0, 0.0))).abs() < 1e-15);
        let (l, _) = nearest_perturbations(&f, &f, c(1.0, 0.0));
        assert!(l.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn sylvester_shapes_and_singularity() {
        let f = real(&[-1.0, 1.0]);
        let s = sylvester(&f, &f, 1).unwrap();
        assert_eq!(s.data.shape(), (2, 2));
        assert!(smallest_singular(&s) < 1e-15);
        assert!(sylvester(&f, &f, 2).is_err());
        assert!(sylvester(&f, &f, 0).is_err());

        // gcd x^2 - 1 with cofactors x + 2 and x - 3
        let u = real(&[-1.0, 0.0, 1.0]);
        let f = &u * &real(&[2.0, 1.0]);
        let g = &u * &real(&[-3.0, 1.0]);
        assert!(smallest_singular(&sylvester(&f, &g, 2).unwrap()) < 1e-12);
        assert!(smallest_singular(&sylvester(&f, &g, 3).unwrap()) > 1e-3);
    }

    #[test]
    fn identity_blocks_have_unit_singular_value() {
        let s = SylvesterMatrix { data: conv_matrix(&[c(1.0, 0.0)], 4), k: 1, degrees: (2, 2) };
        assert!((smallest_singular(&s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_cofactors_match_hand_factorization() {
        // f = (x-1) x, g = (x-1)(x+1)
        let f = real(&[0.0, -1.0, 1.0]);
        let g = real(&[-1.0, 0.0, 1.0]);
        let (w, v) = cofactors_from_kernel(&sylvester(&f, &g, 1).unwrap());
        let vn = v.monic();
        let wn = w.monic();
        assert!((vn.coeffs()[0]).norm() < 1e-12 && (vn.coeffs()[1] - 1.0).norm() < 1e-12);
        assert!((wn.coeffs()[0] - 1.0).norm() < 1e-12);
        let total: f64 = w.coeffs().iter().chain(v.coeffs()).map(|x| x.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // v / w = x / (x + 1) holds up to the common kernel scale
        let ratio = v.coeffs()[1] / w.coeffs()[1];
        assert!((w.coeffs()[0] * ratio).norm() > 0.0);
    }

    #[test]
    fn linear_init_recovers_exact_gcd() {
        let u = ComplexPolynomial::from_roots(&[c(0.5, 0.5), c(-0.7, 0.1)]);
        let v = ComplexPolynomial::from_roots(&[c(1.0, 0.0), c(0.0, -1.2)]);
        let w = ComplexPolynomial::from_roots(&[c(-1.0, 0.3), c(0.2, 0.9)]);
        let f = &u * &v;
        let g = &u * &w;
        let r = CVector::from_column_slice(u.coeffs()) / Complex64::from(u.norm().powi(2));
        let est = gcd_linear_init(&f, &g, &v, &w, &r).unwrap();
        for (a, b) in est.coeffs().iter().zip(u.coeffs()) {
            assert!((a - b).norm() < 1e-8);
        }
        let rhu: Complex64 = r.iter().zip(u.coeffs()).map(|(r, u)| r.conj() * u).sum();
        assert!((rhu - 1.0).norm() < 1e-14);
    }

    #[test]
    fn gauss_newton_fixed_point() {
        let u = ComplexPolynomial::from_roots(&[c(0.9, 0.1), c(-0.3, 0.8)]);
        let v = ComplexPolynomial::from_roots(&[c(0.1, -1.0)]);
        let w = ComplexPolynomial::from_roots(&[c(-1.1, 0.2)]);
        let f = &u * &v;
        let g = &u * &w;
        let r = CVector::from_column_slice(u.coeffs()) / Complex64::from(u.norm().powi(2));
        let sol = gauss_newton_refine(&u, &[v, w], &[f, g], &r, 1e-12, 20).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.converged);
        assert!(sol.certificate_residual <= 1e-14);
        assert!(sol.epsilon <= 1e-14);
    }

    #[test]
    fn uvgcd_recovers_constructed_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let roots = [c(0.8, 0.2), c(-0.5, 0.6), c(0.1, -0.9)];
        let u = ComplexPolynomial::from_roots(&roots);
        let f = &u * &random_poly(&mut rng, 3);
        let g = &u * &random_poly(&mut rng, 3);
        let sol = uvgcd(&f, &g, 1e-6).unwrap();
        assert_eq!(sol.degree(), 3);
        assert!(max_root_error(&sol.u.roots().unwrap(), &roots) < 1e-6);
        for (cof, p) in sol.cofactors.iter().zip([&f, &g]) {
            let rebuilt = &sol.u * cof;
            let diff: f64 = rebuilt.coeffs().iter().zip(p.coeffs()).map(|(a, b)| (a - b).norm_sqr()).sum();
            assert!(diff.sqrt() <= sol.epsilon + 1e-10);
        }
    }

    #[test]
    fn uvgcd_coprime_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_poly(&mut rng, 5);
        let g = random_poly(&mut rng, 5);
        let sol = uvgcd(&f, &g, 1e-3).unwrap();
        assert_eq!(sol.degree(), 0);
        assert!(uvgcd(&f, &g, 0.0).is_err());
    }

    #[test]
    fn uvgcd_simple_pair() {
        let f = real(&[-1.0, 0.0, 1.0]);
        let g = real(&[1.0, -2.0, 1.0]);
        let sol = uvgcd(&f, &g, 1e-8).unwrap();
        assert_eq!(sol.degree(), 1);
        assert!((sol.u.roots().unwrap()[0] - 1.0).norm() < 1e-10);
    }

    #[test]
    fn zeta_examples() {
        assert!((zeta_from_uncertainty(0.5, 3, 1.0) - 0.0845).abs() < 5e-5);
        assert_eq!(zeta_from_uncertainty(0.0, 4, 2.0), 0.0);
        assert!(zeta_from_uncertainty(0.6, 3, 1.0) > zeta_from_uncertainty(0.5, 3, 1.0));
        assert!(zeta_from_uncertainty(0.5, 4, 1.0) > zeta_from_uncertainty(0.5, 3, 1.0));
        assert!(zeta_from_uncertainty(0.5, 3, 2.0) > zeta_from_uncertainty(0.5, 3, 1.0));
    }

    #[test]
    fn certify_at_truth() {
        let u = ComplexPolynomial::from_roots(&[c(0.6, 0.8), c(-1.0, 0.0)]);
        let f = &u * &ComplexPolynomial::from_roots(&[c(0.3, 0.3), c(2.0, 0.0)]);
        let g = &u * &ComplexPolynomial::from_roots(&[c(-0.4, 1.0), c(0.0, -2.0)]);
        let sol = certify(&f, &g, &u, 1e-12).unwrap();
        assert!(sol.certificate_residual <= 1e-12);
        assert!(sol.epsilon <= 1e-12);
        assert!(certify(&f, &g, &ComplexPolynomial::one(), 1e-12).is_err());
    }
}
