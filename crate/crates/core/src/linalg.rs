//! Dense complex linear algebra kernels: Hermitian eigendecomposition and
//! one-sided Jacobi SVD with the least-squares solve built on top of it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{DoaError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative cutoff below which singular values are treated as zero in
/// pseudo-inverse solves.
pub const PINV_RCOND: f64 = 1e-12;

/// Relative Frobenius-norm tolerance on `A - A^H` for Hermitian inputs.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigen-pairs of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

/// Eigendecomposition `A = Q diag(lambda) Q^H` of a Hermitian matrix.
///
/// Householder reflections reduce `A` to Hermitian tridiagonal form, a
/// diagonal unitary scaling makes the off-diagonal real, and implicit QL
/// with Wilkinson-type shifts finishes the real symmetric tridiagonal
/// problem while accumulating the rotations.
pub fn hermitian_eigen(a: &CMatrix) -> Result<HermitianEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(DoaError::domain(format!("matrix is {}x{}, not square", n, a.ncols())));
    }
    if n == 0 {
        return Ok(HermitianEigen { eigenvalues: vec![], eigenvectors: CMatrix::zeros(0, 0) });
    }
    let scale = a.norm();
    let skew = (a - a.adjoint()).norm();
    if !(skew <= HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE)) {
        return Err(DoaError::domain(format!(
            "matrix is not Hermitian (|A - A^H| = {skew:.3e}, |A| = {scale:.3e})"
        )));
    }
    let mut t = (a + a.adjoint()).scale(0.5);
    let mut q = CMatrix::identity(n, n);

    for k in 0..n.saturating_sub(2) {
        let x = t.view((k + 1, k), (n - k - 1, 1)).clone_owned();
        let xnorm = x.norm();
        let tail = x.rows(1, n - k - 2).norm();
        if tail == 0.0 {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        let mut w = CVector::zeros(n);
        for i in 0..(n - k - 1) {
            w[k + 1 + i] = x[i];
        }
        w[k + 1] -= alpha;
        let wn = w.norm();
        w /= Complex64::from(wn);
        // P = I - 2 w w^H, T <- P T P, Q <- Q P
        let tw = &t * &w;
        let wt = w.adjoint() * &t;
        let wtw = (w.adjoint() * &tw)[(0, 0)];
        let two = Complex64::from(2.0);
        t = &t - (&w * &wt) * two - (&tw * w.adjoint()) * two
            + (&w * w.adjoint()) * (wtw * Complex64::from(4.0));
        let qw = &q * &w;
        q -= (qw * w.adjoint()) * two;
    }

    let mut diag: Vec<f64> = (0..n).map(|i| t[(i, i)].re).collect();
    let mut off = vec![0.0; n];
    let mut phases = vec![Complex64::new(1.0, 0.0); n];
    for i in 0..n - 1 {
        let e = t[(i + 1, i)];
        let m = e.norm();
        off[i] = m;
        phases[i + 1] = if m > 0.0 { phases[i] * (e / m) } else { phases[i] };
    }

    let mut z = DMatrix::<f64>::identity(n, n);
    tql2(&mut diag, &mut off, &mut z)?;

    // eigenvectors of A are Q D Z
    let mut qd = q;
    for j in 0..n {
        for i in 0..n {
            qd[(i, j)] *= phases[j];
        }
    }
    let zc = z.map(Complex64::from);
    let vecs = qd * zc;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| vecs[(r, order[c])]);
    Ok(HermitianEigen { eigenvalues, eigenvectors })
}

/// Implicit QL on a real symmetric tridiagonal matrix. `e[i]` holds the
/// entry at `(i + 1, i)`; the last slot is scratch.
fn tql2(d: &mut [f64], e: &mut [f64], v: &mut DMatrix<f64>) -> Result<()> {
    let n = d.len();
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(DoaError::Degraded("tridiagonal QL failed to converge".into()));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Thin singular value decomposition `A = U diag(s) V^H`, singular values in
/// descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    pub fn smallest(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    /// Minimum-norm least-squares solution of `A x = b`, discarding singular
    /// values below `rcond * s_max`.
    pub fn solve(&self, b: &CVector, rcond: f64) -> CVector {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        let mut x = CVector::zeros(self.v.nrows());
        for (i, &s) in self.singular_values.iter().enumerate() {
            if s <= rcond * smax || s == 0.0 {
                continue;
            }
            let coef = self.u.column(i).dotc(b) / s;
            x += self.v.column(i) * coef;
        }
        x
    }

    /// Number of singular values above `rcond * s_max`.
    pub fn rank(&self, rcond: f64) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values.iter().filter(|&&s| s > rcond * smax && s > 0.0).count()
    }
}

/// One-sided (Hestenes) Jacobi SVD. Column orthogonalization gives small
/// singular values to high relative accuracy.
pub fn jacobi_svd(a: &CMatrix) -> Svd {
    let (m, n) = a.shape();
    if m < n {
        let t = jacobi_svd(&a.adjoint());
        return Svd { u: t.v, singular_values: t.singular_values, v: t.u };
    }
    let mut w = a.clone();
    let mut v = CMatrix::identity(n, n);
    let tol = 1e-15;
    let ws = w.as_mut_slice();
    let vs = v.as_mut_slice();

    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (cp, cq) = column_pair(ws, m, p, q);
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::new(0.0, 0.0);
                for (x, y) in cp.iter().zip(cq.iter()) {
                    alpha += x.norm_sqr();
                    beta += y.norm_sqr();
                    gamma += x.conj() * y;
                }
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gabs = gamma.norm();
                if gabs <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / gabs;
                let zeta = (beta - alpha) / (2.0 * gabs);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(cp, cq, c, s, phase);
                let (vp, vq) = column_pair(vs, n, p, q);
                rotate_pair(vp, vq, c, s, phase);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let singular_values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u = CMatrix::zeros(m, n);
    let mut vs = CMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > 0.0 {
            u.set_column(k, &(w.column(j) / Complex64::from(norms[j])));
        }
        vs.set_column(k, &v.column(j));
    }
    Svd { u, singular_values, v: vs }
}

fn column_pair(data: &mut [Complex64], rows: usize, p: usize, q: usize) -> (&mut [Complex64], &mut [Complex64]) {
    let (head, tail) = data.split_at_mut(q * rows);
    (&mut head[p * rows..(p + 1) * rows], &mut tail[..rows])
}

/// Applies the rotation that orthogonalizes columns `p` and `q` once column
/// `q` has been rotated by the conjugate of `phase`.
fn rotate_pair(xp: &mut [Complex64], xq: &mut [Complex64], c: f64, s: f64, phase: Complex64) {
    let ph = phase.conj();
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let ap = *a;
        let bq = *b * ph;
        *a = ap * c - bq * s;
        *b = ap * s + bq * c;
    }
}

/// `A^+ b`. Tall matrices whose pivoted QR shows a well-conditioned R are
/// solved by QR, which equals the pseudo-inverse solution at full column
/// rank; anything else goes through the truncated SVD.
pub fn pinv_solve(a: &CMatrix, b: &CVector, rcond: f64) -> CVector {
    let (m, n) = a.shape();
    if m >= n && n > 0 {
        let qr = a.clone().col_piv_qr();
        let r = qr.r();
        let dmax = r[(0, 0)].norm();
        let dmin = (0..n).map(|i| r[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if dmax > 0.0 && dmin > QR_RCOND * dmax {
            let mut y = qr.q().adjoint() * b;
            if r.solve_upper_triangular_mut(&mut y) {
                qr.p().inv_permute_rows(&mut y);
                return y;
            }
        }
    }
    jacobi_svd(a).solve(b, rcond)
}

/// Pivoted-QR diagonal ratio below which [`pinv_solve`] defers to the SVD.
const QR_RCOND: f64 = 1e-8;

/// Least-squares solve through the SVD pseudo-inverse.
pub fn lstsq(a: &CMatrix, b: &CVector) -> CVector {
    pinv_solve(a, b, PINV_RCOND)
}
