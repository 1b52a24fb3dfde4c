//! Dense univariate polynomials over the complex numbers.
//!
//! Coefficients are stored in ascending power order: `coeffs[k]` multiplies
//! `x^k`. The zero polynomial is the empty coefficient vector, and every
//! nonzero polynomial keeps a nonzero leading coefficient.

use std::fmt;
use std::ops::{Add, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{DoaError, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Maximum number of Aberth sweeps before giving up on refinement.
pub const ABERTH_MAX_ITER: usize = 200;

#[derive(Clone, PartialEq, Default)]
pub struct ComplexPolynomial {
    coeffs: Vec<Complex64>,
}

impl ComplexPolynomial {
    /// Builds a polynomial from ascending coefficients, dropping exact-zero
    /// leading terms.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == ZERO) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self { coeffs: vec![ONE] }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// The polynomial `q^H d(z) = sum_k conj(q_k) z^k` attached to an array
    /// vector `q`.
    ///
    /// With steering entries `alpha^k`, a vector orthogonal to `a(theta)`
    /// yields a polynomial vanishing at `alpha` itself, and
    /// `|p(z)|^2 = |q^H d(z)|^2` on the unit circle.
    pub fn from_array_vector<'a, I>(q: I) -> Self
    where
        I: IntoIterator<Item = &'a Complex64>,
    {
        Self::new(q.into_iter().map(|c| c.conj()).collect())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<Complex64> {
        self.coeffs.last().copied()
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Value and first derivative in a single Horner pass.
    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&x| x * c).collect())
    }

    /// Divides through by the leading coefficient. The zero polynomial is
    /// returned unchanged.
    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(lead) => {
                let mut coeffs: Vec<_> = self.coeffs.iter().map(|&c| c / lead).collect();
                *coeffs.last_mut().unwrap() = ONE;
                Self { coeffs }
            }
            None => Self::zero(),
        }
    }

    /// Monic polynomial with the given roots; the empty list gives `1`.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut coeffs = vec![ONE];
        for &r in roots {
            coeffs.push(ZERO);
            for k in (1..coeffs.len()).rev() {
                coeffs[k] = coeffs[k - 1] - r * coeffs[k];
            }
            coeffs[0] = -r * coeffs[0];
        }
        Self { coeffs }
    }

    /// All roots, with multiplicity, by Aberth-Ehrlich simultaneous
    /// iteration. Constant polynomials have no roots.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let n = match self.degree() {
            None => return Err(DoaError::domain("roots of the zero polynomial")),
            Some(0) => return Ok(Vec::new()),
            Some(n) => n,
        };

        // exact zeros at the origin are split off before iterating
        let zeros_at_origin = self.coeffs.iter().take_while(|c| **c == ZERO).count();
        let reduced = Self::new(self.coeffs[zeros_at_origin..].to_vec());
        let mut roots = vec![ZERO; zeros_at_origin];
        if reduced.degree().unwrap_or(0) == 0 {
            return Ok(roots);
        }
        roots.extend(aberth(&reduced));
        debug_assert_eq!(roots.len(), n);
        Ok(roots)
    }

    /// Quotient and remainder of long division by `divisor`.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self)> {
        let dd = divisor
            .degree()
            .ok_or_else(|| DoaError::domain("division by the zero polynomial"))?;
        let lead = divisor.coeffs[dd];
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Self::zero(), self.clone()));
        }
        let mut quot = vec![ZERO; rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * d;
            }
            rem[k + dd] = ZERO;
        }
        rem.truncate(dd);
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Drops leading coefficients whose modulus is at most `threshold`.
    fn trim_leading(&mut self, threshold: f64) {
        while self.coeffs.last().is_some_and(|c| c.norm() <= threshold) {
            self.coeffs.pop();
        }
    }
}

impl Mul for &ComplexPolynomial {
    type Output = ComplexPolynomial;

    fn mul(self, rhs: &ComplexPolynomial) -> ComplexPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return ComplexPolynomial::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        ComplexPolynomial::new(out)
    }
}

impl Add for &ComplexPolynomial {
    type Output = ComplexPolynomial;

    fn add(self, rhs: &ComplexPolynomial) -> ComplexPolynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let get = |v: &[Complex64], k: usize| v.get(k).copied().unwrap_or(ZERO);
        ComplexPolynomial::new((0..n).map(|k| get(&self.coeffs, k) + get(&rhs.coeffs, k)).collect())
    }
}

impl fmt::Debug for ComplexPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coeffs.iter()).finish()
    }
}

/// Euclidean norm of a coefficient vector.
pub fn poly_norm(p: &ComplexPolynomial) -> f64 {
    p.norm()
}

/// Banded Toeplitz matrix `B` with `n_cols` columns such that `B u` holds the
/// coefficients of `p(x) u(x)`.
pub fn convolution_matrix(p: &ComplexPolynomial, n_cols: usize) -> Result<DMatrix<Complex64>> {
    let m = p
        .degree()
        .ok_or_else(|| DoaError::domain("convolution matrix of the zero polynomial"))?;
    let mut b = DMatrix::zeros(m + n_cols, n_cols);
    for j in 0..n_cols {
        for (i, &c) in p.coeffs().iter().enumerate() {
            b[(i + j, j)] = c;
        }
    }
    Ok(b)
}

/// Monic GCD by the Euclidean remainder sequence.
///
/// Both inputs are scaled to unit norm and every nonzero remainder is
/// renormalized, so a remainder counts as zero once its norm drops to
/// `tol` relative to the pair it was computed from. Leading remainder
/// coefficients at or below `tol` are discarded before the next division.
pub fn euclid_gcd(f: &ComplexPolynomial, g: &ComplexPolynomial, tol: f64) -> Result<ComplexPolynomial> {
    if f.is_zero() || g.is_zero() {
        return Err(DoaError::domain("gcd requires nonzero polynomials"));
    }
    let mut a = f.scale(Complex64::from(1.0 / f.norm()));
    let mut b = g.scale(Complex64::from(1.0 / g.norm()));
    if a.degree() < b.degree() {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        if b.degree() == Some(0) {
            return Ok(ComplexPolynomial::one());
        }
        let (_, mut r) = a.div_rem(&b)?;
        if r.norm() <= tol {
            return Ok(b.monic());
        }
        r.trim_leading(tol);
        if r.is_zero() {
            return Ok(b.monic());
        }
        let rn = r.norm();
        a = b;
        b = r.scale(Complex64::from(1.0 / rn));
    }
}

/// Sum of absolute coefficients relative to the leading one; every root lies
/// within `1 + max |a_k / a_n|`.
fn cauchy_upper_bound(p: &ComplexPolynomial) -> f64 {
    let c = p.coeffs();
    let lead = c[c.len() - 1].norm();
    1.0 + c[..c.len() - 1].iter().map(|x| x.norm() / lead).fold(0.0, f64::max)
}

fn cauchy_lower_bound(p: &ComplexPolynomial) -> f64 {
    let c = p.coeffs();
    let c0 = c[0].norm();
    1.0 / (1.0 + c[1..].iter().map(|x| x.norm() / c0).fold(0.0, f64::max))
}

fn aberth(p: &ComplexPolynomial) -> Vec<Complex64> {
    let c = p.coeffs();
    let n = c.len() - 1;
    if n == 1 {
        return vec![-c[0] / c[1]];
    }

    // Start on a circle around the root centroid. The radius sits between
    // the Cauchy lower and upper root bounds and the angular offset breaks
    // the symmetry that stalls the iteration on real or even polynomials.
    let centroid = -c[n - 1] / (c[n] * n as f64);
    let radius = (cauchy_upper_bound(p) * cauchy_lower_bound(p)).sqrt();
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            centroid + Complex64::from_polar(radius, angle)
        })
        .collect();

    let mut done = vec![false; n];
    for _ in 0..ABERTH_MAX_ITER {
        let mut max_step: f64 = 0.0;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (v, dv) = p.eval_with_derivative(z[i]);
            if v == ZERO {
                done[i] = true;
                continue;
            }
            let ratio = v / dv;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d == ZERO {
                        ZERO
                    } else {
                        ONE / d
                    }
                })
                .sum();
            let step = ratio / (ONE - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            z[i] -= step;
            let s = step.norm();
            max_step = max_step.max(s);
            if s <= 1e-14 * z[i].norm().max(radius) {
                done[i] = true;
            }
        }
        if done.iter().all(|&d| d) || max_step <= 1e-14 * radius {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let p = ComplexPolynomial::from_real(&[1.0, 0.0, 1.0]);
        assert!(p.eval(c(0.0, 1.0)).norm() < 1e-15);
        let k = ComplexPolynomial::from_real(&[5.0]);
        assert_eq!(k.eval(c(3.0, -2.0)), c(5.0, 0.0));
        let q = ComplexPolynomial::from_real(&[1.0, -2.0, 0.0, 1.0]);
        assert!((q.eval(c(1.5, 0.0)) - c(1.375, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn from_roots_examples() {
        assert_eq!(ComplexPolynomial::from_roots(&[]), ComplexPolynomial::one());
        let p = ComplexPolynomial::from_roots(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(p.coeffs(), &[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn roots_of_x2_plus_1() {
        let mut r = ComplexPolynomial::from_real(&[1.0, 0.0, 1.0]).roots().unwrap();
        r.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((r[1] - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn triple_root() {
        let p = ComplexPolynomial::from_roots(&[c(2.0, 0.0); 3]);
        let r = p.roots().unwrap();
        assert_eq!(r.len(), 3);
        for z in r {
            assert!((z - c(2.0, 0.0)).norm() < 1e-4, "{z}");
        }
    }

    #[test]
    fn zero_polynomial_has_no_roots() {
        assert!(matches!(ComplexPolynomial::zero().roots(), Err(DoaError::Domain(_))));
        assert!(ComplexPolynomial::one().roots().unwrap().is_empty());
    }

    #[test]
    fn roots_at_origin_are_exact() {
        let p = ComplexPolynomial::from_real(&[0.0, 0.0, -1.0, 1.0]);
        let mut r = p.roots().unwrap();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert_eq!(r[0], ZERO);
        assert_eq!(r[1], ZERO);
        assert!((r[2] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn convolution_matrix_examples() {
        let p = ComplexPolynomial::new(vec![c(2.0, 1.0), c(-3.0, 0.5)]);
        let b = convolution_matrix(&p, 2).unwrap();
        assert_eq!(b.shape(), (3, 2));
        assert_eq!(b[(0, 0)], c(2.0, 1.0));
        assert_eq!(b[(1, 0)], c(-3.0, 0.5));
        assert_eq!(b[(2, 0)], ZERO);
        assert_eq!(b[(0, 1)], ZERO);
        assert_eq!(b[(1, 1)], c(2.0, 1.0));
        assert_eq!(b[(2, 1)], c(-3.0, 0.5));

        let id = convolution_matrix(&ComplexPolynomial::one(), 4).unwrap();
        assert_eq!(id, DMatrix::identity(4, 4));
        assert!(convolution_matrix(&ComplexPolynomial::zero(), 2).is_err());
    }

    #[test]
    fn euclid_examples() {
        let f = ComplexPolynomial::from_roots(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        let g = ComplexPolynomial::from_roots(&[c(1.0, 0.0), c(1.0, 0.0)]);
        let d = euclid_gcd(&f, &g, 1e-10).unwrap();
        assert_eq!(d.degree(), Some(1));
        assert!((d.coeffs()[0] - c(-1.0, 0.0)).norm() < 1e-12);

        let h = ComplexPolynomial::new(vec![c(0.3, 1.0), c(-2.0, 0.1), c(1.0, 1.0), c(0.5, 0.0)]);
        let d = euclid_gcd(&h, &h, 0.0).unwrap();
        assert_eq!(d.degree(), Some(3));
        for (x, y) in d.coeffs().iter().zip(h.monic().coeffs()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn norm_examples() {
        assert_eq!(ComplexPolynomial::zero().norm(), 0.0);
        let p = ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0]);
        assert!((poly_norm(&p) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn div_rem_reconstructs() {
        let a = ComplexPolynomial::new(vec![c(1.0, 2.0), c(0.0, -1.0), c(3.0, 0.0), c(1.0, 1.0)]);
        let b = ComplexPolynomial::new(vec![c(-1.0, 0.5), c(2.0, 0.0)]);
        let (q, r) = a.div_rem(&b).unwrap();
        let back = &(&q * &b) + &r;
        for (x, y) in back.coeffs().iter().zip(a.coeffs()) {
            assert!((x - y).norm() < 1e-13);
        }
        assert!(r.degree().unwrap_or(0) < 1);
    }

    #[test]
    fn array_vector_polynomial_vanishes_on_orthogonal_steering() {
        // q = (-conj(alpha), 1) is orthogonal to a = (1, alpha)
        let alpha = Complex64::from_polar(1.0, 0.7);
        let q = [-alpha.conj(), ONE];
        let a = [ONE, alpha];
        let inner: Complex64 = a.iter().zip(&q).map(|(x, y)| x.conj() * y).sum();
        assert!(inner.norm() < 1e-15);
        let p = ComplexPolynomial::from_array_vector(&q);
        assert!(p.eval(alpha).norm() < 1e-15);
    }
}
