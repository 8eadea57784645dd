use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{gauss_legendre_unit, local_bspline_values, SplineSpace};
use crate::error::{PicError, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Mass { degree: usize },
    Derivative,
    DerivativeTranspose,
    Composite,
}

/// Banded circulant matrix with `A[m, m + j] = c_j` (indices modulo `n`).
#[derive(Clone, Debug, PartialEq)]
pub struct CirculantOperator<T> {
    n: usize,
    lo: isize,
    coeffs: Vec<T>,
    kind: OperatorKind,
}

/// Eigenvalues `λ_k = Σ_j c_j exp(2πi k j / n)` of a circulant operator.
///
/// With this convention the forward DFT of `A x` equals `λ_k` times the
/// forward DFT of `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDiagonal<T> {
    pub eigenvalues: Vec<Complex<T>>,
}

impl<T: Real> CirculantOperator<T> {
    /// Operator from its band: `coeffs[i]` is the coefficient at offset `lo + i`.
    pub fn from_band(n: usize, lo: isize, coeffs: Vec<T>, kind: OperatorKind) -> Self {
        assert!(n > 0 && !coeffs.is_empty());
        Self { n, lo, coeffs, kind }
    }

    /// Mass matrix `c_j = ∫ N(x) N(x - j dx) dx` of the periodic splines of degree `q`.
    pub fn mass(degree: usize, dx: T, n: usize) -> Self {
        let q = degree;
        let rule = gauss_legendre_unit::<T>(q + 1);
        let mut coeffs = vec![T::zero(); 2 * q + 1];
        for j in 0..=q {
            let mut c = T::zero();
            // Overlap of the spline starting at cell 0 with the one starting at
            // cell j, cell by cell over the common support.
            for cell in j..=q {
                for &(t, w) in &rule {
                    let vals = local_bspline_values(q, t);
                    c += w * vals[q - cell] * vals[q + j - cell];
                }
            }
            c *= dx;
            coeffs[q + j] = c;
            coeffs[q - j] = c;
        }
        Self::from_band(n, -(q as isize), coeffs, OperatorKind::Mass { degree: q })
    }

    /// Discrete derivative mapping 0-form to 1-form coefficients:
    /// `(D c)_k = (c_k - c_{k-1}) / dx`.
    pub fn derivative(space: &SplineSpace<T>) -> Self {
        let inv = T::one() / space.dx();
        Self::from_band(space.n_cells(), -1, vec![-inv, inv], OperatorKind::Derivative)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    /// Offsets and coefficients of the band.
    pub fn stencil(&self) -> impl Iterator<Item = (isize, T)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (self.lo + i as isize, c))
    }

    /// Coefficient at offset `j` (zero outside the band).
    pub fn coefficient(&self, j: isize) -> T {
        let i = j - self.lo;
        if i >= 0 && (i as usize) < self.coeffs.len() {
            self.coeffs[i as usize]
        } else {
            T::zero()
        }
    }

    pub fn row_sum(&self) -> T {
        self.coeffs.iter().copied().sum()
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let n = self.n as isize;
        for (m, ym) in y.iter_mut().enumerate() {
            let mut s = T::zero();
            let mut idx = (m as isize + self.lo).rem_euclid(n) as usize;
            for &c in &self.coeffs {
                s += c * x[idx];
                idx += 1;
                if idx == self.n {
                    idx = 0;
                }
            }
            *ym = s;
        }
    }

    pub fn transpose(&self) -> Self {
        let hi = self.lo + self.coeffs.len() as isize - 1;
        let coeffs = self.coeffs.iter().rev().copied().collect();
        let kind = match self.kind {
            OperatorKind::Derivative => OperatorKind::DerivativeTranspose,
            OperatorKind::DerivativeTranspose => OperatorKind::Derivative,
            k @ OperatorKind::Mass { .. } => k,
            OperatorKind::Composite => OperatorKind::Composite,
        };
        Self::from_band(self.n, -hi, coeffs, kind)
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut coeffs = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self::from_band(self.n, self.lo + other.lo, coeffs, OperatorKind::Composite)
    }

    /// `self + scale · other`.
    pub fn add_scaled(&self, scale: T, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let lo = self.lo.min(other.lo);
        let hi = (self.lo + self.coeffs.len() as isize).max(other.lo + other.coeffs.len() as isize);
        let coeffs = (lo..hi)
            .map(|j| self.coefficient(j) + scale * other.coefficient(j))
            .collect();
        Self::from_band(self.n, lo, coeffs, OperatorKind::Composite)
    }

    /// Dense row-major matrix (for diagnostics and tests).
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut a = vec![vec![T::zero(); self.n]; self.n];
        let n = self.n as isize;
        for (m, row) in a.iter_mut().enumerate() {
            for (j, c) in self.stencil() {
                let col = (m as isize + j).rem_euclid(n) as usize;
                row[col] += c;
            }
        }
        a
    }

    pub fn spectral(&self) -> SpectralDiagonal<T> {
        let n = self.n;
        let two_pi_over_n = T::lit(2.0) * T::PI() / T::from_count(n);
        let eigenvalues = (0..n)
            .map(|k| {
                let mut s = Complex::new(T::zero(), T::zero());
                for (j, c) in self.stencil() {
                    let phase = ((k as isize * j).rem_euclid(n as isize)) as usize;
                    let ang = two_pi_over_n * T::from_count(phase);
                    s += Complex::new(c * ang.cos(), c * ang.sin());
                }
                s
            })
            .collect();
        SpectralDiagonal { eigenvalues }
    }
}

impl<T: Real> SpectralDiagonal<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Real parts, for operators known to be symmetric.
    pub fn real_parts(&self) -> Vec<T> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }
}

/// Cached forward/inverse FFT plans for one transform length.
#[derive(Clone)]
pub struct FftPair<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for FftPair<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPair").field("n", &self.n).finish()
    }
}

impl<T: Real> FftPair<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self, x: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform including the `1/n` normalization; returns real parts.
    pub fn inverse_real(&self, mut buf: Vec<Complex<T>>) -> Vec<T> {
        self.inverse.process(&mut buf);
        let scale = T::one() / T::from_count(self.n);
        buf.into_iter().map(|z| z.re * scale).collect()
    }

    /// Multiplies by the diagonal `eigs` in Fourier space.
    pub fn apply_diagonal(&self, eigs: &[Complex<T>], x: &[T]) -> Vec<T> {
        let mut xf = self.forward(x);
        for (z, &l) in xf.iter_mut().zip(eigs) {
            *z *= l;
        }
        self.inverse_real(xf)
    }

    /// Solves the circulant system with eigenvalues `eigs`.
    ///
    /// A vanishing `k = 0` eigenvalue is tolerated when `zero_mean_fix` is set
    /// and the right-hand side has zero mean; the solution then has zero mean.
    pub fn solve_diagonal(&self, eigs: &[Complex<T>], rhs: &[T], zero_mean_fix: bool) -> Result<Vec<T>> {
        assert_eq!(eigs.len(), self.n);
        assert_eq!(rhs.len(), self.n);
        let scale = eigs.iter().fold(T::zero(), |m, z| m.max(z.norm()));
        let eps = T::epsilon() * T::lit(64.0) * T::from_count(self.n);
        let singular = |z: &Complex<T>| z.norm() <= eps * scale;
        if scale == T::zero() {
            return Err(PicError::SingularOperator("operator is zero".into()));
        }
        if let Some(k) = eigs.iter().skip(1).position(singular) {
            return Err(PicError::SingularOperator(format!(
                "eigenvalue of mode {} vanishes",
                k + 1
            )));
        }
        let mut xf = self.forward(rhs);
        if singular(&eigs[0]) {
            if !zero_mean_fix {
                return Err(PicError::SingularOperator(
                    "mode 0 eigenvalue vanishes and no zero-mean fix was requested".into(),
                ));
            }
            let mean = xf[0].re / T::from_count(self.n);
            let tol = mean_tolerance::<T>() * crate::scalar::norm_inf(rhs).max(T::min_positive_value());
            if mean.abs() > tol {
                return Err(PicError::SingularOperator(format!(
                    "right-hand side mean {mean} is not zero"
                )));
            }
            xf[0] = Complex::new(T::zero(), T::zero());
            for (z, &l) in xf.iter_mut().zip(eigs).skip(1) {
                *z /= l;
            }
        } else {
            for (z, &l) in xf.iter_mut().zip(eigs) {
                *z /= l;
            }
        }
        Ok(self.inverse_real(xf))
    }
}

/// Relative tolerance for treating a right-hand-side mean as zero.
pub(crate) fn mean_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

/// Solves `op · x = rhs` exactly in Fourier space.
pub fn circulant_solve<T: Real>(op: &CirculantOperator<T>, rhs: &[T], zero_mean_fix: bool) -> Result<Vec<T>> {
    let fft = FftPair::new(op.n());
    fft.solve_diagonal(&op.spectral().eigenvalues, rhs, zero_mean_fix)
}
