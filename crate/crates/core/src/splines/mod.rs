//! Periodic uniform B-splines and the circulant operators built on them.
//!
//! Basis functions are indexed by the leftmost cell of their support, taken
//! modulo the number of cells. The 0-form space has degree `p`; the 1-form
//! space has degree `p - 1` on the same grid, so that differentiation maps
//! the first exactly into the second.

mod circulant;
mod quadrature;

pub(crate) use circulant::mean_tolerance;
pub use circulant::{circulant_solve, CirculantOperator, FftPair, OperatorKind, SpectralDiagonal};
pub use quadrature::gauss_legendre_unit;

use arrayvec::ArrayVec;

use crate::error::{PicError, Result};
use crate::scalar::Real;

/// Largest supported spline degree.
pub const MAX_DEGREE: usize = 8;

/// Fixed-capacity storage for the `degree + 1` nonzero basis values at a point.
pub type LocalValues<T> = ArrayVec<T, { MAX_DEGREE + 1 }>;

/// Selects the 0-form (degree `p`) or 1-form (degree `p - 1`) space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Form {
    Zero,
    One,
}

/// Nonzero basis values at a point: `values[j]` belongs to dof `(first_dof + j) mod n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisValues<T> {
    pub first_dof: usize,
    pub values: LocalValues<T>,
}

impl<T: Real> BasisValues<T> {
    /// Dof index of the `j`-th local value.
    pub fn dof(&self, j: usize, n: usize) -> usize {
        let k = self.first_dof + j;
        if k >= n {
            k - n
        } else {
            k
        }
    }

    /// Sum of `coeffs[dof] * value` over the local values.
    pub fn dot(&self, coeffs: &[T]) -> T {
        let n = coeffs.len();
        let mut s = T::zero();
        for (j, &v) in self.values.iter().enumerate() {
            s += coeffs[self.dof(j, n)] * v;
        }
        s
    }

    /// `target[dof] += scale * value` for every local value.
    pub fn scatter(&self, scale: T, target: &mut [T]) {
        let n = target.len();
        for (j, &v) in self.values.iter().enumerate() {
            let k = self.dof(j, n);
            target[k] += scale * v;
        }
    }
}

/// Periodic uniform spline space on `[0, length)` with `n_cells` cells.
#[derive(Clone, Debug)]
pub struct SplineSpace<T> {
    degree: usize,
    n_cells: usize,
    length: T,
    dx: T,
    inv_dx: T,
    path_rule_zero: Vec<(T, T)>,
    path_rule_one: Vec<(T, T)>,
}

impl<T: Real> SplineSpace<T> {
    /// Builds the space; `degree` is the 0-form degree `p`.
    pub fn new(degree: usize, n_cells: usize, length: T) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(PicError::InvalidSpace(format!(
                "degree must be in 1..={MAX_DEGREE}, got {degree}"
            )));
        }
        if n_cells < 2 * degree + 1 {
            return Err(PicError::InvalidSpace(format!(
                "need at least {} cells for degree {degree}, got {n_cells}",
                2 * degree + 1
            )));
        }
        if !(length.is_finite() && length > T::zero()) {
            return Err(PicError::InvalidSpace(format!("length must be positive, got {length}")));
        }
        let dx = length / T::from_count(n_cells);
        Ok(Self {
            degree,
            n_cells,
            length,
            dx,
            inv_dx: T::one() / dx,
            path_rule_zero: gauss_legendre_unit(degree / 2 + 1),
            path_rule_one: gauss_legendre_unit((degree - 1) / 2 + 1),
        })
    }

    /// 0-form degree `p`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Polynomial degree of the given form space.
    pub fn form_degree(&self, form: Form) -> usize {
        match form {
            Form::Zero => self.degree,
            Form::One => self.degree - 1,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    /// Maps `x` periodically into `[0, length)`.
    pub fn wrap(&self, x: T) -> T {
        if x >= T::zero() && x < self.length {
            return x;
        }
        let y = x - self.length * (x / self.length).floor();
        if y >= self.length || y < T::zero() {
            T::zero()
        } else {
            y
        }
    }

    /// Unwrapped cell index and local coordinate `t` in `[0, 1)` of `x`.
    pub fn locate(&self, x: T) -> (i64, T) {
        locate_scaled(x * self.inv_dx)
    }

    fn first_dof(&self, cell: i64, deg: usize) -> usize {
        (cell - deg as i64).rem_euclid(self.n_cells as i64) as usize
    }

    /// Nonzero basis functions of `form` at `x` (any real `x`, wrapped periodically).
    pub fn basis_values(&self, form: Form, x: T) -> BasisValues<T> {
        let deg = self.form_degree(form);
        let (cell, t) = self.locate(x);
        BasisValues {
            first_dof: self.first_dof(cell, deg),
            values: local_bspline_values(deg, t),
        }
    }

    /// First derivatives of the nonzero basis functions of `form` at `x`.
    pub fn basis_derivatives(&self, form: Form, x: T) -> BasisValues<T> {
        let deg = self.form_degree(form);
        let (cell, t) = self.locate(x);
        let mut values = LocalValues::new();
        if deg == 0 {
            values.push(T::zero());
        } else {
            let lower = local_bspline_values(deg - 1, t);
            for j in 0..=deg {
                let left = if j > 0 { lower[j - 1] } else { T::zero() };
                let right = if j < deg { lower[j] } else { T::zero() };
                values.push((left - right) * self.inv_dx);
            }
        }
        BasisValues {
            first_dof: self.first_dof(cell, deg),
            values,
        }
    }

    /// Evaluates `Σ coeffs[i] Λ_i(x)` in the given form space.
    pub fn eval(&self, form: Form, coeffs: &[T], x: T) -> T {
        self.basis_values(form, x).dot(coeffs)
    }

    /// Integral `∫₀¹ Λ_j(x_start + τ d) dτ` for every basis function touched
    /// by the segment, merged by dof and sorted by index.
    pub fn line_integral_basis(&self, form: Form, x_start: T, d: T) -> Vec<(usize, T)> {
        let mut dense = vec![T::zero(); self.n_cells];
        let mut touched = vec![false; self.n_cells];
        self.for_each_path_segment(form, x_start, d, |bv| {
            let n = dense.len();
            for (j, &v) in bv.values.iter().enumerate() {
                let k = bv.dof(j, n);
                dense[k] += v;
                touched[k] = true;
            }
        });
        (0..self.n_cells)
            .filter(|&k| touched[k])
            .map(|k| (k, dense[k]))
            .collect()
    }

    /// Calls `f` once per cell crossed by the straight path from `x_start`
    /// to `x_start + d` with the weighted local basis integrals of that
    /// segment. Summing the calls gives `∫₀¹ Λ(x_start + τ d) dτ`.
    ///
    /// Each segment uses `⌈(deg + 1) / 2⌉` Gauss–Legendre points, which is
    /// exact for the piecewise-polynomial integrand. For `d == 0` the single
    /// call carries the point values at `x_start`.
    pub fn for_each_path_segment<F>(&self, form: Form, x_start: T, d: T, mut f: F)
    where
        F: FnMut(&BasisValues<T>),
    {
        let deg = self.form_degree(form);
        let u0 = x_start * self.inv_dx;
        let u1 = (x_start + d) * self.inv_dx;
        if u0 == u1 {
            f(&self.basis_values(form, x_start));
            return;
        }
        let (lo, hi) = if u0 < u1 { (u0, u1) } else { (u1, u0) };
        let span = hi - lo;
        let rule = match form {
            Form::Zero => &self.path_rule_zero,
            Form::One => &self.path_rule_one,
        };
        let (mut cell, mut a) = locate_scaled(lo);
        let mut a_abs = lo;
        loop {
            let cell_end = T::from_i64(cell + 1).expect("cell index representable");
            let b_abs = if hi < cell_end { hi } else { cell_end };
            let b = b_abs - T::from_i64(cell).expect("cell index representable");
            let frac = (b_abs - a_abs) / span;
            if frac > T::zero() {
                let mut acc = LocalValues::<T>::new();
                for _ in 0..=deg {
                    acc.push(T::zero());
                }
                for &(node, weight) in rule {
                    let t = a + (b - a) * node;
                    let vals = local_bspline_values(deg, t);
                    for (s, v) in acc.iter_mut().zip(vals) {
                        *s += weight * v;
                    }
                }
                for s in acc.iter_mut() {
                    *s *= frac;
                }
                f(&BasisValues {
                    first_dof: self.first_dof(cell, deg),
                    values: acc,
                });
            }
            if b_abs >= hi {
                break;
            }
            cell += 1;
            a = T::zero();
            a_abs = cell_end;
        }
    }
}

/// Cell index and local coordinate of a position given in cell units.
fn locate_scaled<T: Real>(u: T) -> (i64, T) {
    let c = u.floor();
    let mut t = u - c;
    let mut cell = c.to_i64().expect("position within integer range");
    if t >= T::one() {
        t = T::zero();
        cell += 1;
    }
    (cell, t)
}

/// Values of the `deg + 1` uniform B-splines that are nonzero on a cell, at
/// local coordinate `t ∈ [0, 1]`; entry `j` belongs to the spline whose
/// support starts `deg - j` cells to the left.
pub fn local_bspline_values<T: Real>(deg: usize, t: T) -> LocalValues<T> {
    let mut vals = LocalValues::new();
    vals.push(T::one());
    for k in 1..=deg {
        let kt = T::from_count(k);
        let mut next = LocalValues::new();
        for j in 0..=k {
            let left = if j > 0 {
                (t + T::from_count(k - j)) * vals[j - 1]
            } else {
                T::zero()
            };
            let right = if j < k {
                (T::from_count(j + 1) - t) * vals[j]
            } else {
                T::zero()
            };
            next.push((left + right) / kt);
        }
        vals = next;
    }
    vals
}
