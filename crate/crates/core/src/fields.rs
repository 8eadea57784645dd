//! Electromagnetic field state of the 1d2v reduction.
//!
//! `e1` and `b3` are 1-form coefficients (degree `p - 1`), `e2` is a 0-form
//! coefficient vector (degree `p`). The curl pair reads
//! `M0 ė2 = Dᵀ M1 b3`, `ḃ3 = -D e2`, and the weak Gauss law is
//! `-Dᵀ M1 e1 = ρ` with `ρ_i = Σ q w Λ⁰_i(x)`.

use num_complex::Complex;

use crate::error::{PicError, Result};
use crate::scalar::{dot, norm_inf, Real};
use crate::splines::{gauss_legendre_unit, local_bspline_values, CirculantOperator, FftPair, Form, SplineSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldComponent {
    E1,
    E2,
    B3,
}

impl FieldComponent {
    pub fn form(self) -> Form {
        match self {
            FieldComponent::E2 => Form::Zero,
            FieldComponent::E1 | FieldComponent::B3 => Form::One,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldState<T> {
    pub e1: Vec<T>,
    pub e2: Vec<T>,
    pub b3: Vec<T>,
}

impl<T: Real> FieldState<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            e1: vec![T::zero(); n],
            e2: vec![T::zero(); n],
            b3: vec![T::zero(); n],
        }
    }

    pub fn component(&self, which: FieldComponent) -> &[T] {
        match which {
            FieldComponent::E1 => &self.e1,
            FieldComponent::E2 => &self.e2,
            FieldComponent::B3 => &self.b3,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.e1.iter().chain(&self.e2).chain(&self.b3).all(|v| v.is_finite())
    }
}

/// Field energies `½ cᵀ M c` per component.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldEnergy<T> {
    pub e1_energy: T,
    pub e2_energy: T,
    pub b3_energy: T,
}

impl<T: Real> FieldEnergy<T> {
    pub fn total(&self) -> T {
        self.e1_energy + self.e2_energy + self.b3_energy
    }
}

/// Mass, derivative and Poisson operators of one spline space together with
/// their spectra and cached FFT plans.
#[derive(Clone, Debug)]
pub struct FemOperators<T: Real> {
    space: SplineSpace<T>,
    m0: CirculantOperator<T>,
    m1: CirculantOperator<T>,
    d: CirculantOperator<T>,
    dt_m1: CirculantOperator<T>,
    poisson: CirculantOperator<T>,
    m0_eigs: Vec<Complex<T>>,
    m1_eigs: Vec<Complex<T>>,
    poisson_eigs: Vec<Complex<T>>,
    fft: FftPair<T>,
}

impl<T: Real> FemOperators<T> {
    pub fn new(space: SplineSpace<T>) -> Self {
        let n = space.n_cells();
        let m0 = CirculantOperator::mass(space.degree(), space.dx(), n);
        let m1 = CirculantOperator::mass(space.degree() - 1, space.dx(), n);
        let d = CirculantOperator::derivative(&space);
        let dt_m1 = d.transpose().compose(&m1);
        let poisson = dt_m1.compose(&d);
        let real = |op: &CirculantOperator<T>| {
            op.spectral()
                .eigenvalues
                .into_iter()
                .map(|z| Complex::new(z.re, T::zero()))
                .collect::<Vec<_>>()
        };
        Self {
            m0_eigs: real(&m0),
            m1_eigs: real(&m1),
            poisson_eigs: real(&poisson),
            fft: FftPair::new(n),
            space,
            m0,
            m1,
            d,
            dt_m1,
            poisson,
        }
    }

    pub fn space(&self) -> &SplineSpace<T> {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.n_cells()
    }

    pub fn mass(&self, form: Form) -> &CirculantOperator<T> {
        match form {
            Form::Zero => &self.m0,
            Form::One => &self.m1,
        }
    }

    pub fn mass_eigenvalues(&self, form: Form) -> &[Complex<T>] {
        match form {
            Form::Zero => &self.m0_eigs,
            Form::One => &self.m1_eigs,
        }
    }

    /// Derivative `D` from 0-forms to 1-forms.
    pub fn derivative(&self) -> &CirculantOperator<T> {
        &self.d
    }

    /// `Dᵀ M1`, mapping 1-form coefficients to 0-form duals.
    pub fn weak_derivative(&self) -> &CirculantOperator<T> {
        &self.dt_m1
    }

    /// `Dᵀ M1 D`.
    pub fn poisson(&self) -> &CirculantOperator<T> {
        &self.poisson
    }

    pub fn fft(&self) -> &FftPair<T> {
        &self.fft
    }

    /// `M⁻¹ rhs` for the mass matrix of `form`, solved in Fourier space.
    pub fn solve_mass(&self, form: Form, rhs: &[T]) -> Vec<T> {
        self.fft
            .solve_diagonal(self.mass_eigenvalues(form), rhs, false)
            .expect("mass matrices are positive definite")
    }

    /// Charge-density residual `‖Dᵀ M1 e1 + ρ‖∞` of the weak Gauss law `-Dᵀ M1 e1 = ρ`.
    pub fn gauss_residual(&self, e1: &[T], rho: &[T]) -> T {
        let div = self.dt_m1.apply(e1);
        div.iter().zip(rho).fold(T::zero(), |m, (&a, &b)| m.max((a + b).abs()))
    }

    pub fn field_energy(&self, state: &FieldState<T>) -> FieldEnergy<T> {
        let half = T::lit(0.5);
        FieldEnergy {
            e1_energy: half * dot(&state.e1, &self.m1.apply(&state.e1)),
            e2_energy: half * dot(&state.e2, &self.m0.apply(&state.e2)),
            b3_energy: half * dot(&state.b3, &self.m1.apply(&state.b3)),
        }
    }

    /// Solves `Dᵀ M1 D φ = ρ` in the zero-mean gauge and returns `e1 = -D φ`.
    pub fn poisson_init(&self, rho: &[T]) -> Result<Vec<T>> {
        let n = T::from_count(rho.len());
        let mean = rho.iter().copied().sum::<T>() / n;
        let tol = crate::splines::mean_tolerance::<T>() * norm_inf(rho);
        if mean.abs() > tol {
            return Err(PicError::NetCharge {
                mean: mean.to_f64_lossy(),
                tolerance: tol.to_f64_lossy(),
            });
        }
        let centered: Vec<T> = rho.iter().map(|&r| r - mean).collect();
        let phi = self.fft.solve_diagonal(&self.poisson_eigs, &centered, true)?;
        Ok(self.d.apply(&phi).into_iter().map(|v| -v).collect())
    }

    /// Average-vector-field (implicit midpoint) step of the curl pair.
    ///
    /// The Schur system `(M0 + dt²/4 Dᵀ M1 D) e2⁺ = (M0 - dt²/4 Dᵀ M1 D) e2 + dt Dᵀ M1 b3`
    /// is diagonal in Fourier space. `e1` is left untouched.
    pub fn curl_avf_step(&self, state: &mut FieldState<T>, dt: T) {
        let q = dt * dt / T::lit(4.0);
        let m0e = self.m0.apply(&state.e2);
        let pe = self.poisson.apply(&state.e2);
        let wb = self.dt_m1.apply(&state.b3);
        let rhs: Vec<T> = (0..self.n()).map(|i| m0e[i] - q * pe[i] + dt * wb[i]).collect();
        let schur: Vec<Complex<T>> = self
            .m0_eigs
            .iter()
            .zip(&self.poisson_eigs)
            .map(|(a, b)| Complex::new(a.re + q * b.re, T::zero()))
            .collect();
        let e2_new = self
            .fft
            .solve_diagonal(&schur, &rhs, false)
            .expect("Schur complement is positive definite");
        let sum: Vec<T> = state.e2.iter().zip(&e2_new).map(|(&a, &b)| a + b).collect();
        let de = self.d.apply(&sum);
        let half_dt = dt * T::lit(0.5);
        for (b, v) in state.b3.iter_mut().zip(de) {
            *b -= half_dt * v;
        }
        state.e2 = e2_new;
    }

    /// Explicit Faraday update `b3 ← b3 - dt D e2`.
    pub fn faraday_step(&self, state: &mut FieldState<T>, dt: T) {
        let de = self.d.apply(&state.e2);
        for (b, v) in state.b3.iter_mut().zip(de) {
            *b -= dt * v;
        }
    }

    /// Explicit Ampère curl update `e2 ← e2 + dt M0⁻¹ Dᵀ M1 b3`.
    pub fn ampere_curl_step(&self, state: &mut FieldState<T>, dt: T) {
        let rhs = self.dt_m1.apply(&state.b3);
        let inc = self.solve_mass(Form::Zero, &rhs);
        for (e, v) in state.e2.iter_mut().zip(inc) {
            *e += dt * v;
        }
    }

    /// L² projection of `f` onto the given form space.
    pub fn l2_project<F: Fn(T) -> T>(&self, form: Form, f: F) -> Vec<T> {
        let space = &self.space;
        let deg = space.form_degree(form);
        let n = space.n_cells();
        let rule = gauss_legendre_unit::<T>(deg + 4);
        let mut rhs = vec![T::zero(); n];
        for cell in 0..n {
            for &(t, w) in &rule {
                let x = (T::from_count(cell) + t) * space.dx();
                let fx = f(x) * w * space.dx();
                let vals = local_bspline_values(deg, t);
                for (j, v) in vals.into_iter().enumerate() {
                    let k = (cell + n + j - deg) % n;
                    rhs[k] += fx * v;
                }
            }
        }
        self.solve_mass(form, &rhs)
    }
}

/// Evaluates one field component at `x`.
pub fn eval_field<T: Real>(space: &SplineSpace<T>, state: &FieldState<T>, which: FieldComponent, x: T) -> T {
    space.eval(which.form(), state.component(which), x)
}
