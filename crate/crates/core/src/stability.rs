//! Von Neumann analysis of the field solvers.
//!
//! For the explicit curl step the Fourier mode with angle `θ` is stable iff
//! `α² r(θ) ≤ 2`, where `α = dt/dx` and
//! `r(θ) = (λ^{(p-1)}(θ) / λ^{(p)}(θ)) (1 - cos θ)` is built from the mass
//! symbols of the two spline spaces.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fields::{FemOperators, FieldState};
use crate::scalar::Real;
use crate::splines::{CirculantOperator, SplineSpace};

/// Mass-matrix symbol `c₀ + 2 Σ c_j cos(jθ)` of degree-`q` splines with `dx = 1`.
pub fn mass_symbol(q: usize, theta: f64) -> f64 {
    let m = CirculantOperator::<f64>::mass(q, 1.0, 2 * q + 1);
    let mut s = m.coefficient(0);
    for j in 1..=q {
        s += 2.0 * m.coefficient(j as isize) * (j as f64 * theta).cos();
    }
    s
}

/// `r(θ)` for 0-form degree `p`.
pub fn curl_symbol_ratio(p: usize, theta: f64) -> f64 {
    mass_symbol(p - 1, theta) / mass_symbol(p, theta) * (1.0 - theta.cos())
}

/// Maximizer and maximum of `r` on `(0, π]`, found on a uniform grid of
/// `10⁵` points and refined by golden-section search.
pub fn curl_ratio_max(p: usize) -> (f64, f64) {
    let pi = std::f64::consts::PI;
    let m = 100_000;
    let h = pi / m as f64;
    let mut best = (pi, curl_symbol_ratio(p, pi));
    for i in 1..m {
        let th = i as f64 * h;
        let r = curl_symbol_ratio(p, th);
        if r > best.1 {
            best = (th, r);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(0.0), (best.0 + h).min(pi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if curl_symbol_ratio(p, c) >= curl_symbol_ratio(p, d) {
            b = d;
        } else {
            a = c;
        }
    }
    let th = 0.5 * (a + b);
    let r = curl_symbol_ratio(p, th);
    if r >= best.1 {
        (th, r)
    } else {
        best
    }
}

/// Largest stable `dt/dx` of the explicit curl step for 0-form degree `p`.
pub fn maxwell_alpha_max(p: usize) -> f64 {
    (2.0 / curl_ratio_max(p).1).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LangmuirScheme {
    Explicit,
    Implicit,
}

/// Roots of `ξ² - 2 q ξ + 1 = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplificationPair {
    pub xi_plus: Complex<f64>,
    pub xi_minus: Complex<f64>,
}

impl AmplificationPair {
    pub fn from_q(q: f64) -> Self {
        if q.abs() > 1.0 {
            // Real roots: take the larger one without cancellation, the
            // other from ξ₊ξ₋ = 1.
            let big = q + q.signum() * (q * q - 1.0).sqrt();
            let (hi, lo) = (Complex::new(big, 0.0), Complex::new(1.0 / big, 0.0));
            let (xi_plus, xi_minus) = if q > 0.0 { (hi, lo) } else { (lo, hi) };
            return Self { xi_plus, xi_minus };
        }
        let disc = Complex::new(q * q - 1.0, 0.0).sqrt();
        Self {
            xi_plus: Complex::new(q, 0.0) + disc,
            xi_minus: Complex::new(q, 0.0) - disc,
        }
    }

    pub fn max_modulus(&self) -> f64 {
        self.xi_plus.norm().max(self.xi_minus.norm())
    }
}

/// Amplification factors of a Langmuir oscillation with `z = C ω_pe dt`.
///
/// With `ξ = exp(i ω dt)`: the explicit dispersion relation
/// `4 sin²(ω dt/2) = z²` gives `q = 1 - z²/2`; the implicit relation
/// `4 sin²(ω dt/2) = z² cos(ω dt/2)` gives `q = 2c² - 1` where `c` is the
/// root in `(0, 1)` of `4c² + z² c - 4 = 0`.
pub fn langmuir_amplification(scheme: LangmuirScheme, z: f64) -> AmplificationPair {
    let q = match scheme {
        LangmuirScheme::Explicit => 1.0 - 0.5 * z * z,
        LangmuirScheme::Implicit => {
            let z2 = z * z;
            let c = (-z2 + (z2 * z2 + 64.0).sqrt()) / 8.0;
            2.0 * c * c - 1.0
        }
    };
    AmplificationPair::from_q(q)
}

/// Field-only time steppers of the curl pair `(e2, b3)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurlStepper {
    /// `H_B(dt/2) H_E(dt) H_B(dt/2)`.
    ExplicitStrang,
    /// `H_E(dt) H_B(dt)`.
    ExplicitLie,
    /// Implicit midpoint (average vector field).
    Implicit,
}

pub fn apply_curl_stepper<T: Real>(ops: &FemOperators<T>, state: &mut FieldState<T>, dt: T, stepper: CurlStepper) {
    let h = dt * T::lit(0.5);
    match stepper {
        CurlStepper::ExplicitStrang => {
            ops.ampere_curl_step(state, h);
            ops.faraday_step(state, dt);
            ops.ampere_curl_step(state, h);
        }
        CurlStepper::ExplicitLie => {
            ops.faraday_step(state, dt);
            ops.ampere_curl_step(state, dt);
        }
        CurlStepper::Implicit => ops.curl_avf_step(state, dt),
    }
}

/// 2×2 transfer matrix of one step acting on the amplitudes of Fourier mode
/// `k` of `(e2, b3)`, measured by running the stepper on the real and
/// imaginary parts of the mode and projecting back.
#[allow(clippy::needless_range_loop)]
pub fn curl_transfer_matrix(
    ops: &FemOperators<f64>,
    k: usize,
    dt: f64,
    stepper: CurlStepper,
) -> [[Complex<f64>; 2]; 2] {
    let n = ops.n();
    let phase = |m: usize| 2.0 * std::f64::consts::PI * ((k * m) % n) as f64 / n as f64;
    let cos: Vec<f64> = (0..n).map(|m| phase(m).cos()).collect();
    let sin: Vec<f64> = (0..n).map(|m| phase(m).sin()).collect();
    let mut out = [[Complex::new(0.0, 0.0); 2]; 2];
    for col in 0..2 {
        let run = |v: &Vec<f64>| {
            let mut s = FieldState::zeros(n);
            if col == 0 {
                s.e2.clone_from(v);
            } else {
                s.b3.clone_from(v);
            }
            apply_curl_stepper(ops, &mut s, dt, stepper);
            s
        };
        let re = run(&cos);
        let im = run(&sin);
        for (row, (a, b)) in [(&re.e2, &im.e2), (&re.b3, &im.b3)].into_iter().enumerate() {
            let mut acc = Complex::new(0.0, 0.0);
            for m in 0..n {
                let val = Complex::new(a[m], b[m]);
                acc += val * Complex::new(cos[m], -sin[m]);
            }
            out[row][col] = acc / n as f64;
        }
    }
    out
}

/// Largest eigenvalue modulus of a 2×2 complex matrix.
pub fn spectral_radius(a: &[[Complex<f64>; 2]; 2]) -> f64 {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let disc = (tr * tr / 4.0 - det).sqrt();
    let l1 = tr / 2.0 + disc;
    let l2 = tr / 2.0 - disc;
    l1.norm().max(l2.norm())
}

/// Largest `dt` in `[0, 2 dx]` for which `steps` steps of `stepper` keep the
/// field energy growth below 10%, found by bisection.
///
/// The initial fields are random combinations of the three lowest Fourier
/// modes; round-off seeds the unstable grid modes above the threshold.
pub fn empirical_stability_scan(
    p: usize,
    n: usize,
    length: f64,
    steps: usize,
    stepper: CurlStepper,
    seed: u64,
) -> Result<f64> {
    let ops = FemOperators::new(SplineSpace::new(p, n, length)?);
    let dx = ops.space().dx();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut init = FieldState::zeros(n);
    for mode in 1..=3usize {
        let (a, phi_a, b, phi_b): (f64, f64, f64, f64) = (rng.random(), rng.random(), rng.random(), rng.random());
        for i in 0..n {
            let th = 2.0 * std::f64::consts::PI * (mode * i) as f64 / n as f64;
            init.e2[i] += a * (th + 6.3 * phi_a).cos();
            init.b3[i] += b * (th + 6.3 * phi_b).cos();
        }
    }
    let e0 = ops.field_energy(&init).total();
    let stable = |dt: f64| {
        let mut s = init.clone();
        for _ in 0..steps {
            apply_curl_stepper(&ops, &mut s, dt, stepper);
            let e = ops.field_energy(&s).total();
            if !(e.is_finite() && e < 1.1 * e0) {
                return false;
            }
        }
        true
    };
    let (mut lo, mut hi) = (0.0, 2.0 * dx);
    if stable(hi) {
        return Ok(hi);
    }
    while hi - lo > 1e-5 * dx {
        let mid = 0.5 * (lo + hi);
        if stable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
