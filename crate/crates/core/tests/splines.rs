use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use proptest::prelude::*;
use vmpic::splines::{circulant_solve, CirculantOperator, Form, OperatorKind, SplineSpace};
use vmpic::PicError;

type Q = Ratio<i64>;

/// Cardinal B-spline of degree `k` on knots `0, 1, …, k+1`, by the
/// textbook recursion in exact rational arithmetic.
fn cardinal(k: usize, u: Q) -> Q {
    let zero = Q::from_integer(0);
    if k == 0 {
        return if u >= zero && u < Q::from_integer(1) {
            Q::from_integer(1)
        } else {
            zero
        };
    }
    let kk = Q::from_integer(k as i64);
    u / kk * cardinal(k - 1, u) + (Q::from_integer(k as i64 + 1) - u) / kk * cardinal(k - 1, u - Q::from_integer(1))
}

fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Composite Simpson rule with `panels` (even) panels on `[0, 1]`.
fn simpson(panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = 1.0 / panels as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    s * h / 3.0
}

/// Value of basis function `dof` of the given form at `x`.
fn basis_at(space: &SplineSpace<f64>, form: Form, dof: usize, x: f64) -> f64 {
    let bv = space.basis_values(form, x);
    (0..bv.values.len())
        .filter(|&j| bv.dof(j, space.n_cells()) == dof)
        .map(|j| bv.values[j])
        .sum()
}

#[test]
fn cubic_midpoint_values_match_exact_rational_recursion() {
    let space = SplineSpace::new(3, 8, 8.0).unwrap();
    let bv = space.basis_values(Form::Zero, 4.5);
    let half = Q::new(1, 2);
    for j in 0..4 {
        let exact = cardinal(3, half + Q::from_integer(3 - j as i64));
        assert!((bv.values[j] - to_f64(exact)).abs() < 1e-16);
    }
    let expected = [1.0 / 48.0, 23.0 / 48.0, 23.0 / 48.0, 1.0 / 48.0];
    for (v, e) in bv.values.iter().zip(expected) {
        assert!((v - e).abs() < 1e-16);
    }
}

#[test]
fn basis_values_match_rational_oracle_on_a_fine_grid() {
    for p in 1..=4usize {
        let space = SplineSpace::new(p, 2 * p + 3, (2 * p + 3) as f64).unwrap();
        for num in 0..64i64 {
            let t = Q::new(num, 64);
            let bv = space.basis_values(Form::Zero, 3.0 + to_f64(t));
            for j in 0..=p {
                let exact = to_f64(cardinal(p, t + Q::from_integer((p - j) as i64)));
                assert!((bv.values[j] - exact).abs() < 1e-15, "p={p} t={t} j={j}");
            }
        }
    }
}

#[test]
fn linear_mass_stencil_matches_hat_overlap_quadrature() {
    let m = CirculantOperator::<f64>::mass(1, 1.0, 8);
    // Hat functions on [0,2] and [1,3]; Simpson is exact for the quadratic products per cell.
    let hat = |x: f64| (1.0 - (x - 1.0).abs()).max(0.0);
    let c0 = 2.0 * simpson(2, |s| hat(s) * hat(s));
    let c1 = simpson(2, |s| hat(1.0 + s) * hat(s));
    assert!((m.coefficient(0) - c0).abs() < 1e-15 && (c0 - 2.0 / 3.0).abs() < 1e-15);
    assert!((m.coefficient(1) - c1).abs() < 1e-15 && (c1 - 1.0 / 6.0).abs() < 1e-15);
    assert_eq!(m.kind(), OperatorKind::Mass { degree: 1 });
}

#[test]
fn mass_stencils_are_symmetric_sum_to_dx_and_are_positive_definite() {
    for p in 0..=3usize {
        for n in [8usize, 16, 32] {
            let dx = 0.3;
            let m = CirculantOperator::<f64>::mass(p, dx, n);
            assert!((m.row_sum() - dx).abs() < 1e-15);
            for j in 1..=p as isize {
                assert!((m.coefficient(j) - m.coefficient(-j)).abs() < 1e-16);
            }
            assert!(m.spectral().real_parts().iter().all(|&l| l > 0.0));
        }
    }
    let m0 = CirculantOperator::<f64>::mass(0, 0.25, 8);
    assert!(m0.spectral().real_parts().iter().all(|&l| (l - 0.25).abs() < 1e-16));
}

#[test]
fn mass_eigenvalues_match_cosine_sums() {
    for p in 1..=3usize {
        let n = 16;
        let m = CirculantOperator::<f64>::mass(p, 1.0, n);
        let symbol = m.spectral();
        for k in 0..n {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let mut s = m.coefficient(0);
            for j in 1..=p {
                s += 2.0 * m.coefficient(j as isize) * (j as f64 * th).cos();
            }
            assert!((symbol.eigenvalues[k].re - s).abs() < 1e-13 && symbol.eigenvalues[k].im.abs() < 1e-13);
        }
    }
    let m1 = CirculantOperator::<f64>::mass(1, 1.0, 8);
    assert!((m1.spectral().eigenvalues[4].re - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn derivative_stencil_kills_constants_and_has_the_forward_symbol() {
    let space = SplineSpace::<f64>::new(1, 4, 4.0).unwrap();
    let d = CirculantOperator::derivative(&space);
    assert!(d.apply(&[1.0; 4]).iter().all(|&v| v == 0.0));
    assert_eq!(d.row_sum(), 0.0);
    let symbol = d.spectral();
    assert!(symbol.eigenvalues[0].norm() < 1e-16);
    assert!((symbol.eigenvalues[1].re - 1.0).abs() < 1e-15 && (symbol.eigenvalues[1].im - 1.0).abs() < 1e-15);
    for k in 1..4 {
        let a = symbol.eigenvalues[k];
        let b = symbol.eigenvalues[4 - k].conj();
        assert!((a - b).norm() < 1e-15);
    }
}

#[test]
fn circulant_solve_matches_dense_lu() {
    let n = 16;
    let m = CirculantOperator::<f64>::mass(3, 0.7, n);
    let space = SplineSpace::new(3, n, 0.7 * n as f64).unwrap();
    let d = CirculantOperator::derivative(&space);
    let op = m.add_scaled(0.3, &d.transpose().compose(&m).compose(&d));
    let rhs: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
    let x = circulant_solve(&op, &rhs, false).unwrap();
    let dense = op.to_dense();
    let a = DMatrix::from_fn(n, n, |i, j| dense[i][j]);
    let oracle = a.lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
    for i in 0..n {
        assert!((x[i] - oracle[i]).abs() < 1e-12);
    }
    let back = circulant_solve(&m, &m.apply(&x), false).unwrap();
    let scale = x.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    for i in 0..n {
        assert!((back[i] - x[i]).abs() <= 1e-13 * scale.max(1.0));
    }
}

#[test]
fn derivative_solve_with_net_rhs_is_singular() {
    let space = SplineSpace::new(2, 8, 8.0).unwrap();
    let d = CirculantOperator::derivative(&space);
    let err = circulant_solve(&d, &[1.0; 8], true).unwrap_err();
    assert!(matches!(err, PicError::SingularOperator(_)));
    assert!(matches!(
        circulant_solve(&d, &[0.0; 8], false),
        Err(PicError::SingularOperator(_))
    ));
}

#[test]
fn simpson_oracle_agrees_with_line_integrals() {
    let cases = [
        (1usize, 0.37, 2.9),
        (2, 5.1, -3.4),
        (3, 1.23, 0.61),
        (3, 7.9, 4.4),
        (2, 0.1, 0.0004),
        (1, 3.0, -2.0),
    ];
    for &(p, x0, d) in &cases {
        let space = SplineSpace::new(p, 8, 8.0).unwrap();
        for form in [Form::Zero, Form::One] {
            let li = space.line_integral_basis(form, x0, d);
            for dof in 0..8 {
                let oracle = piecewise_simpson(&space, form, dof, x0, d);
                let got = li.iter().find(|(k, _)| *k == dof).map_or(0.0, |&(_, v)| v);
                assert!(
                    (got - oracle).abs() < 1e-12,
                    "p={p} form={form:?} dof={dof}: {got} vs {oracle}"
                );
            }
        }
    }
}

/// Simpson with 10⁴ panels on each piece between cell crossings, which is
/// exact up to round-off for the cubic-or-lower polynomial pieces.
fn piecewise_simpson(space: &SplineSpace<f64>, form: Form, dof: usize, x0: f64, d: f64) -> f64 {
    if d == 0.0 {
        return basis_at(space, form, dof, x0);
    }
    let dx = space.dx();
    let (a, b) = (x0.min(x0 + d), x0.max(x0 + d));
    let mut cuts = vec![a];
    let mut k = (a / dx).floor() + 1.0;
    while k * dx < b {
        cuts.push(k * dx);
        k += 1.0;
    }
    cuts.push(b);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let len = hi - lo;
        // Endpoints are nudged inside so a discontinuous basis is read from the right cell.
        let eps = 1e-13 * len;
        let f = |s: f64| basis_at(space, form, dof, (lo + s * len).clamp(lo + eps, hi - eps));
        total += len * simpson(10_000, f);
    }
    total / (b - a)
}

#[test]
fn chain_rule_deposition_identity() {
    for p in 1..=3usize {
        let n = 12;
        let space = SplineSpace::<f64>::new(p, n, 6.0).unwrap();
        let d = CirculantOperator::derivative(&space);
        for &(x0, disp) in &[(0.3, 0.8), (5.7, 1.9), (2.2, -3.3), (1.0, 7.5)] {
            let mut line = vec![0.0; n];
            for (k, v) in space.line_integral_basis(Form::One, x0, disp) {
                line[k] = v * disp;
            }
            let lhs = d.transpose().apply(&line);
            let mut rhs = vec![0.0; n];
            space.basis_values(Form::Zero, x0 + disp).scatter(1.0, &mut rhs);
            space.basis_values(Form::Zero, x0).scatter(-1.0, &mut rhs);
            for i in 0..n {
                assert!((lhs[i] - rhs[i]).abs() < 1e-12, "p={p} i={i}");
            }
        }
    }
}

#[test]
fn single_precision_space_agrees_with_double() {
    let s32 = SplineSpace::<f32>::new(3, 16, 5.0).unwrap();
    let s64 = SplineSpace::<f64>::new(3, 16, 5.0).unwrap();
    for i in 0..50 {
        let x = 0.1 * i as f64;
        let a = s32.basis_values(Form::Zero, x as f32);
        let b = s64.basis_values(Form::Zero, x);
        assert_eq!(a.first_dof, b.first_dof);
        for (u, v) in a.values.iter().zip(&b.values) {
            assert!((*u as f64 - v).abs() < 1e-6);
        }
    }
}

proptest! {
    #[test]
    fn partition_of_unity(p in 1usize..=6, x in -50.0f64..50.0) {
        let space = SplineSpace::new(p, 2 * p + 5, 3.7).unwrap();
        for form in [Form::Zero, Form::One] {
            let bv = space.basis_values(form, x);
            let s: f64 = bv.values.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-14);
            prop_assert!(bv.values.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn line_integrals_sum_to_one(p in 1usize..=4, x in 0.0f64..10.0, d in -25.0f64..25.0) {
        let space = SplineSpace::new(p, 10, 10.0).unwrap();
        for form in [Form::Zero, Form::One] {
            let s: f64 = space.line_integral_basis(form, x, d).iter().map(|&(_, v)| v).sum();
            prop_assert!((s - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_maps_zero_forms_into_one_forms(
        p in 1usize..=4,
        coeffs in prop::collection::vec(-1.0f64..1.0, 16),
        x in 0.0f64..8.0,
    ) {
        let space = SplineSpace::new(p, 16, 8.0).unwrap();
        let d = CirculantOperator::derivative(&space);
        let dc = d.apply(&coeffs);
        let analytic = space.basis_derivatives(Form::Zero, x).dot(&coeffs);
        let via_d = space.eval(Form::One, &dc, x);
        prop_assert!((analytic - via_d).abs() < 1e-11);
        if p >= 2 {
            let h = 1e-6;
            let fd = (space.eval(Form::Zero, &coeffs, x + h) - space.eval(Form::Zero, &coeffs, x - h)) / (2.0 * h);
            prop_assert!((fd - via_d).abs() < 1e-4);
        }
    }

    #[test]
    fn matvec_equals_fourier_diagonal(p in 1usize..=3, nexp in 3u32..=5, seed in 0u64..1000) {
        let n = 1usize << nexp;
        let space = SplineSpace::new(p, n, n as f64 * 0.5).unwrap();
        let m = CirculantOperator::<f64>::mass(p, space.dx(), n);
        let x: Vec<f64> = (0..n).map(|i| (((i as u64 + 1) * (seed + 17)) % 97) as f64 / 97.0 - 0.5).collect();
        let fft = vmpic::splines::FftPair::new(n);
        let a = m.apply(&x);
        let b = fft.apply_diagonal(&m.spectral().eigenvalues, &x);
        for i in 0..n {
            prop_assert!((a[i] - b[i]).abs() < 1e-13);
        }
    }
}
