//! Gauss–Legendre rules on the unit interval.

use crate::scalar::Real;

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[0, 1]`.
///
/// Nodes are found by Newton iteration on the Legendre polynomial in `f64`
/// and then rounded to `T`; the weights sum to one.
pub fn gauss_legendre_unit<T: Real>(m: usize) -> Vec<(T, T)> {
    assert!(m >= 1, "quadrature needs at least one point");
    let mut rule = Vec::with_capacity(m);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, z);
            dp = d;
            let step = p / d;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.push((T::lit(0.5 * (1.0 - z)), T::lit(0.5 * w)));
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite nodes"));
    rule
}

/// Legendre polynomial `P_m(z)` and its derivative.
fn legendre(m: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let mf = m as f64;
    (p1, mf * (z * p1 - p0) / (z * z - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_up_to_degree_2m_minus_1() {
        for m in 1..=6 {
            let rule = gauss_legendre_unit::<f64>(m);
            for deg in 0..2 * m {
                let q: f64 = rule.iter().map(|&(x, w)| w * x.powi(deg as i32)).sum();
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((q - exact).abs() < 1e-15, "m={m} deg={deg} q={q}");
            }
        }
    }

    #[test]
    fn single_point_rule_is_the_midpoint() {
        let rule = gauss_legendre_unit::<f64>(1);
        assert_eq!(rule.len(), 1);
        assert!((rule[0].0 - 0.5).abs() < 1e-16);
        assert!((rule[0].1 - 1.0).abs() < 1e-16);
    }
}
