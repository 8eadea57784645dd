//! Explicit Hamiltonian splitting.
//!
//! The Hamiltonian is split into `H_p1 = ½ Σ m w v1²`, `H_p2 = ½ Σ m w v2²`,
//! the electric energy `H_E` and the magnetic energy `H_B`. Each part
//! generates a flow that is solved exactly; the `H_p1` flow needs the path
//! integral of the 1-form basis for both the magnetic kick and the current.

use crate::error::Result;
use crate::fields::{FemOperators, FieldState};
use crate::particles::{reduce_in_order, sweep_chunks, Species};
use crate::scalar::Real;
use crate::splines::Form;

use super::{finish_report, IntegratorConfig, PicState, StepReport};

/// `H_E` flow: kicks by `E(x)` and `b3 ← b3 - dt D e2`.
pub fn hs_substep_e<T: Real>(
    ops: &FemOperators<T>,
    species: &mut [Species<T>],
    fields: &mut FieldState<T>,
    dt: T,
    parallel: bool,
) {
    let space = ops.space();
    for sp in species.iter_mut() {
        let k = dt * sp.q_over_m();
        let f = &*fields;
        sweep_chunks(
            sp,
            parallel,
            || (),
            |c, _| {
                for i in 0..c.x.len() {
                    c.v1[i] += k * space.eval(Form::One, &f.e1, c.x[i]);
                    c.v2[i] += k * space.eval(Form::Zero, &f.e2, c.x[i]);
                }
            },
        );
    }
    ops.faraday_step(fields, dt);
}

/// `H_B` flow: `e2 ← e2 + dt M0⁻¹ Dᵀ M1 b3`.
pub fn hs_substep_b<T: Real>(ops: &FemOperators<T>, fields: &mut FieldState<T>, dt: T) {
    ops.ampere_curl_step(fields, dt);
}

/// `H_p1` flow: drift in `x1` with the magnetic kick on `v2` and the
/// line-integrated current into `e1`.
pub fn hs_substep_p1<T: Real>(
    ops: &FemOperators<T>,
    species: &mut [Species<T>],
    fields: &mut FieldState<T>,
    dt: T,
    parallel: bool,
) {
    let space = ops.space();
    let n = ops.n();
    let mut partials = Vec::new();
    for sp in species.iter_mut() {
        let (q, qm) = (sp.charge, sp.q_over_m());
        let b3 = &fields.b3;
        partials.extend(sweep_chunks(
            sp,
            parallel,
            || vec![T::zero(); n],
            |c, acc| {
                for i in 0..c.x.len() {
                    let (x, v1) = (c.x[i], c.v1[i]);
                    let d = dt * v1;
                    let scale = q * c.w[i] * d;
                    let mut bint = T::zero();
                    space.for_each_path_segment(Form::One, x, d, |bv| {
                        bint += bv.dot(b3);
                        bv.scatter(scale, acc);
                    });
                    c.v2[i] -= qm * d * bint;
                    c.x[i] = space.wrap(x + d);
                }
            },
        ));
    }
    let j1 = reduce_in_order(partials, n);
    let de = ops.solve_mass(Form::One, &j1);
    for (e, d) in fields.e1.iter_mut().zip(de) {
        *e -= d;
    }
}

/// `H_p2` flow: magnetic kick on `v1` and point-deposited current into `e2`.
pub fn hs_substep_p2<T: Real>(
    ops: &FemOperators<T>,
    species: &mut [Species<T>],
    fields: &mut FieldState<T>,
    dt: T,
    parallel: bool,
) {
    let space = ops.space();
    let n = ops.n();
    let mut partials = Vec::new();
    for sp in species.iter_mut() {
        let (q, qm) = (sp.charge, sp.q_over_m());
        let b3 = &fields.b3;
        partials.extend(sweep_chunks(
            sp,
            parallel,
            || vec![T::zero(); n],
            |c, acc| {
                for i in 0..c.x.len() {
                    let x = c.x[i];
                    let v2 = c.v2[i];
                    c.v1[i] += dt * qm * v2 * space.eval(Form::One, b3, x);
                    space.basis_values(Form::Zero, x).scatter(q * c.w[i] * dt * v2, acc);
                }
            },
        ));
    }
    let j2 = reduce_in_order(partials, n);
    let de = ops.solve_mass(Form::Zero, &j2);
    for (e, d) in fields.e2.iter_mut().zip(de) {
        *e -= d;
    }
}

/// Strang composition `H_B H_E H_p2 [H_p1] H_p2 H_E H_B` with half steps
/// around the full `H_p1` step.
pub fn hs_step<T: Real>(state: &mut PicState<T>, cfg: &IntegratorConfig<T>, dt: T) -> Result<StepReport<T>> {
    let energy_before = state.total_energy();
    let h = dt * T::lit(0.5);
    let par = cfg.parallel;
    {
        let PicState {
            ops, fields, species, ..
        } = state;
        hs_substep_b(ops, fields, h);
        hs_substep_e(ops, species, fields, h, par);
        hs_substep_p2(ops, species, fields, h, par);
        hs_substep_p1(ops, species, fields, dt, par);
        hs_substep_p2(ops, species, fields, h, par);
        hs_substep_e(ops, species, fields, h, par);
        hs_substep_b(ops, fields, h);
    }
    let report = StepReport {
        dt,
        energy_before,
        ..StepReport::default()
    };
    Ok(finish_report(state, cfg, report))
}
