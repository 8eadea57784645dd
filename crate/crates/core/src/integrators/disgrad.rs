use crate::error::{PicError, Result};
use crate::fields::{FemOperators, FieldState};
use crate::particles::{reduce_in_order, sweep_chunks, Species};
use crate::scalar::{norm2, Real};
use crate::splines::{Form, SplineSpace};

use super::ops::{op1_drift, op2_rotate, op3_curl, op4_ve_avf};
use super::{finish_report, IntegratorConfig, Ordering, PicState, StepReport};

/// Path integrals of both form spaces along `x0 → x0 + d`, contracted with
/// the averaged fields; the currents `scale1 · Ī¹` and `scale0 · Ī⁰` are
/// added to `j1` and `j2` when given.
#[allow(clippy::too_many_arguments)]
#[inline]
fn path_kick<T: Real>(
    space: &SplineSpace<T>,
    x0: T,
    d: T,
    ebar1: &[T],
    ebar2: &[T],
    currents: Option<(&mut [T], T, &mut [T], T)>,
) -> (T, T) {
    let mut s1 = T::zero();
    let mut s0 = T::zero();
    match currents {
        Some((j1, scale1, j2, scale0)) => {
            space.for_each_path_segment(Form::One, x0, d, |bv| {
                s1 += bv.dot(ebar1);
                bv.scatter(scale1, j1);
            });
            space.for_each_path_segment(Form::Zero, x0, d, |bv| {
                s0 += bv.dot(ebar2);
                bv.scatter(scale0, j2);
            });
        }
        None => {
            space.for_each_path_segment(Form::One, x0, d, |bv| s1 += bv.dot(ebar1));
            space.for_each_path_segment(Form::Zero, x0, d, |bv| s0 += bv.dot(ebar2));
        }
    }
    (s1, s0)
}

fn midpoint<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> Vec<Vec<T>> {
    a.iter()
        .zip(b)
        .map(|(u, v)| u.iter().zip(v).map(|(&p, &q)| T::lit(0.5) * (p + q)).collect())
        .collect()
}

/// Average-vector-field predictor `O1(dt/2) O4(dt)` on copies; the returned
/// velocities and fields seed the Picard iteration.
fn avf_predictor<T: Real>(
    ops: &FemOperators<T>,
    species: &[Species<T>],
    fields: &FieldState<T>,
    dt: T,
    cfg: &IntegratorConfig<T>,
) -> Result<(Vec<Species<T>>, FieldState<T>)> {
    let mut sp = species.to_vec();
    let mut f = fields.clone();
    for s in sp.iter_mut() {
        op1_drift(ops.space(), s, dt * T::lit(0.5), cfg.parallel);
    }
    op4_ve_avf(ops, &mut sp, &mut f, dt, cfg)?;
    Ok((sp, f))
}

/// Discrete-gradient solve of the coupled `(x, v, e)` system over one step.
///
/// Positions follow straight paths with the averaged velocity, velocities
/// are kicked by the path-averaged basis applied to the averaged field, and
/// the field absorbs the path-integrated current. Because the deposited
/// current is the exact time derivative of the charge along the paths, the
/// Gauss residual is unchanged up to round-off at every iterate.
pub fn disgrad_vxe_solve<T: Real>(
    ops: &FemOperators<T>,
    species: &mut [Species<T>],
    fields: &mut FieldState<T>,
    dt: T,
    cfg: &IntegratorConfig<T>,
) -> Result<StepReport<T>> {
    let space = ops.space();
    let n = ops.n();
    let start: Vec<Species<T>> = species.to_vec();
    let (predicted, pred_fields) = avf_predictor(ops, species, fields, dt, cfg)?;
    for (s, p) in species.iter_mut().zip(&predicted) {
        s.v1.clone_from(&p.v1);
        s.v2.clone_from(&p.v2);
    }
    let e_start = vec![fields.e1.clone(), fields.e2.clone()];
    let mut e_iter = vec![pred_fields.e1, pred_fields.e2];
    let half = T::lit(0.5);
    let mut iterations = 0;
    loop {
        let ebar = midpoint(&e_start, &e_iter);
        let mut partials = (Vec::new(), Vec::new());
        for (sp, st) in species.iter_mut().zip(&start) {
            let (q, qm) = (sp.charge, sp.q_over_m());
            let accs = sweep_chunks(
                sp,
                cfg.parallel,
                || (vec![T::zero(); n], vec![T::zero(); n]),
                |c, acc| {
                    for i in 0..c.x.len() {
                        let a = c.offset + i;
                        let (x0, u1, u2) = (st.x[a], st.v1[a], st.v2[a]);
                        let vb1 = half * (u1 + c.v1[i]);
                        let vb2 = half * (u2 + c.v2[i]);
                        let d = dt * vb1;
                        let qw_dt = q * c.w[i] * dt;
                        let (s1, s0) = path_kick(
                            space,
                            x0,
                            d,
                            &ebar[0],
                            &ebar[1],
                            Some((&mut acc.0[..], qw_dt * vb1, &mut acc.1[..], qw_dt * vb2)),
                        );
                        c.v1[i] = u1 + dt * qm * s1;
                        c.v2[i] = u2 + dt * qm * s0;
                        c.x[i] = space.wrap(x0 + d);
                    }
                },
            );
            for (a, b) in accs {
                partials.0.push(a);
                partials.1.push(b);
            }
        }
        let j1 = reduce_in_order(partials.0, n);
        let j2 = reduce_in_order(partials.1, n);
        let e_new = field_update(ops, &e_start, &j1, &j2);
        let residual = change_norm(&e_new, &e_iter);
        e_iter = e_new;
        iterations += 1;
        if residual <= cfg.nonlinear_tol {
            break;
        }
        if iterations >= cfg.max_picard || !residual.is_finite() {
            return Err(PicError::NoConvergence {
                stage: "Picard",
                iterations,
                residual: residual.to_f64_lossy(),
            });
        }
    }
    let [e1, e2]: [Vec<T>; 2] = e_iter.try_into().expect("two field components");
    fields.e1 = e1;
    fields.e2 = e2;
    Ok(StepReport {
        dt,
        picard_iterations: iterations,
        ..StepReport::default()
    })
}

/// `e = e_start - M⁻¹ J` per component.
fn field_update<T: Real>(ops: &FemOperators<T>, e_start: &[Vec<T>], j1: &[T], j2: &[T]) -> Vec<Vec<T>> {
    let d1 = ops.solve_mass(Form::One, j1);
    let d2 = ops.solve_mass(Form::Zero, j2);
    vec![
        e_start[0].iter().zip(d1).map(|(&e, d)| e - d).collect(),
        e_start[1].iter().zip(d2).map(|(&e, d)| e - d).collect(),
    ]
}

fn change_norm<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> T {
    let diff: Vec<T> = a
        .iter()
        .zip(b)
        .flat_map(|(u, v)| u.iter().zip(v).map(|(&p, &q)| p - q))
        .collect();
    norm2(&diff)
}

/// Discrete-gradient solve with substepping.
///
/// The averaged field is frozen during each sweep over the particles. Each
/// particle advances through `N_sub` substeps of length `dt / N_sub`; every
/// substep is a small implicit-midpoint system solved by Picard iteration to
/// `sub_tol` in the max norm of `(x, v1, v2)`. The current is the sum of the
/// path integrals of all substeps. The outer Picard iteration updates the
/// field until `‖Δe‖₂ ≤ nonlinear_tol`.
pub fn disgrad_sub_vxe_solve<T: Real>(
    ops: &FemOperators<T>,
    species: &mut [Species<T>],
    fields: &mut FieldState<T>,
    dt: T,
    cfg: &IntegratorConfig<T>,
) -> Result<StepReport<T>> {
    let space = ops.space();
    let n = ops.n();
    let start: Vec<Species<T>> = species.to_vec();
    let (predicted, pred_fields) = avf_predictor(ops, species, fields, dt, cfg)?;
    for (s, p) in species.iter_mut().zip(&predicted) {
        s.v1.clone_from(&p.v1);
        s.v2.clone_from(&p.v2);
    }
    let e_start = vec![fields.e1.clone(), fields.e2.clone()];
    let mut e_iter = vec![pred_fields.e1, pred_fields.e2];
    let half = T::lit(0.5);
    let mut iterations = 0;
    let mut inner_total = 0usize;
    let mut inner_solves = 0usize;

    struct Acc<T> {
        j1: Vec<T>,
        j2: Vec<T>,
        inner: usize,
        solves: usize,
        failure: Option<T>,
    }

    loop {
        let ebar = midpoint(&e_start, &e_iter);
        let mut parts1 = Vec::new();
        let mut parts2 = Vec::new();
        for (s_idx, (sp, st)) in species.iter_mut().zip(&start).enumerate() {
            let nsub = cfg.substeps_for(s_idx);
            let dtau = dt / T::from_count(nsub);
            let (q, qm) = (sp.charge, sp.q_over_m());
            let accs = sweep_chunks(
                sp,
                cfg.parallel,
                || Acc {
                    j1: vec![T::zero(); n],
                    j2: vec![T::zero(); n],
                    inner: 0,
                    solves: 0,
                    failure: None,
                },
                |c, acc| {
                    for i in 0..c.x.len() {
                        let a = c.offset + i;
                        let (mut xb, mut ub1, mut ub2) = (st.x[a], st.v1[a], st.v2[a]);
                        let (mut vi1, mut vi2) = (c.v1[i], c.v2[i]);
                        let qw = q * c.w[i];
                        for _ in 0..nsub {
                            let (mut x_old, mut v_old1, mut v_old2) = (xb, ub1, ub2);
                            let mut k = 0;
                            let (mut vb1, mut vb2, mut d);
                            loop {
                                vb1 = half * (ub1 + vi1);
                                vb2 = half * (ub2 + vi2);
                                d = dtau * vb1;
                                let xi = xb + d;
                                let (s1, s0) = path_kick(space, xb, d, &ebar[0], &ebar[1], None);
                                vi1 = ub1 + dtau * qm * s1;
                                vi2 = ub2 + dtau * qm * s0;
                                let sub = (xi - x_old).abs().max((vi1 - v_old1).abs()).max((vi2 - v_old2).abs());
                                x_old = xi;
                                v_old1 = vi1;
                                v_old2 = vi2;
                                k += 1;
                                if sub < cfg.sub_tol {
                                    break;
                                }
                                if k >= cfg.max_sub_iterations || !sub.is_finite() {
                                    acc.failure = Some(sub);
                                    break;
                                }
                            }
                            acc.inner += k;
                            acc.solves += 1;
                            let scale = qw * dtau;
                            space.for_each_path_segment(Form::One, xb, d, |bv| bv.scatter(scale * vb1, &mut acc.j1));
                            space.for_each_path_segment(Form::Zero, xb, d, |bv| bv.scatter(scale * vb2, &mut acc.j2));
                            xb = space.wrap(xb + d);
                            ub1 = vi1;
                            ub2 = vi2;
                        }
                        c.x[i] = xb;
                        c.v1[i] = ub1;
                        c.v2[i] = ub2;
                    }
                },
            );
            for acc in accs {
                if let Some(res) = acc.failure {
                    return Err(PicError::NoConvergence {
                        stage: "substep",
                        iterations: cfg.max_sub_iterations,
                        residual: res.to_f64_lossy(),
                    });
                }
                inner_total += acc.inner;
                inner_solves += acc.solves;
                parts1.push(acc.j1);
                parts2.push(acc.j2);
            }
        }
        let j1 = reduce_in_order(parts1, n);
        let j2 = reduce_in_order(parts2, n);
        let e_new = field_update(ops, &e_start, &j1, &j2);
        let residual = change_norm(&e_new, &e_iter);
        e_iter = e_new;
        iterations += 1;
        if residual <= cfg.nonlinear_tol {
            break;
        }
        if iterations >= cfg.max_picard || !residual.is_finite() {
            return Err(PicError::NoConvergence {
                stage: "Picard",
                iterations,
                residual: residual.to_f64_lossy(),
            });
        }
    }
    let [e1, e2]: [Vec<T>; 2] = e_iter.try_into().expect("two field components");
    fields.e1 = e1;
    fields.e2 = e2;
    let mean = if inner_solves > 0 {
        T::from_count(inner_total) / T::from_count(inner_solves)
    } else {
        T::zero()
    };
    Ok(StepReport {
        dt,
        picard_iterations: iterations,
        sub_iterations_mean: mean,
        ..StepReport::default()
    })
}

fn strang_around<T, F>(state: &mut PicState<T>, cfg: &IntegratorConfig<T>, dt: T, middle: F) -> Result<StepReport<T>>
where
    T: Real,
    F: FnOnce(&FemOperators<T>, &mut [Species<T>], &mut FieldState<T>) -> Result<StepReport<T>>,
{
    let energy_before = state.total_energy();
    let h = dt * T::lit(0.5);
    let rotate = |state: &mut PicState<T>| {
        let PicState {
            ops, fields, species, ..
        } = state;
        for sp in species.iter_mut() {
            op2_rotate(ops.space(), fields, sp, h, cfg.parallel);
        }
    };
    let curl = |state: &mut PicState<T>| op3_curl(&state.ops, &mut state.fields, h);
    match cfg.ordering {
        Ordering::Standard => {
            curl(state);
            rotate(state);
        }
        Ordering::FieldLast => {
            rotate(state);
            curl(state);
        }
    }
    let mut report = {
        let PicState {
            ops, fields, species, ..
        } = state;
        middle(ops, species, fields)?
    };
    match cfg.ordering {
        Ordering::Standard => {
            rotate(state);
            curl(state);
        }
        Ordering::FieldLast => {
            curl(state);
            rotate(state);
        }
    }
    report.energy_before = energy_before;
    Ok(finish_report(state, cfg, report))
}

/// Conservative discrete-gradient Strang step: O3 O2 [x v e] O2 O3, or
/// O2 O3 [x v e] O3 O2 with the field-last ordering. The drift is part of
/// the implicit middle block.
pub fn disgrad_strang_step<T: Real>(
    state: &mut PicState<T>,
    cfg: &IntegratorConfig<T>,
    dt: T,
) -> Result<StepReport<T>> {
    strang_around(state, cfg, dt, |ops, sp, f| disgrad_vxe_solve(ops, sp, f, dt, cfg))
}

/// Discrete-gradient Strang step with per-species substepping.
pub fn disgrad_sub_step<T: Real>(state: &mut PicState<T>, cfg: &IntegratorConfig<T>, dt: T) -> Result<StepReport<T>> {
    strang_around(state, cfg, dt, |ops, sp, f| disgrad_sub_vxe_solve(ops, sp, f, dt, cfg))
}
