use crate::error::{PicError, Result};
use crate::fields::{FemOperators, FieldState};
use crate::particles::{accumulate_chunks, sampled_mass, sweep_chunks, SampledMassMatrix, Species};
use crate::scalar::{dot, norm2, Real};
use crate::splines::{Form, SplineSpace};

use super::{finish_report, IntegratorConfig, Ordering, PicState, Preconditioner, StepReport};

/// O1: `x ← x + dt v1`, wrapped into the period.
pub fn op1_drift<T: Real>(space: &SplineSpace<T>, species: &mut Species<T>, dt: T, parallel: bool) {
    sweep_chunks(
        species,
        parallel,
        || (),
        |c, _| {
            for (x, &v) in c.x.iter_mut().zip(c.v1.iter()) {
                *x = space.wrap(*x + dt * v);
            }
        },
    );
}

/// O2: exact rotation of `(v1, v2)` by `α = dt (q/m) B3(x)`, the flow of
/// `v̇1 = (q/m) v2 B3`, `v̇2 = -(q/m) v1 B3`.
pub fn op2_rotate<T: Real>(
    space: &SplineSpace<T>,
    fields: &FieldState<T>,
    species: &mut Species<T>,
    dt: T,
    parallel: bool,
) {
    let qm = species.q_over_m();
    sweep_chunks(
        species,
        parallel,
        || (),
        |c, _| {
            for i in 0..c.x.len() {
                let b = space.eval(Form::One, &fields.b3, c.x[i]);
                let (s, co) = (dt * qm * b).sin_cos();
                let (v1, v2) = (c.v1[i], c.v2[i]);
                c.v1[i] = v1 * co + v2 * s;
                c.v2[i] = -v1 * s + v2 * co;
            }
        },
    );
}

/// O3: implicit-midpoint curl step of `(e2, b3)`.
pub fn op3_curl<T: Real>(ops: &FemOperators<T>, fields: &mut FieldState<T>, dt: T) {
    ops.curl_avf_step(fields, dt);
}

/// Outcome of one preconditioned conjugate-gradient solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearSolve<T> {
    pub iterations: usize,
    /// True residual `‖b - S x‖₂` after the last iteration.
    pub residual: T,
}

/// O4: average-vector-field step of `(v1, e1)` and `(v2, e2)`.
///
/// Eliminating the new velocity gives `(M + N) e⁺ = (M - N) e - dt Σ q w v Λ`
/// with the particle-sampled mass `N`. Velocities are then updated in two
/// half kicks with the old and the new field.
pub fn op4_ve_avf<T: Real>(
    ops: &FemOperators<T>,
    species: &mut [Species<T>],
    fields: &mut FieldState<T>,
    dt: T,
    cfg: &IntegratorConfig<T>,
) -> Result<StepReport<T>> {
    let mut report = StepReport {
        dt,
        ..StepReport::default()
    };
    let mut residual = T::zero();
    for form in [Form::One, Form::Zero] {
        let e = match form {
            Form::One => &mut fields.e1,
            Form::Zero => &mut fields.e2,
        };
        let solve = avf_component(ops, species, e, form, dt, cfg)?;
        residual = residual.max(solve.residual);
    }
    report.linear_solver_residual = residual;
    Ok(report)
}

fn velocity<'c, T>(c: &'c mut crate::particles::ParticleChunk<'_, T>, form: Form) -> &'c mut [T] {
    match form {
        Form::One => c.v1,
        Form::Zero => c.v2,
    }
}

fn avf_component<T: Real>(
    ops: &FemOperators<T>,
    species: &mut [Species<T>],
    e: &mut Vec<T>,
    form: Form,
    dt: T,
    cfg: &IntegratorConfig<T>,
) -> Result<LinearSolve<T>> {
    let space = ops.space();
    let n = ops.n();
    let half_dt = dt * T::lit(0.5);
    let sampled = sampled_mass(space, species, form, dt, cfg.parallel);
    let mass = ops.mass(form);

    // Current of the old velocities.
    let mut current = vec![T::zero(); n];
    for sp in species.iter() {
        let v = match form {
            Form::One => &sp.v1,
            Form::Zero => &sp.v2,
        };
        let part = accumulate_chunks(sp.len(), n, cfg.parallel, |range, acc| {
            for a in range {
                space
                    .basis_values(form, sp.x[a])
                    .scatter(sp.charge * sp.w[a] * v[a], acc);
            }
        });
        for (j, p) in current.iter_mut().zip(part) {
            *j += p;
        }
    }

    let me = mass.apply(e);
    let ne = sampled.apply(e);
    let rhs: Vec<T> = (0..n).map(|i| me[i] - ne[i] - dt * current[i]).collect();

    let e_old = e.clone();
    let mut e_new = e.clone();
    let solve = solve_schur(ops, &sampled, species, form, dt, &rhs, &mut e_new, cfg)?;

    let e_sum: Vec<T> = e_old.iter().zip(&e_new).map(|(&a, &b)| a + b).collect();
    for sp in species.iter_mut() {
        let kick = half_dt * sp.q_over_m();
        sweep_chunks(
            sp,
            cfg.parallel,
            || (),
            |c, _| {
                for i in 0..c.x.len() {
                    let s = space.basis_values(form, c.x[i]).dot(&e_sum);
                    velocity(c, form)[i] += kick * s;
                }
            },
        );
    }
    *e = e_new;
    Ok(solve)
}

/// Solves `(M + N) x = rhs` by conjugate gradients preconditioned with the
/// (optionally scaled) mass matrix in Fourier space.
///
/// Stops when the recursively updated residual satisfies
/// `‖r‖₂ ≤ linear_tol · max(1, ‖rhs‖₂)`; `x` holds the initial guess on entry.
#[allow(clippy::too_many_arguments)]
fn solve_schur<T: Real>(
    ops: &FemOperators<T>,
    sampled: &SampledMassMatrix<T>,
    species: &[Species<T>],
    form: Form,
    dt: T,
    rhs: &[T],
    x: &mut [T],
    cfg: &IntegratorConfig<T>,
) -> Result<LinearSolve<T>> {
    let n = ops.n();
    let mass = ops.mass(form);
    let apply = |v: &[T]| -> Vec<T> {
        let a = mass.apply(v);
        let b = sampled.apply(v);
        a.into_iter().zip(b).map(|(p, q)| p + q).collect()
    };
    let scale = match cfg.preconditioner {
        Preconditioner::Mass => T::one(),
        Preconditioner::ScaledMass => {
            let length = ops.space().length();
            let quarter = dt * dt / T::lit(4.0);
            T::one()
                + species
                    .iter()
                    .map(|s| quarter * s.charge * s.charge / s.mass * s.w.iter().copied().sum::<T>() / length)
                    .sum::<T>()
        }
    };
    let precond = |r: &[T]| -> Vec<T> {
        let z = ops.solve_mass(form, r);
        z.into_iter().map(|v| v / scale).collect()
    };
    let max_iter = cfg.max_cg_iterations.unwrap_or(10 * n).max(1);
    let target = cfg.linear_tol * norm2(rhs).max(T::one());

    let sx = apply(x);
    let mut r: Vec<T> = rhs.iter().zip(&sx).map(|(&b, &s)| b - s).collect();
    let mut iterations = 0;
    if norm2(&r) > target {
        let mut z = precond(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        loop {
            iterations += 1;
            let sp = apply(&p);
            let psp = dot(&p, &sp);
            if psp <= T::zero() || !psp.is_finite() {
                return Err(PicError::SolverDiverged {
                    iterations,
                    residual: norm2(&r).to_f64_lossy(),
                });
            }
            let alpha = rz / psp;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * sp[i];
            }
            if norm2(&r) <= target {
                break;
            }
            if iterations >= max_iter {
                return Err(PicError::SolverDiverged {
                    iterations,
                    residual: norm2(&r).to_f64_lossy(),
                });
            }
            z = precond(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
    let sx = apply(x);
    let residual = norm2(&rhs.iter().zip(&sx).map(|(&b, &s)| b - s).collect::<Vec<_>>());
    Ok(LinearSolve { iterations, residual })
}

/// Second-order average-vector-field Strang step.
///
/// Standard ordering: O3 O1 O2 O4 O2 O1 O3; field-last ordering:
/// O1 O2 O3 O4 O3 O2 O1 (outer operators with half steps).
pub fn avf_strang_step<T: Real>(state: &mut PicState<T>, cfg: &IntegratorConfig<T>, dt: T) -> Result<StepReport<T>> {
    let energy_before = state.total_energy();
    let h = dt * T::lit(0.5);
    let outer = |state: &mut PicState<T>, first: bool| {
        let PicState {
            ops, fields, species, ..
        } = state;
        let space = ops.space();
        let particles = |fields: &FieldState<T>, species: &mut [Species<T>], first: bool| {
            for sp in species.iter_mut() {
                if first {
                    op1_drift(space, sp, h, cfg.parallel);
                    op2_rotate(space, fields, sp, h, cfg.parallel);
                } else {
                    op2_rotate(space, fields, sp, h, cfg.parallel);
                    op1_drift(space, sp, h, cfg.parallel);
                }
            }
        };
        match (cfg.ordering, first) {
            (Ordering::Standard, true) => {
                op3_curl(ops, fields, h);
                particles(fields, species, true);
            }
            (Ordering::Standard, false) => {
                particles(fields, species, false);
                op3_curl(ops, fields, h);
            }
            (Ordering::FieldLast, true) => {
                particles(fields, species, true);
                op3_curl(ops, fields, h);
            }
            (Ordering::FieldLast, false) => {
                op3_curl(ops, fields, h);
                particles(fields, species, false);
            }
        }
    };
    outer(state, true);
    let mut report = {
        let PicState {
            ops, fields, species, ..
        } = state;
        op4_ve_avf(ops, species, fields, dt, cfg)?
    };
    outer(state, false);
    report.energy_before = energy_before;
    Ok(finish_report(state, cfg, report))
}
