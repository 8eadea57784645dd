//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//!
//! Run with `cargo test --release --test acceptance` (about 13 minutes on one core).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use vmpic::fields::{FemOperators, FieldState};
use vmpic::harness::{run_with_observer, CaseId, DiagnosticsRow, RunConfig, RunSummary, SpeciesOverride};
use vmpic::integrators::{op4_ve_avf, IntegratorConfig, Scheme};
use vmpic::particles::Species;
use vmpic::splines::{CirculantOperator, Form, SplineSpace};
use vmpic::stability::{empirical_stability_scan, maxwell_alpha_max, CurlStepper};
use vmpic::{PicError, Result};

struct Run {
    rows: Vec<DiagnosticsRow>,
    result: Result<RunSummary>,
    secs: f64,
}

impl Run {
    fn summary(&self) -> Option<&RunSummary> {
        self.result.as_ref().ok()
    }

    fn diverged(&self) -> bool {
        matches!(self.result, Err(PicError::Diverged { .. }))
    }

    fn describe(&self) -> String {
        match &self.result {
            Ok(s) => format!(
                "energy {:.2e}, gauss {:.2e}, iters {:.2}, {:.1} s",
                s.max_energy_error, s.max_gauss_residual, s.mean_iters, self.secs
            ),
            Err(e) => format!("{e} after {:.1} s", self.secs),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Weibel(Scheme, u64),
    TwoStream(Scheme),
    IonAcoustic,
    Thermal(Scheme),
}

struct Runs {
    cache: HashMap<Key, Run>,
}

fn with_particles(mut cfg: RunConfig, n_p: usize) -> RunConfig {
    cfg.species = (0..cfg.case.species_count())
        .map(|_| SpeciesOverride {
            n_particles: Some(n_p),
            ..SpeciesOverride::default()
        })
        .collect();
    cfg
}

fn config(key: Key) -> RunConfig {
    match key {
        Key::Weibel(scheme, dt_bits) => {
            let mut cfg = RunConfig::new(CaseId::Weibel, f64::from_bits(dt_bits));
            cfg.scheme = scheme;
            cfg.t_end = Some(100.0);
            with_particles(cfg, 10_000)
        }
        Key::TwoStream(scheme) => {
            let mut cfg = RunConfig::new(CaseId::TwoStream, 0.4);
            cfg.scheme = scheme;
            cfg.t_end = Some(50.0);
            cfg.n_cells = Some(64);
            with_particles(cfg, 10_000)
        }
        Key::IonAcoustic => {
            let mut cfg = RunConfig::new(CaseId::IonAcoustic, 1.0);
            cfg.scheme = Scheme::DisGradSub;
            cfg.t_end = Some(100.0);
            cfg.n_cells = Some(32);
            cfg.length = Some(10.0);
            cfg.physics.ion_temperature = Some(1e-4);
            let mut cfg = with_particles(cfg, 20_000);
            cfg.species[0].substeps = Some(4);
            cfg.species[1].substeps = Some(1);
            cfg.species[1].mass = Some(200.0);
            cfg
        }
        Key::Thermal(scheme) => {
            let mut cfg = RunConfig::new(CaseId::Thermal, 0.05);
            cfg.scheme = scheme;
            cfg.t_end = Some(100.0);
            cfg.n_cells = Some(64);
            cfg.length = Some(50.0 * PI);
            cfg.physics.sigma = Some(0.2);
            with_particles(cfg, 10_000)
        }
    }
}

impl Runs {
    fn get(&mut self, key: Key) -> &Run {
        self.cache.entry(key).or_insert_with(|| {
            let cfg = config(key);
            let start = Instant::now();
            let mut rows = Vec::new();
            let result = run_with_observer(&cfg, &mut |r| {
                rows.push(*r);
                Ok(())
            });
            let run = Run {
                rows,
                result,
                secs: start.elapsed().as_secs_f64(),
            };
            println!(
                "    run {:<12} {:<12} dt={:<7} {}",
                cfg.case.name(),
                format!("{:?}", cfg.scheme),
                cfg.dt,
                run.describe()
            );
            run
        })
    }
}

fn weibel(scheme: Scheme, dt: f64) -> Key {
    Key::Weibel(scheme, dt.to_bits())
}

struct Report {
    failed: Vec<usize>,
}

impl Report {
    fn record(&mut self, id: usize, title: &str, pass: bool, details: &[String]) {
        println!("[{}] criterion {id}: {title}", if pass { "PASS" } else { "FAIL" });
        for d in details {
            println!("       {d}");
        }
        if !pass {
            self.failed.push(id);
        }
    }
}

fn criterion_1(report: &mut Report) {
    let start = Instant::now();
    let exact = [1.0f64 / 3.0, 2.0 / 5.0, 17.0 / 42.0].map(f64::sqrt);
    let mut pass = true;
    let mut details = Vec::new();
    for p in 1..=3usize {
        let analytic = maxwell_alpha_max(p);
        let n = 32;
        let l = 2.0 * PI / 1.25;
        let dx = l / n as f64;
        let empirical = empirical_stability_scan(p, n, l, 2000, CurlStepper::ExplicitStrang, 7).unwrap() / dx;
        let gap = (empirical - analytic) / analytic;
        let ok = (analytic - exact[p - 1]).abs() < 1e-6 && gap.abs() < 0.02;
        pass &= ok;
        details.push(format!(
            "p={p}: analytic {analytic:.8} (exact {:.8}), empirical {empirical:.8}, gap {:.3}%",
            exact[p - 1],
            100.0 * gap
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 30.0;
    details.push(format!("runtime {secs:.2} s (limit 30 s)"));
    report.record(1, "stability limits", pass, &details);
}

fn criterion_2(report: &mut Report, runs: &mut Runs) {
    let mut pass = true;
    let mut details = Vec::new();
    for scheme in [Scheme::Avf, Scheme::DisGrad] {
        for dt in [0.05, 0.1, 0.2] {
            let run = runs.get(weibel(scheme, dt));
            let ok = run.summary().is_some_and(|s| s.max_energy_error <= 1e-10) && run.secs < 120.0;
            pass &= ok;
            details.push(format!("{scheme:?} dt={dt}: {}", run.describe()));
        }
    }
    let hs = runs.get(weibel(Scheme::Hs, 0.05));
    pass &= hs
        .summary()
        .is_some_and(|s| (1e-8..=1e-4).contains(&s.max_energy_error))
        && hs.secs < 120.0;
    details.push(format!("Hs dt=0.05: {} (window [1e-8, 1e-4])", hs.describe()));
    report.record(2, "energy conservation on the Weibel grid", pass, &details);
}

fn criterion_3(report: &mut Report, runs: &mut Runs) {
    let mut pass = true;
    let mut details = Vec::new();
    for (scheme, dts) in [(Scheme::Hs, vec![0.05]), (Scheme::DisGrad, vec![0.05, 0.1, 0.2])] {
        for dt in dts {
            let run = runs.get(weibel(scheme, dt));
            let g = run.summary().map_or(f64::INFINITY, |s| s.max_gauss_residual);
            pass &= g <= 1e-12;
            details.push(format!("{scheme:?} dt={dt}: gauss {g:.2e} (≤ 1e-12)"));
        }
    }
    let avf: Vec<f64> = [0.05, 0.2]
        .iter()
        .map(|&dt| {
            runs.get(weibel(Scheme::Avf, dt))
                .summary()
                .map_or(f64::NAN, |s| s.max_gauss_residual)
        })
        .collect();
    pass &= avf[0] >= 1e-9 && avf[1] > avf[0];
    details.push(format!(
        "Avf: gauss {:.2e} at dt=0.05 (≥ 1e-9), {:.2e} at dt=0.2 (larger)",
        avf[0], avf[1]
    ));
    report.record(3, "Gauss law on the Weibel grid", pass, &details);
}

fn criterion_4(report: &mut Report, runs: &mut Runs) {
    let hs = runs.get(weibel(Scheme::Hs, 0.1));
    let mut pass = hs.diverged();
    let mut details = vec![format!("Hs dt=0.1: {}", hs.describe())];
    for scheme in [Scheme::Avf, Scheme::DisGrad] {
        let run = runs.get(weibel(scheme, 0.2));
        pass &= run.result.is_ok();
        details.push(format!("{scheme:?} dt=0.2: {}", run.describe()));
    }
    report.record(4, "explicit CFL breach", pass, &details);
}

fn criterion_5(report: &mut Report, runs: &mut Runs) {
    let dg = runs
        .get(Key::TwoStream(Scheme::DisGrad))
        .summary()
        .map_or(f64::INFINITY, |s| s.max_gauss_residual);
    let avf = runs
        .get(Key::TwoStream(Scheme::Avf))
        .summary()
        .map_or(f64::NAN, |s| s.max_gauss_residual);
    let pass = dg <= 1e-12 && avf >= 1e-1;
    report.record(
        5,
        "two-stream Gauss law at dt=0.4",
        pass,
        &[
            format!("DisGrad gauss {dg:.2e} (≤ 1e-12)"),
            format!("Avf gauss {avf:.2e} (≥ 1e-1)"),
        ],
    );
}

fn criterion_6(report: &mut Report, runs: &mut Runs) {
    let run = runs.get(Key::IonAcoustic);
    let pass = run.summary().is_some_and(|s| {
        s.max_energy_error <= 1e-9 && s.max_gauss_residual <= 1e-12 && (10.0..=25.0).contains(&s.mean_iters)
    });
    let sub = run.summary().map_or(f64::NAN, |s| s.mean_sub_iters);
    report.record(
        6,
        "ion-acoustic substepping sub(4,1)",
        pass,
        &[run.describe(), format!("mean inner substep iterations {sub:.2}")],
    );
}

fn criterion_7(report: &mut Report, runs: &mut Runs) {
    let mut pass = true;
    let mut details = Vec::new();
    for scheme in [Scheme::Hs, Scheme::Avf, Scheme::DisGrad] {
        let run = runs.get(Key::Thermal(scheme));
        let max_all = run.rows.iter().map(|r| r.energy_error).fold(0.0, f64::max);
        let tenth = run.rows.len() / 10;
        let max_first = run.rows[..tenth].iter().map(|r| r.energy_error).fold(0.0, f64::max);
        let ratio = max_all / max_first;
        let ok = run.result.is_ok() && ratio < 10.0 && (scheme == Scheme::Hs || max_all <= 1e-10);
        pass &= ok;
        details.push(format!(
            "{scheme:?}: max energy error {max_all:.2e}, over first tenth {max_first:.2e}, ratio {ratio:.2}, {:.1} s",
            run.secs
        ));
    }
    details.push("bound: ratio < 10 for every scheme; implicit schemes drift ≤ 1e-10".into());
    report.record(7, "thermal plasma on a coarse grid", pass, &details);
}

/// Max over `t = 0.1 j ≤ t_max` of the B3-energy difference to the reference.
fn trace_error(run: &Run, reference: &Run, t_max: f64) -> f64 {
    let at = |r: &Run, t: f64| {
        r.rows
            .iter()
            .find(|row| (row.time - t).abs() < 1e-9)
            .map(|row| row.b3_energy)
            .unwrap_or(f64::NAN)
    };
    let mut err: f64 = 0.0;
    let mut j = 1;
    while 0.1 * j as f64 <= t_max + 1e-9 {
        let t = 0.1 * j as f64;
        err = err.max((at(run, t) - at(reference, t)).abs());
        j += 1;
    }
    err
}

fn criterion_8(report: &mut Report, runs: &mut Runs) {
    let mut pass = true;
    let mut details = Vec::new();
    for scheme in [Scheme::Avf, Scheme::DisGrad] {
        runs.get(weibel(scheme, 0.0125));
        runs.get(weibel(scheme, 0.1));
        runs.get(weibel(scheme, 0.05));
        let reference = &runs.cache[&weibel(scheme, 0.0125)];
        let coarse = &runs.cache[&weibel(scheme, 0.1)];
        let fine = &runs.cache[&weibel(scheme, 0.05)];
        let (e1, e2) = (
            trace_error(coarse, reference, 100.0),
            trace_error(fine, reference, 100.0),
        );
        let ratio = e1 / e2;
        pass &= (3.5..=4.5).contains(&ratio);
        details.push(format!(
            "{scheme:?}: error {e1:.3e} (dt=0.1), {e2:.3e} (dt=0.05), ratio {ratio:.2} (need 3.5-4.5)"
        ));
        let (w1, w2) = (trace_error(coarse, reference, 5.0), trace_error(fine, reference, 5.0));
        details.push(format!("{scheme:?}: info only, same ratio over t ≤ 5: {:.2}", w1 / w2));
    }
    report.record(
        8,
        "second-order self-convergence of the B3 energy trace",
        pass,
        &details,
    );
}

fn criterion_9(report: &mut Report) {
    let mut details = Vec::new();

    // O4 on one particle and 8 cells against a dense solve of the midpoint system.
    let n = 8;
    let ops = FemOperators::new(SplineSpace::<f64>::new(3, n, 8.0).unwrap());
    let mut sp = Species::new("e", -1.0, 1.0);
    sp.push(3.3, 0.8, -0.4, 0.7);
    let mut fields = FieldState::zeros(n);
    for i in 0..n {
        fields.e1[i] = 0.1 * (i as f64).sin();
        fields.e2[i] = 0.1 * (i as f64).cos();
    }
    let dt = 0.5;
    let (f0, s0) = (fields.clone(), sp.clone());
    let mut species = vec![sp];
    op4_ve_avf(
        &ops,
        &mut species,
        &mut fields,
        dt,
        &IntegratorConfig::with_scheme(Scheme::Avf),
    )
    .unwrap();
    let mut op4_err: f64 = 0.0;
    for (form, e0, e1, v0, v1) in [
        (Form::One, &f0.e1, &fields.e1, s0.v1[0], species[0].v1[0]),
        (Form::Zero, &f0.e2, &fields.e2, s0.v2[0], species[0].v2[0]),
    ] {
        let mut lam = vec![0.0; n];
        ops.space().basis_values(form, s0.x[0]).scatter(1.0, &mut lam);
        let m = ops.mass(form).to_dense();
        let (q, w, qm) = (s0.charge, s0.w[0], s0.q_over_m());
        let mut a = DMatrix::<f64>::zeros(n + 1, n + 1);
        let mut rhs = DVector::<f64>::zeros(n + 1);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = m[i][j];
            }
            a[(i, n)] = 0.5 * dt * q * w * lam[i];
            rhs[i] = (0..n).map(|j| m[i][j] * e0[j]).sum::<f64>() - 0.5 * dt * q * w * v0 * lam[i];
            a[(n, i)] = -0.5 * dt * qm * lam[i];
        }
        a[(n, n)] = 1.0;
        rhs[n] = v0 + 0.5 * dt * qm * (0..n).map(|j| lam[j] * e0[j]).sum::<f64>();
        let x = a.lu().solve(&rhs).unwrap();
        for i in 0..n {
            op4_err = op4_err.max((x[i] - e1[i]).abs());
        }
        op4_err = op4_err.max((x[n] - v1).abs());
    }
    details.push(format!("op4 vs dense solve: {op4_err:.2e}"));

    // Path-averaged basis against composite Simpson.
    let mut li_err: f64 = 0.0;
    for &(p, x0, d) in &[
        (1usize, 0.37, 2.9),
        (2, 5.1, -3.4),
        (3, 1.23, 0.61),
        (3, 7.9, 4.4),
        (2, 0.1, 0.0004),
    ] {
        let space = SplineSpace::<f64>::new(p, 8, 8.0).unwrap();
        for form in [Form::Zero, Form::One] {
            let li = space.line_integral_basis(form, x0, d);
            for dof in 0..8 {
                let got = li.iter().find(|(k, _)| *k == dof).map_or(0.0, |&(_, v)| v);
                li_err = li_err.max((got - piecewise_simpson(&space, form, dof, x0, d)).abs());
            }
        }
    }
    details.push(format!("line integrals vs 10^4-panel Simpson: {li_err:.2e}"));

    // Dᵀ (d · path average of Λ¹) = Λ⁰(x + d) - Λ⁰(x).
    let mut chain_err: f64 = 0.0;
    for p in 1..=3usize {
        let n = 12;
        let space = SplineSpace::<f64>::new(p, n, 6.0).unwrap();
        let dt_op = CirculantOperator::derivative(&space).transpose();
        for &(x0, disp) in &[(0.3, 0.8), (5.7, 1.9), (2.2, -3.3), (1.0, 7.5)] {
            let mut line = vec![0.0; n];
            for (k, v) in space.line_integral_basis(Form::One, x0, disp) {
                line[k] = v * disp;
            }
            let lhs = dt_op.apply(&line);
            let mut rhs = vec![0.0; n];
            space.basis_values(Form::Zero, x0 + disp).scatter(1.0, &mut rhs);
            space.basis_values(Form::Zero, x0).scatter(-1.0, &mut rhs);
            for i in 0..n {
                chain_err = chain_err.max((lhs[i] - rhs[i]).abs());
            }
        }
    }
    details.push(format!("chain-rule deposition identity: {chain_err:.2e}"));
    let pass = op4_err <= 1e-12 && li_err <= 1e-12 && chain_err <= 1e-12;
    report.record(9, "oracle equivalence", pass, &details);
}

fn simpson(panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = 1.0 / panels as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..panels {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

fn basis_at(space: &SplineSpace<f64>, form: Form, dof: usize, x: f64) -> f64 {
    let bv = space.basis_values(form, x);
    (0..bv.values.len())
        .filter(|&j| bv.dof(j, space.n_cells()) == dof)
        .map(|j| bv.values[j])
        .sum()
}

/// Simpson on each polynomial piece of the path, divided by the path length.
fn piecewise_simpson(space: &SplineSpace<f64>, form: Form, dof: usize, x0: f64, d: f64) -> f64 {
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
        let eps = 1e-13 * len;
        total += len
            * simpson(10_000, |s| {
                basis_at(space, form, dof, (lo + s * len).clamp(lo + eps, hi - eps))
            });
    }
    total / (b - a)
}

fn criterion_10(report: &mut Report, runs: &mut Runs) {
    let mut pass = true;
    let mut details = Vec::new();
    for (dt, target) in [(0.025, 4.0), (0.05, 5.0), (0.1, 6.0), (0.2, 8.0)] {
        let iters = runs
            .get(weibel(Scheme::DisGrad, dt))
            .summary()
            .map_or(f64::NAN, |s| s.mean_iters);
        pass &= (iters - target).abs() <= 2.0;
        details.push(format!(
            "dt={dt}: mean Picard iterations {iters:.2} (target {target} ± 2)"
        ));
    }
    report.record(10, "Picard iteration counts", pass, &details);
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut report = Report { failed: Vec::new() };
    let mut runs = Runs { cache: HashMap::new() };
    criterion_1(&mut report);
    criterion_9(&mut report);
    criterion_2(&mut report, &mut runs);
    criterion_3(&mut report, &mut runs);
    criterion_4(&mut report, &mut runs);
    criterion_10(&mut report, &mut runs);
    criterion_8(&mut report, &mut runs);
    criterion_5(&mut report, &mut runs);
    criterion_7(&mut report, &mut runs);
    criterion_6(&mut report, &mut runs);
    println!("total time {:.0} s", start.elapsed().as_secs_f64());
    if report.failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        report.failed.sort_unstable();
        println!("acceptance: failed criteria {:?}", report.failed);
        ExitCode::FAILURE
    }
}
