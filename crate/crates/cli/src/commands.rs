use invdisc::diffapprox::compare_with_closed_form;
use invdisc::odes::reference_sample;
use invdisc::schemes::{run, seed_from_initial_data, RunOutcome};
use invdisc::{InitialData, OdeSpec, SchemeKind, SchemeSpec, SpacingDirection};
use serde::Serialize;

use crate::config::{CompareConfig, DiffapproxConfig, SolveConfig};
use crate::error::CliError;
use crate::output::{digest_line, emit, num};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    Halted,
    ChecksFailed,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Done => 0,
            Status::Halted => 2,
            Status::ChecksFailed => 3,
        }
    }
}

fn run_from_seed(spec: &SchemeSpec, init: &InitialData, eps: f64, steps: usize) -> Result<RunOutcome, CliError> {
    let seed = seed_from_initial_data(spec, &spec.ode(), init, eps).map_err(CliError::Setup)?;
    run(spec, &seed, steps).map_err(CliError::Setup)
}

fn report_halt(label: &str, out: &RunOutcome) -> bool {
    if let Some(h) = &out.halt {
        eprintln!("{label} halted at step {}: {}", h.step, h.error);
        true
    } else {
        false
    }
}

/// Reference ordinates at `xs`; points the reference solver cannot reach
/// get NaN instead of failing the whole table.
fn reference_ys(ode: &OdeSpec, init: &InitialData, xs: &[f64], tol: f64) -> Vec<f64> {
    match reference_sample(ode, init, xs, tol) {
        Ok(js) => js.iter().map(|j| j.y).collect(),
        Err(_) => xs
            .iter()
            .map(|&x| reference_sample(ode, init, &[x], tol).map_or(f64::NAN, |j| j[0].y))
            .collect(),
    }
}

pub fn solve(c: &SolveConfig, digest: &str) -> Result<Status, CliError> {
    let out = run_from_seed(&c.scheme, &c.initial, c.eps, c.steps)?;
    let xs: Vec<f64> = out.points.iter().map(|p| p.x).collect();
    let refs = reference_ys(&c.scheme.ode(), &c.initial, &xs, c.reference_tol);
    let mut csv = digest_line(digest);
    csv.push_str("step,x,y,y_ref,abs_err,newton_iters,h\n");
    for (k, (p, y_ref)) in out.points.iter().zip(&refs).enumerate() {
        // the first seed row repeats the seed spacing
        let h = if k == 0 { xs[1] - xs[0] } else { xs[k] - xs[k - 1] };
        let iters = k.checked_sub(3).map_or(0, |i| out.reports[i].iterations);
        csv.push_str(&format!(
            "{k},{},{},{},{},{iters},{}\n",
            num(p.x),
            num(p.y),
            num(*y_ref),
            num((p.y - y_ref).abs()),
            num(h)
        ));
    }
    emit(c.out.as_deref(), &csv)?;
    Ok(if report_halt("scheme", &out) {
        Status::Halted
    } else {
        Status::Done
    })
}

pub fn compare(c: &CompareConfig, digest: &str) -> Result<Status, CliError> {
    let ode = c.invariant.ode();
    let standard = c
        .standard
        .unwrap_or_else(|| SchemeSpec::new(SchemeKind::Std { ode, h: c.eps }));
    if standard.ode() != ode {
        return Err(CliError::Config(
            "invariant and standard schemes must solve the same equation".into(),
        ));
    }
    let inv = run_from_seed(&c.invariant, &c.initial, c.eps, c.steps)?;
    let std = run_from_seed(&standard, &c.initial, c.eps, c.steps)?;
    let errors = |out: &RunOutcome| -> Vec<(f64, f64)> {
        let xs: Vec<f64> = out.points.iter().map(|p| p.x).collect();
        let refs = reference_ys(&ode, &c.initial, &xs, c.reference_tol);
        out.points
            .iter()
            .zip(refs)
            .map(|(p, r)| (p.x, (p.y - r).abs()))
            .collect()
    };
    let (ei, es) = (errors(&inv), errors(&std));
    let mut csv = digest_line(digest);
    csv.push_str("x,err_invariant,err_standard,ratio\n");
    let mut ratios = Vec::new();
    // seed rows come from the reference solution; pairs match by step index
    for ((x, a), (_, b)) in ei.iter().zip(&es).skip(3) {
        let ratio = if a == b { 1.0 } else { b / a };
        ratios.push((*x, ratio));
        csv.push_str(&format!("{},{},{},{}\n", num(*x), num(*a), num(*b), num(ratio)));
    }
    emit(c.out.as_deref(), &csv)?;
    if let Some(&(x, last)) = ratios.last() {
        let max = ratios.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        eprintln!("error ratio standard/invariant: max {max:.3e}, final {last:.3e} at x = {x:.6}");
    }
    let halted = report_halt("invariant scheme", &inv) | report_halt("standard scheme", &std);
    Ok(if halted { Status::Halted } else { Status::Done })
}

#[derive(Serialize)]
struct DiffapproxReport<'a> {
    c0: f64,
    c1: f64,
    c2: f64,
    fit_residual: f64,
    eps_grid: &'a [f64],
    closed_form_c1: f64,
    rel_gap: f64,
    below_threshold: bool,
    config_digest: &'a str,
}

pub fn diffapprox(c: &DiffapproxConfig, digest: &str) -> Result<Status, CliError> {
    let ode = c.form.natural_ode();
    let j = ode.jet(c.jet.x, c.jet.y, c.jet.y1, c.jet.y2).map_err(CliError::Setup)?;
    let dir = SpacingDirection::new(c.alpha).map_err(CliError::Setup)?;
    let cmp = compare_with_closed_form(&c.form, &ode, &j, &dir, &c.options, c.variant).map_err(CliError::Setup)?;
    let r = &cmp.report;
    let report = DiffapproxReport {
        c0: r.c0,
        c1: r.c1,
        c2: r.c2,
        fit_residual: r.fit_residual,
        eps_grid: &r.eps_grid,
        closed_form_c1: cmp.closed[1] / cmp.normalization,
        rel_gap: cmp.rel_gap,
        below_threshold: r.c1.abs() <= c.threshold * r.c0.abs().max(1.0),
        config_digest: digest,
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    emit(c.out.as_deref(), &json)?;
    Ok(Status::Done)
}
