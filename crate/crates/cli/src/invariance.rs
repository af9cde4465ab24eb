//! Randomized invariance checks over stencil invariants, solved scheme
//! stencils and the first differential approximations.

use invdisc::diffapprox::{check_first_approx_invariance, zero_set_spacing, FirstApprox, FormVariant};
use invdisc::invariants::{gl2_j, gl2_xi, sim2_j, sim2_xi, sl2_cross_ratio, sl2_j1, AlphaWeight};
use invdisc::schemes::{run, scheme_residuals, seed_from_initial_data, SL2_SECOND_ORDER_ABC};
use invdisc::{AlgebraId, ElementSampler, Forcing, GroupElement, InitialData, Point, SchemeKind, SchemeSpec, Stencil4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands::Status;
use crate::config::{InvarianceConfig, Suite};
use crate::error::CliError;
use crate::output::{digest_line, emit};

const WEIGHT_TOL: f64 = 1e-10;
const FIRST_APPROX_EPS: f64 = 1e-8;
const MAX_DRAWS: usize = 1000;

struct Line {
    pass: bool,
    label: String,
    detail: String,
}

pub fn invariance(c: &InvarianceConfig, digest: &str) -> Result<Status, CliError> {
    if c.elements == 0 {
        return Err(CliError::Config("group element count must be positive".into()));
    }
    if c.suites.is_empty() {
        return Err(CliError::Config("no suites selected".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut text = digest_line(digest);
    let mut all = true;
    for suite in &c.suites {
        let lines = match suite {
            Suite::Invariants => stencil_invariants(&mut rng, c)?,
            Suite::Schemes => schemes(&mut rng, c.elements)?,
            Suite::Diffapprox => first_approximations(&mut rng, c.elements),
        };
        let pass = lines.iter().all(|l| l.pass);
        all &= pass;
        text.push_str(&format!("suite {} {}\n", suite_name(*suite), verdict(pass)));
        for l in lines {
            text.push_str(&format!("  {} {:<16} {}\n", verdict(l.pass), l.label, l.detail));
        }
    }
    text.push_str(&format!("overall {}\n", verdict(all)));
    emit(c.out.as_deref(), &text)?;
    Ok(if all { Status::Done } else { Status::ChecksFailed })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Invariants => "invariants",
        Suite::Schemes => "schemes",
        Suite::Diffapprox => "diffapprox",
    }
}

fn algebra_name(a: AlgebraId) -> &'static str {
    match a {
        AlgebraId::Sim2 => "sim2",
        AlgebraId::Sl2Y => "sl2",
        AlgebraId::Gl2Xy => "gl2",
    }
}

fn quantity_names(a: AlgebraId) -> &'static [&'static str] {
    match a {
        AlgebraId::Sim2 | AlgebraId::Gl2Xy => &["xi1", "xi2", "xi3", "xi4", "xi5", "J1", "J2"],
        AlgebraId::Sl2Y => &["R", "J1"],
    }
}

fn quantities(a: AlgebraId, s: &Stencil4) -> invdisc::Result<Vec<f64>> {
    let w = AlphaWeight::default();
    match a {
        AlgebraId::Sim2 => {
            let (j1, j2) = sim2_j(s, w);
            Ok(sim2_xi(s).0.iter().copied().chain([j1, j2]).collect())
        }
        AlgebraId::Sl2Y => Ok(vec![sl2_cross_ratio(s)?, sl2_j1(s)?]),
        AlgebraId::Gl2Xy => {
            let (j1, j2) = gl2_j(s, w)?;
            Ok(gl2_xi(s)?.0.iter().copied().chain([j1, j2]).collect())
        }
    }
}

/// Scale factor of `g` seen by relative invariants: `X4` dilates for SIM2
/// and stretches `x` for GL2; every other generator leaves them fixed.
fn multiplier(g: &GroupElement) -> f64 {
    match g.algebra() {
        AlgebraId::Sl2Y => 1.0,
        AlgebraId::Sim2 | AlgebraId::Gl2Xy => g.word().iter().filter(|w| w.0 == 4).map(|w| w.1).sum::<f64>().exp(),
    }
}

fn random_stencil(rng: &mut ChaCha8Rng, a: AlgebraId) -> Stencil4 {
    let mut x = match a {
        AlgebraId::Gl2Xy => rng.random_range(0.5..2.0),
        _ => rng.random_range(-1.0..1.0),
    };
    let pts = std::array::from_fn(|_| {
        let p = Point::new(x, rng.random_range(-1.0..1.0));
        x += rng.random_range(0.2..1.0);
        p
    });
    Stencil4::new(pts).expect("abscissas increase")
}

/// Values of each quantity before and after a random element, with the
/// element's multiplier.
fn sample_pair(rng: &mut ChaCha8Rng, sampler: &ElementSampler) -> Result<(Vec<f64>, Vec<f64>, f64), CliError> {
    let a = sampler.algebra;
    for _ in 0..MAX_DRAWS {
        let s = random_stencil(rng, a);
        let g = sampler.sample(rng);
        let Ok(t) = g.apply_stencil(&s) else { continue };
        if let (Ok(qs), Ok(qt)) = (quantities(a, &s), quantities(a, &t)) {
            return Ok((qs, qt, multiplier(&g)));
        }
    }
    Err(CliError::Config(format!(
        "sampler {sampler:?} produced no valid transformed stencil in {MAX_DRAWS} draws"
    )))
}

fn weight_label(w: f64) -> String {
    if w == 0.0 {
        "invariant".into()
    } else {
        format!("equivariant, weight lambda^{w}")
    }
}

fn stencil_invariants(rng: &mut ChaCha8Rng, c: &InvarianceConfig) -> Result<Vec<Line>, CliError> {
    let samplers = match &c.sampler {
        Some(s) => {
            if s.generators.is_empty() || s.generators.iter().any(|g| g.0 == 0 || g.0 > s.algebra.max_generator()) {
                return Err(CliError::Config(format!("invalid generator list {:?}", s.generators)));
            }
            vec![s.clone()]
        }
        None => vec![
            ElementSampler::similitude(),
            ElementSampler::mobius_with_translation(),
            ElementSampler::gl2_full(),
        ],
    };
    // candidate weights ordered by magnitude so that ties resolve to the smallest
    let mut candidates: Vec<f64> = (-6..=6).map(|k| k as f64 / 2.0).collect();
    candidates.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut lines = Vec::new();
    for sampler in samplers {
        let names = quantity_names(sampler.algebra);
        let pairs = (0..c.elements)
            .map(|_| sample_pair(rng, &sampler))
            .collect::<Result<Vec<_>, _>>()?;
        for (k, name) in names.iter().enumerate() {
            let dev = |w: f64| {
                pairs.iter().fold(0.0f64, |m, (qs, qt, l)| {
                    let expect = l.powf(w) * qs[k];
                    let scale = expect.abs().max(qt[k].abs());
                    if scale == 0.0 {
                        m
                    } else {
                        m.max((qt[k] - expect).abs() / scale)
                    }
                })
            };
            let (w, d) = candidates
                .iter()
                .map(|&w| (w, dev(w)))
                .fold(
                    (f64::NAN, f64::INFINITY),
                    |best, cur| if cur.1 < best.1 { cur } else { best },
                );
            let pass = d <= WEIGHT_TOL;
            let detail = if pass {
                format!("{} (max rel dev {d:.1e})", weight_label(w))
            } else {
                format!("no consistent weight (best lambda^{w}, max rel dev {d:.1e})")
            };
            lines.push(Line {
                pass,
                label: format!("{} {name}", algebra_name(sampler.algebra)),
                detail,
            });
        }
    }
    Ok(lines)
}

fn schemes(rng: &mut ChaCha8Rng, elements: usize) -> Result<Vec<Line>, CliError> {
    let cases = [
        (
            "sim2 K=1",
            SchemeKind::InvSim2 {
                k: 1.0,
                alpha: AlphaWeight::default(),
            },
            InitialData {
                x0: 0.0,
                y0: 0.0,
                y1: 0.0,
                y2: 1.0,
            },
            0.05,
            8,
        ),
        (
            "sl2 F=sin",
            SchemeKind::InvSl2 {
                forcing: Forcing::Sin,
                abc: SL2_SECOND_ORDER_ABC,
                lattice: Default::default(),
            },
            InitialData {
                x0: 0.0,
                y0: 0.0,
                y1: 1.0,
                y2: 0.0,
            },
            0.1,
            30,
        ),
        (
            "gl2 A=-1",
            SchemeKind::InvGl2 {
                a: -1.0,
                branch: -1,
                alpha: AlphaWeight::default(),
                gamma: None,
            },
            InitialData {
                x0: 1.0,
                y0: 0.0,
                y1: 1.0,
                y2: 0.0,
            },
            0.05,
            30,
        ),
    ];
    let mut lines = Vec::new();
    for (label, kind, init, eps, n) in cases {
        let spec = SchemeSpec::new(kind);
        let seed = seed_from_initial_data(&spec, &spec.ode(), &init, eps).map_err(CliError::Compute)?;
        let out = run(&spec, &seed, n).map_err(CliError::Compute)?;
        let stencils: Vec<Stencil4> = out
            .points
            .windows(4)
            .filter_map(|w| Stencil4::new([w[0], w[1], w[2], w[3]]).ok())
            .collect();
        let sampler = spec.ode().symmetry_sampler();
        let tol = 10.0 * spec.newton_tol;
        let (mut worst, mut checked) = (0.0f64, 0);
        for i in 0..elements {
            let s = &stencils[i % stencils.len()];
            let t = (0..MAX_DRAWS).find_map(|_| sampler.sample(rng).apply_stencil(s).ok());
            if let Some(r) = t.and_then(|t| scheme_residuals(&out.spec, &t).ok()) {
                worst = worst.max(r[0].abs()).max(r[1].abs());
                checked += 1;
            }
        }
        lines.push(Line {
            pass: checked == elements && worst <= tol,
            label: label.into(),
            detail: format!("{checked}/{elements} transformed stencils, max residual {worst:.1e} (limit {tol:.0e})"),
        });
    }
    Ok(lines)
}

fn first_approximations(rng: &mut ChaCha8Rng, elements: usize) -> Vec<Line> {
    let forms = [
        FirstApprox::Sim2Lattice,
        FirstApprox::Sim2Eq {
            k: 1.3,
            alpha: AlphaWeight(0.5),
        },
        FirstApprox::Sl2Eq {
            forcing: Forcing::Sin,
            abc: [0.0; 3],
        },
        FirstApprox::Gl2Lattice { gamma: 1.1 },
        FirstApprox::Gl2Eq {
            a: -1.0,
            branch: -1,
            alpha: AlphaWeight(0.5),
        },
    ];
    let eps = FIRST_APPROX_EPS;
    forms
        .iter()
        .map(|fa| {
            let ode = fa.natural_ode();
            let sampler = ode.symmetry_sampler();
            let (mut on, mut kept, mut worst) = (0, 0, 0.0f64);
            let mut first_error = None;
            for _ in 0..elements {
                let trial = (|| {
                    let j = ode.sample_jet(rng)?;
                    let h1 = eps * rng.random_range(0.7..1.5);
                    let mut h0 = eps * rng.random_range(0.7..1.5);
                    if matches!(fa, FirstApprox::Sl2Eq { .. }) {
                        // the zero set h2 = h0 - 2 h1 needs h0 > 2 h1
                        h0 += 3.0 * h1;
                    }
                    let h2 = zero_set_spacing(fa, &j, h0, h1, FormVariant::Corrected)?;
                    let g = sampler.sample_for_jet(rng, &j, 3.0)?;
                    check_first_approx_invariance(fa, &ode, &g, &j, [h0, h1, h2], FormVariant::Corrected)
                })();
                match trial {
                    Ok(c) => {
                        on += c.on_zero_set as usize;
                        kept += c.preserved as usize;
                        worst = worst.max(c.transformed.abs() / c.tol);
                    }
                    Err(e) => {
                        first_error.get_or_insert(e);
                    }
                }
            }
            let mut detail = format!(
                "eps {eps:.0e}: {on}/{elements} on zero set, {kept}/{elements} preserved, worst {worst:.2} tol"
            );
            if let Some(e) = &first_error {
                detail.push_str(&format!("; first error: {e}"));
            }
            Line {
                pass: kept == elements,
                label: format!("{:?}", fa.id()),
                detail,
            }
        })
        .collect()
}
