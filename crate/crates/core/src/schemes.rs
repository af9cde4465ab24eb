//! Four-point difference schemes: the invariant schemes for the three
//! equations, a divided-difference collocation baseline, and the stepping loop.
//!
//! Every scheme is a pair of equations on the stencil
//! `(P_{n-1}, P_n, P_{n+1}, P_{n+2})`: one fixes the lattice, the other
//! approximates the ODE. [`scheme_residuals`] returns both, rescaled so that
//! each is invariant (weight zero) under the scheme's group and of order one
//! in roundoff; a stencil solves the scheme when both vanish.

pub mod newton;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::{gl2_j, sim2_j, sim2_xi, sl2_j1, AlphaWeight, Sim2Xi};
use crate::odes::{reference_sample, Forcing, InitialData, OdeSpec};
use crate::stencil::{discrete_derivatives, Jet3, Point, Stencil4};

pub use newton::{NewtonOptions, NewtonReport};

/// Lattice equation of the Schwarzian scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Sl2Lattice {
    /// `x_{n+2} = 2 x_{n+1} - x_n`
    #[default]
    Uniform,
    /// `h_{n+2} = ratio * h_{n+1}`
    Geometric { ratio: f64 },
}

impl Sl2Lattice {
    fn ratio(self) -> f64 {
        match self {
            Sl2Lattice::Uniform => 1.0,
            Sl2Lattice::Geometric { ratio } => ratio,
        }
    }
}

/// Evaluation-point offsets `(a, b, c)` of the forcing term giving a
/// second-order Schwarzian scheme.
pub const SL2_SECOND_ORDER_ABC: [f64; 3] = [-0.25, 0.5, 0.25];

fn second_order_abc() -> [f64; 3] {
    SL2_SECOND_ORDER_ABC
}

fn negative_branch() -> i8 {
    -1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemeKind {
    InvSim2 {
        k: f64,
        #[serde(default)]
        alpha: AlphaWeight,
    },
    InvSl2 {
        forcing: Forcing,
        #[serde(default = "second_order_abc")]
        abc: [f64; 3],
        #[serde(default)]
        lattice: Sl2Lattice,
    },
    InvGl2 {
        a: f64,
        #[serde(default = "negative_branch")]
        branch: i8,
        #[serde(default)]
        alpha: AlphaWeight,
        /// Ratio `xi_1 / xi_2` kept constant along the lattice; taken from
        /// the seed when absent.
        #[serde(default)]
        gamma: Option<f64>,
    },
    /// Collocation of the ODE with the discrete derivatives at `x_n` on a
    /// uniform lattice of step `h`.
    Std { ode: OdeSpec, h: f64 },
}

fn default_tol() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    #[serde(flatten)]
    pub kind: SchemeKind,
    #[serde(default = "default_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind) -> Self {
        Self {
            kind,
            newton_tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidInput(
                "Newton tolerance and iteration limit must be positive".into(),
            ));
        }
        match self.kind {
            SchemeKind::InvSl2 { lattice, abc, .. } => {
                let q = lattice.ratio();
                if !(q > 0.0 && q.is_finite()) {
                    return Err(Error::InvalidSpacing(format!(
                        "lattice ratio must be positive, got {q}"
                    )));
                }
                if abc.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("(a, b, c) must be finite".into()));
                }
            }
            SchemeKind::Std { h, .. } if !(h > 0.0 && h.is_finite()) => {
                return Err(Error::InvalidSpacing(format!("step must be positive, got {h}")));
            }
            SchemeKind::InvGl2 { gamma: Some(g), .. } if !(g > 0.0 && g.is_finite()) => {
                return Err(Error::InvalidInput(format!("gamma must be positive, got {g}")));
            }
            _ => {}
        }
        Ok(())
    }

    /// The equation this scheme approximates.
    pub fn ode(&self) -> OdeSpec {
        match self.kind {
            SchemeKind::InvSim2 { k, .. } => OdeSpec::Sim2 { k },
            SchemeKind::InvSl2 { forcing, .. } => OdeSpec::Sl2Y { forcing },
            SchemeKind::InvGl2 { a, branch, .. } => OdeSpec::Gl2Xy { a, branch },
            SchemeKind::Std { ode, .. } => ode,
        }
    }

    fn newton_options(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.newton_tol,
            max_iter: self.max_iter,
            ..NewtonOptions::default()
        }
    }

    /// Fixes an unset `gamma` to the ratio measured on `st`.
    pub fn resolved(&self, st: &StepState) -> Result<SchemeSpec> {
        let mut out = *self;
        if let SchemeKind::InvGl2 {
            gamma: gamma @ None, ..
        } = &mut out.kind
        {
            let [q0, q1, q2] = st.points();
            if !(q0.x > 0.0) {
                return Err(Error::DomainViolation("abscissas must be positive".into()));
            }
            let xi_new = (q2.y - q1.y) / (q1.x * q2.x).sqrt();
            let xi_old = (q1.y - q0.y) / (q0.x * q1.x).sqrt();
            let g = xi_new / xi_old;
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::DegenerateStencil(format!("seed gives gamma = {g}")));
            }
            *gamma = Some(g);
        }
        Ok(out)
    }
}

/// The three most recent lattice points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepState {
    p: [Point; 3],
}

impl StepState {
    pub fn new(p: [Point; 3]) -> Result<Self> {
        if p.iter().any(|q| !q.is_finite()) {
            return Err(Error::InvalidInput("state point is not finite".into()));
        }
        if !(p[1].x > p[0].x && p[2].x > p[1].x) {
            return Err(Error::OrderViolation);
        }
        Ok(Self { p })
    }

    pub fn points(&self) -> [Point; 3] {
        self.p
    }

    /// Spacings `[h_n, h_{n+1}]`.
    pub fn h(&self) -> [f64; 2] {
        [self.p[1].x - self.p[0].x, self.p[2].x - self.p[1].x]
    }

    pub fn stencil_with(&self, next: Point) -> Result<Stencil4> {
        Stencil4::new([self.p[0], self.p[1], self.p[2], next])
    }

    pub fn advance(&self, next: Point) -> Result<StepState> {
        StepState::new([self.p[1], self.p[2], next])
    }

    /// Last three points of a stencil.
    pub fn from_stencil_tail(s: &Stencil4) -> StepState {
        let p = s.points();
        StepState { p: [p[1], p[2], p[3]] }
    }
}

fn sl2_xi(s: &Stencil4, abc: [f64; 3]) -> f64 {
    let [h0, h1, h2] = s.h();
    s.reference().x + abc[0] * h0 + abc[1] * h1 + abc[2] * h2
}

fn sim2_equation(s: &Stencil4, k: f64, alpha: AlphaWeight) -> [f64; 2] {
    let Sim2Xi(xi) = sim2_xi(s);
    let (j1, j2) = sim2_j(s, alpha);
    [
        xi[0] * xi[2] / (xi[1] * xi[1]) - 1.0,
        (j2 - k * j1 * j1) * xi[1] * xi[1],
    ]
}

fn gl2_equation(s: &Stencil4, a: f64, branch: i8, alpha: AlphaWeight, gamma: f64) -> Result<[f64; 2]> {
    let xi = crate::invariants::gl2_xi(s)?.0;
    let (j1, j2) = gl2_j(s, alpha)?;
    if j1 < 0.0 {
        return Err(Error::DomainViolation(format!("J1 = {j1} < 0 under the 3/2 power")));
    }
    Ok([
        xi[0] / xi[1] - gamma,
        (j2 - branch as f64 * a.abs() * j1.powf(1.5)) * xi[1].powi(3),
    ])
}

/// `[lattice residual, equation residual]` of the scheme on a stencil.
pub fn scheme_residuals(spec: &SchemeSpec, s: &Stencil4) -> Result<[f64; 2]> {
    let [h0, h1, h2] = s.h();
    match spec.kind {
        SchemeKind::InvSim2 { k, alpha } => Ok(sim2_equation(s, k, alpha)),
        SchemeKind::InvSl2 { forcing, abc, lattice } => {
            let _ = h0;
            Ok([
                (h2 - lattice.ratio() * h1) / h1,
                sl2_j1(s)? - forcing.value(sl2_xi(s, abc)),
            ])
        }
        SchemeKind::InvGl2 {
            a,
            branch,
            alpha,
            gamma,
        } => {
            let gamma = gamma
                .ok_or_else(|| Error::InvalidInput("gamma must be resolved before evaluating the scheme".into()))?;
            gl2_equation(s, a, branch, alpha, gamma)
        }
        SchemeKind::Std { ode, h } => {
            let p = discrete_derivatives(s);
            let r = s.reference();
            let e = ode.residual(&Jet3::new(r.x, r.y, p[0], p[1], p[2]))?;
            Ok([(h2 - h) / h, e * h.powi(3)])
        }
    }
}

/// Advances the scheme by one point.
pub fn step(spec: &SchemeSpec, st: &StepState) -> Result<(Point, NewtonReport)> {
    spec.validate()?;
    let spec = spec.resolved(st)?;
    let [q0, q1, q2] = st.points();
    let guess = Point::new(3.0 * q2.x - 3.0 * q1.x + q0.x, 3.0 * q2.y - 3.0 * q1.y + q0.y);
    let h = st.h()[1];
    let opts = spec.newton_options();
    match spec.kind {
        SchemeKind::InvSl2 { forcing, abc, lattice } => sl2_step(st, forcing, abc, lattice, opts.tol),
        SchemeKind::Std { h, .. } => {
            let x = q2.x + h;
            let f = |u: &[f64; 1]| -> Result<[f64; 1]> {
                let s = st.stencil_with(Point::new(x, u[0]))?;
                Ok([scheme_residuals(&spec, &s)?[1]])
            };
            let (u, rep) = newton::solve(f, [guess.y], [h], &opts)?;
            Ok((Point::new(x, u[0]), rep))
        }
        SchemeKind::InvSim2 { .. } | SchemeKind::InvGl2 { .. } => {
            let f = |u: &[f64; 2]| -> Result<[f64; 2]> {
                scheme_residuals(&spec, &st.stencil_with(Point::new(u[0], u[1]))?)
            };
            let (u, rep) = newton::solve(f, [guess.x, guess.y], [h, h], &opts)?;
            Ok((Point::new(u[0], u[1]), rep))
        }
    }
}

/// The Schwarzian scheme is linear in the cross-ratio, so the new ordinate
/// has a closed form once the lattice fixes `x_{n+2}`.
fn sl2_step(
    st: &StepState,
    forcing: Forcing,
    abc: [f64; 3],
    lattice: Sl2Lattice,
    tol: f64,
) -> Result<(Point, NewtonReport)> {
    let [q0, q1, q2] = st.points();
    let [h0, h1] = st.h();
    let h2 = lattice.ratio() * h1;
    let x = q2.x + h2;
    let sum = h0 + h1 + h2;
    let pre = 6.0 * h2 * h0 / (h1 * (h1 + h2) * (h0 + h1) * sum);
    let x_ratio = (h2 + h1) * (h1 + h0) / (h0 * h2);
    let xi = q1.x + abc[0] * h0 + abc[1] * h1 + abc[2] * h2;
    let r = x_ratio - forcing.value(xi) / pre;
    let b = q2.y - q0.y;
    let c = q1.y - q0.y;
    let den = b - r * c;
    if c == 0.0 || den == 0.0 {
        return Err(Error::DegenerateStencil("degenerate ordinate differences".into()));
    }
    let y = (q1.y * b - r * c * q2.y) / den;
    let next = Point::new(x, y);
    let s = st.stencil_with(next)?;
    let residual = (sl2_j1(&s)? - forcing.value(sl2_xi(&s, abc))).abs();
    if !residual.is_finite() {
        return Err(Error::DegenerateStencil("non-finite residual".into()));
    }
    Ok((
        next,
        NewtonReport {
            iterations: 0,
            residual_norm: residual,
            converged: residual <= tol.max(1e3 * f64::EPSILON),
        },
    ))
}

/// Where and why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Halt {
    /// Index of the step that failed (0 is the first step after the seed).
    pub step: usize,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Seed points followed by one point per completed step.
    pub points: Vec<Point>,
    pub reports: Vec<NewtonReport>,
    pub halt: Option<Halt>,
    /// The scheme actually stepped, with `gamma` resolved.
    pub spec: SchemeSpec,
}

/// Iterates [`step`] from `seed`, stopping at the first failure.
pub fn run(spec: &SchemeSpec, seed: &StepState, n_steps: usize) -> Result<RunOutcome> {
    spec.validate()?;
    let spec = spec.resolved(seed)?;
    let mut points = seed.points().to_vec();
    let mut reports = Vec::with_capacity(n_steps);
    let mut st = *seed;
    let mut halt = None;
    for i in 0..n_steps {
        match step(&spec, &st).and_then(|(p, rep)| Ok((st.advance(p)?, p, rep))) {
            Ok((next, p, rep)) => {
                st = next;
                points.push(p);
                reports.push(rep);
            }
            Err(error) => {
                halt = Some(Halt { step: i, error });
                break;
            }
        }
    }
    Ok(RunOutcome {
        points,
        reports,
        halt,
        spec,
    })
}

/// Seed points at `x0 - eps`, `x0`, `x0 + eps` taken from the reference solution.
pub fn seed_from_initial_data(spec: &SchemeSpec, ode: &OdeSpec, init: &InitialData, eps: f64) -> Result<StepState> {
    spec.validate()?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidSpacing(format!(
            "seed spacing must be positive, got {eps}"
        )));
    }
    let xs = [init.x0 - eps, init.x0, init.x0 + eps];
    let jets = reference_sample(ode, init, &xs, 1e-13)?;
    StepState::new([0, 1, 2].map(|i| Point::new(jets[i].x, jets[i].y)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mobius(x: f64) -> f64 {
        (2.0 * x + 1.0) / (x + 3.0)
    }

    fn state(pts: [(f64, f64); 3]) -> StepState {
        StepState::new(pts.map(|(x, y)| Point::new(x, y))).unwrap()
    }

    fn sl2(forcing: Forcing) -> SchemeSpec {
        SchemeSpec::new(SchemeKind::InvSl2 {
            forcing,
            abc: SL2_SECOND_ORDER_ABC,
            lattice: Sl2Lattice::Uniform,
        })
    }

    #[test]
    fn sl2_step_stays_on_mobius_curve() {
        let h = 0.05;
        let st = state([(0.0, mobius(0.0)), (h, mobius(h)), (2.0 * h, mobius(2.0 * h))]);
        let (p, rep) = step(&sl2(Forcing::Zero), &st).unwrap();
        assert_abs_diff_eq!(p.x, 3.0 * h, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, mobius(3.0 * h), epsilon = 1e-12);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn std_step_keeps_straight_line() {
        let spec = SchemeSpec::new(SchemeKind::Std {
            ode: OdeSpec::Sim2 { k: 0.0 },
            h: 0.1,
        });
        let st = state([(0.0, 2.0), (0.1, 2.0), (0.2, 2.0)]);
        let (p, _) = step(&spec, &st).unwrap();
        assert_abs_diff_eq!(p.x, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn sim2_step_on_circle_with_equal_chords() {
        let spec = SchemeSpec::new(SchemeKind::InvSim2 {
            k: 0.0,
            alpha: AlphaWeight::default(),
        });
        let at = |deg: f64| {
            let t = deg.to_radians();
            (t.cos(), t.sin())
        };
        let st = state([at(100.0), at(90.0), at(80.0)]);
        let (p, rep) = step(&spec, &st).unwrap();
        assert!(rep.converged);
        let (ex, ey) = at(70.0);
        assert_abs_diff_eq!(p.x, ex, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, ey, epsilon = 1e-12);
        let r = scheme_residuals(&spec, &st.stencil_with(p).unwrap()).unwrap();
        assert!(r[0].abs() <= 1e-12 && r[1].abs() <= 1e-12, "{r:?}");
    }

    #[test]
    fn gl2_step_keeps_ratio() {
        let spec = SchemeSpec::new(SchemeKind::InvGl2 {
            a: -1.0,
            branch: -1,
            alpha: AlphaWeight::default(),
            gamma: None,
        });
        let ode = spec.ode();
        let init = InitialData {
            x0: 1.0,
            y0: 0.0,
            y1: 1.0,
            y2: 0.0,
        };
        let seed = seed_from_initial_data(&spec, &ode, &init, 0.01).unwrap();
        let out = run(&spec, &seed, 20).unwrap();
        assert!(out.halt.is_none(), "{:?}", out.halt);
        let SchemeKind::InvGl2 { gamma: Some(g), .. } = out.spec.kind else {
            panic!("gamma unresolved")
        };
        for w in out.points.windows(4) {
            let s = Stencil4::new([w[0], w[1], w[2], w[3]]).unwrap();
            let r = scheme_residuals(&out.spec, &s).unwrap();
            assert!(r[0].abs() <= 1e-12, "ratio drift {} vs gamma {g}", r[0]);
        }
    }

    #[test]
    fn zero_steps_returns_seed() {
        let st = state([(0.0, 0.0), (0.1, 0.1), (0.2, 0.3)]);
        let out = run(&sl2(Forcing::Zero), &st, 0).unwrap();
        assert_eq!(out.points, st.points().to_vec());
        assert!(out.reports.is_empty() && out.halt.is_none());
    }

    #[test]
    fn unordered_seed_is_rejected() {
        let bad = [(0.0, 0.0), (0.2, 0.1), (0.1, 0.3)].map(|(x, y)| Point::new(x, y));
        assert_eq!(StepState::new(bad), Err(Error::OrderViolation));
    }

    #[test]
    fn mobius_run_of_100_steps() {
        let h = 0.02;
        let st = state([(0.0, mobius(0.0)), (h, mobius(h)), (2.0 * h, mobius(2.0 * h))]);
        let out = run(&sl2(Forcing::Zero), &st, 100).unwrap();
        assert!(out.halt.is_none());
        let err = out.points.iter().map(|p| (p.y - mobius(p.x)).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-10, "max error {err}");
    }

    #[test]
    fn seeding() {
        let spec = sl2(Forcing::Zero);
        let ode = spec.ode();
        let d = 3.0;
        let init = InitialData {
            x0: 0.0,
            y0: 1.0 / 3.0,
            y1: 5.0 / (d * d),
            y2: -10.0 / d.powi(3),
        };
        let st = seed_from_initial_data(&spec, &ode, &init, 0.1).unwrap();
        for p in st.points() {
            assert_abs_diff_eq!(p.y, mobius(p.x), epsilon = 1e-13);
        }
        assert!(matches!(
            seed_from_initial_data(&spec, &ode, &init, 0.0),
            Err(Error::InvalidSpacing(_))
        ));
        let circle = InitialData {
            x0: 0.0,
            y0: 1.0,
            y1: 0.0,
            y2: -1.0,
        };
        let sim = SchemeSpec::new(SchemeKind::InvSim2 {
            k: 0.0,
            alpha: AlphaWeight::default(),
        });
        let st = seed_from_initial_data(&sim, &sim.ode(), &circle, 0.1).unwrap();
        for p in st.points() {
            assert_abs_diff_eq!(p.x.hypot(p.y), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn halting_keeps_partial_trajectory() {
        // constant data has y' = 0, outside the Schwarzian equation's domain
        let spec = SchemeSpec::new(SchemeKind::Std {
            ode: OdeSpec::Sl2Y { forcing: Forcing::Zero },
            h: 0.1,
        });
        let st = state([(0.0, 1.0), (0.1, 1.0), (0.2, 1.0)]);
        let out = run(&spec, &st, 5).unwrap();
        let halt = out.halt.expect("run should halt");
        assert_eq!(halt.step, 0);
        assert_eq!(out.points.len(), 3);
    }
}
