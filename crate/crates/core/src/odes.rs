//! The three invariant third-order ODEs, their `y'''`-solved forms, and the
//! integrators used to produce reference solutions.
//!
//! * `Sim2`:  `(1 + y'^2) y''' - 3 y' y''^2 = K y''^2`
//! * `Sl2Y`:  `(y' y''' - 3/2 y''^2) / y'^2 = F(x)`
//! * `Gl2Xy`: `I2 = sign |A| I1^(3/2)` with `I1 = (2x y'' + y') / y'^3` and
//!   `I2 = x^2 (y' y''' - 3 y''^2) / y'^5`; the sign selects the square-root
//!   branch of `I2^2 = A^2 I1^3`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{AlgebraId, ElementSampler};
use crate::invariants::gl2_continuous;
use crate::real::{DoubleDouble, Real};
use crate::stencil::{Jet3, SpacingDirection, Stencil4};

const OVERFLOW_GUARD: f64 = 1e12;
/// Refinement limit per output segment; reached only near a singularity.
const MAX_SEGMENT_STEPS: usize = 1 << 20;
const MIN_STEP: f64 = 1e-14;

/// Right-hand side `F(x)` of the Schwarzian equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Forcing {
    Zero,
    Constant { value: f64 },
    Sin,
}

impl Forcing {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Forcing::Zero => 0.0,
            Forcing::Constant { value } => value,
            Forcing::Sin => x.sin(),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Forcing::Zero | Forcing::Constant { .. } => 0.0,
            Forcing::Sin => x.cos(),
        }
    }

    pub fn is_constant(&self) -> bool {
        !matches!(self, Forcing::Sin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algebra", rename_all = "snake_case")]
pub enum OdeSpec {
    Sim2 { k: f64 },
    Sl2Y { forcing: Forcing },
    Gl2Xy { a: f64, branch: i8 },
}

/// Position and derivatives through second order at the start of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub x0: f64,
    pub y0: f64,
    pub y1: f64,
    pub y2: f64,
}

impl OdeSpec {
    pub fn gl2(a: f64) -> Self {
        OdeSpec::Gl2Xy { a, branch: -1 }
    }

    pub fn algebra(&self) -> AlgebraId {
        match self {
            OdeSpec::Sim2 { .. } => AlgebraId::Sim2,
            OdeSpec::Sl2Y { .. } => AlgebraId::Sl2Y,
            OdeSpec::Gl2Xy { .. } => AlgebraId::Gl2Xy,
        }
    }

    /// Random elements of the full point-symmetry group of this equation.
    pub fn symmetry_sampler(&self) -> ElementSampler {
        match self {
            OdeSpec::Sim2 { .. } => ElementSampler::similitude(),
            OdeSpec::Sl2Y { forcing } if forcing.is_constant() => ElementSampler::mobius_with_translation(),
            OdeSpec::Sl2Y { .. } => ElementSampler::mobius(),
            OdeSpec::Gl2Xy { .. } => ElementSampler::gl2_full(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            OdeSpec::Sim2 { k } if !k.is_finite() => Err(Error::InvalidInput("K must be finite".into())),
            OdeSpec::Sl2Y {
                forcing: Forcing::Constant { value },
            } if !value.is_finite() => Err(Error::InvalidInput("F must be finite".into())),
            OdeSpec::Gl2Xy { a, branch } if !a.is_finite() || (branch != 1 && branch != -1) => Err(
                Error::InvalidInput("GL(2) equation needs finite A and branch +-1".into()),
            ),
            _ => Ok(()),
        }
    }

    /// Equation residual at a jet; zero exactly on solutions.
    pub fn residual(&self, j: &Jet3) -> Result<f64> {
        self.validate()?;
        match *self {
            OdeSpec::Sim2 { k } => Ok((1.0 + j.y1 * j.y1) * j.y3 - 3.0 * j.y1 * j.y2 * j.y2 - k * j.y2 * j.y2),
            OdeSpec::Sl2Y { forcing } => {
                if j.y1 == 0.0 {
                    return Err(Error::DegenerateJet("y' = 0".into()));
                }
                let s = (j.y1 * j.y3 - 1.5 * j.y2 * j.y2) / (j.y1 * j.y1);
                Ok(s - forcing.value(j.x))
            }
            OdeSpec::Gl2Xy { a, branch } => {
                if j.x == 0.0 {
                    return Err(Error::DegenerateJet("x = 0".into()));
                }
                let (i1, i2) = gl2_continuous(j)?;
                if i1 < 0.0 {
                    return Err(Error::DomainViolation(format!("I1 = {i1} < 0")));
                }
                Ok(i2 - branch as f64 * a.abs() * i1.powf(1.5))
            }
        }
    }

    /// Polynomial form `x^4 (y' y''' - 3 y''^2)^2 - A^2 y' (2x y'' + y')^3`
    /// of the GL(2) equation, covering both square-root branches.
    pub fn gl2_quadratic_residual(a: f64, j: &Jet3) -> f64 {
        let w = j.y1 * j.y3 - 3.0 * j.y2 * j.y2;
        j.x.powi(4) * w * w - a * a * j.y1 * (2.0 * j.x * j.y2 + j.y1).powi(3)
    }

    /// The `y'''` that makes the residual vanish.
    pub fn rhs(&self, x: f64, y: f64, y1: f64, y2: f64) -> Result<f64> {
        let _ = y;
        let v = match *self {
            OdeSpec::Sim2 { k } => (3.0 * y1 * y2 * y2 + k * y2 * y2) / (1.0 + y1 * y1),
            OdeSpec::Sl2Y { forcing } => {
                if y1 == 0.0 {
                    return Err(Error::DomainViolation("y' = 0 in Schwarzian equation".into()));
                }
                y1 * forcing.value(x) + 1.5 * y2 * y2 / y1
            }
            OdeSpec::Gl2Xy { a, branch } => {
                let q = 2.0 * x * y2 + y1;
                if !(x > 0.0) || !(y1 > 0.0) || q < 0.0 {
                    return Err(Error::DomainViolation(format!(
                        "GL(2) equation needs x > 0, y' > 0, 2x y'' + y' >= 0 (x = {x}, y' = {y1}, y'' = {y2})"
                    )));
                }
                let i1 = q / y1.powi(3);
                (3.0 * y2 * y2 + branch as f64 * a.abs() * y1.powi(5) * i1.powf(1.5) / (x * x)) / y1
            }
        };
        if !v.is_finite() {
            return Err(Error::DomainViolation("y''' is not finite".into()));
        }
        Ok(v)
    }

    pub fn jet(&self, x: f64, y: f64, y1: f64, y2: f64) -> Result<Jet3> {
        Ok(Jet3::new(x, y, y1, y2, self.rhs(x, y, y1, y2)?))
    }

    /// A random jet on a solution, drawn from a region where the schemes
    /// and the equations are well conditioned. GL(2) jets keep `x` large
    /// against stencil widths, since `x` sets the scale of its dilations.
    pub fn sample_jet<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Jet3> {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        match self {
            OdeSpec::Sim2 { .. } => self.jet(
                rng.random_range(-1.0..1.0),
                rng.random_range(-0.3..0.3),
                rng.random_range(-1.0..1.0),
                sign * rng.random_range(0.5..1.5),
            ),
            OdeSpec::Sl2Y { .. } => self.jet(
                rng.random_range(-1.2..1.2),
                rng.random_range(-0.3..0.3),
                sign * rng.random_range(0.5..1.5),
                rng.random_range(-0.5..0.5),
            ),
            OdeSpec::Gl2Xy { .. } => self.jet(
                rng.random_range(1.0..2.5),
                rng.random_range(-0.3..0.3),
                rng.random_range(0.6..1.4),
                rng.random_range(-0.05..0.3),
            ),
        }
    }

    fn field(&self, x: f64, u: [f64; 3]) -> Result<[f64; 3]> {
        Ok([u[1], u[2], self.rhs(x, u[0], u[1], u[2])?])
    }
}

impl InitialData {
    pub fn to_jet(&self, ode: &OdeSpec) -> Result<Jet3> {
        ode.jet(self.x0, self.y0, self.y1, self.y2)
    }
}

/// Sampled reference solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub jets: Vec<Jet3>,
}

fn guard(u: &[f64; 3]) -> Result<()> {
    if !(u[0].abs() <= OVERFLOW_GUARD && u[1].abs() <= OVERFLOW_GUARD) || !u[2].is_finite() {
        return Err(Error::BlowUp(format!("state exceeded overflow guard: {u:?}")));
    }
    Ok(())
}

fn axpy(u: &[f64; 3], h: f64, k: &[f64; 3]) -> [f64; 3] {
    [u[0] + h * k[0], u[1] + h * k[1], u[2] + h * k[2]]
}

fn rk4_step(ode: &OdeSpec, x: f64, u: [f64; 3], h: f64) -> Result<[f64; 3]> {
    let k1 = ode.field(x, u)?;
    let k2 = ode.field(x + 0.5 * h, axpy(&u, 0.5 * h, &k1))?;
    let k3 = ode.field(x + 0.5 * h, axpy(&u, 0.5 * h, &k2))?;
    let k4 = ode.field(x + h, axpy(&u, h, &k3))?;
    let out = std::array::from_fn(|i| u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    guard(&out)?;
    Ok(out)
}

/// Classic fourth-order Runge–Kutta with `n` equal steps from `x0` to `x1`.
pub fn rk4_fixed(ode: &OdeSpec, x0: f64, u0: [f64; 3], x1: f64, n: usize) -> Result<[f64; 3]> {
    let h = (x1 - x0) / n as f64;
    let mut u = u0;
    for i in 0..n {
        u = rk4_step(ode, x0 + i as f64 * h, u, h)?;
    }
    Ok(u)
}

/// Integrates one segment, doubling the step count until two successive
/// refinements agree within `tol` per unit length.
fn rk4_segment(ode: &OdeSpec, x0: f64, u0: [f64; 3], x1: f64, tol: f64) -> Result<[f64; 3]> {
    let len = (x1 - x0).abs();
    let mut n = ((len / 0.05).ceil() as usize).max(2);
    let mut coarse = rk4_fixed(ode, x0, u0, x1, n)?;
    loop {
        n *= 2;
        if len / (n as f64) < MIN_STEP || n > MAX_SEGMENT_STEPS {
            return Err(Error::BlowUp(format!(
                "reference solver cannot resolve [{x0}, {x1}] to tolerance {tol:e}"
            )));
        }
        let fine = rk4_fixed(ode, x0, u0, x1, n)?;
        let diff = (0..3)
            .map(|i| (fine[i] - coarse[i]).abs() / fine[i].abs().max(1.0))
            .fold(0.0, f64::max);
        if diff <= tol * len.max(f64::MIN_POSITIVE) || diff == 0.0 {
            return Ok(fine);
        }
        coarse = fine;
    }
}

/// Reference solution from `init` to `x_target`, returned on the accepted
/// uniform grid (one jet per step).
pub fn reference_solve(ode: &OdeSpec, init: &InitialData, x_target: f64, tol: f64) -> Result<Trajectory> {
    let start = init.to_jet(ode)?;
    if x_target == init.x0 {
        return Ok(Trajectory { jets: vec![start] });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let len = (x_target - init.x0).abs();
    let n_out = ((len / 0.01).ceil() as usize).max(1);
    let xs: Vec<f64> = (1..=n_out)
        .map(|i| init.x0 + (x_target - init.x0) * i as f64 / n_out as f64)
        .collect();
    let mut jets = vec![start];
    jets.extend(reference_sample(ode, init, &xs, tol)?);
    Ok(Trajectory { jets })
}

/// Reference jets at arbitrary abscissas (either side of `x0`), each segment
/// between consecutive outputs refined to `tol` per unit length.
pub fn reference_sample(ode: &OdeSpec, init: &InitialData, xs: &[f64], tol: f64) -> Result<Vec<Jet3>> {
    let u0 = [init.y0, init.y1, init.y2];
    ode.rhs(init.x0, init.y0, init.y1, init.y2)?;
    let mut out = vec![Jet3::new(0.0, 0.0, 0.0, 0.0, 0.0); xs.len()];
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let (below, above): (Vec<usize>, Vec<usize>) = order.into_iter().partition(|&i| xs[i] < init.x0);
    for side in [above, below.into_iter().rev().collect::<Vec<_>>()] {
        let (mut x, mut u) = (init.x0, u0);
        for i in side {
            if xs[i] != x {
                u = rk4_segment(ode, x, u, xs[i], tol)?;
                x = xs[i];
            }
            out[i] = ode.jet(x, u[0], u[1], u[2])?;
        }
    }
    Ok(out)
}

// Gragg–Bulirsch–Stoer: modified midpoint with polynomial extrapolation in h^2.
const GBS_SEQUENCE: [usize; 10] = [2, 4, 6, 8, 10, 12, 14, 16, 18, 20];
/// Stages and step bound of the fixed extended-precision schedule.
const DD_STAGES: usize = 8;
const DD_MAX_STEP: f64 = 5e-3;

fn field_t<T: Real>(ode: &OdeSpec, x: f64, u: [T; 3]) -> Result<[T; 3]> {
    let y3 = ode.rhs(x, u[0].to_f64(), u[1].to_f64(), u[2].to_f64())?;
    Ok([u[1], u[2], T::from_f64(y3)])
}

fn axpy_t<T: Real>(u: &[T; 3], h: T, k: &[T; 3]) -> [T; 3] {
    std::array::from_fn(|i| u[i] + h * k[i])
}

fn modified_midpoint<T: Real>(ode: &OdeSpec, x: f64, u: [T; 3], big_h: T, n: usize) -> Result<[T; 3]> {
    let h = big_h / T::from_f64(n as f64);
    let hf = h.to_f64();
    let two_h = T::from_f64(2.0) * h;
    let mut prev = u;
    let mut cur = axpy_t(&u, h, &field_t(ode, x, u)?);
    for m in 1..n {
        let next = axpy_t(&prev, two_h, &field_t(ode, x + m as f64 * hf, cur)?);
        prev = cur;
        cur = next;
    }
    let end = field_t(ode, x + big_h.to_f64(), cur)?;
    let half = T::from_f64(0.5);
    Ok(std::array::from_fn(|i| half * (cur[i] + prev[i] + h * end[i])))
}

/// Adds the extrapolated entries to `row`, whose first entry uses `GBS_SEQUENCE[k]`.
fn extrapolate<T: Real>(table: &[[T; 3]], row: &mut Vec<[T; 3]>, k: usize) {
    let n = GBS_SEQUENCE[k] as f64;
    for j in 1..=k {
        let ratio = (n / GBS_SEQUENCE[k - j] as f64).powi(2);
        let denom = T::from_f64(ratio - 1.0);
        let prev = table[j - 1];
        let last = row[j - 1];
        row.push(std::array::from_fn(|i| last[i] + (last[i] - prev[i]) / denom));
    }
}

fn gbs_step(ode: &OdeSpec, x: f64, u: [f64; 3], big_h: f64, depth: u32) -> Result<[f64; 3]> {
    let mut table: Vec<[f64; 3]> = Vec::with_capacity(GBS_SEQUENCE.len());
    let mut best = None;
    for (k, &n) in GBS_SEQUENCE.iter().enumerate() {
        let mut row = vec![modified_midpoint(ode, x, u, big_h, n)?];
        extrapolate(&table, &mut row, k);
        if k > 1 {
            let a = row[k];
            let b = row[k - 1];
            let err = (0..3)
                .map(|i| (a[i] - b[i]).abs() / a[i].abs().max(1.0))
                .fold(0.0, f64::max);
            if err <= 4.0 * f64::EPSILON {
                guard(&a)?;
                return Ok(a);
            }
            best = Some((err, a));
        }
        table = row;
    }
    match best {
        Some((err, a)) if err <= 1e-14 => Ok(a),
        _ if depth < 8 => {
            let mid = gbs_step(ode, x, u, big_h / 2.0, depth + 1)?;
            gbs_step(ode, x + big_h / 2.0, mid, big_h / 2.0, depth + 1)
        }
        _ => Err(Error::BlowUp("extrapolated midpoint failed to converge".into())),
    }
}

/// Fixed schedule: `DD_STAGES` stages of extrapolation over one step.
fn gbs_fixed<T: Real>(ode: &OdeSpec, x: f64, u: [T; 3], big_h: T) -> Result<[T; 3]> {
    let mut table: Vec<[T; 3]> = Vec::new();
    for (k, &n) in GBS_SEQUENCE.iter().take(DD_STAGES).enumerate() {
        let mut row = vec![modified_midpoint(ode, x, u, big_h, n)?];
        extrapolate(&table, &mut row, k);
        table = row;
    }
    Ok(table[DD_STAGES - 1])
}

/// Ordinates of the solution through `j` at `xs`, accumulated in
/// double-double. The right-hand side is evaluated in `f64`; its rounding
/// perturbs `y'''` at the `1e-16` relative level, which third-order
/// differences see only at that level.
pub fn solution_ordinates_dd(ode: &OdeSpec, j: &Jet3, xs: [f64; 4]) -> Result<[DoubleDouble; 4]> {
    let start = [j.y, j.y1, j.y2].map(DoubleDouble::from_f64);
    let x0 = DoubleDouble::from_f64(j.x);
    let mut out = [start[0]; 4];
    for (i, &x) in xs.iter().enumerate() {
        let dist = DoubleDouble::from_f64(x) - x0;
        if dist.to_f64() == 0.0 {
            continue;
        }
        let pieces = ((dist.to_f64().abs() / DD_MAX_STEP).ceil() as usize).max(1);
        let h = dist / DoubleDouble::from_f64(pieces as f64);
        let mut u = start;
        for p in 0..pieces {
            u = gbs_fixed(ode, j.x + p as f64 * h.to_f64(), u, h)?;
        }
        guard(&[u[0].to_f64(), u[1].to_f64(), 0.0])?;
        out[i] = u[0];
    }
    Ok(out)
}

/// Value of the solution through `j` at `x`, to near machine precision.
/// Only `(x, y, y', y'')` of the jet are used; `y'''` follows from the equation.
pub fn local_solution(ode: &OdeSpec, j: &Jet3, x: f64) -> Result<Jet3> {
    let dist = x - j.x;
    let pieces = ((dist.abs() / 0.05).ceil() as usize).max(1);
    let h = dist / pieces as f64;
    let mut u = [j.y, j.y1, j.y2];
    for i in 0..pieces {
        if h != 0.0 {
            u = gbs_step(ode, j.x + i as f64 * h, u, h, 0)?;
        }
    }
    ode.jet(x, u[0], u[1], u[2])
}

/// Stencil sampled from the exact solution through `j`, with `j.x` as `x_n`.
pub fn solution_stencil(ode: &OdeSpec, j: &Jet3, dir: &SpacingDirection, eps: f64) -> Result<Stencil4> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidSpacing(format!("eps must be positive, got {eps}")));
    }
    stencil_through(ode, j, dir.abscissas(j.x, eps))
}

/// Stencil on the exact solution through `j` at the given abscissas;
/// `xs[1]` must equal `j.x`.
pub fn stencil_through(ode: &OdeSpec, j: &Jet3, xs: [f64; 4]) -> Result<Stencil4> {
    let mut ys = [j.y; 4];
    for i in [0, 2, 3] {
        ys[i] = local_solution(ode, j, xs[i])?.y;
    }
    Stencil4::from_xy(xs, ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mobius(x: f64) -> [f64; 4] {
        let d = x + 3.0;
        [(2.0 * x + 1.0) / d, 5.0 / (d * d), -10.0 / d.powi(3), 30.0 / d.powi(4)]
    }

    #[test]
    fn residual_examples() {
        let circle_top = Jet3::new(0.0, 1.0, 0.0, -1.0, 0.0);
        assert_eq!(OdeSpec::Sim2 { k: 0.0 }.residual(&circle_top).unwrap(), 0.0);
        let m = mobius(0.2);
        let mj = Jet3::new(0.2, m[0], m[1], m[2], m[3]);
        let sl = OdeSpec::Sl2Y { forcing: Forcing::Zero };
        assert_abs_diff_eq!(sl.residual(&mj).unwrap(), 0.0, epsilon = 1e-14);
        let up = Jet3::new(0.0, 0.0, 0.0, 1.0, 0.0);
        assert_eq!(OdeSpec::Sim2 { k: 1.0 }.residual(&up).unwrap(), -1.0);
    }

    #[test]
    fn rhs_examples() {
        assert_eq!(OdeSpec::Sim2 { k: 0.0 }.rhs(0.0, 0.0, 0.0, -1.0).unwrap(), 0.0);
        let sl = OdeSpec::Sl2Y { forcing: Forcing::Sin };
        assert_eq!(sl.rhs(0.0, 0.0, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(OdeSpec::Sim2 { k: 2.0 }.rhs(0.0, 0.0, 0.0, 1.0).unwrap(), 2.0);
        assert!(matches!(sl.rhs(0.0, 0.0, 0.0, 1.0), Err(Error::DomainViolation(_))));
        let gl = OdeSpec::gl2(-1.0);
        assert!(matches!(gl.rhs(-1.0, 0.0, 1.0, 0.0), Err(Error::DomainViolation(_))));
        assert!(matches!(gl.rhs(1.0, 0.0, 1.0, -1.0), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn gl2_branches_solve_the_quadratic_form() {
        for branch in [-1, 1] {
            let ode = OdeSpec::Gl2Xy { a: 1.5, branch };
            let j = ode.jet(1.3, 0.2, 0.8, 0.1).unwrap();
            assert_abs_diff_eq!(ode.residual(&j).unwrap(), 0.0, epsilon = 1e-13);
            let scale = j.x.powi(4) * (j.y1 * j.y3).powi(2) + 1.0;
            assert_abs_diff_eq!(OdeSpec::gl2_quadratic_residual(1.5, &j) / scale, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn reference_stays_on_circle() {
        // upper unit circle through its top point
        let ode = OdeSpec::Sim2 { k: 0.0 };
        let init = InitialData {
            x0: 0.0,
            y0: 1.0,
            y1: 0.0,
            y2: -1.0,
        };
        let traj = reference_solve(&ode, &init, 0.6, 1e-12).unwrap();
        for j in &traj.jets {
            assert_abs_diff_eq!(j.x * j.x + j.y * j.y, 1.0, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(traj.jets.last().unwrap().x, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn reference_follows_mobius_curve() {
        let ode = OdeSpec::Sl2Y { forcing: Forcing::Zero };
        let m = mobius(0.0);
        let init = InitialData {
            x0: 0.0,
            y0: m[0],
            y1: m[1],
            y2: m[2],
        };
        let xs = [-0.5, 0.25, 1.0, 2.0];
        let jets = reference_sample(&ode, &init, &xs, 1e-12).unwrap();
        for (j, x) in jets.iter().zip(xs) {
            assert_abs_diff_eq!(j.y, mobius(x)[0], epsilon = 1e-11);
        }
    }

    #[test]
    fn zero_length_run_returns_initial_jet() {
        let ode = OdeSpec::Sim2 { k: 1.0 };
        let init = InitialData {
            x0: 0.5,
            y0: 0.1,
            y1: 0.2,
            y2: 0.3,
        };
        let t = reference_solve(&ode, &init, 0.5, 1e-10).unwrap();
        assert_eq!(t.jets, vec![init.to_jet(&ode).unwrap()]);
    }

    #[test]
    fn blow_up_is_detected() {
        // y' = tan-like growth: Sim2 with K large drives y'' to infinity
        let ode = OdeSpec::Sl2Y {
            forcing: Forcing::Constant { value: 50.0 },
        };
        let init = InitialData {
            x0: 0.0,
            y0: 0.0,
            y1: 1.0,
            y2: 0.0,
        };
        let err = reference_solve(&ode, &init, 5.0, 1e-10).unwrap_err();
        assert!(matches!(err, Error::BlowUp(_) | Error::DomainViolation(_)), "{err:?}");
    }

    #[test]
    fn local_solution_is_machine_accurate() {
        let ode = OdeSpec::Sl2Y { forcing: Forcing::Zero };
        let m = mobius(0.0);
        let j = Jet3::new(0.0, m[0], m[1], m[2], m[3]);
        for x in [-0.07, 0.01, 0.13] {
            let y = local_solution(&ode, &j, x).unwrap().y;
            assert_abs_diff_eq!(y, mobius(x)[0], epsilon = 1e-15);
        }
    }
}
