//! Differential approximations of scheme equations.
//!
//! A scheme equation evaluated on a stencil sampled from an exact solution,
//! with spacings `h_k = alpha_k * eps`, has an expansion
//! `r(eps) = eps^p (c0 + c1 eps + c2 eps^2 + ...)`. [`extract_expansion`]
//! recovers the coefficients by least squares over a geometric `eps` grid.
//! [`FirstApprox`] carries closed forms for the two leading terms of the five
//! scheme equations, expressed through the continuous jet.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::GroupElement;
use crate::invariants::{
    gl2_continuous, gl2_j_raw, gl2_xi_raw, schwarzian, sim2_j_raw, sim2_xi_raw, sl2_j1_raw, AlphaWeight,
};
use crate::odes::{solution_ordinates_dd, Forcing, OdeSpec};
use crate::real::{DoubleDouble, Real};
use crate::stencil::{Jet3, SpacingDirection, Stencil4};

const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionOptions {
    pub eps0: f64,
    pub levels: usize,
    /// Degree of the fitted polynomial in `eps`.
    pub degree: usize,
    /// Power `p` of `eps` divided out before fitting.
    pub leading_power: i32,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        Self {
            eps0: 4e-3,
            levels: 6,
            degree: 4,
            leading_power: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// All fitted coefficients, lowest order first.
    pub coefficients: Vec<f64>,
    /// Largest absolute deviation of the fit from the sampled values.
    pub fit_residual: f64,
    pub eps_grid: Vec<f64>,
}

/// A stencil equation that can be evaluated at any working precision.
pub trait StencilResidual {
    fn eval<T: Real>(&self, xs: [f64; 4], ys: [T; 4]) -> Result<T>;
}

/// Fits the `eps`-expansion of `residual` on stencils sampled from the exact
/// solution of `ode` through `j`, with `eps_k = eps0 * 2^-k`. Ordinates and
/// residuals are computed in double-double, so the fit sees truncation
/// terms rather than cancellation noise.
pub fn extract_expansion<R: StencilResidual>(
    residual: &R,
    ode: &OdeSpec,
    j: &Jet3,
    dir: &SpacingDirection,
    opts: &ExpansionOptions,
) -> Result<ExpansionReport> {
    if opts.levels < 4 || opts.levels <= opts.degree {
        return Err(Error::InvalidInput(format!(
            "need at least 4 levels and more levels than the fit degree (levels {}, degree {})",
            opts.levels, opts.degree
        )));
    }
    if !(opts.eps0 > 0.0 && opts.eps0.is_finite()) {
        return Err(Error::InvalidSpacing(format!(
            "eps0 must be positive, got {}",
            opts.eps0
        )));
    }
    let e = ode.residual(j)?;
    let scale = j.y3.abs().max(j.y2.abs()).max(j.y1.abs()).max(1.0);
    if e.abs() > 1e-10 * scale {
        return Err(Error::InvalidInput(format!(
            "jet is not on a solution (residual {e:e})"
        )));
    }
    let eps_grid: Vec<f64> = (0..opts.levels).map(|k| opts.eps0 * 0.5f64.powi(k as i32)).collect();
    let mut values = Vec::with_capacity(opts.levels);
    for &eps in &eps_grid {
        let xs = dir.abscissas(j.x, eps);
        let ys = solution_ordinates_dd(ode, j, xs)?;
        let r = residual.eval(xs, ys)?.to_f64();
        if !r.is_finite() {
            return Err(Error::DegenerateStencil(format!(
                "residual is not finite at eps = {eps}"
            )));
        }
        values.push(r / eps.powi(opts.leading_power));
    }
    let coefficients = polyfit(&eps_grid, &values, opts.degree, opts.eps0)?;
    let fit_residual = eps_grid
        .iter()
        .zip(&values)
        .map(|(&e, &v)| (v - horner(&coefficients, e)).abs())
        .fold(0.0, f64::max);
    let c = |i: usize| coefficients.get(i).copied().unwrap_or(0.0);
    Ok(ExpansionReport {
        c0: c(0),
        c1: c(1),
        c2: c(2),
        coefficients,
        fit_residual,
        eps_grid,
    })
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Least-squares polynomial fit in `t = x / unit`, rescaled back to `x`.
fn polyfit(x: &[f64], y: &[f64], degree: usize, unit: f64) -> Result<Vec<f64>> {
    let a = DMatrix::from_fn(x.len(), degree + 1, |i, k| (x[i] / unit).powi(k as i32));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > MAX_CONDITION {
        return Err(Error::IllConditionedFit(cond));
    }
    let b = svd
        .solve(&DVector::from_column_slice(y), 0.0)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(b.iter().enumerate().map(|(k, v)| v / unit.powi(k as i32)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FirstApproxId {
    Sim2Lattice,
    Sim2Eq,
    Sl2Eq,
    Gl2Lattice,
    Gl2Eq,
}

impl FirstApproxId {
    pub const ALL: [FirstApproxId; 5] = [
        FirstApproxId::Sim2Lattice,
        FirstApproxId::Sim2Eq,
        FirstApproxId::Sl2Eq,
        FirstApproxId::Gl2Lattice,
        FirstApproxId::Gl2Eq,
    ];
}

/// Which rendering of a closed form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormVariant {
    /// Coefficients confirmed by the expansion fit.
    #[default]
    Corrected,
    /// The uncorrected expressions, kept for comparison.
    Printed,
}

/// A scheme equation together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FirstApprox {
    /// `xi_1 xi_3 - xi_2^2`
    Sim2Lattice,
    /// `J2 - K J1^2`
    Sim2Eq { k: f64, alpha: AlphaWeight },
    /// `J1 - F(x_n + a h_n + b h_{n+1} + c h_{n+2})`
    Sl2Eq { forcing: Forcing, abc: [f64; 3] },
    /// `xi_1 - gamma xi_2`
    Gl2Lattice { gamma: f64 },
    /// `J2 - sign |A| J1^(3/2)`
    Gl2Eq { a: f64, branch: i8, alpha: AlphaWeight },
}

fn require_gl2_domain(j: &Jet3) -> Result<f64> {
    let q = j.y1 + 2.0 * j.x * j.y2;
    if !(j.x > 0.0) || !(j.y1 > 0.0) || q < 0.0 {
        return Err(Error::DomainViolation(format!(
            "GL(2) forms need x > 0, y' > 0, y' + 2x y'' >= 0 at x = {}",
            j.x
        )));
    }
    Ok(q)
}

impl FirstApprox {
    pub fn id(&self) -> FirstApproxId {
        match self {
            FirstApprox::Sim2Lattice => FirstApproxId::Sim2Lattice,
            FirstApprox::Sim2Eq { .. } => FirstApproxId::Sim2Eq,
            FirstApprox::Sl2Eq { .. } => FirstApproxId::Sl2Eq,
            FirstApprox::Gl2Lattice { .. } => FirstApproxId::Gl2Lattice,
            FirstApprox::Gl2Eq { .. } => FirstApproxId::Gl2Eq,
        }
    }

    /// Power of `eps` of the leading closed-form term.
    pub fn leading_power(&self) -> i32 {
        match self {
            FirstApprox::Sim2Lattice => 2,
            FirstApprox::Gl2Lattice { .. } => 1,
            _ => 0,
        }
    }

    /// Power of `eps` of the first term that survives on solutions: the
    /// equation forms' leading term is the differential equation itself.
    pub fn zero_set_power(&self) -> i32 {
        match self {
            FirstApprox::Sim2Lattice | FirstApprox::Gl2Lattice { .. } => self.leading_power(),
            _ => self.leading_power() + 1,
        }
    }

    /// An equation whose solutions supply test jets; the lattice forms hold
    /// on any smooth curve.
    pub fn natural_ode(&self) -> OdeSpec {
        match *self {
            FirstApprox::Sim2Lattice => OdeSpec::Sim2 { k: 1.0 },
            FirstApprox::Sim2Eq { k, .. } => OdeSpec::Sim2 { k },
            FirstApprox::Sl2Eq { forcing, .. } => OdeSpec::Sl2Y { forcing },
            FirstApprox::Gl2Lattice { .. } => OdeSpec::gl2(-1.0),
            FirstApprox::Gl2Eq { a, branch, .. } => OdeSpec::Gl2Xy { a, branch },
        }
    }

    /// The scheme equation evaluated on a stencil.
    pub fn residual(&self, s: &Stencil4) -> Result<f64> {
        self.eval(s.xs(), s.ys())
    }

    /// Factor `N` with `N * (c0 + c1 eps)` equal to the closed form at `h = alpha eps`.
    pub fn normalization(&self, j: &Jet3) -> Result<f64> {
        match *self {
            FirstApprox::Sim2Lattice => Ok(2.0),
            FirstApprox::Sim2Eq { .. } => Ok((1.0 + j.y1 * j.y1).powi(3)),
            FirstApprox::Sl2Eq { .. } => Ok(1.0),
            FirstApprox::Gl2Lattice { .. } => {
                require_gl2_domain(j)?;
                Ok(-j.x)
            }
            FirstApprox::Gl2Eq { a, branch, .. } => {
                require_gl2_domain(j)?;
                let (i1, i2) = gl2_continuous(j)?;
                Ok(i2 + branch as f64 * a.abs() * i1.powf(1.5))
            }
        }
    }

    /// The two terms of the first differential approximation at spacings `h`:
    /// the leading term and the first correction.
    pub fn terms(&self, j: &Jet3, h: [f64; 3], variant: FormVariant) -> Result<(f64, f64)> {
        if h.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidSpacing(format!("spacings must be positive, got {h:?}")));
        }
        let [h0, h1, h2] = h;
        let sum = h0 + h1 + h2;
        let printed = variant == FormVariant::Printed;
        match *self {
            FirstApprox::Sim2Lattice => Ok((
                2.0 * (-h1 * h1 + h0 * h2) * (j.y1 * j.y1 + 1.0),
                (2.0 * h0 * h1 * h2 - 2.0 * h1.powi(3) - h0 * h0 * h2 + h0 * h2 * h2) * j.y1 * j.y2,
            )),
            FirstApprox::Sim2Eq { k, alpha } => {
                let lead = (1.0 + j.y1 * j.y1) * j.y3 - 3.0 * j.y1 * j.y2 * j.y2 - k * j.y2 * j.y2;
                let (g, mixed) = if printed {
                    (1.0 + j.y1.powi(4), 12.0)
                } else {
                    (1.0 + j.y1 * j.y1, -12.0)
                };
                let bracket = 16.0 * alpha.alpha() * sum * sum
                    - 4.0 * h0 * h0
                    - 12.0 * h2 * h2
                    - 8.0 * h1 * h1
                    - 16.0 * h0 * h2
                    - 20.0 * h1 * h2
                    + mixed * h0 * h1;
                let corr = -j.y2.powi(3) / (24.0 * g * sum) * (k * k * bracket + 9.0 * h1 * (h2 - h0));
                Ok((lead, corr))
            }
            FirstApprox::Sl2Eq {
                forcing,
                abc: [a, b, c],
            } => {
                let lead = schwarzian(j)? - forcing.value(j.x);
                let p = h0 * (1.0 + 4.0 * a) - 2.0 * h1 * (1.0 - 2.0 * b) - h2 * (1.0 - 4.0 * c);
                let factor = if printed { 1.0 } else { -0.25 };
                Ok((lead, factor * forcing.derivative(j.x) * p))
            }
            FirstApprox::Gl2Lattice { gamma } => {
                require_gl2_domain(j)?;
                let lead = (gamma * h1 - h2) * j.y1;
                let corr = if printed {
                    ((-gamma * h1 * h1 + h2 * (h2 + 2.0 * h1)) * j.y1
                        + j.x * j.y2 * (gamma * h1 * h1 - h1 * h2 - h2 * h2))
                        / (2.0 * j.x * j.x)
                } else {
                    ((-gamma * h1 * h1 + 2.0 * h1 * h2 + h2 * h2) * j.y1
                        + j.x * j.y2 * (gamma * h1 * h1 - 2.0 * h1 * h2 - h2 * h2))
                        / (2.0 * j.x)
                };
                Ok((lead, corr))
            }
            FirstApprox::Gl2Eq { a, branch, alpha } => {
                let q = require_gl2_domain(j)?;
                if !printed && (a.abs() != 1.0 || branch != -1) {
                    return Err(Error::InvalidInput(
                        "the corrected GL(2) equation form holds for |A| = 1 on the negative branch".into(),
                    ));
                }
                let w = j.y1 * j.y3 - 3.0 * j.y2 * j.y2;
                let e = j.x.powi(4) * w * w - a * a * j.y1 * q.powi(3);
                let y10 = j.y1.powi(10);
                let al = alpha.alpha();
                let bracket = h0 * h0 * (32.0 * al - 11.0)
                    + 16.0 * h1 * h1 * (2.0 * al - 1.0)
                    + h2 * h2 * (32.0 * al - 21.0)
                    + h0 * h1 * (64.0 * al - 21.0)
                    + 32.0 * h0 * h2 * (2.0 * al - 1.0)
                    + h1 * h2 * (64.0 * al - 43.0);
                let mag = j.y1.sqrt() * q.powf(3.5) / (16.0 * j.x * y10 * sum) * bracket;
                Ok((e / y10, if printed { -mag } else { mag }))
            }
        }
    }

    pub fn value(&self, j: &Jet3, h: [f64; 3], variant: FormVariant) -> Result<f64> {
        let (a, b) = self.terms(j, h, variant)?;
        Ok(a + b)
    }

    /// The terms deciding zero-set membership at a jet that solves the
    /// form's equation: the lattice forms in full, the equation forms
    /// without their leading term, which is the equation itself.
    pub fn membership_terms(&self, j: &Jet3, h: [f64; 3], variant: FormVariant) -> Result<(f64, f64)> {
        let (a, b) = self.terms(j, h, variant)?;
        if self.zero_set_power() > self.leading_power() {
            Ok((0.0, b))
        } else {
            Ok((a, b))
        }
    }

    pub fn membership(&self, j: &Jet3, h: [f64; 3], variant: FormVariant) -> Result<f64> {
        let (a, b) = self.membership_terms(j, h, variant)?;
        Ok(a + b)
    }
}

impl StencilResidual for FirstApprox {
    fn eval<T: Real>(&self, xs: [f64; 4], ys: [T; 4]) -> Result<T> {
        match *self {
            FirstApprox::Sim2Lattice => {
                let xi = sim2_xi_raw(xs, ys);
                Ok(xi[0] * xi[2] - xi[1] * xi[1])
            }
            FirstApprox::Sim2Eq { k, alpha } => {
                let (j1, j2) = sim2_j_raw(xs, ys, alpha);
                Ok(j2 - T::from_f64(k) * j1 * j1)
            }
            FirstApprox::Sl2Eq { forcing, abc } => {
                let xi = xs[1] + abc[0] * (xs[1] - xs[0]) + abc[1] * (xs[2] - xs[1]) + abc[2] * (xs[3] - xs[2]);
                Ok(sl2_j1_raw(xs, ys)? - T::from_f64(forcing.value(xi)))
            }
            FirstApprox::Gl2Lattice { gamma } => {
                let xi = gl2_xi_raw(xs, ys)?;
                Ok(xi[0] - T::from_f64(gamma) * xi[1])
            }
            FirstApprox::Gl2Eq { a, branch, alpha } => {
                let (j1, j2) = gl2_j_raw(xs, ys, alpha)?;
                if j1.to_f64() < 0.0 {
                    return Err(Error::DomainViolation(format!("J1 = {:e} < 0", j1.to_f64())));
                }
                Ok(j2 - T::from_f64(branch as f64 * a.abs()) * j1 * j1.sqrt())
            }
        }
    }
}

/// Fitted expansion set against the closed form at `h = alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormComparison {
    pub report: ExpansionReport,
    pub normalization: f64,
    /// `N c0` and `N c1`.
    pub fitted: [f64; 2],
    /// Closed-form leading term and correction at `h = alpha`.
    pub closed: [f64; 2],
    /// Relative gap between the fitted and closed-form corrections.
    pub rel_gap: f64,
}

pub fn compare_with_closed_form(
    fa: &FirstApprox,
    ode: &OdeSpec,
    j: &Jet3,
    dir: &SpacingDirection,
    opts: &ExpansionOptions,
    variant: FormVariant,
) -> Result<ClosedFormComparison> {
    let opts = ExpansionOptions {
        leading_power: fa.leading_power(),
        ..*opts
    };
    let report = extract_expansion(fa, ode, j, dir, &opts)?;
    let n = fa.normalization(j)?;
    let (lead, corr) = fa.terms(j, dir.alpha(), variant)?;
    let fitted = [n * report.c0, n * report.c1];
    let rel_gap = (fitted[1] - corr).abs() / corr.abs().max(fitted[1].abs()).max(f64::MIN_POSITIVE);
    Ok(ClosedFormComparison {
        report,
        normalization: n,
        fitted,
        closed: [lead, corr],
        rel_gap,
    })
}

/// The `h_{n+2}` for which [`FirstApprox::membership`] vanishes at `j` with
/// the given `h_n`, `h_{n+1}`, searched over `[h_{n+1} / 20, 20 h_{n+1}]`.
pub fn zero_set_spacing(fa: &FirstApprox, j: &Jet3, h0: f64, h1: f64, variant: FormVariant) -> Result<f64> {
    let f = |h2: f64| fa.membership(j, [h0, h1, h2], variant);
    let grid: Vec<f64> = (0..=200).map(|i| h1 / 20.0 * 400f64.powf(i as f64 / 200.0)).collect();
    let vals = grid.iter().map(|&h| f(h)).collect::<Result<Vec<_>>>()?;
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || vals[100].abs() <= 1e-14 * scale {
        return Ok(grid[100]);
    }
    for i in 0..grid.len() - 1 {
        if vals[i] == 0.0 {
            return Ok(grid[i]);
        }
        if vals[i].signum() != vals[i + 1].signum() {
            let (mut lo, mut hi, mut flo) = (grid[i], grid[i + 1], vals[i]);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = f(mid)?;
                if fm == 0.0 {
                    return Ok(mid);
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::InvalidInput(format!(
        "no spacing h_(n+2) in range puts {:?} on its zero set",
        fa.id()
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceCheck {
    /// Closed form at the original configuration, divided by `eps^p`.
    pub value: f64,
    /// Closed form at the transformed configuration, divided by `eps'^p`.
    pub transformed: f64,
    pub tol: f64,
    pub on_zero_set: bool,
    /// Zero-set preservation: false if the original is on the zero set and
    /// the transformed value exceeds `10 tol`, or if the jet mismatch is too
    /// large.
    pub preserved: bool,
    /// `transformed / value` of the raw closed forms, when both are nonzero.
    pub ratio: Option<f64>,
    /// For equation forms: relative amount by which the transformed jet
    /// fails to solve the equation; preservation requires at most `1e-9`.
    pub jet_mismatch: Option<f64>,
}

/// Transforms the configuration `(j, h)` by `g` and re-evaluates the closed
/// form. The stencil realizing `h` is sampled from the solution of `ode`
/// through `j`; its image fixes the transformed spacings.
///
/// Values are [`FirstApprox::membership`] divided by `eps^p`, with `eps` the
/// mean spacing and `p` the [`FirstApprox::zero_set_power`], so that the
/// tolerance `1e-6 * max(1, |terms|)` is measured against the size of the
/// terms that decide membership in the zero set. For the equation forms the
/// dropped leading term is checked separately as `jet_mismatch`.
pub fn check_first_approx_invariance(
    fa: &FirstApprox,
    ode: &OdeSpec,
    g: &GroupElement,
    j: &Jet3,
    h: [f64; 3],
    variant: FormVariant,
) -> Result<InvarianceCheck> {
    // spacings near 1e-8 are differences of O(1) coordinates, so the
    // stencil and its image are carried in double-double
    let xs = [j.x - h[0], j.x, j.x + h[1], j.x + h[1] + h[2]];
    // the spacings actually realized by the rounded abscissas
    let h: [f64; 3] = std::array::from_fn(|k| xs[k + 1] - xs[k]);
    let ys = solution_ordinates_dd(ode, j, xs)?;
    let mut tx = [DoubleDouble::default(); 4];
    for k in 0..4 {
        tx[k] = g.apply_generic(DoubleDouble::new(xs[k]), ys[k])?.0;
    }
    let th: [f64; 3] = std::array::from_fn(|k| (tx[k + 1] - tx[k]).to_f64());
    if th.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::OrderViolation);
    }
    let tj = g.transform_jet(j)?;
    let jet_mismatch = if fa.zero_set_power() > fa.leading_power() {
        let eq = fa.natural_ode();
        let m = y3_mismatch(&eq, j)?;
        if m > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "jet does not solve the equation of {:?} (relative mismatch {m:e})",
                fa.id()
            )));
        }
        Some(y3_mismatch(&eq, &tj)?)
    } else {
        None
    };
    let p = fa.zero_set_power();
    let norm = |hh: [f64; 3]| ((hh[0] + hh[1] + hh[2]) / 3.0).powi(p);
    let (a, b) = fa.membership_terms(j, h, variant)?;
    let raw = a + b;
    let traw = fa.membership(&tj, th, variant)?;
    let value = raw / norm(h);
    let transformed = traw / norm(th);
    let scale = [a / norm(h), b / norm(h), value.abs()]
        .iter()
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-6 * scale;
    let on_zero_set = value.abs() <= tol;
    let preserved = jet_mismatch.is_none_or(|m| m <= 1e-9) && (!on_zero_set || transformed.abs() <= 10.0 * tol);
    let ratio = (raw != 0.0 && traw != 0.0).then(|| traw / raw);
    Ok(InvarianceCheck {
        value,
        transformed,
        tol,
        on_zero_set,
        preserved,
        ratio,
        jet_mismatch,
    })
}

/// `|y''' - rhs| / max(1, |y'''|)`.
fn y3_mismatch(ode: &OdeSpec, j: &Jet3) -> Result<f64> {
    let rhs = ode.rhs(j.x, j.y, j.y1, j.y2)?;
    Ok((j.y3 - rhs).abs() / j.y3.abs().max(1.0))
}
