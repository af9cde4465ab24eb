//! Differential invariants of the three symmetry groups and the discrete
//! invariants of a four-point stencil.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::AlgebraId;
use crate::real::Real;
use crate::stencil::{Jet3, Stencil4};

/// Weight `alpha` of the forward difference in `J1`; the backward weight is `1 - alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaWeight(pub f64);

impl AlphaWeight {
    pub fn alpha(self) -> f64 {
        self.0
    }

    pub fn beta(self) -> f64 {
        1.0 - self.0
    }
}

impl Default for AlphaWeight {
    fn default() -> Self {
        AlphaWeight(0.5)
    }
}

/// Euclidean stencil invariants: three chord lengths and two bend areas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sim2Xi(pub [f64; 5]);

/// `SL(2, R)` stencil invariants of the two-dimensional realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gl2Xi(pub [f64; 5]);

fn checked(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::DegenerateStencil(format!("{what} is not finite")))
    }
}

fn spacings<T: Real>(x: [f64; 4]) -> [T; 3] {
    let x = x.map(T::from_f64);
    [x[1] - x[0], x[2] - x[1], x[3] - x[2]]
}

pub(crate) fn sim2_xi_raw<T: Real>(x: [f64; 4], y: [T; 4]) -> [T; 5] {
    let [hn, hn1, hn2] = spacings::<T>(x);
    let [ym, y0, y1, y2] = y;
    [
        hn2.hypot(y2 - y1),
        hn1.hypot(y1 - y0),
        hn.hypot(y0 - ym),
        (y2 - y1) * hn1 - (y1 - y0) * hn2,
        (y1 - y0) * hn - (y0 - ym) * hn1,
    ]
}

pub(crate) fn sim2_j_raw<T: Real>(x: [f64; 4], y: [T; 4], w: AlphaWeight) -> (T, T) {
    let [x1, x2, x3, x4, x5] = sim2_xi_raw(x, y);
    let two = T::from_f64(2.0);
    let fwd = x4 / (x1 * x2 * (x1 + x2));
    let bwd = x5 / (x2 * x3 * (x2 + x3));
    let j1 = two * T::from_f64(w.alpha()) * fwd + two * T::from_f64(w.beta()) * bwd;
    let j2 = T::from_f64(6.0) / (x1 + x2 + x3) * (fwd - bwd);
    (j1, j2)
}

pub(crate) fn sl2_j1_raw<T: Real>(x: [f64; 4], y: [T; 4]) -> Result<T> {
    let [ym, y0, y1, y2] = y;
    let d_right = y2 - y1;
    let d_left = y0 - ym;
    if d_right.to_f64() == 0.0 || d_left.to_f64() == 0.0 {
        return Err(Error::DegenerateStencil(
            "equal neighbouring ordinates in cross-ratio".into(),
        ));
    }
    let r = (y2 - y0) * (y1 - ym) / (d_right * d_left);
    let [h0, h1, h2] = spacings::<T>(x);
    let pre = T::from_f64(6.0) * h2 * h0 / (h1 * (h1 + h2) * (h0 + h1) * (h2 + h1 + h0));
    let x_ratio = (h2 + h1) * (h1 + h0) / (h0 * h2);
    Ok(pre * (x_ratio - r))
}

pub(crate) fn gl2_xi_raw<T: Real>(x: [f64; 4], y: [T; 4]) -> Result<[T; 5]> {
    let [xm, x0, x1, x2] = x;
    if !(xm > 0.0) {
        return Err(Error::DomainViolation(format!(
            "abscissas must be positive, got x_(n-1) = {xm}"
        )));
    }
    let [ym, y0, y1, y2] = y;
    let root = |a: f64, b: f64| (T::from_f64(a) * T::from_f64(b)).sqrt();
    Ok([
        (y2 - y1) / root(x1, x2),
        (y1 - y0) / root(x0, x1),
        (y0 - ym) / root(xm, x0),
        (y2 - y0) / root(x0, x2),
        (y1 - ym) / root(x1, xm),
    ])
}

pub(crate) fn gl2_j_raw<T: Real>(x: [f64; 4], y: [T; 4], w: AlphaWeight) -> Result<(T, T)> {
    let [x1, x2, x3, x4, x5] = gl2_xi_raw(x, y)?;
    if x1.to_f64() == 0.0 || x2.to_f64() == 0.0 || x3.to_f64() == 0.0 {
        return Err(Error::DegenerateStencil("vanishing ordinate increment".into()));
    }
    let fwd = (x4 - x1 - x2) / (x1 * (x1 + x2));
    let bwd = (x5 - x2 - x3) / (x3 * (x2 + x3));
    let j2 = T::from_f64(12.0) / (x2 * (x1 + x2 + x3)) * (fwd - bwd);
    let j1 = T::from_f64(8.0) * (T::from_f64(w.alpha()) * fwd / x2 + T::from_f64(w.beta()) * bwd / x2);
    Ok((j1, j2))
}

pub fn sim2_xi(s: &Stencil4) -> Sim2Xi {
    Sim2Xi(sim2_xi_raw(s.xs(), s.ys()))
}

/// The weighted pair `(J1, J2)` whose continuous limits are the Euclidean
/// invariants `I1` and `I2`. Under a dilation by `lambda` they scale by
/// `lambda^-1` and `lambda^-2`.
pub fn sim2_j(s: &Stencil4, w: AlphaWeight) -> (f64, f64) {
    sim2_j_raw(s.xs(), s.ys(), w)
}

/// Cross-ratio of the four ordinates.
pub fn sl2_cross_ratio(s: &Stencil4) -> Result<f64> {
    let [ym, y0, y1, y2] = s.ys();
    let d_right = y2 - y1;
    let d_left = y0 - ym;
    if d_right == 0.0 || d_left == 0.0 {
        return Err(Error::DegenerateStencil(
            "equal neighbouring ordinates in cross-ratio".into(),
        ));
    }
    checked((y2 - y0) * (y1 - ym) / (d_right * d_left), "cross-ratio")
}

/// Discrete Schwarzian: vanishes identically on Möbius data.
pub fn sl2_j1(s: &Stencil4) -> Result<f64> {
    checked(sl2_j1_raw(s.xs(), s.ys())?, "J1")
}

pub fn gl2_xi(s: &Stencil4) -> Result<Gl2Xi> {
    Ok(Gl2Xi(gl2_xi_raw(s.xs(), s.ys())?))
}

/// `(J1, J2)` of the two-dimensional realization. Under `x -> lambda x` they
/// scale by `lambda^2` and `lambda^3`.
pub fn gl2_j(s: &Stencil4, w: AlphaWeight) -> Result<(f64, f64)> {
    let (j1, j2) = gl2_j_raw(s.xs(), s.ys(), w)?;
    Ok((checked(j1, "J1")?, checked(j2, "J2")?))
}

/// Differential invariants at a jet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algebra", rename_all = "snake_case")]
pub enum ContinuousInvariants {
    Sim2 {
        /// `I2 / I1^2`; absent where `y'' = 0`.
        i: Option<f64>,
        i1: f64,
        i2: f64,
    },
    Sl2Y {
        schwarzian: f64,
    },
    Gl2Xy {
        i1: f64,
        i2: f64,
    },
}

pub fn schwarzian(j: &Jet3) -> Result<f64> {
    if j.y1 == 0.0 {
        return Err(Error::DegenerateJet("Schwarzian needs y' != 0".into()));
    }
    Ok((j.y1 * j.y3 - 1.5 * j.y2 * j.y2) / (j.y1 * j.y1))
}

pub fn continuous_invariants(algebra: AlgebraId, j: &Jet3) -> Result<ContinuousInvariants> {
    match algebra {
        AlgebraId::Sim2 => {
            let g = 1.0 + j.y1 * j.y1;
            let num = g * j.y3 - 3.0 * j.y1 * j.y2 * j.y2;
            let i = (j.y2 != 0.0).then(|| num / (j.y2 * j.y2));
            Ok(ContinuousInvariants::Sim2 {
                i,
                i1: j.y2 / g.powf(1.5),
                i2: num / g.powi(3),
            })
        }
        AlgebraId::Sl2Y => Ok(ContinuousInvariants::Sl2Y {
            schwarzian: schwarzian(j)?,
        }),
        AlgebraId::Gl2Xy => {
            let (i1, i2) = gl2_continuous(j)?;
            Ok(ContinuousInvariants::Gl2Xy { i1, i2 })
        }
    }
}

pub(crate) fn gl2_continuous(j: &Jet3) -> Result<(f64, f64)> {
    if j.y1 == 0.0 {
        return Err(Error::DegenerateJet("GL(2) invariants need y' != 0".into()));
    }
    let i1 = (2.0 * j.x * j.y2 + j.y1) / j.y1.powi(3);
    let i2 = j.x * j.x * (j.y1 * j.y3 - 3.0 * j.y2 * j.y2) / j.y1.powi(5);
    Ok((i1, i2))
}
