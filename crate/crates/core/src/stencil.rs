//! Plane points, four-point stencils, third-order jets and discrete derivatives.
//!
//! A stencil holds the points `(x_{n-1}, x_n, x_{n+1}, x_{n+2})` in that order.
//! The reference point is index 1 (`x_n`); all Taylor expansions anchor there.
//! Spacings follow `h_{n+k} = x_{n+k} - x_{n+k-1}`, so `h()[0] = h_n`,
//! `h()[1] = h_{n+1}` and `h()[2] = h_{n+2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Four ordered plane points with strictly increasing abscissas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil4 {
    p: [Point; 4],
}

impl Stencil4 {
    pub fn new(p: [Point; 4]) -> Result<Self> {
        if p.iter().any(|q| !q.is_finite()) {
            return Err(Error::InvalidInput("stencil point is not finite".into()));
        }
        for w in p.windows(2) {
            let h = w[1].x - w[0].x;
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::OrderViolation);
            }
        }
        Ok(Self { p })
    }

    pub fn from_xy(x: [f64; 4], y: [f64; 4]) -> Result<Self> {
        Self::new([
            Point::new(x[0], y[0]),
            Point::new(x[1], y[1]),
            Point::new(x[2], y[2]),
            Point::new(x[3], y[3]),
        ])
    }

    pub fn points(&self) -> &[Point; 4] {
        &self.p
    }

    pub fn xs(&self) -> [f64; 4] {
        self.p.map(|q| q.x)
    }

    pub fn ys(&self) -> [f64; 4] {
        self.p.map(|q| q.y)
    }

    /// Spacings `[h_n, h_{n+1}, h_{n+2}]`.
    pub fn h(&self) -> [f64; 3] {
        [
            self.p[1].x - self.p[0].x,
            self.p[2].x - self.p[1].x,
            self.p[3].x - self.p[2].x,
        ]
    }

    /// The reference point `(x_n, y_n)`.
    pub fn reference(&self) -> Point {
        self.p[1]
    }
}

/// Position, value and first three derivatives of a curve `y(x)` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jet3 {
    pub x: f64,
    pub y: f64,
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
}

impl Jet3 {
    pub const fn new(x: f64, y: f64, y1: f64, y2: f64, y3: f64) -> Self {
        Self { x, y, y1, y2, y3 }
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.y1, self.y2, self.y3]
            .iter()
            .all(|v| v.is_finite())
    }

    /// Degree-3 Taylor polynomial of the jet evaluated at `x`.
    pub fn taylor(&self, x: f64) -> f64 {
        let t = x - self.x;
        self.y + t * (self.y1 + t * (self.y2 / 2.0 + t * self.y3 / 6.0))
    }

    /// Derivative of the Taylor polynomial at `x`.
    pub fn taylor_slope(&self, x: f64) -> f64 {
        let t = x - self.x;
        self.y1 + t * (self.y2 + t * self.y3 / 2.0)
    }
}

/// Relative spacings `alpha_k`, with `h_{n+k} = alpha_k * eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacingDirection {
    alpha: [f64; 3],
}

impl SpacingDirection {
    pub fn new(alpha: [f64; 3]) -> Result<Self> {
        if alpha.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidSpacing(format!(
                "spacing direction entries must be positive, got {alpha:?}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn uniform() -> Self {
        Self { alpha: [1.0; 3] }
    }

    pub fn alpha(&self) -> [f64; 3] {
        self.alpha
    }

    /// Abscissas of the stencil around `x` at scale `eps`.
    pub fn abscissas(&self, x: f64, eps: f64) -> [f64; 4] {
        let [a0, a1, a2] = self.alpha;
        [x - a0 * eps, x, x + a1 * eps, x + (a1 + a2) * eps]
    }
}

/// Newton divided difference `[y_0, ..., y_k]` over the given nodes.
pub fn divided_difference(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut d = y.to_vec();
    let n = x.len();
    for level in 1..n {
        for i in (level..n).rev() {
            d[i] = (d[i] - d[i - 1]) / (x[i] - x[i - level]);
        }
    }
    d[n - 1]
}

/// Discrete derivatives of a stencil, anchored at `x_n`:
/// `p1 = [y_n, y_{n+1}]`, `p2 = 2 [y_n, y_{n+1}, y_{n+2}]`,
/// `p3 = 6 [y_{n-1}, y_n, y_{n+1}, y_{n+2}]`.
pub fn discrete_derivatives(s: &Stencil4) -> [f64; 3] {
    let x = s.xs();
    let y = s.ys();
    let p1 = divided_difference(&x[1..3], &y[1..3]);
    let p2 = 2.0 * divided_difference(&x[1..4], &y[1..4]);
    let p3 = 6.0 * divided_difference(&x, &y);
    [p1, p2, p3]
}

/// Stencil sampled from the cubic Taylor polynomial of `j`, with `j.x` as `x_n`.
pub fn stencil_from_jet(j: &Jet3, dir: &SpacingDirection, eps: f64) -> Result<Stencil4> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidSpacing(format!("eps must be positive, got {eps}")));
    }
    let xs = dir.abscissas(j.x, eps);
    Stencil4::from_xy(xs, xs.map(|x| j.taylor(x)))
}
