//! Finite symmetry transformations built as words of one-parameter flows.
//!
//! Generators (1-based, as in the vector-field listings):
//!
//! | algebra  | X1       | X2           | X3                        | X4            |
//! |----------|----------|--------------|---------------------------|---------------|
//! | `Sim2`   | `x + t`  | `y + t`      | rotation by `t`           | `e^t (x, y)`  |
//! | `Sl2Y`   | `y + t`  | `e^t y`      | `y / (1 - t y)`           | `x + t` (*)   |
//! | `Gl2Xy`  | `y + t`  | `e^t (x, y)` | `(x/(1-ty)^2, y/(1-ty))`  | `(e^t x, y)`  |
//!
//! (*) The `Sl2Y` x-translation is a symmetry only when the forcing term is
//! constant; it is accepted as generator 4 of that algebra.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{DoubleDouble, Real};
use crate::stencil::{Jet3, Point, Stencil4};

const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraId {
    /// Similitude group of the plane.
    Sim2,
    /// Möbius transformations acting on `y` only.
    Sl2Y,
    /// Two-dimensional realization of `gl(2, R)`.
    Gl2Xy,
}

impl AlgebraId {
    pub fn dimension(self) -> usize {
        match self {
            AlgebraId::Sim2 => 4,
            AlgebraId::Sl2Y => 3,
            AlgebraId::Gl2Xy => 4,
        }
    }

    /// Highest generator index accepted in a word.
    pub fn max_generator(self) -> usize {
        match self {
            AlgebraId::Sl2Y => 4,
            other => other.dimension(),
        }
    }
}

/// A finite group element: the composition of flows `exp(t_k X_{mu_k})`,
/// applied left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    algebra: AlgebraId,
    word: Vec<(usize, f64)>,
}

impl GroupElement {
    pub fn new(algebra: AlgebraId, word: Vec<(usize, f64)>) -> Result<Self> {
        for &(mu, tau) in &word {
            if mu == 0 || mu > algebra.max_generator() {
                return Err(Error::InvalidInput(format!(
                    "generator index {mu} out of range for {algebra:?}"
                )));
            }
            if !tau.is_finite() {
                return Err(Error::InvalidInput("flow parameter is not finite".into()));
            }
        }
        Ok(Self { algebra, word })
    }

    pub fn identity(algebra: AlgebraId) -> Self {
        Self {
            algebra,
            word: Vec::new(),
        }
    }

    /// Single flow `exp(tau X_mu)`.
    pub fn flow(algebra: AlgebraId, mu: usize, tau: f64) -> Result<Self> {
        Self::new(algebra, vec![(mu, tau)])
    }

    pub fn algebra(&self) -> AlgebraId {
        self.algebra
    }

    pub fn word(&self) -> &[(usize, f64)] {
        &self.word
    }

    pub fn inverse(&self) -> Self {
        Self {
            algebra: self.algebra,
            word: self.word.iter().rev().map(|&(mu, t)| (mu, -t)).collect(),
        }
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &GroupElement) -> Result<Self> {
        if self.algebra != other.algebra {
            return Err(Error::InvalidInput(
                "cannot compose elements of different algebras".into(),
            ));
        }
        let mut word = self.word.clone();
        word.extend_from_slice(&other.word);
        Ok(Self {
            algebra: self.algebra,
            word,
        })
    }

    pub fn apply(&self, p: Point) -> Result<Point> {
        let mut q = p;
        for &(mu, tau) in &self.word {
            q = flow(self.algebra, mu, tau, q)?;
        }
        if !q.is_finite() {
            return Err(Error::SingularTransform("image is not finite".into()));
        }
        Ok(q)
    }

    /// Image of a point carried in any flow scalar, e.g. double-double.
    pub(crate) fn apply_generic<T: FlowScalar>(&self, x: T, y: T) -> Result<(T, T)> {
        let (mut x, mut y) = (x, y);
        for &(mu, tau) in &self.word {
            (x, y) = flow_generic(self.algebra, mu, tau, x, y)?;
        }
        if !(x.value().is_finite() && y.value().is_finite()) {
            return Err(Error::SingularTransform("image is not finite".into()));
        }
        Ok((x, y))
    }

    pub fn apply_stencil(&self, s: &Stencil4) -> Result<Stencil4> {
        let mut out = [Point::new(0.0, 0.0); 4];
        for (o, p) in out.iter_mut().zip(s.points()) {
            *o = self.apply(*p)?;
        }
        Stencil4::new(out)
    }

    /// Third-order jet of the transformed curve at the image of `j`'s base point.
    ///
    /// The cubic Taylor curve of `j`, parametrized by `t = x - j.x`, is pushed
    /// through the flows as truncated power series in `t`; the chain rule then
    /// gives `dY/dX` through third order.
    pub fn transform_jet(&self, j: &Jet3) -> Result<Jet3> {
        if self.word.is_empty() {
            return Ok(*j);
        }
        let mut x = Series3([j.x, 1.0, 0.0, 0.0]);
        let mut y = Series3([j.y, j.y1, j.y2 / 2.0, j.y3 / 6.0]);
        for &(mu, tau) in &self.word {
            (x, y) = flow_generic(self.algebra, mu, tau, x, y)?;
        }
        let [x0, x1, x2, x3] = x.derivatives();
        let [y0, y1, y2, y3] = y.derivatives();
        if !(x1 > 0.0) {
            return Err(Error::NotAGraph);
        }
        let slope = y1 / x1;
        let w = x1 * y2 - y1 * x2;
        let curv = w / x1.powi(3);
        let third = ((x1 * y3 - y1 * x3) * x1 - 3.0 * x2 * w) / x1.powi(5);
        let out = Jet3::new(x0, y0, slope, curv, third);
        if !out.is_finite() {
            return Err(Error::SingularTransform("transformed jet is not finite".into()));
        }
        Ok(out)
    }
}

/// Scalars the flows can act on: plain values, double-doubles and truncated
/// series.
pub(crate) trait FlowScalar: Copy {
    fn value(self) -> f64;
    fn shift(self, c: f64) -> Self;
    fn scale(self, c: f64) -> Self;
    fn plus(self, o: Self) -> Self;
    fn times(self, o: Self) -> Self;
    fn recip(self) -> Self;
}

impl FlowScalar for f64 {
    fn value(self) -> f64 {
        self
    }
    fn shift(self, c: f64) -> Self {
        self + c
    }
    fn scale(self, c: f64) -> Self {
        self * c
    }
    fn plus(self, o: Self) -> Self {
        self + o
    }
    fn times(self, o: Self) -> Self {
        self * o
    }
    fn recip(self) -> Self {
        1.0 / self
    }
}

impl FlowScalar for DoubleDouble {
    fn value(self) -> f64 {
        self.to_f64()
    }
    fn shift(self, c: f64) -> Self {
        self + DoubleDouble::new(c)
    }
    fn scale(self, c: f64) -> Self {
        self * DoubleDouble::new(c)
    }
    fn plus(self, o: Self) -> Self {
        self + o
    }
    fn times(self, o: Self) -> Self {
        self * o
    }
    fn recip(self) -> Self {
        DoubleDouble::new(1.0) / self
    }
}

/// Power series `sum c_k t^k` truncated after `t^3`.
#[derive(Debug, Clone, Copy)]
struct Series3([f64; 4]);

impl Series3 {
    fn derivatives(self) -> [f64; 4] {
        let [c0, c1, c2, c3] = self.0;
        [c0, c1, 2.0 * c2, 6.0 * c3]
    }
}

impl FlowScalar for Series3 {
    fn value(self) -> f64 {
        self.0[0]
    }
    fn shift(mut self, c: f64) -> Self {
        self.0[0] += c;
        self
    }
    fn scale(self, c: f64) -> Self {
        Series3(self.0.map(|v| v * c))
    }
    fn plus(self, o: Self) -> Self {
        Series3(std::array::from_fn(|k| self.0[k] + o.0[k]))
    }
    fn times(self, o: Self) -> Self {
        Series3(std::array::from_fn(|k| (0..=k).map(|i| self.0[i] * o.0[k - i]).sum()))
    }
    fn recip(self) -> Self {
        let a = self.0;
        let mut b = [1.0 / a[0], 0.0, 0.0, 0.0];
        for k in 1..4 {
            b[k] = -(1..=k).map(|i| a[i] * b[k - i]).sum::<f64>() / a[0];
        }
        Series3(b)
    }
}

/// `1 / (1 - tau y)`, rejecting images at infinity.
fn mobius_denominator<T: FlowScalar>(tau: f64, y: T) -> Result<T> {
    let den = y.scale(-tau).shift(1.0);
    if den.value().abs() < SINGULAR_TOL {
        return Err(Error::SingularTransform(format!(
            "1 - tau*y vanishes (tau = {tau}, y = {})",
            y.value()
        )));
    }
    Ok(den.recip())
}

/// Closed-form flow of a single generator.
pub fn flow(algebra: AlgebraId, mu: usize, tau: f64, p: Point) -> Result<Point> {
    let (x, y) = flow_generic(algebra, mu, tau, p.x, p.y)?;
    Ok(Point::new(x, y))
}

fn flow_generic<T: FlowScalar>(algebra: AlgebraId, mu: usize, tau: f64, x: T, y: T) -> Result<(T, T)> {
    let q = match (algebra, mu) {
        (AlgebraId::Sim2, 1) => (x.shift(tau), y),
        (AlgebraId::Sim2, 2) => (x, y.shift(tau)),
        (AlgebraId::Sim2, 3) => {
            let (s, c) = tau.sin_cos();
            (x.scale(c).plus(y.scale(s)), x.scale(-s).plus(y.scale(c)))
        }
        (AlgebraId::Sim2, 4) => {
            let l = tau.exp();
            (x.scale(l), y.scale(l))
        }
        (AlgebraId::Sl2Y, 1) => (x, y.shift(tau)),
        (AlgebraId::Sl2Y, 2) => (x, y.scale(tau.exp())),
        (AlgebraId::Sl2Y, 3) => (x, y.times(mobius_denominator(tau, y)?)),
        (AlgebraId::Sl2Y, 4) => (x.shift(tau), y),
        (AlgebraId::Gl2Xy, 1) => (x, y.shift(tau)),
        (AlgebraId::Gl2Xy, 2) => {
            let l = tau.exp();
            (x.scale(l), y.scale(l))
        }
        (AlgebraId::Gl2Xy, 3) => {
            let inv = mobius_denominator(tau, y)?;
            (x.times(inv).times(inv), y.times(inv))
        }
        (AlgebraId::Gl2Xy, 4) => (x.scale(tau.exp()), y),
        _ => {
            return Err(Error::InvalidInput(format!(
                "generator {mu} not defined for {algebra:?}"
            )))
        }
    };
    Ok(q)
}

/// Random words over a chosen set of generators, each with its own bound on `|t|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementSampler {
    pub algebra: AlgebraId,
    pub generators: Vec<(usize, f64)>,
    pub length: usize,
}

impl ElementSampler {
    pub fn new(algebra: AlgebraId, generators: Vec<(usize, f64)>, length: usize) -> Self {
        Self {
            algebra,
            generators,
            length,
        }
    }

    /// Translations and rotations of the plane.
    pub fn euclidean() -> Self {
        Self::new(AlgebraId::Sim2, vec![(1, 1.0), (2, 1.0), (3, 0.5)], 4)
    }

    pub fn similitude() -> Self {
        Self::new(AlgebraId::Sim2, vec![(1, 1.0), (2, 1.0), (3, 0.5), (4, 0.5)], 5)
    }

    /// Möbius maps of `y`: shifts, scalings and the projective flow.
    pub fn mobius() -> Self {
        Self::new(AlgebraId::Sl2Y, vec![(1, 1.0), (2, 0.5), (3, 0.1)], 4)
    }

    pub fn mobius_with_translation() -> Self {
        Self::new(AlgebraId::Sl2Y, vec![(1, 1.0), (2, 0.5), (3, 0.1), (4, 1.0)], 5)
    }

    /// The `SL(2, R)` subgroup `{X1, X2, X3}` of the two-dimensional realization.
    pub fn gl2_special() -> Self {
        Self::new(AlgebraId::Gl2Xy, vec![(1, 0.5), (2, 0.3), (3, 0.05)], 4)
    }

    pub fn gl2_full() -> Self {
        Self::new(AlgebraId::Gl2Xy, vec![(1, 0.5), (2, 0.3), (3, 0.05), (4, 0.3)], 5)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        let word = (0..self.length)
            .map(|_| {
                let (mu, bound) = self.generators[rng.random_range(0..self.generators.len())];
                (mu, rng.random_range(-bound..=bound))
            })
            .collect();
        GroupElement {
            algebra: self.algebra,
            word,
        }
    }

    /// Draws elements until one maps `j` to a jet with `|y'| <= max_slope`.
    /// Near-vertical images are legitimate group actions but badly
    /// conditioned as graphs over `x`.
    pub fn sample_for_jet<R: Rng + ?Sized>(&self, rng: &mut R, j: &Jet3, max_slope: f64) -> Result<GroupElement> {
        for _ in 0..1000 {
            let g = self.sample(rng);
            if let Ok(tj) = g.transform_jet(j) {
                if tj.y1.abs() <= max_slope {
                    return Ok(g);
                }
            }
        }
        Err(Error::InvalidInput(format!(
            "no sampled element keeps the slope of {j:?} within {max_slope}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn quarter_rotation() {
        let g = GroupElement::flow(AlgebraId::Sim2, 3, FRAC_PI_2).unwrap();
        let q = g.apply(Point::new(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(q.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.y, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn mobius_fixes_zero() {
        let g = GroupElement::flow(AlgebraId::Sl2Y, 3, 0.7).unwrap();
        assert_eq!(g.apply(Point::new(2.5, 0.0)).unwrap(), Point::new(2.5, 0.0));
    }

    #[test]
    fn gl2_projective_flow_value() {
        let g = GroupElement::flow(AlgebraId::Gl2Xy, 3, 1.0).unwrap();
        let q = g.apply(Point::new(1.0, 0.5)).unwrap();
        assert_abs_diff_eq!(q.x, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.y, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn gl2_projective_flow_solves_its_ode() {
        // dx/dt = 2xy, dy/dt = y^2, integrated with RK4
        let (mut x, mut y) = (1.0_f64, 0.5_f64);
        let n = 20_000;
        let dt = 1.0 / n as f64;
        let f = |x: f64, y: f64| (2.0 * x * y, y * y);
        for _ in 0..n {
            let k1 = f(x, y);
            let k2 = f(x + 0.5 * dt * k1.0, y + 0.5 * dt * k1.1);
            let k3 = f(x + 0.5 * dt * k2.0, y + 0.5 * dt * k2.1);
            let k4 = f(x + dt * k3.0, y + dt * k3.1);
            x += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            y += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        assert_abs_diff_eq!(x, 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(y, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn singular_denominator_is_reported() {
        let g = GroupElement::flow(AlgebraId::Sl2Y, 3, 2.0).unwrap();
        assert!(matches!(
            g.apply(Point::new(0.0, 0.5)),
            Err(Error::SingularTransform(_))
        ));
    }

    #[test]
    fn rejects_unknown_generator() {
        assert!(GroupElement::new(AlgebraId::Sim2, vec![(5, 0.1)]).is_err());
        assert!(GroupElement::new(AlgebraId::Gl2Xy, vec![(0, 0.1)]).is_err());
        assert!(GroupElement::new(AlgebraId::Sl2Y, vec![(4, 0.1)]).is_ok());
    }

    #[test]
    fn stencil_actions() {
        let s = Stencil4::from_xy([0.0, 0.5, 1.5, 2.0], [1.0, 2.0, 0.0, -1.0]).unwrap();
        assert_eq!(GroupElement::identity(AlgebraId::Sim2).apply_stencil(&s).unwrap(), s);

        let t = GroupElement::new(AlgebraId::Sim2, vec![(1, 0.3), (2, -2.0)]).unwrap();
        let ts = t.apply_stencil(&s).unwrap();
        for (a, b) in ts.h().iter().zip(s.h()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(ts.points()[0].y, -1.0, epsilon = 1e-15);

        let lambda = 2.5_f64;
        let d = GroupElement::flow(AlgebraId::Sim2, 4, lambda.ln()).unwrap();
        let ds = d.apply_stencil(&s).unwrap();
        for (a, b) in ds.h().iter().zip(s.h()) {
            assert_abs_diff_eq!(*a, lambda * b, epsilon = 1e-14);
        }

        let flip = GroupElement::flow(AlgebraId::Sim2, 3, std::f64::consts::PI).unwrap();
        assert_eq!(flip.apply_stencil(&s), Err(Error::OrderViolation));
    }

    #[test]
    fn jet_transport_basics() {
        let j = Jet3::new(0.3, 1.0, 0.4, -0.7, 1.3);
        let id = GroupElement::identity(AlgebraId::Sim2);
        assert_eq!(id.transform_jet(&j).unwrap(), j);

        let t = GroupElement::new(AlgebraId::Sim2, vec![(1, 1.5), (2, -0.5)]).unwrap();
        let tj = t.transform_jet(&j).unwrap();
        assert_abs_diff_eq!(tj.x, 1.8, epsilon = 1e-14);
        assert_abs_diff_eq!(tj.y, 0.5, epsilon = 1e-14);
        for (a, b) in [(tj.y1, j.y1), (tj.y2, j.y2), (tj.y3, j.y3)] {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8 * b.abs().max(1.0));
        }

        let tau = 0.6_f64;
        let s = GroupElement::flow(AlgebraId::Sl2Y, 2, tau).unwrap();
        let sj = s.transform_jet(&j).unwrap();
        let l = tau.exp();
        for (a, b) in [(sj.y1, j.y1), (sj.y2, j.y2), (sj.y3, j.y3)] {
            assert_abs_diff_eq!(a, l * b, epsilon = 1e-8 * (l * b).abs().max(1.0));
        }
    }

    #[test]
    fn jet_transport_under_rotation_matches_exact_curvature() {
        // The unit circle's top point keeps curvature -1 under rotation;
        // rotating by t about the origin gives slope tan(t) at the image point.
        let j = Jet3::new(0.0, 1.0, 0.0, -1.0, 0.0);
        let tau = 0.3_f64;
        let g = GroupElement::flow(AlgebraId::Sim2, 3, tau).unwrap();
        // exact circle third derivative is 0 at the top; the cubic Taylor curve
        // agrees to third order, which is all the jet sees
        let tj = g.transform_jet(&j).unwrap();
        let kappa = tj.y2 / (1.0 + tj.y1 * tj.y1).powf(1.5);
        assert_abs_diff_eq!(tj.y1, -tau.tan(), epsilon = 1e-9);
        assert_abs_diff_eq!(kappa, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn random_words_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sampler = ElementSampler::gl2_full();
        for _ in 0..50 {
            let g = sampler.sample(&mut rng);
            assert_eq!(g.word().len(), sampler.length);
            for &(mu, t) in g.word() {
                let bound = sampler.generators.iter().find(|(m, _)| *m == mu).unwrap().1;
                assert!(t.abs() <= bound);
            }
        }
    }
}
