//! Damped Newton iteration for the small nonlinear systems solved at each step.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relative finite-difference perturbation for the Jacobian.
    pub fd_step: f64,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
            fd_step: 1e-7,
            max_halvings: 20,
        }
    }
}

fn norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `f(u) = 0` from `u0`. `scale[i]` sets the absolute part of the
/// finite-difference perturbation of `u[i]`: `fd_step * (|u[i]| + scale[i])`.
pub fn solve<const N: usize, F>(
    f: F,
    u0: [f64; N],
    scale: [f64; N],
    opts: &NewtonOptions,
) -> Result<([f64; N], NewtonReport)>
where
    F: Fn(&[f64; N]) -> Result<[f64; N]>,
{
    let mut u = u0;
    let mut r = f(&u)?;
    let mut rn = norm(&r);
    let report = |iterations, residual_norm, converged| NewtonReport {
        iterations,
        residual_norm,
        converged,
    };
    for it in 0..opts.max_iter {
        if rn <= opts.tol {
            return Ok((u, report(it, rn, true)));
        }
        let mut jac = DMatrix::<f64>::zeros(N, N);
        for i in 0..N {
            let d = opts.fd_step * (u[i].abs() + scale[i]);
            let mut up = u;
            up[i] += d;
            let mut um = u;
            um[i] -= d;
            let (fp, fm) = (f(&up)?, f(&um)?);
            for k in 0..N {
                jac[(k, i)] = (fp[k] - fm[k]) / (2.0 * d);
            }
        }
        let rhs = DVector::<f64>::from_column_slice(&r);
        let Some(delta) = jac.lu().solve(&rhs) else {
            return Err(Error::NewtonDiverged(report(it, rn, false)));
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: [f64; N] = std::array::from_fn(|i| u[i] - lambda * delta[i]);
            if let Ok(rt) = f(&trial) {
                let tn = norm(&rt);
                if tn < rn || tn <= opts.tol {
                    accepted = Some((trial, rt, tn));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((t, rt, tn)) => {
                u = t;
                r = rt;
                rn = tn;
            }
            None => return Err(Error::NewtonDiverged(report(it + 1, rn, false))),
        }
    }
    if rn <= opts.tol {
        Ok((u, report(opts.max_iter, rn, true)))
    } else {
        Err(Error::NewtonDiverged(report(opts.max_iter, rn, false)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn solves_circle_line_intersection() {
        let f = |u: &[f64; 2]| Ok([u[0] * u[0] + u[1] * u[1] - 1.0, u[0] - u[1]]);
        let (u, rep) = solve(f, [1.0, 0.2], [1.0, 1.0], &NewtonOptions::default()).unwrap();
        assert!(rep.converged);
        assert_abs_diff_eq!(u[0], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(u[1], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn already_converged_takes_no_iterations() {
        let f = |u: &[f64; 1]| Ok([u[0] - 2.0]);
        let (_, rep) = solve(f, [2.0], [1.0], &NewtonOptions::default()).unwrap();
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn reports_divergence() {
        let f = |u: &[f64; 1]| Ok([u[0] * u[0] + 1.0]);
        let err = solve(f, [0.5], [1.0], &NewtonOptions::default()).unwrap_err();
        match err {
            Error::NewtonDiverged(rep) => assert!(!rep.converged && rep.residual_norm >= 1.0),
            e => panic!("unexpected {e:?}"),
        }
    }
}
