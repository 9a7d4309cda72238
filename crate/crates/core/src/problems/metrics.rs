//! Relative errors against reference solutions and the a-posteriori bounds
//! for the transmission problem.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{helmholtz_exact, oscillator_exact, ProblemDefinition, ProblemKind};
use crate::assembly::{AffineSystem, Basis, BasisValues, Scheme};
use crate::error::{Error, Result};
use crate::lstsq::Ridge;
use crate::quadrature::QuadratureRule;
use crate::scalar::Scalar;

/// Per-parameter error figures, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorReport {
    /// Relative `L²` errors of the value and its first two derivatives.
    Oscillator { value_pct: f64, d1_pct: f64, d2_pct: f64 },
    /// Relative `H¹` error.
    Helmholtz { h1_pct: f64 },
    /// Lower and upper residual bounds on the relative `H¹₀` error; the upper
    /// bound is `+∞` when `‖u‖ ≤ √L`.
    Transmission { lower_pct: f64, upper_pct: f64 },
}

/// Residual bounds on the relative error, as fractions:
/// `(√L/ϑ) / (‖u‖ + √L/ϑ)` and `√L / (‖u‖ − √L)`.
pub fn eq31_bounds(continuity: f64, sqrt_loss: f64, norm_u: f64) -> (f64, f64) {
    if sqrt_loss == 0.0 {
        return (0.0, 0.0);
    }
    let scaled = sqrt_loss / continuity;
    let lower = scaled / (norm_u + scaled);
    let denom = norm_u - sqrt_loss;
    let upper = if denom > 0.0 { sqrt_loss / denom } else { f64::INFINITY };
    (lower, upper)
}

fn relative(err_sq: f64, ref_sq: f64) -> Result<f64> {
    if !(ref_sq > 0.0) {
        return Err(Error::NonFinite("relative error with zero reference norm"));
    }
    Ok(100.0 * (err_sq / ref_sq).sqrt())
}

/// Channels of `Σ c_n u_n` at every node of `quad`, as complex numbers.
fn combination<T: Scalar, B: Basis + ?Sized>(
    basis: &B,
    c: &DVector<T>,
    quad: &QuadratureRule,
) -> Result<Vec<[Complex64; 3]>> {
    quad.nodes()
        .map(|x| {
            let ch = basis.channels(x)?;
            if ch.len() != c.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} coefficients for {} basis functions",
                    c.len(),
                    ch.len()
                )));
            }
            Ok(std::array::from_fn(|k| ch.iter().zip(c.iter()).map(|(u, ci)| ci.to_c64() * u[k]).sum()))
        })
        .collect()
}

/// `‖∇(Σ c_n u_n)‖_{L²}` of the network part (no lift) over `quad`.
pub fn h1_seminorm<T: Scalar, B: Basis + ?Sized>(basis: &B, c: &DVector<T>, quad: &QuadratureRule) -> Result<f64> {
    let vals = combination(basis, c, quad)?;
    let dims = basis.input_dim();
    let s: f64 =
        vals.iter().zip(quad.weights()).map(|(v, w)| w * (1..=dims).map(|k| v[k].norm_sqr()).sum::<f64>()).sum();
    Ok(s.sqrt())
}

/// Error figures of the coefficient vector `c` at parameter `p`.
///
/// `quad` is the evaluation rule; for the transmission bounds `residual_sq` is
/// the minimal residual `L^p` computed at the same resolution.
pub fn error_metrics<T: Scalar, B: Basis + ?Sized>(
    problem: &ProblemDefinition,
    basis: &B,
    c: &DVector<T>,
    p: &[f64],
    quad: &QuadratureRule,
    residual_sq: Option<f64>,
) -> Result<ErrorReport> {
    match problem.kind {
        ProblemKind::Oscillator => {
            let vals = combination(basis, c, quad)?;
            let mut err = [0.0; 3];
            let mut norm = [0.0; 3];
            for ((v, x), w) in vals.iter().zip(quad.nodes()).zip(quad.weights()) {
                let exact = oscillator_exact(p, x[0]);
                let lift = problem.lift(x);
                for k in 0..3 {
                    err[k] += w * (v[k].re + lift[k] - exact[k]).powi(2);
                    norm[k] += w * exact[k].powi(2);
                }
            }
            Ok(ErrorReport::Oscillator {
                value_pct: relative(err[0], norm[0])?,
                d1_pct: relative(err[1], norm[1])?,
                d2_pct: relative(err[2], norm[2])?,
            })
        }
        ProblemKind::Helmholtz1d => {
            let vals = combination(basis, c, quad)?;
            let (mut err, mut norm) = (0.0, 0.0);
            for ((v, x), w) in vals.iter().zip(quad.nodes()).zip(quad.weights()) {
                let (u, du) = helmholtz_exact(p, x[0]);
                err += w * ((v[0] - u).norm_sqr() + (v[1] - du).norm_sqr());
                norm += w * (u.norm_sqr() + du.norm_sqr());
            }
            Ok(ErrorReport::Helmholtz { h1_pct: relative(err, norm)? })
        }
        ProblemKind::Transmission2d => {
            let loss = residual_sq.ok_or_else(|| Error::Unsupported {
                problem: problem.name().into(),
                what: "bounds without a residual".into(),
            })?;
            let norm_u = h1_seminorm(basis, c, quad)?;
            let continuity = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let (lower, upper) = eq31_bounds(continuity, loss.sqrt(), norm_u);
            Ok(ErrorReport::Transmission { lower_pct: 100.0 * lower, upper_pct: 100.0 * upper })
        }
    }
}

/// Solves at `p` with `scheme` and reports errors over `eval` (or, for the
/// transmission bounds, over the scheme's own quadrature).
pub fn solve_and_measure<B: Basis + ?Sized>(
    problem: &ProblemDefinition,
    basis: &B,
    p: &[f64],
    scheme: &Scheme,
    eval: &QuadratureRule,
) -> Result<ErrorReport> {
    let mut reports = measure_many(problem, basis, std::slice::from_ref(&p.to_vec()), scheme, eval)?;
    Ok(reports.remove(0))
}

/// [`solve_and_measure`] over many parameter points, sharing the basis
/// evaluation and the affine blocks. Coefficients are plain least-squares
/// solutions.
pub fn measure_many<B: Basis + ?Sized>(
    problem: &ProblemDefinition,
    basis: &B,
    points: &[Vec<f64>],
    scheme: &Scheme,
    eval: &QuadratureRule,
) -> Result<Vec<ErrorReport>> {
    for p in points {
        problem.check_point(p)?;
    }
    let values = scheme.evaluate(basis)?;
    if problem.complex {
        measure_typed::<Complex64, B>(problem, basis, points, scheme, &values, eval)
    } else {
        measure_typed::<f64, B>(problem, basis, points, scheme, &values, eval)
    }
}

fn measure_typed<T: Scalar, B: Basis + ?Sized>(
    problem: &ProblemDefinition,
    basis: &B,
    points: &[Vec<f64>],
    scheme: &Scheme,
    values: &BasisValues,
    eval: &QuadratureRule,
) -> Result<Vec<ErrorReport>> {
    let system = AffineSystem::<T>::new(scheme, values).with_ridge(Ridge::Fallback);
    let quad = if problem.kind == ProblemKind::Transmission2d { scheme.quadrature() } else { eval };
    points
        .par_iter()
        .map(|p| {
            let sol = system.solve(&problem.theta(p)).map_err(|e| at(p, e))?;
            error_metrics(problem, basis, &sol.result.c, p, quad, Some(sol.result.residual_sq)).map_err(|e| at(p, e))
        })
        .collect()
}

fn at(p: &[f64], e: Error) -> Error {
    Error::AtParameter { param: p.to_vec(), source: Box::new(e) }
}
