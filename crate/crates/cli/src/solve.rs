//! `lsnet solve`: coefficients at one parameter point and the total solution
//! (network part plus lift) on a fixed evaluation grid.

use lsnet_core::assembly::AffineSystem;
use lsnet_core::network::forward_basis;
use lsnet_core::{NetworkParameters, ProblemDefinition, ProblemKind, Ridge, Scalar, Scheme};
use nalgebra::DVector;
use num_complex::Complex64;

use crate::{num, CliResult, Deployment};

/// Oscillator output step in time.
pub const OSCILLATOR_STEP: f64 = 0.01;
/// Helmholtz output cells on `[0, 1]`.
pub const HELMHOLTZ_CELLS: usize = 1000;
/// Transmission output cells per axis on `[−1, 1]`.
pub const TRANSMISSION_CELLS: usize = 100;

/// Grid points of the output, boundary included.
pub fn output_points(problem: &ProblemDefinition) -> Vec<Vec<f64>> {
    match problem.kind {
        ProblemKind::Oscillator => {
            let steps = (lsnet_core::problems::oscillator::FINAL_TIME / OSCILLATOR_STEP).round() as usize;
            (0..=steps).map(|i| vec![i as f64 * OSCILLATOR_STEP]).collect()
        }
        ProblemKind::Helmholtz1d => (0..=HELMHOLTZ_CELLS).map(|i| vec![i as f64 / HELMHOLTZ_CELLS as f64]).collect(),
        ProblemKind::Transmission2d => {
            let axis: Vec<f64> =
                (0..=TRANSMISSION_CELLS).map(|i| -1.0 + 2.0 * i as f64 / TRANSMISSION_CELLS as f64).collect();
            axis.iter().flat_map(|&y| axis.iter().map(move |&x| vec![x, y])).collect()
        }
    }
}

/// Total solution channels at `point`. At a kink of the regularity factor only
/// the value is defined; the derivatives are reported as NaN.
fn total_at<T: Scalar>(
    problem: &ProblemDefinition,
    params: &NetworkParameters,
    c: &DVector<T>,
    point: &[f64],
) -> CliResult<[T; 3]> {
    let eval = forward_basis(params, point)?;
    let lift = problem.lift(point);
    let mut out: [T; 3] = std::array::from_fn(|k| T::from_real(lift[k]));
    for (n, cn) in c.iter().enumerate() {
        let ch = eval.jet.channels(n);
        for k in 0..3 {
            out[k] += *cn * T::from_real(ch[k]);
        }
    }
    if eval.non_differentiable {
        out[1] = T::from_real(f64::NAN);
        out[2] = T::from_real(f64::NAN);
    }
    Ok(out)
}

fn coefficients<T: Scalar>(deployment: &Deployment, p: &[f64]) -> CliResult<DVector<T>> {
    let scheme = Scheme::new(&deployment.problem, &deployment.discretization)?;
    let values = scheme.evaluate(&deployment.params)?;
    let system = AffineSystem::<T>::new(&scheme, &values).with_ridge(Ridge::Fallback);
    Ok(system.solve(&deployment.problem.theta(p))?.result.c)
}

/// CSV text of the solution at `p`.
pub fn solve_csv(deployment: &Deployment, p: &[f64]) -> CliResult<String> {
    let problem = &deployment.problem;
    problem.check_point(p)?;
    let points = output_points(problem);
    let mut out = String::new();
    match problem.kind {
        ProblemKind::Oscillator => {
            let c = coefficients::<f64>(deployment, p)?;
            out.push_str("t,value,d1,d2\n");
            for x in &points {
                let v = total_at(problem, &deployment.params, &c, x)?;
                out.push_str(&format!("{},{},{},{}\n", num(x[0]), num(v[0]), num(v[1]), num(v[2])));
            }
        }
        ProblemKind::Helmholtz1d => {
            let c = coefficients::<Complex64>(deployment, p)?;
            out.push_str("x,re,im,re_dx,im_dx\n");
            for x in &points {
                let v = total_at(problem, &deployment.params, &c, x)?;
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    num(x[0]),
                    num(v[0].re),
                    num(v[0].im),
                    num(v[1].re),
                    num(v[1].im)
                ));
            }
        }
        ProblemKind::Transmission2d => {
            let c = coefficients::<f64>(deployment, p)?;
            out.push_str("x,y,value,dx,dy\n");
            for x in &points {
                let v = total_at(problem, &deployment.params, &c, x)?;
                out.push_str(&format!("{},{},{},{},{}\n", num(x[0]), num(x[1]), num(v[0]), num(v[1]), num(v[2])));
            }
        }
    }
    Ok(out)
}
