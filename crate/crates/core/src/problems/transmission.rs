//! 2D transmission problem on `(−1, 1)²`: `−∇·(p ∇u) = 0` with `p = p_i` in
//! four disks of radius 1/4 and `p = 1` elsewhere, Dirichlet data
//! `cos(πx/2)` imposed through a lift.

use std::f64::consts::FRAC_PI_2;

use super::{Law, ParamComponent, ProblemDefinition, ProblemKind};
use crate::network::CIRCLE_CENTERS;
use crate::quadrature::Domain;

pub const INCLUSION_RADIUS_SQ: f64 = 1.0 / 16.0;

pub fn transmission_problem() -> ProblemDefinition {
    let comp =
        |name| ParamComponent { name, law: Law::Uniform, lo: 1.0, hi: 10.0, lower_open: false, upper_open: false };
    ProblemDefinition {
        kind: ProblemKind::Transmission2d,
        domain: Domain::Rect { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 },
        breakpoints: vec![],
        supports_pinn: false,
        supports_dfr: true,
        params: vec![comp("p1"), comp("p2"), comp("p3"), comp("p4")],
        complex: false,
    }
}

/// Index of the inclusion containing `point`, if any.
pub fn circle_of(point: &[f64]) -> Option<usize> {
    CIRCLE_CENTERS.iter().position(|&(cx, cy)| (point[0] - cx).powi(2) + (point[1] - cy).powi(2) < INCLUSION_RADIUS_SQ)
}

/// The piecewise coefficient `p(x, y)`.
pub fn transmission_coefficient(p: &[f64], point: &[f64]) -> f64 {
    circle_of(point).map_or(1.0, |i| p[i])
}

/// `[cos(πx/2), ∂_x, ∂_y]` of the lift.
pub fn lift(point: &[f64]) -> [f64; 3] {
    let (s, c) = (FRAC_PI_2 * point[0]).sin_cos();
    [c, -FRAC_PI_2 * s, 0.0]
}
