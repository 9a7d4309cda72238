//! Damped oscillator `p1 u'' + u' + p2 u = 0` on `(0, 10]` with `u(0) = 0`,
//! `u'(0) = −50`. The network part has homogeneous initial data; the total
//! solution is `u^{p,α}(t) − 50 t`.

use super::{Law, ParamComponent, ProblemDefinition, ProblemKind};
use crate::quadrature::Domain;

pub const FINAL_TIME: f64 = 10.0;
pub const INITIAL_VELOCITY: f64 = -50.0;

pub fn oscillator_problem() -> ProblemDefinition {
    let range = |name, law| ParamComponent {
        name,
        law,
        lo: 10f64.powf(-1.5),
        hi: 10f64.powf(1.5),
        lower_open: true,
        upper_open: true,
    };
    ProblemDefinition {
        kind: ProblemKind::Oscillator,
        domain: Domain::Interval { a: 0.0, b: FINAL_TIME },
        breakpoints: vec![],
        supports_pinn: true,
        supports_dfr: false,
        params: vec![range("p1", Law::LogUniform), range("p2", Law::Uniform)],
        complex: false,
    }
}

/// Exact total solution `(u, u', u'')` at time `t`.
///
/// Every root case is written as `u = v0 · e^{a t} g(t)` with `g(0) = 0`,
/// `g'(0) = 1`, which keeps nearly repeated roots free of cancellation.
pub fn oscillator_exact(p: &[f64], t: f64) -> [f64; 3] {
    let (p1, p2) = (p[0], p[1]);
    let disc = 1.0 - 4.0 * p1 * p2;
    let (a, g, dg, d2g) = if disc.abs() <= 1e-12 * (4.0 * p1 * p2).max(1.0) {
        (-0.5 / p1, t, 1.0, 0.0)
    } else if disc > 0.0 {
        let s = disc.sqrt();
        // Larger root via the product λ1 λ2 = p2 / p1 to avoid cancellation.
        let lambda1 = -2.0 * p2 / (1.0 + s);
        let delta = s / p1;
        let e = (-delta * t).exp();
        (lambda1, -(-delta * t).exp_m1() / delta, e, -delta * e)
    } else {
        let omega = (-disc).sqrt() / (2.0 * p1);
        let (sn, cs) = (omega * t).sin_cos();
        (-0.5 / p1, sn / omega, cs, -omega * sn)
    };
    let scale = INITIAL_VELOCITY * (a * t).exp();
    [scale * g, scale * (a * g + dg), scale * (a * a * g + 2.0 * a * dg + d2g)]
}
