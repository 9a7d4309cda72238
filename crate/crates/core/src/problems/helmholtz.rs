//! 1D Helmholtz problem on `(0, 1)` with impedance boundary conditions, a
//! coefficient `p1` jumping from `p11` to `p12` at `x = 0.5` and a load
//! `f = 1` on the left half.
//!
//! Weak form: `∫ (p1 u' v' − p2² u v) dx − i p2 (√p11 u(0) v(0) + √p12 u(1) v(1))
//! = −∫ f v dx`. Strong form: `(p1 u')' + p2² u = f` with `u'(0) = −i k1 u(0)`,
//! `u'(1) = i k2 u(1)`, `k_i = p2 / √p1i`, continuous `u` and `p1 u'`.

use num_complex::Complex64;

use super::{Law, ParamComponent, ProblemDefinition, ProblemKind};
use crate::quadrature::Domain;

pub const INTERFACE: f64 = 0.5;

pub fn helmholtz_problem() -> ProblemDefinition {
    let p1 =
        |name| ParamComponent { name, law: Law::LogUniform, lo: 0.05, hi: 100.0, lower_open: true, upper_open: false };
    ProblemDefinition {
        kind: ProblemKind::Helmholtz1d,
        domain: Domain::Interval { a: 0.0, b: 1.0 },
        breakpoints: vec![INTERFACE],
        supports_pinn: false,
        supports_dfr: true,
        params: vec![
            p1("p11"),
            p1("p12"),
            ParamComponent { name: "p2", law: Law::Uniform, lo: 0.0, hi: 10.0, lower_open: true, upper_open: false },
        ],
        complex: true,
    }
}

/// The load `f`: 1 on `[0, 0.5]`, 0 after.
pub fn source(x: f64) -> f64 {
    if x <= INTERFACE {
        1.0
    } else {
        0.0
    }
}

/// Closed-form solution `(u, u')` of the problem above. At the interface the
/// right-hand derivative is returned.
///
/// Left of the interface `u = A e^{i k1 x} + B e^{−i k1 x} + 1/p2²`, right of it
/// `u = C e^{i k2 x}`; the impedance condition at 0 fixes `A`, continuity of
/// `u` and `p1 u'` fix `B` and `C`.
pub fn helmholtz_exact(p: &[f64], x: f64) -> (Complex64, Complex64) {
    let (p11, p12, p2) = (p[0], p[1], p[2]);
    let (s1, s2) = (p11.sqrt(), p12.sqrt());
    let (k1, k2) = (p2 / s1, p2 / s2);
    let i = Complex64::i();
    let inv = 1.0 / (p2 * p2);
    let e = (i * k1 * INTERFACE).exp();
    let a = Complex64::new(-0.5 * inv, 0.0);
    let q = (1.0 - e) * s1 * inv / (s1 + s2);
    let b = e * (a * e - q * (s2 / s1));
    if x < INTERFACE {
        let (ep, em) = ((i * k1 * x).exp(), (-i * k1 * x).exp());
        (a * ep + b * em + inv, i * k1 * (a * ep - b * em))
    } else {
        let c = q * (-i * k2 * INTERFACE).exp();
        let ep = (i * k2 * x).exp();
        (c * ep, i * k2 * c * ep)
    }
}

/// An alternative closed form with the source term on the right half. Kept for
/// comparison against the finite-difference oracle; it does not solve the
/// problem above.
pub fn helmholtz_exact_alternative(p: &[f64], x: f64) -> (Complex64, Complex64) {
    let (p11, p12, p2) = (p[0], p[1], p[2]);
    let (s1, s2) = (p11.sqrt(), p12.sqrt());
    let i = Complex64::i();
    let denom = p2 * p2 * (s2 * p11 + s1 * p12);
    let a = (-(0.5 * i * p2 * (s1 + s2) / (s1 * s2)).exp() + (0.5 * i * p2 / s1).exp()) * p12 * s1 / denom;
    let b = -2.0 * p11 * s2 * (-0.5 * i * p2 / s2 - s1 * p12 + s2 * p11).exp() / (2.0 * denom);
    let c = -(i * p2 / s2).exp() / (2.0 * p2 * p2);
    if x < INTERFACE {
        let k = p2 / s1;
        let em = (-i * k * x).exp();
        (a * em, -i * k * a * em)
    } else {
        let k = p2 / s2;
        let (ep, em) = ((i * k * x).exp(), (-i * k * x).exp());
        (b * ep + c * em + 1.0 / (p2 * p2), i * k * (b * ep - c * em))
    }
}
