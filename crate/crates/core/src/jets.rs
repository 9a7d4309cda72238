//! Forward-mode jets for spatial derivatives.
//!
//! [`Jet1`] carries a value with its first and second derivative along a
//! single coordinate; [`Grad2`] carries a value with its gradient in the
//! plane. Both implement [`Jet`], which is what the network forward and
//! reverse passes are written against. A jet is stored as three channels
//! so basis evaluations can be laid out uniformly as `[value, d_a, d_b]`.
//!
//! At the kink of a non-smooth primitive (`|t - s|`, LeLU) the right-hand
//! derivative is used.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Operations shared by the 1D second-order jet and the 2D gradient jet.
pub trait Jet:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    /// Number of spatial input coordinates.
    const INPUT_DIM: usize;

    fn constant(value: f64) -> Self;

    fn zero() -> Self {
        Self::constant(0.0)
    }

    fn value(&self) -> f64;

    fn channels(&self) -> [f64; 3];

    fn from_channels(c: [f64; 3]) -> Self;

    /// Adds a constant to the value channel.
    fn shift(self, c: f64) -> Self {
        self + Self::constant(c)
    }

    /// Chain rule for a scalar map with `f(v)`, `f'(v)`, `f''(v)` at `v = self.value()`.
    fn apply(self, f: f64, df: f64, d2f: f64) -> Self;

    /// Adjoint of [`Jet::apply`] with respect to its input jet. `d3f` is the
    /// third derivative, needed because `apply` reads `f''`.
    fn apply_pullback(self, df: f64, d2f: f64, d3f: f64, bar: Self) -> Self;

    /// Adjoint of `u -> self * u` with respect to `u`.
    fn mul_pullback(self, bar: Self) -> Self;

    /// Channel-wise inner product, the adjoint pairing of two jets.
    fn dot(&self, other: &Self) -> f64 {
        let a = self.channels();
        let b = other.channels();
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    fn is_finite(&self) -> bool {
        self.channels().iter().all(|c| c.is_finite())
    }

    fn sigmoid(self) -> Self {
        let (s, ds, d2s, _) = sigmoid_derivatives(self.value());
        self.apply(s, ds, d2s)
    }

    fn exp(self) -> Self {
        let e = self.value().exp();
        self.apply(e, e, e)
    }

    fn sin(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.apply(s, c, -s)
    }

    fn cos(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.apply(c, -s, -c)
    }

    fn square(self) -> Self {
        self * self
    }

    /// `|self - s|`, right-hand derivative at the kink.
    fn abs_shifted(self, s: f64) -> Self {
        let t = self.value() - s;
        let sign = if t >= 0.0 { 1.0 } else { -1.0 };
        self.apply(t.abs(), sign, 0.0)
    }

    /// LeLU: `t` for `t >= 0`, `2t` otherwise.
    fn lelu(self) -> Self {
        let t = self.value();
        if t >= 0.0 {
            self.apply(t, 1.0, 0.0)
        } else {
            self.apply(2.0 * t, 2.0, 0.0)
        }
    }
}

/// Sigmoid and its first three derivatives.
pub fn sigmoid_derivatives(z: f64) -> (f64, f64, f64, f64) {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    let d1 = s * (1.0 - s);
    let d2 = d1 * (1.0 - 2.0 * s);
    let d3 = d2 * (1.0 - 2.0 * s) - 2.0 * d1 * d1;
    (s, d1, d2, d3)
}

/// Value with first and second derivative along one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet1 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet1 {
    pub fn new(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, d1, d2 }
    }

    /// The independent variable itself.
    pub fn variable(t: f64) -> Self {
        Self { value: t, d1: 1.0, d2: 0.0 }
    }
}

impl Add for Jet1 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl Sub for Jet1 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.value - o.value, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl Mul for Jet1 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.value * o.value,
            self.d1 * o.value + self.value * o.d1,
            self.d2 * o.value + 2.0 * self.d1 * o.d1 + self.value * o.d2,
        )
    }
}

impl Mul<f64> for Jet1 {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Self::new(self.value * c, self.d1 * c, self.d2 * c)
    }
}

impl Neg for Jet1 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.value, -self.d1, -self.d2)
    }
}

impl AddAssign for Jet1 {
    fn add_assign(&mut self, o: Self) {
        self.value += o.value;
        self.d1 += o.d1;
        self.d2 += o.d2;
    }
}

impl Jet for Jet1 {
    const INPUT_DIM: usize = 1;

    fn constant(value: f64) -> Self {
        Self { value, d1: 0.0, d2: 0.0 }
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn channels(&self) -> [f64; 3] {
        [self.value, self.d1, self.d2]
    }

    fn from_channels(c: [f64; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }

    fn apply(self, f: f64, df: f64, d2f: f64) -> Self {
        Self::new(f, df * self.d1, d2f * self.d1 * self.d1 + df * self.d2)
    }

    fn apply_pullback(self, df: f64, d2f: f64, d3f: f64, bar: Self) -> Self {
        Self::new(
            bar.value * df + bar.d1 * d2f * self.d1 + bar.d2 * (d3f * self.d1 * self.d1 + d2f * self.d2),
            bar.d1 * df + 2.0 * bar.d2 * d2f * self.d1,
            bar.d2 * df,
        )
    }

    fn mul_pullback(self, bar: Self) -> Self {
        Self::new(
            bar.value * self.value + bar.d1 * self.d1 + bar.d2 * self.d2,
            bar.d1 * self.value + 2.0 * bar.d2 * self.d1,
            bar.d2 * self.value,
        )
    }
}

/// Value with its gradient in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Grad2 {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Grad2 {
    pub fn new(value: f64, dx: f64, dy: f64) -> Self {
        Self { value, dx, dy }
    }

    /// The coordinate projection `(x, y) -> x`.
    pub fn x(x: f64) -> Self {
        Self { value: x, dx: 1.0, dy: 0.0 }
    }

    /// The coordinate projection `(x, y) -> y`.
    pub fn y(y: f64) -> Self {
        Self { value: y, dx: 0.0, dy: 1.0 }
    }
}

impl Add for Grad2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.value + o.value, self.dx + o.dx, self.dy + o.dy)
    }
}

impl Sub for Grad2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.value - o.value, self.dx - o.dx, self.dy - o.dy)
    }
}

impl Mul for Grad2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.value * o.value, self.dx * o.value + self.value * o.dx, self.dy * o.value + self.value * o.dy)
    }
}

impl Mul<f64> for Grad2 {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Self::new(self.value * c, self.dx * c, self.dy * c)
    }
}

impl Neg for Grad2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.value, -self.dx, -self.dy)
    }
}

impl AddAssign for Grad2 {
    fn add_assign(&mut self, o: Self) {
        self.value += o.value;
        self.dx += o.dx;
        self.dy += o.dy;
    }
}

impl Jet for Grad2 {
    const INPUT_DIM: usize = 2;

    fn constant(value: f64) -> Self {
        Self { value, dx: 0.0, dy: 0.0 }
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn channels(&self) -> [f64; 3] {
        [self.value, self.dx, self.dy]
    }

    fn from_channels(c: [f64; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }

    fn apply(self, f: f64, df: f64, _d2f: f64) -> Self {
        Self::new(f, df * self.dx, df * self.dy)
    }

    fn apply_pullback(self, df: f64, d2f: f64, _d3f: f64, bar: Self) -> Self {
        Self::new(bar.value * df + d2f * (bar.dx * self.dx + bar.dy * self.dy), bar.dx * df, bar.dy * df)
    }

    fn mul_pullback(self, bar: Self) -> Self {
        Self::new(
            bar.value * self.value + bar.dx * self.dx + bar.dy * self.dy,
            bar.dx * self.value,
            bar.dy * self.value,
        )
    }
}

/// A scalar field of one coordinate that can be pushed through jets.
///
/// Fields built from non-smooth primitives report their kink locations so
/// evaluations there can be flagged.
pub trait Field1 {
    fn eval(&self, t: Jet1) -> Jet1;

    fn is_kink(&self, _t: f64) -> bool {
        false
    }
}

impl<F: Fn(Jet1) -> Jet1> Field1 for F {
    fn eval(&self, t: Jet1) -> Jet1 {
        self(t)
    }
}

/// A scalar field of two coordinates.
pub trait Field2 {
    fn eval(&self, x: Grad2, y: Grad2) -> Grad2;

    fn is_kink(&self, _x: f64, _y: f64) -> bool {
        false
    }
}

impl<F: Fn(Grad2, Grad2) -> Grad2> Field2 for F {
    fn eval(&self, x: Grad2, y: Grad2) -> Grad2 {
        self(x, y)
    }
}

/// A 1D field with declared kink points.
pub struct Kinked1<F> {
    pub field: F,
    pub kinks: Vec<f64>,
}

impl<F: Fn(Jet1) -> Jet1> Field1 for Kinked1<F> {
    fn eval(&self, t: Jet1) -> Jet1 {
        (self.field)(t)
    }

    fn is_kink(&self, t: f64) -> bool {
        self.kinks.contains(&t)
    }
}

/// A 2D field with a kink predicate.
pub struct Kinked2<F, K> {
    pub field: F,
    pub kink: K,
}

impl<F, K> Field2 for Kinked2<F, K>
where
    F: Fn(Grad2, Grad2) -> Grad2,
    K: Fn(f64, f64) -> bool,
{
    fn eval(&self, x: Grad2, y: Grad2) -> Grad2 {
        (self.field)(x, y)
    }

    fn is_kink(&self, x: f64, y: f64) -> bool {
        (self.kink)(x, y)
    }
}

/// A jet together with the non-differentiable-point diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetEval<J> {
    pub jet: J,
    /// Set when the point is a kink; derivatives are then right-hand.
    pub non_differentiable: bool,
}

pub fn eval_jet1<F: Field1 + ?Sized>(f: &F, t: f64) -> JetEval<Jet1> {
    JetEval { jet: f.eval(Jet1::variable(t)), non_differentiable: f.is_kink(t) }
}

pub fn eval_grad2<F: Field2 + ?Sized>(f: &F, x: f64, y: f64) -> JetEval<Grad2> {
    JetEval { jet: f.eval(Grad2::x(x), Grad2::y(y)), non_differentiable: f.is_kink(x, y) }
}
