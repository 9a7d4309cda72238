//! Laplacian eigenfunction test bases used by the weak-form residual.
//!
//! In 1D the Neumann eigenfunctions `cos((m−1)πx)` on `(0, 1)`, scaled to unit
//! `H¹` norm. In 2D the Dirichlet eigenfunctions on `(−1, 1)²`, tensor
//! products of `sin(m π (s + 1) / 2)`, scaled to unit `‖∇·‖_{L²}`.

use std::f64::consts::PI;

/// Index of a test function: frequency `m` in 1D, `(m1, m2)` in 2D (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestIndex {
    One(usize),
    Two(usize, usize),
}

/// A single normalized test function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub index: TestIndex,
    pub norm_constant: f64,
}

impl TestFunction {
    /// Channels `[v, ∂v, 0]` in 1D and `[v, ∂_x v, ∂_y v]` in 2D.
    pub fn eval(&self, point: &[f64]) -> [f64; 3] {
        let a = self.norm_constant;
        match self.index {
            TestIndex::One(m) => {
                let k = (m - 1) as f64 * PI;
                let (s, c) = (k * point[0]).sin_cos();
                [a * c, -a * k * s, 0.0]
            }
            TestIndex::Two(m1, m2) => {
                let (sx, cx) = sine_factor(m1, point[0]);
                let (sy, cy) = sine_factor(m2, point[1]);
                [a * sx * sy, a * cx * sy, a * sx * cy]
            }
        }
    }
}

/// `sin(mπ(s+1)/2)` and its derivative in `s`.
pub(crate) fn sine_factor(m: usize, s: f64) -> (f64, f64) {
    let k = m as f64 * PI / 2.0;
    let (sn, cs) = (k * (s + 1.0)).sin_cos();
    (sn, k * cs)
}

pub fn cosine_norm_constant(m: usize) -> f64 {
    if m == 1 {
        1.0
    } else {
        let k = (m - 1) as f64 * PI;
        (2.0 / (1.0 + k * k)).sqrt()
    }
}

pub fn sine_norm_constant(m1: usize, m2: usize) -> f64 {
    2.0 / (PI * ((m1 * m1 + m2 * m2) as f64).sqrt())
}

/// `v_m = a_m cos((m−1)πx)`, `m = 1..=M`, in increasing frequency.
pub fn cosine_basis_1d(m: usize) -> Vec<TestFunction> {
    (1..=m).map(|i| TestFunction { index: TestIndex::One(i), norm_constant: cosine_norm_constant(i) }).collect()
}

/// Tensor sine basis in lexicographic `(m1, m2)` order.
pub fn sine_basis_2d(m1: usize, m2: usize) -> Vec<TestFunction> {
    let mut out = Vec::with_capacity(m1 * m2);
    for i in 1..=m1 {
        for k in 1..=m2 {
            out.push(TestFunction { index: TestIndex::Two(i, k), norm_constant: sine_norm_constant(i, k) });
        }
    }
    out
}

/// A test basis as used by the assembler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestBasis {
    Cosine1d { m: usize },
    Sine2d { m1: usize, m2: usize },
}

impl TestBasis {
    pub fn len(&self) -> usize {
        match *self {
            TestBasis::Cosine1d { m } => m,
            TestBasis::Sine2d { m1, m2 } => m1 * m2,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            TestBasis::Cosine1d { .. } => 1,
            TestBasis::Sine2d { .. } => 2,
        }
    }

    pub fn functions(&self) -> Vec<TestFunction> {
        match *self {
            TestBasis::Cosine1d { m } => cosine_basis_1d(m),
            TestBasis::Sine2d { m1, m2 } => sine_basis_2d(m1, m2),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{midpoint_1d, midpoint_2d, Domain};
    use approx::assert_relative_eq;

    fn h1_inner(q: &crate::quadrature::QuadratureRule, a: &TestFunction, b: &TestFunction) -> f64 {
        q.integrate(|x| {
            let (u, v) = (a.eval(x), b.eval(x));
            u[0] * v[0] + u[1] * v[1]
        })
    }

    fn grad_inner(q: &crate::quadrature::QuadratureRule, a: &TestFunction, b: &TestFunction) -> f64 {
        q.integrate(|x| {
            let (u, v) = (a.eval(x), b.eval(x));
            u[1] * v[1] + u[2] * v[2]
        })
    }

    #[test]
    fn cosine_constants() {
        let b = cosine_basis_1d(3);
        assert_eq!(b[0].norm_constant, 1.0);
        assert_eq!(b[0].eval(&[0.3]), [1.0, 0.0, 0.0]);
        // ∫ (a cos πx)² + (aπ sin πx)² = a²(1 + π²)/2
        assert_relative_eq!(b[1].norm_constant, 0.42896, epsilon = 1e-5);
        assert_relative_eq!(b[1].norm_constant.powi(2) * (1.0 + PI * PI) / 2.0, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn sine_constants_and_boundary() {
        assert_relative_eq!(sine_norm_constant(1, 1), 0.45016, epsilon = 1e-5);
        for f in sine_basis_2d(4, 3) {
            for p in [[-1.0, 0.3], [1.0, -0.2], [0.1, -1.0], [0.7, 1.0]] {
                assert!(f.eval(&p)[0].abs() < 1e-15);
            }
        }
        let b = sine_basis_2d(2, 3);
        assert_eq!(b[0].index, TestIndex::Two(1, 1));
        assert_eq!(b[1].index, TestIndex::Two(1, 2));
        assert_eq!(b[3].index, TestIndex::Two(2, 1));
    }

    #[test]
    fn cosine_norms_and_orthogonality_at_training_resolution() {
        let q = midpoint_1d(0.0, 1.0, 1000, &[0.5]).unwrap();
        let b = cosine_basis_1d(40);
        for (i, f) in b.iter().enumerate() {
            assert!((h1_inner(&q, f, f) - 1.0).abs() < 1e-3);
            for g in &b[i + 1..] {
                assert!(h1_inner(&q, f, g).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn sine_norm_and_orthogonality() {
        let d = Domain::Rect { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 };
        let q = midpoint_2d(&d, 300, 300).unwrap();
        let f = TestFunction { index: TestIndex::Two(3, 2), norm_constant: sine_norm_constant(3, 2) };
        assert!((grad_inner(&q, &f, &f) - 1.0).abs() < 1e-3);
        let q = midpoint_2d(&d, 60, 60).unwrap();
        let b = sine_basis_2d(4, 4);
        for (i, f) in b.iter().enumerate() {
            for g in &b[i + 1..] {
                assert!(grad_inner(&q, f, g).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn constants_decrease_with_frequency() {
        let b = cosine_basis_1d(400);
        assert!(b.windows(2).all(|w| w[1].norm_constant < w[0].norm_constant));
        assert!(sine_norm_constant(2, 3) < sine_norm_constant(2, 2));
        assert!(sine_norm_constant(5, 1) < sine_norm_constant(4, 1));
    }
}
