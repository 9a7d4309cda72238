//! Dense least-squares solves through the normal equations.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Discrete residual `‖B c − l‖²` of one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSystem<T: Scalar> {
    pub b: DMatrix<T>,
    pub l: DVector<T>,
}

impl<T: Scalar> ResidualSystem<T> {
    pub fn new(b: DMatrix<T>, l: DVector<T>) -> Result<Self> {
        if b.nrows() != l.len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} rows, right-hand side {}",
                b.nrows(),
                l.len()
            )));
        }
        Ok(Self { b, l })
    }

    pub fn is_complex(&self) -> bool {
        T::IS_COMPLEX
    }

    /// `‖B c − l‖²` evaluated directly.
    pub fn residual_sq(&self, c: &DVector<T>) -> f64 {
        (&self.b * c - &self.l).norm_squared()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T: Scalar> {
    pub c: DVector<T>,
    pub residual_sq: f64,
    /// `(max L_ii / min L_ii)²` of the Cholesky factor that was used.
    pub gram_condition_estimate: f64,
    /// True when the fallback ridge was needed to factor the Gram matrix.
    pub used_ridge: bool,
    /// Ridge weight `λ` of the minimized objective `‖B c − l‖² + λ ‖c‖²`.
    pub ridge: f64,
}

impl<T: Scalar> SolveResult<T> {
    /// `‖B c − l‖² + λ ‖c‖²`.
    pub fn objective(&self) -> f64 {
        self.residual_sq + self.ridge * self.c.norm_squared()
    }
}

/// Regularization of the normal equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ridge {
    /// Plain least squares. When `G` cannot be factored, `G + 1e-10 · tr(G)/N · I`
    /// is factored instead and serves only as the preconditioner of the
    /// refinement, which still targets `‖B c − l‖²`.
    Fallback,
    /// Always minimize `‖B c − l‖² + η tr(G)/N ‖c‖²`.
    Relative(f64),
}

/// Least-squares coefficients with the residual `B c − l` they leave.
pub(crate) struct NormalSolution<T: Scalar> {
    pub c: DVector<T>,
    pub residual: DVector<T>,
    pub condition: f64,
    pub used_ridge: bool,
    pub lambda: f64,
}

fn all_finite<T: Scalar>(values: impl IntoIterator<Item = T>) -> bool {
    values.into_iter().all(|v| v.to_c64().re.is_finite() && v.to_c64().im.is_finite())
}

/// `(max L_ii / min L_ii)²` of a Cholesky factor.
fn pivot_condition<T: Scalar>(chol: &Cholesky<T, Dyn>) -> f64 {
    let l = chol.l_dirty();
    let n = l.nrows();
    let diag: Vec<f64> = (0..n).map(|i| l[(i, i)].real()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    (max / min).powi(2)
}

/// Factors `G`, or `None` when the factorization fails or its pivots fall
/// below the rounding floor.
fn factor<T: Scalar>(g: &DMatrix<T>) -> Option<(Cholesky<T, Dyn>, f64)> {
    let chol = Cholesky::new(g.clone())?;
    let condition = pivot_condition(&chol);
    let floor = g.nrows() as f64 * f64::EPSILON;
    (condition.is_finite() && condition * floor < 1.0).then_some((chol, condition))
}

/// Cap on refinement steps against the true residual.
const REFINEMENT_STEPS: usize = 10;

/// `tr(G) / N` for a Gram matrix.
pub(crate) fn mean_diagonal<T: Scalar>(g: &DMatrix<T>) -> f64 {
    let n = g.nrows();
    (0..n).map(|i| g[(i, i)].real()).sum::<f64>() / n as f64
}

fn factor_ridged<T: Scalar>(g: &DMatrix<T>, lambda: f64) -> Result<(Cholesky<T, Dyn>, f64)> {
    let mut ridged = g.clone();
    for i in 0..g.nrows() {
        ridged[(i, i)] += T::from_real(lambda);
    }
    let chol = Cholesky::new(ridged).ok_or(Error::Singular)?;
    let condition = pivot_condition(&chol);
    Ok((chol, condition))
}

/// Minimizes `‖B c − l‖² + λ ‖c‖²` given the Gram matrix `G = Bᴴ B`,
/// `h = Bᴴ l`, the residual map `c ↦ B c − l` and the adjoint `r ↦ Bᴴ r`.
///
/// `G + λI` is factored by Cholesky, with `λ` fixed by `ridge`. The solution
/// is then refined with corrections `(G + λI)⁻¹ (Bᴴ r + λ c)` computed from the
/// true residual, each kept only if it lowers the objective. A fallback ridge
/// only preconditions: its `λ` is left out of the objective.
pub(crate) fn solve_normal<T, R, A>(
    g: &DMatrix<T>,
    h: &DVector<T>,
    residual: R,
    adjoint: A,
    ridge: Ridge,
) -> Result<NormalSolution<T>>
where
    T: Scalar,
    R: Fn(&DVector<T>) -> DVector<T>,
    A: Fn(&DVector<T>) -> DVector<T>,
{
    if !all_finite(g.iter().copied()) || !all_finite(h.iter().copied()) {
        return Err(Error::NonFinite("normal equations"));
    }
    let positive = |lambda: f64| if lambda > 0.0 { lambda } else { 1e-10 };
    let (chol, condition, used_ridge, lambda) = match ridge {
        Ridge::Relative(eta) => {
            let lambda = positive(eta * mean_diagonal(g));
            let (chol, condition) = factor_ridged(g, lambda)?;
            (chol, condition, false, lambda)
        }
        Ridge::Fallback => match factor(g) {
            Some((chol, condition)) => (chol, condition, false, 0.0),
            None => {
                let (chol, condition) = factor_ridged(g, positive(1e-10 * mean_diagonal(g)))?;
                (chol, condition, true, 0.0)
            }
        },
    };
    let mut c = chol.solve(h);
    if !all_finite(c.iter().copied()) {
        return Err(Error::Singular);
    }
    // For the fallback `c` starts at the ridge solution and is refined towards plain least squares.
    let objective = |c: &DVector<T>, r: &DVector<T>| r.norm_squared() + lambda * c.norm_squared();
    let mut r = residual(&c);
    let mut value = objective(&c, &r);
    for _ in 0..REFINEMENT_STEPS {
        let mut grad = adjoint(&r);
        if lambda > 0.0 {
            grad += &c * T::from_real(lambda);
        }
        let candidate = &c - chol.solve(&grad);
        let r_new = residual(&candidate);
        let new_value = objective(&candidate, &r_new);
        if !(new_value < value) {
            break;
        }
        let gain = value - new_value;
        c = candidate;
        r = r_new;
        value = new_value;
        if gain <= 1e-14 * value {
            break;
        }
    }
    if !value.is_finite() {
        return Err(Error::NonFinite("residual"));
    }
    Ok(NormalSolution { c, residual: r, condition, used_ridge, lambda })
}

/// Minimizes `‖B c − l‖²` via the Gram matrix `Bᴴ B` and Cholesky.
pub fn solve_ls<T: Scalar>(sys: &ResidualSystem<T>) -> Result<SolveResult<T>> {
    if sys.b.nrows() == 0 || sys.b.ncols() == 0 {
        return Err(Error::DimensionMismatch(format!("empty system {}x{}", sys.b.nrows(), sys.b.ncols())));
    }
    if !all_finite(sys.b.iter().copied()) || !all_finite(sys.l.iter().copied()) {
        return Err(Error::NonFinite("residual system"));
    }
    let g = sys.b.ad_mul(&sys.b);
    let h = sys.b.ad_mul(&sys.l);
    let sol = solve_normal(&g, &h, |c| &sys.b * c - &sys.l, |r| sys.b.ad_mul(r), Ridge::Fallback)?;
    Ok(SolveResult {
        residual_sq: sol.residual.norm_squared(),
        c: sol.c,
        gram_condition_estimate: sol.condition,
        used_ridge: sol.used_ridge,
        ridge: sol.lambda,
    })
}
