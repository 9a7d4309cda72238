//! Discrete residual systems `(B^p, l^p)` under the strong-form (PINN) and
//! weak-form (DFR) discretizations, their least-squares solution per
//! parameter, and the adjoint map from residual blocks back to basis values.
//!
//! Operators are affine in `θ(p)` (see [`crate::problems`]), so the blocks
//! `B_k` and their Gram products are assembled once per basis and combined per
//! parameter point.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{Grad2, Jet, Jet1};
use crate::lstsq::{solve_normal, ResidualSystem, Ridge, SolveResult};
use crate::network::{forward_basis, NetworkParameters};
use crate::problems::{ProblemDefinition, Term};
use crate::quadrature::{midpoint_1d, midpoint_2d, Domain, QuadratureRule};
use crate::scalar::Scalar;
use crate::testbasis::{cosine_basis_1d, sine_basis_2d, sine_factor, TestFunction};

/// Nodes per work item in parallel loops. Fixed so reductions do not depend
/// on the thread count.
const CHUNK: usize = 32;

/// A finite family of trial functions with spatial jets.
pub trait Basis: Sync {
    fn input_dim(&self) -> usize;

    fn num_basis(&self) -> usize;

    /// `[value, ∂_1, ∂_2]` of every basis function at `point`; in 1D the last
    /// channel is the second derivative, in 2D the `y` derivative.
    fn channels(&self, point: &[f64]) -> Result<Vec<[f64; 3]>>;
}

impl Basis for NetworkParameters {
    fn input_dim(&self) -> usize {
        NetworkParameters::input_dim(self)
    }

    fn num_basis(&self) -> usize {
        NetworkParameters::num_basis(self)
    }

    fn channels(&self, point: &[f64]) -> Result<Vec<[f64; 3]>> {
        let eval = forward_basis(self, point)?;
        if eval.non_differentiable {
            return Err(Error::NonDifferentiable(point.to_vec()));
        }
        let out: Vec<[f64; 3]> = (0..eval.jet.len()).map(|n| eval.jet.channels(n)).collect();
        if out.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("basis jets"));
        }
        Ok(out)
    }
}

/// Residual discretization and its resolution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Discretization {
    /// Strong-form residual at `nodes` midpoint nodes.
    Pinn { nodes: usize },
    /// Weak-form residual against `tests` cosine functions, `nodes` midpoint nodes.
    Dfr1d { tests: usize, nodes: usize },
    /// Weak-form residual against `tests[0] × tests[1]` sine functions on a
    /// `nodes[0] × nodes[1]` midpoint grid.
    Dfr2d { tests: [usize; 2], nodes: [usize; 2] },
}

impl Discretization {
    pub fn is_pinn(&self) -> bool {
        matches!(self, Discretization::Pinn { .. })
    }
}

/// Basis channels at the quadrature nodes and at the extra points.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisValues {
    /// Per channel, a `nodes × N` matrix.
    pub nodes: [DMatrix<f64>; 3],
    /// Per extra point, the channels of every basis function.
    pub points: Vec<Vec<[f64; 3]>>,
}

impl BasisValues {
    fn zeros(nodes: usize, points: usize, n: usize) -> Self {
        Self { nodes: std::array::from_fn(|_| DMatrix::zeros(nodes, n)), points: vec![vec![[0.0; 3]; n]; points] }
    }

    pub fn num_basis(&self) -> usize {
        self.nodes[0].ncols()
    }
}

/// How residual rows are formed from node-weighted trial channels.
#[derive(Debug, Clone, PartialEq)]
enum TestOp {
    /// PINN: one row per node.
    Identity,
    /// 1D tests as dense `M × nodes` matrices of values and derivatives.
    Dense { values: [DMatrix<f64>; 2] },
    /// 2D tensor-product sine tests. `sx[d]` is `M1 × nx` (`d` = 0 value,
    /// 1 derivative), `sy[d]` is `M2 × ny`, `scale` holds `a_(m1,m2)` in
    /// lexicographic order.
    Tensor { sx: [DMatrix<f64>; 2], sy: [DMatrix<f64>; 2], scale: DVector<f64> },
}

impl TestOp {
    /// Rows `Σ_j F[j, n] · test_m[channel](x_j)`; `f` already carries node weights.
    fn pair(&self, channel: usize, f: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            TestOp::Identity => f.clone(),
            TestOp::Dense { values } => &values[channel.min(1)] * f,
            TestOp::Tensor { sx, sy, scale } => {
                let (x, y) = tensor_factors(sx, sy, channel);
                let (nx, ny) = (x.ncols(), y.ncols());
                let mut out = DMatrix::zeros(scale.len(), f.ncols());
                for n in 0..f.ncols() {
                    let col = &f.as_slice()[n * nx * ny..(n + 1) * nx * ny];
                    // Column-major `ny × nx` view of the node-major grid values.
                    let grid = DMatrix::from_column_slice(ny, nx, col);
                    let t = y * grid * x.transpose();
                    out.column_mut(n).copy_from(&DVector::from_column_slice(t.as_slice()).component_mul(scale));
                }
                out
            }
        }
    }

    /// Adjoint of [`TestOp::pair`]: maps a `rows × N` adjoint to `nodes × N`.
    fn pair_adjoint(&self, channel: usize, bar: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            TestOp::Identity => bar.clone(),
            TestOp::Dense { values } => values[channel.min(1)].tr_mul(bar),
            TestOp::Tensor { sx, sy, scale } => {
                let (x, y) = tensor_factors(sx, sy, channel);
                let (m1, m2) = (x.nrows(), y.nrows());
                let (nx, ny) = (x.ncols(), y.ncols());
                let mut out = DMatrix::zeros(nx * ny, bar.ncols());
                for n in 0..bar.ncols() {
                    let scaled = bar.column(n).component_mul(scale);
                    let coeffs = DMatrix::from_column_slice(m2, m1, scaled.as_slice());
                    let grid = y.tr_mul(&coeffs) * x;
                    out.column_mut(n).copy_from_slice(grid.as_slice());
                }
                out
            }
        }
    }
}

fn tensor_factors<'a>(
    sx: &'a [DMatrix<f64>; 2],
    sy: &'a [DMatrix<f64>; 2],
    channel: usize,
) -> (&'a DMatrix<f64>, &'a DMatrix<f64>) {
    match channel {
        0 => (&sx[0], &sy[0]),
        1 => (&sx[1], &sy[0]),
        _ => (&sx[0], &sy[1]),
    }
}

fn sine_table(m: usize, nodes: &[f64]) -> [DMatrix<f64>; 2] {
    let mut v = DMatrix::zeros(m, nodes.len());
    let mut d = DMatrix::zeros(m, nodes.len());
    for i in 0..m {
        for (j, &s) in nodes.iter().enumerate() {
            let (a, b) = sine_factor(i + 1, s);
            v[(i, j)] = a;
            d[(i, j)] = b;
        }
    }
    [v, d]
}

/// A discretization instantiated for one problem: quadrature, tests and the
/// parameter-independent right-hand-side pieces.
#[derive(Debug, Clone)]
pub struct Scheme {
    discretization: Discretization,
    quad: QuadratureRule,
    tests: Vec<TestFunction>,
    op: TestOp,
    terms: Vec<Term>,
    /// Extra evaluation points, indexed by point terms.
    points: Vec<Vec<f64>>,
    /// Per term: node weights (√w for strong terms, w·χ_region for weak ones).
    node_weights: Vec<DVector<f64>>,
    /// Per term: index into `points` for point terms.
    point_index: Vec<Option<usize>>,
    /// Per point term: test values `v_m(point)`.
    point_tests: Vec<DVector<f64>>,
    load: DVector<f64>,
    lift: Vec<DVector<f64>>,
}

impl Scheme {
    pub fn new(problem: &ProblemDefinition, discretization: &Discretization) -> Result<Self> {
        let unsupported = |what: &str| Error::Unsupported { problem: problem.name().into(), what: what.into() };
        let (quad, tests, op, terms) = match (discretization, &problem.domain) {
            (Discretization::Pinn { nodes }, Domain::Interval { a, b }) => {
                if !problem.supports_pinn {
                    return Err(unsupported("the strong-form discretization"));
                }
                let quad = midpoint_1d(*a, *b, *nodes, &problem.breakpoints)?;
                (quad, vec![], TestOp::Identity, problem.strong_terms().ok_or_else(|| unsupported("strong form"))?)
            }
            (Discretization::Dfr1d { tests, nodes }, Domain::Interval { a, b }) => {
                if !problem.supports_dfr {
                    return Err(unsupported("the weak-form discretization"));
                }
                if (*a, *b) != (0.0, 1.0) {
                    return Err(Error::DimensionMismatch("cosine tests live on (0, 1)".into()));
                }
                if *tests == 0 {
                    return Err(Error::Quadrature("no test functions".into()));
                }
                let quad = midpoint_1d(*a, *b, *nodes, &problem.breakpoints)?;
                let funcs = cosine_basis_1d(*tests);
                let mut values = [DMatrix::zeros(*tests, quad.len()), DMatrix::zeros(*tests, quad.len())];
                for (m, f) in funcs.iter().enumerate() {
                    for (j, x) in quad.nodes().enumerate() {
                        let v = f.eval(x);
                        values[0][(m, j)] = v[0];
                        values[1][(m, j)] = v[1];
                    }
                }
                (quad, funcs, TestOp::Dense { values }, problem.weak_terms().ok_or_else(|| unsupported("weak form"))?)
            }
            (Discretization::Dfr2d { tests, nodes }, domain @ Domain::Rect { x0, x1, y0, y1 }) => {
                if !problem.supports_dfr {
                    return Err(unsupported("the weak-form discretization"));
                }
                if (*x0, *x1, *y0, *y1) != (-1.0, 1.0, -1.0, 1.0) {
                    return Err(Error::DimensionMismatch("sine tests live on (-1, 1)^2".into()));
                }
                if tests.contains(&0) {
                    return Err(Error::Quadrature("no test functions".into()));
                }
                let quad = midpoint_2d(domain, nodes[0], nodes[1])?;
                let grid = quad.grid().expect("tensor rule");
                let funcs = sine_basis_2d(tests[0], tests[1]);
                let scale = DVector::from_iterator(funcs.len(), funcs.iter().map(|f| f.norm_constant));
                let op =
                    TestOp::Tensor { sx: sine_table(tests[0], &grid.xs), sy: sine_table(tests[1], &grid.ys), scale };
                (quad, funcs, op, problem.weak_terms().ok_or_else(|| unsupported("weak form"))?)
            }
            _ => {
                return Err(Error::DimensionMismatch(format!(
                    "{discretization:?} does not fit the {}-dimensional domain of {}",
                    problem.dim(),
                    problem.name()
                )))
            }
        };

        let mut points = Vec::new();
        let mut node_weights = Vec::new();
        let mut point_index = Vec::new();
        let mut point_tests = Vec::new();
        for term in &terms {
            match term {
                Term::Strong { .. } => {
                    node_weights.push(DVector::from_iterator(quad.len(), quad.weights().iter().map(|w| w.sqrt())));
                    point_index.push(None);
                }
                Term::Weak { region, .. } => {
                    let w = quad.nodes().zip(quad.weights()).map(|(x, w)| if region.contains(x) { *w } else { 0.0 });
                    node_weights.push(DVector::from_iterator(quad.len(), w));
                    point_index.push(None);
                }
                Term::Point { point } => {
                    node_weights.push(DVector::zeros(0));
                    point_index.push(Some(points.len()));
                    point_tests.push(DVector::from_iterator(tests.len(), tests.iter().map(|f| f.eval(point)[0])));
                    points.push(point.clone());
                }
            }
        }

        let mut scheme = Scheme {
            discretization: discretization.clone(),
            quad,
            tests,
            op,
            terms,
            points,
            node_weights,
            point_index,
            point_tests,
            load: DVector::zeros(0),
            lift: vec![],
        };
        scheme.load = scheme.load_rows(problem);
        let lift_values = scheme.evaluate_fn(|x| Ok(vec![problem.lift(x)]))?;
        scheme.lift = scheme.blocks(&lift_values).into_iter().map(|b| b.column(0).into_owned()).collect();
        Ok(scheme)
    }

    fn load_rows(&self, problem: &ProblemDefinition) -> DVector<f64> {
        let f = DMatrix::from_iterator(self.quad.len(), 1, self.quad.nodes().map(|x| problem.load(x)));
        let weights = match self.op {
            TestOp::Identity => self.quad.weights().iter().map(|w| w.sqrt()).collect::<Vec<_>>(),
            _ => self.quad.weights().to_vec(),
        };
        let weighted = scale_rows(&f, &DVector::from_vec(weights));
        self.op.pair(0, &weighted).column(0).into_owned()
    }

    pub fn discretization(&self) -> &Discretization {
        &self.discretization
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    pub fn tests(&self) -> &[TestFunction] {
        &self.tests
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Number of residual rows: nodes (PINN) or test functions (DFR).
    pub fn rows(&self) -> usize {
        match self.op {
            TestOp::Identity => self.quad.len(),
            _ => self.tests.len(),
        }
    }

    /// Extra points at which the basis is evaluated (impedance boundary).
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Load rows `s`.
    pub fn load(&self) -> &DVector<f64> {
        &self.load
    }

    /// Lift rows `L_k`.
    pub fn lift(&self) -> &[DVector<f64>] {
        &self.lift
    }

    fn evaluate_fn<F>(&self, f: F) -> Result<BasisValues>
    where
        F: Fn(&[f64]) -> Result<Vec<[f64; 3]>> + Sync,
    {
        let nodes: Vec<&[f64]> = self.quad.nodes().collect();
        let rows: Vec<Vec<[f64; 3]>> = nodes
            .par_chunks(CHUNK)
            .map(|chunk| chunk.iter().map(|x| f(x)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("basis size varies between nodes".into()));
        }
        let mut out = BasisValues::zeros(rows.len(), 0, n);
        for (j, row) in rows.iter().enumerate() {
            for (k, ch) in row.iter().enumerate() {
                for c in 0..3 {
                    out.nodes[c][(j, k)] = ch[c];
                }
            }
        }
        out.points = self.points.iter().map(|x| f(x)).collect::<Result<Vec<_>>>()?;
        Ok(out)
    }

    /// Evaluates a basis at all nodes and extra points.
    pub fn evaluate<B: Basis + ?Sized>(&self, basis: &B) -> Result<BasisValues> {
        if basis.input_dim() != self.quad.dim() {
            return Err(Error::DimensionMismatch(format!(
                "basis input dimension {} but domain dimension {}",
                basis.input_dim(),
                self.quad.dim()
            )));
        }
        self.evaluate_fn(|x| basis.channels(x))
    }

    /// Parameter-independent blocks `B_k` (`rows × N`), one per term.
    pub fn blocks(&self, values: &BasisValues) -> Vec<DMatrix<f64>> {
        let n = values.num_basis();
        self.terms
            .iter()
            .enumerate()
            .map(|(k, term)| match term {
                Term::Strong { channel } => scale_rows(&values.nodes[*channel], &self.node_weights[k]),
                Term::Weak { pairs, .. } => {
                    let mut b = DMatrix::zeros(self.rows(), n);
                    for &(a, t) in pairs {
                        b += self.op.pair(t, &scale_rows(&values.nodes[a], &self.node_weights[k]));
                    }
                    b
                }
                Term::Point { .. } => {
                    let idx = self.point_index[k].expect("point term");
                    let at = DVector::from_iterator(n, values.points[idx].iter().map(|c| c[0]));
                    &self.point_tests[idx] * at.transpose()
                }
            })
            .collect()
    }

    /// Adjoint of [`Scheme::blocks`]: given `∂L/∂B_k`, returns `∂L/∂(basis values)`.
    pub fn blocks_adjoint(&self, bars: &[DMatrix<f64>]) -> BasisValues {
        let n = bars.first().map_or(0, |b| b.ncols());
        let mut out = BasisValues::zeros(self.quad.len(), self.points.len(), n);
        for (k, (term, bar)) in self.terms.iter().zip(bars).enumerate() {
            match term {
                Term::Strong { channel } => out.nodes[*channel] += scale_rows(bar, &self.node_weights[k]),
                Term::Weak { pairs, .. } => {
                    for &(a, t) in pairs {
                        out.nodes[a] += scale_rows(&self.op.pair_adjoint(t, bar), &self.node_weights[k]);
                    }
                }
                Term::Point { .. } => {
                    let idx = self.point_index[k].expect("point term");
                    let g = bar.tr_mul(&self.point_tests[idx]);
                    for (c, gv) in out.points[idx].iter_mut().zip(g.iter()) {
                        c[0] += gv;
                    }
                }
            }
        }
        out
    }

    /// Accumulates the network parameter gradient of `Σ ⟨bar, basis values⟩`.
    pub fn backprop(&self, params: &NetworkParameters, bar: &BasisValues) -> Vec<f64> {
        let len = params.flat().len();
        let n = params.num_basis();
        let nodes: Vec<(usize, &[f64])> = self.quad.nodes().enumerate().collect();
        let chunk_grads: Vec<Vec<f64>> = nodes
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut grad = vec![0.0; len];
                for &(j, x) in chunk {
                    let channels: Vec<[f64; 3]> =
                        (0..n).map(|k| std::array::from_fn(|c| bar.nodes[c][(j, k)])).collect();
                    backprop_channels(params, x, &channels, &mut grad);
                }
                grad
            })
            .collect();
        let mut grad = vec![0.0; len];
        for g in chunk_grads {
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b;
            }
        }
        for (x, channels) in self.points.iter().zip(&bar.points) {
            backprop_channels(params, x, channels, &mut grad);
        }
        grad
    }
}

fn backprop_channels(params: &NetworkParameters, point: &[f64], channels: &[[f64; 3]], grad: &mut [f64]) {
    if channels.iter().flatten().all(|v| *v == 0.0) {
        return;
    }
    match params.input_dim() {
        1 => {
            let bar: Vec<Jet1> = channels.iter().map(|c| Jet1::from_channels(*c)).collect();
            params.backprop_point(point, &bar, grad);
        }
        _ => {
            let bar: Vec<Grad2> = channels.iter().map(|c| Grad2::from_channels(*c)).collect();
            params.backprop_point(point, &bar, grad);
        }
    }
}

fn scale_rows(m: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        col.component_mul_assign(w);
    }
    out
}

fn to_scalar<T: Scalar>(m: &DMatrix<f64>) -> DMatrix<T> {
    m.map(T::from_real)
}

fn combine_real<T: Scalar>(coeffs: &[Complex64], mats: &[&DMatrix<f64>]) -> DMatrix<T> {
    let (r, c) = mats[0].shape();
    let mut re = DMatrix::zeros(r, c);
    let mut im = DMatrix::zeros(r, c);
    for (z, m) in coeffs.iter().zip(mats) {
        if z.re != 0.0 {
            re += *m * z.re;
        }
        if z.im != 0.0 {
            im += *m * z.im;
        }
    }
    re.zip_map(&im, |a, b| T::from_c64(Complex64::new(a, b)))
}

/// The affine family `B^p = Σ θ_k B_k`, `l^p = s − Σ θ_k L_k` for one basis,
/// with precomputed Gram products for fast per-parameter solves.
#[derive(Debug, Clone)]
pub struct AffineSystem<T: Scalar> {
    blocks: Vec<DMatrix<T>>,
    load: DVector<T>,
    lift: Vec<DVector<T>>,
    /// `B_kᵀ B_l`.
    gram: Vec<Vec<DMatrix<f64>>>,
    /// `B_kᵀ s`.
    bt_load: Vec<DVector<f64>>,
    /// `B_kᵀ L_l`.
    bt_lift: Vec<Vec<DVector<f64>>>,
    ridge: Ridge,
}

/// Relative ridge `η` of the inner problems solved for training and
/// validation losses: `λ = η tr(G) / N`.
pub const INNER_RIDGE: f64 = 1e-12;

/// Least-squares solution at one parameter point with its residual vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSolution<T: Scalar> {
    pub theta: Vec<Complex64>,
    pub result: SolveResult<T>,
    pub residual: DVector<T>,
}

impl<T: Scalar> AffineSystem<T> {
    pub fn new(scheme: &Scheme, values: &BasisValues) -> Self {
        Self::from_parts(scheme.blocks(values), scheme.load.clone(), scheme.lift.clone())
    }

    pub fn from_parts(blocks: Vec<DMatrix<f64>>, load: DVector<f64>, lift: Vec<DVector<f64>>) -> Self {
        let k = blocks.len();
        let mut gram = vec![vec![DMatrix::zeros(0, 0); k]; k];
        for a in 0..k {
            for b in a..k {
                let g = blocks[a].tr_mul(&blocks[b]);
                if a != b {
                    gram[b][a] = g.transpose();
                }
                gram[a][b] = g;
            }
        }
        let bt_load = blocks.iter().map(|b| b.tr_mul(&load)).collect();
        let bt_lift = blocks.iter().map(|b| lift.iter().map(|l| b.tr_mul(l)).collect()).collect();
        Self {
            blocks: blocks.iter().map(to_scalar).collect(),
            load: load.map(T::from_real),
            lift: lift.iter().map(|l| l.map(T::from_real)).collect(),
            gram,
            bt_load,
            bt_lift,
            ridge: Ridge::Relative(INNER_RIDGE),
        }
    }

    /// Replaces the regularization of the per-parameter solves.
    pub fn with_ridge(mut self, ridge: Ridge) -> Self {
        self.ridge = ridge;
        self
    }

    pub fn ridge(&self) -> Ridge {
        self.ridge
    }

    pub fn num_terms(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_basis(&self) -> usize {
        self.blocks[0].ncols()
    }

    fn check_theta(&self, theta: &[Complex64]) -> Result<()> {
        if theta.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} terms",
                theta.len(),
                self.blocks.len()
            )));
        }
        if !T::IS_COMPLEX && theta.iter().any(|z| z.im != 0.0) {
            return Err(Error::DimensionMismatch("complex coefficients in a real system".into()));
        }
        Ok(())
    }

    /// `l^p = s − Σ θ_k L_k`.
    pub fn rhs(&self, theta: &[Complex64]) -> DVector<T> {
        let mut l = self.load.clone();
        for (z, lk) in theta.iter().zip(&self.lift) {
            l -= lk * T::from_c64(*z);
        }
        l
    }

    /// The assembled system at one parameter point.
    pub fn system(&self, theta: &[Complex64]) -> Result<ResidualSystem<T>> {
        self.check_theta(theta)?;
        let mut b = DMatrix::zeros(self.blocks[0].nrows(), self.num_basis());
        for (z, bk) in theta.iter().zip(&self.blocks) {
            b += bk * T::from_c64(*z);
        }
        ResidualSystem::new(b, self.rhs(theta))
    }

    /// `B^p c − l^p`, computed from the blocks directly.
    pub fn residual(&self, theta: &[Complex64], c: &DVector<T>) -> DVector<T> {
        let mut r = -self.rhs(theta);
        for (z, bk) in theta.iter().zip(&self.blocks) {
            r += (bk * c) * T::from_c64(*z);
        }
        r
    }

    /// Solves the least-squares problem at one parameter point from the
    /// precomputed Gram products; the residual is recomputed from the blocks.
    pub fn solve(&self, theta: &[Complex64]) -> Result<PointSolution<T>> {
        self.check_theta(theta)?;
        let k = theta.len();
        let mut coeffs = Vec::with_capacity(k * k);
        let mut mats = Vec::with_capacity(k * k);
        for a in 0..k {
            for b in 0..k {
                let z = theta[a].conj() * theta[b];
                if z != Complex64::new(0.0, 0.0) {
                    coeffs.push(z);
                    mats.push(&self.gram[a][b]);
                }
            }
        }
        let g: DMatrix<T> = combine_real(&coeffs, &mats);
        let n = self.num_basis();
        let mut h = DVector::<T>::zeros(n);
        for a in 0..k {
            let mut v = self.bt_load[a].map(T::from_real);
            for b in 0..k {
                v -= self.bt_lift[a][b].map(T::from_real) * T::from_c64(theta[b]);
            }
            h += v * T::from_c64(theta[a].conj());
        }
        let sol = solve_normal(&g, &h, |c| self.residual(theta, c), |r| self.adjoint(theta, r), self.ridge)?;
        let residual_sq = sol.residual.norm_squared();
        Ok(PointSolution {
            theta: theta.to_vec(),
            result: SolveResult {
                c: sol.c,
                residual_sq,
                gram_condition_estimate: sol.condition,
                used_ridge: sol.used_ridge,
                ridge: sol.lambda,
            },
            residual: sol.residual,
        })
    }

    /// `(B^p)ᴴ r`.
    pub fn adjoint(&self, theta: &[Complex64], r: &DVector<T>) -> DVector<T> {
        let mut out = DVector::zeros(self.num_basis());
        for (z, bk) in theta.iter().zip(&self.blocks) {
            out += bk.ad_mul(r) * T::from_c64(z.conj());
        }
        out
    }

    /// `∂/∂B_k` of `scale · Σ_p (‖B^p c_p − l^p‖² + λ_p ‖c_p‖²)` with every
    /// `c_p` held fixed: `scale · Σ_p 2 Re(conj(r_p) (θ_k c_p)ᵀ)`, plus the
    /// dependence of a relative ridge `λ_p = η ‖B^p‖²_F / N` on the blocks.
    pub fn block_adjoints(&self, solutions: &[PointSolution<T>], scale: f64) -> Vec<DMatrix<f64>> {
        let rows = self.blocks[0].nrows();
        let n = self.num_basis();
        let count = solutions.len();
        let split =
            |v: &DVector<T>| -> (DVector<f64>, DVector<f64>) { (v.map(|z| z.to_c64().re), v.map(|z| z.to_c64().im)) };
        let mut r_re = DMatrix::zeros(rows, count);
        let mut r_im = DMatrix::zeros(rows, count);
        for (p, s) in solutions.iter().enumerate() {
            let (re, im) = split(&s.residual);
            r_re.set_column(p, &re);
            r_im.set_column(p, &im);
        }
        (0..self.blocks.len())
            .map(|k| {
                let mut c_re = DMatrix::zeros(n, count);
                let mut c_im = DMatrix::zeros(n, count);
                for (p, s) in solutions.iter().enumerate() {
                    let z = s.theta[k];
                    let tc = s.result.c.map(|c| c.to_c64() * z);
                    c_re.set_column(p, &tc.map(|w| w.re));
                    c_im.set_column(p, &tc.map(|w| w.im));
                }
                let mut bar = &r_re * c_re.transpose();
                if T::IS_COMPLEX {
                    bar += &r_im * c_im.transpose();
                }
                bar *= 2.0 * scale;
                if let Ridge::Relative(eta) = self.ridge {
                    let weight = 2.0 * scale * eta / n as f64;
                    for (j, bj) in self.blocks.iter().enumerate() {
                        let coef: f64 = solutions
                            .iter()
                            .filter(|s| s.result.ridge > 0.0)
                            .map(|s| s.result.c.norm_squared() * (s.theta[k].conj() * s.theta[j]).re)
                            .sum();
                        if coef != 0.0 {
                            bar += bj.map(|z| z.to_c64().re) * (weight * coef);
                        }
                    }
                }
                bar
            })
            .collect()
    }
}

/// Builds the system for one parameter point by combining the affine blocks.
pub fn assemble<T: Scalar, B: Basis + ?Sized>(
    problem: &ProblemDefinition,
    basis: &B,
    p: &[f64],
    scheme: &Scheme,
) -> Result<ResidualSystem<T>> {
    problem.check_point(p)?;
    if problem.complex && !T::IS_COMPLEX {
        return Err(Error::Unsupported { problem: problem.name().into(), what: "a real-valued system".into() });
    }
    let values = scheme.evaluate(basis)?;
    AffineSystem::<T>::new(scheme, &values).system(&problem.theta(p))
}

/// Strong-form system: `B_jn = √w_j (𝔅^p u_n)(x_j)`, `l_j = √w_j l^p(x_j)`.
pub fn assemble_pinn<B: Basis + ?Sized>(
    problem: &ProblemDefinition,
    basis: &B,
    p: &[f64],
    scheme: &Scheme,
) -> Result<ResidualSystem<f64>> {
    if !scheme.discretization().is_pinn() {
        return Err(Error::DimensionMismatch("assemble_pinn needs a strong-form scheme".into()));
    }
    assemble(problem, basis, p, scheme)
}

/// Weak-form system: `B_mn = ⟨𝔅^p u_n, v_m⟩`, `l_m = ⟨l^p, v_m⟩`.
pub fn assemble_dfr<T: Scalar, B: Basis + ?Sized>(
    problem: &ProblemDefinition,
    basis: &B,
    p: &[f64],
    scheme: &Scheme,
) -> Result<ResidualSystem<T>> {
    if scheme.discretization().is_pinn() {
        return Err(Error::DimensionMismatch("assemble_dfr needs a weak-form scheme".into()));
    }
    assemble(problem, basis, p, scheme)
}

/// Solves every parameter point of a batch, in batch order.
pub fn solve_batch<T: Scalar>(
    problem: &ProblemDefinition,
    system: &AffineSystem<T>,
    batch: &[Vec<f64>],
) -> Result<Vec<PointSolution<T>>> {
    batch
        .par_iter()
        .map(|p| {
            system.solve(&problem.theta(p)).map_err(|e| Error::AtParameter { param: p.clone(), source: Box::new(e) })
        })
        .collect()
}

/// Mean minimal objective `‖B c − l‖² + λ‖c‖²` over a batch and its per-point values.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    pub loss: f64,
    pub residuals: Vec<f64>,
    pub ridge_count: usize,
}

fn mean_loss<T: Scalar>(solutions: &[PointSolution<T>]) -> BatchLoss {
    let residuals: Vec<f64> = solutions.iter().map(|s| s.result.objective()).collect();
    let loss = residuals.iter().sum::<f64>() / residuals.len() as f64;
    let ridge_count = solutions.iter().filter(|s| s.result.used_ridge).count();
    BatchLoss { loss, residuals, ridge_count }
}

fn batch_loss_typed<T: Scalar, B: Basis + ?Sized>(
    problem: &ProblemDefinition,
    basis: &B,
    batch: &[Vec<f64>],
    scheme: &Scheme,
) -> Result<BatchLoss> {
    let values = scheme.evaluate(basis)?;
    let system = AffineSystem::<T>::new(scheme, &values);
    Ok(mean_loss(&solve_batch(problem, &system, batch)?))
}

/// `(1/|P|) Σ_p min_c ‖B^p c − l^p‖²` over a batch of parameter points.
pub fn batch_loss<B: Basis + ?Sized>(
    problem: &ProblemDefinition,
    basis: &B,
    batch: &[Vec<f64>],
    scheme: &Scheme,
) -> Result<BatchLoss> {
    if batch.is_empty() {
        return Err(Error::InvalidParameter { param: vec![], reason: "empty batch".into() });
    }
    for p in batch {
        problem.check_point(p)?;
    }
    if problem.complex {
        batch_loss_typed::<Complex64, B>(problem, basis, batch, scheme)
    } else {
        batch_loss_typed::<f64, B>(problem, basis, batch, scheme)
    }
}

/// Mean loss and its gradient with respect to the network parameters, with
/// every coefficient vector held at its least-squares optimum.
pub fn loss_and_grad_typed<T: Scalar>(
    problem: &ProblemDefinition,
    params: &NetworkParameters,
    batch: &[Vec<f64>],
    scheme: &Scheme,
) -> Result<(BatchLoss, Vec<f64>)> {
    let values = scheme.evaluate(params)?;
    let system = AffineSystem::<T>::new(scheme, &values);
    let solutions = solve_batch(problem, &system, batch)?;
    let bars = system.block_adjoints(&solutions, 1.0 / batch.len() as f64);
    let bar_values = scheme.blocks_adjoint(&bars);
    Ok((mean_loss(&solutions), scheme.backprop(params, &bar_values)))
}

/// Total solution `Σ c_n u_n + lift` and its derivatives at one point.
pub fn evaluate_solution<T: Scalar, B: Basis + ?Sized>(
    problem: &ProblemDefinition,
    basis: &B,
    c: &DVector<T>,
    point: &[f64],
) -> Result<[T; 3]> {
    let ch = basis.channels(point)?;
    if ch.len() != c.len() {
        return Err(Error::DimensionMismatch(format!("{} coefficients for {} basis functions", c.len(), ch.len())));
    }
    let lift = problem.lift(point);
    Ok(std::array::from_fn(|k| {
        ch.iter().zip(c.iter()).fold(T::from_real(lift[k]), |acc, (u, ci)| acc + *ci * T::from_real(u[k]))
    }))
}
