//! Midpoint quadrature on intervals (optionally split at interfaces) and on
//! axis-aligned boxes.

use crate::error::{Error, Result};

/// Spatial domain of a problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rect { .. } => 2,
        }
    }

    pub fn volume(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Rect { x0, x1, y0, y1 } => (x1 - x0) * (y1 - y0),
        }
    }
}

/// Tensor structure of a 2D rule: node `i * ys.len() + k` sits at `(xs[i], ys[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    pub xs: Vec<f64>,
    pub wx: Vec<f64>,
    pub ys: Vec<f64>,
    pub wy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    /// Flattened coordinates, `dim` per node, in lexicographic order.
    nodes: Vec<f64>,
    weights: Vec<f64>,
    grid: Option<TensorGrid>,
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.nodes[j * self.dim..(j + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn grid(&self) -> Option<&TensorGrid> {
        self.grid.as_ref()
    }

    /// `Σ_j w_j f(x_j)`.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.nodes().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

/// Midpoints and cell widths of `cells` uniform cells on `[a, b]`.
fn uniform_cells(a: f64, b: f64, cells: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (b - a) / cells as f64;
    let nodes = (0..cells).map(|j| a + (j as f64 + 0.5) * h).collect();
    (nodes, vec![h; cells])
}

/// Splits `total` cells over pieces in proportion to their lengths, at least
/// one per piece, using largest remainders for the leftovers.
fn allocate_cells(lengths: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = lengths.iter().sum();
    let spare = total - lengths.len();
    let ideal: Vec<f64> = lengths.iter().map(|l| spare as f64 * l / sum).collect();
    let mut counts: Vec<usize> = ideal.iter().map(|x| 1 + x.floor() as usize).collect();
    let mut left = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|&i, &j| {
        let fi = ideal[i] - ideal[i].floor();
        let fj = ideal[j] - ideal[j].floor();
        fj.partial_cmp(&fi).unwrap().then(i.cmp(&j))
    });
    for i in order.into_iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Midpoint rule with `j_total` cells on `(a, b)`. With breakpoints, each piece
/// between consecutive breakpoints receives its own uniform cells so no cell
/// straddles an interface.
pub fn midpoint_1d(a: f64, b: f64, j_total: usize, breakpoints: &[f64]) -> Result<QuadratureRule> {
    if !(a < b) {
        return Err(Error::Quadrature(format!("empty interval ({a}, {b})")));
    }
    let mut cuts: Vec<f64> = breakpoints.to_vec();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    if cuts.iter().any(|&c| !(c > a && c < b)) {
        return Err(Error::Quadrature(format!("breakpoints {breakpoints:?} not inside ({a}, {b})")));
    }
    let mut edges = vec![a];
    edges.extend(cuts);
    edges.push(b);
    let pieces = edges.len() - 1;
    if j_total < pieces {
        return Err(Error::Quadrature(format!("{j_total} cells for {pieces} pieces")));
    }
    let lengths: Vec<f64> = edges.windows(2).map(|e| e[1] - e[0]).collect();
    let counts = if pieces == 1 { vec![j_total] } else { allocate_cells(&lengths, j_total) };
    let mut nodes = Vec::with_capacity(j_total);
    let mut weights = Vec::with_capacity(j_total);
    for (e, &count) in edges.windows(2).zip(&counts) {
        let (n, w) = uniform_cells(e[0], e[1], count);
        nodes.extend(n);
        weights.extend(w);
    }
    Ok(QuadratureRule { dim: 1, nodes, weights, grid: None })
}

/// Tensor midpoint rule with `j1 × j2` cells on a box domain.
pub fn midpoint_2d(domain: &Domain, j1: usize, j2: usize) -> Result<QuadratureRule> {
    let Domain::Rect { x0, x1, y0, y1 } = *domain else {
        return Err(Error::Quadrature("midpoint_2d needs a box domain".into()));
    };
    if j1 == 0 || j2 == 0 {
        return Err(Error::Quadrature(format!("cell counts {j1}x{j2}")));
    }
    let (xs, wx) = uniform_cells(x0, x1, j1);
    let (ys, wy) = uniform_cells(y0, y1, j2);
    let mut nodes = Vec::with_capacity(2 * j1 * j2);
    let mut weights = Vec::with_capacity(j1 * j2);
    for (x, a) in xs.iter().zip(&wx) {
        for (y, b) in ys.iter().zip(&wy) {
            nodes.push(*x);
            nodes.push(*y);
            weights.push(a * b);
        }
    }
    Ok(QuadratureRule { dim: 2, nodes, weights, grid: Some(TensorGrid { xs, wx, ys, wy }) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn two_cells() {
        let q = midpoint_1d(0.0, 1.0, 2, &[]).unwrap();
        assert_eq!(q.node(0), &[0.25]);
        assert_eq!(q.node(1), &[0.75]);
        assert_eq!(q.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn exact_for_linears() {
        let q = midpoint_1d(0.0, 1.0, 1000, &[]).unwrap();
        assert_relative_eq!(q.integrate(|x| x[0]), 0.5, max_relative = 1e-14);
        assert_relative_eq!(q.weights().iter().sum::<f64>(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn step_function_with_breakpoint() {
        let q = midpoint_1d(0.0, 1.0, 1000, &[0.5]).unwrap();
        let v = q.integrate(|x| if x[0] <= 0.5 { 1.0 } else { 0.0 });
        assert!((v - 0.5).abs() < 1e-12);
        // Without the split a cell straddling 0.5 would pick up half its width.
        let q = midpoint_1d(0.0, 1.0, 1001, &[]).unwrap();
        let v = q.integrate(|x| if x[0] <= 0.5 { 1.0 } else { 0.0 });
        assert!((v - 0.5).abs() > 1e-4);
    }

    #[test]
    fn uneven_pieces_get_proportional_cells() {
        let q = midpoint_1d(0.0, 1.0, 10, &[0.3]).unwrap();
        assert_eq!(q.len(), 10);
        assert_eq!(q.nodes().filter(|x| x[0] < 0.3).count(), 3);
        let q = midpoint_1d(0.0, 1.0, 3, &[0.001, 0.002]).unwrap();
        assert_eq!(q.len(), 3);
    }

    #[test]
    fn too_few_cells() {
        assert!(midpoint_1d(0.0, 1.0, 1, &[0.5]).is_err());
        assert!(midpoint_1d(1.0, 0.0, 4, &[]).is_err());
        assert!(midpoint_1d(0.0, 1.0, 4, &[1.0]).is_err());
    }

    #[test]
    fn box_rule() {
        let d = Domain::Rect { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 };
        let q = midpoint_2d(&d, 2, 2).unwrap();
        let pts: Vec<&[f64]> = q.nodes().collect();
        assert_eq!(pts, vec![&[-0.5, -0.5][..], &[-0.5, 0.5], &[0.5, -0.5], &[0.5, 0.5]]);
        assert_eq!(q.weights(), &[1.0; 4]);
        let q = midpoint_2d(&d, 300, 300).unwrap();
        assert_relative_eq!(q.weights().iter().sum::<f64>(), 4.0, max_relative = 1e-10);
        let v = q.integrate(|p| p[0] * p[0] * p[1] * p[1]);
        assert!((v - 4.0 / 9.0).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn nodes_avoid_breakpoints(j in 2usize..3000, bp in 0.01f64..0.99) {
            let q = midpoint_1d(0.0, 1.0, j, &[bp]).unwrap();
            prop_assert_eq!(q.len(), j);
            prop_assert!(q.nodes().all(|x| x[0] != bp && x[0] > 0.0 && x[0] < 1.0));
            let total: f64 = q.weights().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(q.weights().iter().all(|&w| w > 0.0));
        }
    }
}
