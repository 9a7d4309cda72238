//! The basis network: a sigmoid MLP `ū` whose outputs are multiplied by a
//! cut-off `φ` and a regularity factor `ψ`, giving `u_n = φ · ū_n · ψ_n`.

use rand::distributions::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{Grad2, Jet, Jet1, JetEval};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
}

/// Multiplicative cut-off imposing homogeneous conditions on the span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    /// `φ = 1`.
    One,
    /// `φ(t) = t²`: value and first derivative vanish at `t = 0`.
    TSquared,
    /// `φ(x, y) = (x² − 1)(y² − 1)`: vanishes on the boundary of `(−1, 1)²`.
    BoxQuadratic,
}

impl Cutoff {
    pub fn from_token(token: &str) -> Result<Self> {
        match token {
            "one" => Ok(Cutoff::One),
            "t_squared" => Ok(Cutoff::TSquared),
            "box_quadratic" => Ok(Cutoff::BoxQuadratic),
            _ => Err(Error::UnknownToken { kind: "cutoff", token: token.into() }),
        }
    }

    fn input_dim(self) -> Option<usize> {
        match self {
            Cutoff::One => None,
            Cutoff::TSquared => Some(1),
            Cutoff::BoxQuadratic => Some(2),
        }
    }

    pub fn eval<J: InputJet>(self, inputs: &[J]) -> J {
        match self {
            Cutoff::One => J::constant(1.0),
            Cutoff::TSquared => inputs[0].square(),
            Cutoff::BoxQuadratic => inputs[0].square().shift(-1.0) * inputs[1].square().shift(-1.0),
        }
    }
}

/// Default threshold on the squared distance inside the transmission LeLU factors.
pub const CIRCLE_PSI_RADIUS_SQ: f64 = 0.25;

/// Circle centers `Ω_1..Ω_4` of the transmission geometry.
pub const CIRCLE_CENTERS: [(f64, f64); 4] = [(0.5, 0.5), (-0.5, 0.5), (0.5, -0.5), (-0.5, -0.5)];

/// Regularity factors multiplying the network outputs component-wise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "id")]
pub enum Psi {
    Ones,
    /// First ⌊N/2⌋ factors are 1, the rest `|x − 0.5|`.
    HelmholtzInterface,
    /// A smooth group of ones followed by four equal groups of
    /// `LeLU(r² − ‖(x_i, y_i) − (x, y)‖²)`, one per circle.
    TransmissionCircles {
        radius_sq: f64,
    },
}

/// Looks up a regularity factor by token.
pub fn psi_catalog(token: &str) -> Result<Psi> {
    match token {
        "ones" => Ok(Psi::Ones),
        "helmholtz_interface" => Ok(Psi::HelmholtzInterface),
        "transmission_circles" => Ok(Psi::TransmissionCircles { radius_sq: CIRCLE_PSI_RADIUS_SQ }),
        _ => Err(Error::UnknownToken { kind: "psi", token: token.into() }),
    }
}

impl Psi {
    pub fn token(&self) -> &'static str {
        match self {
            Psi::Ones => "ones",
            Psi::HelmholtzInterface => "helmholtz_interface",
            Psi::TransmissionCircles { .. } => "transmission_circles",
        }
    }

    fn input_dim(&self) -> Option<usize> {
        match self {
            Psi::Ones => None,
            Psi::HelmholtzInterface => Some(1),
            Psi::TransmissionCircles { .. } => Some(2),
        }
    }

    /// Sizes of the factor groups for `n` outputs, smooth group first.
    pub fn group_sizes(&self, n: usize) -> Vec<usize> {
        match self {
            Psi::Ones => vec![n],
            Psi::HelmholtzInterface => vec![n / 2, n - n / 2],
            Psi::TransmissionCircles { .. } => {
                let g = n / 5;
                vec![n - 4 * g, g, g, g, g]
            }
        }
    }

    /// The distinct factors, one per group, as jets.
    fn group_factors<J: InputJet>(&self, inputs: &[J]) -> Vec<J> {
        match self {
            Psi::Ones => vec![J::constant(1.0)],
            Psi::HelmholtzInterface => vec![J::constant(1.0), inputs[0].abs_shifted(0.5)],
            Psi::TransmissionCircles { radius_sq } => {
                let mut out = vec![J::constant(1.0)];
                for &(cx, cy) in &CIRCLE_CENTERS {
                    let d2 = inputs[0].shift(-cx).square() + inputs[1].shift(-cy).square();
                    out.push((J::constant(*radius_sq) - d2).lelu());
                }
                out
            }
        }
    }

    /// All `n` factors as jets at the given input.
    pub fn factors<J: InputJet>(&self, n: usize, inputs: &[J]) -> Vec<J> {
        let groups = self.group_factors(inputs);
        let mut out = Vec::with_capacity(n);
        for (size, f) in self.group_sizes(n).into_iter().zip(groups) {
            out.extend(std::iter::repeat_n(f, size));
        }
        out
    }

    /// Whether some factor has a kink at `point`.
    pub fn is_kink(&self, point: &[f64]) -> bool {
        match self {
            Psi::Ones => false,
            Psi::HelmholtzInterface => point[0] == 0.5,
            Psi::TransmissionCircles { radius_sq } => {
                CIRCLE_CENTERS.iter().any(|&(cx, cy)| (point[0] - cx).powi(2) + (point[1] - cy).powi(2) == *radius_sq)
            }
        }
    }
}

/// A jet type that can be seeded from a spatial point.
pub trait InputJet: Jet {
    fn seed(point: &[f64]) -> Vec<Self>;
}

impl InputJet for Jet1 {
    fn seed(point: &[f64]) -> Vec<Self> {
        vec![Jet1::variable(point[0])]
    }
}

impl InputJet for Grad2 {
    fn seed(point: &[f64]) -> Vec<Self> {
        vec![Grad2::x(point[0]), Grad2::y(point[1])]
    }
}

/// Layer sizes and output transformation of a basis network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub input_dim: usize,
    /// `N_1..N_K`; the last entry is the number of basis functions.
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    pub cutoff: Cutoff,
    pub psi: Psi,
}

impl ArchitectureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.input_dim) {
            return Err(Error::InvalidSpec(format!("input_dim {} not in {{1, 2}}", self.input_dim)));
        }
        if self.layer_widths.is_empty() {
            return Err(Error::InvalidSpec("no layers".into()));
        }
        if self.layer_widths.contains(&0) {
            return Err(Error::InvalidSpec(format!("zero width in {:?}", self.layer_widths)));
        }
        for (what, dim) in [("cutoff", self.cutoff.input_dim()), ("psi", self.psi.input_dim())] {
            if let Some(d) = dim {
                if d != self.input_dim {
                    return Err(Error::InvalidSpec(format!(
                        "{what} expects input_dim {d}, spec has {}",
                        self.input_dim
                    )));
                }
            }
        }
        if let Psi::TransmissionCircles { radius_sq } = self.psi {
            if !(radius_sq > 0.0 && radius_sq.is_finite()) {
                return Err(Error::InvalidSpec(format!("psi radius_sq {radius_sq}")));
            }
        }
        Ok(())
    }

    pub fn num_basis(&self) -> usize {
        *self.layer_widths.last().unwrap_or(&0)
    }

    /// `Σ_k (N_k·N_{k−1} + N_k)`.
    pub fn num_params(&self) -> usize {
        let mut prev = self.input_dim;
        let mut total = 0;
        for &w in &self.layer_widths {
            total += w * prev + w;
            prev = w;
        }
        total
    }

    fn layers(&self) -> Vec<LayerShape> {
        let mut prev = self.input_dim;
        let mut offset = 0;
        self.layer_widths
            .iter()
            .map(|&w| {
                let shape = LayerShape { rows: w, cols: prev, offset };
                offset += w * prev + w;
                prev = w;
                shape
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct LayerShape {
    rows: usize,
    cols: usize,
    /// Start of the row-major weight block; biases follow it.
    offset: usize,
}

impl LayerShape {
    fn bias_offset(&self) -> usize {
        self.offset + self.rows * self.cols
    }
}

/// Flat trainable parameters with their architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParameters {
    spec: ArchitectureSpec,
    seed: u64,
    flat: Vec<f64>,
}

/// Glorot-uniform weights, zero biases, drawn from the `Init` stream of `seed`.
pub fn init_params(spec: ArchitectureSpec, seed: u64) -> Result<NetworkParameters> {
    spec.validate()?;
    let mut rng = stream_rng(seed, Stream::Init);
    let mut flat = vec![0.0; spec.num_params()];
    for layer in spec.layers() {
        let bound = (6.0 / (layer.cols + layer.rows) as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        for w in &mut flat[layer.offset..layer.bias_offset()] {
            *w = dist.sample(&mut rng);
        }
    }
    Ok(NetworkParameters { spec, seed, flat })
}

impl NetworkParameters {
    /// Rebuilds parameters from a flat vector.
    pub fn from_flat(spec: ArchitectureSpec, seed: u64, flat: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if flat.len() != spec.num_params() {
            return Err(Error::DimensionMismatch(format!(
                "flat length {} but architecture needs {}",
                flat.len(),
                spec.num_params()
            )));
        }
        Ok(Self { spec, seed, flat })
    }

    pub fn spec(&self) -> &ArchitectureSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.flat
    }

    pub fn num_basis(&self) -> usize {
        self.spec.num_basis()
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    /// Forward pass of the raw MLP `ū` on jets, keeping pre-activations
    /// and layer inputs when `tape` is given.
    fn mlp<J: Jet>(&self, inputs: &[J], mut tape: Option<&mut Vec<(Vec<J>, Vec<J>)>>) -> Vec<J> {
        let mut h: Vec<J> = inputs.to_vec();
        for layer in self.spec.layers() {
            let w = &self.flat[layer.offset..layer.bias_offset()];
            let b = &self.flat[layer.bias_offset()..layer.bias_offset() + layer.rows];
            let z: Vec<J> = (0..layer.rows)
                .map(|i| {
                    let row = &w[i * layer.cols..(i + 1) * layer.cols];
                    let mut acc = J::constant(b[i]);
                    for (a, hj) in row.iter().zip(&h) {
                        acc += *hj * *a;
                    }
                    acc
                })
                .collect();
            let out = z.iter().map(|zi| zi.sigmoid()).collect();
            if let Some(t) = tape.as_deref_mut() {
                t.push((h, z));
            }
            h = out;
        }
        h
    }

    /// Per-output product `φ · ψ_n`, constant with respect to the parameters.
    fn output_factors<J: InputJet>(&self, inputs: &[J]) -> Vec<J> {
        let phi = self.spec.cutoff.eval(inputs);
        self.spec.psi.factors(self.num_basis(), inputs).into_iter().map(|psi| phi * psi).collect()
    }

    /// Jets of all basis functions `u_n` at `point`.
    pub fn basis_jets<J: InputJet>(&self, point: &[f64]) -> Vec<J> {
        let inputs = J::seed(point);
        let raw = self.mlp(&inputs, None);
        self.output_factors(&inputs).into_iter().zip(raw).map(|(g, u)| g * u).collect()
    }

    /// Accumulates into `grad` the parameter gradient of `Σ_n <bar_n, u_n(point)>`,
    /// where `bar_n` is the adjoint of the jet of basis function `n`.
    pub fn backprop_point<J: InputJet>(&self, point: &[f64], bar: &[J], grad: &mut [f64]) {
        debug_assert_eq!(bar.len(), self.num_basis());
        debug_assert_eq!(grad.len(), self.flat.len());
        let inputs = J::seed(point);
        let mut tape = Vec::with_capacity(self.spec.layer_widths.len());
        self.mlp(&inputs, Some(&mut tape));
        let mut bar_h: Vec<J> = self.output_factors(&inputs).iter().zip(bar).map(|(g, b)| g.mul_pullback(*b)).collect();
        let layers = self.spec.layers();
        for (k, (layer, (h_in, z))) in layers.iter().zip(tape.iter()).enumerate().rev() {
            let bar_z: Vec<J> = z
                .iter()
                .zip(&bar_h)
                .map(|(zi, bh)| {
                    let (_, d1, d2, d3) = crate::jets::sigmoid_derivatives(zi.value());
                    zi.apply_pullback(d1, d2, d3, *bh)
                })
                .collect();
            let w_off = layer.offset;
            let b_off = layer.bias_offset();
            for (i, bz) in bar_z.iter().enumerate() {
                grad[b_off + i] += bz.value();
                let row = &mut grad[w_off + i * layer.cols..w_off + (i + 1) * layer.cols];
                for (g, hj) in row.iter_mut().zip(h_in) {
                    *g += bz.dot(hj);
                }
            }
            if k > 0 {
                let w = &self.flat[w_off..b_off];
                let mut next = vec![J::zero(); layer.cols];
                for (i, bz) in bar_z.iter().enumerate() {
                    let row = &w[i * layer.cols..(i + 1) * layer.cols];
                    for (nj, a) in next.iter_mut().zip(row) {
                        *nj += *bz * *a;
                    }
                }
                bar_h = next;
            }
        }
    }
}

/// Basis jets at one point.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisJet {
    OneD(Vec<Jet1>),
    TwoD(Vec<Grad2>),
}

impl BasisJet {
    pub fn len(&self) -> usize {
        match self {
            BasisJet::OneD(v) => v.len(),
            BasisJet::TwoD(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channels(&self, n: usize) -> [f64; 3] {
        match self {
            BasisJet::OneD(v) => v[n].channels(),
            BasisJet::TwoD(v) => v[n].channels(),
        }
    }
}

/// Evaluates all basis functions and their spatial jets at `point`.
pub fn forward_basis(params: &NetworkParameters, point: &[f64]) -> Result<JetEval<BasisJet>> {
    if point.len() != params.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "point has {} coordinates, network expects {}",
            point.len(),
            params.input_dim()
        )));
    }
    let jet = match params.input_dim() {
        1 => BasisJet::OneD(params.basis_jets::<Jet1>(point)),
        _ => BasisJet::TwoD(params.basis_jets::<Grad2>(point)),
    };
    Ok(JetEval { jet, non_differentiable: params.spec.psi.is_kink(point) })
}
