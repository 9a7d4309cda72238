//! The three benchmark problems: a damped oscillator, a 1D Helmholtz equation
//! with impedance boundary and a discontinuous coefficient, and a 2D
//! transmission problem with four circular inclusions.
//!
//! Every operator is affine in a short coefficient vector `θ(p)`:
//! `B^p = Σ_k θ_k(p) B_k` with parameter-independent blocks `B_k`, one per
//! [`Term`]. The right-hand side is `l^p = s − Σ_k θ_k(p) L_k`, where `s`
//! pairs the load with the residual rows and `L_k` is term `k` applied to the
//! lift.

pub mod helmholtz;
pub mod metrics;
pub mod oscillator;
pub mod transmission;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Activation, ArchitectureSpec, Cutoff, Psi, CIRCLE_CENTERS, CIRCLE_PSI_RADIUS_SQ};
use crate::quadrature::Domain;

pub use helmholtz::{helmholtz_exact, helmholtz_exact_alternative, helmholtz_problem};
pub use metrics::{eq31_bounds, error_metrics, measure_many, solve_and_measure, ErrorReport};
pub use oscillator::{oscillator_exact, oscillator_problem};
pub use transmission::{transmission_coefficient, transmission_problem};

/// A parameter value `p`; components are problem-specific.
pub type ParameterPoint = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Oscillator,
    Helmholtz1d,
    Transmission2d,
}

impl ProblemKind {
    pub fn token(self) -> &'static str {
        match self {
            ProblemKind::Oscillator => "oscillator",
            ProblemKind::Helmholtz1d => "helmholtz1d",
            ProblemKind::Transmission2d => "transmission2d",
        }
    }
}

/// Sampling law of one parameter component. `lower_open`/`upper_open`
/// record which range endpoints are excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    Uniform,
    LogUniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamComponent {
    pub name: &'static str,
    pub law: Law,
    pub lo: f64,
    pub hi: f64,
    pub lower_open: bool,
    pub upper_open: bool,
}

impl ParamComponent {
    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lower_open { v > self.lo } else { v >= self.lo };
        let below = if self.upper_open { v < self.hi } else { v <= self.hi };
        above && below
    }

    /// Maps a uniform draw `u ∈ [0, 1)` into the range. Returns `None` when the
    /// draw would land on an excluded endpoint.
    pub fn from_unit(&self, u: f64) -> Option<f64> {
        // Draws anchored at an open lower end are mirrored so the open end is never hit.
        let t = if self.lower_open && !self.upper_open { 1.0 - u } else { u };
        let v = match self.law {
            Law::Uniform => self.lo + t * (self.hi - self.lo),
            Law::LogUniform => (self.lo.ln() + t * (self.hi.ln() - self.lo.ln())).exp(),
        };
        let v = v.clamp(self.lo, self.hi);
        self.contains(v).then_some(v)
    }
}

/// Subset of the domain on which a weak term integrates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    All,
    /// `x < c` in the first coordinate.
    Below(f64),
    /// `x > c` in the first coordinate.
    Above(f64),
    /// Outside every transmission inclusion.
    OutsideCircles,
    /// Inside inclusion `i` (0-based).
    InsideCircle(usize),
}

impl Region {
    pub fn contains(&self, point: &[f64]) -> bool {
        match *self {
            Region::All => true,
            Region::Below(c) => point[0] < c,
            Region::Above(c) => point[0] > c,
            Region::OutsideCircles => transmission::circle_of(point).is_none(),
            Region::InsideCircle(i) => transmission::circle_of(point) == Some(i),
        }
    }
}

/// One affine block of an operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// Strong-form row contribution: the given trial channel at each node.
    Strong { channel: usize },
    /// `∫_region Σ_(a,b) trial[a] · test[b]` over the quadrature nodes.
    Weak { region: Region, pairs: Vec<(usize, usize)> },
    /// Trial value times test value at a point.
    Point { point: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDefinition {
    pub kind: ProblemKind,
    pub domain: Domain,
    /// Interfaces that 1D quadrature must not straddle.
    pub breakpoints: Vec<f64>,
    pub supports_pinn: bool,
    pub supports_dfr: bool,
    pub params: Vec<ParamComponent>,
    /// Whether `θ(p)` has complex entries.
    pub complex: bool,
}

impl ProblemDefinition {
    pub fn name(&self) -> &'static str {
        self.kind.token()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn param_names(&self) -> Vec<&'static str> {
        self.params.iter().map(|c| c.name).collect()
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.params.len() {
            return Err(Error::InvalidParameter {
                param: p.to_vec(),
                reason: format!("{} expects {} components", self.name(), self.params.len()),
            });
        }
        for (c, &v) in self.params.iter().zip(p) {
            if !c.contains(v) {
                return Err(Error::InvalidParameter {
                    param: p.to_vec(),
                    reason: format!("{} = {v} outside [{}, {}]", c.name, c.lo, c.hi),
                });
            }
        }
        Ok(())
    }

    /// Coefficients `θ(p)` of the affine terms.
    pub fn theta(&self, p: &[f64]) -> Vec<Complex64> {
        let r = |x: f64| Complex64::new(x, 0.0);
        match self.kind {
            ProblemKind::Oscillator => vec![r(p[0]), r(1.0), r(p[1])],
            ProblemKind::Helmholtz1d => {
                let (p11, p12, p2) = (p[0], p[1], p[2]);
                vec![
                    r(p11),
                    r(p12),
                    r(-p2 * p2),
                    Complex64::new(0.0, -p2 * p11.sqrt()),
                    Complex64::new(0.0, -p2 * p12.sqrt()),
                ]
            }
            ProblemKind::Transmission2d => std::iter::once(1.0).chain(p.iter().copied()).map(r).collect(),
        }
    }

    /// Strong-form terms, aligned with [`ProblemDefinition::theta`].
    pub fn strong_terms(&self) -> Option<Vec<Term>> {
        match self.kind {
            ProblemKind::Oscillator => {
                Some(vec![Term::Strong { channel: 2 }, Term::Strong { channel: 1 }, Term::Strong { channel: 0 }])
            }
            _ => None,
        }
    }

    /// Weak-form terms, aligned with [`ProblemDefinition::theta`].
    pub fn weak_terms(&self) -> Option<Vec<Term>> {
        match self.kind {
            ProblemKind::Oscillator => None,
            ProblemKind::Helmholtz1d => Some(vec![
                Term::Weak { region: Region::Below(0.5), pairs: vec![(1, 1)] },
                Term::Weak { region: Region::Above(0.5), pairs: vec![(1, 1)] },
                Term::Weak { region: Region::All, pairs: vec![(0, 0)] },
                Term::Point { point: vec![0.0] },
                Term::Point { point: vec![1.0] },
            ]),
            ProblemKind::Transmission2d => {
                let grad = vec![(1, 1), (2, 2)];
                let mut terms = vec![Term::Weak { region: Region::OutsideCircles, pairs: grad.clone() }];
                terms.extend(
                    (0..CIRCLE_CENTERS.len())
                        .map(|i| Term::Weak { region: Region::InsideCircle(i), pairs: grad.clone() }),
                );
                Some(terms)
            }
        }
    }

    /// Channels of the lift; the total solution is network part plus lift.
    pub fn lift(&self, point: &[f64]) -> [f64; 3] {
        match self.kind {
            ProblemKind::Oscillator => [-50.0 * point[0], -50.0, 0.0],
            ProblemKind::Helmholtz1d => [0.0; 3],
            ProblemKind::Transmission2d => transmission::lift(point),
        }
    }

    pub fn has_lift(&self) -> bool {
        self.kind != ProblemKind::Helmholtz1d
    }

    /// Load paired with the value channel of each residual row.
    pub fn load(&self, point: &[f64]) -> f64 {
        match self.kind {
            ProblemKind::Helmholtz1d => -helmholtz::source(point[0]),
            _ => 0.0,
        }
    }

    pub fn has_load(&self) -> bool {
        self.kind == ProblemKind::Helmholtz1d
    }

    /// The architecture used for this benchmark, optionally with other widths.
    pub fn architecture(&self, widths: Option<Vec<usize>>) -> ArchitectureSpec {
        let (input_dim, default, cutoff, psi) = match self.kind {
            ProblemKind::Oscillator => (1, vec![5, 5, 40], Cutoff::TSquared, Psi::Ones),
            ProblemKind::Helmholtz1d => (1, vec![5, 5, 30], Cutoff::One, Psi::HelmholtzInterface),
            ProblemKind::Transmission2d => {
                (2, vec![75; 4], Cutoff::BoxQuadratic, Psi::TransmissionCircles { radius_sq: CIRCLE_PSI_RADIUS_SQ })
            }
        };
        ArchitectureSpec {
            input_dim,
            layer_widths: widths.unwrap_or(default),
            activation: Activation::Sigmoid,
            cutoff,
            psi,
        }
    }
}

/// Looks up a problem by its token.
pub fn problem_by_name(name: &str) -> Result<ProblemDefinition> {
    match name {
        "oscillator" => Ok(oscillator_problem()),
        "helmholtz1d" => Ok(helmholtz_problem()),
        "transmission2d" => Ok(transmission_problem()),
        _ => Err(Error::UnknownToken { kind: "problem", token: name.into() }),
    }
}
