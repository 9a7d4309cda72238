//! Least-squares basis networks for linear parametric PDEs.
//!
//! A network produces a parameter-independent basis `u_n(x)`; for each
//! parameter the coefficients are the least-squares solution of a discretized
//! residual, and the network is trained on the mean residual over parameters.

// Negated comparisons are how NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod checkpoint;
pub mod error;
pub mod jets;
pub mod lstsq;
pub mod network;
pub mod problems;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod testbasis;
pub mod training;

pub use assembly::{
    assemble_dfr, assemble_pinn, batch_loss, evaluate_solution, AffineSystem, Basis, BatchLoss, Discretization, Scheme,
};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use error::{Error, Result};
pub use lstsq::{solve_ls, ResidualSystem, Ridge, SolveResult};
pub use network::{forward_basis, init_params, ArchitectureSpec, NetworkParameters};
pub use problems::{measure_many, problem_by_name, ErrorReport, ParameterPoint, ProblemDefinition, ProblemKind};
pub use quadrature::{midpoint_1d, midpoint_2d, Domain, QuadratureRule};
pub use scalar::Scalar;
pub use testbasis::{cosine_basis_1d, sine_basis_2d, TestFunction};
pub use training::{
    loss_and_grad, lr_at, sample_parameters, train, train_with_observer, HistoryRow, LearningRateSchedule,
    TrainingConfig, TrainingOutcome, ValidationConfig,
};
