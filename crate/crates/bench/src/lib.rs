//! Fixtures shared by the benchmarks.

use lsnet_core::rng::{stream_rng, Stream};
use lsnet_core::{
    init_params, problem_by_name, sample_parameters, Discretization, NetworkParameters, ProblemDefinition, Scheme,
};

/// A benchmark problem with an initialized network, a scheme and a batch.
pub struct Fixture {
    pub problem: ProblemDefinition,
    pub params: NetworkParameters,
    pub scheme: Scheme,
    pub batch: Vec<Vec<f64>>,
}

pub fn fixture(problem: &str, widths: &[usize], discretization: Discretization, batch: usize) -> Fixture {
    let problem = problem_by_name(problem).expect("known problem");
    let params = init_params(problem.architecture(Some(widths.to_vec())), 1).expect("valid architecture");
    let scheme = Scheme::new(&problem, &discretization).expect("valid discretization");
    let batch = sample_parameters(&problem, batch, &mut stream_rng(1, Stream::Train));
    Fixture { problem, params, scheme, batch }
}

/// The desk-scale oscillator setup: widths (5, 5, 40), 250 nodes, batch 100.
pub fn oscillator_desk() -> Fixture {
    fixture("oscillator", &[5, 5, 40], Discretization::Pinn { nodes: 250 }, 100)
}

/// The desk-scale transmission setup: widths (20, 20), 15×15 tests on 60×60 nodes, batch 8.
pub fn transmission_desk() -> Fixture {
    fixture("transmission2d", &[20, 20], Discretization::Dfr2d { tests: [15, 15], nodes: [60, 60] }, 8)
}
