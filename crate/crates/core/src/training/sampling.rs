use rand::Rng;

use crate::problems::{ParameterPoint, ProblemDefinition};

/// `count` i.i.d. draws from the problem's parameter distribution.
pub fn sample_parameters<R: Rng + ?Sized>(
    problem: &ProblemDefinition,
    count: usize,
    rng: &mut R,
) -> Vec<ParameterPoint> {
    (0..count)
        .map(|_| {
            problem
                .params
                .iter()
                .map(|c| loop {
                    if let Some(v) = c.from_unit(rng.gen::<f64>()) {
                        break v;
                    }
                })
                .collect()
        })
        .collect()
}
