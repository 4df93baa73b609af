//! Standard market instances shared by the criterion benches.

use contest_core::{CostSpec, RewardVector};

/// The running three-creator example: top-2 rewards, unit linear cost.
pub fn top2_of_3() -> RewardVector {
    RewardVector::new(vec![0.5, 0.5, 0.0]).unwrap()
}

pub fn unit_linear() -> CostSpec {
    CostSpec::linear(1.0).unwrap()
}

/// The 30-creator ladder `c_i(q) = i * q^2` from the fee-sweep simulation.
pub fn indexed_quadratics(n: usize) -> Vec<CostSpec> {
    (1..=n)
        .map(|i| CostSpec::scaled_quadratic(i as f64).unwrap())
        .collect()
}
