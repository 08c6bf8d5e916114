//! Fixtures shared by the benchmarks.

use doors_core::{Dependency, DoorConfiguration, FundamentalDistribution};

/// `d` geometric doors with success probabilities spread over `[0.2, 0.8]`.
pub fn geometric_doors(d: usize) -> Vec<FundamentalDistribution> {
    (0..d)
        .map(|i| {
            let p = if d == 1 { 0.5 } else { 0.2 + 0.6 * i as f64 / (d - 1) as f64 };
            FundamentalDistribution::geometric(p).unwrap()
        })
        .collect()
}

pub fn config(d: usize, dependency: Dependency) -> DoorConfiguration {
    DoorConfiguration::new(geometric_doors(d), dependency).unwrap()
}

/// Every door waits for door 1.
pub fn star(d: usize) -> Dependency {
    Dependency::Dag((0..d).map(|i| if i == 0 { vec![] } else { vec![1] }).collect())
}
