//! Shared fixtures for the criterion benchmarks in `benches/`.

use ptm_core::{PointConfiguration, TransportMap, UlcMeasure};

/// Named targets of increasing support size.
pub fn targets() -> Vec<(&'static str, UlcMeasure)> {
    vec![
        ("bernoulli", UlcMeasure::bernoulli(0.5, 1.0).unwrap()),
        ("binomial-3", UlcMeasure::binomial(3, 0.5, 1.0).unwrap()),
        ("binomial-10", UlcMeasure::binomial(10, 0.4, 2.0).unwrap()),
        ("poisson-1", UlcMeasure::poisson(1.0).unwrap()),
    ]
}

/// A configuration with roughly `T·M` atoms for `map`.
pub fn configuration(map: &TransportMap, seed: u64) -> PointConfiguration {
    ptm_core::transport::sample_configuration(map.horizon(), map.height(), &mut ptm_core::rng::master(seed))
}
