//! Shared fixtures for the criterion benchmarks.

use maskforge_core::field::ComplexField;
use maskforge_core::images;
use maskforge_core::mask_design::{DesignConfig, SpectralFilter};
use std::f64::consts::PI;

/// Design configuration scaled down to a benchmark-friendly side length.
pub fn bench_design(n: usize) -> DesignConfig {
    DesignConfig {
        n,
        filter: SpectralFilter::new(PI / 5.0, PI / 3.0).unwrap(),
        ..DesignConfig::default_design()
    }
}

/// Standard benchmark object.
pub fn bench_object(n: usize) -> ComplexField {
    images::rings_phase(n)
}
