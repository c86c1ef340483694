//! Shared fixtures for the kernel benchmarks.

use std::sync::Arc;

use critmass_core::{Parameters, RadialDensity, RadialGrid};

pub fn params() -> Parameters {
    Parameters::new(3, 4.0 / 3.0, 4.0 / 3.0).expect("balanced pair is valid")
}

pub fn grid(n: usize) -> Arc<RadialGrid> {
    RadialGrid::new(&params(), n, 4.0).expect("grid parameters are valid")
}

/// Gaussian profile with the tail well inside the domain.
pub fn gaussian(grid: &Arc<RadialGrid>, mass: f64, sigma: f64) -> RadialDensity {
    let s2 = 2.0 * sigma * sigma;
    let mut u = RadialDensity::from_fn(Arc::clone(grid), move |r| (-r * r / s2).exp());
    u.renormalize_mass(mass).expect("gaussian has positive mass");
    u
}
