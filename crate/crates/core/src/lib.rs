//! Numerical laboratory for a two-species chemotaxis system with
//! porous-medium diffusion and mutual Newtonian attraction: radial
//! finite-volume simulation, sharp-constant estimation for the associated
//! interpolation inequalities, and closed-form critical-mass criteria.

pub mod criteria;
pub mod error;
pub mod initdata;
pub mod model;
pub mod radial;
pub mod solver;
pub mod variational;

pub use error::{Error, Result};
pub use model::{
    classify_regime, scaling_exponents, Parameters, Regime, RegimeLabel, ScalingExponents,
};
pub use radial::{
    dissipation, free_energy, interaction_energy, newtonian_potential, second_moment, virial_rate,
    EnergyReport, PotentialProfile, RadialDensity, RadialGrid,
};
