//! Initial-data constructors: standard families (Gaussian, uniform ball,
//! porous-medium self-similar profile) and the negative-energy pair built by
//! rescaling a variational extremal.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::criteria::sigma_mass;
use crate::error::{Error, Result};
use crate::model::Parameters;
use crate::radial::{free_energy, RadialDensity, RadialGrid};
use crate::variational::MaximizerResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DataFamily {
    Gaussian { sigma: f64 },
    Ball { radius: f64 },
    Barenblatt { m: f64, t0: f64 },
    /// lambda h(mu x) with lambda = mass ||h||_1^{-1} mu^d, h a supplied
    /// base profile (typically a variational extremal).
    RescaledMaximizer { mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    #[serde(flatten)]
    pub family: DataFamily,
    pub mass: f64,
}

/// Fraction of mass allowed outside r_max/2 for unbounded-support families.
const LEAK_TOL: f64 = 1e-12;

/// Build a profile with exact mass `spec.mass`. `base` supplies the profile
/// for `RescaledMaximizer` and is ignored otherwise.
pub fn make(
    spec: &DataSpec,
    grid: &Arc<RadialGrid>,
    base: Option<&RadialDensity>,
) -> Result<RadialDensity> {
    if !(spec.mass > 0.0) || !spec.mass.is_finite() {
        return Err(Error::InvalidParameters(format!(
            "mass = {} must be positive",
            spec.mass
        )));
    }
    let half = grid.r_max() / 2.0;
    let mut u = match spec.family {
        DataFamily::Gaussian { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::InvalidParameters(format!("sigma = {sigma} must be positive")));
            }
            let u = RadialDensity::from_fn(Arc::clone(grid), |r| {
                (-r * r / (2.0 * sigma * sigma)).exp()
            });
            let outside = u.mass_beyond(half);
            if outside > LEAK_TOL * u.mass() {
                return Err(Error::SupportTooLarge(format!(
                    "gaussian with sigma = {sigma} leaks {:.3e} of its mass beyond r_max/2 = {half}",
                    outside / u.mass()
                )));
            }
            u
        }
        DataFamily::Ball { radius } => {
            if !(radius > 0.0) {
                return Err(Error::InvalidParameters(format!("radius = {radius} must be positive")));
            }
            if radius > half {
                return Err(Error::SupportTooLarge(format!(
                    "ball radius {radius} exceeds r_max/2 = {half}"
                )));
            }
            RadialDensity::from_fn(Arc::clone(grid), move |r| if r < radius { 1.0 } else { 0.0 })
        }
        DataFamily::Barenblatt { m, t0 } => {
            let u = barenblatt_profile(grid, m, t0, spec.mass)?;
            let edge = barenblatt_support_radius(grid, m, t0, spec.mass)?;
            if edge > half {
                return Err(Error::SupportTooLarge(format!(
                    "self-similar support radius {edge} exceeds r_max/2 = {half}"
                )));
            }
            u
        }
        DataFamily::RescaledMaximizer { mu } => {
            let h = base.ok_or_else(|| {
                Error::InvalidSpec("rescaled-maximizer data needs a base profile".into())
            })?;
            if !(mu > 0.0) {
                return Err(Error::InvalidParameters(format!("mu = {mu} must be positive")));
            }
            let h_mass = h.mass();
            if h_mass == 0.0 {
                return Err(Error::ZeroProfile);
            }
            let support = support_radius(h);
            if support / mu > half {
                return Err(Error::SupportTooLarge(format!(
                    "rescaled support {} exceeds r_max/2 = {half}",
                    support / mu
                )));
            }
            let d = grid.d as f64;
            let lam = spec.mass / h_mass * mu.powf(d);
            let src = Arc::clone(&h.grid);
            let vals = h.values.clone();
            RadialDensity::from_fn(Arc::clone(grid), move |r| {
                let idx = (mu * r / src.dr) as usize;
                if idx < src.n { lam * vals[idx] } else { 0.0 }
            })
        }
    };
    u.renormalize_mass(spec.mass)?;
    Ok(u)
}

/// Largest cell-center radius carrying a positive value.
pub fn support_radius(h: &RadialDensity) -> f64 {
    h.values
        .iter()
        .zip(h.grid.centers())
        .filter(|(v, _)| **v > 0.0)
        .map(|(_, r)| *r)
        .fold(0.0, f64::max)
}

/// Self-similar spreading solution of dU/dt = Laplace(U^m):
/// U(r, t) = t^{-a} (C - k r^2 t^{-2a/d})_+^{1/(m-1)} with
/// a = d/(d(m-1)+2), k = a(m-1)/(2 d m), and C fixed by the mass.
pub fn barenblatt_profile(
    grid: &Arc<RadialGrid>,
    m: f64,
    t: f64,
    mass: f64,
) -> Result<RadialDensity> {
    let (a, k, c) = barenblatt_constants(grid, m, t, mass)?;
    let d = grid.d as f64;
    let ta = t.powf(-a);
    let tb = t.powf(-2.0 * a / d);
    let expo = 1.0 / (m - 1.0);
    Ok(RadialDensity::from_fn(Arc::clone(grid), move |r| {
        ta * (c - k * r * r * tb).max(0.0).powf(expo)
    }))
}

/// Support radius of the self-similar profile at time t.
pub fn barenblatt_support_radius(
    grid: &Arc<RadialGrid>,
    m: f64,
    t: f64,
    mass: f64,
) -> Result<f64> {
    let (a, k, c) = barenblatt_constants(grid, m, t, mass)?;
    Ok((c / k).sqrt() * t.powf(a / grid.d as f64))
}

fn barenblatt_constants(grid: &RadialGrid, m: f64, t: f64, mass: f64) -> Result<(f64, f64, f64)> {
    if !(m > 1.0) {
        return Err(Error::InvalidParameters(format!("diffusion exponent m = {m} must exceed 1")));
    }
    if !(t > 0.0) || !(mass > 0.0) {
        return Err(Error::InvalidParameters(format!(
            "self-similar profile needs t > 0 and mass > 0, got ({t}, {mass})"
        )));
    }
    let d = grid.d as f64;
    let a = d / (d * (m - 1.0) + 2.0);
    let k = a * (m - 1.0) / (2.0 * d * m);
    // mass = sigma (C/k)^{d/2} C^{1/(m-1)} J with
    // J = int_0^1 (1 - z^2)^{1/(m-1)} z^{d-1} dz, so C has a closed form.
    let expo = 1.0 / (m - 1.0);
    let nq = 4000;
    let mut j = 0.0;
    for i in 0..nq {
        let z = (i as f64 + 0.5) / nq as f64;
        j += (1.0 - z * z).powf(expo) * z.powf(d - 1.0);
    }
    j /= nq as f64;
    let c = (mass * k.powf(d / 2.0) / (grid.sigma * j)).powf(1.0 / (expo + d / 2.0));
    Ok((a, k, c))
}

/// Rescale a variational extremal pair into initial data with the given
/// masses and strictly negative free energy; only admissible when the
/// supplied constant puts the masses above the dichotomy threshold.
pub fn negative_energy_pair(
    mass1: f64,
    mass2: f64,
    maximizer: &MaximizerResult,
    mu: f64,
    grid: &Arc<RadialGrid>,
    params: &Parameters,
) -> Result<(RadialDensity, RadialDensity, f64)> {
    let sigma = sigma_mass(mass1, mass2, maximizer.constant, params)?;
    if sigma <= 1.0 {
        return Err(Error::SubcriticalMasses(sigma));
    }
    let u1 = make(
        &DataSpec { family: DataFamily::RescaledMaximizer { mu }, mass: mass1 },
        grid,
        Some(&maximizer.h1),
    )?;
    let u2 = make(
        &DataSpec { family: DataFamily::RescaledMaximizer { mu }, mass: mass2 },
        grid,
        Some(&maximizer.h2),
    )?;
    let f0 = free_energy(&u1, &u2, params)?.free_energy;
    if f0 >= 0.0 {
        return Err(Error::InvalidParameters(format!(
            "rescaled pair has free energy {f0} >= 0; the extremal estimate is too coarse for \
             these masses"
        )));
    }
    Ok((u1, u2, f0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::second_moment;
    use crate::variational::{maximize, MaximizeOpts, ObjectiveSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn params() -> Parameters {
        Parameters::new(3, 4.0 / 3.0, 4.0 / 3.0).unwrap()
    }

    fn grid(n: usize, r_max: f64) -> Arc<RadialGrid> {
        RadialGrid::new(&params(), n, r_max).unwrap()
    }

    #[test]
    fn ball_has_uniform_density() {
        let g = grid(512, 4.0);
        let spec = DataSpec { family: DataFamily::Ball { radius: 1.0 }, mass: 1.0 };
        let u = make(&spec, &g, None).unwrap();
        assert_relative_eq!(u.mass(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(u.values[0], 3.0 / (4.0 * PI), max_relative = 0.03);
    }

    #[test]
    fn gaussian_second_moment_identity() {
        // The half-domain leak check needs r_max/2 well past 7 sigma.
        let g = grid(512, 8.0);
        let spec = DataSpec { family: DataFamily::Gaussian { sigma: 0.5 }, mass: 2.0 };
        let u = make(&spec, &g, None).unwrap();
        assert_relative_eq!(u.mass(), 2.0, max_relative = 1e-12);
        let z = RadialDensity::zero(Arc::clone(&g));
        // d sigma^2 M = 3 * 0.25 * 2.
        assert_relative_eq!(second_moment(&u, &z).unwrap(), 1.5, max_relative = 1e-3);
    }

    #[test]
    fn oversized_supports_rejected() {
        let g = grid(64, 2.0);
        let ball = DataSpec { family: DataFamily::Ball { radius: 1.5 }, mass: 1.0 };
        assert!(matches!(make(&ball, &g, None), Err(Error::SupportTooLarge(_))));
        let wide = DataSpec { family: DataFamily::Gaussian { sigma: 0.6 }, mass: 1.0 };
        assert!(matches!(make(&wide, &g, None), Err(Error::SupportTooLarge(_))));
    }

    #[test]
    fn self_similar_profile_mass_and_support() {
        // Unit mass at t = 1, m = 4/3 spreads to radius ~3.03.
        let g = grid(256, 8.0);
        let m = 4.0 / 3.0;
        let u = barenblatt_profile(&g, m, 1.0, 1.0).unwrap();
        assert_relative_eq!(u.mass(), 1.0, max_relative = 1e-3);
        let edge = barenblatt_support_radius(&g, m, 1.0, 1.0).unwrap();
        assert!(edge < g.r_max() / 2.0);
        assert!(support_radius(&u) <= edge + g.dr);
    }

    #[test]
    fn rescaled_profile_scaling_laws() {
        let g = grid(256, 4.0);
        let h = make(
            &DataSpec { family: DataFamily::Ball { radius: 1.0 }, mass: 1.0 },
            &g,
            None,
        )
        .unwrap();
        let ms = params().m_star;
        let mu = 2.0;
        let spec = DataSpec { family: DataFamily::RescaledMaximizer { mu }, mass: 1.0 };
        let u = make(&spec, &g, Some(&h)).unwrap();
        assert_relative_eq!(u.mass(), 1.0, max_relative = 1e-12);
        // ||lambda h(mu .)||_m^m = lambda^m mu^{-d} ||h||_m^m with
        // lambda = mass ||h||_1^{-1} mu^d.
        let lam = mu.powf(3.0);
        let expected = lam.powf(ms) * mu.powf(-3.0) * h.lp_norm_pow(ms);
        assert_relative_eq!(u.lp_norm_pow(ms), expected, max_relative = 0.02);
        // Support shrinks by mu.
        assert_relative_eq!(support_radius(&u), support_radius(&h) / mu, epsilon = 2.0 * g.dr);
    }

    #[test]
    fn missing_base_profile_is_an_error() {
        let g = grid(64, 2.0);
        let spec = DataSpec { family: DataFamily::RescaledMaximizer { mu: 1.0 }, mass: 1.0 };
        assert!(matches!(make(&spec, &g, None), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn negative_energy_pair_behaves_per_mass_threshold() {
        let p = params();
        let spec = ObjectiveSpec::c_star(p).unwrap();
        let mg = grid(256, 8.0);
        let res = maximize(&spec, &MaximizeOpts::new(mg)).unwrap();
        assert!(res.converged);
        let m_crit = crate::criteria::critical_mass_symmetric(res.constant, &p).unwrap();

        // Grid sized to hold the rescaled support.
        let sup = support_radius(&res.h1);
        let g = RadialGrid::new(&p, 512, 2.5 * sup).unwrap();

        // Supercritical masses: sigma = 1.5^{2/d} ... choose masses giving
        // sigma = 1.5 via the M^{2/d} scaling.
        let m_super = m_crit * 1.5f64.powf(p.dim() / 2.0);
        let (u1, u2, f0) = negative_energy_pair(m_super, m_super, &res, 1.0, &g, &p).unwrap();
        assert!(f0 < 0.0, "free energy {f0}");
        assert_relative_eq!(u1.mass(), m_super, max_relative = 1e-12);
        assert_relative_eq!(u2.mass(), m_super, max_relative = 1e-12);

        // The free energy scales as mu^{d-2}.
        let (_, _, f0_mu2) = negative_energy_pair(m_super, m_super, &res, 2.0, &g, &p).unwrap();
        assert_relative_eq!(f0_mu2 / f0, 2.0, max_relative = 0.02);

        // Subcritical masses are refused.
        let m_sub = m_crit * 0.9f64.powf(p.dim() / 2.0);
        assert!(matches!(
            negative_energy_pair(m_sub, m_sub, &res, 1.0, &g, &p),
            Err(Error::SubcriticalMasses(_))
        ));
    }
}
