//! Parameter records, dimensional constants, scaling exponents, and
//! exponent-regime classification for the two-species degenerate system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold below which `m1 + m2 - m1*m2` is treated as zero and the
/// scaling exponents p, q are undefined.
pub const DEGENERACY_EPS: f64 = 1e-14;

/// Default relative tolerance for regime-boundary classification.
pub const DEFAULT_REGIME_TOL: f64 = 1e-10;

/// Surface area of the unit sphere S^{d-1} in R^d.
///
/// 2 pi^{d/2} / Gamma(d/2), evaluated with the exact integer / half-integer
/// Gamma recurrences.
pub fn unit_sphere_area(d: u32) -> f64 {
    let pi = std::f64::consts::PI;
    // Gamma(d/2)
    let gamma_half_d = if d % 2 == 0 {
        // Gamma(k) = (k-1)!
        let k = d / 2;
        (1..k).fold(1.0f64, |acc, i| acc * i as f64)
    } else {
        // Gamma(n + 1/2) = (2n-1)!! / 2^n * sqrt(pi)
        let n = d / 2;
        let double_fact = (0..n).fold(1.0f64, |acc, i| acc * (2 * i + 1) as f64);
        double_fact / 2f64.powi(n as i32) * pi.sqrt()
    };
    2.0 * pi.powf(d as f64 / 2.0) / gamma_half_d
}

/// Dimension, diffusion exponents, and every derived dimensional constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub d: u32,
    pub m1: f64,
    pub m2: f64,
    /// m* = 2 - 2/d, the exponent at which diffusion and attraction balance.
    pub m_star: f64,
    /// m_lower = 2d/(d+2).
    pub m_lower: f64,
    /// Surface area of S^{d-1}.
    pub sigma: f64,
    /// Newtonian normalization, 1/((d-2) sigma), so that
    /// -Laplace(c_d |x|^{2-d} * u) = u holds exactly. Overridable.
    pub c_d: f64,
}

impl Parameters {
    pub fn new(d: u32, m1: f64, m2: f64) -> Result<Self> {
        if d < 3 {
            return Err(Error::InvalidParameters(format!("d = {d} must be >= 3")));
        }
        if !(m1 > 1.0) || !(m2 > 1.0) || !m1.is_finite() || !m2.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "diffusion exponents must be finite and > 1, got m1 = {m1}, m2 = {m2}"
            )));
        }
        let sigma = unit_sphere_area(d);
        Ok(Parameters {
            d,
            m1,
            m2,
            m_star: 2.0 - 2.0 / d as f64,
            m_lower: 2.0 * d as f64 / (d as f64 + 2.0),
            sigma,
            c_d: 1.0 / ((d as f64 - 2.0) * sigma),
        })
    }

    /// Same parameters with a user-supplied Newtonian normalization.
    pub fn with_c_d(mut self, c_d: f64) -> Self {
        self.c_d = c_d;
        self
    }

    pub fn dim(&self) -> f64 {
        self.d as f64
    }

    /// m1 + m2 - m1*m2; p and q are undefined when this vanishes.
    pub fn exponent_gap(&self) -> f64 {
        self.m1 + self.m2 - self.m1 * self.m2
    }

    /// Swap the two species.
    pub fn swapped(&self) -> Self {
        let mut p = *self;
        std::mem::swap(&mut p.m1, &mut p.m2);
        p
    }
}

/// The mass-invariant scaling exponents p, q and the L3 exponent r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingExponents {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

pub fn scaling_exponents(params: &Parameters) -> Result<ScalingExponents> {
    let gap = params.exponent_gap();
    if gap.abs() < DEGENERACY_EPS {
        return Err(Error::DegenerateExponents(gap.abs()));
    }
    let d = params.dim();
    Ok(ScalingExponents {
        p: d * gap / (2.0 * params.m2),
        q: d * gap / (2.0 * params.m1),
        r: (1.0 + 2.0 / d) * params.m1 * params.m2 / (params.m1 + params.m2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeLabel {
    /// p < 1 or q < 1: diffusion dominates, solutions are global.
    Subcritical,
    /// On line L1 (q = 1, m1 in [m*, d/2), m2 in (1, m*]).
    CriticalL1,
    /// On line L2 (p = 1, m1 in (1, m*], m2 in [m*, d/2)).
    CriticalL2,
    /// The intersection point (m*, m*).
    Intersection,
    /// Interior of the region bounded by L1, L2, L3 (p >= 1, q >= 1, r > 1).
    RegionOneSix,
    /// p > 1 and q > 1 with r <= 1: beyond L3.
    Supercritical,
}

/// Classification together with the raw exponents that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub label: RegimeLabel,
    pub exponents: ScalingExponents,
}

/// Classify (m1, m2) against the lines L1, L2, L3 with relative tolerance
/// `tol` at the boundaries. Points on a line equation but outside the
/// segment ranges are not labelled critical.
pub fn classify_regime(params: &Parameters, tol: f64) -> Result<Regime> {
    let exps = scaling_exponents(params)?;
    let ScalingExponents { p, q, r } = exps;
    let d = params.dim();
    let m_star = params.m_star;
    let near = |a: f64, b: f64| (a - b).abs() <= tol * b.abs().max(1.0);

    let label = if near(params.m1, m_star) && near(params.m2, m_star) {
        RegimeLabel::Intersection
    } else if p < 1.0 - tol || q < 1.0 - tol {
        RegimeLabel::Subcritical
    } else if near(q, 1.0)
        && params.m1 >= m_star - tol
        && params.m1 < d / 2.0
        && params.m2 > 1.0
        && params.m2 <= m_star + tol
    {
        RegimeLabel::CriticalL1
    } else if near(p, 1.0)
        && params.m2 >= m_star - tol
        && params.m2 < d / 2.0
        && params.m1 > 1.0
        && params.m1 <= m_star + tol
    {
        RegimeLabel::CriticalL2
    } else if r > 1.0 + tol {
        RegimeLabel::RegionOneSix
    } else if near(r, 1.0) {
        // On L3 itself; the region (1.6) excludes it.
        RegimeLabel::Supercritical
    } else {
        RegimeLabel::Supercritical
    };
    Ok(Regime { label, exponents: exps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(d: u32, m1: f64, m2: f64) -> Parameters {
        Parameters::new(d, m1, m2).unwrap()
    }

    #[test]
    fn dimensional_constants() {
        for d in 3..=6 {
            let p = params(d, 1.5, 1.5);
            assert!(p.m_lower < p.m_star && p.m_star < d as f64 / 2.0);
            assert_relative_eq!(p.c_d * (d as f64 - 2.0) * p.sigma, 1.0, max_relative = 1e-14);
        }
        // S^2 has area 4 pi, S^3 has area 2 pi^2.
        assert_relative_eq!(unit_sphere_area(3), 4.0 * std::f64::consts::PI, max_relative = 1e-14);
        assert_relative_eq!(
            unit_sphere_area(4),
            2.0 * std::f64::consts::PI.powi(2),
            max_relative = 1e-14
        );
    }

    #[test]
    fn exponents_at_intersection() {
        let p = params(3, 4.0 / 3.0, 4.0 / 3.0);
        let e = scaling_exponents(&p).unwrap();
        assert_relative_eq!(e.p, 1.0, max_relative = 1e-12);
        assert_relative_eq!(e.q, 1.0, max_relative = 1e-12);
        assert_relative_eq!(e.r, 10.0 / 9.0, max_relative = 1e-12);
    }

    #[test]
    fn exponents_hand_values() {
        let e = scaling_exponents(&params(3, 1.5, 1.5)).unwrap();
        assert_relative_eq!(e.p, 0.75, max_relative = 1e-12);
        assert_relative_eq!(e.q, 0.75, max_relative = 1e-12);

        // m2 solved from m1*m2 + 2 m1/d = m1 + m2 at m1 = 1.4, d = 3.
        let e = scaling_exponents(&params(3, 1.4, 7.0 / 6.0)).unwrap();
        assert_relative_eq!(e.q, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_exponents_rejected() {
        // m1 + m2 = m1*m2 at m1 = m2 = 2.
        let p = params(5, 2.0, 2.0);
        assert!(matches!(
            scaling_exponents(&p),
            Err(Error::DegenerateExponents(_))
        ));
    }

    #[test]
    fn regime_labels() {
        let tol = DEFAULT_REGIME_TOL;
        let label = |d, m1, m2| classify_regime(&params(d, m1, m2), tol).unwrap().label;
        assert_eq!(label(3, 4.0 / 3.0, 4.0 / 3.0), RegimeLabel::Intersection);
        assert_eq!(label(3, 1.5, 1.5), RegimeLabel::Subcritical);
        assert_eq!(label(3, 1.1, 1.1), RegimeLabel::Supercritical);
        assert_eq!(label(3, 1.4, 7.0 / 6.0), RegimeLabel::CriticalL1);
        assert_eq!(label(3, 7.0 / 6.0, 1.4), RegimeLabel::CriticalL2);
        // Strict interior of region (1.6): between the critical lines and L3.
        assert_eq!(label(3, 1.31, 1.2), RegimeLabel::RegionOneSix);
    }

    #[test]
    fn swap_symmetry() {
        let p = params(3, 1.42, 1.19);
        let e = scaling_exponents(&p).unwrap();
        let es = scaling_exponents(&p.swapped()).unwrap();
        assert_relative_eq!(e.p, es.q, max_relative = 1e-14);
        assert_relative_eq!(e.q, es.p, max_relative = 1e-14);
        assert_relative_eq!(e.r, es.r, max_relative = 1e-14);

        let l = classify_regime(&p, DEFAULT_REGIME_TOL).unwrap().label;
        let ls = classify_regime(&p.swapped(), DEFAULT_REGIME_TOL).unwrap().label;
        let mirrored = match l {
            RegimeLabel::CriticalL1 => RegimeLabel::CriticalL2,
            RegimeLabel::CriticalL2 => RegimeLabel::CriticalL1,
            other => other,
        };
        assert_eq!(ls, mirrored);
    }

    #[test]
    fn classification_stable_away_from_boundaries() {
        let tol = 1e-6;
        for &(m1, m2) in &[(1.5, 1.5), (1.31, 1.2), (1.1, 1.1)] {
            let base = classify_regime(&params(3, m1, m2), tol).unwrap().label;
            for &eps in &[-tol / 10.0, tol / 10.0] {
                let l = classify_regime(&params(3, m1 + eps, m2 - eps), tol).unwrap().label;
                assert_eq!(l, base);
            }
        }
    }
}
