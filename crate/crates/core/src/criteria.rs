//! Closed-form constants and classification verdicts for the two critical
//! mass theorems: the theta-scanned invariant-norm criterion away from the
//! balanced exponent pair (T12), and the mass-product dichotomy at the
//! balanced pair (T13).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{scaling_exponents, Parameters, ScalingExponents};

/// Default number of theta samples for the T12 scan.
pub const DEFAULT_THETA_SCAN: usize = 101;
/// Default relative tolerance for boundary classification.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-6;

const THETA_SCAN_LO: f64 = 0.005;
const THETA_SCAN_HI: f64 = 0.995;

/// Sharp constant of the weighted Young inequality
/// a^eta b^{1-eta} <= A(theta, eta) [theta a + (1-theta) b].
pub fn young_a(theta: f64, eta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) || !(eta > 0.0 && eta < 1.0) {
        return Err(Error::OutOfRange(format!(
            "young_a needs theta, eta in (0,1), got ({theta}, {eta})"
        )));
    }
    Ok((eta / theta).powf(eta) * ((1.0 - eta) / (1.0 - theta)).powf(1.0 - eta))
}

/// The pair (kappa1, kappa2) balancing the diffusion coefficients against
/// theta; satisfies kappa1 kappa2 = c_d (m1-1) theta kappa1^{m1}
/// = c_d (m2-1)(1-theta) kappa2^{m2}.
pub fn kappas(theta: f64, params: &Parameters) -> Result<(f64, f64)> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::OutOfRange(format!("theta = {theta} must lie in (0,1)")));
    }
    let gap = params.exponent_gap();
    if gap.abs() < crate::model::DEGENERACY_EPS {
        return Err(Error::DegenerateExponents(gap.abs()));
    }
    let a = (params.m1 - 1.0) * theta;
    let b = (params.m2 - 1.0) * (1.0 - theta);
    let k1 = params.c_d.powf(params.m2 / gap)
        * a.powf((params.m2 - 1.0) / gap)
        * b.powf(1.0 / gap);
    let k2 = params.c_d.powf(params.m1 / gap)
        * a.powf(1.0 / gap)
        * b.powf((params.m1 - 1.0) / gap);
    Ok((k1, k2))
}

/// e = (1-alpha)/m1 + (1-beta)/m2; exceeds 1 away from the balanced pair
/// and equals 1 exactly there.
pub fn exponent_sum(alpha: f64, beta: f64, params: &Parameters) -> f64 {
    (1.0 - alpha) / params.m1 + (1.0 - beta) / params.m2
}

fn exponent_sum_checked(alpha: f64, beta: f64, params: &Parameters) -> Result<f64> {
    let e = exponent_sum(alpha, beta, params);
    if e - 1.0 < 1e-12 {
        return Err(Error::IntersectionPoint);
    }
    Ok(e)
}

/// (gamma1, gamma2) = (alpha, beta) / (e - 1).
pub fn gammas(alpha: f64, beta: f64, params: &Parameters) -> Result<(f64, f64)> {
    let e = exponent_sum_checked(alpha, beta, params)?;
    Ok((alpha / (e - 1.0), beta / (e - 1.0)))
}

/// Theta-weighted constant A(theta, eta)^e Lambda*, with
/// eta = ((1-alpha)/m1)/e.
pub fn lambda_theta(
    lambda_star: f64,
    theta: f64,
    alpha: f64,
    beta: f64,
    params: &Parameters,
) -> Result<f64> {
    let e = exponent_sum(alpha, beta, params);
    let eta = (1.0 - alpha) / params.m1 / e;
    Ok(young_a(theta, eta)?.powf(e) * lambda_star)
}

/// The auxiliary concave barrier f(x) = x - lambda_theta x^e together with
/// its maximum point x0 = (1/(e lambda_theta))^{1/(e-1)}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AuxBarrier {
    pub x0: f64,
    pub lambda_theta: f64,
    pub e: f64,
}

impl AuxBarrier {
    pub fn f(&self, x: f64) -> f64 {
        x - self.lambda_theta * x.powf(self.e)
    }

    pub fn f_at_max(&self) -> f64 {
        self.f(self.x0)
    }
}

pub fn x0_and_f(lambda_theta: f64, alpha: f64, beta: f64, params: &Parameters) -> Result<AuxBarrier> {
    let e = exponent_sum_checked(alpha, beta, params)?;
    if !(lambda_theta > 0.0) {
        return Err(Error::OutOfRange(format!(
            "lambda_theta = {lambda_theta} must be positive"
        )));
    }
    let x0 = (1.0 / (e * lambda_theta)).powf(1.0 / (e - 1.0));
    Ok(AuxBarrier { x0, lambda_theta, e })
}

/// Exponent restriction for the blow-up branch of T12:
/// max(m1, m2) <= 2 - 2/d - (d-2)/d (1 - 1/e).
pub fn blowup_exponent_condition(alpha: f64, beta: f64, params: &Parameters) -> bool {
    let e = exponent_sum(alpha, beta, params);
    let d = params.dim();
    let bound = 2.0 - 2.0 / d - (d - 2.0) / d * (1.0 - 1.0 / e);
    // Equal exponents sit exactly on the boundary for every admissible
    // (alpha, beta); leave slack so rounding cannot flip the inclusive case.
    params.m1.max(params.m2) <= bound * (1.0 + 1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Global,
    BlowUp,
    Boundary,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    T12,
    T13,
}

/// All intermediate numbers behind a verdict.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Evidence {
    pub f0: Option<f64>,
    pub f0_bound: Option<f64>,
    pub r_value: Option<f64>,
    pub x0: Option<f64>,
    pub theta: Option<f64>,
    pub sigma: Option<f64>,
    pub identity_residual: Option<f64>,
    pub blowup_condition: Option<bool>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub theorem: Theorem,
    pub evidence: Evidence,
}

/// Initial-data summary consumed by the T12 criterion.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Theorem12Data {
    pub mass1: f64,
    pub mass2: f64,
    /// ||u1^0||_{m1}^{m1}
    pub norm_m1: f64,
    /// ||u2^0||_{m2}^{m2}
    pub norm_m2: f64,
    pub f0: f64,
}

fn check_region(params: &Parameters) -> Result<ScalingExponents> {
    let e = scaling_exponents(params)?;
    let eps = 1e-12;
    if e.p < 1.0 - eps || e.q < 1.0 - eps || e.r <= 1.0 + eps {
        return Err(Error::RegimeMismatch(format!(
            "criterion needs p >= 1, q >= 1, r > 1; got p = {}, q = {}, r = {}",
            e.p, e.q, e.r
        )));
    }
    let ms = params.m_star;
    if (params.m1 - ms).abs() <= eps * ms && (params.m2 - ms).abs() <= eps * ms {
        return Err(Error::RegimeMismatch(
            "criterion is undefined at the balanced exponent pair".into(),
        ));
    }
    Ok(e)
}

/// The invariant-norm combination R at one theta, plus the barrier.
fn r_and_barrier(
    data: &Theorem12Data,
    params: &Parameters,
    alpha: f64,
    beta: f64,
    lambda_star: f64,
    theta: f64,
) -> Result<(f64, AuxBarrier, f64)> {
    let (k1, k2) = kappas(theta, params)?;
    let (g1, g2) = gammas(alpha, beta, params)?;
    let lt = lambda_theta(lambda_star, theta, alpha, beta, params)?;
    let barrier = x0_and_f(lt, alpha, beta, params)?;
    let mass_factor = k1.powf(g1) * k2.powf(g2) * data.mass1.powf(g1) * data.mass2.powf(g2);
    let r = mass_factor
        * (theta * k1.powf(params.m1) * data.norm_m1
            + (1.0 - theta) * k2.powf(params.m2) * data.norm_m2);
    let f0_bound = params.c_d / (k1 * k2 * mass_factor) * barrier.f_at_max();
    Ok((r, barrier, f0_bound))
}

/// Theta-scanned classification away from the balanced exponent pair.
///
/// Global needs one theta with both the free-energy bound and R < x0;
/// blow-up needs one theta with the bound, R > x0, and the exponent
/// restriction. The boundary case R = x0 is theta-independent, so it is
/// declared only when every scanned theta agrees.
pub fn theorem12_verdict(
    data: &Theorem12Data,
    params: &Parameters,
    alpha: f64,
    beta: f64,
    lambda_star: f64,
    theta_scan: usize,
    tol: f64,
) -> Result<Verdict> {
    check_region(params)?;
    crate::variational::check_alpha_beta(params, alpha, beta)?;
    if theta_scan < 2 {
        return Err(Error::OutOfRange(format!(
            "theta scan needs at least 2 points, got {theta_scan}"
        )));
    }
    let identity_residual = critical_identity_residual(
        data.mass1,
        data.mass2,
        data.norm_m1,
        data.norm_m2,
        params,
        alpha,
        beta,
        lambda_star,
    )?;
    let cond_17 = blowup_exponent_condition(alpha, beta, params);

    let mut all_boundary = true;
    let mut global_theta = None;
    let mut blowup_theta = None;
    let mut mid_evidence = None;
    for i in 0..theta_scan {
        let theta =
            THETA_SCAN_LO + (THETA_SCAN_HI - THETA_SCAN_LO) * i as f64 / (theta_scan - 1) as f64;
        let (r, barrier, f0_bound) = r_and_barrier(data, params, alpha, beta, lambda_star, theta)?;
        let on_boundary = (r - barrier.x0).abs() <= tol * barrier.x0;
        all_boundary &= on_boundary;
        let bound_ok = data.f0 < f0_bound;
        if bound_ok && r < barrier.x0 && global_theta.is_none() {
            global_theta = Some((theta, r, barrier.x0, f0_bound));
        }
        if bound_ok && r > barrier.x0 && cond_17 && blowup_theta.is_none() {
            blowup_theta = Some((theta, r, barrier.x0, f0_bound));
        }
        if i == theta_scan / 2 {
            mid_evidence = Some((theta, r, barrier.x0, f0_bound));
        }
    }

    let (outcome, (theta, r, x0, f0_bound)) = if all_boundary {
        (Outcome::Boundary, mid_evidence.expect("scan nonempty"))
    } else if let Some(w) = global_theta {
        (Outcome::Global, w)
    } else if let Some(w) = blowup_theta {
        (Outcome::BlowUp, w)
    } else {
        (Outcome::Indeterminate, mid_evidence.expect("scan nonempty"))
    };

    Ok(Verdict {
        outcome,
        theorem: Theorem::T12,
        evidence: Evidence {
            f0: Some(data.f0),
            f0_bound: Some(f0_bound),
            r_value: Some(r),
            x0: Some(x0),
            theta: Some(theta),
            sigma: None,
            identity_residual: Some(identity_residual),
            blowup_condition: Some(cond_17),
        },
    })
}

/// Signed residual LHS - RHS of the theta-free form of the critical
/// identity R = x0; zero iff the data sits on the critical surface, with
/// the sign matching sign(R - x0) at any theta.
#[allow(clippy::too_many_arguments)]
pub fn critical_identity_residual(
    mass1: f64,
    mass2: f64,
    norm_m1: f64,
    norm_m2: f64,
    params: &Parameters,
    alpha: f64,
    beta: f64,
    lambda_star: f64,
) -> Result<f64> {
    check_region(params)?;
    let e = exponent_sum_checked(alpha, beta, params)?;
    let (g1, g2) = gammas(alpha, beta, params)?;
    let em1 = e - 1.0;
    let a1 = (1.0 - alpha) / params.m1;
    let b2 = (1.0 - beta) / params.m2;
    let m1f = params.m1 - 1.0;
    let m2f = params.m2 - 1.0;

    let lhs = params.c_d.powf(1.0 / em1)
        * mass1.powf(g1)
        * mass2.powf(g2)
        * (m1f.powf((1.0 - b2) / em1) * m2f.powf(b2 / em1) * norm_m1
            + m1f.powf(a1 / em1) * m2f.powf((1.0 - a1) / em1) * norm_m2);
    let rhs = e * (1.0 / (a1.powf(a1) * b2.powf(b2) * lambda_star)).powf(1.0 / em1);
    Ok(lhs - rhs)
}

/// M_c = c_d lambda* (m*-1)/m* (1-alpha)^{(1-alpha)/m*} (1-beta)^{(1-beta)/m*},
/// the mass-product threshold at the balanced exponent pair.
pub fn mc_constant(lambda_star: f64, alpha: f64, beta: f64, params: &Parameters) -> Result<f64> {
    require_balanced(params)?;
    let ms = params.m_star;
    let sum = alpha + beta;
    if (sum - 2.0 / params.dim()).abs() > 1e-12 {
        return Err(Error::InvalidParameters(format!(
            "mc_constant needs alpha + beta = 2/d, got {sum}"
        )));
    }
    Ok(params.c_d * lambda_star * (ms - 1.0) / ms
        * (1.0 - alpha).powf((1.0 - alpha) / ms)
        * (1.0 - beta).powf((1.0 - beta) / ms))
}

/// z(eta) = eta^eta (1-eta)^{1-eta}; minimal value 1/2 at eta = 1/2.
pub fn z_function(eta: f64) -> f64 {
    eta.powf(eta) * (1.0 - eta).powf(1.0 - eta)
}

/// Equivalent form M_c = c_d lambda* (m*-1) z((1-alpha)/m*).
pub fn mc_constant_z_form(lambda_star: f64, alpha: f64, params: &Parameters) -> Result<f64> {
    require_balanced(params)?;
    let ms = params.m_star;
    Ok(params.c_d * lambda_star * (ms - 1.0) * z_function((1.0 - alpha) / ms))
}

fn require_balanced(params: &Parameters) -> Result<()> {
    let ms = params.m_star;
    if (params.m1 - ms).abs() > 1e-12 * ms || (params.m2 - ms).abs() > 1e-12 * ms {
        return Err(Error::IntersectionRequired);
    }
    Ok(())
}

/// Sigma(M) = c_d (m*-1) Pi* M1 M2 / (M1^{m*} + M2^{m*}).
pub fn sigma_mass(mass1: f64, mass2: f64, pi_star: f64, params: &Parameters) -> Result<f64> {
    require_balanced(params)?;
    if !(mass1 > 0.0 && mass2 > 0.0 && pi_star > 0.0) {
        return Err(Error::OutOfRange(
            "sigma_mass needs positive masses and constant".into(),
        ));
    }
    let ms = params.m_star;
    Ok(params.c_d * (ms - 1.0) * pi_star * mass1 * mass2 / (mass1.powf(ms) + mass2.powf(ms)))
}

/// Dichotomy at the balanced exponent pair: global when Sigma < 1, blow-up
/// admissible when Sigma > 1.
pub fn theorem13_verdict(
    mass1: f64,
    mass2: f64,
    pi_star: f64,
    params: &Parameters,
    tol: f64,
) -> Result<Verdict> {
    let sigma = sigma_mass(mass1, mass2, pi_star, params)?;
    let outcome = if (sigma - 1.0).abs() <= tol {
        Outcome::Boundary
    } else if sigma < 1.0 {
        Outcome::Global
    } else {
        Outcome::BlowUp
    };
    Ok(Verdict {
        outcome,
        theorem: Theorem::T13,
        evidence: Evidence { sigma: Some(sigma), ..Default::default() },
    })
}

/// Symmetric critical mass M with Sigma(M, M) = 1 when the constant is the
/// single-species one: M = (2/(c_d C_* (m*-1)))^{d/2}.
pub fn critical_mass_symmetric(c_star: f64, params: &Parameters) -> Result<f64> {
    require_balanced(params)?;
    if !(c_star > 0.0) {
        return Err(Error::OutOfRange(format!("c_star = {c_star} must be positive")));
    }
    Ok((2.0 / (params.c_d * c_star * (params.m_star - 1.0))).powf(params.dim() / 2.0))
}

/// Upper bound for Pi* built from M_c: M_c (M1^{m*} + M2^{m*}) /
/// (c_d (m*-1) M1^{1-alpha} M2^{1-beta}).
pub fn pi_star_upper_bound(
    mc: f64,
    mass1: f64,
    mass2: f64,
    alpha: f64,
    beta: f64,
    params: &Parameters,
) -> Result<f64> {
    require_balanced(params)?;
    let ms = params.m_star;
    Ok(mc * (mass1.powf(ms) + mass2.powf(ms))
        / (params.c_d * (ms - 1.0) * mass1.powf(1.0 - alpha) * mass2.powf(1.0 - beta)))
}
