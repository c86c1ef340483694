//! Numerical maximization of the three interpolation-inequality constants
//! attached to the interaction energy H: the two-exponent constant
//! (`Lambda`), the mass-weighted constant at the balanced exponent (`Pi`),
//! and the single-species constant (`CStar`).
//!
//! Extremals are sought among radial non-increasing profiles via an
//! alternating Euler-Lagrange fixed point: with one species frozen, the
//! stationarity condition forces the other into the one-parameter family
//! ((V - a)_+)^{1/(m-1)} where V is the frozen species' potential; the
//! multiplier a is chosen by direct 1-D maximization of the objective, which
//! guarantees monotone ascent.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Parameters;
use crate::radial::{interaction_energy, newtonian_potential, RadialDensity, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    Lambda,
    Pi,
    CStar,
}

/// Which constant to estimate, with its parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub params: Parameters,
    /// L^1 weight exponents for `Lambda`; unused otherwise.
    pub alpha: f64,
    pub beta: f64,
    /// Mass weight for `Pi`; unused otherwise.
    pub theta0: f64,
}

/// Relative slack allowed when requiring m1 = m2 = m_star.
const M_STAR_TOL: f64 = 1e-12;

impl ObjectiveSpec {
    pub fn lambda(params: Parameters, alpha: f64, beta: f64) -> Result<Self> {
        check_alpha_beta(&params, alpha, beta)?;
        Ok(ObjectiveSpec { kind: ObjectiveKind::Lambda, params, alpha, beta, theta0: 0.5 })
    }

    pub fn pi(params: Parameters, theta0: f64) -> Result<Self> {
        require_m_star(&params)?;
        if !(theta0 > 0.0 && theta0 < 1.0) {
            return Err(Error::InvalidSpec(format!("theta0 = {theta0} must lie in (0,1)")));
        }
        Ok(ObjectiveSpec { kind: ObjectiveKind::Pi, params, alpha: 0.0, beta: 0.0, theta0 })
    }

    pub fn c_star(params: Parameters) -> Result<Self> {
        require_m_star(&params)?;
        Ok(ObjectiveSpec { kind: ObjectiveKind::CStar, params, alpha: 0.0, beta: 0.0, theta0: 0.5 })
    }
}

fn require_m_star(params: &Parameters) -> Result<()> {
    let ms = params.m_star;
    if (params.m1 - ms).abs() > M_STAR_TOL * ms || (params.m2 - ms).abs() > M_STAR_TOL * ms {
        return Err(Error::InvalidSpec(format!(
            "objective requires m1 = m2 = {ms}, got ({}, {})",
            params.m1, params.m2
        )));
    }
    Ok(())
}

/// The linear constraint tying the two L^1 weight exponents together:
/// (m1-1)/m1 alpha + (m2-1)/m2 beta = 1 + 2/d - 1/m1 - 1/m2, with each
/// exponent inside its open admissible interval.
pub fn check_alpha_beta(params: &Parameters, alpha: f64, beta: f64) -> Result<()> {
    let s = 1.0 + 2.0 / params.dim() - 1.0 / params.m1 - 1.0 / params.m2;
    let a_max = params.m1 / (params.m1 - 1.0) * s;
    let b_max = params.m2 / (params.m2 - 1.0) * s;
    if !(alpha > 0.0 && alpha < a_max) || !(beta > 0.0 && beta < b_max) {
        return Err(Error::InvalidSpec(format!(
            "alpha = {alpha} must lie in (0, {a_max}), beta = {beta} in (0, {b_max})"
        )));
    }
    let lhs = (params.m1 - 1.0) / params.m1 * alpha + (params.m2 - 1.0) / params.m2 * beta;
    if (lhs - s).abs() > 1e-12 * s.abs().max(1.0) {
        return Err(Error::InvalidSpec(format!(
            "constraint violated: (m1-1)/m1 a + (m2-1)/m2 b = {lhs}, expected {s}"
        )));
    }
    Ok(())
}

/// Midpoints of the admissible intervals; always satisfies the constraint.
pub fn default_alpha_beta(params: &Parameters) -> (f64, f64) {
    let s = 1.0 + 2.0 / params.dim() - 1.0 / params.m1 - 1.0 / params.m2;
    (
        0.5 * params.m1 / (params.m1 - 1.0) * s,
        0.5 * params.m2 / (params.m2 - 1.0) * s,
    )
}

/// A trial pair together with the last rescaling that produced it.
#[derive(Debug, Clone)]
pub struct MaximizerState {
    pub h1: RadialDensity,
    pub h2: RadialDensity,
    pub lam1: f64,
    pub lam2: f64,
    pub mu: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct MaximizerResult {
    /// Estimated constant; a lower bound on the true supremum, being the
    /// objective value of a feasible pair.
    pub constant: f64,
    pub h1: RadialDensity,
    pub h2: RadialDensity,
    pub iterations: usize,
    /// Relative objective change over the final sweep.
    pub residual: f64,
    pub converged: bool,
    pub grid: Arc<RadialGrid>,
    /// |constant(2n) - constant(n)| when a refinement run was made.
    pub error_bar: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MaximizeOpts {
    pub grid: Arc<RadialGrid>,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: Option<(RadialDensity, RadialDensity)>,
}

impl MaximizeOpts {
    pub fn new(grid: Arc<RadialGrid>) -> Self {
        MaximizeOpts { grid, max_iter: 10_000, tol: 1e-8, seed: None }
    }
}

/// Symmetric decreasing rearrangement on the grid: the layer-cake
/// reconstruction sorts the (value, volume) pairs and refills cells from the
/// origin outward, volume-averaging where a layer straddles a cell. Mass is
/// preserved exactly; already non-increasing profiles are fixed points.
pub fn rearrange_decreasing(h: &RadialDensity) -> RadialDensity {
    if h.values.windows(2).all(|w| w[0] >= w[1]) {
        return h.clone();
    }
    let g = &h.grid;
    let mut pairs: Vec<(f64, f64)> = h
        .values
        .iter()
        .cloned()
        .zip(g.volumes().iter().cloned())
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut out = Vec::with_capacity(g.n);
    let mut j = 0;
    let mut seg_left = pairs[0].1;
    for k in 0..g.n {
        let w = g.volumes()[k];
        if j < pairs.len() && seg_left >= w {
            // Whole cell inside one layer: copy the value bit-exactly.
            out.push(pairs[j].0);
            seg_left -= w;
            if seg_left == 0.0 {
                j += 1;
                if j < pairs.len() {
                    seg_left = pairs[j].1;
                }
            }
            continue;
        }
        let mut need = w;
        let mut acc = 0.0;
        while need > 0.0 && j < pairs.len() {
            let take = need.min(seg_left);
            acc += take * pairs[j].0;
            need -= take;
            seg_left -= take;
            if seg_left <= 0.0 {
                j += 1;
                if j < pairs.len() {
                    seg_left = pairs[j].1;
                }
            }
        }
        out.push(acc / w);
    }
    // Volume-averaged transition cells can end a rounding ulp above their
    // predecessor; clamp so the output is monotone by construction.
    for k in 1..out.len() {
        if out[k] > out[k - 1] {
            out[k] = out[k - 1];
        }
    }
    RadialDensity { grid: Arc::clone(g), values: out }
}

/// Objective value of a pair for the given spec. For `CStar` only h1 is
/// consulted (the pair is (h1, h1) by convention).
pub fn objective_value(spec: &ObjectiveSpec, h1: &RadialDensity, h2: &RadialDensity) -> Result<f64> {
    match spec.kind {
        ObjectiveKind::Lambda => {
            let h = interaction_energy(h1, h2)?;
            let den = h1.mass().powf(spec.alpha)
                * h2.mass().powf(spec.beta)
                * h1.lp_norm(spec.params.m1).powf(1.0 - spec.alpha)
                * h2.lp_norm(spec.params.m2).powf(1.0 - spec.beta);
            if den == 0.0 {
                return Err(Error::ZeroProfile);
            }
            Ok(h / den)
        }
        ObjectiveKind::Pi => {
            let ms = spec.params.m_star;
            let h = interaction_energy(h1, h2)?;
            let (n1, n2) = (h1.mass(), h2.mass());
            if n1 == 0.0 || n2 == 0.0 {
                return Err(Error::ZeroProfile);
            }
            let x1 = h1.lp_norm_pow(ms) / n1.powf(ms);
            let x2 = h2.lp_norm_pow(ms) / n2.powf(ms);
            Ok(h / (n1 * n2 * (spec.theta0 * x1 + (1.0 - spec.theta0) * x2)))
        }
        ObjectiveKind::CStar => {
            let ms = spec.params.m_star;
            let h = interaction_energy(h1, h1)?;
            let n1 = h1.mass();
            let nm = h1.lp_norm_pow(ms);
            if n1 == 0.0 || nm == 0.0 {
                return Err(Error::ZeroProfile);
            }
            Ok(h / (n1.powf(2.0 / spec.params.dim()) * nm))
        }
    }
}

/// Rescale a pair by amplitudes and a joint dilation so the normalization
/// targets of the objective hold exactly:
/// - `Lambda`: ||h1||_1^a ||h2||_1^b = 1 and ||h1||_{m1} = ||h2||_{m2} = 1;
/// - `Pi`: ||h_i||_1 = 1 and t0 ||h1||_{m*}^{m*} + (1-t0) ||h2||_{m*}^{m*} = 1;
/// - `CStar`: ||h1||_1 = ||h1||_{m*} = 1.
///
/// The dilation is represented exactly by scaling the grid spacing, so the
/// objective value is unchanged to rounding.
pub fn normalize_pair(state: &MaximizerState, spec: &ObjectiveSpec) -> Result<MaximizerState> {
    if state.h1.mass() == 0.0 || state.h2.mass() == 0.0 {
        return Err(Error::ZeroProfile);
    }
    let p = &spec.params;
    let d = p.dim();
    let (lam1, lam2, mu) = match spec.kind {
        ObjectiveKind::Lambda => {
            let nm1 = state.h1.lp_norm(p.m1);
            let nm2 = state.h2.lp_norm(p.m2);
            let r = (state.h1.mass() / nm1).powf(spec.alpha)
                * (state.h2.mass() / nm2).powf(spec.beta);
            let c = (p.m1 - 1.0) / p.m1 * spec.alpha + (p.m2 - 1.0) / p.m2 * spec.beta;
            let mu = r.powf(1.0 / (d * c));
            (mu.powf(d / p.m1) / nm1, mu.powf(d / p.m2) / nm2, mu)
        }
        ObjectiveKind::Pi => {
            let ms = p.m_star;
            let (n1, n2) = (state.h1.mass(), state.h2.mass());
            let x1 = state.h1.lp_norm_pow(ms) / n1.powf(ms);
            let x2 = state.h2.lp_norm_pow(ms) / n2.powf(ms);
            let mu = (spec.theta0 * x1 + (1.0 - spec.theta0) * x2).powf(-1.0 / (d - 2.0));
            (mu.powf(d) / n1, mu.powf(d) / n2, mu)
        }
        ObjectiveKind::CStar => {
            let ms = p.m_star;
            let n1 = state.h1.mass();
            let x1 = state.h1.lp_norm_pow(ms) / n1.powf(ms);
            let mu = x1.powf(-1.0 / (d - 2.0));
            let lam = mu.powf(d) / n1;
            (lam, lam, mu)
        }
    };

    let g = state.h1.grid.dilated(mu);
    let scale = |h: &RadialDensity, lam: f64| {
        RadialDensity {
            grid: Arc::clone(&g),
            values: h.values.iter().map(|v| v * lam).collect(),
        }
    };
    let h1 = scale(&state.h1, lam1);
    let h2 = if spec.kind == ObjectiveKind::CStar {
        h1.clone()
    } else {
        scale(&state.h2, lam2)
    };
    let objective = objective_value(spec, &h1, &h2)?;
    Ok(MaximizerState { h1, h2, lam1, lam2, mu, objective })
}

/// One-dimensional golden-section refinement of a maximum inside [lo, hi].
fn golden_refine(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> f64, iters: usize) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 { x1 } else { x2 }
}

/// Best multiplier level a for the candidate family ((V - a)_+)^{1/(m-1)},
/// maximizing `eval` of the candidate values. Scans coarsely, then refines.
fn best_level(
    v: &[f64],
    m: f64,
    eval: &mut dyn FnMut(&[f64]) -> f64,
) -> Option<Vec<f64>> {
    // Cap the level so the candidate keeps a resolvable support: an
    // under-resolved spike has its discrete objective overestimated, and the
    // monotone ascent would happily chase that artifact.
    let min_cells = (v.len() / 32).max(8).min(v.len());
    let v_max = v[min_cells - 1];
    // Keep the candidate support strictly inside the grid.
    let v_edge = *v.last().unwrap();
    if !(v_max > v_edge) {
        return None;
    }
    let expo = 1.0 / (m - 1.0);
    let candidate = |a: f64| -> Vec<f64> {
        v.iter().map(|&x| (x - a).max(0.0).powf(expo)).collect()
    };
    let mut score = |a: f64| eval(&candidate(a));

    let n_scan = 40;
    let mut best_a = f64::NAN;
    let mut best_s = f64::MIN;
    for i in 1..n_scan {
        let a = v_edge + (v_max - v_edge) * i as f64 / n_scan as f64;
        let s = score(a);
        if s > best_s {
            best_s = s;
            best_a = a;
        }
    }
    if !best_a.is_finite() {
        return None;
    }
    let step = (v_max - v_edge) / n_scan as f64;
    let a = golden_refine(
        (best_a - step).max(v_edge),
        (best_a + step).min(v_max),
        &mut score,
        40,
    );
    Some(candidate(a))
}

fn gaussian_seed(grid: &Arc<RadialGrid>, width: f64) -> RadialDensity {
    let mut h = RadialDensity::from_fn(Arc::clone(grid), |r| (-r * r / (2.0 * width * width)).exp());
    h.renormalize_mass(1.0).expect("gaussian seed has positive mass");
    h
}

/// Alternating Euler-Lagrange ascent for the spec's constant.
///
/// Each accepted half-step replaces one species by the best member of its
/// stationarity family (the other frozen), so the objective never decreases.
/// Stops when the relative objective change over a full sweep drops below
/// `opts.tol`. The final pair is exactly normalized; `constant` is its
/// objective value, a lower bound on the supremum.
pub fn maximize(spec: &ObjectiveSpec, opts: &MaximizeOpts) -> Result<MaximizerResult> {
    if opts.grid.n < 64 {
        return Err(Error::InvalidSpec(format!(
            "maximization needs >= 64 cells, got {}",
            opts.grid.n
        )));
    }
    let p = &spec.params;
    let (mut h1, mut h2) = match &opts.seed {
        Some((a, b)) => {
            a.same_grid(b)?;
            if a.grid.as_ref() != opts.grid.as_ref() {
                return Err(Error::GridMismatch);
            }
            (rearrange_decreasing(a), rearrange_decreasing(b))
        }
        None => {
            let s = gaussian_seed(&opts.grid, opts.grid.r_max() / 8.0);
            (s.clone(), s)
        }
    };
    if spec.kind == ObjectiveKind::CStar {
        h2 = h1.clone();
    }

    let mut objective = objective_value(spec, &h1, &h2)?;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        let prev = objective;

        match spec.kind {
            ObjectiveKind::CStar => {
                let pot = newtonian_potential(&h1);
                let v: Vec<f64> = pot.v.iter().map(|x| x / p.c_d).collect();
                let g = Arc::clone(&opts.grid);
                let mut eval = |vals: &[f64]| -> f64 {
                    let cand = RadialDensity { grid: Arc::clone(&g), values: vals.to_vec() };
                    objective_value(spec, &cand, &cand).unwrap_or(f64::MIN)
                };
                if let Some(vals) = best_level(&v, p.m_star, &mut eval) {
                    let cand = RadialDensity { grid: Arc::clone(&opts.grid), values: vals };
                    let s = objective_value(spec, &cand, &cand)?;
                    if s > objective {
                        h1 = cand.clone();
                        h2 = cand;
                        objective = s;
                    }
                }
            }
            ObjectiveKind::Lambda | ObjectiveKind::Pi => {
                for species in 0..2 {
                    let (target_m, frozen) = if species == 0 {
                        (p.m1, &h2)
                    } else {
                        (p.m2, &h1)
                    };
                    let pot = newtonian_potential(frozen);
                    let v: Vec<f64> = pot.v.iter().map(|x| x / p.c_d).collect();
                    let g = Arc::clone(&opts.grid);
                    let other = frozen.clone();
                    let first = species == 0;
                    let mut eval = |vals: &[f64]| -> f64 {
                        let cand = RadialDensity { grid: Arc::clone(&g), values: vals.to_vec() };
                        let r = if first {
                            objective_value(spec, &cand, &other)
                        } else {
                            objective_value(spec, &other, &cand)
                        };
                        r.unwrap_or(f64::MIN)
                    };
                    if let Some(vals) = best_level(&v, target_m, &mut eval) {
                        let cand = RadialDensity { grid: Arc::clone(&opts.grid), values: vals };
                        let s = if first {
                            objective_value(spec, &cand, &h2)?
                        } else {
                            objective_value(spec, &h1, &cand)?
                        };
                        if s > objective {
                            if first {
                                h1 = cand;
                            } else {
                                h2 = cand;
                            }
                            objective = s;
                        }
                    }
                }
            }
        }

        // Keep amplitudes O(1) between sweeps; the objective is invariant.
        for h in [&mut h1, &mut h2] {
            let peak = h.linf();
            if peak > 0.0 {
                for x in &mut h.values {
                    *x /= peak;
                }
            }
        }
        if spec.kind == ObjectiveKind::CStar {
            h2 = h1.clone();
        }

        residual = (objective - prev).abs() / objective.abs().max(f64::MIN_POSITIVE);
        if residual < opts.tol {
            converged = true;
            break;
        }
    }

    let state = MaximizerState {
        h1,
        h2,
        lam1: 1.0,
        lam2: 1.0,
        mu: 1.0,
        objective,
    };
    let norm = normalize_pair(&state, spec)?;
    Ok(MaximizerResult {
        constant: norm.objective,
        h1: norm.h1,
        h2: norm.h2,
        iterations,
        residual,
        converged,
        grid: Arc::clone(&opts.grid),
        error_bar: None,
    })
}

/// Run at n and 2n cells (same r_max) and report the finer result with a
/// Richardson-style error bar from the difference.
pub fn maximize_refined(spec: &ObjectiveSpec, opts: &MaximizeOpts) -> Result<MaximizerResult> {
    let coarse = maximize(spec, opts)?;
    let fine_grid = RadialGrid::new(&spec.params, 2 * opts.grid.n, opts.grid.r_max())?;
    let fine_opts = MaximizeOpts {
        grid: fine_grid,
        max_iter: opts.max_iter,
        tol: opts.tol,
        seed: None,
    };
    let mut fine = maximize(spec, &fine_opts)?;
    fine.error_bar = Some((fine.constant - coarse.constant).abs());
    fine.converged = fine.converged && coarse.converged;
    Ok(fine)
}
