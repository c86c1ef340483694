//! Explicit conservative finite-volume time integration of the radial
//! two-species system, with an optional epsilon-regularized potential,
//! conservation/energy/virial diagnostics, and numerical blow-up detection.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Parameters;
use crate::radial::{
    free_energy, newtonian_potential, EnergyReport, PotentialProfile, RadialDensity, RadialGrid,
};

/// Relative (F, S) stall threshold for steady-state detection.
const STEADY_TOL: f64 = 1e-10;
/// Consecutive stalled diagnostic samples before declaring steady state.
const STEADY_WINDOW: usize = 5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub params: Parameters,
    #[serde(skip)]
    pub grid: Option<Arc<RadialGrid>>,
    /// Regularization strength; 0 disables it.
    pub epsilon: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub blowup_linf_factor: f64,
    /// Diagnostics are sampled every this many steps.
    pub diag_every: usize,
}

impl SolverConfig {
    pub fn new(params: Parameters, grid: Arc<RadialGrid>) -> Self {
        SolverConfig {
            params,
            grid: Some(grid),
            epsilon: 0.0,
            dt_init: 1e-3,
            dt_min: 1e-12,
            t_end: 1.0,
            cfl: 0.45,
            blowup_linf_factor: 1e4,
            diag_every: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_none() {
            return Err(Error::ConfigInvalid("no grid attached".into()));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_init) {
            return Err(Error::ConfigInvalid(format!(
                "need 0 < dt_min < dt_init, got ({}, {})",
                self.dt_min, self.dt_init
            )));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::ConfigInvalid(format!("t_end = {} must be positive", self.t_end)));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::ConfigInvalid(format!("cfl = {} must lie in (0,1)", self.cfl)));
        }
        if !(self.blowup_linf_factor > 1.0) {
            return Err(Error::ConfigInvalid(format!(
                "blowup_linf_factor = {} must exceed 1",
                self.blowup_linf_factor
            )));
        }
        if self.diag_every == 0 {
            return Err(Error::ConfigInvalid("diag_every must be >= 1".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::ConfigInvalid(format!("epsilon = {} must be >= 0", self.epsilon)));
        }
        Ok(())
    }

    fn grid(&self) -> &Arc<RadialGrid> {
        self.grid.as_ref().expect("validated config has a grid")
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u1: RadialDensity,
    pub u2: RadialDensity,
    pub step_count: usize,
}

/// Per-step bookkeeping that is not part of the state proper.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepDiag {
    /// Mass removed by clipping negative values, per species.
    pub clipped: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    TimeReached,
    BlowUpDetected,
    SteadyState,
    StepUnderflow,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub report: EnergyReport,
    pub linf1: f64,
    pub linf2: f64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub final_state: SimState,
    pub stop_reason: StopReason,
    /// Worst relative per-species mass drift over the run.
    pub mass_drift: f64,
    /// Steps where F rose by more than 1e-8 (1 + |F(0)|).
    pub energy_violations: usize,
    pub clipped_mass: [f64; 2],
    /// True when integration hit a non-finite value before any proxy fired.
    pub overflowed: bool,
}

impl Trajectory {
    /// CSV with a fixed header and 17-significant-digit values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,M1,M2,lm1,lm2,H,F,S,I,linf1,linf2,dt\n");
        for s in &self.samples {
            let r = &s.report;
            let row = [
                s.t, r.mass1, r.mass2, r.lm1, r.lm2, r.interaction, r.free_energy,
                r.second_moment, r.virial_rate, s.linf1, s.linf2, s.dt,
            ];
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Potential of the source under the configured regularization.
pub fn potential_of(u: &RadialDensity, epsilon: f64) -> PotentialProfile {
    if epsilon == 0.0 {
        newtonian_potential(u)
    } else {
        regularized_potential(u, epsilon)
    }
}

/// Regularized Newtonian potential v = K_eps * u with
/// K_eps(x) = c_d (|x|^2 + eps^2)^{-(d-2)/2}; O(n^2), intended for
/// small-grid consistency runs.
pub fn regularized_potential(u: &RadialDensity, epsilon: f64) -> PotentialProfile {
    let g = &u.grid;
    let n = g.n;
    let mut v = vec![0.0; n];
    let shell_mass: Vec<f64> = u
        .values
        .iter()
        .zip(g.volumes())
        .map(|(x, w)| x * w)
        .collect();
    for k in 0..n {
        let r = g.centers()[k];
        let mut acc = 0.0;
        for j in 0..n {
            if shell_mass[j] == 0.0 {
                continue;
            }
            acc += shell_mass[j] * shell_average(r, g.centers()[j], epsilon, g.d);
        }
        v[k] = g.c_d * acc;
    }
    let mut dv = vec![0.0; n + 1];
    for i in 1..n {
        dv[i] = (v[i] - v[i - 1]) / g.dr;
    }
    // Outermost interface: monopole slope; unused by the no-flux scheme.
    let total: f64 = shell_mass.iter().sum();
    dv[n] = -g.c_d * (g.d as f64 - 2.0) * total / g.r_max().powi(g.d as i32 - 1);
    PotentialProfile { grid: Arc::clone(g), v, dv }
}

/// Spherical average of (|x - y|^2 + eps^2)^{-(d-2)/2} over y on the sphere
/// of radius s, with x at radius r. Closed form in d = 3, quadrature above.
fn shell_average(r: f64, s: f64, eps: f64, d: u32) -> f64 {
    if d == 3 {
        let plus = ((r + s) * (r + s) + eps * eps).sqrt();
        let minus = ((r - s) * (r - s) + eps * eps).sqrt();
        (plus - minus) / (2.0 * r * s)
    } else {
        let pow = -(d as f64 - 2.0) / 2.0;
        let wexp = (d as f64 - 3.0) / 2.0;
        let nq = 64;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..nq {
            let t = -1.0 + 2.0 * (i as f64 + 0.5) / nq as f64;
            let w = (1.0 - t * t).powf(wexp);
            num += w * (r * r + s * s - 2.0 * r * s * t + eps * eps).powf(pow);
            den += w;
        }
        num / den
    }
}

fn species_update(
    u: &RadialDensity,
    pot_other: &PotentialProfile,
    m: f64,
    eps: f64,
    dt: f64,
) -> (Vec<f64>, f64) {
    let g = &u.grid;
    let n = g.n;
    // Outward radial flux at each interface; no-flux at both ends.
    let mut flux = vec![0.0; n + 1];
    for i in 1..n {
        let diff = -((u.values[i] + eps).powf(m) - (u.values[i - 1] + eps).powf(m)) / g.dr;
        let dv = pot_other.dv[i];
        let upwind = if dv <= 0.0 { u.values[i] } else { u.values[i - 1] };
        flux[i] = diff + (upwind + eps) * dv;
    }
    let mut out = Vec::with_capacity(n);
    let mut clipped = 0.0;
    for k in 0..n {
        let a_in = g.interface_area(k) * flux[k];
        let a_out = g.interface_area(k + 1) * flux[k + 1];
        let mut v = u.values[k] - dt * (a_out - a_in) / g.volumes()[k];
        if v < 0.0 {
            clipped += -v * g.volumes()[k];
            v = 0.0;
        }
        out.push(v);
    }
    (out, clipped)
}

fn step_with(
    state: &SimState,
    cfg: &SolverConfig,
    dt: f64,
    pot1: &PotentialProfile,
    pot2: &PotentialProfile,
) -> Result<(SimState, StepDiag)> {
    let (v1, c1) = species_update(&state.u1, pot2, cfg.params.m1, cfg.epsilon, dt);
    let (v2, c2) = species_update(&state.u2, pot1, cfg.params.m2, cfg.epsilon, dt);
    if v1.iter().chain(&v2).any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteState(state.t));
    }
    let grid = Arc::clone(&state.u1.grid);
    Ok((
        SimState {
            t: state.t + dt,
            u1: RadialDensity { grid: Arc::clone(&grid), values: v1 },
            u2: RadialDensity { grid, values: v2 },
            step_count: state.step_count + 1,
        },
        StepDiag { clipped: [c1, c2] },
    ))
}

/// One forward step; recomputes both potentials.
pub fn step(state: &SimState, cfg: &SolverConfig, dt: f64) -> Result<(SimState, StepDiag)> {
    let pot1 = potential_of(&state.u1, cfg.epsilon);
    let pot2 = potential_of(&state.u2, cfg.epsilon);
    step_with(state, cfg, dt, &pot1, &pot2)
}

fn cfl_from(
    state: &SimState,
    cfg: &SolverConfig,
    pot1: &PotentialProfile,
    pot2: &PotentialProfile,
) -> f64 {
    let g = state.u1.grid.as_ref();
    let d = cfg.params.dim();
    let coef = |u: &RadialDensity, m: f64| -> f64 {
        u.values
            .iter()
            .map(|&x| m * (x + cfg.epsilon).powf(m - 1.0))
            .fold(0.0, f64::max)
    };
    let diff_coef = coef(&state.u1, cfg.params.m1).max(coef(&state.u2, cfg.params.m2));
    let max_dv = pot1
        .dv
        .iter()
        .chain(&pot2.dv)
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    let mut dt = cfg.dt_init;
    if diff_coef > 0.0 {
        dt = dt.min(cfg.cfl * g.dr * g.dr / (2.0 * d * diff_coef));
    }
    if max_dv > 0.0 {
        dt = dt.min(cfg.cfl * g.dr / max_dv);
    }
    dt.max(cfg.dt_min)
}

/// Stable time step from the diffusion and drift speeds, clamped to
/// [dt_min, dt_init].
pub fn cfl_dt(state: &SimState, cfg: &SolverConfig) -> f64 {
    let pot1 = potential_of(&state.u1, cfg.epsilon);
    let pot2 = potential_of(&state.u2, cfg.epsilon);
    cfl_from(state, cfg, &pot1, &pot2)
}

/// Integrate to t_end or an early stop.
///
/// Blow-up proxies: the max L-infinity norm exceeding
/// `blowup_linf_factor` times its initial value, the time step collapsing to
/// dt_min while the norm still grows, or a non-finite state (recorded as
/// `overflowed`). Steady state: relative change of (F, S) below 1e-10 over
/// several consecutive diagnostic samples.
pub fn run(u1_0: &RadialDensity, u2_0: &RadialDensity, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    u1_0.same_grid(u2_0).map_err(|_| Error::ConfigInvalid("data on different grids".into()))?;
    if u1_0.grid.as_ref() != cfg.grid().as_ref() {
        return Err(Error::ConfigInvalid("data grid differs from config grid".into()));
    }
    let g = cfg.grid();
    for (name, u) in [("u1", u1_0), ("u2", u2_0)] {
        let m = u.mass();
        if m > 0.0 && u.mass_beyond(g.r_max() / 2.0) > 1e-12 * m {
            return Err(Error::ConfigInvalid(format!(
                "{name} carries mass outside r_max/2"
            )));
        }
    }

    let mass0 = [u1_0.mass(), u2_0.mass()];
    let linf0 = u1_0.linf().max(u2_0.linf());
    let mut state = SimState { t: 0.0, u1: u1_0.clone(), u2: u2_0.clone(), step_count: 0 };

    let report0 = free_energy(&state.u1, &state.u2, &cfg.params)?;
    let tol_e = 1e-8 * (1.0 + report0.free_energy.abs());
    let mut samples = vec![Sample {
        t: 0.0,
        report: report0,
        linf1: state.u1.linf(),
        linf2: state.u2.linf(),
        dt: 0.0,
    }];

    let mut stop_reason = StopReason::TimeReached;
    let mut overflowed = false;
    let mut energy_violations = 0usize;
    let mut clipped_mass = [0.0f64; 2];
    let mut mass_drift = 0.0f64;
    let mut steady_streak = 0usize;
    let mut prev_sample_linf = linf0;
    let mut last_dt = cfg.dt_init;

    'outer: while state.t < cfg.t_end {
        // One diagnostic block of up to diag_every steps.
        let mut dt_floored = false;
        for _ in 0..cfg.diag_every {
            if state.t >= cfg.t_end {
                break;
            }
            let pot1 = potential_of(&state.u1, cfg.epsilon);
            let pot2 = potential_of(&state.u2, cfg.epsilon);
            let mut dt = cfl_from(&state, cfg, &pot1, &pot2);
            if dt <= cfg.dt_min {
                dt_floored = true;
            }
            if state.t + dt > cfg.t_end {
                dt = cfg.t_end - state.t;
            }
            last_dt = dt;
            match step_with(&state, cfg, dt, &pot1, &pot2) {
                Ok((next, diag)) => {
                    clipped_mass[0] += diag.clipped[0];
                    clipped_mass[1] += diag.clipped[1];
                    state = next;
                }
                Err(Error::NonFiniteState(_)) => {
                    overflowed = true;
                    stop_reason = StopReason::BlowUpDetected;
                    break 'outer;
                }
                Err(e) => return Err(e),
            }
        }

        let report = free_energy(&state.u1, &state.u2, &cfg.params)?;
        let prev = samples.last().expect("seeded with the initial sample");
        if report.free_energy > prev.report.free_energy + tol_e {
            energy_violations += 1;
        }
        for (i, m0) in mass0.iter().enumerate() {
            if *m0 > 0.0 {
                let m = if i == 0 { report.mass1 } else { report.mass2 };
                mass_drift = mass_drift.max((m - m0).abs() / m0);
            }
        }
        let linf = state.u1.linf().max(state.u2.linf());
        // Require a non-growing peak as well: near blow-up the CFL step
        // collapses and the per-block (F, S) changes stall even though the
        // state keeps concentrating.
        let stalled = (report.free_energy - prev.report.free_energy).abs()
            <= STEADY_TOL * (1.0 + prev.report.free_energy.abs())
            && (report.second_moment - prev.report.second_moment).abs()
                <= STEADY_TOL * (1.0 + prev.report.second_moment.abs())
            && linf <= prev_sample_linf * (1.0 + 1e-8);
        steady_streak = if stalled { steady_streak + 1 } else { 0 };

        samples.push(Sample {
            t: state.t,
            report,
            linf1: state.u1.linf(),
            linf2: state.u2.linf(),
            dt: last_dt,
        });

        if linf0 > 0.0 && linf > cfg.blowup_linf_factor * linf0 {
            stop_reason = StopReason::BlowUpDetected;
            break;
        }
        if dt_floored {
            stop_reason = if linf > prev_sample_linf {
                StopReason::BlowUpDetected
            } else {
                StopReason::StepUnderflow
            };
            break;
        }
        if steady_streak >= STEADY_WINDOW && state.t < cfg.t_end {
            stop_reason = StopReason::SteadyState;
            break;
        }
        prev_sample_linf = linf;
    }

    Ok(Trajectory {
        samples,
        final_state: state,
        stop_reason,
        mass_drift,
        energy_violations,
        clipped_mass,
        overflowed,
    })
}
