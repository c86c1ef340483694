//! `sweep`: phase-diagram experiment over a mass grid at the balanced
//! exponent pair, comparing the predicted dichotomy with the observed solver
//! outcome point by point.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use critmass_core::criteria::{theorem13_verdict, Outcome};
use critmass_core::initdata::negative_energy_pair;
use critmass_core::solver::{run as integrate, StopReason};
use critmass_core::variational::{maximize, MaximizeOpts, MaximizerResult, ObjectiveSpec};
use critmass_core::{RadialDensity, RadialGrid};

use crate::config::FileConfig;
use crate::output::{csv_num, info, write_file, EXIT_CONFIG, EXIT_MISSING_CONSTANTS, EXIT_OK};

struct Row {
    mass1: f64,
    mass2: f64,
    sigma: f64,
    predicted: Outcome,
    observed: String,
    agree: &'static str,
}

fn observed_label(r: &critmass_core::Result<StopReason>) -> String {
    match r {
        Ok(s) => format!("{s:?}"),
        Err(e) => format!("error({e})"),
    }
}

fn agreement(predicted: Outcome, observed: &critmass_core::Result<StopReason>) -> &'static str {
    match (predicted, observed) {
        (Outcome::Global, Ok(StopReason::TimeReached | StopReason::SteadyState)) => "true",
        (Outcome::BlowUp, Ok(StopReason::BlowUpDetected)) => "true",
        (Outcome::Boundary | Outcome::Indeterminate, _) => "na",
        _ => "false",
    }
}

fn point_run(
    mass1: f64,
    mass2: f64,
    predicted: Outcome,
    grid: &Arc<RadialGrid>,
    cfg: &FileConfig,
    maximizer: &MaximizerResult,
    params: critmass_core::Parameters,
) -> critmass_core::Result<StopReason> {
    let sigma_w = cfg.sweep.as_ref().expect("sweep block checked").sigma_frac * grid.r_max();
    let gaussian = |mass: f64| {
        let s2 = 2.0 * sigma_w * sigma_w;
        let mut u = RadialDensity::from_fn(Arc::clone(grid), move |r| (-r * r / s2).exp());
        u.renormalize_mass(mass)?;
        Ok::<_, critmass_core::Error>(u)
    };
    // Supercritical points get the negative-energy data the blow-up theorem
    // actually speaks about; everything else runs from Gaussians.
    let pair = if predicted == Outcome::BlowUp {
        negative_energy_pair(mass1, mass2, maximizer, 1.0, grid, &params)
            .map(|(a, b, _)| (a, b))
            .or_else(|_| Ok::<_, critmass_core::Error>((gaussian(mass1)?, gaussian(mass2)?)))?
    } else {
        (gaussian(mass1)?, gaussian(mass2)?)
    };
    let solver_cfg = cfg.solver.build(params, Arc::clone(grid));
    integrate(&pair.0, &pair.1, &solver_cfg).map(|t| t.stop_reason)
}

pub fn run(cfg: &FileConfig, out: &Path) -> i32 {
    let Some(sc) = cfg.sweep.clone() else {
        eprintln!("config error: sweep needs a \"sweep\" block");
        return EXIT_CONFIG;
    };
    if sc.masses1.is_empty() || sc.masses2.is_empty() {
        eprintln!("config error: sweep mass axes must be non-empty");
        return EXIT_CONFIG;
    }
    if sc.masses1.iter().chain(&sc.masses2).any(|m| !(*m > 0.0)) {
        eprintln!("config error: sweep masses must be positive");
        return EXIT_CONFIG;
    }
    let params = match cfg.model.params() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    let grid = match cfg.grid.build(&params) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };

    // One maximizer serves every point: the dichotomy constant (when not
    // supplied) and the base profile for negative-energy data.
    let maximizer = match ObjectiveSpec::c_star(params)
        .and_then(|s| maximize(&s, &MaximizeOpts::new(Arc::clone(&grid))))
    {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let pi_star = match sc.pi_star {
        Some(v) => v,
        None if sc.estimate_constants => maximizer.constant,
        None => {
            eprintln!(
                "missing constants: sweep needs sweep.pi_star (or sweep.estimate_constants = true)"
            );
            return EXIT_MISSING_CONSTANTS;
        }
    };

    // Lexicographic parameter order is part of the output contract.
    let mut m1s = sc.masses1.clone();
    let mut m2s = sc.masses2.clone();
    m1s.sort_by(f64::total_cmp);
    m2s.sort_by(f64::total_cmp);
    let points: Vec<(f64, f64)> = m1s
        .iter()
        .flat_map(|&a| m2s.iter().map(move |&b| (a, b)))
        .collect();

    let rows: Vec<critmass_core::Result<Row>> = points
        .par_iter()
        .map(|&(mass1, mass2)| {
            let v = theorem13_verdict(mass1, mass2, pi_star, &params, 1e-9)?;
            let observed = point_run(mass1, mass2, v.outcome, &grid, cfg, &maximizer, params);
            Ok(Row {
                mass1,
                mass2,
                sigma: v.evidence.sigma.unwrap_or(f64::NAN),
                predicted: v.outcome,
                agree: agreement(v.outcome, &observed),
                observed: observed_label(&observed),
            })
        })
        .collect();

    let mut csv = String::from("M1,M2,sigma,predicted,observed,agree\n");
    for row in &rows {
        match row {
            Ok(r) => {
                csv.push_str(&format!(
                    "{},{},{},{:?},{},{}\n",
                    csv_num(r.mass1),
                    csv_num(r.mass2),
                    csv_num(r.sigma),
                    r.predicted,
                    r.observed,
                    r.agree
                ));
            }
            Err(e) => {
                eprintln!("config error: {e}");
                return EXIT_CONFIG;
            }
        }
    }
    match write_file(out, "sweep.csv", &csv) {
        Ok(p) => {
            info(&format!("wrote {} ({} points)", p.display(), rows.len()));
            EXIT_OK
        }
        Err(e) => {
            eprintln!("config error: cannot write sweep table: {e}");
            EXIT_CONFIG
        }
    }
}
