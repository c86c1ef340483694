//! `simulate`: one forward run of the two-species system, emitting the
//! diagnostics trajectory as CSV and a run summary as JSON.

use std::path::Path;
use std::sync::Arc;

use serde_json::json;

use critmass_core::initdata::{make, DataFamily};
use critmass_core::solver::run as integrate;
use critmass_core::variational::{maximize, MaximizeOpts, ObjectiveSpec};
use critmass_core::{Error, RadialDensity};

use crate::config::FileConfig;
use crate::output::{
    emit_json, envelope, info, write_file, EXIT_CONFIG, EXIT_OK, EXIT_OVERFLOW,
};

pub fn run(cfg: &FileConfig, out: &Path) -> i32 {
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
    let Some(spec1) = &cfg.data1 else {
        eprintln!("config error: simulate needs a data1 block");
        return EXIT_CONFIG;
    };

    // Rescaled-extremal data needs a base profile; supply the single-species
    // extremal computed on the same grid.
    let needs_base = matches!(spec1.family, DataFamily::RescaledMaximizer { .. })
        || matches!(
            cfg.data2.as_ref().map(|s| s.family),
            Some(DataFamily::RescaledMaximizer { .. })
        );
    let base = if needs_base {
        let obj = ObjectiveSpec::c_star(params)
            .and_then(|s| maximize(&s, &MaximizeOpts::new(Arc::clone(&grid))));
        match obj {
            Ok(r) => Some(r.h1),
            Err(e) => {
                eprintln!("config error: cannot build the base extremal: {e}");
                return EXIT_CONFIG;
            }
        }
    } else {
        None
    };

    let build = |spec| make(spec, &grid, base.as_ref());
    let u1 = match build(spec1) {
        Ok(u) => u,
        Err(e) => {
            eprintln!("config error: data1: {e}");
            return EXIT_CONFIG;
        }
    };
    let u2 = match &cfg.data2 {
        Some(s) => match build(s) {
            Ok(u) => u,
            Err(e) => {
                eprintln!("config error: data2: {e}");
                return EXIT_CONFIG;
            }
        },
        None => RadialDensity::zero(Arc::clone(&grid)),
    };

    let solver_cfg = cfg.solver.build(params, Arc::clone(&grid));
    let traj = match integrate(&u1, &u2, &solver_cfg) {
        Ok(t) => t,
        Err(e @ Error::NonFiniteState(_)) => {
            eprintln!("numerical overflow: {e}");
            return EXIT_OVERFLOW;
        }
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };

    let csv = traj.to_csv();
    let csv_path = match write_file(out, "trajectory.csv", &csv) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: cannot write trajectory: {e}");
            return EXIT_CONFIG;
        }
    };
    info(&format!(
        "wrote {} ({} samples)",
        csv_path.display(),
        traj.samples.len()
    ));

    let payload = json!({
        "stop_reason": traj.stop_reason,
        "t_final": traj.final_state.t,
        "steps": traj.final_state.step_count,
        "samples": traj.samples.len(),
        "mass_drift": traj.mass_drift,
        "energy_violations": traj.energy_violations,
        "clipped_mass": traj.clipped_mass,
        "overflowed": traj.overflowed,
    });
    if emit_json(Some(out), "summary.json", &envelope("simulate", payload)).is_err() {
        eprintln!("config error: cannot write to the output directory");
        return EXIT_CONFIG;
    }
    if traj.overflowed {
        EXIT_OVERFLOW
    } else {
        EXIT_OK
    }
}
