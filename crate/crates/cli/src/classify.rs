//! `classify`: dispatch a mass/exponent configuration to the matching
//! critical-mass criterion and print the verdict with its evidence.

use std::path::Path;
use std::sync::Arc;

use serde_json::json;

use critmass_core::criteria::{theorem12_verdict, theorem13_verdict, Theorem12Data};
use critmass_core::initdata::make;
use critmass_core::model::Parameters;
use critmass_core::radial::free_energy;
use critmass_core::variational::{default_alpha_beta, maximize, MaximizeOpts, ObjectiveSpec};

use crate::config::FileConfig;
use crate::output::{
    debug, emit_json, envelope, EXIT_CONFIG, EXIT_MISSING_CONSTANTS, EXIT_OK,
};

fn balanced(p: &Parameters) -> bool {
    let ms = p.m_star;
    (p.m1 - ms).abs() <= 1e-12 * ms && (p.m2 - ms).abs() <= 1e-12 * ms
}

/// Estimate the requested constant by running the maximizer once.
fn estimated_constant(spec: ObjectiveSpec, cfg: &FileConfig) -> Result<f64, String> {
    let grid = cfg.grid.build(&spec.params).map_err(|e| e.to_string())?;
    let res = maximize(&spec, &MaximizeOpts::new(grid)).map_err(|e| e.to_string())?;
    debug(&format!(
        "estimated constant {} after {} sweeps (residual {:.3e})",
        res.constant, res.iterations, res.residual
    ));
    Ok(res.constant)
}

pub fn run(cfg: &FileConfig, out: Option<&Path>) -> i32 {
    let cc = match &cfg.classify {
        Some(c) => *c,
        None => {
            eprintln!("config error: classify needs a \"classify\" block");
            return EXIT_CONFIG;
        }
    };
    let params = match cfg.model.params() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };

    let (verdict, constants) = if balanced(&params) {
        let pi_star = match cc.pi_star {
            Some(v) => v,
            None if cc.estimate_constants => {
                let spec = match ObjectiveSpec::pi(params, 0.5) {
                    Ok(s) => s,
                    Err(e) => {
                        eprintln!("config error: {e}");
                        return EXIT_CONFIG;
                    }
                };
                match estimated_constant(spec, cfg) {
                    Ok(v) => v,
                    Err(e) => {
                        eprintln!("config error: {e}");
                        return EXIT_CONFIG;
                    }
                }
            }
            None => {
                eprintln!(
                    "missing constants: the balanced-pair dichotomy needs classify.pi_star \
                     (or classify.estimate_constants = true)"
                );
                return EXIT_MISSING_CONSTANTS;
            }
        };
        let v = match theorem13_verdict(cc.mass1, cc.mass2, pi_star, &params, cc.tol) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("config error: {e}");
                return EXIT_CONFIG;
            }
        };
        (v, json!({ "pi_star": pi_star }))
    } else {
        let (da, db) = default_alpha_beta(&params);
        let alpha = cc.alpha.unwrap_or(da);
        let beta = cc.beta.unwrap_or(db);
        let lambda_star = match cc.lambda_star {
            Some(v) => v,
            None if cc.estimate_constants => {
                let spec = match ObjectiveSpec::lambda(params, alpha, beta) {
                    Ok(s) => s,
                    Err(e) => {
                        eprintln!("config error: {e}");
                        return EXIT_CONFIG;
                    }
                };
                match estimated_constant(spec, cfg) {
                    Ok(v) => v,
                    Err(e) => {
                        eprintln!("config error: {e}");
                        return EXIT_CONFIG;
                    }
                }
            }
            None => {
                eprintln!(
                    "missing constants: the two-exponent criterion needs classify.lambda_star \
                     (or classify.estimate_constants = true)"
                );
                return EXIT_MISSING_CONSTANTS;
            }
        };

        // Norms and initial energy either given directly or measured from
        // the configured initial data.
        let data = match (cc.norm_m1, cc.norm_m2, cc.f0) {
            (Some(n1), Some(n2), Some(f0)) => Theorem12Data {
                mass1: cc.mass1,
                mass2: cc.mass2,
                norm_m1: n1,
                norm_m2: n2,
                f0,
            },
            _ => {
                let (Some(s1), Some(s2)) = (&cfg.data1, &cfg.data2) else {
                    eprintln!(
                        "config error: give classify.norm_m1/norm_m2/f0 or data1/data2 blocks"
                    );
                    return EXIT_CONFIG;
                };
                let grid = match cfg.grid.build(&params) {
                    Ok(g) => g,
                    Err(e) => {
                        eprintln!("{e}");
                        return EXIT_CONFIG;
                    }
                };
                let built = make(s1, &grid, None).and_then(|u1| {
                    let u2 = make(s2, &Arc::clone(&grid), None)?;
                    let rep = free_energy(&u1, &u2, &params)?;
                    Ok(Theorem12Data {
                        mass1: rep.mass1,
                        mass2: rep.mass2,
                        norm_m1: rep.lm1,
                        norm_m2: rep.lm2,
                        f0: rep.free_energy,
                    })
                });
                match built {
                    Ok(d) => d,
                    Err(e) => {
                        eprintln!("config error: {e}");
                        return EXIT_CONFIG;
                    }
                }
            }
        };

        let v = match theorem12_verdict(
            &data,
            &params,
            alpha,
            beta,
            lambda_star,
            cc.theta_scan,
            cc.tol,
        ) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("config error: {e}");
                return EXIT_CONFIG;
            }
        };
        (
            v,
            json!({ "lambda_star": lambda_star, "alpha": alpha, "beta": beta }),
        )
    };

    let payload = json!({
        "verdict": verdict,
        "constants": constants,
        "mass1": cc.mass1,
        "mass2": cc.mass2,
    });
    if emit_json(out, "classify.json", &envelope("classify", payload)).is_err() {
        eprintln!("config error: cannot write to the output directory");
        return EXIT_CONFIG;
    }
    EXIT_OK
}
