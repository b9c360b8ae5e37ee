//! `robustness`: fidelity-versus-bound sweep over families, state
//! coefficients, and visibilities, plus the operator-inequality margin and
//! lambda grids.
//!
//! Outputs: `robustness.csv` with columns
//! `family,a,v,S_observed,Q,fidelity_root,fidelity_sq,extractability_lb`,
//! `margins.csv` with `vartheta,min_eig_T,lambda0,lambda1`, and
//! `robustness_report.json` carrying the rows and both grids.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use steercert::labsim::derive_seed;
use steercert::measurements::canonical_observables;
use steercert::robustness::{
    extractability_estimate, lambda_x_grid, psd_margin_grid, q_bound, ChannelSearchConfig,
};
use steercert::states::{build_state, densify};
use steercert::steering::{certified_state, certify_with_family, fgsi_value, S_LHS};

use crate::config::RunConfig;
use crate::output::{ensure_out_dir, fmt, write_file, write_json};
use crate::CliError;

#[derive(Serialize)]
struct Row {
    family: String,
    a: f64,
    v: f64,
    s_observed: f64,
    q: f64,
    fidelity_root: f64,
    fidelity_sq: f64,
    extractability_lb: f64,
    a_est: f64,
}

#[derive(Serialize)]
struct Doc {
    lambda_max: f64,
    worst_psd_margin: f64,
    rows: Vec<Row>,
    psd_margin_grid: Vec<(f64, f64)>,
    lambda_x_grid: Vec<(f64, f64, f64)>,
    skipped_unsteerable: usize,
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let out = ensure_out_dir(&cfg.out_dir)?;
    let search = ChannelSearchConfig::default();

    let mut csv =
        String::from("family,a,v,S_observed,Q,fidelity_root,fidelity_sq,extractability_lb\n");
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    let mut row_index = 0u64;

    for &tag in &cfg.families {
        for &a in &cfg.a_values {
            for &v in &cfg.visibility_values {
                row_index += 1;
                let family = super::family_instance(tag, a, 0.0)?;
                let rho_pure = densify(&build_state(&family));
                let canon = canonical_observables(&family);
                let seed = derive_seed(cfg.seed, 0x10B0_0000 | row_index);
                let (rho_v, alice_jit) =
                    super::noisy_setup(cfg, v, &rho_pure, &canon.alice(), seed)?;
                let stats = super::steering_statistics(
                    cfg,
                    &rho_v,
                    &alice_jit,
                    &canon.bob(),
                    &[(0, 0), (1, 1)],
                    seed,
                )?;
                let s_observed = fgsi_value(&stats, 0, 0)?;
                if s_observed <= S_LHS {
                    skipped += 1;
                    continue;
                }
                let report = certify_with_family(&stats, tag)?;
                let target = certified_state(&report)?;
                let rho_test = densify(&target);
                let tomo = super::tomography_result(
                    cfg,
                    &rho_v,
                    Some(&rho_test),
                    derive_seed(seed, 0x70),
                )?;
                let fidelity_root = tomo.fidelity_to_target.expect("target provided");
                let q = q_bound(s_observed, FRAC_1_SQRT_2)?;
                let extractability_lb =
                    extractability_estimate(&tomo.rho_hat, &target, &search)?;
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    family.tag,
                    fmt(a),
                    fmt(v),
                    fmt(s_observed),
                    fmt(q),
                    fmt(fidelity_root),
                    fmt(fidelity_root * fidelity_root),
                    fmt(extractability_lb)
                ));
                rows.push(Row {
                    family: family.tag.to_string(),
                    a,
                    v,
                    s_observed,
                    q,
                    fidelity_root,
                    fidelity_sq: fidelity_root * fidelity_root,
                    extractability_lb,
                    a_est: report.a_est,
                });
            }
        }
    }

    let margins = psd_margin_grid(cfg.vartheta_grid)?;
    let lambdas = lambda_x_grid(cfg.vartheta_grid)?;
    let mut margins_csv = String::from("vartheta,min_eig_T,lambda0,lambda1\n");
    for ((vt, margin), (_, l0, l1)) in margins.iter().zip(&lambdas) {
        margins_csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt(*vt),
            fmt(*margin),
            fmt(*l0),
            fmt(*l1)
        ));
    }
    let worst = margins
        .iter()
        .map(|&(_, m)| m)
        .fold(f64::INFINITY, f64::min);

    if skipped > 0 {
        println!("skipped {skipped} unsteerable configurations (S <= S_LHS)");
    }
    write_file(&out.join("robustness.csv"), &csv)?;
    write_file(&out.join("margins.csv"), &margins_csv)?;
    write_json(
        &out.join("robustness_report.json"),
        &Doc {
            lambda_max: FRAC_1_SQRT_2,
            worst_psd_margin: worst,
            rows,
            psd_margin_grid: margins,
            lambda_x_grid: lambdas,
            skipped_unsteerable: skipped,
        },
    )
}
