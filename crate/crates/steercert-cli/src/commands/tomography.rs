//! `tomography`: reconstructs a two-qubit state from a counts CSV over the
//! nine Pauli basis pairs and writes `tomography.json`. An optional target
//! state (family, a, delta) adds the fidelity column.

use std::path::Path;

use steercert::labsim::{tomography, CountsTable};
use steercert::states::{build_state, densify, DensityMatrix, FamilyTag};

use crate::config::RunConfig;
use crate::output::{ensure_out_dir, write_json};
use crate::CliError;

pub fn run(
    cfg: &RunConfig,
    counts_path: &Path,
    family: Option<&str>,
    a: Option<f64>,
    delta: Option<f64>,
) -> Result<(), CliError> {
    let out = ensure_out_dir(&cfg.out_dir)?;
    let text = std::fs::read_to_string(counts_path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", counts_path.display())))?;
    let counts = CountsTable::from_csv(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", counts_path.display())))?;

    let target: Option<DensityMatrix> = match (family, a) {
        (Some(tag_str), Some(a)) => {
            let tag: FamilyTag = tag_str
                .parse()
                .map_err(|e: steercert::Error| CliError::Config(e.to_string()))?;
            let instance = super::family_instance(tag, a, delta.unwrap_or(0.0))?;
            Some(densify(&build_state(&instance)))
        }
        (None, None) => None,
        _ => {
            return Err(CliError::Config(
                "target needs both --family and --a".into(),
            ))
        }
    };

    let result = tomography(&counts, target.as_ref())?;
    write_json(&out.join("tomography.json"), &result)
}
