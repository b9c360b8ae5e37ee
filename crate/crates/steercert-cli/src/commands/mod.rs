//! Subcommand implementations.

pub mod certify;
pub mod nosignal;
pub mod robustness;
pub mod scan_fgsi;
pub mod selfcheck;
pub mod simulate;
pub mod tomography;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use steercert::labsim::{
    apply_noise, derive_seed, estimate_statistics, sample_counts_with_mode, CountSampling,
    NoiseModel,
};
use steercert::measurements::{joint_probability, DichotomicObservable};
use steercert::states::{DensityMatrix, FamilyTag, StateFamily};
use steercert::steering::SteeringStatistics;

use crate::config::{RunConfig, SamplingMode};
use crate::CliError;

pub(crate) fn family_instance(tag: FamilyTag, a: f64, delta: f64) -> Result<StateFamily, CliError> {
    StateFamily::new(tag, a, delta).map_err(|e| CliError::Config(e.to_string()))
}

pub(crate) fn noise_model(cfg: &RunConfig, visibility: f64) -> Result<NoiseModel, CliError> {
    NoiseModel::new(visibility, cfg.angle_jitter_sigma).map_err(|e| CliError::Config(e.to_string()))
}

/// Applies the configured noise to a state and Alice's observables (Bob's
/// observables stay at their trusted settings) using a stream derived from
/// the seed.
pub(crate) fn noisy_setup(
    cfg: &RunConfig,
    visibility: f64,
    rho: &DensityMatrix,
    alice: &[DichotomicObservable],
    seed: u64,
) -> Result<(DensityMatrix, Vec<DichotomicObservable>), CliError> {
    let model = noise_model(cfg, visibility)?;
    let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, 0x4E01));
    apply_noise(&model, rho, alice, &mut rng).map_err(CliError::from)
}

/// Steering statistics per the configured sampling mode: exact Born
/// probabilities, or estimated frequencies from one simulated counts table.
pub(crate) fn steering_statistics(
    cfg: &RunConfig,
    rho: &DensityMatrix,
    alice: &[DichotomicObservable],
    bob: &[DichotomicObservable],
    setting_pairs: &[(usize, usize)],
    seed: u64,
) -> Result<SteeringStatistics, CliError> {
    match cfg.sampling {
        SamplingMode::Exact => {
            SteeringStatistics::from_state(rho, alice, bob, setting_pairs).map_err(CliError::from)
        }
        SamplingMode::Multinomial | SamplingMode::Poisson => {
            let counts = sample_counts_with_mode(
                rho,
                alice,
                bob,
                setting_pairs,
                cfg.n_per_setting,
                seed,
                count_sampling(cfg.sampling),
            )?;
            estimate_statistics(&counts).map_err(CliError::from)
        }
    }
}

pub(crate) fn count_sampling(mode: SamplingMode) -> CountSampling {
    match mode {
        SamplingMode::Poisson => CountSampling::Poisson,
        _ => CountSampling::Multinomial,
    }
}

/// Tomographic reconstruction per the configured sampling mode.
pub(crate) fn tomography_result(
    cfg: &RunConfig,
    rho: &DensityMatrix,
    target: Option<&DensityMatrix>,
    seed: u64,
) -> Result<steercert::labsim::TomographyResult, CliError> {
    let (alice, bob, pairs) = steercert::labsim::tomography_bases();
    match cfg.sampling {
        SamplingMode::Exact => {
            let mut freqs = std::collections::BTreeMap::new();
            for &(i, j) in &pairs {
                freqs.insert(
                    (i, j),
                    [
                        joint_probability(rho, &alice[i], 0, &bob[j], 0),
                        joint_probability(rho, &alice[i], 0, &bob[j], 1),
                        joint_probability(rho, &alice[i], 1, &bob[j], 0),
                        joint_probability(rho, &alice[i], 1, &bob[j], 1),
                    ],
                );
            }
            steercert::labsim::tomography_from_frequencies(&freqs, target).map_err(CliError::from)
        }
        SamplingMode::Multinomial | SamplingMode::Poisson => {
            let counts = sample_counts_with_mode(
                rho,
                &alice,
                &bob,
                &pairs,
                cfg.n_per_setting,
                seed,
                count_sampling(cfg.sampling),
            )?;
            steercert::labsim::tomography(&counts, target).map_err(CliError::from)
        }
    }
}
