//! `simulate`: raw coincidence-count emission, one CSV per configured state
//! over the four steering setting pairs; `--tomo` additionally emits counts
//! over the nine tomography basis pairs.

use steercert::labsim::{derive_seed, sample_counts_with_mode, tomography_bases};
use steercert::measurements::canonical_observables;
use steercert::states::{build_state, densify};

use crate::config::{RunConfig, SamplingMode};
use crate::output::{ensure_out_dir, write_file};
use crate::CliError;

pub fn run(cfg: &RunConfig, tomo: bool) -> Result<(), CliError> {
    if cfg.sampling == SamplingMode::Exact {
        return Err(CliError::Config(
            "sampling mode 'exact' produces no counts to emit".into(),
        ));
    }
    let out = ensure_out_dir(&cfg.out_dir)?;
    let mut row_index = 0u64;
    for &tag in &cfg.families {
        for &a in &cfg.a_values {
            row_index += 1;
            let family = super::family_instance(tag, a, 0.0)?;
            let rho_pure = densify(&build_state(&family));
            let canon = canonical_observables(&family);
            let seed = derive_seed(cfg.seed, 0x51CC_0000 | row_index);
            let (rho_v, alice_jit) =
                super::noisy_setup(cfg, cfg.visibility, &rho_pure, &canon.alice(), seed)?;
            let counts = sample_counts_with_mode(
                &rho_v,
                &alice_jit,
                &canon.bob(),
                &[(0, 0), (0, 1), (1, 0), (1, 1)],
                cfg.n_per_setting,
                seed,
                super::count_sampling(cfg.sampling),
            )?;
            let stem = format!("{}_a{:.4}", family.tag, a);
            write_file(&out.join(format!("counts_{stem}.csv")), &counts.to_csv())?;

            if tomo {
                let (t_alice, t_bob, t_pairs) = tomography_bases();
                let tomo_counts = sample_counts_with_mode(
                    &rho_v,
                    &t_alice,
                    &t_bob,
                    &t_pairs,
                    cfg.n_per_setting,
                    derive_seed(seed, 0x70),
                    super::count_sampling(cfg.sampling),
                )?;
                write_file(
                    &out.join(format!("tomo_counts_{stem}.csv")),
                    &tomo_counts.to_csv(),
                )?;
            }
        }
    }
    Ok(())
}
