//! Simulated coincidence-count experiment: finite-sample statistics, noise
//! models, two-qubit tomography, Monte Carlo error bars, and no-signaling
//! hypothesis tests.
//!
//! Determinism contract: every sampling entry point takes a `u64` seed and
//! derives per-pair / per-repetition streams with a splitmix-style hash, so
//! identical inputs give bit-identical outputs regardless of parallelism.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::measurements::{joint_probability, DichotomicObservable};
use crate::qlinalg::{kron, HermitianMatrix, SquareMatrix};
use crate::states::DensityMatrix;
use crate::steering::{JointProbs, SteeringStatistics};
use crate::{Error, Result};

/// Derives an independent stream seed from a base seed and an index
/// (splitmix64 finalizer over `seed + (index+1)*golden`).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Coincidence counts for one setting pair: `n[alpha*2 + beta]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub counts: [u64; 4],
    pub total: u64,
}

impl PairCounts {
    pub fn frequencies(&self) -> JointProbs {
        let n = self.total.max(1) as f64;
        JointProbs {
            p00: self.counts[0] as f64 / n,
            p01: self.counts[1] as f64 / n,
            p10: self.counts[2] as f64 / n,
            p11: self.counts[3] as f64 / n,
        }
    }
}

/// Raw output of the simulated experiment: integer coincidence counts per
/// setting pair, with the seed that produced them.
///
/// CSV schema: `pair_a,pair_b,n00,n01,n10,n11,N,seed`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsTable {
    pub pairs: BTreeMap<(usize, usize), PairCounts>,
    pub seed: u64,
}

impl CountsTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair_a,pair_b,n00,n01,n10,n11,N,seed\n");
        for (&(i, j), pc) in &self.pairs {
            out.push_str(&format!(
                "{i},{j},{},{},{},{},{},{}\n",
                pc.counts[0], pc.counts[1], pc.counts[2], pc.counts[3], pc.total, self.seed
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty counts file".into()))?;
        if header.trim() != "pair_a,pair_b,n00,n01,n10,n11,N,seed" {
            return Err(Error::Parse(format!("unexpected header '{header}'")));
        }
        let mut pairs = BTreeMap::new();
        let mut seed = 0u64;
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != 8 {
                return Err(Error::Parse(format!(
                    "line {}: expected 8 fields, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<u64> {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad integer '{s}'", lineno + 2)))
            };
            let i = parse(fields[0])? as usize;
            let j = parse(fields[1])? as usize;
            let counts = [
                parse(fields[2])?,
                parse(fields[3])?,
                parse(fields[4])?,
                parse(fields[5])?,
            ];
            let total = parse(fields[6])?;
            if counts.iter().sum::<u64>() != total {
                return Err(Error::Parse(format!(
                    "line {}: counts sum {} != N {}",
                    lineno + 2,
                    counts.iter().sum::<u64>(),
                    total
                )));
            }
            seed = parse(fields[7])?;
            pairs.insert((i, j), PairCounts { counts, total });
        }
        Ok(Self { pairs, seed })
    }
}

/// Laboratory noise: isotropic visibility loss plus independent Gaussian
/// jitter on every observable's polar angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub visibility: f64,
    pub angle_jitter_sigma: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            visibility: 1.0,
            angle_jitter_sigma: 0.0,
        }
    }
}

impl NoiseModel {
    pub fn new(visibility: f64, angle_jitter_sigma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::InvalidParameter(format!(
                "visibility {visibility} outside [0, 1]"
            )));
        }
        if !angle_jitter_sigma.is_finite() || angle_jitter_sigma < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "angle jitter sigma {angle_jitter_sigma} must be nonnegative"
            )));
        }
        Ok(Self {
            visibility,
            angle_jitter_sigma,
        })
    }
}

/// Applies the noise model: `rho -> v rho + (1-v) I/4` and each observable's
/// Bloch vector rotated about the y-axis by `2 * delta`, `delta` a Gaussian
/// draw with the model's sigma (equivalent to `theta -> theta + delta` for
/// x-z plane observables).
pub fn apply_noise(
    model: &NoiseModel,
    rho: &DensityMatrix,
    observables: &[DichotomicObservable],
    rng: &mut impl Rng,
) -> Result<(DensityMatrix, Vec<DichotomicObservable>)> {
    let dim = rho.dim();
    let v = model.visibility;
    let m = rho
        .matrix()
        .scale(Complex64::new(v, 0.0))
        .checked_add(
            &SquareMatrix::identity(dim).scale(Complex64::new((1.0 - v) / dim as f64, 0.0)),
        )?;
    let rho_noisy = DensityMatrix::from_matrix(m)?;

    let jittered = if model.angle_jitter_sigma == 0.0 {
        observables.to_vec()
    } else {
        let normal = Normal::new(0.0, model.angle_jitter_sigma)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        observables
            .iter()
            .map(|obs| {
                let delta = normal.sample(rng);
                let (s, c) = (2.0 * delta).sin_cos();
                let [nx, ny, nz] = obs.bloch();
                // rotation about the y-axis by 2*delta
                let bloch = [nx * c + nz * s, ny, nz * c - nx * s];
                DichotomicObservable::new(bloch, format!("{} (jittered)", obs.label))
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok((rho_noisy, jittered))
}

/// One multinomial draw by the conditional-binomial method.
fn multinomial(rng: &mut impl Rng, n: u64, probs: &[f64]) -> Vec<u64> {
    let total: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    let mut out = vec![0u64; probs.len()];
    let mut remaining_n = n;
    let mut remaining_p = 1.0f64;
    for (k, p) in probs.iter().enumerate() {
        if remaining_n == 0 {
            break;
        }
        if k == probs.len() - 1 {
            out[k] = remaining_n;
            break;
        }
        let p_norm = (p.max(0.0) / total).min(1.0);
        let cond = (p_norm / remaining_p).clamp(0.0, 1.0);
        let draw = if cond <= 0.0 {
            0
        } else if cond >= 1.0 {
            remaining_n
        } else {
            rand_distr::Binomial::new(remaining_n, cond)
                .expect("probability clamped to (0,1)")
                .sample(rng)
        };
        out[k] = draw;
        remaining_n -= draw;
        remaining_p = (remaining_p - p_norm).max(f64::MIN_POSITIVE);
    }
    out
}

/// How coincidence counts are drawn per setting pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountSampling {
    /// One multinomial draw of exactly `n` coincidences.
    Multinomial,
    /// Independent Poisson counts per outcome cell with mean `n * p`
    /// (sensitivity-check mode; the pair total then fluctuates around `n`).
    Poisson,
}

/// Draws one multinomial sample of `n` coincidences per requested setting
/// pair. Deterministic given the seed; each pair gets an independent derived
/// stream, so the table does not depend on evaluation order.
pub fn sample_counts(
    rho: &DensityMatrix,
    alice: &[DichotomicObservable],
    bob: &[DichotomicObservable],
    setting_pairs: &[(usize, usize)],
    n: u64,
    seed: u64,
) -> Result<CountsTable> {
    sample_counts_with_mode(
        rho,
        alice,
        bob,
        setting_pairs,
        n,
        seed,
        CountSampling::Multinomial,
    )
}

/// [`sample_counts`] with an explicit sampling mode.
pub fn sample_counts_with_mode(
    rho: &DensityMatrix,
    alice: &[DichotomicObservable],
    bob: &[DichotomicObservable],
    setting_pairs: &[(usize, usize)],
    n: u64,
    seed: u64,
    mode: CountSampling,
) -> Result<CountsTable> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one count".into()));
    }
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(rho.dim(), 4));
    }
    let mut pairs = BTreeMap::new();
    for (idx, &(i, j)) in setting_pairs.iter().enumerate() {
        let a = alice
            .get(i)
            .ok_or_else(|| Error::InvalidParameter(format!("no Alice setting {i}")))?;
        let b = bob
            .get(j)
            .ok_or_else(|| Error::InvalidParameter(format!("no Bob setting {j}")))?;
        let probs = [
            joint_probability(rho, a, 0, b, 0),
            joint_probability(rho, a, 0, b, 1),
            joint_probability(rho, a, 1, b, 0),
            joint_probability(rho, a, 1, b, 1),
        ];
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, idx as u64));
        let counts: Vec<u64> = match mode {
            CountSampling::Multinomial => multinomial(&mut rng, n, &probs),
            CountSampling::Poisson => probs
                .iter()
                .map(|&p| {
                    let mean = p.max(0.0) * n as f64;
                    if mean == 0.0 {
                        0
                    } else {
                        rand_distr::Poisson::new(mean)
                            .expect("positive mean")
                            .sample(&mut rng) as u64
                    }
                })
                .collect(),
        };
        let total = counts.iter().sum::<u64>();
        pairs.insert(
            (i, j),
            PairCounts {
                counts: [counts[0], counts[1], counts[2], counts[3]],
                total: match mode {
                    CountSampling::Multinomial => n,
                    CountSampling::Poisson => total,
                },
            },
        );
    }
    Ok(CountsTable { pairs, seed })
}

/// Maximum-likelihood frequencies `n/N` per pair; Alice marginals from the
/// row sums of the diagonal pair `(i,i)` where present, else the first pair
/// with that Alice setting. Sample sizes are carried for confidence
/// thresholds downstream.
pub fn estimate_statistics(counts: &CountsTable) -> Result<SteeringStatistics> {
    let mut pairs = BTreeMap::new();
    let mut counts_map = BTreeMap::new();
    for (&(i, j), pc) in &counts.pairs {
        pairs.insert((i, j), pc.frequencies());
        counts_map.insert((i, j), pc.total);
    }
    let mut marginals = BTreeMap::new();
    let alice_settings: std::collections::BTreeSet<usize> =
        counts.pairs.keys().map(|&(i, _)| i).collect();
    for i in alice_settings {
        let source = if counts.pairs.contains_key(&(i, i)) {
            (i, i)
        } else {
            *counts
                .pairs
                .keys()
                .find(|&&(ai, _)| ai == i)
                .expect("setting present")
        };
        let rows = pairs[&source].alice_row_sums();
        marginals.insert(i, rows);
    }
    SteeringStatistics::from_parts(pairs, marginals, Some(counts_map))
}

/// The nine tomography basis pairs: `sigma_x, sigma_y, sigma_z` on each side
/// (each pair yields four coincidence cells, 36 measured cells in total).
pub fn tomography_settings() -> Vec<(DichotomicObservable, DichotomicObservable)> {
    let bases = [
        DichotomicObservable::sigma_x(),
        DichotomicObservable::sigma_y(),
        DichotomicObservable::sigma_z(),
    ];
    let mut out = Vec::with_capacity(9);
    for a in &bases {
        for b in &bases {
            out.push((a.clone(), b.clone()));
        }
    }
    out
}

/// Alice/Bob basis lists plus the nine index pairs, in the layout
/// [`sample_counts`] expects.
pub fn tomography_bases() -> (
    Vec<DichotomicObservable>,
    Vec<DichotomicObservable>,
    Vec<(usize, usize)>,
) {
    let bases = vec![
        DichotomicObservable::sigma_x(),
        DichotomicObservable::sigma_y(),
        DichotomicObservable::sigma_z(),
    ];
    let mut pairs = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            pairs.push((i, j));
        }
    }
    (bases.clone(), bases, pairs)
}

/// Tomographic reconstruction result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TomographyResult {
    pub rho_hat: DensityMatrix,
    pub fidelity_to_target: Option<f64>,
    pub purity: f64,
    pub settings_used: usize,
}

/// Linear inversion from Pauli expectation estimates followed by projection
/// onto the nearest PSD unit-trace matrix (eigenvalue simplex projection in
/// Frobenius distance).
pub fn tomography(counts: &CountsTable, target: Option<&DensityMatrix>) -> Result<TomographyResult> {
    let mut freqs = BTreeMap::new();
    for (&(i, j), pc) in &counts.pairs {
        let f = pc.frequencies();
        freqs.insert((i, j), [f.p00, f.p01, f.p10, f.p11]);
    }
    tomography_from_frequencies(&freqs, target)
}

/// Tomography from outcome frequencies keyed by basis-index pair
/// `(i, j) in {0: sigma_x, 1: sigma_y, 2: sigma_z}^2`. Injecting exact
/// probabilities reproduces the state exactly (linear inversion is exact in
/// the infinite-sample limit).
pub fn tomography_from_frequencies(
    freqs: &BTreeMap<(usize, usize), [f64; 4]>,
    target: Option<&DensityMatrix>,
) -> Result<TomographyResult> {
    for i in 0..3 {
        for j in 0..3 {
            if !freqs.contains_key(&(i, j)) {
                return Err(Error::MissingSettings(format!(
                    "basis pair ({i},{j}) absent; all nine Pauli basis pairs are required"
                )));
            }
        }
    }
    // exp[i][j]: i,j in 0..4 with 0 = identity, 1..3 = sx, sy, sz
    let mut exp = [[0.0f64; 4]; 4];
    exp[0][0] = 1.0;
    let mut local_a = [0.0f64; 4];
    let mut local_b = [0.0f64; 4];
    for i in 0..3 {
        for j in 0..3 {
            let f = freqs[&(i, j)];
            exp[i + 1][j + 1] = f[0] - f[1] - f[2] + f[3];
            local_a[i + 1] += (f[0] + f[1] - f[2] - f[3]) / 3.0;
            local_b[j + 1] += (f[0] - f[1] + f[2] - f[3]) / 3.0;
        }
    }
    for k in 1..4 {
        exp[k][0] = local_a[k];
        exp[0][k] = local_b[k];
    }

    let paulis = [
        SquareMatrix::identity(2),
        crate::qlinalg::pauli_x(),
        crate::qlinalg::pauli_y(),
        crate::qlinalg::pauli_z(),
    ];
    let mut rho_lin = SquareMatrix::zeros(4);
    for i in 0..4 {
        for j in 0..4 {
            if exp[i][j] == 0.0 {
                continue;
            }
            let term = kron(&paulis[i], &paulis[j])?.scale(Complex64::new(exp[i][j] / 4.0, 0.0));
            rho_lin = rho_lin.checked_add(&term)?;
        }
    }

    let herm = HermitianMatrix::symmetrize(&rho_lin);
    let dec = crate::qlinalg::eigh(&herm);
    let projected = simplex_project(&dec.values);
    let mut m = SquareMatrix::zeros(4);
    for k in 0..4 {
        if projected[k] == 0.0 {
            continue;
        }
        for r in 0..4 {
            for c in 0..4 {
                let v = m.get(r, c)
                    + dec.vectors.get(r, k) * dec.vectors.get(c, k).conj() * projected[k];
                m.set(r, c, v);
            }
        }
    }
    let rho_hat = DensityMatrix::from_matrix(m)?;
    let fidelity_to_target = match target {
        Some(t) => Some(rho_hat.fidelity_root(t)?),
        None => None,
    };
    let purity = rho_hat.purity();
    Ok(TomographyResult {
        rho_hat,
        fidelity_to_target,
        purity,
        settings_used: 9,
    })
}

/// Euclidean projection of a real vector onto the probability simplex.
fn simplex_project(values: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    let mut k = 0;
    for (idx, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (idx + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
            k = idx + 1;
        }
    }
    debug_assert!(k > 0);
    values.iter().map(|&v| (v - tau).max(0.0)).collect()
}

/// One marginal comparison of the no-signaling test.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MarginalComparison {
    pub b_setting: usize,
    pub beta: u8,
    /// Bob's marginal estimated from Alice setting 0.
    pub p_alice0: f64,
    /// Bob's marginal estimated from Alice setting 1.
    pub p_alice1: f64,
    pub n0: u64,
    pub n1: u64,
    pub z: f64,
}

/// No-signaling test report: Bob's marginals must be independent of Alice's
/// setting within `threshold` standard deviations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoSignalingReport {
    pub comparisons: Vec<MarginalComparison>,
    pub max_z: f64,
    pub threshold: f64,
    pub pass: bool,
    pub seed: u64,
}

/// Two-proportion z-score per (Bob setting, outcome) between Alice settings
/// 0 and 1: `|p0 - p1| / sqrt(p0(1-p0)/N0 + p1(1-p1)/N1)`. Equal degenerate
/// marginals give z = 0; otherwise degenerate arms get a continuity floor of
/// `1/(2N)` on the variance-defining proportion.
pub fn no_signaling_test(counts: &CountsTable, threshold: f64) -> Result<NoSignalingReport> {
    let mut comparisons = Vec::new();
    for j in [0usize, 1] {
        let pc0 = counts
            .pairs
            .get(&(0, j))
            .ok_or(Error::MissingSettingPair(0, j))?;
        let pc1 = counts
            .pairs
            .get(&(1, j))
            .ok_or(Error::MissingSettingPair(1, j))?;
        for beta in [0u8, 1] {
            let col = |pc: &PairCounts| {
                (pc.counts[beta as usize] + pc.counts[2 + beta as usize]) as f64
                    / pc.total.max(1) as f64
            };
            let (p0, p1) = (col(pc0), col(pc1));
            let z = if (p0 - p1).abs() == 0.0 {
                0.0
            } else {
                let floor0 = 0.5 / pc0.total.max(1) as f64;
                let floor1 = 0.5 / pc1.total.max(1) as f64;
                let q0 = p0.clamp(floor0, 1.0 - floor0);
                let q1 = p1.clamp(floor1, 1.0 - floor1);
                let var = q0 * (1.0 - q0) / pc0.total.max(1) as f64
                    + q1 * (1.0 - q1) / pc1.total.max(1) as f64;
                (p0 - p1).abs() / var.sqrt()
            };
            comparisons.push(MarginalComparison {
                b_setting: j,
                beta,
                p_alice0: p0,
                p_alice1: p1,
                n0: pc0.total,
                n1: pc1.total,
                z,
            });
        }
    }
    let max_z = comparisons.iter().map(|c| c.z).fold(0.0, f64::max);
    Ok(NoSignalingReport {
        comparisons,
        max_z,
        threshold,
        pass: max_z <= threshold,
        seed: counts.seed,
    })
}

/// Re-simulation Monte Carlo: draws `reps` fresh counts tables from derived
/// seeds, evaluates the pipeline on each, and returns the sample mean and
/// (n-1) standard deviation. Repetitions run in parallel with a
/// deterministic, order-independent reduction.
pub fn monte_carlo_error<F>(
    pipeline: F,
    rho: &DensityMatrix,
    alice: &[DichotomicObservable],
    bob: &[DichotomicObservable],
    setting_pairs: &[(usize, usize)],
    n: u64,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64)>
where
    F: Fn(&CountsTable) -> Result<f64> + Sync,
{
    if reps < 2 {
        return Err(Error::InvalidParameter("need at least 2 repetitions".into()));
    }
    let values: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let counts = sample_counts(
                rho,
                alice,
                bob,
                setting_pairs,
                n,
                derive_seed(seed, 0x4D43_0000 + r as u64),
            )?;
            pipeline(&counts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = values.iter().sum::<f64>() / reps as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (reps - 1) as f64;
    Ok((mean, var.sqrt()))
}
