//! Observables, projectors, joint/conditional probabilities, assemblages,
//! and the polarization-optics unitaries.
//!
//! Outcome convention, used everywhere: outcome 0 is the +1 eigenspace of the
//! observable. For the psi families (A_0 = -sigma_z) Alice's outcome 0
//! therefore projects onto `|1>`; this single global convention places the
//! maximal FGSI violation at outcomes alpha = beta = 0 for every family.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::qlinalg::{
    kron, partial_trace_first, pauli_x, pauli_y, pauli_z, HermitianMatrix, SquareMatrix,
};
use crate::states::{DensityMatrix, FamilyTag, StateFamily};
use crate::{Error, Result, PSD_TOL};

/// A two-outcome qubit observable `n · sigma` with a unit Bloch vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomicObservable {
    bloch: [f64; 3],
    pub label: String,
}

impl DichotomicObservable {
    pub fn new(bloch: [f64; 3], label: impl Into<String>) -> Result<Self> {
        if bloch.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = (bloch[0] * bloch[0] + bloch[1] * bloch[1] + bloch[2] * bloch[2]).sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            bloch,
            label: label.into(),
        })
    }

    pub fn sigma_z() -> Self {
        Self::new([0.0, 0.0, 1.0], "sigma_z").expect("unit")
    }

    pub fn minus_sigma_z() -> Self {
        Self::new([0.0, 0.0, -1.0], "-sigma_z").expect("unit")
    }

    pub fn sigma_x() -> Self {
        Self::new([1.0, 0.0, 0.0], "sigma_x").expect("unit")
    }

    pub fn sigma_y() -> Self {
        Self::new([0.0, 1.0, 0.0], "sigma_y").expect("unit")
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    /// The observable matrix `n_x sigma_x + n_y sigma_y + n_z sigma_z`.
    pub fn matrix(&self) -> SquareMatrix {
        let [nx, ny, nz] = self.bloch;
        let mut m = pauli_x().scale(Complex64::new(nx, 0.0));
        m = m
            .checked_add(&pauli_y().scale(Complex64::new(ny, 0.0)))
            .expect("dim 2");
        m.checked_add(&pauli_z().scale(Complex64::new(nz, 0.0)))
            .expect("dim 2")
    }
}

/// Eigenprojector `(1 + (-1)^outcome n·sigma)/2`; outcome 0 is the +1 eigenspace.
pub fn projector(obs: &DichotomicObservable, outcome: u8) -> HermitianMatrix {
    let sign = if outcome == 0 { 1.0 } else { -1.0 };
    let m = SquareMatrix::identity(2)
        .checked_add(&obs.matrix().scale(Complex64::new(sign, 0.0)))
        .expect("dim 2")
        .scale(Complex64::new(0.5, 0.0));
    HermitianMatrix::new(m).expect("projector of a real Bloch vector is Hermitian")
}

/// Observable in the x-z plane: `cos(2 theta) sigma_z + sin(2 theta) sigma_x`.
pub fn observable_from_angle(theta: f64) -> DichotomicObservable {
    let (s, c) = (2.0 * theta).sin_cos();
    DichotomicObservable::new([s, 0.0, c], format!("A(theta={theta:.6})")).expect("unit")
}

/// Phase-adapted scan observable for the `phi_delta` family: Bloch vector
/// `(sin2theta cos delta, sin2theta sin delta, cos2theta)`, i.e. the matrix
/// `[[cos2theta, e^{-i delta} sin2theta], [e^{i delta} sin2theta, -cos2theta]]`.
pub fn observable_from_angle_with_phase(theta: f64, delta: f64) -> DichotomicObservable {
    let (s, c) = (2.0 * theta).sin_cos();
    let (sd, cd) = delta.sin_cos();
    DichotomicObservable::new(
        [s * cd, s * sd, c],
        format!("A(theta={theta:.6},delta={delta:.6})"),
    )
    .expect("unit")
}

/// The violation-maximizing angle for `A_1`: `theta_max = arccos(1 - 2a^2)/2`,
/// in [0, pi/2].
pub fn theta_max(a: f64) -> Result<f64> {
    if !a.is_finite() || a <= 0.0 || a >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "a = {a} must lie in (0, 1)"
        )));
    }
    Ok(0.5 * (1.0 - 2.0 * a * a).clamp(-1.0, 1.0).acos())
}

/// The four canonical observables for a family instance.
#[derive(Debug, Clone)]
pub struct CanonicalObservables {
    pub a0: DichotomicObservable,
    pub a1: DichotomicObservable,
    pub b0: DichotomicObservable,
    pub b1: DichotomicObservable,
}

impl CanonicalObservables {
    pub fn alice(&self) -> [DichotomicObservable; 2] {
        [self.a0.clone(), self.a1.clone()]
    }

    pub fn bob(&self) -> [DichotomicObservable; 2] {
        [self.b0.clone(), self.b1.clone()]
    }
}

/// Canonical measurement assignments:
/// `A_0 = sigma_z` for the phi families, `-sigma_z` for the psi families;
/// `A_1 = (1-2a^2) sigma_z ± 2a sqrt(1-a^2) sigma_x` with the family's sign;
/// Bob always measures `B_0 = sigma_z`, `B_1 = sigma_x`. For `phi_delta` the
/// `A_1` Bloch vector carries the extra `e^{-i delta}` phase.
pub fn canonical_observables(family: &StateFamily) -> CanonicalObservables {
    let a = family.a;
    let nz = 1.0 - 2.0 * a * a;
    let nx = family.tag.sign() * 2.0 * a * (1.0 - a * a).sqrt();
    let a0 = if family.tag.is_psi() {
        DichotomicObservable::minus_sigma_z()
    } else {
        DichotomicObservable::sigma_z()
    };
    let a1 = if family.tag == FamilyTag::PhiDelta {
        let theta = theta_max(a).expect("a validated by StateFamily");
        observable_from_angle_with_phase(theta, family.delta)
    } else {
        DichotomicObservable::new([nx, 0.0, nz], format!("A1(a={a:.6})"))
            .expect("(1-2a^2)^2 + 4a^2(1-a^2) = 1")
    };
    CanonicalObservables {
        a0,
        a1,
        b0: DichotomicObservable::sigma_z(),
        b1: DichotomicObservable::sigma_x(),
    }
}

/// `p(alpha beta| A B) = Tr[(P_alpha ⊗ P_beta) rho]` for a two-qubit state.
pub fn joint_probability(
    rho: &DensityMatrix,
    a: &DichotomicObservable,
    alpha: u8,
    b: &DichotomicObservable,
    beta: u8,
) -> f64 {
    let op = kron(projector(a, alpha).matrix(), projector(b, beta).matrix()).expect("dim 2");
    (&op * rho.matrix()).trace().re.clamp(0.0, 1.0)
}

/// Alice's marginal `p(alpha|A) = Tr[(P_alpha ⊗ 1) rho]`.
pub fn alice_marginal(rho: &DensityMatrix, a: &DichotomicObservable, alpha: u8) -> f64 {
    let op = kron(projector(a, alpha).matrix(), &SquareMatrix::identity(2)).expect("dim 2");
    (&op * rho.matrix()).trace().re.clamp(0.0, 1.0)
}

/// `p(beta_B | alpha_A)`, the probability of Bob's outcome given Alice's.
/// A vanishing Alice marginal leaves the conditional undefined and is raised,
/// never silently zero.
pub fn conditional_probability(
    rho: &DensityMatrix,
    b: &DichotomicObservable,
    beta: u8,
    a: &DichotomicObservable,
    alpha: u8,
) -> Result<f64> {
    let marginal = alice_marginal(rho, a, alpha);
    if marginal <= 1e-12 {
        return Err(Error::VanishingMarginal(0, alpha, marginal));
    }
    Ok(joint_probability(rho, a, alpha, b, beta) / marginal)
}

/// Bob-side subnormalized conditional operators for one Alice setting:
/// `sigma_{alpha|A} = Tr_A[(P_alpha ⊗ 1) rho]`, returned for outcomes 0 and 1.
pub fn assemblage(rho: &DensityMatrix, a: &DichotomicObservable) -> [HermitianMatrix; 2] {
    let build = |alpha: u8| {
        let op = kron(projector(a, alpha).matrix(), &SquareMatrix::identity(2)).expect("dim 2");
        let m = partial_trace_first(&(&op * rho.matrix())).expect("dim 4");
        HermitianMatrix::symmetrize(&m)
    };
    [build(0), build(1)]
}

/// An assemblage over several Alice settings: the map from (setting index,
/// outcome) to the subnormalized conditional operator on Bob's side.
///
/// Invariants checked by [`Assemblage::validate`]: every element is PSD, and
/// the two outcomes of every setting sum to one and the same reduced state
/// (assemblage-level no-signaling).
#[derive(Debug, Clone)]
pub struct Assemblage {
    elements: BTreeMap<(usize, u8), HermitianMatrix>,
}

impl Assemblage {
    pub fn from_state(rho: &DensityMatrix, settings: &[DichotomicObservable]) -> Result<Self> {
        if rho.dim() != 4 {
            return Err(Error::DimensionMismatch(rho.dim(), 4));
        }
        let mut elements = BTreeMap::new();
        for (i, obs) in settings.iter().enumerate() {
            let [s0, s1] = assemblage(rho, obs);
            elements.insert((i, 0), s0);
            elements.insert((i, 1), s1);
        }
        Ok(Self { elements })
    }

    pub fn element(&self, setting: usize, outcome: u8) -> Option<&HermitianMatrix> {
        self.elements.get(&(setting, outcome))
    }

    pub fn settings(&self) -> impl Iterator<Item = usize> + '_ {
        self.elements
            .keys()
            .filter(|&&(_, outcome)| outcome == 0)
            .map(|&(i, _)| i)
    }

    /// Checks element positivity and that each setting's outcome sum equals
    /// the same reduced state within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let mut reference: Option<SquareMatrix> = None;
        for (&(i, _), _) in self.elements.iter().filter(|&(&(_, o), _)| o == 0) {
            let s0 = self
                .elements
                .get(&(i, 0))
                .ok_or(Error::MissingSettingPair(i, 0))?;
            let s1 = self
                .elements
                .get(&(i, 1))
                .ok_or(Error::MissingSettingPair(i, 1))?;
            for s in [s0, s1] {
                let min = crate::qlinalg::min_eigenvalue(s);
                if min < -PSD_TOL {
                    return Err(Error::NotPositiveSemidefinite(min));
                }
            }
            let sum = s0.matrix().checked_add(s1.matrix())?;
            match &reference {
                None => reference = Some(sum),
                Some(r) => {
                    let dev = r.max_abs_diff(&sum);
                    if dev > tol {
                        return Err(Error::InconsistentStatistics(format!(
                            "assemblage outcome sums differ across settings by {dev:.3e}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Half-wave plate at angle `chi`: `[[cos2chi, sin2chi], [sin2chi, -cos2chi]]`.
pub fn hwp(chi: f64) -> SquareMatrix {
    let (s, c) = (2.0 * chi).sin_cos();
    SquareMatrix::from_real(2, &[c, s, s, -c]).expect("dim 2")
}

/// Quarter-wave plate at angle `chi`:
/// `[[cos^2 chi + i sin^2 chi, (1-i) sin chi cos chi], [(1-i) sin chi cos chi, sin^2 chi + i cos^2 chi]]`.
pub fn qwp(chi: f64) -> SquareMatrix {
    let (s, c) = chi.sin_cos();
    let off = Complex64::new(1.0, -1.0) * Complex64::new(s * c, 0.0);
    SquareMatrix::new(
        2,
        vec![
            Complex64::new(c * c, s * s),
            off,
            off,
            Complex64::new(s * s, c * c),
        ],
    )
    .expect("dim 2")
}

/// The phase-removal operation `U_delta = diag(1, e^{-i delta})`, which maps
/// `phi_delta` to `phi_{delta=0}` when applied on Alice's side.
pub fn u_delta(delta: f64) -> SquareMatrix {
    SquareMatrix::new(
        2,
        vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::from_polar(1.0, -delta),
        ],
    )
    .expect("dim 2")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaveplateElement {
    Hwp(f64),
    Qwp(f64),
}

impl WaveplateElement {
    pub fn matrix(self) -> SquareMatrix {
        match self {
            WaveplateElement::Hwp(chi) => hwp(chi),
            WaveplateElement::Qwp(chi) => qwp(chi),
        }
    }
}

/// Composes wave plates in optical order: the first listed element acts
/// first, so the product is `E_n ... E_2 E_1`.
pub fn waveplate_sequence(elements: &[WaveplateElement]) -> SquareMatrix {
    let mut acc = SquareMatrix::identity(2);
    for e in elements {
        acc = &e.matrix() * &acc;
    }
    acc
}

/// The measurement-side plate sequence realizing `U_delta` on Alice's photon:
/// HWP(0), QWP(-45deg), HWP(delta/4), QWP(-45deg), applied in that order.
pub fn u_delta_waveplates(delta: f64) -> [WaveplateElement; 4] {
    [
        WaveplateElement::Hwp(0.0),
        WaveplateElement::Qwp(-FRAC_PI_4),
        WaveplateElement::Hwp(delta / 4.0),
        WaveplateElement::Qwp(-FRAC_PI_4),
    ]
}

/// The preparation-side plate sequence (QWPs at +45deg) from the same optical
/// layout; provided for completeness and exercised only for unitarity, since
/// it acts on a different optical convention.
pub fn preparation_waveplates(delta: f64) -> [WaveplateElement; 4] {
    [
        WaveplateElement::Hwp(0.0),
        WaveplateElement::Qwp(FRAC_PI_4),
        WaveplateElement::Hwp(delta / 4.0),
        WaveplateElement::Qwp(FRAC_PI_4),
    ]
}

/// Maximum entrywise deviation between two unitaries after aligning global
/// phase on the first entry of `reference` with magnitude above 1e-12.
/// Optical sequences realize operators only projectively.
pub fn phase_aligned_distance(candidate: &SquareMatrix, reference: &SquareMatrix) -> Result<f64> {
    if candidate.dim() != reference.dim() {
        return Err(Error::DimensionMismatch(candidate.dim(), reference.dim()));
    }
    let idx = reference
        .entries()
        .iter()
        .position(|z| z.norm() > 1e-12)
        .ok_or_else(|| Error::InvalidParameter("reference matrix is zero".into()))?;
    let cand_entry = candidate.entries()[idx];
    if cand_entry.norm() < 1e-12 {
        return Ok(candidate.max_abs_diff(reference));
    }
    let phase = reference.entries()[idx] / cand_entry;
    let phase = phase / Complex64::new(phase.norm(), 0.0);
    Ok(candidate.scale(phase).max_abs_diff(reference))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{build_state, densify, StateFamily};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_8, PI};

    #[test]
    fn projector_convention_anchor() {
        // (sigma_z, outcome 0) -> |0><0|
        let p = projector(&DichotomicObservable::sigma_z(), 0);
        let expect = SquareMatrix::from_real(2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(p.matrix().max_abs_diff(&expect) < 1e-15);
        // (sigma_x, outcome 1) -> |-><-|
        let p = projector(&DichotomicObservable::sigma_x(), 1);
        let expect = SquareMatrix::from_real(2, &[0.5, -0.5, -0.5, 0.5]).unwrap();
        assert!(p.matrix().max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn projector_of_tilted_observable_is_idempotent() {
        let obs = observable_from_angle(FRAC_PI_8);
        let p = projector(&obs, 0);
        let sq = p.matrix() * p.matrix();
        assert!(sq.max_abs_diff(p.matrix()) < 1e-12);
        // completeness
        let sum = projector(&obs, 0)
            .matrix()
            .checked_add(projector(&obs, 1).matrix())
            .unwrap();
        assert!(sum.max_abs_diff(&SquareMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn observable_from_angle_anchors() {
        assert!(observable_from_angle(0.0)
            .matrix()
            .max_abs_diff(&pauli_z())
            < 1e-15);
        assert!(observable_from_angle(FRAC_PI_4)
            .matrix()
            .max_abs_diff(&pauli_x())
            < 1e-12);
        let b = observable_from_angle(FRAC_PI_8).bloch();
        assert!((b[0] - FRAC_1_SQRT_2).abs() < 1e-12 && (b[2] - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn theta_max_values() {
        assert!((theta_max(FRAC_1_SQRT_2).unwrap() - FRAC_PI_4).abs() < 1e-12);
        assert!((theta_max(0.5).unwrap() - PI / 6.0).abs() < 1e-12);
        assert!((theta_max(1.0 - 1e-12).unwrap() - FRAC_PI_2).abs() < 1e-5);
        assert!(theta_max(0.0).is_err());
    }

    #[test]
    fn canonical_observables_per_family() {
        let f = StateFamily::phi_plus(0.8).unwrap();
        let obs = canonical_observables(&f);
        let b = obs.a1.bloch();
        assert!((b[0] - 0.96).abs() < 1e-12 && (b[2] + 0.28).abs() < 1e-12);
        assert_eq!(obs.a0.bloch(), [0.0, 0.0, 1.0]);
        assert_eq!(obs.b0.bloch(), [0.0, 0.0, 1.0]);
        assert_eq!(obs.b1.bloch(), [1.0, 0.0, 0.0]);

        let f = StateFamily::psi_plus(0.6).unwrap();
        assert_eq!(canonical_observables(&f).a0.bloch(), [0.0, 0.0, -1.0]);

        let f = StateFamily::phi_plus(FRAC_1_SQRT_2).unwrap();
        let obs = canonical_observables(&f);
        assert!(obs.a1.matrix().max_abs_diff(&pauli_x()) < 1e-9);
    }

    #[test]
    fn canonical_a1_is_unit_length_across_a_grid() {
        for i in 1..100 {
            let a = i as f64 / 100.0;
            for ctor in [StateFamily::phi_plus, StateFamily::psi_minus] {
                let obs = canonical_observables(&ctor(a).unwrap());
                let b = obs.a1.bloch();
                let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn joint_probability_anchors() {
        let rho = densify(&build_state(&StateFamily::phi_plus(0.6).unwrap()));
        let z = DichotomicObservable::sigma_z();
        assert!((joint_probability(&rho, &z, 0, &z, 0) - 0.36).abs() < 1e-12);

        let zero = Complex64::new(0.0, 0.0);
        let ket00 = crate::states::PureState::new([Complex64::new(1.0, 0.0), zero, zero, zero])
            .unwrap();
        let rho00 = densify(&ket00);
        assert!((joint_probability(&rho00, &z, 0, &z, 0) - 1.0).abs() < 1e-12);

        let bell = densify(&build_state(&StateFamily::phi_plus(FRAC_1_SQRT_2).unwrap()));
        let x = DichotomicObservable::sigma_x();
        assert!((joint_probability(&bell, &x, 0, &x, 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn four_outcomes_sum_to_one() {
        let rho = densify(&build_state(&StateFamily::psi_minus(0.37).unwrap()));
        let a = observable_from_angle(0.9);
        let b = observable_from_angle(0.2);
        let total: f64 = (0..2)
            .flat_map(|al| (0..2).map(move |be| (al, be)))
            .map(|(al, be)| joint_probability(&rho, &a, al as u8, &b, be as u8))
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn conditional_probability_anchors() {
        let f = StateFamily::phi_plus(0.6).unwrap();
        let rho = densify(&build_state(&f));
        let obs = canonical_observables(&f);
        let p = conditional_probability(&rho, &obs.b0, 0, &obs.a0, 0).unwrap();
        assert!((p - 1.0).abs() < 1e-12);

        // |00>: p(0_x | 0_z) = 1/2
        let zero = Complex64::new(0.0, 0.0);
        let rho00 = densify(
            &crate::states::PureState::new([Complex64::new(1.0, 0.0), zero, zero, zero]).unwrap(),
        );
        let p = conditional_probability(
            &rho00,
            &DichotomicObservable::sigma_x(),
            0,
            &DichotomicObservable::sigma_z(),
            0,
        )
        .unwrap();
        assert!((p - 0.5).abs() < 1e-12);

        // psi family under the outcome convention
        let f = StateFamily::psi_plus(0.6).unwrap();
        let rho = densify(&build_state(&f));
        let obs = canonical_observables(&f);
        let p = conditional_probability(&rho, &obs.b0, 0, &obs.a0, 0).unwrap();
        assert!((p - 1.0).abs() < 1e-12);

        // vanishing marginal raises
        let err = conditional_probability(
            &rho00,
            &DichotomicObservable::sigma_x(),
            0,
            &DichotomicObservable::sigma_z(),
            1,
        );
        assert!(matches!(err, Err(Error::VanishingMarginal(_, _, _))));
    }

    #[test]
    fn assemblage_of_bell_state() {
        let bell = densify(&build_state(&StateFamily::phi_plus(FRAC_1_SQRT_2).unwrap()));
        let [s0, _s1] = assemblage(&bell, &DichotomicObservable::sigma_z());
        let expect = SquareMatrix::from_real(2, &[0.5, 0.0, 0.0, 0.0]).unwrap();
        assert!(s0.matrix().max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn assemblage_completeness_and_validation() {
        let rho = densify(&build_state(&StateFamily::phi_minus(0.42).unwrap()));
        let settings = [observable_from_angle(0.3), observable_from_angle(1.1)];
        let asm = Assemblage::from_state(&rho, &settings).unwrap();
        asm.validate(1e-9).unwrap();
        // sum over outcomes equals Tr_A rho
        let [s0, s1] = assemblage(&rho, &settings[0]);
        let sum = s0.matrix().checked_add(s1.matrix()).unwrap();
        let reduced = partial_trace_first(rho.matrix()).unwrap();
        assert!(sum.max_abs_diff(&reduced) < 1e-12);
    }

    #[test]
    fn product_state_assemblage_is_unsteerable() {
        // sigma_{alpha|A} = p(alpha) rho_B for product inputs
        let rho_b = SquareMatrix::from_real(2, &[0.7, 0.1, 0.1, 0.3]).unwrap();
        let rho_a = SquareMatrix::from_real(2, &[0.2, 0.0, 0.0, 0.8]).unwrap();
        let rho = DensityMatrix::from_matrix(kron(&rho_a, &rho_b).unwrap()).unwrap();
        let a = observable_from_angle(0.77);
        let [s0, _] = assemblage(&rho, &a);
        let p0 = (&projector(&a, 0).matrix().clone() * &rho_a).trace().re;
        assert!(s0
            .matrix()
            .max_abs_diff(&rho_b.scale(Complex64::new(p0, 0.0)))
            < 1e-12);
    }

    #[test]
    fn hwp_anchors() {
        assert!(hwp(0.0).max_abs_diff(&pauli_z()) < 1e-15);
        let had = SquareMatrix::from_real(
            2,
            &[FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
        )
        .unwrap();
        assert!(hwp(FRAC_PI_8).max_abs_diff(&had) < 1e-12);
    }

    #[test]
    fn waveplates_are_unitary() {
        for chi in [0.0, 0.3, -1.2, FRAC_PI_4] {
            assert!(hwp(chi).is_unitary(1e-12));
            assert!(qwp(chi).is_unitary(1e-12));
        }
        for delta in [0.0, 1.0, 4.0] {
            assert!(waveplate_sequence(&preparation_waveplates(delta)).is_unitary(1e-10));
        }
    }

    #[test]
    fn measurement_sequence_realizes_u_delta() {
        for delta in [FRAC_PI_2, 0.9, 2.0, 5.5] {
            let seq = waveplate_sequence(&u_delta_waveplates(delta));
            let d = phase_aligned_distance(&seq, &u_delta(delta)).unwrap();
            assert!(d < 1e-9, "delta={delta}: distance {d}");
        }
    }
}
