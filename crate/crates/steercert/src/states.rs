//! Pure two-qubit state families and entanglement quantities.
//!
//! Basis convention: `|0> = H` (horizontal), `|1> = V`; the four-dimensional
//! basis order is `|00>, |01>, |10>, |11>` with Alice's qubit first, so a
//! joint operator is always `kron(alice_side, bob_side)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::qlinalg::{
    eigh, fidelity_root, fidelity_sq, kron, matrix_sqrt_psd, min_eigenvalue, pauli_y,
    HermitianMatrix, SquareMatrix,
};
use crate::{Error, Result, NORMALIZATION_TOL, PSD_TOL, TRACE_TOL, UNITARITY_TOL};

/// Margin by which the Schmidt coefficient must stay inside (0, 1).
/// Certification formulas divide by quantities that vanish at the endpoints.
pub const A_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
    PhiDelta,
}

impl FamilyTag {
    pub const ALL_CANONICAL: [FamilyTag; 4] = [
        FamilyTag::PhiPlus,
        FamilyTag::PhiMinus,
        FamilyTag::PsiPlus,
        FamilyTag::PsiMinus,
    ];

    /// Sign of the `sigma_x` component of the canonical `A_1`.
    pub fn sign(self) -> f64 {
        match self {
            FamilyTag::PhiPlus | FamilyTag::PsiPlus | FamilyTag::PhiDelta => 1.0,
            FamilyTag::PhiMinus | FamilyTag::PsiMinus => -1.0,
        }
    }

    pub fn is_psi(self) -> bool {
        matches!(self, FamilyTag::PsiPlus | FamilyTag::PsiMinus)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyTag::PhiPlus => "phi_plus",
            FamilyTag::PhiMinus => "phi_minus",
            FamilyTag::PsiPlus => "psi_plus",
            FamilyTag::PsiMinus => "psi_minus",
            FamilyTag::PhiDelta => "phi_delta",
        }
    }
}

impl std::fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FamilyTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi_plus" => Ok(FamilyTag::PhiPlus),
            "phi_minus" => Ok(FamilyTag::PhiMinus),
            "psi_plus" => Ok(FamilyTag::PsiPlus),
            "psi_minus" => Ok(FamilyTag::PsiMinus),
            "phi_delta" => Ok(FamilyTag::PhiDelta),
            other => Err(Error::InvalidParameter(format!(
                "unknown family tag '{other}'"
            ))),
        }
    }
}

/// A state family instance: tag, Schmidt coefficient `a` in (0, 1), and a
/// relative phase `delta` in [0, 2pi) used only by `PhiDelta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateFamily {
    pub tag: FamilyTag,
    pub a: f64,
    pub delta: f64,
}

impl StateFamily {
    pub fn new(tag: FamilyTag, a: f64, delta: f64) -> Result<Self> {
        if !a.is_finite() || !(A_MARGIN..=1.0 - A_MARGIN).contains(&a) {
            return Err(Error::InvalidParameter(format!(
                "state coefficient a = {a} must lie in ({A_MARGIN}, {})",
                1.0 - A_MARGIN
            )));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParameter("delta must be finite".into()));
        }
        Ok(Self {
            tag,
            a,
            delta: delta.rem_euclid(2.0 * PI),
        })
    }

    pub fn phi_plus(a: f64) -> Result<Self> {
        Self::new(FamilyTag::PhiPlus, a, 0.0)
    }

    pub fn phi_minus(a: f64) -> Result<Self> {
        Self::new(FamilyTag::PhiMinus, a, 0.0)
    }

    pub fn psi_plus(a: f64) -> Result<Self> {
        Self::new(FamilyTag::PsiPlus, a, 0.0)
    }

    pub fn psi_minus(a: f64) -> Result<Self> {
        Self::new(FamilyTag::PsiMinus, a, 0.0)
    }

    pub fn phi_delta(a: f64, delta: f64) -> Result<Self> {
        Self::new(FamilyTag::PhiDelta, a, delta)
    }
}

/// A normalized two-qubit state vector in the basis `|00>,|01>,|10>,|11>`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: [Complex64; 4],
}

impl PureState {
    pub fn new(amplitudes: [Complex64; 4]) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if !norm_sq.is_finite() {
            return Err(Error::NonFinite);
        }
        if (norm_sq - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(norm_sq.sqrt()));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes an arbitrary nonzero amplitude vector.
    pub fn normalized(amplitudes: [Complex64; 4]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::NotNormalized(norm));
        }
        let inv = Complex64::new(1.0 / norm, 0.0);
        Ok(Self {
            amplitudes: [
                amplitudes[0] * inv,
                amplitudes[1] * inv,
                amplitudes[2] * inv,
                amplitudes[3] * inv,
            ],
        })
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// A validated density matrix: Hermitian, PSD within `-1e-9`, unit trace
/// within `1e-10`; dimension 2 or 4.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(m: HermitianMatrix) -> Result<Self> {
        let tr = m.trace_re();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceNotOne(tr));
        }
        let min = min_eigenvalue(&m);
        if min < -PSD_TOL {
            return Err(Error::NotPositiveSemidefinite(min));
        }
        Ok(Self(m))
    }

    pub fn from_matrix(m: SquareMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        let m = SquareMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0));
        Self::from_matrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn matrix(&self) -> &SquareMatrix {
        self.0.matrix()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        let sq = self.matrix() * self.matrix();
        sq.trace().re
    }

    pub fn fidelity_root(&self, other: &DensityMatrix) -> Result<f64> {
        fidelity_root(&self.0, &other.0)
    }

    pub fn fidelity_sq(&self, other: &DensityMatrix) -> Result<f64> {
        fidelity_sq(&self.0, &other.0)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let m = HermitianMatrix::deserialize(deserializer)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Builds the amplitude vector of a family instance:
/// `phi_pm = a|00> ± sqrt(1-a^2)|11>`, `psi_pm = a|01> ± sqrt(1-a^2)|10>`,
/// `phi_delta = a|00> + sqrt(1-a^2) e^{i delta}|11>`.
pub fn build_state(family: &StateFamily) -> PureState {
    let a = Complex64::new(family.a, 0.0);
    let b = (1.0 - family.a * family.a).sqrt();
    let zero = Complex64::new(0.0, 0.0);
    let amps = match family.tag {
        FamilyTag::PhiPlus => [a, zero, zero, Complex64::new(b, 0.0)],
        FamilyTag::PhiMinus => [a, zero, zero, Complex64::new(-b, 0.0)],
        FamilyTag::PsiPlus => [zero, a, Complex64::new(b, 0.0), zero],
        FamilyTag::PsiMinus => [zero, a, Complex64::new(-b, 0.0), zero],
        FamilyTag::PhiDelta => [
            a,
            zero,
            zero,
            Complex64::from_polar(b, family.delta),
        ],
    };
    PureState::new(amps).expect("family amplitudes are normalized by construction")
}

/// Rank-one projector `|psi><psi|`.
pub fn densify(psi: &PureState) -> DensityMatrix {
    let mut m = SquareMatrix::zeros(4);
    for i in 0..4 {
        for j in 0..4 {
            m.set(i, j, psi.amplitudes[i] * psi.amplitudes[j].conj());
        }
    }
    DensityMatrix::from_matrix(m).expect("projector of a normalized vector is a state")
}

/// Wootters concurrence of a two-qubit state:
/// `C = max(0, sqrt(l1) - sqrt(l2) - sqrt(l3) - sqrt(l4))` where `l_i` are the
/// descending eigenvalues of `rho (sy⊗sy) rho* (sy⊗sy)`, the conjugation taken
/// in the computational basis. Computed through the Hermitian form
/// `sqrt(rho) rho~ sqrt(rho)`, which has the same spectrum.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(rho.dim(), 4));
    }
    let yy = kron(&pauli_y(), &pauli_y())?;
    let spin_flipped = &(&yy * &rho.matrix().conj()) * &yy;
    let root = matrix_sqrt_psd(rho.hermitian(), PSD_TOL)?;
    let m = &(root.matrix() * &spin_flipped) * root.matrix();
    let lambdas = eigh(&HermitianMatrix::symmetrize(&m)).values;
    let floor = lambdas
        .iter()
        .fold(0.0f64, |acc, l| acc.max(l.abs()))
        * crate::qlinalg::SPECTRAL_NOISE_RELATIVE;
    let roots: Vec<f64> = lambdas
        .iter()
        .map(|&l| if l <= floor { 0.0 } else { l.sqrt() })
        .collect();
    Ok((roots[0] - roots[1] - roots[2] - roots[3]).max(0.0))
}

/// Schmidt coefficients (descending) of a pure two-qubit state: the singular
/// values of the 2x2 amplitude matrix. Satisfies `l_max^2 + l_min^2 = 1`.
pub fn schmidt_coefficients(psi: &PureState) -> (f64, f64) {
    // Amplitude matrix M[i][j] = <ij|psi>; singular values from eigh(M†M).
    let amp = psi.amplitudes();
    let m = SquareMatrix::new(2, vec![amp[0], amp[1], amp[2], amp[3]]).expect("dim 2");
    let mtm = HermitianMatrix::symmetrize(&(&m.adjoint() * &m));
    let ev = eigh(&mtm).values;
    (ev[0].max(0.0).sqrt(), ev[1].max(0.0).sqrt())
}

/// `Tr(rho^2)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// Isotropic noise mix `v |psi><psi| + (1-v) I/4`.
pub fn werner_mix(psi: &PureState, v: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!(
            "visibility v = {v} must lie in [0, 1]"
        )));
    }
    let pure = densify(psi);
    let m = pure
        .matrix()
        .scale(Complex64::new(v, 0.0))
        .checked_add(&SquareMatrix::identity(4).scale(Complex64::new((1.0 - v) / 4.0, 0.0)))?;
    DensityMatrix::from_matrix(m)
}

/// `(U_A ⊗ U_B) rho (U_A ⊗ U_B)†` for single-qubit unitaries.
pub fn local_unitary(
    rho: &DensityMatrix,
    u_alice: &SquareMatrix,
    u_bob: &SquareMatrix,
) -> Result<DensityMatrix> {
    for u in [u_alice, u_bob] {
        if u.dim() != 2 {
            return Err(Error::DimensionMismatch(u.dim(), 2));
        }
        if !u.is_unitary(UNITARITY_TOL) {
            let defect = u
                .adjoint()
                .checked_mul(u)?
                .max_abs_diff(&SquareMatrix::identity(2));
            return Err(Error::NotUnitary(defect));
        }
    }
    let u = kron(u_alice, u_bob)?;
    let m = &(&u * rho.matrix()) * &u.adjoint();
    DensityMatrix::from_matrix(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn bell_state_amplitudes() {
        let psi = build_state(&StateFamily::phi_plus(FRAC_1_SQRT_2).unwrap());
        let a = psi.amplitudes();
        assert!((a[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((a[3].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(a[1].norm() + a[2].norm() < 1e-15);
    }

    #[test]
    fn psi_minus_sign_convention() {
        let psi = build_state(&StateFamily::psi_minus(FRAC_1_SQRT_2).unwrap());
        let a = psi.amplitudes();
        assert!((a[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((a[2].re + FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn phi_delta_at_pi_flips_sign() {
        let psi = build_state(&StateFamily::phi_delta(0.5, std::f64::consts::PI).unwrap());
        let a = psi.amplitudes();
        assert!((a[0].re - 0.5).abs() < 1e-15);
        assert!((a[3].re + (0.75f64).sqrt()).abs() < 1e-12);
        assert!(a[3].im.abs() < 1e-12);
    }

    #[test]
    fn a_domain_endpoints_rejected() {
        assert!(StateFamily::phi_plus(0.0).is_err());
        assert!(StateFamily::phi_plus(1.0).is_err());
        assert!(StateFamily::phi_plus(-0.3).is_err());
        assert!(StateFamily::phi_plus(0.5).is_ok());
    }

    #[test]
    fn delta_normalized_to_two_pi() {
        let f = StateFamily::phi_delta(0.5, -1.0).unwrap();
        assert!(f.delta >= 0.0 && f.delta < 2.0 * PI);
        assert!((f.delta - (2.0 * PI - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn densify_is_a_projector() {
        let psi = build_state(&StateFamily::phi_plus(0.8).unwrap());
        let rho = densify(&psi);
        let sq = rho.matrix() * rho.matrix();
        assert!(sq.max_abs_diff(rho.matrix()) < 1e-10);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        // |00> case: diag(1,0,0,0)
        let zero = Complex64::new(0.0, 0.0);
        let ket00 = PureState::new([Complex64::new(1.0, 0.0), zero, zero, zero]).unwrap();
        let rho00 = densify(&ket00);
        let mut expect = SquareMatrix::zeros(4);
        expect.set(0, 0, Complex64::new(1.0, 0.0));
        assert!(rho00.matrix().max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn bell_projector_corners() {
        let rho = densify(&build_state(&StateFamily::phi_plus(FRAC_1_SQRT_2).unwrap()));
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((rho.matrix().get(i, j).re - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn concurrence_of_phi_plus() {
        let rho = densify(&build_state(&StateFamily::phi_plus(0.8).unwrap()));
        assert!((concurrence(&rho).unwrap() - 0.96).abs() < 1e-10);
    }

    #[test]
    fn concurrence_of_product_state_is_zero() {
        let zero = Complex64::new(0.0, 0.0);
        let ket00 = PureState::new([Complex64::new(1.0, 0.0), zero, zero, zero]).unwrap();
        assert!(concurrence(&densify(&ket00)).unwrap() < 1e-9);
    }

    #[test]
    fn concurrence_of_werner_state() {
        // (3v - 1)/2 for a Bell state mixed with isotropic noise.
        let bell = build_state(&StateFamily::phi_plus(FRAC_1_SQRT_2).unwrap());
        let rho = werner_mix(&bell, 0.9).unwrap();
        assert!((concurrence(&rho).unwrap() - 0.85).abs() < 1e-9);
        let rho95 = werner_mix(&bell, 0.95).unwrap();
        assert!((concurrence(&rho95).unwrap() - 0.925).abs() < 1e-9);
    }

    #[test]
    fn schmidt_of_family_states() {
        let (l1, l2) = schmidt_coefficients(&build_state(&StateFamily::phi_plus(0.8).unwrap()));
        assert!((l1 - 0.8).abs() < 1e-10 && (l2 - 0.6).abs() < 1e-10);
        let (l1, l2) = schmidt_coefficients(&build_state(&StateFamily::psi_plus(0.3).unwrap()));
        assert!((l1 - (0.91f64).sqrt()).abs() < 1e-10 && (l2 - 0.3).abs() < 1e-10);
        for delta in [0.0, 1.0, 4.5] {
            let (l1, l2) =
                schmidt_coefficients(&build_state(&StateFamily::phi_delta(0.5, delta).unwrap()));
            assert!((l1 - (0.75f64).sqrt()).abs() < 1e-10);
            assert!((l2 - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn purity_of_maximally_mixed() {
        let mm = DensityMatrix::maximally_mixed(4).unwrap();
        assert!((mm.purity() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn werner_identities() {
        let bell = build_state(&StateFamily::phi_plus(FRAC_1_SQRT_2).unwrap());
        let v1 = werner_mix(&bell, 1.0).unwrap();
        assert!(v1.matrix().max_abs_diff(densify(&bell).matrix()) < 1e-14);
        let v095 = werner_mix(&bell, 0.95).unwrap();
        assert!((v095.purity() - 0.926875).abs() < 1e-12);
        assert!(werner_mix(&bell, 1.2).is_err());
    }

    #[test]
    fn local_unitary_preserves_concurrence_and_rejects_non_unitary() {
        let rho = densify(&build_state(&StateFamily::psi_plus(0.7).unwrap()));
        let h = SquareMatrix::from_real(2, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2])
            .unwrap();
        let rotated = local_unitary(&rho, &h, &h).unwrap();
        assert!(
            (concurrence(&rotated).unwrap() - concurrence(&rho).unwrap()).abs() < 1e-9
        );
        let not_u = SquareMatrix::from_real(2, &[1.0, 0.0, 0.0, 2.0]).unwrap();
        assert!(matches!(
            local_unitary(&rho, &not_u, &h),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn family_tag_round_trips_through_strings() {
        for tag in [
            FamilyTag::PhiPlus,
            FamilyTag::PhiMinus,
            FamilyTag::PsiPlus,
            FamilyTag::PsiMinus,
            FamilyTag::PhiDelta,
        ] {
            let s = tag.to_string();
            assert_eq!(s.parse::<FamilyTag>().unwrap(), tag);
        }
    }
}
