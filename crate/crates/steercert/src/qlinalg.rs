//! Complex Hermitian linear algebra over dimensions 2 and 4.
//!
//! Dense row-major matrices with a cyclic complex Jacobi eigensolver; this is
//! the numerical substrate for every other module. Dimensions are fixed to 2
//! and 4 by construction and accuracy at these sizes is far below the crate
//! tolerances.

pub use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, HERMITICITY_TOL, PSD_TOL, TRACE_TOL};

/// A dense complex square matrix of dimension 2 or 4, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl SquareMatrix {
    /// Builds a matrix from row-major entries. Rejects unsupported dimensions
    /// and non-finite entries.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(entries.len(), dim * dim));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(dim, vec![Complex64::new(0.0, 0.0); dim * dim]).expect("dim 2 or 4")
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(dim, entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Self::new(self.dim, entries)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| c * z).collect(),
        }
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, self.get(j, i).conj());
            }
        }
        out
    }

    /// Entrywise complex conjugate (no transpose), taken in the computational basis.
    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch(v.len(), self.dim));
        }
        Ok((0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let p = self.adjoint().checked_mul(self).expect("same dim");
        p.max_abs_diff(&Self::identity(self.dim)) <= tol
    }

    /// Deviation from Hermiticity, `max |M - M†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }
}

impl std::ops::Add for &SquareMatrix {
    type Output = SquareMatrix;
    fn add(self, rhs: &SquareMatrix) -> SquareMatrix {
        self.checked_add(rhs).expect("matrix dimensions must match")
    }
}

impl std::ops::Sub for &SquareMatrix {
    type Output = SquareMatrix;
    fn sub(self, rhs: &SquareMatrix) -> SquareMatrix {
        self.checked_sub(rhs).expect("matrix dimensions must match")
    }
}

impl std::ops::Mul for &SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        self.checked_mul(rhs).expect("matrix dimensions must match")
    }
}

// JSON form: { "dim": n, "entries": [[re, im], ...] } row-major.
impl Serialize for SquareMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            dim: usize,
            entries: Vec<[f64; 2]>,
        }
        Repr {
            dim: self.dim,
            entries: self.entries.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SquareMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            dim: usize,
            entries: Vec<[f64; 2]>,
        }
        let r = Repr::deserialize(deserializer)?;
        SquareMatrix::new(
            r.dim,
            r.entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// A matrix verified Hermitian at construction (`max |M - M†| <= 1e-10`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HermitianMatrix(SquareMatrix);

impl HermitianMatrix {
    pub fn new(m: SquareMatrix) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self(m))
    }

    /// Symmetrizes `(M + M†)/2`; for cleaning up round-off on products that
    /// are Hermitian in exact arithmetic.
    pub fn symmetrize(m: &SquareMatrix) -> Self {
        let h = m.checked_add(&m.adjoint()).expect("same dim").scale(Complex64::new(0.5, 0.0));
        Self(h)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> SquareMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0.get(i, j)
    }

    /// Real trace (the imaginary part of a Hermitian trace is zero).
    pub fn trace_re(&self) -> f64 {
        self.0.trace().re
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let m = SquareMatrix::deserialize(deserializer)?;
        HermitianMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

pub fn pauli_x() -> SquareMatrix {
    SquareMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).expect("static")
}

pub fn pauli_y() -> SquareMatrix {
    SquareMatrix::new(
        2,
        vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        ],
    )
    .expect("static")
}

pub fn pauli_z() -> SquareMatrix {
    SquareMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0]).expect("static")
}

/// Kronecker product of two 2x2 matrices; block (i,j) of the result is `a[i,j] * b`.
pub fn kron(a: &SquareMatrix, b: &SquareMatrix) -> Result<SquareMatrix> {
    if a.dim() != 2 || b.dim() != 2 {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let mut out = SquareMatrix::zeros(4);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out.set(2 * i + k, 2 * j + l, a.get(i, j) * b.get(k, l));
                }
            }
        }
    }
    Ok(out)
}

/// Partial trace over the first (Alice's) factor of a 4x4 matrix.
pub fn partial_trace_first(m: &SquareMatrix) -> Result<SquareMatrix> {
    if m.dim() != 4 {
        return Err(Error::DimensionMismatch(m.dim(), 4));
    }
    let mut out = SquareMatrix::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            let v = m.get(i, j) + m.get(2 + i, 2 + j);
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Partial trace over the second (Bob's) factor of a 4x4 matrix.
pub fn partial_trace_second(m: &SquareMatrix) -> Result<SquareMatrix> {
    if m.dim() != 4 {
        return Err(Error::DimensionMismatch(m.dim(), 4));
    }
    let mut out = SquareMatrix::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            let v = m.get(2 * i, 2 * j) + m.get(2 * i + 1, 2 * j + 1);
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigh {
    /// Eigenvalues, sorted descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as the columns of a unitary matrix, in the
    /// same order as `values`.
    pub vectors: SquareMatrix,
}

/// Cyclic complex Jacobi eigendecomposition. `H = V diag(values) V†` with
/// `values` descending and `V†V = 1`.
pub fn eigh(h: &HermitianMatrix) -> Eigh {
    let n = h.dim();
    let mut a = h.matrix().clone();
    let mut v = SquareMatrix::identity(n);

    let scale = a.max_abs().max(1.0);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    idx.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).expect("finite eigenvalues"));

    let values = idx.iter().map(|&i| diag[i]).collect();
    let mut vectors = SquareMatrix::zeros(n);
    for (col, &src) in idx.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, v.get(row, src));
        }
    }
    Eigh { values, vectors }
}

/// One Jacobi rotation zeroing entry (p,q). The 2x2 unitary is a phase
/// alignment followed by a real Givens rotation.
fn jacobi_rotate(a: &mut SquareMatrix, v: &mut SquareMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    let r = apq.norm();
    if r < 1e-300 {
        return;
    }
    let phase = apq / r; // e^{i arg(apq)}
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // U differs from the identity only at: U[p][p]=c, U[p][q]=s,
    // U[q][p]=-s*conj(phase), U[q][q]=c*conj(phase).
    let n = a.dim();
    let upp = Complex64::new(c, 0.0);
    let upq = Complex64::new(s, 0.0);
    let uqp = phase.conj() * Complex64::new(-s, 0.0);
    let uqq = phase.conj() * Complex64::new(c, 0.0);

    // A <- A U (columns p, q)
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, akp * upp + akq * uqp);
        a.set(k, q, akp * upq + akq * uqq);
    }
    // A <- U† A (rows p, q)
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, upp.conj() * apk + uqp.conj() * aqk);
        a.set(q, k, upq.conj() * apk + uqq.conj() * aqk);
    }
    // Clean the zeroed pair and enforce real diagonal against round-off.
    a.set(p, q, Complex64::new(0.0, 0.0));
    a.set(q, p, Complex64::new(0.0, 0.0));
    let app2 = a.get(p, p);
    let aqq2 = a.get(q, q);
    a.set(p, p, Complex64::new(app2.re, 0.0));
    a.set(q, q, Complex64::new(aqq2.re, 0.0));

    // V <- V U
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, vkp * upp + vkq * uqp);
        v.set(k, q, vkp * upq + vkq * uqq);
    }
}

pub fn min_eigenvalue(h: &HermitianMatrix) -> f64 {
    *eigh(h).values.last().expect("nonempty spectrum")
}

pub fn is_psd(h: &HermitianMatrix, tol: f64) -> bool {
    min_eigenvalue(h) >= -tol
}

/// Trace norm (sum of singular values) of a general matrix, via the
/// eigenvalues of `A†A`.
pub fn trace_norm(a: &SquareMatrix) -> f64 {
    let ata = HermitianMatrix::symmetrize(&a.adjoint().checked_mul(a).expect("same dim"));
    eigh(&ata).values.iter().map(|&l| l.max(0.0).sqrt()).sum()
}

/// Eigenvalues whose magnitude falls below this multiple of the spectral
/// radius are round-off noise; square roots would amplify them from O(eps)
/// to O(sqrt(eps)), so they are zeroed before rooting.
pub(crate) const SPECTRAL_NOISE_RELATIVE: f64 = 64.0 * f64::EPSILON;

/// Principal square root of a PSD matrix. Eigenvalues in `[-clip_tol, 0)` are
/// clipped to zero before the root; anything below `-clip_tol` is rejected as
/// genuinely non-PSD. Tomography estimates are PSD only up to statistical
/// noise, hence the clipping contract.
pub fn matrix_sqrt_psd(h: &HermitianMatrix, clip_tol: f64) -> Result<HermitianMatrix> {
    let Eigh { values, vectors } = eigh(h);
    if let Some(&min) = values.last() {
        if min < -clip_tol {
            return Err(Error::NotPositiveSemidefinite(min));
        }
    }
    let noise_floor = values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        * SPECTRAL_NOISE_RELATIVE;
    let n = h.dim();
    let mut out = SquareMatrix::zeros(n);
    for k in 0..n {
        let clipped = if values[k] <= noise_floor { 0.0 } else { values[k] };
        let root = clipped.sqrt();
        if root == 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                let v = out.get(i, j) + vectors.get(i, k) * vectors.get(j, k).conj() * root;
                out.set(i, j, v);
            }
        }
    }
    Ok(HermitianMatrix::symmetrize(&out))
}

fn validate_state(m: &HermitianMatrix) -> Result<()> {
    let tr = m.trace_re();
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(Error::TraceNotOne(tr));
    }
    let min = min_eigenvalue(m);
    if min < -PSD_TOL {
        return Err(Error::NotPositiveSemidefinite(min));
    }
    Ok(())
}

/// Uhlmann fidelity in root form, `F = Tr sqrt(sqrt(rho) sigma sqrt(rho))`.
/// Both arguments must be valid states (PSD, unit trace, same dimension).
pub fn fidelity_root(rho: &HermitianMatrix, sigma: &HermitianMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    validate_state(rho)?;
    validate_state(sigma)?;
    let s = matrix_sqrt_psd(rho, PSD_TOL)?;
    let prod = s.matrix().checked_mul(sigma.matrix())?.checked_mul(s.matrix())?;
    let m = HermitianMatrix::symmetrize(&prod);
    let values = eigh(&m).values;
    let floor = values.iter().fold(0.0f64, |a, v| a.max(v.abs())) * SPECTRAL_NOISE_RELATIVE;
    let f: f64 = values
        .iter()
        .map(|&l| if l <= floor { 0.0 } else { l.sqrt() })
        .sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Squared-fidelity convention, `F_sq = fidelity_root^2` (the trace-norm form
/// `|| sqrt(rho) sqrt(sigma) ||_1^2`).
pub fn fidelity_sq(rho: &HermitianMatrix, sigma: &HermitianMatrix) -> Result<f64> {
    fidelity_root(rho, sigma).map(|f| f * f)
}
