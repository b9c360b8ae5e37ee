//! Self-testing robustness: the bound Q, the operator-inequality
//! verification machinery, and a numerical extractability estimator.
//!
//! The operator-inequality sweep reports measured facts rather than assuming
//! the analytic claim: with the constants `s = sqrt(2)/(2(sqrt(2)-1))`,
//! `mu = -1/(sqrt(2)-1)`, the operator `T = K - sW - mu*1` has the exact
//! witness `Tr[T(theta) (I/2 (x) |e+><e+|)] = -1/4` for every `theta`, so the
//! sweep returns `ok = false` with a worst margin near -2.914. The
//! equality `Tr[K Psi] = s Tr[W Psi] + mu` on the target state itself does
//! hold for all `theta` and is verified to machine precision.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::qlinalg::{
    eigh, kron, min_eigenvalue, pauli_x, pauli_y, pauli_z, HermitianMatrix, SquareMatrix,
};
use crate::states::{DensityMatrix, PureState};
use crate::steering::S_LHS;
use crate::{Error, Result};

/// Slope constant of the linear operator bound, `sqrt(2)/(2(sqrt(2)-1))`.
pub fn s_constant() -> f64 {
    SQRT_2 / (2.0 * (SQRT_2 - 1.0))
}

/// Offset constant of the linear operator bound, `-1/(sqrt(2)-1)`.
pub fn mu_constant() -> f64 {
    -1.0 / (SQRT_2 - 1.0)
}

/// Robustness bound `Q = lambda_max^2 + (1 - lambda_max^2) (S - S_LHS)/(2 - S_LHS)`.
/// For S at or below the LHS bound the trivial value `lambda_max^2` is
/// returned (no improvement over the trivial bound is possible there).
pub fn q_bound(s: f64, lambda_max: f64) -> Result<f64> {
    if !(FRAC_1_SQRT_2_CONST..1.0).contains(&lambda_max) {
        return Err(Error::InvalidParameter(format!(
            "lambda_max = {lambda_max} must lie in [1/sqrt(2), 1)"
        )));
    }
    if !s.is_finite() || s > 2.0 + 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "S = {s} outside [0, 2]"
        )));
    }
    let lm_sq = lambda_max * lambda_max;
    if s <= S_LHS {
        return Ok(lm_sq);
    }
    Ok(lm_sq + (1.0 - lm_sq) * (s.min(2.0) - S_LHS) / (2.0 - S_LHS))
}

const FRAC_1_SQRT_2_CONST: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn quarter(m: SquareMatrix) -> SquareMatrix {
    m.scale(Complex64::new(0.25, 0.0))
}

fn pauli_term(a: &SquareMatrix, b: &SquareMatrix, coeff: f64) -> SquareMatrix {
    kron(a, b).expect("dim 2").scale(Complex64::new(coeff, 0.0))
}

/// The rotated maximally entangled target state
/// `Psi = 1/4 [1⊗1 + sy⊗sy + (sx⊗sx + sx⊗sz + sz⊗sx - sz⊗sz)/sqrt(2)]`.
pub fn target_state_rotated() -> DensityMatrix {
    let id = SquareMatrix::identity(2);
    let f = 1.0 / SQRT_2;
    let mut m = pauli_term(&id, &id, 1.0);
    for (a, b, c) in [
        (pauli_y(), pauli_y(), 1.0),
        (pauli_x(), pauli_x(), f),
        (pauli_x(), pauli_z(), f),
        (pauli_z(), pauli_x(), f),
        (pauli_z(), pauli_z(), -f),
    ] {
        m = m.checked_add(&pauli_term(&a, &b, c)).expect("dim 4");
    }
    DensityMatrix::from_matrix(quarter(m)).expect("rank-one Pauli expansion is a state")
}

/// The target as a state vector (top eigenvector of [`target_state_rotated`]),
/// with the global phase fixed by making the first sizable amplitude real
/// positive.
pub fn target_state_vector() -> PureState {
    let rho = target_state_rotated();
    let dec = eigh(rho.hermitian());
    let mut amps = [Complex64::new(0.0, 0.0); 4];
    for i in 0..4 {
        amps[i] = dec.vectors.get(i, 0);
    }
    let pivot = amps
        .iter()
        .find(|z| z.norm() > 1e-8)
        .copied()
        .expect("unit vector");
    let phase = pivot.conj() / Complex64::new(pivot.norm(), 0.0);
    for a in amps.iter_mut() {
        *a *= phase;
    }
    PureState::normalized(amps).expect("eigenvector is normalized")
}

/// The dephasing extraction channel
/// `Lambda(theta)(X) = (1+g)/2 X + (1-g)/2 Gamma X Gamma` with
/// `g = (1+sqrt(2))(sin theta + cos theta - 1)` and `Gamma = sigma_x` on
/// `[0, pi/4]`, `sigma_z` on `(pi/4, pi/2]`. The second weight is `(1-g)/2`;
/// trace preservation and the identity limit at `theta = pi/4` pin it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionChannel {
    vartheta: f64,
}

impl ExtractionChannel {
    pub fn new(vartheta: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_2).contains(&vartheta) {
            return Err(Error::InvalidParameter(format!(
                "vartheta = {vartheta} outside [0, pi/2]"
            )));
        }
        Ok(Self { vartheta })
    }

    pub fn vartheta(&self) -> f64 {
        self.vartheta
    }

    pub fn g(&self) -> f64 {
        (1.0 + SQRT_2) * (self.vartheta.sin() + self.vartheta.cos() - 1.0)
    }

    pub fn gamma(&self) -> SquareMatrix {
        if self.vartheta <= FRAC_PI_4 {
            pauli_x()
        } else {
            pauli_z()
        }
    }
}

/// Applies the channel to Alice's side: directly for a qubit state, as
/// `(Lambda ⊗ id)` for a two-qubit state.
pub fn channel_apply(ch: &ExtractionChannel, rho: &DensityMatrix) -> DensityMatrix {
    let g = ch.g();
    let gamma = if rho.dim() == 2 {
        ch.gamma()
    } else {
        kron(&ch.gamma(), &SquareMatrix::identity(2)).expect("dim 2")
    };
    let flipped = &(&gamma * rho.matrix()) * &gamma;
    let m = rho
        .matrix()
        .scale(Complex64::new((1.0 + g) / 2.0, 0.0))
        .checked_add(&flipped.scale(Complex64::new((1.0 - g) / 2.0, 0.0)))
        .expect("same dim");
    DensityMatrix::from_matrix(m).expect("convex mix of conjugations preserves state")
}

/// `K(theta) = (Lambda(theta) ⊗ id)(Psi)` in closed Pauli form, self-checked
/// against the explicit channel application within 1e-10 on every call.
pub fn k_operator(vartheta: f64) -> Result<HermitianMatrix> {
    if !(0.0..=FRAC_PI_4 + 1e-12).contains(&vartheta) {
        return Err(Error::InvalidParameter(format!(
            "vartheta = {vartheta} outside [0, pi/4]"
        )));
    }
    let ch = ExtractionChannel::new(vartheta)?;
    let g = ch.g();
    let id = SquareMatrix::identity(2);
    let f = 1.0 / SQRT_2;
    let mut m = pauli_term(&id, &id, 1.0);
    for (a, b, c) in [
        (pauli_y(), pauli_y(), g),
        (pauli_x(), pauli_x(), f),
        (pauli_x(), pauli_z(), f),
        (pauli_z(), pauli_x(), g * f),
        (pauli_z(), pauli_z(), -g * f),
    ] {
        m = m.checked_add(&pauli_term(&a, &b, c))?;
    }
    let closed = HermitianMatrix::new(quarter(m))?;
    let applied = channel_apply(&ch, &target_state_rotated());
    let dev = closed.matrix().max_abs_diff(applied.matrix());
    if dev > 1e-10 {
        return Err(Error::SelfCheckFailed(format!(
            "K closed form deviates from channel application by {dev:.3e} at vartheta {vartheta}"
        )));
    }
    Ok(closed)
}

/// The steering operator with Alice's observables rotated by `vartheta`
/// (Bob measures `B_0 = sigma_x`, `B_1 = sigma_z` in this frame):
/// `W = 1⊗1 + cos t sx⊗1 + (1⊗sx + 1⊗sz + cos t sx⊗sx + sin t sz⊗sx + cos t sx⊗sz - sin t sz⊗sz)/2`.
pub fn w_operator(vartheta: f64) -> HermitianMatrix {
    let (st, ct) = vartheta.sin_cos();
    let id = SquareMatrix::identity(2);
    let mut m = pauli_term(&id, &id, 1.0);
    for (a, b, c) in [
        (pauli_x(), id.clone(), ct),
        (id.clone(), pauli_x(), 0.5),
        (id.clone(), pauli_z(), 0.5),
        (pauli_x(), pauli_x(), 0.5 * ct),
        (pauli_z(), pauli_x(), 0.5 * st),
        (pauli_x(), pauli_z(), 0.5 * ct),
        (pauli_z(), pauli_z(), -0.5 * st),
    ] {
        m = m.checked_add(&pauli_term(&a, &b, c)).expect("dim 4");
    }
    HermitianMatrix::new(m).expect("real Pauli coefficients")
}

/// `T(theta) = K(theta) - s W(theta) - mu 1`.
pub fn t_operator(vartheta: f64) -> Result<HermitianMatrix> {
    let k = k_operator(vartheta)?;
    let w = w_operator(vartheta);
    let m = k
        .matrix()
        .checked_sub(&w.matrix().scale(Complex64::new(s_constant(), 0.0)))?
        .checked_sub(&SquareMatrix::identity(4).scale(Complex64::new(mu_constant(), 0.0)))?;
    HermitianMatrix::new(m)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OperatorInequalityCheck {
    pub ok: bool,
    pub worst_margin: f64,
    pub worst_vartheta: f64,
}

/// Sweeps `min eig T(theta)` over a grid on [0, pi/4]. `ok` iff every margin
/// stays above `-tol`. A false result is a finding, not an error.
pub fn verify_operator_inequality(grid_points: usize, tol: f64) -> Result<OperatorInequalityCheck> {
    let grid = psd_margin_grid(grid_points)?;
    let (worst_vartheta, worst_margin) = grid
        .iter()
        .copied()
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite margins"))
        .expect("nonempty grid");
    Ok(OperatorInequalityCheck {
        ok: worst_margin >= -tol,
        worst_margin,
        worst_vartheta,
    })
}

/// `(vartheta, min eig T(vartheta))` over an even grid on [0, pi/4].
pub fn psd_margin_grid(grid_points: usize) -> Result<Vec<(f64, f64)>> {
    if grid_points < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points".into()));
    }
    (0..grid_points)
        .into_par_iter()
        .map(|i| {
            let vartheta = FRAC_PI_4 * i as f64 / (grid_points - 1) as f64;
            let t = t_operator(vartheta)?;
            Ok((vartheta, min_eigenvalue(&t)))
        })
        .collect()
}

/// Orthonormal basis of the rank-2 eigenspace of `sigma_y ⊗ sigma_y` with
/// eigenvalue `(-1)^x`.
fn p_x_basis(x: u8) -> [[Complex64; 4]; 2] {
    let h = Complex64::new(FRAC_1_SQRT_2_CONST, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if x == 0 {
        // +1 eigenspace: (|00> - |11>)/sqrt2, (|01> + |10>)/sqrt2
        [[h, zero, zero, -h], [zero, h, h, zero]]
    } else {
        // -1 eigenspace: (|00> + |11>)/sqrt2, (|01> - |10>)/sqrt2
        [[h, zero, zero, h], [zero, h, -h, zero]]
    }
}

fn block_of_t(vartheta: f64, x: u8) -> Result<[[Complex64; 2]; 2]> {
    let t = t_operator(vartheta)?;
    let basis = p_x_basis(x);
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (r, br) in basis.iter().enumerate() {
        for (c, bc) in basis.iter().enumerate() {
            let tv = t.matrix().mul_vec(bc)?;
            m[r][c] = br.iter().zip(&tv).map(|(a, b)| a.conj() * b).sum();
        }
    }
    Ok(m)
}

/// `lambda_x = (tr M_x)^2 - tr M_x^2` with `M_x` the 2x2 compression of
/// `T(vartheta)` onto the range of `P_x = [1⊗1 + (-1)^x sy⊗sy]/2`. Any
/// orthonormal basis of the block gives identical traces.
pub fn lambda_x(vartheta: f64, x: u8) -> Result<f64> {
    let m = block_of_t(vartheta, x)?;
    let tr = (m[0][0] + m[1][1]).re;
    let tr_sq = (m[0][0] * m[0][0]
        + m[0][1] * m[1][0]
        + m[1][0] * m[0][1]
        + m[1][1] * m[1][1])
        .re;
    Ok(tr * tr - tr_sq)
}

/// Block trace `tr M_x` computed from the compression.
pub fn tr_mx_block(vartheta: f64, x: u8) -> Result<f64> {
    let m = block_of_t(vartheta, x)?;
    Ok((m[0][0] + m[1][1]).re)
}

/// Closed-form block trace `tr M_x = 2[1/4 - s - mu + (-1)^x g/4]`.
pub fn tr_mx_closed(vartheta: f64, x: u8) -> Result<f64> {
    let g = ExtractionChannel::new(vartheta)?.g();
    let sign = if x == 0 { 1.0 } else { -1.0 };
    Ok(2.0 * (0.25 - s_constant() - mu_constant() + sign * g / 4.0))
}

/// Closed-form `tr M_x^2` as printed alongside the block analysis. This
/// expression presumes `[T, sy⊗sy] = 0`, which the local terms of `W`
/// violate, so it does not agree with the block computation; it is kept for
/// diagnostic comparison.
pub fn tr_mx_sq_closed(vartheta: f64, x: u8) -> Result<f64> {
    let g = ExtractionChannel::new(vartheta)?.g();
    let s = s_constant();
    let mu = mu_constant();
    let (st, ct) = vartheta.sin_cos();
    let base = 0.25 - s - mu;
    let t1 = 2.0
        * (base * base
            + s * s * (ct * ct + 0.5)
            + g * g / 16.0
            + (0.25 - s * ct / SQRT_2) * (0.25 - s * ct / SQRT_2)
            + (g / 4.0 - s * st / SQRT_2) * (g / 4.0 - s * st / SQRT_2));
    let sign = if x == 0 { 1.0 } else { -1.0 };
    let t2 = sign
        * 2.0
        * (g / 4.0 * base + (0.25 - s * ct / SQRT_2) * (g / 4.0 - s * st / SQRT_2));
    Ok(t1 + t2)
}

/// `(vartheta, lambda_0, lambda_1)` over an even grid on [0, pi/4].
pub fn lambda_x_grid(grid_points: usize) -> Result<Vec<(f64, f64, f64)>> {
    if grid_points < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points".into()));
    }
    (0..grid_points)
        .into_par_iter()
        .map(|i| {
            let vartheta = FRAC_PI_4 * i as f64 / (grid_points - 1) as f64;
            Ok((vartheta, lambda_x(vartheta, 0)?, lambda_x(vartheta, 1)?))
        })
        .collect()
}

/// `q |Phi><Phi| + (1-q) (I/2) ⊗ |e+><e+|` with `Phi = (|00> + |11>)/sqrt(2)`
/// and `|e+>` the +1 eigenstate of `(sigma_z + sigma_x)/sqrt(2)`. Spans every
/// FGSI value between the LHS bound and 2 as `q` runs over [0, 1].
pub fn mixture_family(q: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("q = {q} outside [0, 1]")));
    }
    let h = Complex64::new(FRAC_1_SQRT_2_CONST, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let bell = PureState::new([h, zero, zero, h]).expect("normalized");
    let bell_proj = crate::states::densify(&bell);
    let eplus = crate::measurements::projector(
        &crate::measurements::DichotomicObservable::new(
            crate::steering::e_plus_bloch(),
            "e+",
        )?,
        0,
    );
    let product = kron(
        &SquareMatrix::identity(2).scale(Complex64::new(0.5, 0.0)),
        eplus.matrix(),
    )?;
    let m = bell_proj
        .matrix()
        .scale(Complex64::new(q, 0.0))
        .checked_add(&product.scale(Complex64::new(1.0 - q, 0.0)))?;
    DensityMatrix::from_matrix(m)
}

/// The FGSI value of [`mixture_family`] under `A_0 = B_0 = sigma_z`,
/// `A_1 = B_1 = sigma_x`: exactly affine, `S(q) = 2q + (1-q) S_LHS`, because
/// Alice's marginals are q-independent (both 1/2).
pub fn mixture_violation(q: f64) -> f64 {
    2.0 * q + (1.0 - q) * S_LHS
}

/// Search configuration for [`extractability_estimate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelSearchConfig {
    /// Coarse grid points per pre-unitary Euler angle (full turn).
    pub angle_steps: usize,
    /// Coarse grid points for the dephasing weight on [0, 1].
    pub weight_steps: usize,
    /// Nelder-Mead iterations per refinement seed.
    pub refine_iterations: usize,
    /// Number of best coarse points refined.
    pub refine_seeds: usize,
}

impl Default for ChannelSearchConfig {
    fn default() -> Self {
        Self {
            angle_steps: 8,
            weight_steps: 5,
            refine_iterations: 400,
            refine_seeds: 6,
        }
    }
}

fn rz(angle: f64) -> SquareMatrix {
    SquareMatrix::new(
        2,
        vec![
            Complex64::from_polar(1.0, -angle / 2.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::from_polar(1.0, angle / 2.0),
        ],
    )
    .expect("dim 2")
}

fn ry(angle: f64) -> SquareMatrix {
    let (s, c) = (angle / 2.0).sin_cos();
    SquareMatrix::from_real(2, &[c, -s, s, c]).expect("dim 2")
}

fn su2(alpha: f64, beta: f64, gamma: f64) -> SquareMatrix {
    &(&rz(alpha) * &ry(beta)) * &rz(gamma)
}

/// Channel family searched over: pre-unitary (3 Euler angles), then
/// `(1-w) X + w Gamma X Gamma` dephasing with `Gamma` in {sigma_x, sigma_z},
/// then a post-unitary (3 Euler angles). All members act on Alice's factor.
#[derive(Debug, Clone, Copy)]
struct ChannelParams {
    pre: [f64; 3],
    weight: f64,
    gamma_is_x: bool,
    post: [f64; 3],
}

fn objective(rho: &SquareMatrix, target: &[Complex64; 4], p: &ChannelParams) -> f64 {
    let id = SquareMatrix::identity(2);
    let u = kron(&su2(p.pre[0], p.pre[1], p.pre[2]), &id).expect("dim 2");
    let r1 = &(&u * rho) * &u.adjoint();
    let w = p.weight.clamp(0.0, 1.0);
    let gamma2 = if p.gamma_is_x { pauli_x() } else { pauli_z() };
    let gamma = kron(&gamma2, &id).expect("dim 2");
    let r2 = r1
        .scale(Complex64::new(1.0 - w, 0.0))
        .checked_add(&(&(&gamma * &r1) * &gamma).scale(Complex64::new(w, 0.0)))
        .expect("dim 4");
    let v = kron(&su2(p.post[0], p.post[1], p.post[2]), &id).expect("dim 2");
    // <psi| V r2 V† |psi> = <V†psi| r2 |V†psi>
    let vt_psi = v.adjoint().mul_vec(target).expect("dim 4");
    let rv = r2.mul_vec(&vt_psi).expect("dim 4");
    vt_psi
        .iter()
        .zip(&rv)
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        .re
}

/// Lower-bounds the extractability of `rho` toward a pure `target` by
/// maximizing `fidelity_sq((Lambda ⊗ id) rho, target)` over the parameterized
/// channel family (coarse grid, then Nelder-Mead refinement from the best
/// seeds). The identity channel is in the family, so the result is never
/// below `fidelity_sq(rho, target)`.
pub fn extractability_estimate(
    rho: &DensityMatrix,
    target: &PureState,
    cfg: &ChannelSearchConfig,
) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(rho.dim(), 4));
    }
    let m = rho.matrix().clone();
    let t = *target.amplitudes();

    let n_angle = cfg.angle_steps.max(1);
    let n_weight = cfg.weight_steps.max(2);
    let total = n_angle * n_angle * n_angle * n_weight * 2;
    let mut scored: Vec<(f64, ChannelParams)> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rest = idx;
            let ia = rest % n_angle;
            rest /= n_angle;
            let ib = rest % n_angle;
            rest /= n_angle;
            let ic = rest % n_angle;
            rest /= n_angle;
            let iw = rest % n_weight;
            rest /= n_weight;
            let gamma_is_x = rest == 0;
            let step = 2.0 * std::f64::consts::PI / n_angle as f64;
            let p = ChannelParams {
                pre: [ia as f64 * step, ib as f64 * step, ic as f64 * step],
                weight: iw as f64 / (n_weight - 1) as f64,
                gamma_is_x,
                post: [0.0, 0.0, 0.0],
            };
            (objective(&m, &t, &p), p)
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite objective"));

    let identity = ChannelParams {
        pre: [0.0; 3],
        weight: 0.0,
        gamma_is_x: true,
        post: [0.0; 3],
    };
    let mut best = objective(&m, &t, &identity);
    for &(_, seed) in scored.iter().take(cfg.refine_seeds) {
        for gamma_is_x in [seed.gamma_is_x, !seed.gamma_is_x] {
            let refined = nelder_mead(
                |v| {
                    let p = ChannelParams {
                        pre: [v[0], v[1], v[2]],
                        weight: v[3],
                        gamma_is_x,
                        post: [v[4], v[5], v[6]],
                    };
                    objective(&m, &t, &p)
                },
                [
                    seed.pre[0],
                    seed.pre[1],
                    seed.pre[2],
                    seed.weight,
                    seed.post[0],
                    seed.post[1],
                    seed.post[2],
                ],
                cfg.refine_iterations,
            );
            if refined > best {
                best = refined;
            }
        }
    }
    Ok(best.clamp(0.0, 1.0))
}

/// Minimal Nelder-Mead maximizer over R^7 (weight coordinate clamped inside
/// the objective; angles are periodic so unconstrained moves are safe).
fn nelder_mead(f: impl Fn(&[f64; 7]) -> f64, start: [f64; 7], max_iter: usize) -> f64 {
    const N: usize = 7;
    let steps = [0.4, 0.4, 0.4, 0.2, 0.4, 0.4, 0.4];
    let mut simplex: Vec<[f64; 7]> = Vec::with_capacity(N + 1);
    simplex.push(start);
    for i in 0..N {
        let mut p = start;
        p[i] += steps[i];
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(&f).collect();

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=N).collect();
        order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("finite"));
        let best = order[0];
        let worst = order[N];
        let second_worst = order[N - 1];
        if values[best] - values[worst] < 1e-13 {
            break;
        }
        let mut centroid = [0.0; N];
        for &i in order.iter().take(N) {
            for k in 0..N {
                centroid[k] += simplex[i][k] / N as f64;
            }
        }
        let mut reflect = [0.0; N];
        for k in 0..N {
            reflect[k] = centroid[k] + (centroid[k] - simplex[worst][k]);
        }
        let f_reflect = f(&reflect);
        if f_reflect > values[best] {
            let mut expand = [0.0; N];
            for k in 0..N {
                expand[k] = centroid[k] + 2.0 * (centroid[k] - simplex[worst][k]);
            }
            let f_expand = f(&expand);
            if f_expand > f_reflect {
                simplex[worst] = expand;
                values[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                values[worst] = f_reflect;
            }
        } else if f_reflect > values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = f_reflect;
        } else {
            let mut contract = [0.0; N];
            for k in 0..N {
                contract[k] = centroid[k] - 0.5 * (centroid[k] - simplex[worst][k]);
            }
            let f_contract = f(&contract);
            if f_contract > values[worst] {
                simplex[worst] = contract;
                values[worst] = f_contract;
            } else {
                for i in 0..=N {
                    if i == best {
                        continue;
                    }
                    for k in 0..N {
                        simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    values
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Summary of a robustness evaluation: the observed violation, the bound, an
/// extractability lower bound, and the operator-inequality diagnostics grids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub s_observed: f64,
    pub lambda_max: f64,
    pub q: f64,
    pub extractability_lb: f64,
    /// `(vartheta, min eig T)` pairs.
    pub psd_margin_grid: Vec<(f64, f64)>,
    /// `(vartheta, lambda_0, lambda_1)` triples.
    pub lambda_x_grid: Vec<(f64, f64, f64)>,
}

/// Assembles a [`RobustnessReport`] for an observed violation and a test
/// state against a pure target.
pub fn robustness_report(
    s_observed: f64,
    lambda_max: f64,
    rho: &DensityMatrix,
    target: &PureState,
    grid_points: usize,
    search: &ChannelSearchConfig,
) -> Result<RobustnessReport> {
    Ok(RobustnessReport {
        s_observed,
        lambda_max,
        q: q_bound(s_observed, lambda_max)?,
        extractability_lb: extractability_estimate(rho, target, search)?,
        psd_margin_grid: psd_margin_grid(grid_points)?,
        lambda_x_grid: lambda_x_grid(grid_points)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurements::{joint_probability, DichotomicObservable};
    use crate::states::densify;
    use crate::steering::{fgsi_value, SteeringStatistics};

    #[test]
    fn q_bound_anchors() {
        assert!((q_bound(2.0, FRAC_1_SQRT_2_CONST).unwrap() - 1.0).abs() < 1e-12);
        assert!((q_bound(S_LHS, FRAC_1_SQRT_2_CONST).unwrap() - 0.5).abs() < 1e-12);
        let v = q_bound(1.85, 0.8).unwrap();
        assert!((v - 0.8156324676318529).abs() < 1e-12);
        // below the LHS bound: trivial value
        assert!((q_bound(1.0, 0.8).unwrap() - 0.64).abs() < 1e-12);
        assert!(q_bound(2.5, 0.8).is_err());
        assert!(q_bound(1.9, 0.5).is_err());
    }

    #[test]
    fn q_bound_is_affine_between_endpoints() {
        let q1 = q_bound(S_LHS + 0.25 * (2.0 - S_LHS), FRAC_1_SQRT_2_CONST).unwrap();
        assert!((q1 - 0.625).abs() < 1e-12);
        let q3 = q_bound(S_LHS + 0.75 * (2.0 - S_LHS), FRAC_1_SQRT_2_CONST).unwrap();
        assert!((q3 - 0.875).abs() < 1e-12);
    }

    #[test]
    fn constants_match_printed_values() {
        assert!((s_constant() - 1.7071067811865475).abs() < 1e-12);
        assert!((mu_constant() + 2.414213562373095).abs() < 1e-12);
    }

    #[test]
    fn target_state_is_pure_and_maximally_violating() {
        let psi = target_state_rotated();
        assert!((psi.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!((psi.purity() - 1.0).abs() < 1e-10);
        let sq = psi.matrix() * psi.matrix();
        assert!(sq.max_abs_diff(psi.matrix()) < 1e-10);

        // 2p(00|00) + 2p(00|11) with the rotated observables reaches 2.
        let a0 = DichotomicObservable::new(
            [FRAC_1_SQRT_2_CONST, 0.0, FRAC_1_SQRT_2_CONST],
            "(sx+sz)/sqrt2",
        )
        .unwrap();
        let a1 = DichotomicObservable::new(
            [FRAC_1_SQRT_2_CONST, 0.0, -FRAC_1_SQRT_2_CONST],
            "(sx-sz)/sqrt2",
        )
        .unwrap();
        let b0 = DichotomicObservable::sigma_x();
        let b1 = DichotomicObservable::sigma_z();
        let s = 2.0 * joint_probability(&psi, &a0, 0, &b0, 0)
            + 2.0 * joint_probability(&psi, &a1, 0, &b1, 0);
        assert!((s - 2.0).abs() < 1e-10);
    }

    #[test]
    fn target_vector_matches_density() {
        let v = target_state_vector();
        let dens = densify(&v);
        assert!(dens.matrix().max_abs_diff(target_state_rotated().matrix()) < 1e-9);
    }

    #[test]
    fn channel_identity_at_pi_over_4() {
        let ch = ExtractionChannel::new(FRAC_PI_4).unwrap();
        assert!((ch.g() - 1.0).abs() < 1e-12);
        let rho = target_state_rotated();
        let out = channel_apply(&ch, &rho);
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-12);
    }

    #[test]
    fn channel_fully_dephases_at_zero() {
        let ch = ExtractionChannel::new(0.0).unwrap();
        assert!(ch.g().abs() < 1e-12);
        let zero_state = DensityMatrix::from_matrix(
            SquareMatrix::from_real(2, &[1.0, 0.0, 0.0, 0.0]).unwrap(),
        )
        .unwrap();
        let out = channel_apply(&ch, &zero_state);
        assert!(out
            .matrix()
            .max_abs_diff(&SquareMatrix::identity(2).scale(Complex64::new(0.5, 0.0)))
            < 1e-12);
    }

    #[test]
    fn channel_preserves_trace_and_psd() {
        let rho = mixture_family(0.37).unwrap();
        for vt in [0.0, 0.4, FRAC_PI_4, 1.2, FRAC_PI_2] {
            let ch = ExtractionChannel::new(vt).unwrap();
            let out = channel_apply(&ch, &rho);
            assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
            assert!(min_eigenvalue(out.hermitian()) > -1e-12);
        }
    }

    #[test]
    fn k_operator_anchors() {
        // vartheta = pi/4: K = Psi
        let k = k_operator(FRAC_PI_4).unwrap();
        assert!(k.matrix().max_abs_diff(target_state_rotated().matrix()) < 1e-10);
        // vartheta = 0: only the g-independent terms survive
        let k0 = k_operator(0.0).unwrap();
        let id = SquareMatrix::identity(2);
        let expect = quarter(
            pauli_term(&id, &id, 1.0)
                .checked_add(&pauli_term(&pauli_x(), &pauli_x(), 1.0 / SQRT_2))
                .unwrap()
                .checked_add(&pauli_term(&pauli_x(), &pauli_z(), 1.0 / SQRT_2))
                .unwrap(),
        );
        assert!(k0.matrix().max_abs_diff(&expect) < 1e-12);
        for vt in [0.0, 0.3, 0.6, FRAC_PI_4] {
            assert!((k_operator(vt).unwrap().trace_re() - 1.0).abs() < 1e-12);
        }
        assert!(k_operator(1.0).is_err());
    }

    #[test]
    fn w_operator_anchors() {
        let psi = target_state_rotated();
        let w = w_operator(FRAC_PI_4);
        let tr = (w.matrix() * psi.matrix()).trace().re;
        assert!((tr - 2.0).abs() < 1e-12);
        let mm = SquareMatrix::identity(4).scale(Complex64::new(0.25, 0.0));
        let tr_mm = (w_operator(0.7).matrix() * &mm).trace().re;
        assert!((tr_mm - 1.0).abs() < 1e-12);
        assert!(w_operator(0.3).matrix().hermiticity_defect() < 1e-14);
    }

    #[test]
    fn equality_on_target_holds_for_all_vartheta() {
        let psi = target_state_rotated();
        for i in 0..50 {
            let vt = FRAC_PI_4 * i as f64 / 49.0;
            let lhs = (k_operator(vt).unwrap().matrix() * psi.matrix()).trace().re;
            let rhs =
                s_constant() * (w_operator(vt).matrix() * psi.matrix()).trace().re + mu_constant();
            assert!((lhs - rhs).abs() < 1e-12, "vt = {vt}");
        }
    }

    #[test]
    fn product_witness_pins_t_expectation() {
        // Tr[T (I/2 ⊗ |e+><e+|)] = 1/4 - 1/2 = -1/4 exactly, for every vartheta.
        let eplus = crate::measurements::projector(
            &DichotomicObservable::new(crate::steering::e_plus_bloch(), "e+").unwrap(),
            0,
        );
        let witness = kron(
            &SquareMatrix::identity(2).scale(Complex64::new(0.5, 0.0)),
            eplus.matrix(),
        )
        .unwrap();
        for vt in [0.0, 0.2, 0.5, FRAC_PI_4] {
            let t = t_operator(vt).unwrap();
            let val = (t.matrix() * &witness).trace().re;
            assert!((val + 0.25).abs() < 1e-12, "vt = {vt}: {val}");
        }
    }

    #[test]
    fn operator_inequality_sweep_reports_measured_margin() {
        let check = verify_operator_inequality(200, 1e-9).unwrap();
        assert!(!check.ok);
        assert!((check.worst_margin + 2.914213562373095).abs() < 1e-6);
        assert!(check.worst_vartheta.abs() < 1e-9);
    }

    #[test]
    fn block_traces_match_closed_form() {
        for vt in [0.0, 0.19, 0.5, FRAC_PI_4] {
            for x in [0u8, 1] {
                let block = tr_mx_block(vt, x).unwrap();
                let closed = tr_mx_closed(vt, x).unwrap();
                assert!((block - closed).abs() < 1e-10, "vt={vt} x={x}");
            }
        }
        // at vartheta = pi/4 (g = 1): tr M_0 = 2(1/4 - s - mu + 1/4)
        let expect = 2.0 * (0.25 - s_constant() - mu_constant() + 0.25);
        assert!((tr_mx_block(FRAC_PI_4, 0).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn closed_form_square_trace_presumes_commutation() {
        // The printed tr M_x^2 disagrees with the block computation because
        // [T, sy⊗sy] != 0; record the measured gap as a regression anchor.
        let block = {
            let m = block_of_t(0.1, 0).unwrap();
            (m[0][0] * m[0][0] + m[0][1] * m[1][0] + m[1][0] * m[0][1] + m[1][1] * m[1][1]).re
        };
        let closed = tr_mx_sq_closed(0.1, 0).unwrap();
        assert!(closed - block > 1.0, "closed {closed} vs block {block}");
    }

    #[test]
    fn lambda_x_block_values() {
        // lambda_0 sits at zero (the equality direction lives in that block);
        // lambda_1 grows with g and reaches 1 at vartheta = pi/4.
        for vt in [0.0, 0.3, FRAC_PI_4] {
            assert!(lambda_x(vt, 0).unwrap().abs() < 1e-9, "vt = {vt}");
        }
        assert!((lambda_x(FRAC_PI_4, 1).unwrap() - 1.0).abs() < 1e-9);
        assert!(lambda_x(0.0, 1).unwrap().abs() < 1e-9);
    }

    #[test]
    fn mixture_family_anchors() {
        let bell = mixture_family(1.0).unwrap();
        assert!((bell.purity() - 1.0).abs() < 1e-12);
        // q = 0 evaluates to the LHS bound under z/x observables
        let z = DichotomicObservable::sigma_z();
        let x = DichotomicObservable::sigma_x();
        let rho0 = mixture_family(0.0).unwrap();
        let stats = SteeringStatistics::from_state(
            &rho0,
            &[z.clone(), x.clone()],
            &[z.clone(), x.clone()],
            &[(0, 0), (1, 1)],
        )
        .unwrap();
        assert!((fgsi_value(&stats, 0, 0).unwrap() - S_LHS).abs() < 1e-10);
        assert!(mixture_family(1.5).is_err());
    }

    #[test]
    fn mixture_violation_is_affine_and_matches_direct_evaluation() {
        let z = DichotomicObservable::sigma_z();
        let x = DichotomicObservable::sigma_x();
        for i in 0..=10 {
            let q = i as f64 / 10.0;
            let rho = mixture_family(q).unwrap();
            let stats = SteeringStatistics::from_state(
                &rho,
                &[z.clone(), x.clone()],
                &[z.clone(), x.clone()],
                &[(0, 0), (1, 1)],
            )
            .unwrap();
            let s = fgsi_value(&stats, 0, 0).unwrap();
            assert!((s - mixture_violation(q)).abs() < 1e-10, "q = {q}");
        }
    }

    #[test]
    fn extractability_of_target_is_one() {
        let target = target_state_vector();
        let rho = densify(&target);
        let cfg = ChannelSearchConfig {
            refine_iterations: 150,
            ..Default::default()
        };
        let est = extractability_estimate(&rho, &target, &cfg).unwrap();
        assert!(est > 1.0 - 1e-6, "est = {est}");
    }

    #[test]
    fn extractability_never_below_identity_channel() {
        let target = target_state_vector();
        let rho = mixture_family(0.6).unwrap();
        let direct = {
            let t = densify(&target);
            rho.fidelity_sq(&t).unwrap()
        };
        let est = extractability_estimate(&rho, &target, &ChannelSearchConfig::default()).unwrap();
        assert!(est >= direct - 1e-9);
    }

    #[test]
    fn extractability_of_mixture_attains_family_optimum() {
        // Unital family: the optimum over the search family is exactly
        // q + (1-q)/4 (pre-unitary alignment, no dephasing); the maximally
        // mixed input gives 1/4 for every member.
        let target = target_state_vector();
        let cfg = ChannelSearchConfig::default();
        for q in [0.0, 0.5, 1.0] {
            let rho = mixture_family(q).unwrap();
            let est = extractability_estimate(&rho, &target, &cfg).unwrap();
            let optimum = q + (1.0 - q) / 4.0;
            assert!(
                (est - optimum).abs() < 1.5e-3,
                "q = {q}: est = {est}, optimum = {optimum}"
            );
        }
        let mm = DensityMatrix::maximally_mixed(4).unwrap();
        let est = extractability_estimate(&mm, &target, &cfg).unwrap();
        assert!((est - 0.25).abs() < 1e-3, "est = {est}");
    }
}
