//! Two-receiver MIMO Gaussian broadcast channel with a common message `W0`
//! and two mutually confidential messages `W1`, `W2`.
//!
//! The capacity region is parameterized by a [`CovarianceSplit`]
//! `(B0, B1)` with `B0, B1 ⪰ 0` and `B0 + B1 ⪯ S`. Rate bounds are available
//! in the direct form (channel matrices `H1`, `H2`) and in the canonical form
//! (noise covariances `Nk = Hk⁻¹·Hk⁻ᵀ`).

mod enhance;
mod kkt;
mod solve;
mod trace;

pub use enhance::{enhance, EnhancedNoise, ENHANCEMENT_FLAG_TOL};
pub use kkt::{kkt_check, KktCertificate};
pub use solve::{weighted_sum_solve, SolveConfig, WeightedSumSolution};
pub use trace::{cross_section, region_trace, RegionSurface, SurfaceSample, TraceConfig};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{logdet, logdet_inv, SymMatrix, DEFAULT_PSD_TOL};

/// Default perturbation applied to ill-conditioned channel matrices before
/// inversion.
pub const DEFAULT_CANONICAL_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSplit {
    pub b0: SymMatrix,
    pub b1: SymMatrix,
}

impl CovarianceSplit {
    pub fn new(b0: SymMatrix, b1: SymMatrix) -> Self {
        Self { b0, b1 }
    }

    /// `S − B0 − B1`.
    pub fn slack(&self, s: &SymMatrix) -> SymMatrix {
        &(s - &self.b0) - &self.b1
    }

    /// Largest violation of `B0 ⪰ 0`, `B1 ⪰ 0`, `B0 + B1 ⪯ S` (0 if feasible).
    pub fn violation(&self, s: &SymMatrix) -> Result<f64> {
        s.check_same_dim(&self.b0)?;
        s.check_same_dim(&self.b1)?;
        let worst = [self.b0.min_eigenvalue(), self.b1.min_eigenvalue(), self.slack(s).min_eigenvalue()]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        Ok((-worst).max(0.0))
    }

    pub fn validate(&self, s: &SymMatrix) -> Result<()> {
        let v = self.violation(s)?;
        if v > split_tol(s) {
            return Err(Error::Infeasible(format!(
                "split violates B0, B1 >= 0, B0 + B1 <= S by {v:e}"
            )));
        }
        Ok(())
    }
}

/// Feasibility tolerance for splits, relative to the scale of `S`.
pub(crate) fn split_tol(s: &SymMatrix) -> f64 {
    DEFAULT_PSD_TOL * s.max_eigenvalue().abs().max(1.0)
}

/// The aligned channel `Yk = X + Zk` with noise covariances `N1`, `N2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalChannel {
    pub n1: SymMatrix,
    pub n2: SymMatrix,
    pub s: SymMatrix,
    /// Whether `H1` / `H2` was perturbed by `eps·I` before inversion.
    pub perturbed: [bool; 2],
    pub eps: f64,
}

impl CanonicalChannel {
    pub fn new(n1: SymMatrix, n2: SymMatrix, s: SymMatrix) -> Result<Self> {
        n1.check_same_dim(&s)?;
        n2.check_same_dim(&s)?;
        for (name, m) in [("N1", &n1), ("N2", &n2), ("S", &s)] {
            let min_eig = m.min_eigenvalue();
            if !(min_eig > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive definite (min eigenvalue {min_eig:e})")));
            }
        }
        Ok(Self { n1, n2, s, perturbed: [false; 2], eps: 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    /// Swaps the roles of the two receivers.
    pub fn swapped(&self) -> Self {
        Self {
            n1: self.n2.clone(),
            n2: self.n1.clone(),
            s: self.s.clone(),
            perturbed: [self.perturbed[1], self.perturbed[0]],
            eps: self.eps,
        }
    }

    /// `R0_max = min_k ½·log(|S + Nk| / |Nk|)`.
    pub fn r0_max(&self) -> Result<f64> {
        let a = 0.5 * (logdet(&(&self.s + &self.n1))? - logdet(&self.n1)?);
        let b = 0.5 * (logdet(&(&self.s + &self.n2))? - logdet(&self.n2)?);
        Ok(a.min(b))
    }
}

fn condition_number(h: &DMatrix<f64>) -> f64 {
    let sv = h.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn noise_from_channel(h: &DMatrix<f64>, eps: f64) -> Result<(SymMatrix, bool)> {
    let n = h.nrows();
    let perturb = condition_number(h) > 1.0 / eps;
    let h = if perturb { h + DMatrix::identity(n, n) * eps } else { h.clone() };
    let inv = h
        .try_inverse()
        .ok_or_else(|| Error::Numerical("channel matrix singular after perturbation".into()))?;
    Ok((SymMatrix::new(&inv * inv.transpose()), perturb))
}

/// Rewrites `Yk = Hk·X + Zk` as `Yk = X + Zk'` with `Nk = Hk⁻¹·Hk⁻ᵀ`.
/// A channel with condition number above `1/eps` is replaced by
/// `Hk + eps·I` first, and the substitution is recorded in
/// [`CanonicalChannel::perturbed`].
pub fn canonicalize(h1: &DMatrix<f64>, h2: &DMatrix<f64>, s: &SymMatrix, eps: f64) -> Result<CanonicalChannel> {
    for h in [h1, h2] {
        if h.nrows() != h.ncols() {
            return Err(Error::NonSquare { rows: h.nrows(), cols: h.ncols() });
        }
        if h.nrows() != s.dim() {
            return Err(Error::Dimension(format!("channel is {}x{}, S is {}x{}", h.nrows(), h.ncols(), s.dim(), s.dim())));
        }
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
    }
    let (n1, p1) = noise_from_channel(h1, eps)?;
    let (n2, p2) = noise_from_channel(h2, eps)?;
    let mut cc = CanonicalChannel::new(n1, n2, s.clone())?;
    cc.perturbed = [p1, p2];
    cc.eps = eps;
    Ok(cc)
}

/// Bound values for `(R0, R1, R2)`; `clamped[k]` marks a negative raw bound
/// that was replaced by zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTriple {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub clamped: [bool; 3],
}

impl RateTriple {
    pub fn from_bounds(raw: [f64; 3]) -> Self {
        Self {
            r0: raw[0].max(0.0),
            r1: raw[1].max(0.0),
            r2: raw[2].max(0.0),
            clamped: [raw[0] < 0.0, raw[1] < 0.0, raw[2] < 0.0],
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.r0, self.r1, self.r2]
    }
}

fn ld_plus_congruence(h: &DMatrix<f64>, x: &SymMatrix) -> Result<f64> {
    logdet(&(&SymMatrix::identity(h.nrows()) + &x.congruence(h)))
}

/// Raw right-hand sides of the three-message region for channel matrices of
/// arbitrary shape (no inversion needed).
pub fn thm2_bounds(h1: &DMatrix<f64>, h2: &DMatrix<f64>, s: &SymMatrix, split: &CovarianceSplit) -> Result<[f64; 3]> {
    if h1.ncols() != s.dim() || h2.ncols() != s.dim() {
        return Err(Error::Dimension("channel columns must match dim(S)".into()));
    }
    split.validate(s)?;
    let k = s - &split.b0;
    let full1 = ld_plus_congruence(h1, s)?;
    let full2 = ld_plus_congruence(h2, s)?;
    let k1 = ld_plus_congruence(h1, &k)?;
    let k2 = ld_plus_congruence(h2, &k)?;
    let b1 = ld_plus_congruence(h1, &split.b1)?;
    let b2 = ld_plus_congruence(h2, &split.b1)?;
    let r0 = (0.5 * (full1 - k1)).min(0.5 * (full2 - k2));
    let r1 = 0.5 * b1 - 0.5 * b2;
    let r2 = 0.5 * (k2 - b2) - 0.5 * (k1 - b1);
    Ok([r0, r1, r2])
}

pub fn thm2_rates(h1: &DMatrix<f64>, h2: &DMatrix<f64>, s: &SymMatrix, split: &CovarianceSplit) -> Result<RateTriple> {
    Ok(RateTriple::from_bounds(thm2_bounds(h1, h2, s, split)?))
}

/// The objectives of the weighted-sum program, with both components of `f0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FValues {
    pub f0: f64,
    pub f0_parts: [f64; 2],
    pub f1: f64,
    pub f2: f64,
}

/// Evaluates `f0(B0)`, `f1(B1)`, `f2(B0, B1)` in canonical form.
pub fn f_objectives(cc: &CanonicalChannel, split: &CovarianceSplit) -> Result<FValues> {
    split.validate(&cc.s)?;
    f_objectives_unchecked(cc, split)
}

pub(crate) fn f_objectives_unchecked(cc: &CanonicalChannel, split: &CovarianceSplit) -> Result<FValues> {
    let k = &cc.s - &split.b0;
    let ld = |x: &SymMatrix, n: &SymMatrix| logdet(&(x + n));
    let (k1, k2) = (ld(&k, &cc.n1)?, ld(&k, &cc.n2)?);
    let (b1, b2) = (ld(&split.b1, &cc.n1)?, ld(&split.b1, &cc.n2)?);
    let (n1, n2) = (logdet(&cc.n1)?, logdet(&cc.n2)?);
    let f01 = 0.5 * (ld(&cc.s, &cc.n1)? - k1);
    let f02 = 0.5 * (ld(&cc.s, &cc.n2)? - k2);
    Ok(FValues {
        f0: f01.min(f02),
        f0_parts: [f01, f02],
        f1: 0.5 * (b1 - n1) - 0.5 * (b2 - n2),
        f2: 0.5 * (k2 - b2) - 0.5 * (k1 - b1),
    })
}

/// Gradients of the objectives with respect to `(B0, B1)`. `f1` does not
/// depend on `B0`, the `f0` components do not depend on `B1`, and
/// `∂f2/∂B1 = ∂f1/∂B1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FGradients {
    pub values: FValues,
    /// `∂f0k/∂B0 = ½(S − B0 + Nk)⁻¹`.
    pub d_f0: [SymMatrix; 2],
    pub d_f1_b1: SymMatrix,
    pub d_f2_b0: SymMatrix,
}

/// Values and gradients of the objectives. The split need not be feasible,
/// only `S − B0 + Nk` and `B1 + Nk` positive definite.
pub fn f_gradients(cc: &CanonicalChannel, split: &CovarianceSplit) -> Result<FGradients> {
    let k = &cc.s - &split.b0;
    let (k1, a1) = logdet_inv(&(&k + &cc.n1))?;
    let (k2, a2) = logdet_inv(&(&k + &cc.n2))?;
    let (l1, c1) = logdet_inv(&(&split.b1 + &cc.n1))?;
    let (l2, c2) = logdet_inv(&(&split.b1 + &cc.n2))?;
    let (n1, n2) = (logdet(&cc.n1)?, logdet(&cc.n2)?);
    let f01 = 0.5 * (logdet(&(&cc.s + &cc.n1))? - k1);
    let f02 = 0.5 * (logdet(&(&cc.s + &cc.n2))? - k2);
    Ok(FGradients {
        values: FValues {
            f0: f01.min(f02),
            f0_parts: [f01, f02],
            f1: 0.5 * (l1 - n1) - 0.5 * (l2 - n2),
            f2: 0.5 * (k2 - l2) - 0.5 * (k1 - l1),
        },
        d_f0: [a1.scale(0.5), a2.scale(0.5)],
        d_f1_b1: (&c1 - &c2).scale(0.5),
        d_f2_b0: (&a1 - &a2).scale(0.5),
    })
}

/// Raw canonical bounds; identical to `(f0, f1, f2)`.
pub fn thm2_canonical_bounds(cc: &CanonicalChannel, split: &CovarianceSplit) -> Result<[f64; 3]> {
    let f = f_objectives(cc, split)?;
    Ok([f.f0, f.f1, f.f2])
}

pub fn thm2_canonical_rates(cc: &CanonicalChannel, split: &CovarianceSplit) -> Result<RateTriple> {
    Ok(RateTriple::from_bounds(thm2_canonical_bounds(cc, split)?))
}

/// `F = B·H1ᵀ·(I + H1·B·H1ᵀ)⁻¹·H1`, the coefficient coupling the two
/// confidential codewords in the dirty-paper style achievability scheme.
pub fn precoding_matrix(b: &SymMatrix, h1: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if h1.ncols() != b.dim() {
        return Err(Error::Dimension(format!("H1 has {} columns, B is {}x{}", h1.ncols(), b.dim(), b.dim())));
    }
    let inner = (&SymMatrix::identity(h1.nrows()) + &b.congruence(h1)).inverse_pd()?;
    Ok(b.as_matrix() * h1.transpose() * inner.as_matrix() * h1)
}
