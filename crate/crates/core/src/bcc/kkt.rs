//! KKT certificate for a candidate solution of the weighted-sum program.
//!
//! Multipliers use the doubled scaling `Mi = 2·Λi`, so stationarity reads
//! `M0 = G0 + M2` and `M1 = G1 + M2` with
//! `G0 = (λ2 − β2)(K+N2)⁻¹ − (λ2 + β1)(K+N1)⁻¹`,
//! `G1 = (λ1 + λ2)[(B1+N2)⁻¹ − (B1+N1)⁻¹]` and `K = S − B0`.
//! `M2` is the symmetric least-squares minimizer of the complementary
//! slackness residuals.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{f_objectives_unchecked, CanonicalChannel, CovarianceSplit};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktCertificate {
    pub m0: SymMatrix,
    pub m1: SymMatrix,
    pub m2: SymMatrix,
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub r0_target: f64,
    /// Whether each `f0` component is within `tol` of `r0_target`.
    pub active: [bool; 2],
    pub residuals: BTreeMap<String, f64>,
    pub tol: f64,
    pub passed: bool,
}

fn sym_basis(d: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            let mut e = DMatrix::zeros(d, d);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            out.push(e);
        }
    }
    out
}

/// Symmetric `X` minimizing `Σ ‖(Gi + X)·Pi‖²`.
fn least_squares_shift(terms: &[(&DMatrix<f64>, &DMatrix<f64>)], d: usize) -> Result<SymMatrix> {
    let basis = sym_basis(d);
    let rows = terms.len() * d * d;
    let mut a = DMatrix::zeros(rows, basis.len());
    let mut b = DVector::zeros(rows);
    for (t, (g, p)) in terms.iter().enumerate() {
        let rhs = -(*g * *p);
        for (c, e) in basis.iter().enumerate() {
            let col = e * *p;
            for (idx, v) in col.iter().enumerate() {
                a[(t * d * d + idx, c)] = *v;
            }
        }
        for (idx, v) in rhs.iter().enumerate() {
            b[t * d * d + idx] = *v;
        }
    }
    let svd = a.svd(true, true);
    let cutoff = svd.singular_values.max() * 1e-13;
    let x = svd
        .solve(&b, cutoff.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Numerical(format!("KKT least squares failed: {e}")))?;
    let mut m = DMatrix::zeros(d, d);
    for (c, e) in basis.iter().enumerate() {
        m += e * x[c];
    }
    Ok(SymMatrix::new(m))
}

/// Builds `M0, M1, M2` from the stationarity equations and reports the
/// residuals of the remaining KKT conditions. Pass/fail is carried in the
/// certificate.
pub fn kkt_check(
    cc: &CanonicalChannel,
    split: &CovarianceSplit,
    lambda: (f64, f64),
    beta: (f64, f64),
    r0_target: f64,
    tol: f64,
) -> Result<KktCertificate> {
    let d = cc.dim();
    split.b0.check_same_dim(&cc.s)?;
    split.b1.check_same_dim(&cc.s)?;
    let (l1, l2) = lambda;
    let (beta1, beta2) = beta;
    let k = &cc.s - &split.b0;
    let slack = split.slack(&cc.s);
    let a1 = (&k + &cc.n1).inverse_pd()?;
    let a2 = (&k + &cc.n2).inverse_pd()?;
    let c1 = (&split.b1 + &cc.n1).inverse_pd()?;
    let c2 = (&split.b1 + &cc.n2).inverse_pd()?;
    let g0 = &a2.scale(l2 - beta2) - &a1.scale(l2 + beta1);
    let g1 = (&c2 - &c1).scale(l1 + l2);
    let zero = DMatrix::zeros(d, d);
    let m2 = least_squares_shift(
        &[
            (g0.as_matrix(), split.b0.as_matrix()),
            (g1.as_matrix(), split.b1.as_matrix()),
            (&zero, slack.as_matrix()),
        ],
        d,
    )?;
    let m0 = &g0 + &m2;
    let m1 = &g1 + &m2;

    let f = f_objectives_unchecked(cc, split)?;
    let mut residuals = BTreeMap::new();
    let neg = |m: &SymMatrix| (-m.min_eigenvalue()).max(0.0);
    residuals.insert("m0_psd".to_string(), neg(&m0));
    residuals.insert("m1_psd".to_string(), neg(&m1));
    residuals.insert("m2_psd".to_string(), neg(&m2));
    residuals.insert("slack_m0_b0".to_string(), (m0.as_matrix() * split.b0.as_matrix()).norm());
    residuals.insert("slack_m1_b1".to_string(), (m1.as_matrix() * split.b1.as_matrix()).norm());
    residuals.insert("slack_m2_rest".to_string(), (m2.as_matrix() * slack.as_matrix()).norm());
    residuals.insert("split_feasibility".to_string(), split.violation(&cc.s)?);
    residuals.insert("r0_feasibility".to_string(), (r0_target - f.f0).max(0.0));
    residuals.insert("beta1_activity".to_string(), beta1.abs() * (f.f0_parts[0] - r0_target).abs());
    residuals.insert("beta2_activity".to_string(), beta2.abs() * (f.f0_parts[1] - r0_target).abs());
    residuals.insert("multiplier_sign".to_string(), [l1, l2, beta1, beta2].iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max));
    let passed = residuals.values().all(|v| v.is_finite() && *v <= tol);
    Ok(KktCertificate {
        m0,
        m1,
        m2,
        lambda1: l1,
        lambda2: l2,
        beta1,
        beta2,
        r0_target,
        active: [(f.f0_parts[0] - r0_target).abs() <= tol, (f.f0_parts[1] - r0_target).abs() <= tol],
        residuals,
        tol,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcc::tests::{example_h1, example_h2, example_s};
    use crate::bcc::{canonicalize, weighted_sum_solve, SolveConfig};

    #[test]
    fn interior_point_needs_zero_multipliers() {
        // Interior split that is not stationary: the residuals expose it.
        let cc = canonicalize(&example_h1(), &example_h2(), &example_s(), 1e-6).unwrap();
        let split = CovarianceSplit::new(example_s().scale(0.3), example_s().scale(0.3));
        let cert = kkt_check(&cc, &split, (0.5, 0.5), (0.0, 0.0), 0.0, 1e-4).unwrap();
        assert!(!cert.passed);
    }

    #[test]
    fn equal_noise_equal_weights_gives_m1_equal_m2() {
        let n = SymMatrix::from_rows(&[vec![0.5, 0.1], vec![0.1, 0.3]]).unwrap();
        let cc = CanonicalChannel::new(n.clone(), n, example_s()).unwrap();
        let split = CovarianceSplit::new(SymMatrix::diag(&[1.0, 0.0]), SymMatrix::diag(&[0.5, 2.0]));
        let cert = kkt_check(&cc, &split, (0.5, 0.5), (0.0, 0.0), 0.0, 1e-4).unwrap();
        assert!((&cert.m1 - &cert.m2).norm() < 1e-12);
    }

    #[test]
    fn solver_output_is_certified() {
        let cc = canonicalize(&example_h1(), &example_h2(), &example_s(), 1e-6).unwrap();
        for (l1, l2, frac) in [(0.7, 0.3, 0.0), (0.4, 0.6, 0.4), (1.0, 0.0, 0.2)] {
            let r0 = frac * cc.r0_max().unwrap();
            let sol = weighted_sum_solve(&cc, l1, l2, r0, &SolveConfig::default()).unwrap();
            let cert = kkt_check(&cc, &sol.split, (l1, l2), (sol.beta[0], sol.beta[1]), r0, 1e-4).unwrap();
            assert!(cert.passed, "{l1} {l2} {frac}: {:?}", cert.residuals);
        }
    }

    #[test]
    fn negative_multiplier_fails() {
        let cc = canonicalize(&example_h1(), &example_h2(), &example_s(), 1e-6).unwrap();
        let split = CovarianceSplit::new(example_s(), SymMatrix::zeros(2));
        let cert = kkt_check(&cc, &split, (-1.0, 0.5), (0.0, 0.0), 0.0, 1e-4).unwrap();
        assert!(cert.residuals["multiplier_sign"] > 0.0);
        assert!(!cert.passed);
    }
}
