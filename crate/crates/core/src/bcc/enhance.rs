//! Enhanced noise covariance built from a KKT certificate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CanonicalChannel, CovarianceSplit, KktCertificate};
use crate::error::{Error, Result};
use crate::linalg::{logdet, SymMatrix};

/// Identity residuals above this relative error are flagged.
pub const ENHANCEMENT_FLAG_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhancedNoise {
    pub n_tilde: SymMatrix,
    /// Relative residuals of the ordering and identity checks.
    pub residuals: BTreeMap<String, f64>,
    pub flagged: Vec<String>,
    pub certificate_passed: bool,
}

impl EnhancedNoise {
    pub fn ok(&self) -> bool {
        self.certificate_passed && self.flagged.is_empty()
    }
}

fn rel(diff: &SymMatrix, reference: &SymMatrix) -> f64 {
    diff.norm() / reference.norm().max(1e-300)
}

/// `Ñ = (N1⁻¹ + M1/(λ1+λ2))⁻¹`, with the orderings `Ñ ⪯ N1`, `Ñ ⪯ N2`
/// and the determinant, resolvent, proportionality and rate-preservation
/// identities checked at `B1`.
pub fn enhance(cc: &CanonicalChannel, cert: &KktCertificate, split: &CovarianceSplit) -> Result<EnhancedNoise> {
    let total = cert.lambda1 + cert.lambda2;
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("enhancement needs lambda1 + lambda2 > 0".into()));
    }
    let n1_inv = cc
        .n1
        .inverse_pd()
        .map_err(|_| Error::Numerical("N1 is singular".into()))?;
    let n_tilde = (&n1_inv + &cert.m1.scale(1.0 / total)).inverse_pd()?;
    let b1 = &split.b1;
    let k = &cc.s - &split.b0;

    let mut residuals = BTreeMap::new();
    let below = |upper: &SymMatrix| (-(upper - &n_tilde).min_eigenvalue()).max(0.0) / upper.norm();
    residuals.insert("n_tilde_leq_n1".to_string(), below(&cc.n1));
    residuals.insert("n_tilde_leq_n2".to_string(), below(&cc.n2));

    let ld_bt = logdet(&(b1 + &n_tilde))?;
    let ld_b1 = logdet(&(b1 + &cc.n1))?;
    let ld_b2 = logdet(&(b1 + &cc.n2))?;
    let ld_kt = logdet(&(&k + &n_tilde))?;
    let ld_k2 = logdet(&(&k + &cc.n2))?;
    // Log-domain differences are relative determinant errors to first order.
    residuals.insert(
        "determinant".to_string(),
        ((ld_bt + logdet(&cc.n1)?) - (ld_b1 + logdet(&n_tilde)?)).abs(),
    );

    let res_t = (b1 + &n_tilde).inverse_pd()?.scale(total);
    let res_1 = (b1 + &cc.n1).inverse_pd()?.scale(total);
    let res_2 = (b1 + &cc.n2).inverse_pd()?.scale(total);
    residuals.insert("resolvent_n1".to_string(), rel(&(&(&res_t - &res_1) - &cert.m1), &res_t));
    residuals.insert("resolvent_n2".to_string(), rel(&(&(&res_t - &res_2) - &cert.m2), &res_t));

    let lhs = (&k + &n_tilde).as_matrix() * (b1 + &n_tilde).inverse_pd()?.as_matrix();
    let rhs = (&k + &cc.n2).as_matrix() * (b1 + &cc.n2).inverse_pd()?.as_matrix();
    residuals.insert("proportionality".to_string(), (&lhs - &rhs).norm() / rhs.norm());
    residuals.insert("rate_preservation".to_string(), ((ld_kt - ld_bt) - (ld_k2 - ld_b2)).abs());

    let flagged = residuals
        .iter()
        .filter(|(_, v)| !(**v <= ENHANCEMENT_FLAG_TOL))
        .map(|(k, _)| k.clone())
        .collect();
    Ok(EnhancedNoise { n_tilde, residuals, flagged, certificate_passed: cert.passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcc::kkt_check;
    use crate::bcc::tests::{example_h1, example_h2, example_s};
    use crate::bcc::{canonicalize, weighted_sum_solve, SolveConfig};

    #[test]
    fn zero_m1_leaves_n1_unchanged() {
        let n = SymMatrix::from_rows(&[vec![0.5, 0.1], vec![0.1, 0.3]]).unwrap();
        let cc = CanonicalChannel::new(n.clone(), n.clone(), example_s()).unwrap();
        let split = CovarianceSplit::new(SymMatrix::zeros(2), SymMatrix::zeros(2));
        let cert = kkt_check(&cc, &split, (0.5, 0.5), (0.0, 0.0), 0.0, 1e-4).unwrap();
        assert!(cert.m1.norm() < 1e-12);
        let e = enhance(&cc, &cert, &split).unwrap();
        assert!((&e.n_tilde - &n).norm() < 1e-12);
        assert!(e.residuals["proportionality"] < 1e-12);
    }

    #[test]
    fn rejects_zero_weights() {
        let cc = canonicalize(&example_h1(), &example_h2(), &example_s(), 1e-6).unwrap();
        let split = CovarianceSplit::new(example_s(), SymMatrix::zeros(2));
        let cert = kkt_check(&cc, &split, (0.0, 0.0), (0.0, 0.0), 0.0, 1e-4).unwrap();
        assert!(matches!(enhance(&cc, &cert, &split), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn certified_solution_satisfies_identities() {
        let cc = canonicalize(&example_h1(), &example_h2(), &example_s(), 1e-6).unwrap();
        for (l1, l2, frac) in [(0.7, 0.3, 0.0), (0.4, 0.6, 0.3)] {
            let r0 = frac * cc.r0_max().unwrap();
            let sol = weighted_sum_solve(&cc, l1, l2, r0, &SolveConfig::default()).unwrap();
            let cert = kkt_check(&cc, &sol.split, (l1, l2), (sol.beta[0], sol.beta[1]), r0, 1e-4).unwrap();
            let e = enhance(&cc, &cert, &sol.split).unwrap();
            assert!(e.ok(), "{:?}", e.residuals);
        }
    }
}
