//! Entropies and mutual informations of the auxiliary chain, in nats, with
//! `0·ln 0 = 0`.

use serde::{Deserialize, Serialize};

use super::{DmcWiretapSpec, JointAuxDist};
use crate::error::Result;

/// `H(p) = −Σ p ln p`.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoTerms {
    pub i_uy: f64,
    pub i_vy_given_u: f64,
    pub i_vz_given_u: f64,
    /// `I(V;Y) = I(U;Y) + I(V;Y|U)` by the chain rule.
    pub i_vy: f64,
}

impl InfoTerms {
    /// `I(V;Y|U) − I(V;Z|U)`, floored at 0.
    pub fn secrecy(&self) -> f64 {
        (self.i_vy_given_u - self.i_vz_given_u).max(0.0)
    }
}

/// `I(U;Out)` and `I(V;Out|U)` for an output law `p(out|v)`.
fn pair(dist: &JointAuxDist, p_out_given_v: &[Vec<f64>]) -> (f64, f64) {
    let out = p_out_given_v.first().map_or(0, Vec::len);
    let mix = |weights: &[f64]| -> Vec<f64> {
        (0..out).map(|o| weights.iter().zip(p_out_given_v).map(|(w, row)| w * row[o]).sum()).collect()
    };
    let h_out_given_v: Vec<f64> = p_out_given_v.iter().map(|r| entropy(r)).collect();
    let mut p_out = vec![0.0; out];
    let mut h_out_given_u = 0.0;
    let mut h_out_given_uv = 0.0;
    for (pu, pv) in dist.p_u.iter().zip(&dist.p_v_given_u) {
        let p_out_u = mix(pv);
        h_out_given_u += pu * entropy(&p_out_u);
        h_out_given_uv += pu * pv.iter().zip(&h_out_given_v).map(|(a, h)| a * h).sum::<f64>();
        for (acc, p) in p_out.iter_mut().zip(&p_out_u) {
            *acc += pu * p;
        }
    }
    ((entropy(&p_out) - h_out_given_u).max(0.0), (h_out_given_u - h_out_given_uv).max(0.0))
}

/// `I(U;Y)`, `I(V;Y|U)`, `I(V;Z|U)` and `I(V;Y)` for the chain
/// `U → V → X → (Y, Z)`.
pub fn mutual_info_terms(spec: &DmcWiretapSpec, dist: &JointAuxDist) -> Result<InfoTerms> {
    dist.check_channel(spec)?;
    let (i_uy, i_vy_given_u) = pair(dist, &dist.through(&spec.p_y_given_x()));
    let (_, i_vz_given_u) = pair(dist, &dist.through(&spec.p_z_given_x()));
    Ok(InfoTerms { i_uy, i_vy_given_u, i_vz_given_u, i_vy: i_uy + i_vy_given_u })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn h2(p: f64) -> f64 {
        entropy(&[p, 1.0 - p])
    }

    #[test]
    fn entropy_conventions() {
        assert_eq!(entropy(&[1.0, 0.0]), 0.0);
        assert_relative_eq!(entropy(&[0.25; 4]), 4.0_f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn bsc_pair_direct_input() {
        let spec = DmcWiretapSpec::bsc_pair(0.1, 0.3).unwrap();
        let t = mutual_info_terms(&spec, &JointAuxDist::direct(&[0.5, 0.5]).unwrap()).unwrap();
        assert_eq!(t.i_uy, 0.0);
        assert_relative_eq!(t.i_vy_given_u, 2.0_f64.ln() - h2(0.1), epsilon = 1e-14);
        assert_relative_eq!(t.i_vz_given_u, 2.0_f64.ln() - h2(0.3), epsilon = 1e-14);
        assert_relative_eq!(t.secrecy(), h2(0.3) - h2(0.1), epsilon = 1e-14);
    }

    #[test]
    fn noiseless_main_channel_gives_input_entropy() {
        let spec = DmcWiretapSpec::from_marginals(
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            &[vec![1.0 / 3.0; 3], vec![1.0 / 3.0; 3], vec![1.0 / 3.0; 3]],
        )
        .unwrap();
        let px = [0.2, 0.3, 0.5];
        let t = mutual_info_terms(&spec, &JointAuxDist::direct(&px).unwrap()).unwrap();
        assert_relative_eq!(t.i_vy_given_u, entropy(&px), epsilon = 1e-14);
        assert!(t.i_vz_given_u.abs() < 1e-15);
    }

    #[test]
    fn chain_rule_with_superposition() {
        let spec = DmcWiretapSpec::bsc_pair(0.05, 0.2).unwrap();
        let dist = JointAuxDist::new(
            vec![0.3, 0.7],
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![vec![0.95, 0.05], vec![0.1, 0.9]],
        )
        .unwrap();
        let t = mutual_info_terms(&spec, &dist).unwrap();
        // Direct I(V;Y) from the marginal of V.
        let pv = [0.3 * 0.9 + 0.7 * 0.2, 0.3 * 0.1 + 0.7 * 0.8];
        let direct = JointAuxDist::new(vec![1.0], vec![pv.to_vec()], dist.p_x_given_v.clone()).unwrap();
        let d = mutual_info_terms(&spec, &direct).unwrap();
        assert_relative_eq!(t.i_vy, d.i_vy_given_u, epsilon = 1e-14);
        assert!(t.i_uy > 0.0);
    }
}
