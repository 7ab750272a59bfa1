//! `I(Ws; Z^n)/n` for a realized code, with the messages uniform, the
//! randomization codeword uniform within its sub-bin, and the channel to
//! the eavesdropper applied symbol-wise.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::WiretapCode;
use crate::error::{Error, Result};
use crate::rng;

/// Default cap on `|Z|^n · (codewords averaged over)` for exact leakage.
pub const DEFAULT_LEAKAGE_BUDGET: u128 = 1 << 26;

const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageEstimate {
    /// Nats per channel use.
    pub per_symbol: f64,
    /// Standard error of `per_symbol`; `None` for the exact computation.
    pub stderr: Option<f64>,
}

/// Codewords grouped by confidential message: `groups[k]` lists the flat
/// indices of every `(j, k, l, t)` with `j` a message index.
fn groups(code: &WiretapCode) -> Vec<Vec<usize>> {
    let s = &code.sizes;
    (0..s.bins)
        .map(|k| {
            let mut g = Vec::with_capacity(s.u_messages * s.sub_bins * s.per_sub_bin);
            for j in 0..s.u_messages {
                for l in 0..s.sub_bins {
                    for t in 0..s.per_sub_bin {
                        g.push(code.flat_index(j, k, l, t));
                    }
                }
            }
            g
        })
        .collect()
}

/// `P(z^n | Ws = k)` for every `k`.
fn conditionals(code: &WiretapCode, groups: &[Vec<usize>], z: &[usize]) -> Vec<f64> {
    let words = code.v_codewords();
    let pz = &code.p_z_given_v;
    groups
        .iter()
        .map(|g| {
            let total: f64 = g
                .iter()
                .map(|&c| words[c].iter().zip(z).map(|(&v, &zs)| pz[v][zs]).product::<f64>())
                .sum();
            total / g.len() as f64
        })
        .collect()
}

/// `Σ_k P(k)·P(z|k)·ln(P(z|k)/P(z))` for uniform `Ws`.
fn pointwise(cond: &[f64]) -> f64 {
    let k = cond.len() as f64;
    let pz: f64 = cond.iter().sum::<f64>() / k;
    if pz <= 0.0 {
        return 0.0;
    }
    cond.iter().filter(|&&p| p > 0.0).map(|&p| p * (p / pz).ln()).sum::<f64>() / k
}

fn clamp(code: &WiretapCode, per_symbol: f64) -> f64 {
    let cap = (code.sizes.bins as f64).ln() / code.n() as f64;
    per_symbol.clamp(0.0, cap)
}

/// Exact leakage by enumerating every `z^n`. Errors when
/// `|Z|^n · codewords` exceeds `budget`.
pub fn exact_leakage(code: &WiretapCode, budget: u128) -> Result<f64> {
    let s = &code.sizes;
    let n = code.n();
    let words = (s.u_messages * s.sub_bins * s.per_sub_bin * s.bins) as u128;
    let outputs = (code.spec.z_size as u128).checked_pow(n as u32);
    let required = outputs.and_then(|o| o.checked_mul(words)).unwrap_or(u128::MAX);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    if s.bins == 1 {
        return Ok(0.0);
    }
    let outputs = outputs.unwrap_or(u128::MAX) as usize;
    let zs = code.spec.z_size;
    let g = groups(code);
    let chunks: Vec<f64> = (0..outputs.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut z = vec![0usize; n];
            let mut acc = 0.0;
            for idx in c * CHUNK..((c + 1) * CHUNK).min(outputs) {
                let mut rest = idx;
                for zi in z.iter_mut() {
                    *zi = rest % zs;
                    rest /= zs;
                }
                acc += pointwise(&conditionals(code, &g, &z));
            }
            acc
        })
        .collect();
    Ok(clamp(code, chunks.iter().sum::<f64>() / n as f64))
}

/// Monte Carlo over `z^n` with the exact posterior over the codebook:
/// averages `ln(P(z|Ws)/P(z))` over `samples` draws of the full chain.
pub fn monte_carlo_leakage(code: &WiretapCode, samples: usize, seed: u64) -> Result<LeakageEstimate> {
    if samples < 2 {
        return Err(Error::InvalidArgument("Monte Carlo leakage needs at least 2 samples".into()));
    }
    let s = &code.sizes;
    let n = code.n();
    if s.bins == 1 {
        return Ok(LeakageEstimate { per_symbol: 0.0, stderr: Some(0.0) });
    }
    let g = groups(code);
    let z_draw = code
        .p_z_given_v
        .iter()
        .map(|row| WeightedIndex::new(row).map_err(|e| Error::Numerical(format!("bad p(z|v): {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let draws: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let k = r.random_range(0..s.bins);
            let member = g[k][r.random_range(0..g[k].len())];
            let z: Vec<usize> = code.v_codewords()[member]
                .iter()
                .map(|&v| z_draw[v].sample(&mut r))
                .collect();
            let cond = conditionals(code, &g, &z);
            let total: f64 = cond.iter().sum::<f64>() / cond.len() as f64;
            (cond[k] / total).ln()
        })
        .collect();
    let m = samples as f64;
    let mean = draws.iter().sum::<f64>() / m;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(LeakageEstimate { per_symbol: mean / n as f64, stderr: Some((var / m).sqrt() / n as f64) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmc::{generate_code, CodeParams, DmcWiretapSpec, JointAuxDist};

    fn code_for(spec: &DmcWiretapSpec, params: CodeParams) -> WiretapCode {
        generate_code(spec, &JointAuxDist::direct(&[0.5, 0.5]).unwrap(), &params).unwrap()
    }

    #[test]
    fn independent_eavesdropper_learns_nothing() {
        let spec = DmcWiretapSpec::from_marginals(&[vec![0.9, 0.1], vec![0.1, 0.9]], &[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let code = code_for(&spec, CodeParams { n: 6, rs: 0.3, ..CodeParams::default() });
        assert_eq!(exact_leakage(&code, DEFAULT_LEAKAGE_BUDGET).unwrap(), 0.0);
    }

    #[test]
    fn single_bin_leaks_nothing() {
        let spec = DmcWiretapSpec::bsc_pair(0.1, 0.01).unwrap();
        let code = code_for(&spec, CodeParams { n: 6, t_rate: 0.3, ..CodeParams::default() });
        assert_eq!(exact_leakage(&code, DEFAULT_LEAKAGE_BUDGET).unwrap(), 0.0);
    }

    #[test]
    fn noiseless_eavesdropper_sees_distinct_codewords() {
        let spec = DmcWiretapSpec::from_marginals(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let code = code_for(&spec, CodeParams { n: 8, rs: 2.0_f64.ln() / 8.0, seed: 1, ..CodeParams::default() });
        let words = code.v_codewords();
        let leak = exact_leakage(&code, DEFAULT_LEAKAGE_BUDGET).unwrap();
        let expect = if words[0] != words[1] { 2.0_f64.ln() / 8.0 } else { 0.0 };
        assert!((leak - expect).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let spec = DmcWiretapSpec::bsc_pair(0.1, 0.3).unwrap();
        let code = code_for(&spec, CodeParams { n: 10, rs: 0.2, ..CodeParams::default() });
        assert!(matches!(exact_leakage(&code, 100), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn monte_carlo_brackets_exact() {
        let spec = DmcWiretapSpec::bsc_pair(0.1, 0.2).unwrap();
        let code = code_for(&spec, CodeParams { n: 8, rs: 0.3, t_rate: 0.1, seed: 4, ..CodeParams::default() });
        let exact = exact_leakage(&code, DEFAULT_LEAKAGE_BUDGET).unwrap();
        let mc = monte_carlo_leakage(&code, 20_000, 7).unwrap();
        assert!((mc.per_symbol - exact).abs() < 5.0 * mc.stderr.unwrap() + 1e-9, "{mc:?} vs {exact}");
    }
}
