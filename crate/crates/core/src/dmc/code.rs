//! Superposition code with double binning: a `U`-codebook, and under each
//! `U`-codeword a `V`-subcodebook split into bins (confidential message),
//! sub-bins (second private message) and randomization codewords.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DmcWiretapSpec, JointAuxDist};
use crate::error::{Error, Result};
use crate::rng;

/// Default cap on the total number of `V`-codewords.
pub const DEFAULT_CODE_BUDGET: u128 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodeParams {
    pub n: usize,
    /// Rate of the private message carried by the `U`-codeword.
    pub rp_prime: f64,
    /// Rate of the private message selecting the sub-bin.
    pub rp_dblprime: f64,
    pub rs: f64,
    /// Randomization rate inside each sub-bin.
    pub t_rate: f64,
    /// Extra `U`-codebook rate beyond the message set.
    pub delta: f64,
    pub seed: u64,
    pub budget: u128,
}

impl Default for CodeParams {
    fn default() -> Self {
        Self {
            n: 4,
            rp_prime: 0.0,
            rp_dblprime: 0.0,
            rs: 0.0,
            t_rate: 0.0,
            delta: 1e-3,
            seed: 0,
            budget: DEFAULT_CODE_BUDGET,
        }
    }
}

/// `exp(n·rate)` rounded to the nearest integer, at least 1.
fn level_size(n: usize, rate: f64) -> f64 {
    (n as f64 * rate).exp().round().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSizes {
    /// `U`-codewords generated.
    pub u_codewords: usize,
    /// `U`-codewords addressed by the first private message.
    pub u_messages: usize,
    pub bins: usize,
    pub sub_bins: usize,
    pub per_sub_bin: usize,
}

impl CodeSizes {
    pub fn per_u(&self) -> usize {
        self.bins * self.sub_bins * self.per_sub_bin
    }

    pub fn total(&self) -> usize {
        self.u_codewords * self.per_u()
    }
}

impl CodeParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("block length must be >= 1".into()));
        }
        for (name, r) in [
            ("rp_prime", self.rp_prime),
            ("rp_dblprime", self.rp_dblprime),
            ("rs", self.rs),
            ("t_rate", self.t_rate),
        ] {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be a finite rate >= 0, got {r}")));
            }
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be > 0, got {}", self.delta)));
        }
        Ok(())
    }

    /// Codebook level sizes; errors with the required count when the total
    /// exceeds the budget.
    pub fn sizes(&self) -> Result<CodeSizes> {
        self.validate()?;
        let n = self.n;
        let levels = [
            level_size(n, self.rp_prime + self.delta),
            level_size(n, self.rs),
            level_size(n, self.rp_dblprime),
            level_size(n, self.t_rate),
        ];
        let total: f64 = levels.iter().product();
        if !(total <= self.budget as f64) {
            let required = if total.is_finite() && total < u128::MAX as f64 { total as u128 } else { u128::MAX };
            return Err(Error::BudgetExceeded { required, budget: self.budget });
        }
        let u_codewords = levels[0] as usize;
        Ok(CodeSizes {
            u_codewords,
            u_messages: (level_size(n, self.rp_prime) as usize).min(u_codewords),
            bins: levels[1] as usize,
            sub_bins: levels[2] as usize,
            per_sub_bin: levels[3] as usize,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WiretapCode {
    pub spec: DmcWiretapSpec,
    pub dist: JointAuxDist,
    pub params: CodeParams,
    pub sizes: CodeSizes,
    /// `[j][i]`.
    pub u_codebook: Vec<Vec<usize>>,
    /// Row-major over `(j, k, l, t)`, each of length `n`.
    v_codewords: Vec<Vec<usize>>,
    /// `p(y | v)` and `p(z | v)` as `[v][out]`.
    pub(crate) p_y_given_v: Vec<Vec<f64>>,
    pub(crate) p_z_given_v: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedTuple {
    pub wp_prime: usize,
    pub ws: usize,
    pub wp_dblprime: usize,
    pub t: usize,
}

impl WiretapCode {
    pub fn n(&self) -> usize {
        self.params.n
    }

    pub(crate) fn flat_index(&self, j: usize, k: usize, l: usize, t: usize) -> usize {
        let s = &self.sizes;
        ((j * s.bins + k) * s.sub_bins + l) * s.per_sub_bin + t
    }

    pub fn v_codeword(&self, j: usize, k: usize, l: usize, t: usize) -> &[usize] {
        &self.v_codewords[self.flat_index(j, k, l, t)]
    }

    /// All `V`-codewords in `(j, k, l, t)` order.
    pub fn v_codewords(&self) -> &[Vec<usize>] {
        &self.v_codewords
    }

    /// Realized rates `ln(size)/n` for `(Rp', Rs, Rp'', T)`.
    pub fn realized_rates(&self) -> [f64; 4] {
        let n = self.n() as f64;
        let s = &self.sizes;
        [s.u_messages, s.bins, s.sub_bins, s.per_sub_bin].map(|m| (m as f64).ln() / n)
    }
}

fn samplers(rows: &[Vec<f64>]) -> Result<Vec<WeightedIndex<f64>>> {
    rows.iter()
        .map(|r| WeightedIndex::new(r).map_err(|e| Error::InvalidArgument(format!("bad distribution: {e}"))))
        .collect()
}

/// Draws the codebook: `U`-codewords i.i.d. from `p(u)`, and under each one
/// the `V`-codewords symbol-wise from `p(v | u)`. Deterministic in
/// `params.seed`.
pub fn generate_code(spec: &DmcWiretapSpec, dist: &JointAuxDist, params: &CodeParams) -> Result<WiretapCode> {
    dist.check_channel(spec)?;
    let sizes = params.sizes()?;
    let n = params.n;
    let mut r = rng::stream(params.seed, 0);
    let pu = WeightedIndex::new(&dist.p_u).map_err(|e| Error::InvalidArgument(format!("bad p(u): {e}")))?;
    let pv = samplers(&dist.p_v_given_u)?;
    let u_codebook: Vec<Vec<usize>> = (0..sizes.u_codewords).map(|_| (0..n).map(|_| pu.sample(&mut r)).collect()).collect();
    let mut v_codewords = Vec::with_capacity(sizes.total());
    for u in &u_codebook {
        for _ in 0..sizes.per_u() {
            v_codewords.push(u.iter().map(|&ui| pv[ui].sample(&mut r)).collect());
        }
    }
    Ok(WiretapCode {
        spec: spec.clone(),
        dist: dist.clone(),
        params: *params,
        sizes,
        u_codebook,
        v_codewords,
        p_y_given_v: dist.through(&spec.p_y_given_x()),
        p_z_given_v: dist.through(&spec.p_z_given_x()),
    })
}

/// Picks `u`-codeword `wp_prime`, a uniform codeword of sub-bin
/// `(ws, wp_dblprime)`, and draws `x` symbol-wise from `p(x | v)`.
pub fn encode(code: &WiretapCode, ws: usize, wp_prime: usize, wp_dblprime: usize, rng_seed: u64) -> Result<Vec<usize>> {
    let s = &code.sizes;
    for (name, idx, size) in [("ws", ws, s.bins), ("wp_prime", wp_prime, s.u_messages), ("wp_dblprime", wp_dblprime, s.sub_bins)] {
        if idx >= size {
            return Err(Error::IndexOutOfRange(format!("{name} = {idx}, must be < {size}")));
        }
    }
    let mut r = rng::stream(rng_seed, 0);
    let t = r.random_range(0..s.per_sub_bin);
    let px = samplers(&code.dist.p_x_given_v)?;
    Ok(code.v_codeword(wp_prime, ws, wp_dblprime, t).iter().map(|&v| px[v].sample(&mut r)).collect())
}

/// One use of the channel per input symbol, returning `(y^n, z^n)`.
pub fn transmit<R: Rng + ?Sized>(spec: &DmcWiretapSpec, x: &[usize], rng: &mut R) -> Result<(Vec<usize>, Vec<usize>)> {
    let joint: Vec<WeightedIndex<f64>> = spec
        .p_yz_given_x
        .iter()
        .map(|t| WeightedIndex::new(t.iter().flatten()).map_err(|e| Error::InvalidArgument(format!("bad channel row: {e}"))))
        .collect::<Result<_>>()?;
    let mut y = Vec::with_capacity(x.len());
    let mut z = Vec::with_capacity(x.len());
    for &xi in x {
        let dist = joint
            .get(xi)
            .ok_or_else(|| Error::IndexOutOfRange(format!("input symbol {xi} >= {}", spec.x_size)))?;
        let idx = dist.sample(rng);
        y.push(idx / spec.z_size);
        z.push(idx % spec.z_size);
    }
    Ok((y, z))
}

/// Maximum-likelihood search over every `(u, v)` codeword pair, with ties
/// going to the lowest `(j, k, l, t)`. `None` when every likelihood is 0
/// or `y` contains a symbol outside the output alphabet.
pub fn decode(code: &WiretapCode, y: &[usize]) -> Option<DecodedTuple> {
    if y.len() != code.n() || y.iter().any(|&s| s >= code.spec.y_size) {
        return None;
    }
    let log_p: Vec<Vec<f64>> = code.p_y_given_v.iter().map(|r| r.iter().map(|p| p.ln()).collect()).collect();
    let s = &code.sizes;
    let mut best: Option<(f64, DecodedTuple)> = None;
    for j in 0..s.u_codewords {
        for k in 0..s.bins {
            for l in 0..s.sub_bins {
                for t in 0..s.per_sub_bin {
                    let ll: f64 = code.v_codeword(j, k, l, t).iter().zip(y).map(|(&v, &ys)| log_p[v][ys]).sum();
                    if ll > f64::NEG_INFINITY && best.as_ref().is_none_or(|(b, _)| ll > *b) {
                        best = Some((ll, DecodedTuple { wp_prime: j, ws: k, wp_dblprime: l, t }));
                    }
                }
            }
        }
    }
    best.map(|(_, d)| d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless_binary() -> DmcWiretapSpec {
        DmcWiretapSpec::from_marginals(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()
    }

    #[test]
    fn zero_rates_give_single_codewords() {
        let spec = DmcWiretapSpec::bsc_pair(0.1, 0.3).unwrap();
        let dist = JointAuxDist::direct(&[0.5, 0.5]).unwrap();
        let code = generate_code(&spec, &dist, &CodeParams::default()).unwrap();
        assert_eq!(code.sizes, CodeSizes { u_codewords: 1, u_messages: 1, bins: 1, sub_bins: 1, per_sub_bin: 1 });
        assert_eq!(code.v_codewords().len(), 1);
    }

    #[test]
    fn counting_example() {
        let spec = DmcWiretapSpec::bsc_pair(0.1, 0.3).unwrap();
        let dist = JointAuxDist::direct(&[0.5, 0.5]).unwrap();
        let ln2 = 2.0_f64.ln();
        let params = CodeParams { n: 4, rs: ln2 / 4.0 * 2.0, t_rate: ln2 / 4.0, ..CodeParams::default() };
        let code = generate_code(&spec, &dist, &params).unwrap();
        assert_eq!(code.sizes.bins, 4);
        assert_eq!(code.sizes.per_sub_bin, 2);
        assert_eq!(code.sizes.per_u(), 8);
        let r = code.realized_rates();
        assert!((r[1] - ln2 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn budget_is_enforced() {
        let params = CodeParams { n: 20, rs: 1.0, budget: 1000, ..CodeParams::default() };
        match params.sizes() {
            Err(Error::BudgetExceeded { required, budget }) => {
                assert_eq!(budget, 1000);
                assert!(required > 1000);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = DmcWiretapSpec::bsc_pair(0.1, 0.3).unwrap();
        let dist = JointAuxDist::new(vec![0.5, 0.5], vec![vec![0.7, 0.3], vec![0.2, 0.8]], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let params = CodeParams { n: 6, rp_prime: 0.2, rs: 0.2, seed: 9, ..CodeParams::default() };
        assert_eq!(generate_code(&spec, &dist, &params).unwrap(), generate_code(&spec, &dist, &params).unwrap());
    }

    #[test]
    fn encode_follows_deterministic_map() {
        let spec = noiseless_binary();
        let dist = JointAuxDist::direct(&[0.5, 0.5]).unwrap();
        let params = CodeParams { n: 8, rs: 2.0_f64.ln() / 4.0, t_rate: 2.0_f64.ln() / 8.0, ..CodeParams::default() };
        let code = generate_code(&spec, &dist, &params).unwrap();
        let x = encode(&code, 1, 0, 0, 5).unwrap();
        assert!(x == code.v_codeword(0, 1, 0, 0) || x == code.v_codeword(0, 1, 0, 1));
        assert_eq!(x, encode(&code, 1, 0, 0, 5).unwrap());
        assert!(matches!(encode(&code, 4, 0, 0, 5), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn noiseless_decoding_recovers_distinct_codewords() {
        let spec = noiseless_binary();
        let dist = JointAuxDist::direct(&[0.5, 0.5]).unwrap();
        let params = CodeParams { n: 10, rs: 4.0_f64.ln() / 10.0, seed: 3, ..CodeParams::default() };
        let code = generate_code(&spec, &dist, &params).unwrap();
        let words = code.v_codewords();
        for k in 0..code.sizes.bins {
            if words.iter().filter(|w| **w == words[k]).count() == 1 {
                let d = decode(&code, &words[k]).unwrap();
                assert_eq!(d.ws, k);
            }
        }
    }

    #[test]
    fn identical_codebook_ties_to_zero() {
        let spec = DmcWiretapSpec::from_marginals(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        // p(v|u) deterministic so every codeword is all zeros.
        let dist = JointAuxDist::new(vec![1.0], vec![vec![1.0, 0.0]], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let params = CodeParams { n: 3, rs: 4.0_f64.ln() / 3.0, ..CodeParams::default() };
        let code = generate_code(&spec, &dist, &params).unwrap();
        let d = decode(&code, &[0, 0, 0]).unwrap();
        assert_eq!(d, DecodedTuple { wp_prime: 0, ws: 0, wp_dblprime: 0, t: 0 });
        assert_eq!(decode(&code, &[1, 0, 0]), None);
        assert_eq!(decode(&code, &[2, 0, 0]), None);
    }

    #[test]
    fn transmit_uses_joint_law() {
        let spec = noiseless_binary();
        let mut r = rng::stream(1, 2);
        let (y, z) = transmit(&spec, &[0, 1, 1, 0], &mut r).unwrap();
        assert_eq!(y, vec![0, 1, 1, 0]);
        assert_eq!(z.len(), 4);
        assert!(transmit(&spec, &[2], &mut r).is_err());
    }
}
