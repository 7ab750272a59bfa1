//! Monte Carlo reliability trials plus the leakage of the realized code.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{decode, encode, exact_leakage, monte_carlo_leakage, transmit, CodeSizes, WiretapCode, DEFAULT_LEAKAGE_BUDGET};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum LeakageMethod {
    Exact { budget: u128 },
    MonteCarlo { samples: usize },
    Skip,
}

impl Default for LeakageMethod {
    fn default() -> Self {
        LeakageMethod::Exact { budget: DEFAULT_LEAKAGE_BUDGET }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub trials: usize,
    /// Base seed for trial `i`'s stream `(seed, i)`; the Monte Carlo
    /// leakage estimator uses the stream family `seed + 1`.
    pub seed: u64,
    pub leakage: LeakageMethod,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { trials: 1000, seed: 0, leakage: LeakageMethod::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizedRates {
    pub rp_prime: f64,
    pub rs: f64,
    pub rp_dblprime: f64,
    pub t_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub n: usize,
    pub trials: usize,
    /// Fraction of trials whose decoded `(wp', ws, wp'')` differs from the
    /// sent one (a failed search counts as an error).
    pub decode_error_rate: f64,
    /// `I(Ws; Z^n)/n` in nats; `None` when skipped.
    pub leakage_per_symbol: Option<f64>,
    pub leakage_stderr: Option<f64>,
    /// `H(Ws)/n`, the ceiling on the leakage.
    pub ws_entropy_per_symbol: f64,
    pub sizes: CodeSizes,
    pub realized_rates: RealizedRates,
}

/// Sends `trials` uniformly random message triples through the code and
/// the channel, decodes with [`decode`], and attaches the leakage.
pub fn simulate(code: &WiretapCode, cfg: &SimConfig) -> Result<SimReport> {
    let s = code.sizes;
    let errors: usize = (0..cfg.trials)
        .into_par_iter()
        .map(|i| -> Result<usize> {
            let mut r = rng::stream(cfg.seed, i as u64);
            let ws = r.random_range(0..s.bins);
            let wp_prime = r.random_range(0..s.u_messages);
            let wp_dblprime = r.random_range(0..s.sub_bins);
            let x = encode(code, ws, wp_prime, wp_dblprime, r.random())?;
            let (y, _) = transmit(&code.spec, &x, &mut r)?;
            let ok = decode(code, &y).is_some_and(|d| d.ws == ws && d.wp_prime == wp_prime && d.wp_dblprime == wp_dblprime);
            Ok(usize::from(!ok))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let (leakage_per_symbol, leakage_stderr) = match cfg.leakage {
        LeakageMethod::Exact { budget } => (Some(exact_leakage(code, budget)?), None),
        LeakageMethod::MonteCarlo { samples } => {
            let est = monte_carlo_leakage(code, samples, cfg.seed.wrapping_add(1))?;
            (Some(est.per_symbol), est.stderr)
        }
        LeakageMethod::Skip => (None, None),
    };
    if cfg.trials == 0 && leakage_per_symbol.is_none() {
        return Err(Error::InvalidArgument("nothing to simulate: zero trials and leakage skipped".into()));
    }
    let r = code.realized_rates();
    Ok(SimReport {
        n: code.n(),
        trials: cfg.trials,
        decode_error_rate: if cfg.trials == 0 { 0.0 } else { errors as f64 / cfg.trials as f64 },
        leakage_per_symbol,
        leakage_stderr,
        ws_entropy_per_symbol: r[1],
        sizes: s,
        realized_rates: RealizedRates { rp_prime: r[0], rs: r[1], rp_dblprime: r[2], t_rate: r[3] },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmc::{generate_code, CodeParams, DmcWiretapSpec, JointAuxDist};

    #[test]
    fn noiseless_main_channel_never_errs() {
        let spec = DmcWiretapSpec::from_marginals(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[vec![0.6, 0.4], vec![0.4, 0.6]]).unwrap();
        let dist = JointAuxDist::direct(&[0.5, 0.5]).unwrap();
        // Seed chosen so the two codewords differ; checked below.
        let params = CodeParams { n: 6, rs: 2.0_f64.ln() / 6.0, seed: 2, ..CodeParams::default() };
        let code = generate_code(&spec, &dist, &params).unwrap();
        assert_ne!(code.v_codewords()[0], code.v_codewords()[1]);
        let rep = simulate(&code, &SimConfig { trials: 200, ..SimConfig::default() }).unwrap();
        assert_eq!(rep.decode_error_rate, 0.0);
        assert!(rep.leakage_per_symbol.unwrap() <= rep.ws_entropy_per_symbol + 1e-12);
    }

    #[test]
    fn zero_secret_rate_leaks_nothing() {
        let spec = DmcWiretapSpec::bsc_pair(0.1, 0.3).unwrap();
        let dist = JointAuxDist::direct(&[0.5, 0.5]).unwrap();
        let code = generate_code(&spec, &dist, &CodeParams { n: 8, rp_dblprime: 0.2, ..CodeParams::default() }).unwrap();
        let rep = simulate(&code, &SimConfig { trials: 50, ..SimConfig::default() }).unwrap();
        assert_eq!(rep.leakage_per_symbol, Some(0.0));
    }

    #[test]
    fn bsc_small_code_is_reliable() {
        let spec = DmcWiretapSpec::bsc_pair(0.01, 0.3).unwrap();
        let dist = JointAuxDist::direct(&[0.5, 0.5]).unwrap();
        let params = CodeParams { n: 8, rs: 4.0_f64.ln() / 8.0, seed: 11, ..CodeParams::default() };
        let code = generate_code(&spec, &dist, &params).unwrap();
        assert_eq!(code.sizes.per_u(), 4);
        let rep = simulate(&code, &SimConfig { trials: 1000, leakage: LeakageMethod::Skip, ..SimConfig::default() }).unwrap();
        assert!(rep.decode_error_rate < 0.05, "{rep:?}");
    }

    #[test]
    fn reports_are_reproducible() {
        let spec = DmcWiretapSpec::bsc_pair(0.1, 0.3).unwrap();
        let dist = JointAuxDist::direct(&[0.5, 0.5]).unwrap();
        let code = generate_code(&spec, &dist, &CodeParams { n: 6, rs: 0.2, t_rate: 0.1, ..CodeParams::default() }).unwrap();
        let cfg = SimConfig { trials: 300, seed: 5, leakage: LeakageMethod::MonteCarlo { samples: 500 } };
        assert_eq!(simulate(&code, &cfg).unwrap(), simulate(&code, &cfg).unwrap());
    }
}
