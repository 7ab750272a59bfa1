//! Toy-scale discrete memoryless wiretap channels: the superposition and
//! double-binning code, exact maximum-likelihood decoding, exact leakage
//! by enumeration, and a search over auxiliary distributions for the
//! private-confidential region.

mod code;
mod info;
mod leakage;
mod region;
mod sim;

pub use code::{decode, encode, generate_code, transmit, CodeParams, CodeSizes, DecodedTuple, WiretapCode, DEFAULT_CODE_BUDGET};
pub use info::{entropy, mutual_info_terms, InfoTerms};
pub use leakage::{exact_leakage, monte_carlo_leakage, LeakageEstimate, DEFAULT_LEAKAGE_BUDGET};
pub use region::{fm_conditions, sl_region_eval, DistGrid, FmCondition, FmReport, RegionEval, RegionVertex, Sampling};
pub use sim::{simulate, LeakageMethod, RealizedRates, SimConfig, SimReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sums of conditional distributions.
pub const PROB_SUM_TOL: f64 = 1e-12;

fn check_row(row: &[f64], what: &str) -> Result<()> {
    if row.is_empty() {
        return Err(Error::InvalidArgument(format!("{what}: empty distribution")));
    }
    if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("{what}: probability {p} outside [0, 1]")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidArgument(format!("{what}: sums to {sum}, not 1")));
    }
    Ok(())
}

/// Channel law `p(y, z | x)`, stored as `p_yz_given_x[x][y][z]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmcWiretapSpec {
    pub x_size: usize,
    pub y_size: usize,
    pub z_size: usize,
    pub p_yz_given_x: Vec<Vec<Vec<f64>>>,
}

impl DmcWiretapSpec {
    pub fn new(p_yz_given_x: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let x_size = p_yz_given_x.len();
        let y_size = p_yz_given_x.first().map_or(0, Vec::len);
        let z_size = p_yz_given_x.first().and_then(|r| r.first()).map_or(0, Vec::len);
        if x_size == 0 || y_size == 0 || z_size == 0 {
            return Err(Error::InvalidArgument("channel alphabets must be nonempty".into()));
        }
        for (x, table) in p_yz_given_x.iter().enumerate() {
            if table.len() != y_size || table.iter().any(|r| r.len() != z_size) {
                return Err(Error::Dimension(format!("transition table for x = {x} is ragged")));
            }
            let flat: Vec<f64> = table.iter().flatten().copied().collect();
            check_row(&flat, &format!("p(y,z|x={x})"))?;
        }
        Ok(Self { x_size, y_size, z_size, p_yz_given_x })
    }

    /// Receivers with conditionally independent outputs,
    /// `p(y, z | x) = p(y | x)·p(z | x)`.
    pub fn from_marginals(p_y_given_x: &[Vec<f64>], p_z_given_x: &[Vec<f64>]) -> Result<Self> {
        if p_y_given_x.len() != p_z_given_x.len() {
            return Err(Error::Dimension("marginals disagree on the input alphabet".into()));
        }
        for (x, (py, pz)) in p_y_given_x.iter().zip(p_z_given_x).enumerate() {
            check_row(py, &format!("p(y|x={x})"))?;
            check_row(pz, &format!("p(z|x={x})"))?;
        }
        let table = p_y_given_x
            .iter()
            .zip(p_z_given_x)
            .map(|(py, pz)| py.iter().map(|a| pz.iter().map(|b| a * b).collect()).collect())
            .collect();
        // Products of normalized rows can drift by an ulp; renormalize.
        let mut spec = Self::new_unchecked(table);
        spec.renormalize();
        Self::new(spec.p_yz_given_x)
    }

    /// Binary symmetric main and eavesdropper channels with crossover
    /// probabilities `p_main` and `p_eve`.
    pub fn bsc_pair(p_main: f64, p_eve: f64) -> Result<Self> {
        let bsc = |p: f64| vec![vec![1.0 - p, p], vec![p, 1.0 - p]];
        Self::from_marginals(&bsc(p_main), &bsc(p_eve))
    }

    fn new_unchecked(p_yz_given_x: Vec<Vec<Vec<f64>>>) -> Self {
        let x_size = p_yz_given_x.len();
        let y_size = p_yz_given_x[0].len();
        let z_size = p_yz_given_x[0][0].len();
        Self { x_size, y_size, z_size, p_yz_given_x }
    }

    fn renormalize(&mut self) {
        for table in &mut self.p_yz_given_x {
            let sum: f64 = table.iter().flatten().sum();
            table.iter_mut().flatten().for_each(|p| *p /= sum);
        }
    }

    /// `p(y | x)` as `[x][y]`.
    pub fn p_y_given_x(&self) -> Vec<Vec<f64>> {
        self.p_yz_given_x.iter().map(|t| t.iter().map(|r| r.iter().sum()).collect()).collect()
    }

    /// `p(z | x)` as `[x][z]`.
    pub fn p_z_given_x(&self) -> Vec<Vec<f64>> {
        self.p_yz_given_x
            .iter()
            .map(|t| (0..self.z_size).map(|z| t.iter().map(|r| r[z]).sum()).collect())
            .collect()
    }
}

/// Auxiliary chain `p(u)·p(v|u)·p(x|v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointAuxDist {
    pub p_u: Vec<f64>,
    /// `[u][v]`.
    pub p_v_given_u: Vec<Vec<f64>>,
    /// `[v][x]`.
    pub p_x_given_v: Vec<Vec<f64>>,
}

impl JointAuxDist {
    pub fn new(p_u: Vec<f64>, p_v_given_u: Vec<Vec<f64>>, p_x_given_v: Vec<Vec<f64>>) -> Result<Self> {
        check_row(&p_u, "p(u)")?;
        if p_v_given_u.len() != p_u.len() {
            return Err(Error::Dimension("p(v|u) needs one row per u".into()));
        }
        let v_size = p_x_given_v.len();
        for (u, row) in p_v_given_u.iter().enumerate() {
            if row.len() != v_size {
                return Err(Error::Dimension(format!("p(v|u={u}) has {} entries, expected {v_size}", row.len())));
            }
            check_row(row, &format!("p(v|u={u})"))?;
        }
        let x_size = p_x_given_v.first().map_or(0, Vec::len);
        for (v, row) in p_x_given_v.iter().enumerate() {
            if row.len() != x_size {
                return Err(Error::Dimension(format!("p(x|v={v}) is ragged")));
            }
            check_row(row, &format!("p(x|v={v})"))?;
        }
        Ok(Self { p_u, p_v_given_u, p_x_given_v })
    }

    /// Constant `U`, `V = X`, with input law `p_x`.
    pub fn direct(p_x: &[f64]) -> Result<Self> {
        let k = p_x.len();
        let identity = (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self::new(vec![1.0], vec![p_x.to_vec()], identity)
    }

    pub fn u_size(&self) -> usize {
        self.p_u.len()
    }

    pub fn v_size(&self) -> usize {
        self.p_x_given_v.len()
    }

    pub fn x_size(&self) -> usize {
        self.p_x_given_v.first().map_or(0, Vec::len)
    }

    pub(crate) fn check_channel(&self, spec: &DmcWiretapSpec) -> Result<()> {
        if self.x_size() != spec.x_size {
            return Err(Error::Dimension(format!(
                "distribution is over {} inputs, channel has {}",
                self.x_size(),
                spec.x_size
            )));
        }
        Ok(())
    }

    /// `p(out | v) = Σ_x p(x|v)·p(out|x)` as `[v][out]`.
    pub(crate) fn through(&self, p_out_given_x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let out = p_out_given_x.first().map_or(0, Vec::len);
        self.p_x_given_v
            .iter()
            .map(|px| (0..out).map(|o| px.iter().zip(p_out_given_x).map(|(p, row)| p * row[o]).sum()).collect())
            .collect()
    }
}
