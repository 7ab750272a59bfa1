//! Sampling the three-message region by sweeping the common-rate target and
//! the weight direction of the confidential rates.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{canonicalize, thm2_rates, weighted_sum_solve, CovarianceSplit, RateTriple, SolveConfig, DEFAULT_CANONICAL_EPS};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceConfig {
    /// Levels `i/(L−1)·R0_max`, `i = 0..L`.
    pub r0_levels: usize,
    /// Weight directions `(1 − i/(D−1), i/(D−1))`.
    pub directions: usize,
    pub eps: f64,
    pub solve: SolveConfig,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self { r0_levels: 9, directions: 17, eps: DEFAULT_CANONICAL_EPS, solve: SolveConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub r0_index: usize,
    pub direction_index: usize,
    pub r0_target: f64,
    pub lambda: (f64, f64),
    pub rates: RateTriple,
    pub split: CovarianceSplit,
    pub beta: [f64; 2],
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSurface {
    pub r0_max: f64,
    pub perturbed: [bool; 2],
    /// Ordered by `(r0_index, direction_index)`.
    pub samples: Vec<SurfaceSample>,
}

fn grid(n: usize, i: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        i as f64 / (n - 1) as f64
    }
}

fn cell_seed(base: u64, index: u64) -> u64 {
    rng::stream(base, index).random()
}

#[allow(clippy::too_many_arguments)]
fn solve_cell(
    h1: &DMatrix<f64>,
    h2: &DMatrix<f64>,
    s: &SymMatrix,
    cc: &super::CanonicalChannel,
    r0_index: usize,
    r0: f64,
    direction_index: usize,
    directions: usize,
    cell: u64,
    cfg: &SolveConfig,
) -> Result<SurfaceSample> {
    let t = grid(directions, direction_index);
    let lambda = (1.0 - t, t);
    let mut cell_cfg = *cfg;
    cell_cfg.optimizer.seed = cell_seed(cfg.optimizer.seed, cell);
    let sol = weighted_sum_solve(cc, lambda.0, lambda.1, r0, &cell_cfg)?;
    Ok(SurfaceSample {
        r0_index,
        direction_index,
        r0_target: r0,
        lambda,
        rates: thm2_rates(h1, h2, s, &sol.split)?,
        split: sol.split,
        beta: sol.beta,
        converged: sol.converged,
    })
}

/// Solves the weighted-sum program on every `(r0, λ)` grid cell in parallel.
/// Each sample carries the split that achieves it; rates are evaluated in
/// the direct form with the original channel matrices.
pub fn region_trace(h1: &DMatrix<f64>, h2: &DMatrix<f64>, s: &SymMatrix, grid_cfg: &TraceConfig) -> Result<RegionSurface> {
    if grid_cfg.r0_levels == 0 || grid_cfg.directions == 0 {
        return Err(Error::InvalidArgument("trace grid needs at least one level and one direction".into()));
    }
    let cc = canonicalize(h1, h2, s, grid_cfg.eps)?;
    let r0_max = cc.r0_max()?;
    let cells: Vec<(usize, usize)> = (0..grid_cfg.r0_levels)
        .flat_map(|i| (0..grid_cfg.directions).map(move |j| (i, j)))
        .collect();
    let samples = cells
        .par_iter()
        .enumerate()
        .map(|(cell, &(i, j))| {
            let r0 = grid(grid_cfg.r0_levels, i) * r0_max;
            solve_cell(h1, h2, s, &cc, i, r0, j, grid_cfg.directions, cell as u64, &grid_cfg.solve)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionSurface { r0_max, perturbed: cc.perturbed, samples })
}

/// Boundary samples of the `(R1, R2)` cross-section at a fixed common rate,
/// with repeated rate pairs (within 1e-9) removed.
pub fn cross_section(
    h1: &DMatrix<f64>,
    h2: &DMatrix<f64>,
    s: &SymMatrix,
    r0_target: f64,
    grid_cfg: &TraceConfig,
) -> Result<Vec<SurfaceSample>> {
    if grid_cfg.directions == 0 {
        return Err(Error::InvalidArgument("cross-section needs at least one direction".into()));
    }
    let cc = canonicalize(h1, h2, s, grid_cfg.eps)?;
    let all = (0..grid_cfg.directions)
        .into_par_iter()
        .map(|j| solve_cell(h1, h2, s, &cc, 0, r0_target, j, grid_cfg.directions, j as u64, &grid_cfg.solve))
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<SurfaceSample> = Vec::new();
    for sample in all {
        let dup = out.iter().any(|o| {
            (o.rates.r1 - sample.rates.r1).abs() <= 1e-9 && (o.rates.r2 - sample.rates.r2).abs() <= 1e-9
        });
        if !dup {
            out.push(sample);
        }
    }
    Ok(out)
}
