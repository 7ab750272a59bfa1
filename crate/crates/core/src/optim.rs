//! Projected gradient ascent over tuples of symmetric matrices with an
//! Armijo backtracking line search.

use serde::{Deserialize, Serialize};

use crate::linalg::SymMatrix;

/// Multi-start projected-gradient settings shared by the optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Random starts in addition to the deterministic ones.
    pub n_starts: usize,
    pub max_iters: usize,
    /// Stop once the unit-step projected-gradient mapping is below this norm.
    pub grad_tol: f64,
    /// Armijo sufficient-increase constant.
    pub armijo: f64,
    /// Backtracking shrink factor.
    pub shrink: f64,
    pub seed: u64,
    pub psd_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            n_starts: 8,
            max_iters: 5000,
            grad_tol: 1e-8,
            armijo: 1e-4,
            shrink: 0.5,
            seed: 0,
            psd_tol: crate::linalg::DEFAULT_PSD_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Ascent {
    pub x: Vec<SymMatrix>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn axpy(x: &[SymMatrix], t: f64, g: &[SymMatrix]) -> Vec<SymMatrix> {
    x.iter().zip(g).map(|(a, b)| a + &b.scale(t)).collect()
}

pub(crate) fn inner(a: &[SymMatrix], b: &[SymMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.as_matrix().dot(y.as_matrix())).sum()
}

pub(crate) fn dist(a: &[SymMatrix], b: &[SymMatrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.as_matrix() - y.as_matrix()).norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// Maximizes `eval` over the set implemented by `project`. `eval` returns
/// `None` where the objective is undefined (treated as a rejected step).
pub(crate) fn projected_ascent<E, P>(
    x0: Vec<SymMatrix>,
    eval: E,
    project: P,
    cfg: &OptimizerConfig,
) -> Option<Ascent>
where
    E: Fn(&[SymMatrix]) -> Option<(f64, Vec<SymMatrix>)>,
    P: Fn(&[SymMatrix]) -> Vec<SymMatrix>,
{
    let mut x = project(&x0);
    let (mut f, mut g) = eval(&x)?;
    let mut step: f64 = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let mapping = dist(&project(&axpy(&x, 1.0, &g)), &x);
        if mapping < cfg.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut t = (step * 2.0).min(1e6);
        let mut accepted = None;
        while t > 1e-18 {
            let cand = project(&axpy(&x, t, &g));
            let delta = inner(&g, &cand) - inner(&g, &x);
            if let Some((fc, gc)) = eval(&cand) {
                if fc.is_finite() && fc >= f + cfg.armijo * delta {
                    accepted = Some((cand, fc, gc));
                    break;
                }
            }
            t *= cfg.shrink;
        }
        match accepted {
            Some((cand, fc, gc)) => {
                let moved = dist(&cand, &x);
                x = cand;
                f = fc;
                g = gc;
                step = t;
                if moved == 0.0 {
                    // Numerically stalled at a point where the mapping is tiny but nonzero.
                    converged = mapping < cfg.grad_tol.sqrt();
                    break;
                }
            }
            None => {
                converged = mapping < cfg.grad_tol.sqrt();
                break;
            }
        }
    }
    Some(Ascent { x, value: f, iterations, converged })
}

/// Lowest index among values within `tie` of the maximum.
pub(crate) fn argmax_lowest_index(values: &[f64], tie: f64) -> Option<usize> {
    let best = values.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return None;
    }
    values.iter().position(|&v| v >= best - tie)
}
