//! Weighted-sum program over covariance splits:
//! maximize `λ1·f1(B1) + λ2·f2(B0, B1)` subject to `f0(B0) ≥ r0`,
//! `B0, B1 ⪰ 0`, `B0 + B1 ⪯ S`.
//!
//! Solved by log-barrier path following: for a decreasing barrier weight
//! `t`, a modified Newton method maximizes
//! `λ1·f1 + λ2·f2 + t·(log|B0| + log|B1| + log|S − B0 − B1| + Σk log(f0k − r0))`
//! from strictly feasible starts. At the end of the path the multipliers
//! are `β_k = t / (f0k − r0)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{f_objectives_unchecked, CanonicalChannel, CovarianceSplit, FValues};
use crate::error::{Error, Result};
use crate::linalg::{logdet, logdet_inv, sqrt_psd, SymMatrix};
use crate::optim::{argmax_lowest_index, OptimizerConfig};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    /// `n_starts` random starts follow the central start; `max_iters` caps
    /// the Newton iterations per barrier stage.
    pub optimizer: OptimizerConfig,
    /// Initial barrier weight relative to `λ1 + λ2`.
    pub barrier_start: f64,
    /// Final barrier weight relative to `λ1 + λ2`.
    pub barrier_end: f64,
    pub barrier_shrink: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerConfig { max_iters: 200, ..OptimizerConfig::default() },
            barrier_start: 0.1,
            barrier_end: 1e-8,
            barrier_shrink: 0.2,
        }
    }
}

impl From<OptimizerConfig> for SolveConfig {
    fn from(optimizer: OptimizerConfig) -> Self {
        Self { optimizer, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSumSolution {
    pub split: CovarianceSplit,
    pub value: f64,
    /// Multipliers of the two components of the `f0` constraint.
    pub beta: [f64; 2],
    pub f: FValues,
    pub converged: bool,
    pub start_index: usize,
}

/// Coordinates `x = (vech B0, vech B1)` over the symmetric unit basis.
struct Layout {
    d: usize,
    basis: Vec<DMatrix<f64>>,
}

impl Layout {
    fn new(d: usize) -> Self {
        let mut basis = Vec::new();
        for i in 0..d {
            for j in i..d {
                let mut e = DMatrix::zeros(d, d);
                e[(i, j)] = 1.0;
                e[(j, i)] = 1.0;
                basis.push(e);
            }
        }
        Self { d, basis }
    }

    fn m(&self) -> usize {
        self.basis.len()
    }

    fn pack(&self, b0: &SymMatrix, b1: &SymMatrix) -> DVector<f64> {
        let m = self.m();
        let mut x = DVector::zeros(2 * m);
        let mut k = 0;
        for i in 0..self.d {
            for j in i..self.d {
                x[k] = b0.as_matrix()[(i, j)];
                x[m + k] = b1.as_matrix()[(i, j)];
                k += 1;
            }
        }
        x
    }

    fn unpack(&self, x: &DVector<f64>) -> (SymMatrix, SymMatrix) {
        let m = self.m();
        let mut b0 = DMatrix::zeros(self.d, self.d);
        let mut b1 = DMatrix::zeros(self.d, self.d);
        let mut k = 0;
        for i in 0..self.d {
            for j in i..self.d {
                b0[(i, j)] = x[k];
                b0[(j, i)] = x[k];
                b1[(i, j)] = x[m + k];
                b1[(j, i)] = x[m + k];
                k += 1;
            }
        }
        (SymMatrix::new(b0), SymMatrix::new(b1))
    }
}

/// `weight·log|σ0·B0 + σ1·B1 + C|`.
struct Term {
    weight: f64,
    sigma: [f64; 2],
    c: SymMatrix,
}

struct Barrier<'a> {
    cc: &'a CanonicalChannel,
    layout: Layout,
    lambda: [f64; 2],
    r0: f64,
    /// `½·log|S + Nk| − r0`.
    f0_offset: [f64; 2],
}

struct Eval {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

impl<'a> Barrier<'a> {
    fn new(cc: &'a CanonicalChannel, lambda: [f64; 2], r0: f64) -> Result<Self> {
        let off = |n: &SymMatrix| -> Result<f64> { Ok(0.5 * logdet(&(&cc.s + n))? - r0) };
        Ok(Self {
            cc,
            layout: Layout::new(cc.dim()),
            lambda,
            r0,
            f0_offset: [off(&cc.n1)?, off(&cc.n2)?],
        })
    }

    fn terms(&self, t: f64) -> Vec<Term> {
        let cc = self.cc;
        let [l1, l2] = self.lambda;
        let zero = SymMatrix::zeros(cc.dim());
        vec![
            Term { weight: 0.5 * (l1 + l2), sigma: [0.0, 1.0], c: cc.n1.clone() },
            Term { weight: -0.5 * (l1 + l2), sigma: [0.0, 1.0], c: cc.n2.clone() },
            Term { weight: 0.5 * l2, sigma: [-1.0, 0.0], c: &cc.s + &cc.n2 },
            Term { weight: -0.5 * l2, sigma: [-1.0, 0.0], c: &cc.s + &cc.n1 },
            Term { weight: t, sigma: [1.0, 0.0], c: zero.clone() },
            Term { weight: t, sigma: [0.0, 1.0], c: zero },
            Term { weight: t, sigma: [-1.0, -1.0], c: cc.s.clone() },
        ]
    }

    fn matrix_of(&self, term_sigma: [f64; 2], c: &SymMatrix, b0: &SymMatrix, b1: &SymMatrix) -> SymMatrix {
        &(&b0.scale(term_sigma[0]) + &b1.scale(term_sigma[1])) + c
    }

    /// `(log|X|, ∇, ∇²)` of `log|σ0·B0 + σ1·B1 + C|` in `x`.
    fn logdet_derivs(&self, sigma: [f64; 2], c: &SymMatrix, b0: &SymMatrix, b1: &SymMatrix, want_hess: bool) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        let (ld, w) = logdet_inv(&self.matrix_of(sigma, c, b0, b1)).ok()?;
        let m = self.layout.m();
        let n = 2 * m;
        let mut grad = DVector::zeros(n);
        let mut dirs: Vec<Option<DMatrix<f64>>> = vec![None; n];
        for (blk, &s) in sigma.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            for (i, e) in self.layout.basis.iter().enumerate() {
                let v = w.as_matrix() * e * s;
                grad[blk * m + i] = v.trace();
                dirs[blk * m + i] = Some(v);
            }
        }
        let mut hess = DMatrix::zeros(n, n);
        if want_hess {
            for i in 0..n {
                let Some(vi) = &dirs[i] else { continue };
                for j in i..n {
                    let Some(vj) = &dirs[j] else { continue };
                    let h = -vi.component_mul(&vj.transpose()).sum();
                    hess[(i, j)] = h;
                    hess[(j, i)] = h;
                }
            }
        }
        Some((ld, grad, hess))
    }

    fn eval(&self, x: &DVector<f64>, t: f64, want_hess: bool) -> Option<Eval> {
        let (b0, b1) = self.layout.unpack(x);
        let n = x.len();
        let mut value = 0.0;
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for term in self.terms(t) {
            let (ld, g, h) = self.logdet_derivs(term.sigma, &term.c, &b0, &b1, want_hess)?;
            value += term.weight * ld;
            grad.axpy(term.weight, &g, 1.0);
            hess += h * term.weight;
        }
        if self.r0 > 0.0 {
            for (k, n_k) in [&self.cc.n1, &self.cc.n2].into_iter().enumerate() {
                let (ld, g, h) = self.logdet_derivs([-1.0, 0.0], &(&self.cc.s + n_k), &b0, &b1, want_hess)?;
                let c = self.f0_offset[k] - 0.5 * ld;
                if !(c > 0.0) {
                    return None;
                }
                let gc = g * -0.5;
                value += t * c.ln();
                grad.axpy(t / c, &gc, 1.0);
                if want_hess {
                    hess += h * (-0.5 * t / c) - (&gc * gc.transpose()) * (t / (c * c));
                }
            }
        }
        Some(Eval { value, grad, hess })
    }

    fn slacks(&self, x: &DVector<f64>) -> [f64; 2] {
        let (b0, _) = self.layout.unpack(x);
        let k = &self.cc.s - &b0;
        let ld = |n: &SymMatrix| logdet(&(&k + n)).unwrap_or(f64::NAN);
        [self.f0_offset[0] - 0.5 * ld(&self.cc.n1), self.f0_offset[1] - 0.5 * ld(&self.cc.n2)]
    }
}

/// Newton direction with the Hessian's spectrum reflected to be negative
/// definite.
fn ascent_direction(e: &Eval) -> DVector<f64> {
    let eig = SymmetricEigen::new(e.hess.clone());
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    let qg = eig.eigenvectors.transpose() * &e.grad;
    let step = DVector::from_iterator(
        qg.len(),
        qg.iter().zip(eig.eigenvalues.iter()).map(|(g, mu)| g / mu.abs().max(1e-14 * scale)),
    );
    &eig.eigenvectors * step
}

struct Run {
    x: DVector<f64>,
    t: f64,
    converged: bool,
}

fn path_follow(bar: &Barrier, x0: DVector<f64>, cfg: &SolveConfig) -> Option<Run> {
    let scale = bar.lambda[0] + bar.lambda[1];
    let mut t = cfg.barrier_start * scale;
    let t_end = cfg.barrier_end * scale;
    let mut x = x0;
    let converged;
    loop {
        let mut stage_done = false;
        for _ in 0..cfg.optimizer.max_iters {
            let e = bar.eval(&x, t, true)?;
            let p = ascent_direction(&e);
            let decrement = e.grad.dot(&p);
            if decrement <= 1e-15 * e.value.abs().max(1.0) {
                stage_done = true;
                break;
            }
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-20 {
                let cand = &x + &p * alpha;
                if let Some(ec) = bar.eval(&cand, t, false) {
                    if ec.value >= e.value + cfg.optimizer.armijo * alpha * decrement {
                        x = cand;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                // Objective flat to machine precision along the Newton direction.
                stage_done = decrement <= 1e-12 * e.value.abs().max(1.0);
                break;
            }
        }
        polish(bar, &mut x, t);
        if t <= t_end {
            let grad_small = bar.eval(&x, t, false).is_some_and(|e| e.grad.norm() <= 1e-9 * scale.max(1.0));
            converged = stage_done || grad_small;
            break;
        }
        t = (t * cfg.barrier_shrink).max(t_end);
    }
    Some(Run { x, t, converged })
}

/// Full Newton steps while they shrink the gradient; line searches on the
/// value stall once it is flat to rounding.
fn polish(bar: &Barrier, x: &mut DVector<f64>, t: f64) {
    let Some(mut e) = bar.eval(x, t, true) else { return };
    for _ in 0..8 {
        let cand = &*x + ascent_direction(&e);
        match bar.eval(&cand, t, true) {
            Some(ec) if ec.grad.norm() < e.grad.norm() => {
                *x = cand;
                e = ec;
            }
            _ => break,
        }
    }
}

/// Strictly feasible start `K = S^{1/2}·P·S^{1/2}`, `B1 = K^{1/2}·Q·K^{1/2}`,
/// `B0 = S − K`, with `K` halved until the common-rate slack is positive.
fn interior_start(bar: &Barrier, p: &SymMatrix, q: &SymMatrix) -> Option<DVector<f64>> {
    let s = &bar.cc.s;
    let root = sqrt_psd(s, 0.0).ok()?;
    let mut k = p.congruence(root.as_matrix());
    for _ in 0..200 {
        let k_root = sqrt_psd(&k, 0.0).ok()?;
        let b1 = q.congruence(k_root.as_matrix());
        let x = bar.layout.pack(&(s - &k), &b1);
        let ok = bar.r0 <= 0.0 || bar.slacks(&x).iter().all(|&c| c > 0.0);
        if ok && bar.eval(&x, 1.0, false).is_some() {
            return Some(x);
        }
        k = k.scale(0.5);
    }
    None
}

fn interior_unit(m: &SymMatrix) -> SymMatrix {
    m.map_eigenvalues(|v| 0.05 + 0.9 * v.clamp(0.0, 1.0))
}

/// Multi-start barrier solve of the weighted-sum program. Start 0 is the
/// central split `(S/2, S/4)`; the others are random, seeded from
/// `(cfg.optimizer.seed, start_index)`.
pub fn weighted_sum_solve(
    cc: &CanonicalChannel,
    lambda1: f64,
    lambda2: f64,
    r0_target: f64,
    cfg: &SolveConfig,
) -> Result<WeightedSumSolution> {
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) || !lambda1.is_finite() || !lambda2.is_finite() {
        return Err(Error::InvalidArgument(format!("weights must be finite and >= 0, got ({lambda1}, {lambda2})")));
    }
    if !(r0_target >= 0.0) {
        return Err(Error::InvalidArgument(format!("r0_target must be >= 0, got {r0_target}")));
    }
    let r0_max = cc.r0_max()?;
    if r0_target > r0_max + 1e-12 {
        return Err(Error::Infeasible(format!("r0_target {r0_target} exceeds R0_max {r0_max}")));
    }
    let d = cc.dim();
    // Either nothing to optimize, or the constraint pins B0 = S and hence B1 = 0.
    if (lambda1 == 0.0 && lambda2 == 0.0) || r0_target >= r0_max - 1e-12 {
        let split = CovarianceSplit::new(cc.s.clone(), SymMatrix::zeros(d));
        let f = f_objectives_unchecked(cc, &split)?;
        return Ok(WeightedSumSolution {
            split,
            value: lambda1 * f.f1 + lambda2 * f.f2,
            beta: [0.0; 2],
            f,
            converged: true,
            start_index: 0,
        });
    }
    let bar = Barrier::new(cc, [lambda1, lambda2], r0_target)?;
    let n_total = cfg.optimizer.n_starts + 1;
    let runs: Vec<Option<(Run, FValues)>> = (0..n_total)
        .into_par_iter()
        .map(|i| {
            let (p, q) = if i == 0 {
                (SymMatrix::identity(d).scale(0.5), SymMatrix::identity(d).scale(0.5))
            } else {
                let mut r = rng::stream(cfg.optimizer.seed, i as u64);
                let p = rng::random_unit_interval(&mut r, d);
                (interior_unit(&p), interior_unit(&rng::random_unit_interval(&mut r, d)))
            };
            let x0 = interior_start(&bar, &p, &q)?;
            let run = path_follow(&bar, x0, cfg)?;
            let (b0, b1) = bar.layout.unpack(&run.x);
            let f = f_objectives_unchecked(cc, &CovarianceSplit::new(b0, b1)).ok()?;
            Some((run, f))
        })
        .collect();
    let scores: Vec<f64> = runs
        .iter()
        .map(|r| r.as_ref().map_or(f64::NEG_INFINITY, |(_, f)| lambda1 * f.f1 + lambda2 * f.f2))
        .collect();
    let best = argmax_lowest_index(&scores, 1e-9)
        .ok_or_else(|| Error::Numerical("no start produced a strictly feasible split".into()))?;
    let (run, f) = runs[best].as_ref().expect("finite score implies a run");
    let (b0, b1) = bar.layout.unpack(&run.x);
    let beta = if r0_target > 0.0 {
        let c = bar.slacks(&run.x);
        [run.t / c[0], run.t / c[1]]
    } else {
        [0.0; 2]
    };
    Ok(WeightedSumSolution {
        split: CovarianceSplit::new(b0, b1),
        value: scores[best],
        beta,
        f: *f,
        converged: run.converged,
        start_index: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bcc::canonicalize;
    use crate::bcc::tests::{example_h1, example_h2, example_s};

    fn example_cc() -> CanonicalChannel {
        canonicalize(&example_h1(), &example_h2(), &example_s(), 1e-6).unwrap()
    }

    #[test]
    fn barrier_derivatives_match_differences() {
        let cc = example_cc();
        let bar = Barrier::new(&cc, [0.3, 0.7], 0.2).unwrap();
        let x = interior_start(&bar, &SymMatrix::diag(&[0.4, 0.6]), &SymMatrix::diag(&[0.3, 0.5])).unwrap();
        let e = bar.eval(&x, 0.01, true).unwrap();
        let h = 1e-6;
        for i in 0..x.len() {
            let mut up = x.clone();
            up[i] += h;
            let mut dn = x.clone();
            dn[i] -= h;
            let eu = bar.eval(&up, 0.01, true).unwrap();
            let ed = bar.eval(&dn, 0.01, true).unwrap();
            let fd = (eu.value - ed.value) / (2.0 * h);
            assert!((fd - e.grad[i]).abs() < 1e-6 * (1.0 + fd.abs()), "grad {i}");
            let hd = (&eu.grad - &ed.grad) / (2.0 * h);
            for j in 0..x.len() {
                assert!((hd[j] - e.hess[(i, j)]).abs() < 1e-4 * (1.0 + hd[j].abs()), "hess {i} {j}");
            }
        }
    }

    #[test]
    fn zero_weights_return_feasible_split() {
        let cc = example_cc();
        let sol = weighted_sum_solve(&cc, 0.0, 0.0, 0.3, &SolveConfig::default()).unwrap();
        assert_eq!(sol.value, 0.0);
        assert!(sol.f.f0 >= 0.3);
    }

    #[test]
    fn saturated_common_rate_forces_full_b0() {
        let cc = example_cc();
        let r0 = cc.r0_max().unwrap();
        let sol = weighted_sum_solve(&cc, 0.5, 0.5, r0, &SolveConfig::default()).unwrap();
        assert_eq!(sol.split.b0, cc.s);
        assert_eq!(sol.split.b1.norm(), 0.0);
        assert!(matches!(
            weighted_sum_solve(&cc, 0.5, 0.5, r0 + 1e-3, &SolveConfig::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn common_rate_constraint_is_met() {
        let cc = example_cc();
        let r0 = 0.5 * cc.r0_max().unwrap();
        let sol = weighted_sum_solve(&cc, 0.3, 0.7, r0, &SolveConfig::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.f.f0 >= r0);
        assert!(sol.split.validate(&cc.s).is_ok());
        assert!(sol.beta.iter().any(|&b| b > 1e-3));
        let free = weighted_sum_solve(&cc, 0.3, 0.7, 0.0, &SolveConfig::default()).unwrap();
        assert!(free.value >= sol.value - 1e-9);
    }
}
