//! Independent validators for the optimizers: random search with
//! Nelder–Mead polishing, the generalized-eigenvalue closed form for the
//! wiretap secrecy capacity, and polygon membership.
//!
//! Nothing here shares code paths with the gradient solvers beyond the
//! objective evaluations in [`crate::linalg`].

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bcc::{f_objectives, CanonicalChannel, CovarianceSplit};
use crate::error::{Error, Result};
use crate::linalg::{gen_eig, is_psd, logdet, sqrt_psd, SymMatrix, DEFAULT_PSD_TOL};
use crate::rng;
use crate::wiretap::{ChannelPair, RegionPolygon};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub n_samples: usize,
    /// Nelder–Mead restarts per refined candidate.
    pub refine_rounds: usize,
    pub seed: u64,
    /// Nelder–Mead stops once the simplex value spread is below this.
    pub tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { n_samples: 20_000, refine_rounds: 200, seed: 0, tol: 1e-13 }
    }
}

impl OracleConfig {
    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("oracle needs n_samples >= 1 and tol > 0".into()));
        }
        Ok(())
    }
}

const REFINE_BEST: usize = 20;

/// Downhill simplex minimization from `x0` with initial edge `step`.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iters: usize, tol: f64) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = f(&x);
        simplex.push((x, v));
    }
    let along = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> { c.iter().zip(w).map(|(a, b)| a + t * (b - a)).collect() };
    for _ in 0..max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[n].1 - simplex[0].1).abs() <= tol * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let reflected = along(&centroid, &worst, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (target, ft) = if fr < simplex[n].1 { (reflected, fr) } else { (worst, simplex[n].1) };
            let contracted = along(&centroid, &target, 0.5);
            let fc = f(&contracted);
            if fc < ft {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x = along(&best, &entry.0, 0.5);
                    let v = f(&x);
                    *entry = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Repeated Nelder–Mead with shrinking initial simplices until a restart
/// gains less than `tol`.
fn polish(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], cfg: &OracleConfig) -> (Vec<f64>, f64) {
    let mut best = (x0.to_vec(), f(x0));
    let mut step = 0.1;
    for _ in 0..cfg.refine_rounds {
        let (x, v) = nelder_mead(f, &best.0, step, 200 * x0.len().max(1), cfg.tol);
        let gain = best.1 - v;
        if v < best.1 {
            best = (x, v);
        }
        if gain <= cfg.tol * (1.0 + best.1.abs()) {
            if step < 1e-4 {
                break;
            }
        }
        step = (step * 0.5).max(1e-6);
    }
    best
}

fn to_vech(m: &SymMatrix) -> Vec<f64> {
    let d = m.dim();
    let a = m.as_matrix();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            out.push(a[(i, j)]);
        }
    }
    out
}

fn from_vech(v: &[f64], d: usize) -> SymMatrix {
    let mut a = DMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            a[(i, j)] = v[k];
            a[(j, i)] = v[k];
            k += 1;
        }
    }
    SymMatrix::new(a)
}

fn wiretap_value(ch: &ChannelPair, b: &SymMatrix) -> f64 {
    let lr = logdet(&(&SymMatrix::identity(ch.h_r().nrows()) + &b.congruence(ch.h_r())));
    let le = logdet(&(&SymMatrix::identity(ch.h_e().nrows()) + &b.congruence(ch.h_e())));
    match (lr, le) {
        (Ok(a), Ok(b)) => 0.5 * (a - b),
        _ => f64::NEG_INFINITY,
    }
}

/// Best indices by value (descending), ties to the lower index.
fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_finite()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Random search over `B = S^{1/2}·M·S^{1/2}`, `M = Q·diag(u)·Qᵀ`, followed
/// by Nelder–Mead on the best candidates with `M` clipped to `[0, I]`.
pub fn cs_bruteforce(ch: &ChannelPair, s: &SymMatrix, cfg: &OracleConfig) -> Result<f64> {
    cfg.validate()?;
    if ch.transmit_dim() != s.dim() {
        return Err(Error::Dimension("covariance does not match channel inputs".into()));
    }
    if !is_psd(s, DEFAULT_PSD_TOL) {
        return Err(Error::NotPsd { min_eig: s.min_eigenvalue() });
    }
    let d = s.dim();
    let root = sqrt_psd(s, DEFAULT_PSD_TOL)?;
    let value_of = |m: &SymMatrix| wiretap_value(ch, &m.clip_unit_interval().congruence(root.as_matrix()));
    let samples: Vec<SymMatrix> = (0..cfg.n_samples)
        .map(|i| rng::random_unit_interval(&mut rng::stream(cfg.seed, i as u64), d))
        .collect();
    let values: Vec<f64> = samples.par_iter().map(|m| value_of(m)).collect();
    let mut best = values.iter().copied().fold(0.0_f64, f64::max);
    let refined: Vec<f64> = top_k(&values, REFINE_BEST)
        .into_par_iter()
        .map(|i| {
            let f = |v: &[f64]| -value_of(&from_vech(v, d));
            -polish(&f, &to_vech(&samples[i]), cfg).1
        })
        .collect();
    for v in refined {
        best = best.max(v);
    }
    Ok(best.max(0.0))
}

/// `½·Σ_{λ>1} ln λ` over the generalized eigenvalues of
/// `(I + S^{1/2}HrᵀHrS^{1/2}, I + S^{1/2}HeᵀHeS^{1/2})`. Requires `S ≻ 0`.
pub fn cs_closed_form(ch: &ChannelPair, s: &SymMatrix) -> Result<f64> {
    if ch.transmit_dim() != s.dim() {
        return Err(Error::Dimension("covariance does not match channel inputs".into()));
    }
    let min_eig = s.min_eigenvalue();
    if !(min_eig > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eig });
    }
    let root = sqrt_psd(s, 0.0)?;
    let id = SymMatrix::identity(s.dim());
    let gram = |h: &DMatrix<f64>| SymMatrix::new(h.transpose() * h).congruence(root.as_matrix());
    let a = &id + &gram(ch.h_r());
    let b = &id + &gram(ch.h_e());
    Ok(gen_eig(&a, &b)?
        .iter()
        .filter(|p| p.value > 1.0)
        .map(|p| 0.5 * p.value.ln())
        .sum())
}

fn dist_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

/// Whether `point` lies in the convex polygon or within `tol` of it.
pub fn region_member(region: &RegionPolygon, point: (f64, f64), tol: f64) -> bool {
    let v = &region.vertices;
    match v.len() {
        0 => false,
        1 => dist_to_segment(point, v[0], v[0]) <= tol,
        n => {
            if n >= 3 {
                let inside = (0..n).all(|i| {
                    let (a, b) = (v[i], v[(i + 1) % n]);
                    (b.0 - a.0) * (point.1 - a.1) - (b.1 - a.1) * (point.0 - a.0) >= 0.0
                });
                if inside {
                    return true;
                }
            }
            (0..n).any(|i| dist_to_segment(point, v[i], v[(i + 1) % n]) <= tol)
        }
    }
}

struct OpA<'a> {
    cc: &'a CanonicalChannel,
    root: SymMatrix,
    lambda: [f64; 2],
    r0: f64,
}

/// Smooth surjection onto `[0, I]`: `A ↦ sin²(A)` spectrally.
fn unit_of(a: &SymMatrix) -> SymMatrix {
    a.map_eigenvalues(|x| x.sin().powi(2))
}

fn angle_of(p: &SymMatrix) -> SymMatrix {
    p.map_eigenvalues(|x| x.clamp(0.0, 1.0).sqrt().asin())
}

impl OpA<'_> {
    /// `K = t·S^{1/2}·P·S^{1/2}`, `B1 = K^{1/2}·Q·K^{1/2}`, `B0 = S − K` for
    /// `P, Q ∈ [0, I]`.
    fn split(&self, p: &SymMatrix, q: &SymMatrix, t: f64) -> Option<CovarianceSplit> {
        let k = p.congruence(self.root.as_matrix()).scale(t);
        let k_root = sqrt_psd(&k, 1e-12).ok()?;
        let b1 = q.congruence(k_root.as_matrix());
        let b0 = &self.cc.s - &k;
        // The construction is exact; absorb rounding before the feasibility check.
        Some(CovarianceSplit::new(b0.project_psd(), b1.project_psd()))
    }

    /// `(objective, f0)`.
    fn eval(&self, split: &CovarianceSplit) -> Option<(f64, f64)> {
        let f = f_objectives(self.cc, split).ok()?;
        Some((self.lambda[0] * f.f1 + self.lambda[1] * f.f2, f.f0))
    }

    /// Objective at the largest scale `t ∈ [0, 1]` of `K` that meets the
    /// common-rate target. Feasible points map to themselves.
    fn repaired(&self, p: &SymMatrix, q: &SymMatrix) -> Option<f64> {
        let at = |t: f64| self.split(p, q, t).and_then(|s| self.eval(&s));
        let full = at(1.0)?;
        if full.1 >= self.r0 {
            return Some(full.0);
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if at(mid).is_some_and(|(_, f0)| f0 >= self.r0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(lo).filter(|&(_, f0)| f0 >= self.r0).map(|(v, _)| v)
    }
}

/// Random feasible splits (rejection on `f0 ≥ r0`) plus Nelder–Mead on the
/// best candidates; returns the best feasible weighted value.
///
/// Refinement runs in angle coordinates `P = sin²(A)`, `Q = sin²(A′)`, and
/// shrinks `K` onto the common-rate constraint when a trial point
/// violates it, so every evaluated value is feasible.
pub fn opa_bruteforce(cc: &CanonicalChannel, lambda1: f64, lambda2: f64, r0_target: f64, cfg: &OracleConfig) -> Result<f64> {
    cfg.validate()?;
    if lambda1 < 0.0 || lambda2 < 0.0 {
        return Err(Error::InvalidArgument("weights must be >= 0".into()));
    }
    let r0_max = cc.r0_max()?;
    if r0_target > r0_max + 1e-12 {
        return Err(Error::Infeasible(format!("r0_target {r0_target} exceeds R0_max {r0_max}")));
    }
    if lambda1 == 0.0 && lambda2 == 0.0 {
        return Ok(0.0);
    }
    let d = cc.dim();
    let prob = OpA { cc, root: sqrt_psd(&cc.s, DEFAULT_PSD_TOL)?, lambda: [lambda1, lambda2], r0: r0_target };
    let draws: Vec<(SymMatrix, SymMatrix)> = (0..cfg.n_samples)
        .map(|i| {
            let mut r = rng::stream(cfg.seed, i as u64);
            let p = rng::random_unit_interval(&mut r, d);
            let q = rng::random_unit_interval(&mut r, d);
            // Half the draws shrink K toward 0 so tight common-rate targets stay reachable.
            let t = if i % 2 == 0 { 1.0 } else { r.random::<f64>().powi(3) };
            (p.scale(t), q)
        })
        .collect();
    let values: Vec<f64> = draws
        .par_iter()
        .map(|(p, q)| match prob.split(p, q, 1.0).and_then(|s| prob.eval(&s)) {
            Some((v, f0)) if f0 >= r0_target => v,
            _ => f64::NEG_INFINITY,
        })
        .collect();
    // B0 = S, B1 = 0 is always feasible with value 0.
    let mut best = values.iter().copied().fold(0.0_f64, f64::max);
    let m = d * (d + 1) / 2;
    let refined: Vec<f64> = top_k(&values, REFINE_BEST)
        .into_par_iter()
        .map(|i| {
            let f = |v: &[f64]| {
                let p = unit_of(&from_vech(&v[..m], d));
                let q = unit_of(&from_vech(&v[m..], d));
                prob.repaired(&p, &q).map_or(f64::INFINITY, |val| -val)
            };
            let mut x0 = to_vech(&angle_of(&draws[i].0));
            x0.extend(to_vech(&angle_of(&draws[i].1)));
            -polish(&f, &x0, cfg).1
        })
        .collect();
    for v in refined {
        best = best.max(v);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quick() -> OracleConfig {
        OracleConfig { n_samples: 2000, refine_rounds: 40, ..OracleConfig::default() }
    }

    fn example_pair() -> (ChannelPair, SymMatrix) {
        let ch = ChannelPair::from_rows(&[vec![1.8, 2.0], vec![1.0, 3.0]], &[vec![3.3, 1.3], vec![2.0, -1.5]]).unwrap();
        let s = SymMatrix::from_rows(&[vec![5.0, 1.25], vec![1.25, 10.0]]).unwrap();
        (ch, s)
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2);
        let (x, v) = nelder_mead(&f, &[0.0, 0.0], 0.5, 2000, 1e-16);
        assert!(v < 1e-12);
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-5);
    }

    #[test]
    fn bruteforce_degenerate_cases() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 2.0]);
        let ch = ChannelPair::new(h.clone(), h).unwrap();
        assert!(cs_bruteforce(&ch, &SymMatrix::identity(2), &quick()).unwrap() <= 1e-9);
        let ch = ChannelPair::from_rows(&[vec![2.0]], &[vec![1.0]]).unwrap();
        let v = cs_bruteforce(&ch, &SymMatrix::identity(1), &quick()).unwrap();
        assert_relative_eq!(v, 0.5 * 2.5_f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn closed_form_degenerate_cases() {
        let (ch, s) = example_pair();
        let blind = ChannelPair::new(ch.h_r().clone(), DMatrix::zeros(2, 2)).unwrap();
        assert_relative_eq!(
            cs_closed_form(&blind, &s).unwrap(),
            crate::wiretap::capacity(ch.h_r(), &s).unwrap(),
            epsilon = 1e-12
        );
        let same = ChannelPair::new(ch.h_r().clone(), ch.h_r().clone()).unwrap();
        assert!(cs_closed_form(&same, &s).unwrap().abs() < 1e-12);
        assert!(matches!(cs_closed_form(&ch, &SymMatrix::diag(&[1.0, 0.0])), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn example_instance_oracles_agree() {
        let (ch, s) = example_pair();
        let bf = cs_bruteforce(&ch, &s, &OracleConfig::default()).unwrap();
        let cf = cs_closed_form(&ch, &s).unwrap();
        assert!(bf <= cf + 1e-6);
        assert!((bf - cf).abs() < 1e-6, "{bf} vs {cf}");
    }

    #[test]
    fn membership_examples() {
        let poly = crate::wiretap::ce_polygon(2.0, 1.0);
        assert!(region_member(&poly, (0.0, 0.0), 1e-9));
        assert!(region_member(&poly, (2.0, 1.0), 1e-9));
        assert!(!region_member(&poly, (3.0, 0.0), 1e-9));
        assert!(!region_member(&poly, (0.5, 0.9), 1e-9));
        let point = crate::wiretap::ce_polygon(0.0, 0.0);
        assert!(region_member(&point, (0.0, 0.0), 1e-9));
        let segment = crate::wiretap::ce_polygon(1.0, 0.0);
        assert!(region_member(&segment, (0.5, 1e-10), 1e-9));
        assert!(!region_member(&segment, (0.5, 1e-3), 1e-9));
    }

    #[test]
    fn opa_trivial_cases() {
        let n1 = SymMatrix::from_rows(&[vec![0.5, 0.1], vec![0.1, 0.3]]).unwrap();
        let s = SymMatrix::diag(&[2.0, 1.0]);
        let cc = CanonicalChannel::new(n1.clone(), n1, s).unwrap();
        assert_eq!(opa_bruteforce(&cc, 0.0, 0.0, 0.1, &quick()).unwrap(), 0.0);
        assert!(opa_bruteforce(&cc, 0.3, 0.7, 0.1, &quick()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bruteforce_is_reproducible() {
        let (ch, s) = example_pair();
        assert_eq!(cs_bruteforce(&ch, &s, &quick()).unwrap(), cs_bruteforce(&ch, &s, &quick()).unwrap());
    }
}
