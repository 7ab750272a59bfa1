//! MIMO Gaussian wiretap channel: capacity, secrecy capacity under a matrix
//! power constraint, the capacity-equivocation region `(R, Re)` and the
//! private-confidential region `(Rp, Rs)`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, is_psd, logdet, logdet_inv, psd_factor, SymMatrix};
use crate::optim::{argmax_lowest_index, projected_ascent, OptimizerConfig};
use crate::{oracle, rng};

/// Legitimate-receiver and eavesdropper channel matrices sharing one
/// transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair {
    h_r: DMatrix<f64>,
    h_e: DMatrix<f64>,
}

impl ChannelPair {
    pub fn new(h_r: DMatrix<f64>, h_e: DMatrix<f64>) -> Result<Self> {
        if h_r.ncols() != h_e.ncols() {
            return Err(Error::Dimension(format!(
                "h_r has {} transmit columns, h_e has {}",
                h_r.ncols(),
                h_e.ncols()
            )));
        }
        if h_r.ncols() == 0 || h_r.nrows() == 0 || h_e.nrows() == 0 {
            return Err(Error::Dimension("channel matrices must be non-empty".into()));
        }
        Ok(Self { h_r, h_e })
    }

    pub fn from_rows(h_r: &[Vec<f64>], h_e: &[Vec<f64>]) -> Result<Self> {
        Self::new(linalg::matrix_from_rows(h_r)?, linalg::matrix_from_rows(h_e)?)
    }

    pub fn h_r(&self) -> &DMatrix<f64> {
        &self.h_r
    }

    pub fn h_e(&self) -> &DMatrix<f64> {
        &self.h_e
    }

    pub fn transmit_dim(&self) -> usize {
        self.h_r.ncols()
    }

    fn check_input(&self, s: &SymMatrix) -> Result<()> {
        if s.dim() != self.transmit_dim() {
            return Err(Error::Dimension(format!(
                "covariance is {}x{}, channel has {} transmit antennas",
                s.dim(),
                s.dim(),
                self.transmit_dim()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PowerConstraint {
    /// Input covariance bounded above by `S` in the PSD order.
    MatrixS(SymMatrix),
    /// Total average power `Tr(S) <= P`.
    TraceP(f64),
}

impl PowerConstraint {
    pub fn validate(&self, transmit_dim: usize, tol: f64) -> Result<()> {
        match self {
            PowerConstraint::MatrixS(s) => {
                if s.dim() != transmit_dim {
                    return Err(Error::Dimension(format!(
                        "S is {}x{}, expected {transmit_dim}",
                        s.dim(),
                        s.dim()
                    )));
                }
                if !is_psd(s, tol) {
                    return Err(Error::NotPsd { min_eig: s.min_eigenvalue() });
                }
                Ok(())
            }
            PowerConstraint::TraceP(p) if !(*p >= 0.0) => {
                Err(Error::InvalidArgument(format!("trace budget must be >= 0, got {p}")))
            }
            PowerConstraint::TraceP(_) => Ok(()),
        }
    }
}

/// A convex polygon in the first quadrant, counterclockwise from the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPolygon {
    pub vertices: Vec<(f64, f64)>,
    pub axis_labels: (String, String),
}

const VERTEX_MERGE_TOL: f64 = 1e-12;

impl RegionPolygon {
    /// Drops consecutive (cyclically) coincident vertices, keeping the first
    /// of each run.
    pub fn new(vertices: Vec<(f64, f64)>, labels: (&str, &str)) -> Self {
        let scale = vertices.iter().fold(1.0_f64, |m, &(x, y)| m.max(x.abs()).max(y.abs()));
        let tol = VERTEX_MERGE_TOL * scale;
        let same = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol;
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if out.last().map_or(true, |&last| !same(last, v)) {
                out.push(v);
            }
        }
        while out.len() > 1 && same(out[0], *out.last().unwrap()) {
            out.pop();
        }
        Self { vertices: out, axis_labels: (labels.0.to_string(), labels.1.to_string()) }
    }

    /// Convex hull (counterclockwise, collinear points removed).
    pub fn hull(points: &[(f64, f64)], labels: (&str, &str)) -> Self {
        Self::new(convex_hull(points), labels)
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain.
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let scale = pts.iter().fold(1.0_f64, |m, &(x, y)| m.max(x.abs()).max(y.abs()));
    let eps = 1e-13 * scale * scale;
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= eps {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= eps {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SecrecyCapacityResult {
    /// Secrecy capacity in nats.
    pub value: f64,
    pub b_star: SymMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// `closed form − value`, when `S` is positive definite.
    pub oracle_gap: Option<f64>,
}

/// `½·log|I + H·S·Hᵀ|`.
pub fn capacity(h: &DMatrix<f64>, s: &SymMatrix) -> Result<f64> {
    if h.ncols() != s.dim() {
        return Err(Error::Dimension(format!(
            "channel has {} columns, covariance is {}x{}",
            h.ncols(),
            s.dim(),
            s.dim()
        )));
    }
    let m = &SymMatrix::identity(h.nrows()) + &s.congruence(h);
    Ok((0.5 * logdet(&m)?).max(0.0))
}

/// The wiretap objective `½[log|I + Hr·B·Hrᵀ| − log|I + He·B·Heᵀ|]`.
pub fn secrecy_objective(ch: &ChannelPair, b: &SymMatrix) -> Result<f64> {
    ch.check_input(b)?;
    let lr = logdet(&(&SymMatrix::identity(ch.h_r.nrows()) + &b.congruence(&ch.h_r)))?;
    let le = logdet(&(&SymMatrix::identity(ch.h_e.nrows()) + &b.congruence(&ch.h_e)))?;
    Ok(0.5 * (lr - le))
}

/// `∇_B = ½[Hrᵀ(I + Hr B Hrᵀ)⁻¹Hr − Heᵀ(I + He B Heᵀ)⁻¹He]`.
pub fn secrecy_gradient(ch: &ChannelPair, b: &SymMatrix) -> Result<SymMatrix> {
    ch.check_input(b)?;
    let (_, ir) = logdet_inv(&(&SymMatrix::identity(ch.h_r.nrows()) + &b.congruence(&ch.h_r)))?;
    let (_, ie) = logdet_inv(&(&SymMatrix::identity(ch.h_e.nrows()) + &b.congruence(&ch.h_e)))?;
    let gr = ir.congruence(&ch.h_r.transpose());
    let ge = ie.congruence(&ch.h_e.transpose());
    Ok((&gr - &ge).scale(0.5))
}

/// The wiretap objective in the coordinates `B = R·M·Rᵀ` with `R·Rᵀ = S`.
pub(crate) struct ReducedWiretap {
    pub r: DMatrix<f64>,
    ar: DMatrix<f64>,
    ae: DMatrix<f64>,
}

impl ReducedWiretap {
    pub fn new(ch: &ChannelPair, s: &SymMatrix, tol: f64) -> Result<Self> {
        let r = psd_factor(s, tol)?;
        Ok(Self { ar: &ch.h_r * &r, ae: &ch.h_e * &r, r })
    }

    pub fn rank(&self) -> usize {
        self.r.ncols()
    }

    pub fn value_and_gradient(&self, m: &SymMatrix) -> Option<(f64, SymMatrix)> {
        let (lr, ir) = logdet_inv(&(&SymMatrix::identity(self.ar.nrows()) + &m.congruence(&self.ar))).ok()?;
        let (le, ie) = logdet_inv(&(&SymMatrix::identity(self.ae.nrows()) + &m.congruence(&self.ae))).ok()?;
        let g = &ir.congruence(&self.ar.transpose()) - &ie.congruence(&self.ae.transpose());
        Some((0.5 * (lr - le), g.scale(0.5)))
    }

    pub fn lift(&self, m: &SymMatrix) -> SymMatrix {
        SymMatrix::new(&self.r * m.as_matrix() * self.r.transpose())
    }
}

/// Maximizes the wiretap objective over `0 ⪯ B ⪯ S` by multi-start
/// projected gradient ascent in `M ∈ [0, I]`, with `B = S^{1/2}·M·S^{1/2}`
/// restricted to the range of `S`.
///
/// Start 0 is `M = 0`, start 1 is `M = I`; the remaining `cfg.n_starts`
/// starts are random, seeded from `(cfg.seed, start_index)`.
pub fn secrecy_capacity(ch: &ChannelPair, s: &SymMatrix, cfg: &OptimizerConfig) -> Result<SecrecyCapacityResult> {
    ch.check_input(s)?;
    if !is_psd(s, cfg.psd_tol) {
        return Err(Error::NotPsd { min_eig: s.min_eigenvalue() });
    }
    let d = s.dim();
    let reduced = ReducedWiretap::new(ch, s, cfg.psd_tol)?;
    let r = reduced.rank();
    if r == 0 {
        return Ok(SecrecyCapacityResult {
            value: 0.0,
            b_star: SymMatrix::zeros(d),
            iterations: 0,
            converged: true,
            oracle_gap: None,
        });
    }
    let n_total = cfg.n_starts + 2;
    let runs: Vec<_> = (0..n_total)
        .into_par_iter()
        .map(|k| {
            let m0 = match k {
                0 => SymMatrix::zeros(r),
                1 => SymMatrix::identity(r),
                _ => rng::random_unit_interval(&mut rng::stream(cfg.seed, k as u64), r),
            };
            projected_ascent(
                vec![m0],
                |x| reduced.value_and_gradient(&x[0]).map(|(v, g)| (v, vec![g])),
                |x| vec![x[0].clip_unit_interval()],
                cfg,
            )
        })
        .collect();
    let values: Vec<f64> = runs.iter().map(|o| o.as_ref().map_or(f64::NEG_INFINITY, |o| o.value)).collect();
    let best = argmax_lowest_index(&values, 1e-12)
        .ok_or_else(|| Error::Numerical("secrecy objective undefined at every start".into()))?;
    let run = runs[best].as_ref().expect("finite value implies a run");
    let iterations = runs.iter().flatten().map(|o| o.iterations).sum();

    let (value, b_star) = if run.value <= 0.0 {
        (0.0, SymMatrix::zeros(d))
    } else {
        let b = reduced.lift(&run.x[0]);
        (secrecy_objective(ch, &b)?.max(0.0), b)
    };
    let oracle_gap = if r == d { oracle::cs_closed_form(ch, s).ok().map(|cf| cf - value) } else { None };
    Ok(SecrecyCapacityResult { value, b_star, iterations, converged: run.converged, oracle_gap })
}

fn snap(c: f64, cs: f64) -> (f64, f64) {
    let tol = VERTEX_MERGE_TOL * c.max(1.0);
    let cs = if cs <= tol {
        0.0
    } else if (c - cs).abs() <= tol {
        c
    } else {
        cs.min(c)
    };
    (c, cs)
}

/// `(R, Re)` polygon for a fixed `S`: `Re ≤ min{R, Cs}`, `R ≤ C`.
pub fn ce_polygon(c: f64, cs: f64) -> RegionPolygon {
    let (c, cs) = snap(c, cs);
    RegionPolygon::new(vec![(0.0, 0.0), (c, 0.0), (c, cs), (cs, cs)], ("r", "re"))
}

/// `(Rp, Rs)` polygon for a fixed `S`: `Rs ≤ Cs`, `Rp + Rs ≤ C`.
pub fn pc_polygon(c: f64, cs: f64) -> RegionPolygon {
    let (c, cs) = snap(c, cs);
    RegionPolygon::new(vec![(0.0, 0.0), (c, 0.0), (c - cs, cs), (0.0, cs)], ("rp", "rs"))
}

fn region_with(
    ch: &ChannelPair,
    pc: &PowerConstraint,
    cfg: &OptimizerConfig,
    polygon: fn(f64, f64) -> RegionPolygon,
) -> Result<RegionPolygon> {
    pc.validate(ch.transmit_dim(), cfg.psd_tol)?;
    match pc {
        PowerConstraint::MatrixS(s) => {
            let c = capacity(&ch.h_r, s)?;
            let cs = secrecy_capacity(ch, s, cfg)?.value;
            Ok(polygon(c, cs))
        }
        PowerConstraint::TraceP(p) => {
            let samples = trace_sweep(ch, *p, &default_trace_weights(DEFAULT_TRACE_WEIGHTS), cfg)?;
            let mut pts = Vec::new();
            let mut labels = ("", "");
            for smp in &samples {
                let poly = polygon(smp.c, smp.cs);
                labels = (
                    if poly.axis_labels.0 == "r" { "r" } else { "rp" },
                    if poly.axis_labels.1 == "re" { "re" } else { "rs" },
                );
                pts.extend(poly.vertices);
            }
            Ok(RegionPolygon::hull(&pts, labels))
        }
    }
}

/// Capacity-equivocation region. Exact vertices `(0,0), (C,0), (C,Cs),
/// (Cs,Cs)` for a matrix constraint; for a trace budget, the convex hull of
/// the per-`S` polygons along the sampled boundary.
pub fn ce_region(ch: &ChannelPair, pc: &PowerConstraint, cfg: &OptimizerConfig) -> Result<RegionPolygon> {
    region_with(ch, pc, cfg, ce_polygon)
}

/// Private-confidential region, vertices `(0,0), (C,0), (C−Cs,Cs), (0,Cs)`.
pub fn pc_region(ch: &ChannelPair, pc: &PowerConstraint, cfg: &OptimizerConfig) -> Result<RegionPolygon> {
    region_with(ch, pc, cfg, pc_polygon)
}

/// Shear `(Rp, Rs) ↦ (Rp + Rs, Rs)` taking a private-confidential region to
/// the corresponding rate-equivocation region.
pub fn fact1_transform(pc: &RegionPolygon) -> RegionPolygon {
    RegionPolygon::new(pc.vertices.iter().map(|&(rp, rs)| (rp + rs, rs)).collect(), ("r", "re"))
}

pub const DEFAULT_TRACE_WEIGHTS: usize = 33;

/// `n` weight pairs `(1 − i/(n−1), i/(n−1))` on the simplex.
pub fn default_trace_weights(n: usize) -> Vec<(f64, f64)> {
    if n <= 1 {
        return vec![(0.5, 0.5)];
    }
    (0..n).map(|i| {
        let t = i as f64 / (n - 1) as f64;
        (1.0 - t, t)
    })
    .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSample {
    pub weights: (f64, f64),
    pub s: SymMatrix,
    pub c: f64,
    pub cs: f64,
    pub converged: bool,
}

/// Boundary samples under `Tr(S) ≤ P`: for each weight pair maximizes
/// `w1·C(S) + w2·Cs(S)`.
///
/// Writing `S = B + D` with `B` the secrecy covariance and `D ⪰ 0` the
/// remaining power, the nested problem is the single program
/// `max w1·C(B + D) + w2·g(B)` over `B, D ⪰ 0`, `Tr(B + D) ≤ P`, whose
/// feasible set has an exact eigenvalue projection. The returned `Cs` is
/// re-evaluated at the optimal `S` by [`secrecy_capacity`].
pub fn trace_sweep(
    ch: &ChannelPair,
    p: f64,
    weights: &[(f64, f64)],
    cfg: &OptimizerConfig,
) -> Result<Vec<TraceSample>> {
    if !(p >= 0.0) {
        return Err(Error::InvalidArgument(format!("trace budget must be >= 0, got {p}")));
    }
    if let Some(w) = weights.iter().find(|w| !(w.0 >= 0.0 && w.1 >= 0.0)) {
        return Err(Error::InvalidArgument(format!("weights must be nonnegative, got {w:?}")));
    }
    let d = ch.transmit_dim();
    weights
        .par_iter()
        .enumerate()
        .map(|(idx, &w)| {
            if p == 0.0 {
                return Ok(TraceSample { weights: w, s: SymMatrix::zeros(d), c: 0.0, cs: 0.0, converged: true });
            }
            let project = |x: &[SymMatrix]| project_trace_pair(&x[0], &x[1], p);
            let eval = |x: &[SymMatrix]| trace_objective(ch, &x[0], &x[1], w);
            let iso = SymMatrix::identity(d).scale(p / d as f64);
            let mut starts = vec![
                vec![SymMatrix::zeros(d), iso.clone()],
                vec![iso.clone(), SymMatrix::zeros(d)],
                vec![iso.scale(0.5), iso.scale(0.5)],
            ];
            for k in 0..cfg.n_starts.min(4) {
                let mut g = rng::substream(cfg.seed, idx as u64, k as u64);
                let b = rng::random_unit_interval(&mut g, d).scale(p / d as f64);
                let dd = rng::random_unit_interval(&mut g, d).scale(p / d as f64);
                starts.push(vec![b, dd]);
            }
            let runs: Vec<_> = starts.into_iter().map(|x0| projected_ascent(x0, eval, project, cfg)).collect();
            let values: Vec<f64> = runs.iter().map(|o| o.as_ref().map_or(f64::NEG_INFINITY, |o| o.value)).collect();
            let best = argmax_lowest_index(&values, 1e-12)
                .ok_or_else(|| Error::Numerical("trace objective undefined at every start".into()))?;
            let run = runs[best].as_ref().expect("finite value implies a run");
            let s = &run.x[0] + &run.x[1];
            let c = capacity(&ch.h_r, &s)?;
            let sc = secrecy_capacity(ch, &s, cfg)?;
            Ok(TraceSample { weights: w, s, c, cs: sc.value, converged: run.converged && sc.converged })
        })
        .collect()
}

fn trace_objective(ch: &ChannelPair, b: &SymMatrix, dd: &SymMatrix, w: (f64, f64)) -> Option<(f64, Vec<SymMatrix>)> {
    let s = b + dd;
    let (lc, ic) = logdet_inv(&(&SymMatrix::identity(ch.h_r.nrows()) + &s.congruence(&ch.h_r))).ok()?;
    let grad_c = ic.congruence(&ch.h_r.transpose()).scale(0.5);
    let g = secrecy_objective(ch, b).ok()?;
    let grad_g = secrecy_gradient(ch, b).ok()?;
    let value = w.0 * 0.5 * lc + w.1 * g;
    let gb = &grad_c.scale(w.0) + &grad_g.scale(w.1);
    let gd = grad_c.scale(w.0);
    Some((value, vec![gb, gd]))
}

/// Projection onto `{B ⪰ 0, D ⪰ 0, Tr(B) + Tr(D) ≤ P}`.
fn project_trace_pair(b: &SymMatrix, dd: &SymMatrix, p: f64) -> Vec<SymMatrix> {
    let (vb, qb) = b.eigh();
    let (vd, qd) = dd.eigh();
    let all: Vec<f64> = vb.iter().chain(vd.iter()).copied().collect();
    let proj = linalg::project_capped_simplex(&all, p);
    let n = vb.len();
    let rebuild = |q: &DMatrix<f64>, vals: &[f64]| {
        let dm = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(vals));
        SymMatrix::new(q * dm * q.transpose())
    };
    vec![rebuild(&qb, &proj[..n]), rebuild(&qd, &proj[n..])]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example_s() -> SymMatrix {
        SymMatrix::from_rows(&[vec![5.0, 1.25], vec![1.25, 10.0]]).unwrap()
    }

    fn example_hr() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.8, 2.0, 1.0, 3.0])
    }

    fn example_he() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[3.3, 1.3, 2.0, -1.5])
    }

    #[test]
    fn capacity_examples() {
        let s = example_s();
        assert_eq!(capacity(&DMatrix::zeros(2, 2), &s).unwrap(), 0.0);
        assert_eq!(capacity(&example_hr(), &SymMatrix::zeros(2)).unwrap(), 0.0);
        assert_relative_eq!(capacity(&example_hr(), &s).unwrap(), 0.5 * 728.6375_f64.ln(), epsilon = 1e-12);
        assert!(capacity(&DMatrix::zeros(2, 3), &s).is_err());
    }

    #[test]
    fn secrecy_capacity_degenerate_cases() {
        let s = example_s();
        let cfg = OptimizerConfig::default();
        let no_eve = ChannelPair::new(example_hr(), DMatrix::zeros(2, 2)).unwrap();
        let r = secrecy_capacity(&no_eve, &s, &cfg).unwrap();
        assert_relative_eq!(r.value, capacity(&example_hr(), &s).unwrap(), epsilon = 1e-9);
        assert_relative_eq!(r.b_star.as_matrix(), s.as_matrix(), epsilon = 1e-9);

        let same = ChannelPair::new(example_hr(), example_hr()).unwrap();
        assert!(secrecy_capacity(&same, &s, &cfg).unwrap().value <= 1e-9);

        let zero = secrecy_capacity(&same, &SymMatrix::zeros(2), &cfg).unwrap();
        assert_eq!(zero.value, 0.0);
        assert!(matches!(
            secrecy_capacity(&same, &SymMatrix::diag(&[1.0, -1.0]), &cfg),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn secrecy_capacity_is_self_consistent() {
        let ch = ChannelPair::new(example_hr(), example_he()).unwrap();
        let r = secrecy_capacity(&ch, &example_s(), &OptimizerConfig::default()).unwrap();
        assert!(r.converged);
        assert_relative_eq!(secrecy_objective(&ch, &r.b_star).unwrap(), r.value, epsilon = 1e-12);
        assert!(r.oracle_gap.unwrap().abs() < 1e-6, "gap {:?}", r.oracle_gap);
        assert!(linalg::psd_leq(&r.b_star, &example_s(), 1e-9).unwrap());
        assert!(is_psd(&r.b_star, 1e-9));
    }

    #[test]
    fn singular_s_optimizes_over_its_range() {
        let ch = ChannelPair::new(example_hr(), example_he()).unwrap();
        let s = SymMatrix::diag(&[4.0, 0.0]);
        let r = secrecy_capacity(&ch, &s, &OptimizerConfig::default()).unwrap();
        // scalar channel along e1: hr col norm² = 1.8²+1.0², he = 3.3²+2.0²
        let expected = (0.5 * ((1.0 + 4.0 * (1.8f64.powi(2) + 1.0)) / (1.0 + 4.0 * (3.3f64.powi(2) + 4.0))).ln()).max(0.0);
        assert_relative_eq!(r.value, expected, epsilon = 1e-9);
    }

    #[test]
    fn ce_and_pc_polygons_degenerate() {
        let c = 3.0;
        assert_eq!(ce_polygon(c, c).vertices, vec![(0.0, 0.0), (c, 0.0), (c, c)]);
        assert_eq!(ce_polygon(c, 0.0).vertices, vec![(0.0, 0.0), (c, 0.0)]);
        assert_eq!(pc_polygon(c, c).vertices, vec![(0.0, 0.0), (c, 0.0), (0.0, c)]);
        assert_eq!(pc_polygon(c, 0.0).vertices, vec![(0.0, 0.0), (c, 0.0)]);
        assert_eq!(ce_polygon(0.0, 0.0).vertices, vec![(0.0, 0.0)]);
    }

    #[test]
    fn fact1_shear_examples() {
        let c = 2.5;
        assert_eq!(fact1_transform(&pc_polygon(c, c)).vertices, vec![(0.0, 0.0), (c, 0.0), (c, c)]);
        assert_eq!(fact1_transform(&pc_polygon(c, 0.0)).vertices, pc_polygon(c, 0.0).vertices);
        assert_eq!(fact1_transform(&pc_polygon(c, 1.0)), ce_polygon(c, 1.0));
    }

    #[test]
    fn hull_of_square_with_interior_point() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5), (0.5, 0.0)];
        assert_eq!(convex_hull(&pts), vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
    }

    #[test]
    fn trace_sweep_zero_power() {
        let ch = ChannelPair::new(example_hr(), example_he()).unwrap();
        let out = trace_sweep(&ch, 0.0, &[(1.0, 0.0), (0.3, 0.7)], &OptimizerConfig::default()).unwrap();
        for smp in out {
            assert_eq!(smp.s.norm(), 0.0);
            assert_eq!((smp.c, smp.cs), (0.0, 0.0));
        }
    }

    #[test]
    fn trace_sweep_scalar_secrecy() {
        let (hr, he, p): (f64, f64, f64) = (2.0, 1.0, 3.0);
        let ch = ChannelPair::new(DMatrix::from_element(1, 1, hr), DMatrix::from_element(1, 1, he)).unwrap();
        let out = trace_sweep(&ch, p, &[(0.0, 1.0)], &OptimizerConfig::default()).unwrap();
        let expected = 0.5 * ((1.0 + hr * hr * p) / (1.0 + he * he * p)).ln();
        assert_relative_eq!(out[0].cs, expected, epsilon = 1e-9);
        assert_relative_eq!(out[0].s.trace(), p, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ChannelPair::new(DMatrix::zeros(2, 2), DMatrix::zeros(2, 3)).is_err());
        let ch = ChannelPair::new(example_hr(), example_he()).unwrap();
        assert!(trace_sweep(&ch, -1.0, &[(1.0, 0.0)], &OptimizerConfig::default()).is_err());
        assert!(trace_sweep(&ch, 1.0, &[(-1.0, 0.0)], &OptimizerConfig::default()).is_err());
        assert!(PowerConstraint::MatrixS(SymMatrix::identity(3)).validate(2, 1e-9).is_err());
    }
}
