//! Inner approximation of the private-confidential region of a discrete
//! memoryless wiretap channel by searching over auxiliary distributions,
//! and the rate conditions that make the binning code work.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mutual_info_terms, CodeParams, DmcWiretapSpec, InfoTerms, JointAuxDist};
use crate::error::{Error, Result};
use crate::rng;
use crate::wiretap::{ce_polygon, pc_polygon, RegionPolygon};

/// Largest lattice the evaluator will enumerate.
const LATTICE_LIMIT: u128 = 1 << 22;

/// Support directions `a + γ·s` used to pick refinement candidates; the
/// last entry stands for `γ = ∞` (confidential rate alone).
const DIRECTIONS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, f64::INFINITY];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampling {
    /// Independent flat-Dirichlet rows; sample `i` uses stream `(seed, i)`,
    /// so larger budgets extend smaller ones.
    Dirichlet { samples: usize },
    /// Every row on the lattice `{0, 1/m, …, 1}`.
    Lattice { steps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistGrid {
    pub u_size: usize,
    /// Defaults to `|X| + 1`.
    pub v_size: Option<usize>,
    pub sampling: Sampling,
    /// Candidates per support direction polished by coordinate search.
    pub refine_best: usize,
    pub seed: u64,
}

impl Default for DistGrid {
    fn default() -> Self {
        Self { u_size: 3, v_size: None, sampling: Sampling::Dirichlet { samples: 2000 }, refine_best: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionVertex {
    pub point: (f64, f64),
    /// `None` for the origin.
    pub dist: Option<JointAuxDist>,
    pub terms: Option<InfoTerms>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionEval {
    /// `(Rp, Rs)`: convex hull of `Rs ≤ I(V;Y|U) − I(V;Z|U)`,
    /// `Rp + Rs ≤ I(V;Y)` over the evaluated distributions.
    pub polygon: RegionPolygon,
    /// The same candidates in `(R, Re)` form: `Re ≤ min{R, I(V;Y|U) − I(V;Z|U)}`,
    /// `R ≤ I(V;Y)`.
    pub ce_polygon: RegionPolygon,
    /// Vertices of `polygon` with a distribution achieving each.
    pub vertices: Vec<RegionVertex>,
    pub evaluated: usize,
}

impl RegionEval {
    /// Largest confidential rate over the candidates.
    pub fn max_rs(&self) -> f64 {
        self.polygon.vertices.iter().map(|v| v.1).fold(0.0, f64::max)
    }

    /// The vertex with the largest `Rs`, ties broken toward larger `Rp`.
    pub fn corner(&self) -> Option<&RegionVertex> {
        self.vertices
            .iter()
            .filter(|v| v.dist.is_some())
            .max_by(|a, b| a.point.1.total_cmp(&b.point.1).then(a.point.0.total_cmp(&b.point.0)))
    }
}

#[derive(Clone, Copy)]
struct Shape {
    u: usize,
    v: usize,
    x: usize,
}

impl Shape {
    fn rows(&self) -> Vec<usize> {
        let mut r = vec![self.u];
        r.extend(std::iter::repeat_n(self.v, self.u));
        r.extend(std::iter::repeat_n(self.x, self.v));
        r
    }

    fn len(&self) -> usize {
        self.rows().iter().sum()
    }

    /// Splits a flat vector of row-normalized weights into the chain.
    fn dist(&self, w: &[f64]) -> JointAuxDist {
        let mut it = w.iter().copied();
        let mut take = |k: usize| -> Vec<f64> { (0..k).map(|_| it.next().unwrap_or(0.0)).collect() };
        let p_u = take(self.u);
        let p_v_given_u = (0..self.u).map(|_| take(self.v)).collect();
        let p_x_given_v = (0..self.v).map(|_| take(self.x)).collect();
        JointAuxDist { p_u, p_v_given_u, p_x_given_v }
    }
}

fn normalize_rows(w: &mut [f64], rows: &[usize]) {
    let mut start = 0;
    for &k in rows {
        let row = &mut w[start..start + k];
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|x| *x /= sum);
        } else {
            row.iter_mut().for_each(|x| *x = 1.0 / k as f64);
        }
        start += k;
    }
}

fn dirichlet_point(shape: Shape, seed: u64, index: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, index);
    let mut w: Vec<f64> = (0..shape.len()).map(|_| r.sample::<f64, _>(Exp1)).collect();
    normalize_rows(&mut w, &shape.rows());
    w
}

/// Compositions of `m` into `k` parts, scaled to the simplex.
fn simplex_lattice(k: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for i in 0..=left {
            cur.push(i);
            rec(k - 1, left - i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, m, &mut Vec::new(), &mut out);
    out.into_iter().map(|c| c.into_iter().map(|i| i as f64 / m as f64).collect()).collect()
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn lattice_points(shape: Shape, m: usize) -> Result<Vec<Vec<f64>>> {
    let rows = shape.rows();
    let count = rows
        .iter()
        .fold(1u128, |acc, &k| acc.saturating_mul(binomial((m + k - 1) as u128, (k - 1) as u128)));
    if count > LATTICE_LIMIT {
        return Err(Error::BudgetExceeded { required: count, budget: LATTICE_LIMIT });
    }
    let per_row: Vec<Vec<Vec<f64>>> = rows.iter().map(|&k| simplex_lattice(k, m)).collect();
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for options in &per_row {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |o| {
                    let mut p = prefix.clone();
                    p.extend(o);
                    p
                })
            })
            .collect();
    }
    Ok(out)
}

fn score(t: &InfoTerms, gamma: f64) -> f64 {
    if gamma.is_infinite() {
        t.secrecy()
    } else {
        t.i_vy + gamma * t.secrecy()
    }
}

/// Coordinate search on the flat weights: moves one entry by `±step`
/// (clamped at 0), renormalizes its row, keeps strict improvements and
/// halves the step when a sweep stalls.
fn coordinate_refine(spec: &DmcWiretapSpec, shape: Shape, w0: &[f64], gamma: f64) -> (Vec<f64>, InfoTerms) {
    let rows = shape.rows();
    let row_of: Vec<(usize, usize)> = {
        let mut v = Vec::new();
        let mut start = 0;
        for &k in &rows {
            v.extend(std::iter::repeat_n((start, k), k));
            start += k;
        }
        v
    };
    let eval = |w: &[f64]| mutual_info_terms(spec, &shape.dist(w)).expect("shape matches channel");
    let mut w = w0.to_vec();
    let mut terms = eval(&w);
    let mut best = score(&terms, gamma);
    let mut step = 0.25;
    while step > 1e-9 {
        let mut improved = false;
        for i in 0..w.len() {
            for sign in [1.0, -1.0] {
                let mut trial = w.clone();
                trial[i] = (trial[i] + sign * step).max(0.0);
                let (start, k) = row_of[i];
                normalize_rows(&mut trial[start..start + k], &[k]);
                let t = eval(&trial);
                let val = score(&t, gamma);
                if val > best {
                    (w, terms, best, improved) = (trial, t, val, true);
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (w, terms)
}

/// Evaluates the region bounds over sampled (and optionally refined)
/// auxiliary distributions and returns the convex hull of the union.
pub fn sl_region_eval(spec: &DmcWiretapSpec, grid: &DistGrid) -> Result<RegionEval> {
    let shape = Shape { u: grid.u_size, v: grid.v_size.unwrap_or(spec.x_size + 1), x: spec.x_size };
    if shape.u == 0 || shape.v == 0 {
        return Err(Error::InvalidArgument("auxiliary alphabets must be nonempty".into()));
    }
    let points: Vec<Vec<f64>> = match grid.sampling {
        Sampling::Dirichlet { samples } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("need at least one sample".into()));
            }
            (0..samples as u64).map(|i| dirichlet_point(shape, grid.seed, i)).collect()
        }
        Sampling::Lattice { steps } => {
            if steps == 0 {
                return Err(Error::InvalidArgument("lattice needs steps >= 1".into()));
            }
            lattice_points(shape, steps)?
        }
    };
    let terms: Vec<InfoTerms> = points
        .par_iter()
        .map(|w| mutual_info_terms(spec, &shape.dist(w)))
        .collect::<Result<_>>()?;
    let mut candidates: Vec<(Vec<f64>, InfoTerms)> = points.into_iter().zip(terms).collect();
    let evaluated = candidates.len();

    if grid.refine_best > 0 {
        let mut starts: Vec<(usize, f64)> = Vec::new();
        for &gamma in &DIRECTIONS {
            let mut idx: Vec<usize> = (0..evaluated).collect();
            idx.sort_by(|&a, &b| score(&candidates[b].1, gamma).total_cmp(&score(&candidates[a].1, gamma)).then(a.cmp(&b)));
            starts.extend(idx.into_iter().take(grid.refine_best).map(|i| (i, gamma)));
        }
        let refined: Vec<(Vec<f64>, InfoTerms)> = starts
            .par_iter()
            .map(|&(i, gamma)| coordinate_refine(spec, shape, &candidates[i].0, gamma))
            .collect();
        candidates.extend(refined);
    }

    let mut pc_points = vec![(0.0, 0.0)];
    let mut ce_points = vec![(0.0, 0.0)];
    let mut owner: Vec<((f64, f64), usize)> = Vec::new();
    for (c, (_, t)) in candidates.iter().enumerate() {
        let pc = pc_polygon(t.i_vy, t.secrecy());
        for &p in &pc.vertices {
            owner.push((p, c));
        }
        pc_points.extend(pc.vertices);
        ce_points.extend(ce_polygon(t.i_vy, t.secrecy()).vertices);
    }
    let polygon = RegionPolygon::hull(&pc_points, ("rp", "rs"));
    let ce = RegionPolygon::hull(&ce_points, ("r", "re"));
    let vertices = polygon
        .vertices
        .iter()
        .map(|&p| {
            let found = owner.iter().find(|(q, _)| *q == p && p != (0.0, 0.0)).map(|&(_, c)| c);
            RegionVertex {
                point: p,
                dist: found.map(|c| shape.dist(&candidates[c].0)),
                terms: found.map(|c| candidates[c].1),
            }
        })
        .collect();
    Ok(RegionEval { polygon, ce_polygon: ce, vertices, evaluated })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmCondition {
    /// Positive when the inequality holds strictly.
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmReport {
    pub terms: InfoTerms,
    /// `Rp' < I(U;Y)`.
    pub u_decoding: FmCondition,
    /// `Rs + Rp'' + T < I(V;Y|U)`.
    pub v_decoding: FmCondition,
    /// `Rp'' + T > I(V;Z|U)`.
    pub secrecy: FmCondition,
}

impl FmReport {
    pub fn all_hold(&self) -> bool {
        self.u_decoding.holds && self.v_decoding.holds && self.secrecy.holds
    }
}

/// Rate conditions of the binning code for the given distribution. A
/// decoding condition whose rate side is zero holds trivially: there is
/// nothing to decode.
pub fn fm_conditions(params: &CodeParams, dist: &JointAuxDist, spec: &DmcWiretapSpec) -> Result<FmReport> {
    params.validate()?;
    let terms = mutual_info_terms(spec, dist)?;
    let decode = |rate: f64, limit: f64| FmCondition { margin: limit - rate, holds: rate == 0.0 || rate < limit };
    let hidden = params.rp_dblprime + params.t_rate;
    Ok(FmReport {
        terms,
        u_decoding: decode(params.rp_prime, terms.i_uy),
        v_decoding: decode(params.rs + hidden, terms.i_vy_given_u),
        secrecy: FmCondition { margin: hidden - terms.i_vz_given_u, holds: hidden > terms.i_vz_given_u },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmc::entropy;

    fn h2(p: f64) -> f64 {
        entropy(&[p, 1.0 - p])
    }

    #[test]
    fn lattice_counts() {
        assert_eq!(simplex_lattice(3, 2).len(), 6);
        let shape = Shape { u: 1, v: 2, x: 2 };
        assert_eq!(lattice_points(shape, 2).unwrap().len(), 3 * 3 * 3);
        assert!(lattice_points(Shape { u: 3, v: 4, x: 3 }, 20).is_err());
    }

    #[test]
    fn identical_receivers_have_no_secrecy() {
        let spec = DmcWiretapSpec::bsc_pair(0.2, 0.2).unwrap();
        let grid = DistGrid { sampling: Sampling::Dirichlet { samples: 200 }, refine_best: 2, ..DistGrid::default() };
        let eval = sl_region_eval(&spec, &grid).unwrap();
        assert!(eval.max_rs() < 1e-12);
    }

    #[test]
    fn degraded_bsc_corner() {
        let spec = DmcWiretapSpec::bsc_pair(0.1, 0.3).unwrap();
        let eval = sl_region_eval(&spec, &DistGrid::default()).unwrap();
        let target = h2(0.3) - h2(0.1);
        assert!(eval.max_rs() <= target + 1e-12);
        assert!(target - eval.max_rs() < 5e-3, "{}", eval.max_rs());
        assert!(eval.corner().unwrap().dist.is_some());
    }

    #[test]
    fn perfect_main_independent_eavesdropper() {
        let id = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let flat = vec![vec![1.0 / 3.0; 3]; 3];
        let spec = DmcWiretapSpec::from_marginals(&id, &flat).unwrap();
        let grid = DistGrid { u_size: 1, v_size: Some(3), sampling: Sampling::Lattice { steps: 3 }, refine_best: 0, ..DistGrid::default() };
        let eval = sl_region_eval(&spec, &grid).unwrap();
        let ln3 = 3.0_f64.ln();
        let expect = [(0.0, 0.0), (ln3, 0.0), (0.0, ln3)];
        assert_eq!(eval.polygon.vertices.len(), 3);
        for (v, e) in eval.polygon.vertices.iter().zip(expect) {
            assert!((v.0 - e.0).abs() < 1e-12 && (v.1 - e.1).abs() < 1e-12, "{:?}", eval.polygon);
        }
    }

    #[test]
    fn larger_sample_sets_extend_smaller() {
        let spec = DmcWiretapSpec::bsc_pair(0.05, 0.25).unwrap();
        let at = |samples| {
            sl_region_eval(&spec, &DistGrid { sampling: Sampling::Dirichlet { samples }, refine_best: 0, ..DistGrid::default() })
                .unwrap()
        };
        let small = at(100);
        let large = at(400);
        for &p in &small.polygon.vertices {
            assert!(crate::oracle::region_member(&large.polygon, p, 1e-12));
        }
    }

    #[test]
    fn shear_maps_pc_onto_ce() {
        let spec = DmcWiretapSpec::bsc_pair(0.1, 0.3).unwrap();
        let grid = DistGrid { sampling: Sampling::Dirichlet { samples: 300 }, refine_best: 1, ..DistGrid::default() };
        let eval = sl_region_eval(&spec, &grid).unwrap();
        let sheared = crate::wiretap::fact1_transform(&eval.polygon);
        for &p in &sheared.vertices {
            assert!(crate::oracle::region_member(&eval.ce_polygon, p, 1e-12));
        }
        for &p in &eval.ce_polygon.vertices {
            assert!(crate::oracle::region_member(&sheared, p, 1e-12));
        }
    }

    #[test]
    fn fm_trivial_cases() {
        let spec = DmcWiretapSpec::bsc_pair(0.1, 0.3).unwrap();
        let dist = JointAuxDist::direct(&[0.5, 0.5]).unwrap();
        let iz = 2.0_f64.ln() - h2(0.3);
        let r = fm_conditions(&CodeParams { t_rate: iz + 0.01, ..CodeParams::default() }, &dist, &spec).unwrap();
        assert!(r.u_decoding.holds && r.v_decoding.holds && r.secrecy.holds);
        let r = fm_conditions(&CodeParams { t_rate: iz - 0.01, ..CodeParams::default() }, &dist, &spec).unwrap();
        assert!(!r.secrecy.holds);
    }

    #[test]
    fn fm_deterministic_channel() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let spec = DmcWiretapSpec::from_marginals(&id, &id).unwrap();
        let px = [0.3, 0.7];
        let r = fm_conditions(&CodeParams::default(), &JointAuxDist::direct(&px).unwrap(), &spec).unwrap();
        assert!((r.terms.i_vy_given_u - entropy(&px)).abs() < 1e-14);
    }
}
