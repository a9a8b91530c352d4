use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::matrix_values;
use super::Semimetric;
use crate::dynsys::{rng_for, PointSample};
use crate::error::{Error, Result};

/// Samples above this size check random triples instead of all of them.
const FULL_TRIPLE_LIMIT: usize = 128;
const RANDOM_TRIPLES: usize = 200_000;
/// Above this size the cut-off bound uses the triangle-inequality estimate
/// for each base point instead of the exact L1 norm of the dominating semimetric.
const EXACT_CUTOFF_BOUND_LIMIT: usize = 1024;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxiomReport {
    pub max_symmetry_violation: f64,
    /// `max(0, rho(x,z) - rho(x,y) - rho(y,z))` over the checked triples.
    pub max_triangle_defect: f64,
    pub triples_checked: usize,
    /// Triples whose defect exceeds the tolerance.
    pub violations: usize,
    pub tol: f64,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.max_symmetry_violation <= self.tol && self.max_triangle_defect <= self.tol
    }
}

/// Empirical check of symmetry and the triangle inequality on a sample.
pub fn check_axioms(rho: &Semimetric, sample: &PointSample, tol: f64) -> Result<AxiomReport> {
    let m = sample.len();
    if m < 3 {
        return Err(Error::Precondition("axiom check needs at least 3 points".into()));
    }
    let pts = &sample.points;

    let mut max_sym = 0.0f64;
    for i in 0..m.min(FULL_TRIPLE_LIMIT) {
        for j in i + 1..m.min(FULL_TRIPLE_LIMIT) {
            let a = rho.eval(&pts[i], &pts[j])?;
            let b = rho.eval(&pts[j], &pts[i])?;
            max_sym = max_sym.max((a - b).abs());
        }
    }

    let defect = |xy: f64, yz: f64, xz: f64| (xz - xy - yz).max(0.0);
    let (max_defect, checked, violations) = if m <= FULL_TRIPLE_LIMIT {
        let d = matrix_values(rho, pts)?;
        let mut worst = 0.0f64;
        let mut bad = 0;
        for x in 0..m {
            for y in 0..m {
                for z in 0..m {
                    let e = defect(d[x * m + y], d[y * m + z], d[x * m + z]);
                    worst = worst.max(e);
                    if e > tol {
                        bad += 1;
                    }
                }
            }
        }
        (worst, m * m * m, bad)
    } else {
        let mut rng = rng_for(sample.seed, 0xA710);
        let triples: Vec<[usize; 3]> = (0..RANDOM_TRIPLES)
            .map(|_| [rng.gen_range(0..m), rng.gen_range(0..m), rng.gen_range(0..m)])
            .collect();
        let defects = triples
            .par_iter()
            .map(|&[x, y, z]| {
                let xy = rho.eval(&pts[x], &pts[y])?;
                let yz = rho.eval(&pts[y], &pts[z])?;
                let xz = rho.eval(&pts[x], &pts[z])?;
                Ok(defect(xy, yz, xz))
            })
            .collect::<Result<Vec<f64>>>()?;
        let worst = defects.iter().copied().fold(0.0, f64::max);
        let bad = defects.iter().filter(|&&e| e > tol).count();
        (worst, RANDOM_TRIPLES, bad)
    };

    Ok(AxiomReport {
        max_symmetry_violation: max_sym,
        max_triangle_defect: max_defect,
        triples_checked: checked,
        violations,
        tol,
    })
}

/// Mean of `f(p_i, p_j)` over ordered pairs `i != j`, summed row by row in index order.
fn pair_mean(sample: &PointSample, f: impl Fn(usize, usize) -> Result<f64> + Sync) -> Result<f64> {
    let m = sample.len();
    if m < 2 {
        return Err(Error::Precondition("pair averages need at least 2 points".into()));
    }
    let row_sums = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for j in i + 1..m {
                s += f(i, j)?;
            }
            Ok(s)
        })
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = row_sums.iter().sum();
    Ok(2.0 * total / (m * (m - 1)) as f64)
}

/// Empirical `L1(mu x mu)` distance between two semimetrics.
pub fn empirical_l1(a: &Semimetric, b: &Semimetric, sample: &PointSample) -> Result<f64> {
    let pts = &sample.points;
    pair_mean(sample, |i, j| Ok((a.eval(&pts[i], &pts[j])? - b.eval(&pts[i], &pts[j])?).abs()))
}

/// How the upper bound in [`MnormBounds`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpperBoundKind {
    /// Ball-and-complement semimetric around the best base point.
    CutoffConstruction,
    /// `L1(rho_1 + rho_2)`.
    SumMetric,
    /// Constant semimetric at the largest observed difference.
    Cap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MnormBounds {
    pub lower: f64,
    pub upper: f64,
    pub upper_kind: UpperBoundKind,
    /// Index of the base point used by the cut-off construction.
    pub base_point: Option<usize>,
}

/// If one side is `min(other, 2R)`, returns `(p, R)`.
fn cutoff_pair<'a>(a: &'a Semimetric, b: &'a Semimetric) -> Option<(&'a Semimetric, f64)> {
    match (a, b) {
        (p, Semimetric::Cutoff { inner, level }) | (Semimetric::Cutoff { inner, level }, p) if **inner == *p => {
            Some((p, level / 2.0))
        }
        _ => None,
    }
}

/// Two-sided bracket for the m-norm of `rho_1 - rho_2` on the sample.
///
/// The lower side is the empirical L1 norm of the difference. The upper side
/// is the empirical L1 norm of an explicit semimetric that dominates the
/// difference on every sampled pair.
pub fn mnorm_bounds(a: &Semimetric, b: &Semimetric, sample: &PointSample) -> Result<MnormBounds> {
    let m = sample.len();
    if m < 2 {
        return Err(Error::Precondition("m-norm bounds need at least 2 points".into()));
    }
    let pts = &sample.points;
    let da = matrix_values(a, pts)?;
    let db = matrix_values(b, pts)?;
    let pairs = (m * (m - 1)) as f64;

    let mut lower_sum = 0.0;
    let mut sum_sum = 0.0;
    let mut cap = 0.0f64;
    for i in 0..m {
        for j in i + 1..m {
            let (x, y) = (da[i * m + j], db[i * m + j]);
            lower_sum += (x - y).abs();
            sum_sum += x + y;
            cap = cap.max((x - y).abs());
        }
    }
    let lower = 2.0 * lower_sum / pairs;
    let sum_bound = 2.0 * sum_sum / pairs;

    let mut best = if cap <= sum_bound {
        (cap, UpperBoundKind::Cap, None)
    } else {
        (sum_bound, UpperBoundKind::SumMetric, None)
    };

    if let Some((p, radius)) = cutoff_pair(a, b) {
        let dp = if std::ptr::eq(p, a) { &da } else { &db };
        let per_base: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|x| cutoff_construction_l1(dp, m, x, radius))
            .collect();
        let (x, v) = per_base
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        if v <= best.0 {
            best = (v, UpperBoundKind::CutoffConstruction, Some(x));
        }
    }

    Ok(MnormBounds {
        lower,
        upper: best.0,
        upper_kind: best.1,
        base_point: best.2,
    })
}

/// Empirical L1 norm (ordered pairs `i != j`) of the semimetric that vanishes
/// on the ball `B = {p(x, .) <= radius}`, equals `p` on its complement `A`,
/// and equals `p(u, x)` between `u` in `A` and `B`.
fn cutoff_construction_l1(d: &[f64], m: usize, x: usize, radius: f64) -> f64 {
    let outside: Vec<usize> = (0..m).filter(|&u| d[x * m + u] > radius).collect();
    let inside = m - outside.len();
    let to_base: f64 = outside.iter().map(|&u| d[u * m + x]).sum();
    let pairs = (m * (m - 1)) as f64;
    if m > EXACT_CUTOFF_BOUND_LIMIT {
        // triangle inequality through x on A x A
        let a_len = outside.len();
        return 2.0 * (a_len.saturating_sub(1) + inside) as f64 * to_base / pairs;
    }
    let mut within = 0.0;
    for (k, &u) in outside.iter().enumerate() {
        for &v in &outside[k + 1..] {
            within += d[u * m + v];
        }
    }
    (2.0 * within + 2.0 * inside as f64 * to_base) / pairs
}
