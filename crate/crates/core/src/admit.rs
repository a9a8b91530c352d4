//! Empirical admissibility diagnostics: block-average traces over refining
//! partitions, the epsilon-ball mass test, and the separated-subset event on
//! random distance matrices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynsys::{derive_seed, sample_points, Point, PointSample, SystemSpec};
use crate::error::{Error, Result};
use crate::semimetric::{distance_matrix, DistanceMatrix, Semimetric};

/// Fraction of skipped cells above which a trace point is flagged.
const SKIPPED_CELL_FLAG: f64 = 0.10;
/// Exhaustive separated-subset search is used up to this many points.
const EXACT_SEPARATION_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionKind {
    /// Dyadic intervals (or dyadic rectangles on the two-torus).
    DyadicIntervals,
    /// Cylinder sets of a shift space.
    EqualMeasureBlocks,
}

fn log_base(n: usize, q: usize) -> Option<u32> {
    let mut d = 0;
    let mut v = 1usize;
    while v < n {
        v = v.checked_mul(q)?;
        d += 1;
    }
    (v == n).then_some(d)
}

/// Cell index of every sample point in the partition into `n` cells.
fn assign_cells(sample: &PointSample, n: usize) -> Result<(Vec<usize>, PartitionKind)> {
    if n == 0 {
        return Err(Error::Precondition("partition needs at least one cell".into()));
    }
    let not_power = |q: usize| Error::Precondition(format!("cell count {n} is not a power of {q}"));
    match &sample.system {
        SystemSpec::BernoulliShift { weights } => {
            let q = weights.len();
            let depth = if q == 1 { None } else { log_base(n, q) }.ok_or_else(|| not_power(q))? as usize;
            let cells = sample
                .points
                .iter()
                .map(|p| match p {
                    Point::Symbols(w) => Ok(w
                        .prefix(depth)?
                        .iter()
                        .fold(0usize, |acc, &s| acc * q + s as usize)),
                    _ => Err(Error::PointType("shift sample holds a non-symbolic point".into())),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((cells, PartitionKind::EqualMeasureBlocks))
        }
        _ => {
            let bits = log_base(n, 2).ok_or_else(|| not_power(2))?;
            let cell = |x: f64, b: u32| ((x * (1u64 << b) as f64) as usize).min((1usize << b) - 1);
            let cells = sample
                .points
                .iter()
                .map(|p| match p {
                    Point::Interval(x) => Ok(cell(*x, bits)),
                    Point::Torus(x, y) => {
                        let bx = bits.div_ceil(2);
                        let by = bits - bx;
                        Ok(cell(*x, bx) * (1 << by) + cell(*y, by))
                    }
                    Point::Symbols(_) => Err(Error::PointType("torus sample holds a symbolic point".into())),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((cells, PartitionKind::DyadicIntervals))
        }
    }
}

fn members(cells: &[usize], n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n];
    for (i, &c) in cells.iter().enumerate() {
        out[c].push(i);
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
struct PairStats {
    sum: f64,
    sum_sq: f64,
    count: usize,
}

impl PairStats {
    fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    fn sd(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let mean = self.mean();
        ((self.sum_sq / self.count as f64 - mean * mean).max(0.0)).sqrt()
    }
}

fn pair_stats(a: &[usize], b: &[usize], dist: &(dyn Fn(usize, usize) -> Result<f64> + Sync)) -> Result<PairStats> {
    let same = std::ptr::eq(a, b);
    let mut s = PairStats::default();
    for (ia, &i) in a.iter().enumerate() {
        let rest = if same { &b[ia + 1..] } else { b };
        for &j in rest {
            let v = dist(i, j)?;
            s.sum += v;
            s.sum_sq += v * v;
            s.count += 1;
        }
    }
    Ok(s)
}

/// One point of the trace curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub n: usize,
    /// `(1/n) tr A`, with cell masses taken from the sample.
    pub trace_over_n: f64,
    pub stderr: f64,
    pub skipped_cells: usize,
    /// More than a tenth of the cells held fewer than two points.
    pub flagged: bool,
}

fn trace_curve_with(
    sample: &PointSample,
    schedule: &[usize],
    dist: &(dyn Fn(usize, usize) -> Result<f64> + Sync),
) -> Result<Vec<TracePoint>> {
    schedule
        .iter()
        .map(|&n| {
            let (cells, _) = assign_cells(sample, n)?;
            let groups = members(&cells, n);
            let stats = groups
                .par_iter()
                .map(|g| if g.len() >= 2 { pair_stats(g, g, dist).map(Some) } else { Ok(None) })
                .collect::<Result<Vec<_>>>()?;
            let used_mass: usize = groups.iter().filter(|g| g.len() >= 2).map(Vec::len).sum();
            let skipped = groups.iter().filter(|g| g.len() < 2).count();
            let mut trace = 0.0;
            let mut var = 0.0;
            for (g, st) in groups.iter().zip(&stats) {
                if let Some(st) = st {
                    let w = g.len() as f64 / used_mass as f64;
                    trace += w * st.mean();
                    let se = st.sd() / (g.len() as f64).sqrt();
                    var += w * w * se * se;
                }
            }
            Ok(TracePoint {
                n,
                trace_over_n: trace,
                stderr: var.sqrt(),
                skipped_cells: skipped,
                flagged: skipped as f64 > SKIPPED_CELL_FLAG * n as f64,
            })
        })
        .collect()
}

/// Block-average trace curve, evaluating `rho` only on within-cell pairs.
pub fn trace_test(rho: &Semimetric, sample: &PointSample, schedule: &[usize]) -> Result<Vec<TracePoint>> {
    let pts = &sample.points;
    trace_curve_with(sample, schedule, &|i, j| rho.eval(&pts[i], &pts[j]))
}

/// Block-average trace curve from a precomputed distance matrix on `sample`.
pub fn trace_test_matrix(d: &DistanceMatrix, sample: &PointSample, schedule: &[usize]) -> Result<Vec<TracePoint>> {
    if d.size() != sample.len() {
        return Err(Error::Size("distance matrix does not match the sample".into()));
    }
    trace_curve_with(sample, schedule, &|i, j| Ok(d.get(i, j)))
}

/// Matrix of block averages of a semimetric over a partition into `n` cells.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockAverageMatrix {
    pub n: usize,
    /// Row-major `n x n` means over sampled pairs in cell `i` x cell `j`.
    pub entries: Vec<f64>,
    /// Standard errors of the entries, per cell: `sd / sqrt(min cell size)`.
    pub stderr: Vec<f64>,
    pub cell_sizes: Vec<usize>,
    pub partition_kind: PartitionKind,
}

impl BlockAverageMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn stderr(&self, i: usize, j: usize) -> f64 {
        self.stderr[i * self.n + j]
    }

    /// `(1/n) tr A` weighted by the cell masses of the sample.
    pub fn trace_over_n(&self) -> f64 {
        let total: usize = self.cell_sizes.iter().filter(|&&c| c >= 2).sum();
        (0..self.n)
            .filter(|&i| self.cell_sizes[i] >= 2)
            .map(|i| self.get(i, i) * self.cell_sizes[i] as f64 / total as f64)
            .sum()
    }
}

pub fn block_average_matrix(rho: &Semimetric, sample: &PointSample, n: usize) -> Result<BlockAverageMatrix> {
    let (cells, kind) = assign_cells(sample, n)?;
    let groups = members(&cells, n);
    let pts = &sample.points;
    let dist = |i: usize, j: usize| rho.eval(&pts[i], &pts[j]);
    let cellpairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let stats = cellpairs
        .par_iter()
        .map(|&(i, j)| {
            if i == j {
                pair_stats(&groups[i], &groups[i], &dist)
            } else {
                pair_stats(&groups[i], &groups[j], &dist)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let entries = stats.iter().map(PairStats::mean).collect();
    let stderr = cellpairs
        .iter()
        .zip(&stats)
        .map(|(&(i, j), st)| {
            let size = groups[i].len().min(groups[j].len()).max(1);
            st.sd() / (size as f64).sqrt()
        })
        .collect();
    Ok(BlockAverageMatrix {
        n,
        entries,
        stderr,
        cell_sizes: groups.iter().map(Vec::len).collect(),
        partition_kind: kind,
    })
}

/// Fraction of sample points with another sample point within distance `eps`.
pub fn ball_mass_test(d: &DistanceMatrix, eps: f64) -> Result<f64> {
    let m = d.size();
    if m < 16 {
        return Err(Error::Precondition(format!("ball-mass test needs at least 16 points, got {m}")));
    }
    let hits = (0..m)
        .filter(|&i| d.row(i).iter().enumerate().any(|(j, &v)| j != i && v <= eps))
        .count();
    Ok(hits as f64 / m as f64)
}

/// Size of a large `c`-separated index set (pairwise distance `>= c`):
/// farthest-first from every start, exact search for small inputs.
pub fn separated_subset_size(d: &DistanceMatrix, c: f64, need: usize) -> usize {
    let m = d.size();
    let mut best = 0;
    for start in 0..m {
        let mut gap = d.row(start).to_vec();
        let mut chosen = vec![false; m];
        chosen[start] = true;
        let mut size = 1;
        loop {
            let next = (0..m)
                .filter(|&j| !chosen[j] && gap[j] >= c)
                .max_by(|&a, &b| gap[a].total_cmp(&gap[b]).then(b.cmp(&a)));
            let Some(j) = next else { break };
            chosen[j] = true;
            size += 1;
            for (k, g) in gap.iter_mut().enumerate() {
                *g = g.min(d.get(j, k));
            }
        }
        best = best.max(size);
        if best >= need {
            return best;
        }
    }
    if m <= EXACT_SEPARATION_LIMIT {
        best = best.max(max_separated_exact(d, c));
    }
    best
}

/// Largest `c`-separated subset by enumeration of all subsets.
pub fn max_separated_exact(d: &DistanceMatrix, c: f64) -> usize {
    let m = d.size();
    assert!(m <= 24, "exhaustive search is limited to small inputs");
    let adj: Vec<u32> = (0..m)
        .map(|i| (0..m).filter(|&j| j != i && d.get(i, j) >= c).fold(0u32, |acc, j| acc | (1 << j)))
        .collect();
    let mut ok = vec![false; 1 << m];
    ok[0] = true;
    let mut best = 0;
    for mask in 1u32..(1 << m) {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        if ok[rest as usize] && adj[low] & rest == rest {
            ok[mask as usize] = true;
            best = best.max(mask.count_ones() as usize);
        }
    }
    best
}

/// Outcome of the random distance-matrix test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationEstimate {
    pub c: f64,
    pub n: usize,
    pub trials: usize,
    pub hits: usize,
    pub probability: f64,
}

/// Frequency of the event "some `ceil(c n)` of `n` random points are
/// pairwise at distance `>= c`".
pub fn random_matrix_test(
    rho: &Semimetric,
    system: &SystemSpec,
    c: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<SeparationEstimate> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Precondition(format!("c must lie in (0,1), got {c}")));
    }
    if n < 2 || trials == 0 {
        return Err(Error::Precondition("need n >= 2 and at least one trial".into()));
    }
    rho.check_compatible(system)?;
    let need = ((c * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let horizon = if system.is_symbolic() { rho.horizon().max(1) } else { 0 };
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = sample_points(system, n, derive_seed(seed, t as u64), horizon)?;
            let d = distance_matrix(rho, &s)?;
            Ok(separated_subset_size(&d, c, need) >= need)
        })
        .collect::<Result<Vec<bool>>>()?;
    let hits = outcomes.iter().filter(|&&h| h).count();
    Ok(SeparationEstimate {
        c,
        n,
        trials,
        hits,
        probability: hits as f64 / trials as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmissibilityVerdict {
    AdmissibleEvidence,
    NotAdmissibleEvidence,
    Inconclusive,
}

/// Sample sizes and thresholds for [`admissibility_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmissibilityParams {
    pub m: usize,
    pub trace_schedule: Vec<usize>,
    pub ball_eps: f64,
    pub c: f64,
    pub pc_points: usize,
    pub pc_trials: usize,
}

impl Default for AdmissibilityParams {
    fn default() -> Self {
        AdmissibilityParams {
            m: 512,
            trace_schedule: vec![2, 4, 8, 16, 32],
            ball_eps: 0.1,
            c: 0.4,
            pc_points: 64,
            pc_trials: 50,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub metric: String,
    pub seed: u64,
    pub trace_curve: Vec<TracePoint>,
    pub l1_norm: f64,
    pub ball_mass_fraction: f64,
    pub pc_probability: f64,
    pub verdict: AdmissibilityVerdict,
}

/// Trace evidence: the last value at most half the first and at most a
/// tenth of the empirical L1 norm.
pub fn trace_evidence(curve: &[TracePoint], l1_norm: f64) -> bool {
    match (curve.first(), curve.last()) {
        (Some(first), Some(last)) => {
            last.trace_over_n <= 0.5 * first.trace_over_n && last.trace_over_n <= 0.1 * l1_norm
        }
        _ => false,
    }
}

pub fn admissibility_verdict(curve: &[TracePoint], l1_norm: f64, ball: f64, pc: f64) -> AdmissibilityVerdict {
    let trace_ok = trace_evidence(curve, l1_norm);
    if trace_ok && ball >= 0.9 && pc <= 0.1 {
        AdmissibilityVerdict::AdmissibleEvidence
    } else if pc >= 0.5 || (ball <= 0.1 && !trace_ok) {
        AdmissibilityVerdict::NotAdmissibleEvidence
    } else {
        AdmissibilityVerdict::Inconclusive
    }
}

/// All three diagnostics on one seeded sample.
pub fn admissibility_report(
    rho: &Semimetric,
    system: &SystemSpec,
    params: &AdmissibilityParams,
    seed: u64,
) -> Result<AdmissibilityReport> {
    rho.check_compatible(system)?;
    let horizon = if system.is_symbolic() { rho.horizon().max(1) } else { 0 };
    let sample = sample_points(system, params.m, seed, horizon.max(trace_depth(system, params)))?;
    let d = distance_matrix(rho, &sample)?;
    let trace_curve = trace_test_matrix(&d, &sample, &params.trace_schedule)?;
    let m = d.size();
    let l1_norm = if m < 2 {
        0.0
    } else {
        (0..m).map(|i| d.row(i).iter().sum::<f64>()).sum::<f64>() / (m * (m - 1)) as f64
    };
    let ball = ball_mass_test(&d, params.ball_eps)?;
    let pc = random_matrix_test(rho, system, params.c, params.pc_points, params.pc_trials, derive_seed(seed, 0xBC))?;
    Ok(AdmissibilityReport {
        metric: rho.label(),
        seed,
        verdict: admissibility_verdict(&trace_curve, l1_norm, ball, pc.probability),
        trace_curve,
        l1_norm,
        ball_mass_fraction: ball,
        pc_probability: pc.probability,
    })
}

/// Symbols needed to place points in the finest cylinder partition.
fn trace_depth(system: &SystemSpec, params: &AdmissibilityParams) -> usize {
    match system {
        SystemSpec::BernoulliShift { weights } if weights.len() > 1 => params
            .trace_schedule
            .iter()
            .filter_map(|&n| log_base(n, weights.len()))
            .max()
            .unwrap_or(0) as usize,
        _ => 0,
    }
}

/// Header of the trace-curve CSV.
pub const TRACE_CSV_HEADER: &str = "metric,n,trace_over_n,stderr";
