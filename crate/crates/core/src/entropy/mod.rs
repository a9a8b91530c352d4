//! Epsilon-entropy estimators on empirical metric measure spaces.
//!
//! Two estimators are offered. The covering estimator brackets the number of
//! small-diameter sets needed to cover all but `eps` of the sample. The
//! Kantorovich estimator searches for a low-entropy atomic measure within
//! transport distance `eps` of the empirical measure.

pub mod cover;
pub mod kmedoids;
pub mod transport;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynsys::{sample_points, SystemSpec};
use crate::error::{Error, Result};
use crate::semimetric::{averaged_distance_matrices, DistanceMatrix, Semimetric};

pub use cover::{greedy_cover, lower_bound_k, CoverOutcome};
pub use kmedoids::{best_of_restarts, Medoids};
pub use transport::{kantorovich_distance, optimal_plan, AtomicMeasure, GroundCost, PointCost, TransportPlan};

/// Restarts per k in the Kantorovich estimator.
pub const MEDOID_RESTARTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Covering,
    Kantorovich,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Covering => "Covering",
            Method::Kantorovich => "Kantorovich",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsEntropyEstimate {
    pub eps: f64,
    pub method: Method,
    /// Upper estimate in bits: `log2 k` for coverings, `H(nu)` for quantization.
    pub value_bits: f64,
    pub lower_bound_bits: f64,
    /// Number of cover sets, or atoms of the quantizing measure.
    pub k: usize,
    pub sample_size: usize,
    pub seed: u64,
}

/// Shannon entropy of the weights, in bits.
pub fn atomic_entropy(nu: &AtomicMeasure) -> f64 {
    entropy_bits(nu.weights())
}

fn entropy_bits(weights: &[f64]) -> f64 {
    let h: f64 = weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| -w * w.log2())
        .sum();
    h.max(0.0)
}

/// Covering estimate with one `eps` for both diameter and exceptional mass.
pub fn eps_entropy_cover(d: &DistanceMatrix, eps: f64) -> Result<EpsEntropyEstimate> {
    eps_entropy_cover_split(d, eps, eps)
}

/// Covering estimate with separate diameter and exceptional-mass thresholds.
pub fn eps_entropy_cover_split(d: &DistanceMatrix, dist_eps: f64, mass_eps: f64) -> Result<EpsEntropyEstimate> {
    if d.size() == 0 {
        return Err(Error::Size("empty distance matrix".into()));
    }
    let cover = greedy_cover(d, dist_eps, mass_eps)?;
    let k = cover.k();
    // only inputs violating the triangle inequality can push the bound past k
    let lower = lower_bound_k(d, dist_eps, mass_eps).min(k);
    Ok(EpsEntropyEstimate {
        eps: dist_eps,
        method: Method::Covering,
        value_bits: (k as f64).log2(),
        lower_bound_bits: (lower as f64).log2(),
        k,
        sample_size: d.size(),
        seed: d.sample_seed.unwrap_or(0),
    })
}

/// A quantizing measure found by the Kantorovich estimator.
#[derive(Debug, Clone)]
pub struct Quantization {
    pub measure: AtomicMeasure,
    /// Transport cost from the uniform empirical measure.
    pub cost: f64,
    pub entropy_bits: f64,
}

/// Nearest-medoid quantization of the uniform measure on the matrix's points.
///
/// With the weights set to the cluster masses, sending every point to its
/// nearest medoid is an optimal coupling, so the cost is the mean deviation.
fn quantize(d: &DistanceMatrix, k: usize, seed: u64) -> Result<Quantization> {
    let med = best_of_restarts(d, k, MEDOID_RESTARTS, seed);
    let m = d.size() as f64;
    let (atoms, weights): (Vec<usize>, Vec<f64>) = med
        .cluster_sizes()
        .into_iter()
        .zip(&med.medoids)
        .filter(|(size, _)| *size > 0)
        .map(|(size, &atom)| (atom, size as f64 / m))
        .unzip();
    let entropy = entropy_bits(&weights);
    // rescale so the weights sum to one to working precision
    let total: f64 = weights.iter().sum();
    let measure = AtomicMeasure::new(atoms, weights.iter().map(|w| w / total).collect())?;
    Ok(Quantization {
        measure,
        cost: med.loss / m,
        entropy_bits: entropy,
    })
}

/// Kantorovich estimate together with the measure that attains it.
pub fn kantorovich_quantization(d: &DistanceMatrix, eps: f64, seed: u64) -> Result<(EpsEntropyEstimate, Quantization)> {
    let m = d.size();
    if m < 2 {
        return Err(Error::Size("Kantorovich estimate needs at least 2 points".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let mut best: Option<Quantization> = None;
    let consider = |q: Quantization, best: &mut Option<Quantization>| {
        let feasible = cover::below(q.cost, eps);
        if feasible && best.as_ref().is_none_or(|b| q.entropy_bits < b.entropy_bits) {
            *best = Some(q);
        }
        feasible
    };

    // doubling until feasible, then bisection on k
    let mut lo = 0;
    let mut k = 1;
    let hi = loop {
        if consider(quantize(d, k, seed)?, &mut best) {
            break k;
        }
        if k == m {
            return Err(Error::Infeasible(format!("no quantization within eps = {eps}")));
        }
        lo = k;
        k = (2 * k).min(m);
    };
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if consider(quantize(d, mid, seed)?, &mut best) {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let q = best.expect("a feasible k was found");
    let est = EpsEntropyEstimate {
        eps,
        method: Method::Kantorovich,
        value_bits: q.entropy_bits,
        lower_bound_bits: 0.0,
        k: q.measure.len(),
        sample_size: m,
        seed: d.sample_seed.unwrap_or(seed),
    };
    Ok((est, q))
}

pub fn eps_entropy_kantorovich(d: &DistanceMatrix, eps: f64) -> Result<EpsEntropyEstimate> {
    let seed = d.sample_seed.unwrap_or(0);
    Ok(kantorovich_quantization(d, eps, seed)?.0)
}

/// Runs the chosen estimator on a precomputed matrix.
pub fn estimate_from_matrix(d: &DistanceMatrix, eps: f64, method: Method) -> Result<EpsEntropyEstimate> {
    match method {
        Method::Covering => eps_entropy_cover(d, eps),
        Method::Kantorovich => eps_entropy_kantorovich(d, eps),
    }
}

/// Symbols each point must carry for averages up to length `n`.
pub fn required_horizon(rho: &Semimetric, system: &SystemSpec, n: usize) -> usize {
    if system.is_symbolic() {
        (n.max(1) - 1 + rho.horizon()).max(1)
    } else {
        0
    }
}

/// Sample, average along the orbit, build the distance matrix, estimate.
pub fn entropy_estimate(
    system: &SystemSpec,
    rho: &Semimetric,
    n: usize,
    eps: f64,
    m: usize,
    seed: u64,
    method: Method,
) -> Result<EpsEntropyEstimate> {
    if n == 0 {
        return Err(Error::Precondition("averaging length must be at least 1".into()));
    }
    rho.check_compatible(system)?;
    let sample = sample_points(system, m, seed, required_horizon(rho, system, n))?;
    let d = averaged_distance_matrices(rho, system, &sample, &[n])?
        .pop()
        .expect("one matrix");
    estimate_from_matrix(&d, eps, method)
}

/// Header of the batch CSV for estimates.
pub const ESTIMATE_CSV_HEADER: &str = "system,metric,method,n,eps,m,seed,k,value_bits,lower_bound_bits";

/// Appends one estimate as a CSV line in [`ESTIMATE_CSV_HEADER`] order.
pub fn write_estimate_row<W: Write>(
    mut out: W,
    system: &SystemSpec,
    metric: &Semimetric,
    n: usize,
    est: &EpsEntropyEstimate,
) -> std::io::Result<()> {
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{}",
        csv_field(&system.label()),
        csv_field(&metric.label()),
        est.method.as_str(),
        n,
        est.eps,
        est.sample_size,
        est.seed,
        est.k,
        est.value_bits,
        est.lower_bound_bits
    )
}

/// Quotes a field when it contains CSV separators.
pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
