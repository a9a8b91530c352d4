//! Scaling profiles: entropy of the averaged metric as a function of the
//! averaging length, growth classification, and the spectral verdict.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admit::{admissibility_report, AdmissibilityParams, AdmissibilityReport, AdmissibilityVerdict};
use crate::dynsys::{sample_points, SystemSpec};
use crate::entropy::{estimate_from_matrix, required_horizon, EpsEntropyEstimate, Method};
use crate::error::{Error, Result};
use crate::semimetric::{average_metric, averaged_distance_matrices, Semimetric};

/// Allowed rise, in bits, from the second schedule point to the last.
pub const BOUNDED_SLACK_BITS: f64 = 1.0;
/// Kendall tau above which a profile counts as trending upward.
pub const TREND_TAU: f64 = 0.5;
/// Value differences up to this many bits are ties in the trend statistic.
pub const TREND_RESOLUTION_BITS: f64 = 0.5;
/// Minimum coefficient of determination for a growth fit.
pub const FIT_R2: f64 = 0.95;
/// A profile within this many bits of `log2(sample_size)` is saturated.
pub const SATURATION_MARGIN_BITS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GrowthClass {
    Bounded,
    Logarithmic,
    Polynomial { exponent: f64 },
    Linear,
    Undetermined,
}

impl GrowthClass {
    pub fn name(&self) -> &'static str {
        match self {
            GrowthClass::Bounded => "Bounded",
            GrowthClass::Logarithmic => "Logarithmic",
            GrowthClass::Polynomial { .. } => "Polynomial",
            GrowthClass::Linear => "Linear",
            GrowthClass::Undetermined => "Undetermined",
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(
            self,
            GrowthClass::Linear | GrowthClass::Logarithmic | GrowthClass::Polynomial { .. }
        )
    }
}

impl std::fmt::Display for GrowthClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GrowthClass::Polynomial { exponent } => write!(f, "Polynomial({exponent:.3})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub n: usize,
    pub value_bits: f64,
    pub lower_bound_bits: f64,
    pub sample_size: usize,
    /// Seed of the cell that supplied the median.
    pub seed: u64,
}

/// One (n, seed) estimate behind a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCell {
    pub n: usize,
    pub estimate: EpsEntropyEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub linear: LineFit,
    /// value against `log2 n`.
    pub logarithmic: LineFit,
    /// `log2 value` against `log2 n`; absent when some value is not positive.
    pub log_log: Option<LineFit>,
    pub linear_residuals: Vec<f64>,
    pub kendall_tau: f64,
    /// Last value minus the value at the second schedule point.
    pub rise_bits: f64,
    pub saturation_ceiling_bits: Option<f64>,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingProfile {
    pub system: SystemSpec,
    pub metric: Semimetric,
    pub method: Method,
    pub eps: f64,
    pub rows: Vec<ProfileRow>,
    pub cells: Vec<ProfileCell>,
    pub growth_class: GrowthClass,
    pub fit_diagnostics: Option<FitDiagnostics>,
    /// Messages from cells whose estimate failed.
    pub failures: Vec<String>,
}

fn line_fit(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 1e-300 { (1.0 - sse / syy).max(0.0) } else { 0.0 };
    LineFit { slope, intercept, r2 }
}

/// Kendall tau-a of values in schedule order, with near-equal values tied.
fn trend_tau(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let d = values[j] - values[i];
            if d > TREND_RESOLUTION_BITS {
                s += 1;
            } else if d < -TREND_RESOLUTION_BITS {
                s -= 1;
            }
        }
    }
    s as f64 / (n * (n - 1) / 2) as f64
}

/// Growth class of a profile's rows, sorted internally by `n`.
pub fn classify_growth(rows: &[ProfileRow]) -> Result<(GrowthClass, FitDiagnostics)> {
    if rows.len() < 4 {
        return Err(Error::Precondition(format!(
            "growth classification needs at least 4 rows, got {}",
            rows.len()
        )));
    }
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| a.n.cmp(&b.n).then(a.value_bits.total_cmp(&b.value_bits)));
    if rows.windows(2).any(|w| w[0].n == w[1].n) || rows[0].n == 0 {
        return Err(Error::Precondition("row n values must be positive and distinct".into()));
    }
    if rows.iter().any(|r| !r.value_bits.is_finite()) {
        return Err(Error::Data("non-finite profile value".into()));
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let log_ns: Vec<f64> = ns.iter().map(|n| n.log2()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.value_bits).collect();

    let linear = line_fit(&ns, &ys);
    let logarithmic = line_fit(&log_ns, &ys);
    let log_log = ys
        .iter()
        .all(|&y| y > 0.0)
        .then(|| line_fit(&log_ns, &ys.iter().map(|y| y.log2()).collect::<Vec<_>>()));
    let linear_residuals = ns
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - linear.intercept - linear.slope * x)
        .collect();
    let kendall_tau = trend_tau(&ys);
    let rise_bits = ys[ys.len() - 1] - ys[1];
    let ceiling = rows
        .iter()
        .filter(|r| r.sample_size > 0)
        .map(|r| (r.sample_size as f64).log2())
        .reduce(f64::min);
    let top = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let saturated = ceiling.is_some_and(|c| top >= c - SATURATION_MARGIN_BITS);

    let class = if rise_bits <= BOUNDED_SLACK_BITS + 1e-9 && kendall_tau <= TREND_TAU && !saturated {
        GrowthClass::Bounded
    } else {
        // best fitting model among those that pass, ties in listed order
        let mut best: Option<(f64, GrowthClass)> = None;
        let mut offer = |fit: LineFit, class: GrowthClass| {
            if fit.r2 >= FIT_R2 && fit.slope > 0.0 && best.as_ref().is_none_or(|b| fit.r2 > b.0) {
                best = Some((fit.r2, class));
            }
        };
        offer(linear, GrowthClass::Linear);
        offer(logarithmic, GrowthClass::Logarithmic);
        if let Some(f) = log_log {
            offer(f, GrowthClass::Polynomial { exponent: f.slope });
        }
        best.map_or(GrowthClass::Undetermined, |b| b.1)
    };
    Ok((
        class,
        FitDiagnostics {
            linear,
            logarithmic,
            log_log,
            linear_residuals,
            kendall_tau,
            rise_bits,
            saturation_ceiling_bits: ceiling,
            saturated,
        },
    ))
}

fn lower_median(cells: &[&EpsEntropyEstimate]) -> usize {
    let mut idx: Vec<usize> = (0..cells.len()).collect();
    idx.sort_by(|&a, &b| {
        cells[a]
            .value_bits
            .total_cmp(&cells[b].value_bits)
            .then(cells[a].seed.cmp(&cells[b].seed))
    });
    idx[(idx.len() - 1) / 2]
}

fn check_schedule(n_schedule: &[usize]) -> Result<()> {
    if n_schedule.is_empty() || n_schedule[0] == 0 {
        return Err(Error::Precondition("schedule must be nonempty with n >= 1".into()));
    }
    if n_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("schedule must be strictly increasing".into()));
    }
    Ok(())
}

/// Profiles for every eps of a grid, sharing samples and matrices.
///
/// Each seed draws one sample, long enough for the largest `n`, and every
/// schedule point reuses it.
pub fn scaling_profiles(
    system: &SystemSpec,
    rho: &Semimetric,
    eps_grid: &[f64],
    n_schedule: &[usize],
    m: usize,
    seeds: &[u64],
    method: Method,
) -> Result<Vec<ScalingProfile>> {
    check_schedule(n_schedule)?;
    if seeds.is_empty() || eps_grid.is_empty() {
        return Err(Error::Precondition("need at least one seed and one eps".into()));
    }
    if eps_grid.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Precondition("eps values must be positive".into()));
    }
    system.validate()?;
    rho.check_compatible(system)?;
    let n_max = *n_schedule.last().expect("nonempty");
    let horizon = if system.is_symbolic() {
        required_horizon(rho, system, n_max) + 1
    } else {
        0
    };

    // per seed: per n: per eps
    let per_seed = seeds
        .par_iter()
        .map(|&seed| {
            let sample = sample_points(system, m, seed, horizon)?;
            let mats = averaged_distance_matrices(rho, system, &sample, n_schedule)?;
            let grid: Vec<(usize, usize)> = (0..n_schedule.len())
                .flat_map(|a| (0..eps_grid.len()).map(move |b| (a, b)))
                .collect();
            Ok(grid
                .par_iter()
                .map(|&(a, b)| estimate_from_matrix(&mats[a], eps_grid[b], method))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut profiles = Vec::with_capacity(eps_grid.len());
    for (b, &eps) in eps_grid.iter().enumerate() {
        let mut rows = Vec::new();
        let mut cells = Vec::new();
        let mut failures = Vec::new();
        for (a, &n) in n_schedule.iter().enumerate() {
            let mut ok = Vec::new();
            for (s, results) in per_seed.iter().enumerate() {
                match &results[a * eps_grid.len() + b] {
                    Ok(est) => {
                        cells.push(ProfileCell { n, estimate: est.clone() });
                        ok.push(est);
                    }
                    Err(e) => failures.push(format!("n={n} seed={}: {e}", seeds[s])),
                }
            }
            if !ok.is_empty() {
                let med = ok[lower_median(&ok)];
                rows.push(ProfileRow {
                    n,
                    value_bits: med.value_bits,
                    lower_bound_bits: med.lower_bound_bits,
                    sample_size: med.sample_size,
                    seed: med.seed,
                });
            }
        }
        let (growth_class, fit_diagnostics) = if !failures.is_empty() || rows.len() < 4 {
            let diag = if rows.len() >= 4 { Some(classify_growth(&rows)?.1) } else { None };
            (GrowthClass::Undetermined, diag)
        } else {
            let (c, d) = classify_growth(&rows)?;
            (c, Some(d))
        };
        profiles.push(ScalingProfile {
            system: system.clone(),
            metric: rho.clone(),
            method,
            eps,
            rows,
            cells,
            growth_class,
            fit_diagnostics,
            failures,
        });
    }
    Ok(profiles)
}

pub fn scaling_profile(
    system: &SystemSpec,
    rho: &Semimetric,
    eps: f64,
    n_schedule: &[usize],
    m: usize,
    seeds: &[u64],
) -> Result<ScalingProfile> {
    scaling_profile_with(system, rho, eps, n_schedule, m, seeds, Method::Covering)
}

pub fn scaling_profile_with(
    system: &SystemSpec,
    rho: &Semimetric,
    eps: f64,
    n_schedule: &[usize],
    m: usize,
    seeds: &[u64],
    method: Method,
) -> Result<ScalingProfile> {
    Ok(scaling_profiles(system, rho, &[eps], n_schedule, m, seeds, method)?
        .pop()
        .expect("one eps"))
}

/// Header of the plotting CSV.
pub const ROWS_CSV_HEADER: &str = "system,metric,eps,n,seed,method,value_bits";

/// Per-seed cells of the profiles in [`ROWS_CSV_HEADER`] order.
pub fn write_rows_csv<W: std::io::Write>(mut out: W, profiles: &[ScalingProfile]) -> std::io::Result<()> {
    use crate::entropy::csv_field;
    writeln!(out, "{ROWS_CSV_HEADER}")?;
    for p in profiles {
        let system = csv_field(&p.system.label());
        let metric = csv_field(&p.metric.label());
        for c in &p.cells {
            writeln!(
                out,
                "{system},{metric},{},{},{},{},{}",
                p.eps,
                c.n,
                c.estimate.seed,
                p.method.as_str(),
                c.estimate.value_bits
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    DiscreteSpectrumEvidence,
    NotDiscreteEvidence,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralVerdict {
    pub verdict: Verdict,
    /// Growth class per eps, keyed by the eps value as written.
    pub per_eps: BTreeMap<String, GrowthClass>,
    pub basis: String,
}

/// Verdict from one growth class per eps.
pub fn verdict_from_classes(classes: &[(f64, GrowthClass)]) -> SpectralVerdict {
    let per_eps: BTreeMap<String, GrowthClass> = classes.iter().map(|(e, c)| (e.to_string(), c.clone())).collect();
    let mut distinct: Vec<f64> = classes.iter().map(|c| c.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let (verdict, basis) = if let Some((e, c)) = classes.iter().find(|(_, c)| c.is_unbounded()) {
        (
            Verdict::NotDiscreteEvidence,
            format!("profile at eps={e} grows ({c})"),
        )
    } else if distinct.len() < 2 {
        (Verdict::Undetermined, "fewer than two eps values tested".to_string())
    } else if classes.iter().all(|(_, c)| *c == GrowthClass::Bounded) {
        (
            Verdict::DiscreteSpectrumEvidence,
            format!("bounded at all {} eps values", distinct.len()),
        )
    } else {
        (
            Verdict::Undetermined,
            "some profile is undetermined and none grows".to_string(),
        )
    };
    SpectralVerdict { verdict, per_eps, basis }
}

pub fn discreteness_verdict(profiles: &[ScalingProfile]) -> SpectralVerdict {
    let classes: Vec<(f64, GrowthClass)> = profiles.iter().map(|p| (p.eps, p.growth_class.clone())).collect();
    verdict_from_classes(&classes)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitMetricReport {
    pub n_big: usize,
    pub reports: Vec<AdmissibilityReport>,
    /// Unanimous verdict over seeds, otherwise inconclusive.
    pub verdict: AdmissibilityVerdict,
    pub expected: Option<AdmissibilityVerdict>,
    pub consistent: Option<bool>,
}

/// Admissibility diagnostics of `Average(rho, system, n_big)`.
pub fn limit_metric_check(
    system: &SystemSpec,
    rho: &Semimetric,
    n_big: usize,
    params: &AdmissibilityParams,
    seeds: &[u64],
    growth: Option<&GrowthClass>,
) -> Result<LimitMetricReport> {
    if seeds.is_empty() {
        return Err(Error::Precondition("need at least one seed".into()));
    }
    let avg = average_metric(rho, system, n_big)?;
    let reports = seeds
        .iter()
        .map(|&s| admissibility_report(&avg, system, params, s))
        .collect::<Result<Vec<_>>>()?;
    let first = reports[0].verdict;
    let verdict = if reports.iter().all(|r| r.verdict == first) {
        first
    } else {
        AdmissibilityVerdict::Inconclusive
    };
    let expected = growth.and_then(|g| match g {
        GrowthClass::Bounded => Some(AdmissibilityVerdict::AdmissibleEvidence),
        g if g.is_unbounded() => Some(AdmissibilityVerdict::NotAdmissibleEvidence),
        _ => None,
    });
    Ok(LimitMetricReport {
        n_big,
        consistent: expected.map(|e| e == verdict),
        expected,
        reports,
        verdict,
    })
}
