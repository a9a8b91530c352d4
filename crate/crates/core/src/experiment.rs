//! Declarative experiments: JSON configs, bundled presets, result bundles on
//! disk, and comparison of two bundles.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::admit::{admissibility_report, AdmissibilityParams, AdmissibilityReport, TRACE_CSV_HEADER};
use crate::dynsys::SystemSpec;
use crate::entropy::{csv_field, write_estimate_row, Method, ESTIMATE_CSV_HEADER};
use crate::error::{Error, Result};
use crate::scaling::{
    discreteness_verdict, limit_metric_check, scaling_profiles, write_rows_csv, GrowthClass, LimitMetricReport,
    ScalingProfile, SpectralVerdict, Verdict,
};
use crate::semimetric::{Partition, Semimetric};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub metric: Semimetric,
    pub eps_grid: Vec<f64>,
    pub n_schedule: Vec<usize>,
    pub m: usize,
    pub seeds: Vec<u64>,
    pub method: Method,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub admissibility: AdmissibilityParams,
}

const FIELDS: [&str; 9] = [
    "system",
    "metric",
    "eps_grid",
    "n_schedule",
    "m",
    "seeds",
    "method",
    "output_dir",
    "admissibility",
];

fn bad(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

fn field<T: serde::de::DeserializeOwned>(obj: &Map<String, Value>, name: &str) -> Result<T> {
    let v = obj.get(name).ok_or_else(|| bad(name, "missing"))?;
    serde_json::from_value(v.clone()).map_err(|e| bad(name, e.to_string()))
}

/// Parses and validates a config; errors name the offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| bad("<document>", e.to_string()))?;
    let Value::Object(mut obj) = value else {
        return Err(bad("<document>", "config must be a JSON object"));
    };
    if let Some(k) = obj.keys().find(|k| !FIELDS.contains(&k.as_str())) {
        return Err(bad(k, "unknown field"));
    }
    // a bare name stands for the descriptor of that name
    if let Some(Value::String(name)) = obj.get("metric").cloned() {
        obj.insert("metric".into(), serde_json::json!({ "type": name }));
    }
    let config = ExperimentConfig {
        system: field(&obj, "system")?,
        metric: field(&obj, "metric")?,
        eps_grid: field(&obj, "eps_grid")?,
        n_schedule: field(&obj, "n_schedule")?,
        m: field(&obj, "m")?,
        seeds: field(&obj, "seeds")?,
        method: if obj.contains_key("method") { field(&obj, "method")? } else { Method::Covering },
        output_dir: if obj.contains_key("output_dir") {
            field(&obj, "output_dir")?
        } else {
            PathBuf::from("results")
        },
        admissibility: if obj.contains_key("admissibility") {
            field(&obj, "admissibility")?
        } else {
            AdmissibilityParams::default()
        },
    };
    validate_config(&config)?;
    Ok(config)
}

pub fn validate_config(c: &ExperimentConfig) -> Result<()> {
    c.system.validate().map_err(|e| bad("system", e.to_string()))?;
    c.metric
        .check_compatible(&c.system)
        .map_err(|e| bad("metric", e.to_string()))?;
    if c.eps_grid.is_empty() {
        return Err(bad("eps_grid", "must be nonempty"));
    }
    let diam = c.metric.diameter_bound(&c.system);
    if let Some(e) = c.eps_grid.iter().find(|&&e| !(e > 0.0 && e < diam)) {
        return Err(bad("eps_grid", format!("{e} is outside (0, {diam})")));
    }
    if c.n_schedule.is_empty() || c.n_schedule[0] == 0 {
        return Err(bad("n_schedule", "must be nonempty with positive entries"));
    }
    if c.n_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("n_schedule", "must be strictly increasing"));
    }
    if c.m < 16 {
        return Err(bad("m", "at least 16 sample points are required"));
    }
    if c.seeds.is_empty() {
        return Err(bad("seeds", "must be nonempty"));
    }
    let a = &c.admissibility;
    if a.m < 16 {
        return Err(bad("admissibility.m", "at least 16 sample points are required"));
    }
    let q = match &c.system {
        SystemSpec::BernoulliShift { weights } => weights.len(),
        _ => 2,
    };
    let power_of = |n: usize| {
        let mut v = 1usize;
        while v < n {
            v = v.saturating_mul(q);
        }
        v == n && q > 1
    };
    if let Some(n) = a.trace_schedule.iter().find(|&&n| !power_of(n)) {
        return Err(bad("admissibility.trace_schedule", format!("{n} is not a power of {q}")));
    }
    if !(a.c > 0.0 && a.c < 1.0) {
        return Err(bad("admissibility.c", "must lie in (0,1)"));
    }
    if a.pc_points < 2 || a.pc_trials == 0 {
        return Err(bad("admissibility.pc_points", "need at least 2 points and 1 trial"));
    }
    if !(a.ball_eps > 0.0) {
        return Err(bad("admissibility.ball_eps", "must be positive"));
    }
    Ok(())
}

/// Pins the global worker pool to `n` threads; call before any computation.
pub fn init_workers(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Parameter(format!("worker pool: {e}")))
}

pub const PRESET_NAMES: [&str; 10] = [
    "rotation-euclidean",
    "rotation-gap-plus-square",
    "torus-circle-arc",
    "torus-plane-euclidean",
    "anzai-circle-arc",
    "anzai-plane-euclidean",
    "bernoulli-fair-first-symbol",
    "bernoulli-fair-two-symbol-block",
    "bernoulli-biased-first-symbol",
    "bernoulli-biased-two-symbol-block",
];

/// Bundled config by name, on the desk-scale grid.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    use crate::semimetric::ClosedForm;
    let biased = SystemSpec::BernoulliShift { weights: vec![0.9, 0.1] };
    let two_block = Semimetric::Block {
        partition: Partition::Cylinder { length: 2 },
    };
    let closed = |form| Semimetric::ClosedForm { form };
    let (system, metric) = match name {
        "rotation-euclidean" => (SystemSpec::rotation(), Semimetric::Euclidean1D),
        "rotation-gap-plus-square" => (SystemSpec::rotation(), closed(ClosedForm::GapPlusSquareGap)),
        "torus-circle-arc" => (SystemSpec::torus(), Semimetric::CircleArc),
        "torus-plane-euclidean" => (SystemSpec::torus(), closed(ClosedForm::PlaneEuclidean)),
        "anzai-circle-arc" => (SystemSpec::anzai(), Semimetric::CircleArc),
        "anzai-plane-euclidean" => (SystemSpec::anzai(), closed(ClosedForm::PlaneEuclidean)),
        "bernoulli-fair-first-symbol" => (SystemSpec::fair_coin(), Semimetric::FirstSymbolCut),
        "bernoulli-fair-two-symbol-block" => (SystemSpec::fair_coin(), two_block),
        "bernoulli-biased-first-symbol" => (biased, Semimetric::FirstSymbolCut),
        "bernoulli-biased-two-symbol-block" => (biased, two_block),
        _ => return None,
    };
    Some(ExperimentConfig {
        system,
        metric,
        eps_grid: vec![0.25, 0.1],
        n_schedule: vec![16, 32, 64, 128, 256, 512, 1024],
        m: 512,
        seeds: vec![1, 2, 3],
        method: Method::Covering,
        output_dir: PathBuf::from("results").join(name),
        admissibility: AdmissibilityParams::default(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileFile {
    pub config: ExperimentConfig,
    pub profiles: Vec<ScalingProfile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictFile {
    pub system: String,
    pub metric: String,
    pub method: Method,
    #[serde(flatten)]
    pub verdict: SpectralVerdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibilityFile {
    pub base: AdmissibilityReport,
    pub limit: LimitMetricReport,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub profiles: Vec<ScalingProfile>,
    pub verdict: SpectralVerdict,
    pub admissibility: AdmissibilityFile,
}

/// Runs every profile and both admissibility checks, in memory.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    validate_config(config)?;
    let profiles = scaling_profiles(
        &config.system,
        &config.metric,
        &config.eps_grid,
        &config.n_schedule,
        config.m,
        &config.seeds,
        config.method,
    )?;
    if let Some(p) = profiles.iter().find(|p| !p.failures.is_empty()) {
        return Err(Error::Infeasible(format!("eps={}: {}", p.eps, p.failures.join("; "))));
    }
    let verdict = discreteness_verdict(&profiles);
    let finest = profiles
        .iter()
        .min_by(|a, b| a.eps.total_cmp(&b.eps))
        .map(|p| &p.growth_class);
    let n_big = *config.n_schedule.last().expect("validated");
    let base = admissibility_report(&config.metric, &config.system, &config.admissibility, config.seeds[0])?;
    let limit = limit_metric_check(
        &config.system,
        &config.metric,
        n_big,
        &config.admissibility,
        &config.seeds,
        finest,
    )?;
    Ok(ExperimentOutcome {
        profiles,
        verdict,
        admissibility: AdmissibilityFile { base, limit },
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Writes the result bundle of an outcome into `dir`.
pub fn write_bundle(dir: &Path, config: &ExperimentConfig, outcome: &ExperimentOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(
        &dir.join("profile.json"),
        &ProfileFile {
            config: config.clone(),
            profiles: outcome.profiles.clone(),
        },
    )?;
    write_json(
        &dir.join("verdict.json"),
        &VerdictFile {
            system: config.system.label(),
            metric: config.metric.label(),
            method: config.method,
            verdict: outcome.verdict.clone(),
        },
    )?;
    write_json(&dir.join("admissibility.json"), &outcome.admissibility)?;

    let mut rows = BufWriter::new(fs::File::create(dir.join("rows.csv"))?);
    write_rows_csv(&mut rows, &outcome.profiles)?;
    rows.flush()?;

    let mut est = BufWriter::new(fs::File::create(dir.join("estimates.csv"))?);
    writeln!(est, "{ESTIMATE_CSV_HEADER}")?;
    for p in &outcome.profiles {
        for c in &p.cells {
            write_estimate_row(&mut est, &p.system, &p.metric, c.n, &c.estimate)?;
        }
    }
    est.flush()?;

    let mut trace = BufWriter::new(fs::File::create(dir.join("trace.csv"))?);
    writeln!(trace, "{TRACE_CSV_HEADER}")?;
    let reports = std::iter::once(&outcome.admissibility.base).chain(&outcome.admissibility.limit.reports);
    for r in reports {
        for t in &r.trace_curve {
            writeln!(trace, "{},{},{},{}", csv_field(&r.metric), t.n, t.trace_over_n, t.stderr)?;
        }
    }
    trace.flush()?;
    Ok(())
}

/// Executes a config and writes its bundle to `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let outcome = execute(config)?;
    write_bundle(&config.output_dir, config, &outcome)?;
    Ok(outcome)
}

/// Loads the profiles and config of a bundle directory.
pub fn load_bundle(dir: &Path) -> Result<ProfileFile> {
    let text = fs::read_to_string(dir.join("profile.json"))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsComparison {
    pub eps: f64,
    pub class_a: GrowthClass,
    pub class_b: GrowthClass,
    pub same: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub label_a: String,
    pub label_b: String,
    pub per_eps: Vec<EpsComparison>,
    pub verdict_a: Verdict,
    pub verdict_b: Verdict,
    pub verdicts_equal: bool,
    pub differences: usize,
}

fn sorted_grid(p: &ProfileFile) -> Vec<f64> {
    let mut g: Vec<f64> = p.profiles.iter().map(|x| x.eps).collect();
    g.sort_by(f64::total_cmp);
    g
}

/// Per-eps class comparison of two loaded bundles.
pub fn compare_bundles(a: &ProfileFile, b: &ProfileFile) -> Result<Comparison> {
    let (ga, gb) = (sorted_grid(a), sorted_grid(b));
    if ga != gb {
        return Err(Error::Incompatible(format!("eps grids differ: {ga:?} vs {gb:?}")));
    }
    let class_at = |p: &ProfileFile, e: f64| {
        p.profiles
            .iter()
            .find(|x| x.eps == e)
            .map(|x| x.growth_class.clone())
            .expect("eps from the same grid")
    };
    let per_eps: Vec<EpsComparison> = ga
        .iter()
        .map(|&eps| {
            let (class_a, class_b) = (class_at(a, eps), class_at(b, eps));
            EpsComparison {
                eps,
                same: class_a == class_b,
                class_a,
                class_b,
            }
        })
        .collect();
    let verdict_a = discreteness_verdict(&a.profiles).verdict;
    let verdict_b = discreteness_verdict(&b.profiles).verdict;
    let label = |p: &ProfileFile| format!("{} / {}", p.config.system.label(), p.config.metric.label());
    Ok(Comparison {
        label_a: label(a),
        label_b: label(b),
        differences: per_eps.iter().filter(|c| !c.same).count() + usize::from(verdict_a != verdict_b),
        per_eps,
        verdicts_equal: verdict_a == verdict_b,
        verdict_a,
        verdict_b,
    })
}

pub fn compare(dir_a: &Path, dir_b: &Path) -> Result<Comparison> {
    compare_bundles(&load_bundle(dir_a)?, &load_bundle(dir_b)?)
}

impl Comparison {
    /// Plain-text comparison table.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "A: {}", self.label_a);
        let _ = writeln!(s, "B: {}", self.label_b);
        let _ = writeln!(s, "{:>8}  {:<18}  {:<18}  same", "eps", "class A", "class B");
        for c in &self.per_eps {
            let _ = writeln!(
                s,
                "{:>8}  {:<18}  {:<18}  {}",
                c.eps,
                c.class_a.to_string(),
                c.class_b.to_string(),
                if c.same { "yes" } else { "no" }
            );
        }
        let _ = writeln!(s, "verdict A: {:?}", self.verdict_a);
        let _ = writeln!(s, "verdict B: {:?}", self.verdict_b);
        let _ = writeln!(s, "differences: {}", self.differences);
        s
    }
}
