//! Semimetrics on the supported phase spaces and the dynamical operations on
//! them: pull-back along the map, cut-off at a level, orbit averaging.
//!
//! A [`Semimetric`] is a descriptor tree. Evaluation is a pure function of the
//! descriptor and the two points; every public evaluation first sorts the pair
//! with [`Point::canonical_cmp`], so symmetry holds bit-for-bit.

mod checks;
mod matrix;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dynsys::{apply, Point, SystemSpec};
use crate::error::{Error, Result};

pub use checks::{check_axioms, empirical_l1, mnorm_bounds, AxiomReport, MnormBounds, UpperBoundKind};
pub use matrix::{averaged_distance_matrices, distance_matrix, DistanceMatrix};

/// A finite measurable partition, used for block (cut) semimetrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Partition {
    /// One block: the block semimetric vanishes identically.
    Trivial,
    /// Cylinders fixed by the first `length` symbols.
    Cylinder { length: usize },
    /// `2^level` equal intervals of the first coordinate.
    Dyadic { level: u32 },
}

impl Partition {
    pub fn block_count(&self, alphabet: usize) -> usize {
        match self {
            Partition::Trivial => 1,
            Partition::Cylinder { length } => alphabet.saturating_pow(*length as u32),
            Partition::Dyadic { level } => 1usize << level,
        }
    }

    fn same_block(&self, a: &Point, b: &Point) -> Result<bool> {
        match self {
            Partition::Trivial => Ok(true),
            Partition::Cylinder { length } => {
                let (u, v) = words(a, b)?;
                Ok(u.prefix(*length)? == v.prefix(*length)?)
            }
            Partition::Dyadic { level } => {
                let scale = (1u64 << level) as f64;
                let (x, y) = first_coords(a, b)?;
                Ok((x * scale).floor() == (y * scale).floor())
            }
        }
    }

    fn horizon(&self) -> usize {
        match self {
            Partition::Cylinder { length } => *length,
            _ => 0,
        }
    }
}

/// Named semimetrics with no further structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClosedForm {
    /// Identically zero.
    Zero,
    /// 1 for distinct points.
    Discrete,
    /// `|x - y|^2` on the first coordinate; not a semimetric, kept as a
    /// negative control for the axiom checks.
    SquaredGap,
    /// `|x - y| + |x^2 - y^2|` on the first coordinate.
    GapPlusSquareGap,
    /// Euclidean distance of the coordinate vectors in the unit cube.
    PlaneEuclidean,
}

impl ClosedForm {
    fn eval(self, a: &Point, b: &Point) -> Result<f64> {
        match self {
            ClosedForm::Zero => Ok(0.0),
            ClosedForm::Discrete => Ok(if a == b { 0.0 } else { 1.0 }),
            ClosedForm::SquaredGap => {
                let (x, y) = first_coords(a, b)?;
                Ok((x - y) * (x - y))
            }
            ClosedForm::GapPlusSquareGap => {
                let (x, y) = first_coords(a, b)?;
                Ok((x - y).abs() + (x * x - y * y).abs())
            }
            ClosedForm::PlaneEuclidean => match (a, b) {
                (Point::Interval(x), Point::Interval(y)) => Ok((x - y).abs()),
                (Point::Torus(x1, y1), Point::Torus(x2, y2)) => Ok((x1 - x2).hypot(y1 - y2)),
                _ => Err(type_error("PlaneEuclidean", a)),
            },
        }
    }

    fn needs_coords(self) -> bool {
        !matches!(self, ClosedForm::Zero | ClosedForm::Discrete)
    }
}

/// One term of a nonnegative combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub weight: f64,
    pub metric: Semimetric,
}

/// Semimetric descriptor tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Semimetric {
    /// `|x - y|` on the first coordinate.
    Euclidean1D,
    /// Arc length on the circle; on the two-torus the max over coordinates.
    CircleArc,
    /// 1 when the first symbols differ.
    FirstSymbolCut,
    Block { partition: Partition },
    Cutoff { inner: Box<Semimetric>, level: f64 },
    PullBack { inner: Box<Semimetric>, system: SystemSpec, steps: usize },
    Average { inner: Box<Semimetric>, system: SystemSpec, n: usize },
    ClosedForm { form: ClosedForm },
    /// `sum_i w_i * rho_i` with `w_i >= 0`.
    Combination { terms: Vec<WeightedTerm> },
}

/// The semimetrics offered by name to configs and presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandardMetric {
    Euclidean1D,
    CircleArc,
    FirstSymbolCut,
    /// Cylinder partition on two symbols.
    TwoSymbolBlock,
    Discrete,
    Zero,
    GapPlusSquareGap,
    PlaneEuclidean,
}

/// Builds a standard semimetric and checks it applies to the system's points.
pub fn make_standard(tag: StandardMetric, system: &SystemSpec) -> Result<Semimetric> {
    let metric = match tag {
        StandardMetric::Euclidean1D => Semimetric::Euclidean1D,
        StandardMetric::CircleArc => Semimetric::CircleArc,
        StandardMetric::FirstSymbolCut => Semimetric::FirstSymbolCut,
        StandardMetric::TwoSymbolBlock => Semimetric::Block {
            partition: Partition::Cylinder { length: 2 },
        },
        StandardMetric::Discrete => Semimetric::ClosedForm { form: ClosedForm::Discrete },
        StandardMetric::Zero => Semimetric::ClosedForm { form: ClosedForm::Zero },
        StandardMetric::GapPlusSquareGap => Semimetric::ClosedForm {
            form: ClosedForm::GapPlusSquareGap,
        },
        StandardMetric::PlaneEuclidean => Semimetric::ClosedForm {
            form: ClosedForm::PlaneEuclidean,
        },
    };
    metric.check_compatible(system)?;
    Ok(metric)
}

/// `(x, y) -> rho(T^k x, T^k y)`.
pub fn pull_back(rho: &Semimetric, system: &SystemSpec, k: usize) -> Semimetric {
    if k == 0 {
        return rho.clone();
    }
    Semimetric::PullBack {
        inner: Box::new(rho.clone()),
        system: system.clone(),
        steps: k,
    }
}

/// Orbit average `(1/n) sum_{k<n} rho(T^k x, T^k y)`.
pub fn average_metric(rho: &Semimetric, system: &SystemSpec, n: usize) -> Result<Semimetric> {
    if n == 0 {
        return Err(Error::Precondition("averaging length must be at least 1".into()));
    }
    Ok(Semimetric::Average {
        inner: Box::new(rho.clone()),
        system: system.clone(),
        n,
    })
}

/// `min(rho, level)`.
pub fn cutoff(rho: &Semimetric, level: f64) -> Result<Semimetric> {
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::Parameter(format!("cut-off level must be positive and finite, got {level}")));
    }
    Ok(Semimetric::Cutoff {
        inner: Box::new(rho.clone()),
        level,
    })
}

/// `t * a + (1 - t) * b` for `t` in `[0, 1]`.
pub fn convex_mix(a: &Semimetric, b: &Semimetric, t: f64) -> Result<Semimetric> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Parameter(format!("mixing weight must lie in [0,1], got {t}")));
    }
    Ok(Semimetric::Combination {
        terms: vec![
            WeightedTerm { weight: t, metric: a.clone() },
            WeightedTerm { weight: 1.0 - t, metric: b.clone() },
        ],
    })
}

fn type_error(name: &str, p: &Point) -> Error {
    Error::PointType(format!("{name} is not defined on {} points", p.kind_name()))
}

fn first_coords(a: &Point, b: &Point) -> Result<(f64, f64)> {
    match (a.first_coord(), b.first_coord()) {
        (Some(x), Some(y)) => Ok((x, y)),
        _ => Err(Error::PointType("semimetric needs coordinate points".into())),
    }
}

fn words<'a>(a: &'a Point, b: &'a Point) -> Result<(&'a crate::dynsys::Word, &'a crate::dynsys::Word)> {
    match (a, b) {
        (Point::Symbols(u), Point::Symbols(v)) => Ok((u, v)),
        _ => Err(Error::PointType("semimetric needs symbolic points".into())),
    }
}

fn arc(x: f64, y: f64) -> f64 {
    let d = (x - y).abs();
    d.min(1.0 - d)
}

impl Semimetric {
    /// Evaluates on the canonically ordered pair.
    pub fn eval(&self, x: &Point, y: &Point) -> Result<f64> {
        if x.canonical_cmp(y) == Ordering::Greater {
            self.eval_ordered(y, x)
        } else {
            self.eval_ordered(x, y)
        }
    }

    /// Evaluates in the given argument order.
    pub(crate) fn eval_ordered(&self, a: &Point, b: &Point) -> Result<f64> {
        match self {
            Semimetric::Euclidean1D => {
                let (x, y) = first_coords(a, b)?;
                Ok((x - y).abs())
            }
            Semimetric::CircleArc => match (a, b) {
                (Point::Interval(x), Point::Interval(y)) => Ok(arc(*x, *y)),
                (Point::Torus(x1, y1), Point::Torus(x2, y2)) => Ok(arc(*x1, *x2).max(arc(*y1, *y2))),
                _ => Err(type_error("CircleArc", a)),
            },
            Semimetric::FirstSymbolCut => {
                let (u, v) = words(a, b)?;
                Ok(if u.symbol(0)? == v.symbol(0)? { 0.0 } else { 1.0 })
            }
            Semimetric::Block { partition } => Ok(if partition.same_block(a, b)? { 0.0 } else { 1.0 }),
            Semimetric::Cutoff { inner, level } => Ok(inner.eval(a, b)?.min(*level)),
            Semimetric::PullBack { inner, system, steps } => {
                inner.eval(&apply(system, a, *steps)?, &apply(system, b, *steps)?)
            }
            Semimetric::Average { inner, system, n } => {
                let mut pa = a.clone();
                let mut pb = b.clone();
                let mut sum = 0.0;
                for k in 0..*n {
                    if k > 0 {
                        pa = system.step(&pa)?;
                        pb = system.step(&pb)?;
                    }
                    sum += inner.eval(&pa, &pb)?;
                }
                Ok(sum / *n as f64)
            }
            Semimetric::ClosedForm { form } => form.eval(a, b),
            Semimetric::Combination { terms } => {
                let mut sum = 0.0;
                for t in terms {
                    sum += t.weight * t.metric.eval(a, b)?;
                }
                Ok(sum)
            }
        }
    }

    /// Number of symbols a symbolic point must carry for evaluation.
    pub fn horizon(&self) -> usize {
        match self {
            Semimetric::FirstSymbolCut => 1,
            Semimetric::Block { partition } => partition.horizon(),
            Semimetric::Cutoff { inner, .. } => inner.horizon(),
            Semimetric::PullBack { inner, steps, .. } => steps + inner.horizon(),
            Semimetric::Average { inner, n, .. } => n - 1 + inner.horizon(),
            Semimetric::Combination { terms } => terms.iter().map(|t| t.metric.horizon()).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Checks that the descriptor is well formed and defined on the system's points.
    pub fn check_compatible(&self, system: &SystemSpec) -> Result<()> {
        let symbolic = system.is_symbolic();
        let mismatch = |what: &str| {
            Err(Error::PointType(format!("{what} is not defined for {}", system.label())))
        };
        match self {
            Semimetric::Euclidean1D | Semimetric::CircleArc if symbolic => mismatch("coordinate metric"),
            Semimetric::FirstSymbolCut if !symbolic => mismatch("FirstSymbolCut"),
            Semimetric::Block { partition } => match partition {
                Partition::Cylinder { .. } if !symbolic => mismatch("cylinder partition"),
                Partition::Dyadic { .. } if symbolic => mismatch("dyadic partition"),
                _ => Ok(()),
            },
            Semimetric::ClosedForm { form } if form.needs_coords() && symbolic => mismatch("closed form"),
            Semimetric::Cutoff { inner, level } => {
                if !(*level > 0.0 && level.is_finite()) {
                    return Err(Error::Parameter(format!("bad cut-off level {level}")));
                }
                inner.check_compatible(system)
            }
            Semimetric::PullBack { inner, system: s, .. } | Semimetric::Average { inner, system: s, .. } => {
                if let Semimetric::Average { n: 0, .. } = self {
                    return Err(Error::Parameter("averaging length must be at least 1".into()));
                }
                if s != system {
                    return Err(Error::Parameter(format!(
                        "descriptor refers to {} but points come from {}",
                        s.label(),
                        system.label()
                    )));
                }
                inner.check_compatible(system)
            }
            Semimetric::Combination { terms } => {
                if terms.is_empty() {
                    return Err(Error::Parameter("empty combination".into()));
                }
                for t in terms {
                    if !(t.weight >= 0.0 && t.weight.is_finite()) {
                        return Err(Error::Parameter(format!("combination weight {} is negative", t.weight)));
                    }
                    t.metric.check_compatible(system)?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Upper bound on the diameter over the system's phase space.
    pub fn diameter_bound(&self, system: &SystemSpec) -> f64 {
        match self {
            Semimetric::Euclidean1D => 1.0,
            Semimetric::CircleArc => 0.5,
            Semimetric::FirstSymbolCut => 1.0,
            Semimetric::Block { partition } => match partition {
                Partition::Trivial => 0.0,
                _ => 1.0,
            },
            Semimetric::Cutoff { inner, level } => inner.diameter_bound(system).min(*level),
            Semimetric::PullBack { inner, .. } | Semimetric::Average { inner, .. } => inner.diameter_bound(system),
            Semimetric::ClosedForm { form } => match form {
                ClosedForm::Zero => 0.0,
                ClosedForm::Discrete | ClosedForm::SquaredGap => 1.0,
                ClosedForm::GapPlusSquareGap => 2.0,
                ClosedForm::PlaneEuclidean => (system.dimension().unwrap_or(1) as f64).sqrt(),
            },
            Semimetric::Combination { terms } => terms.iter().map(|t| t.weight * t.metric.diameter_bound(system)).sum(),
        }
    }

    /// Compact label for tables.
    pub fn label(&self) -> String {
        match self {
            Semimetric::Euclidean1D => "euclidean1d".into(),
            Semimetric::CircleArc => "circle-arc".into(),
            Semimetric::FirstSymbolCut => "first-symbol-cut".into(),
            Semimetric::Block { partition } => match partition {
                Partition::Trivial => "block(trivial)".into(),
                Partition::Cylinder { length } => format!("block(cylinder{length})"),
                Partition::Dyadic { level } => format!("block(dyadic{level})"),
            },
            Semimetric::Cutoff { inner, level } => format!("cutoff({};{level})", inner.label()),
            Semimetric::PullBack { inner, steps, .. } => format!("pullback({};{steps})", inner.label()),
            Semimetric::Average { inner, n, .. } => format!("average({};{n})", inner.label()),
            Semimetric::ClosedForm { form } => match form {
                ClosedForm::Zero => "zero".into(),
                ClosedForm::Discrete => "discrete".into(),
                ClosedForm::SquaredGap => "squared-gap".into(),
                ClosedForm::GapPlusSquareGap => "gap-plus-square-gap".into(),
                ClosedForm::PlaneEuclidean => "plane-euclidean".into(),
            },
            Semimetric::Combination { terms } => {
                let parts: Vec<String> = terms.iter().map(|t| format!("{}*{}", t.weight, t.metric.label())).collect();
                format!("sum({})", parts.join("+"))
            }
        }
    }
}
