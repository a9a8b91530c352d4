//! Measure-preserving systems with exact samplers for their invariant measures.
//!
//! Torus systems act on coordinates in `[0,1)^d` and reduce modulo one after
//! every single application. Shift systems act on finite words: a sampled
//! point carries a fixed number of symbols (its horizon) and iterating the
//! shift only moves an offset, failing once the word is exhausted.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Golden-mean rotation number.
pub const GOLDEN_ALPHA: f64 = 0.618_033_988_749_894_8;
/// Second default frequency for the torus translation.
pub const SILVER_BETA: f64 = std::f64::consts::SQRT_2 - 1.0;

const WEIGHT_SUM_TOL: f64 = 1e-12;

fn default_alpha() -> f64 {
    GOLDEN_ALPHA
}

fn default_beta() -> f64 {
    SILVER_BETA
}

/// A measure-preserving transformation together with its invariant measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SystemSpec {
    /// `x -> x + alpha mod 1` on the circle with Lebesgue measure.
    CircleRotation {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    /// `(x, y) -> (x + alpha, y + beta) mod 1` on the two-torus.
    TorusTranslation {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_beta")]
        beta: f64,
    },
    /// Anzai skew product `(x, y) -> (x + alpha, y + x) mod 1`.
    AnzaiSkew {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    /// One-sided shift on `{0, .., q-1}^N` with product measure; `q = weights.len()`.
    BernoulliShift { weights: Vec<f64> },
    /// The identity map on `[0,1)` with Lebesgue measure.
    Identity,
}

impl SystemSpec {
    pub fn rotation() -> Self {
        SystemSpec::CircleRotation { alpha: GOLDEN_ALPHA }
    }

    pub fn torus() -> Self {
        SystemSpec::TorusTranslation {
            alpha: GOLDEN_ALPHA,
            beta: SILVER_BETA,
        }
    }

    pub fn anzai() -> Self {
        SystemSpec::AnzaiSkew { alpha: GOLDEN_ALPHA }
    }

    pub fn fair_coin() -> Self {
        SystemSpec::BernoulliShift {
            weights: vec![0.5, 0.5],
        }
    }

    /// Short lowercase label used in CSV output.
    pub fn label(&self) -> String {
        match self {
            SystemSpec::CircleRotation { alpha } => format!("rotation({alpha})"),
            SystemSpec::TorusTranslation { alpha, beta } => format!("torus({alpha};{beta})"),
            SystemSpec::AnzaiSkew { alpha } => format!("anzai({alpha})"),
            SystemSpec::BernoulliShift { weights } => {
                let w: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
                format!("bernoulli({})", w.join(";"))
            }
            SystemSpec::Identity => "identity".to_string(),
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, SystemSpec::BernoulliShift { .. })
    }

    /// Coordinate dimension for torus systems, `None` for shifts.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            SystemSpec::CircleRotation { .. } | SystemSpec::Identity => Some(1),
            SystemSpec::TorusTranslation { .. } | SystemSpec::AnzaiSkew { .. } => Some(2),
            SystemSpec::BernoulliShift { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_freq = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must be finite, got {v}")))
            }
        };
        match self {
            SystemSpec::CircleRotation { alpha } | SystemSpec::AnzaiSkew { alpha } => {
                check_freq("alpha", *alpha)
            }
            SystemSpec::TorusTranslation { alpha, beta } => {
                check_freq("alpha", *alpha)?;
                check_freq("beta", *beta)
            }
            SystemSpec::BernoulliShift { weights } => {
                if weights.is_empty() || weights.len() > 256 {
                    return Err(Error::Parameter(format!(
                        "alphabet size must be in 1..=256, got {}",
                        weights.len()
                    )));
                }
                if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                    return Err(Error::Parameter(format!("weights must be positive, got {w}")));
                }
                let sum: f64 = weights.iter().sum();
                if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(Error::Parameter(format!("weights sum to {sum}, expected 1")));
                }
                Ok(())
            }
            SystemSpec::Identity => Ok(()),
        }
    }

    /// One application of the transformation.
    pub fn step(&self, p: &Point) -> Result<Point> {
        match (self, p) {
            (SystemSpec::Identity, Point::Interval(_)) => Ok(p.clone()),
            (SystemSpec::CircleRotation { alpha }, Point::Interval(x)) => {
                Ok(Point::Interval(add_mod1(*x, frac(*alpha))))
            }
            (SystemSpec::TorusTranslation { alpha, beta }, Point::Torus(x, y)) => Ok(Point::Torus(
                add_mod1(*x, frac(*alpha)),
                add_mod1(*y, frac(*beta)),
            )),
            (SystemSpec::AnzaiSkew { alpha }, Point::Torus(x, y)) => {
                Ok(Point::Torus(add_mod1(*x, frac(*alpha)), add_mod1(*y, *x)))
            }
            (SystemSpec::BernoulliShift { .. }, Point::Symbols(w)) => w.shifted(1).map(Point::Symbols),
            (s, p) => Err(Error::PointType(format!(
                "{} cannot act on a {} point",
                s.label(),
                p.kind_name()
            ))),
        }
    }

    /// Draws one point from the invariant measure.
    fn draw<R: Rng>(&self, rng: &mut R, horizon: usize) -> Point {
        match self {
            SystemSpec::CircleRotation { .. } | SystemSpec::Identity => Point::Interval(rng.gen()),
            SystemSpec::TorusTranslation { .. } | SystemSpec::AnzaiSkew { .. } => {
                let x = rng.gen();
                let y = rng.gen();
                Point::Torus(x, y)
            }
            SystemSpec::BernoulliShift { weights } => {
                let dist = WeightedIndex::new(weights).expect("validated weights");
                let symbols: Vec<u8> = (0..horizon).map(|_| dist.sample(rng) as u8).collect();
                Point::Symbols(Word::new(symbols))
            }
        }
    }
}

/// Fractional part in `[0,1)`.
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// `x + a mod 1` for `x, a` in `[0,1)`.
#[inline]
fn add_mod1(x: f64, a: f64) -> f64 {
    let s = x + a;
    if s >= 1.0 {
        s - 1.0
    } else {
        s
    }
}

/// A finite word over `{0, .., q-1}` seen from an offset.
///
/// Clones share the underlying symbols; shifting only moves the offset.
#[derive(Debug, Clone)]
pub struct Word {
    symbols: Arc<[u8]>,
    offset: usize,
}

impl Word {
    pub fn new(symbols: Vec<u8>) -> Self {
        Word {
            symbols: symbols.into(),
            offset: 0,
        }
    }

    /// Number of symbols still visible.
    pub fn len(&self) -> usize {
        self.symbols.len() - self.offset
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.symbols[self.offset..]
    }

    pub fn symbol(&self, i: usize) -> Result<u8> {
        self.as_slice().get(i).copied().ok_or(Error::Horizon {
            needed: i + 1,
            available: self.len(),
        })
    }

    /// The first `len` visible symbols.
    pub fn prefix(&self, len: usize) -> Result<&[u8]> {
        self.as_slice().get(..len).ok_or(Error::Horizon {
            needed: len,
            available: self.len(),
        })
    }

    pub fn shifted(&self, k: usize) -> Result<Word> {
        if k >= self.len() && k > 0 {
            return Err(Error::Horizon {
                needed: k + 1,
                available: self.len(),
            });
        }
        Ok(Word {
            symbols: Arc::clone(&self.symbols),
            offset: self.offset + k,
        })
    }
}

impl PartialEq for Word {
    fn eq(&self, other: &Self) -> bool {
        self.as_slice() == other.as_slice()
    }
}

/// A point of one of the supported phase spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Interval(f64),
    Torus(f64, f64),
    Symbols(Word),
}

impl Point {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Point::Interval(_) => "interval",
            Point::Torus(..) => "torus",
            Point::Symbols(_) => "symbolic",
        }
    }

    /// First coordinate of a torus point.
    pub fn first_coord(&self) -> Option<f64> {
        match self {
            Point::Interval(x) | Point::Torus(x, _) => Some(*x),
            Point::Symbols(_) => None,
        }
    }

    /// Total order used to evaluate semimetrics on a canonical (sorted) pair.
    pub fn canonical_cmp(&self, other: &Point) -> Ordering {
        match (self, other) {
            (Point::Interval(a), Point::Interval(b)) => a.total_cmp(b),
            (Point::Torus(a, b), Point::Torus(c, d)) => a.total_cmp(c).then(b.total_cmp(d)),
            (Point::Symbols(u), Point::Symbols(v)) => u.as_slice().cmp(v.as_slice()),
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Point::Interval(_) => 0,
            Point::Torus(..) => 1,
            Point::Symbols(_) => 2,
        }
    }
}

/// `k`-fold application of `system` to `p`, reducing after every step.
pub fn apply(system: &SystemSpec, p: &Point, k: usize) -> Result<Point> {
    if let (SystemSpec::BernoulliShift { .. }, Point::Symbols(w)) = (system, p) {
        return w.shifted(k).map(Point::Symbols);
    }
    let mut q = p.clone();
    for _ in 0..k {
        q = system.step(&q)?;
    }
    Ok(q)
}

/// Mixes a base seed with a stream index (splitmix64 finalizer, applied twice).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(base) ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub(crate) fn rng_for(base: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, stream))
}

/// An i.i.d. sample from the invariant measure of a system.
#[derive(Debug, Clone)]
pub struct PointSample {
    pub system: SystemSpec,
    pub seed: u64,
    /// Symbols carried by each symbolic point (0 for torus systems).
    pub horizon: usize,
    pub points: Vec<Point>,
}

impl PointSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Draws `m` independent points; point `i` uses its own RNG stream derived
/// from `(seed, i)`, so a sample is reproducible and its points do not depend
/// on `m` or on `horizon` beyond truncation.
pub fn sample_points(system: &SystemSpec, m: usize, seed: u64, horizon: usize) -> Result<PointSample> {
    system.validate()?;
    if m == 0 {
        return Err(Error::Precondition("sample size must be at least 1".into()));
    }
    let horizon = if system.is_symbolic() {
        if horizon == 0 {
            return Err(Error::Parameter("symbolic sampling needs a positive horizon".into()));
        }
        horizon
    } else {
        0
    };
    let points = (0..m)
        .map(|i| system.draw(&mut rng_for(seed, i as u64), horizon))
        .collect();
    Ok(PointSample {
        system: system.clone(),
        seed,
        horizon,
        points,
    })
}
