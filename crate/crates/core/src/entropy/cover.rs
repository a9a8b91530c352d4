//! Covering estimate of the epsilon-entropy on an empirical measure.
//!
//! Upper side: greedy max-coverage with closed balls of radius at most
//! `eps/2` centred at sample points, stopping once all but the allowed
//! exceptional mass is covered. Lower side: two counting arguments that
//! hold for every admissible cover (see [`lower_bound_k`]).

use crate::error::{Error, Result};
use crate::semimetric::DistanceMatrix;

/// Relative slack on strict inequalities `diam < eps`.
pub const STRICT_SLACK: f64 = 1e-12;

/// `x < eps`, up to the relative rounding slack.
#[inline]
pub fn below(x: f64, eps: f64) -> bool {
    x < eps * (1.0 + STRICT_SLACK)
}

/// Number of sample points a cover must contain: `ceil((1 - eps) m)`.
pub fn cover_target(m: usize, mass_eps: f64) -> usize {
    if mass_eps >= 1.0 {
        return 0;
    }
    let t = ((1.0 - mass_eps) * m as f64 - 1e-9).ceil();
    (t.max(0.0) as usize).min(m)
}

#[derive(Debug, Clone)]
pub struct CoverOutcome {
    /// Point indices of each cluster, in greedy order.
    pub clusters: Vec<Vec<usize>>,
    pub target: usize,
}

impl CoverOutcome {
    /// Number of sets in the cover, at least one by convention.
    pub fn k(&self) -> usize {
        self.clusters.len().max(1)
    }
}

/// Ball radii are tried on the ladder `max(D) * 2^(-j / RADIUS_LADDER_STEPS)`.
pub const RADIUS_LADDER_STEPS: u32 = 32;

/// Greedy max-coverage by closed balls of one radius, centred at sample
/// points: repeatedly take the ball with the most uncovered points (lowest
/// index on ties) until `target` points are covered.
pub fn greedy_cover_at_radius(d: &DistanceMatrix, radius: f64, target: usize) -> Vec<Vec<usize>> {
    greedy_on_balls(&balls(d, radius), target)
}

fn balls(d: &DistanceMatrix, radius: f64) -> Vec<Vec<usize>> {
    let m = d.size();
    (0..m)
        .map(|c| (0..m).filter(|&j| d.get(c, j) <= radius).collect())
        .collect()
}

fn greedy_on_balls(balls: &[Vec<usize>], target: usize) -> Vec<Vec<usize>> {
    let m = balls.len();
    let mut uncovered_in: Vec<usize> = balls.iter().map(Vec::len).collect();
    let mut covered = vec![false; m];
    let mut n_covered = 0;
    let mut clusters = Vec::new();
    while n_covered < target {
        let mut centre = 0;
        for c in 1..m {
            if uncovered_in[c] > uncovered_in[centre] {
                centre = c;
            }
        }
        let cluster: Vec<usize> = balls[centre].iter().copied().filter(|&j| !covered[j]).collect();
        for &j in &cluster {
            covered[j] = true;
            // ball membership is symmetric
            for &c in &balls[j] {
                uncovered_in[c] -= 1;
            }
        }
        n_covered += cluster.len();
        clusters.push(cluster);
    }
    clusters
}

/// Best greedy ball cover over the radius ladder up to `dist_eps/2`.
///
/// The radii tried for a smaller `dist_eps` are a subset of those tried for
/// a larger one and the target only shrinks as `mass_eps` grows, so `k` is
/// non-increasing in both thresholds. A radius is skipped once
/// `target / (largest ball)` shows it cannot beat the best cover so far;
/// ball sizes only shrink further down the ladder.
pub fn greedy_cover(d: &DistanceMatrix, dist_eps: f64, mass_eps: f64) -> Result<CoverOutcome> {
    let m = d.size();
    if m == 0 {
        return Err(Error::Size("empty distance matrix".into()));
    }
    if !(dist_eps > 0.0) || !(mass_eps > 0.0) {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let target = cover_target(m, mass_eps);
    if target == 0 {
        return Ok(CoverOutcome {
            clusters: Vec::new(),
            target,
        });
    }
    let top = d.max_entry();
    if below(top, dist_eps) {
        return Ok(CoverOutcome {
            clusters: vec![(0..m).collect()],
            target,
        });
    }
    let smallest = (0..m)
        .flat_map(|i| d.row(i).iter().copied())
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);

    let mut best: Option<Vec<Vec<usize>>> = None;
    let mut j = 0u32;
    loop {
        let radius = top * 2f64.powf(-f64::from(j) / f64::from(RADIUS_LADDER_STEPS));
        j += 1;
        if radius > dist_eps / 2.0 {
            continue;
        }
        let balls = balls(d, radius);
        let largest = balls.iter().map(Vec::len).max().unwrap_or(1);
        if best.as_ref().is_some_and(|b| target.div_ceil(largest) >= b.len()) {
            break;
        }
        let clusters = greedy_on_balls(&balls, target);
        if best.as_ref().is_none_or(|b| clusters.len() < b.len()) {
            best = Some(clusters);
        }
        // below the smallest positive distance every ball is a duplicate class
        if radius < smallest {
            break;
        }
    }
    Ok(CoverOutcome {
        clusters: best.expect("at least one radius"),
        target,
    })
}

/// Lower bound on the least number of diameter-`< dist_eps` sets covering all
/// but the allowed exceptional points.
///
/// * packing: points pairwise at distance `>= dist_eps` lie in distinct sets,
///   except for those dropped into the exceptional set;
/// * mass: a set containing point `i` lies within distance `< dist_eps` of
///   `i`, so no set holds more than the largest such neighbourhood.
pub fn lower_bound_k(d: &DistanceMatrix, dist_eps: f64, mass_eps: f64) -> usize {
    let m = d.size();
    let target = cover_target(m, mass_eps);
    if m == 0 || target == 0 {
        return 1;
    }
    let allowance = m - target;

    // farthest-first maximal separated set
    let mut nearest = d.row(0).to_vec();
    let mut separated = 1usize;
    loop {
        let (far, gap) = nearest
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, v)| if v > acc.1 { (j, v) } else { acc });
        if below(gap, dist_eps) {
            break;
        }
        separated += 1;
        for (j, v) in nearest.iter_mut().enumerate() {
            *v = v.min(d.get(far, j));
        }
    }
    let packing = separated.saturating_sub(allowance);

    let largest = (0..m)
        .map(|i| d.row(i).iter().filter(|&&v| below(v, dist_eps)).count())
        .max()
        .unwrap_or(1);
    let mass = target.div_ceil(largest);

    packing.max(mass).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_fn(xs.len(), |i, j| (xs[i] - xs[j]).abs()).unwrap()
    }

    #[test]
    fn target_counts() {
        assert_eq!(cover_target(512, 0.25), 384);
        assert_eq!(cover_target(10, 0.1), 9);
        assert_eq!(cover_target(10, 0.15), 9);
        assert_eq!(cover_target(10, 1.0), 0);
    }

    #[test]
    fn evenly_spaced_points() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let d = line(&xs);
        // eps=3.5 in distance, radius 1.75: balls of three consecutive points
        let c = greedy_cover(&d, 3.5, 0.05).unwrap();
        assert_eq!(c.target, 10);
        assert_eq!(c.k(), 4);
        let lb = lower_bound_k(&d, 3.5, 0.05);
        assert!((3..=4).contains(&lb), "{lb}");
    }

    #[test]
    fn exceptional_points_are_dropped() {
        let xs = [0.0, 0.001, 0.002, 5.0];
        let d = line(&xs);
        let c = greedy_cover(&d, 0.1, 0.3).unwrap();
        assert_eq!(c.target, 3);
        assert_eq!(c.k(), 1);
    }

    #[test]
    fn whole_space_one_block() {
        let xs = [0.0, 0.4, 0.9];
        let d = line(&xs);
        let c = greedy_cover(&d, 0.95, 0.01).unwrap();
        assert_eq!(c.k(), 1);
    }

    #[test]
    fn rejects_empty() {
        let d = DistanceMatrix::from_fn(0, |_, _| 0.0).unwrap();
        assert!(matches!(greedy_cover(&d, 0.1, 0.1), Err(Error::Size(_))));
    }
}
