//! k-medoids on a distance matrix: random initial medoids, then eager
//! first-improvement swaps until no single swap lowers the total deviation.
//! Swap gains are evaluated with nearest/second-nearest caches, O(m + k) per
//! candidate.

use rand::seq::index::sample;
use rand::Rng;

use crate::dynsys::rng_for;
use crate::semimetric::DistanceMatrix;

const MAX_PASSES: usize = 200;
const GAIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Medoids {
    /// Point indices of the medoids.
    pub medoids: Vec<usize>,
    /// For each point, its position in `medoids`.
    pub assignment: Vec<usize>,
    /// Sum over points of the distance to the assigned medoid.
    pub loss: f64,
}

impl Medoids {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.medoids.len()];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }
}

struct Near {
    near: usize,
    near_d: f64,
    second_d: f64,
}

fn assign(d: &DistanceMatrix, medoids: &[usize]) -> (Vec<Near>, f64) {
    let mut loss = 0.0;
    let recs = (0..d.size())
        .map(|o| {
            let mut r = Near {
                near: 0,
                near_d: f64::INFINITY,
                second_d: f64::INFINITY,
            };
            for (pos, &med) in medoids.iter().enumerate() {
                let v = d.get(o, med);
                // a medoid is always assigned to itself
                if v < r.near_d || (o == med && v <= r.near_d) {
                    r.second_d = r.near_d;
                    r.near_d = v;
                    r.near = pos;
                } else if v < r.second_d {
                    r.second_d = v;
                }
            }
            loss += r.near_d;
            r
        })
        .collect();
    (recs, loss)
}

/// Best single medoid: the point with least total distance.
fn one_medoid(d: &DistanceMatrix) -> Medoids {
    let m = d.size();
    let (best, loss) = (0..m)
        .map(|i| (i, d.row(i).iter().sum::<f64>()))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    Medoids {
        medoids: vec![best],
        assignment: vec![0; m],
        loss,
    }
}

/// One local search from a random start.
pub fn k_medoids<R: Rng>(d: &DistanceMatrix, k: usize, rng: &mut R) -> Medoids {
    let m = d.size();
    assert!(k >= 1 && k <= m, "k must lie in 1..=m");
    if k == 1 {
        return one_medoid(d);
    }
    if k == m {
        return Medoids {
            medoids: (0..m).collect(),
            assignment: (0..m).collect(),
            loss: 0.0,
        };
    }
    let mut medoids: Vec<usize> = sample(rng, m, k).into_vec();
    let mut is_medoid = vec![false; m];
    for &x in &medoids {
        is_medoid[x] = true;
    }
    let (mut recs, mut loss) = assign(d, &medoids);
    let mut removal = vec![0.0; k];

    let mut since_swap = 0;
    let mut j = 0;
    let mut passes = 0;
    while since_swap < m && passes < MAX_PASSES * m {
        passes += 1;
        let cand = j;
        j = (j + 1) % m;
        since_swap += 1;
        if is_medoid[cand] {
            continue;
        }
        removal.fill(0.0);
        for r in &recs {
            removal[r.near] += r.second_d - r.near_d;
        }
        let mut shared = 0.0;
        for (o, r) in recs.iter().enumerate() {
            let v = d.get(cand, o);
            if v < r.near_d {
                shared += v - r.near_d;
                removal[r.near] += r.near_d - r.second_d;
            } else if v < r.second_d {
                removal[r.near] += v - r.second_d;
            }
        }
        let (out, gain) = removal
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if gain + shared < -GAIN_TOL {
            let mut trial = medoids.clone();
            trial[out] = cand;
            let (r, l) = assign(d, &trial);
            // the cached gain can disagree with a full reassignment by rounding
            if l < loss - GAIN_TOL {
                is_medoid[medoids[out]] = false;
                is_medoid[cand] = true;
                medoids = trial;
                recs = r;
                loss = l;
                since_swap = 0;
            }
        }
    }
    let assignment = recs.iter().map(|r| r.near).collect();
    Medoids {
        medoids,
        assignment,
        loss,
    }
}

/// Best of `restarts` local searches with seeds derived from `(seed, k, restart)`.
pub fn best_of_restarts(d: &DistanceMatrix, k: usize, restarts: usize, seed: u64) -> Medoids {
    let mut best: Option<Medoids> = None;
    for r in 0..restarts.max(1) {
        let mut rng = rng_for(seed, ((k as u64) << 16) | r as u64);
        let run = k_medoids(d, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.loss < b.loss) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}
