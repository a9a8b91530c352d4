//! Independent oracles shared by the oracle suites and the acceptance run.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use scalent::entropy::cover::below;
use scalent::semimetric::DistanceMatrix;

/// Minimum cost over all basic feasible solutions. A basis is a set of
/// `a + b - 1` cells forming a spanning tree of the bipartite graph; its
/// flows follow by peeling leaves.
pub fn vertex_oracle(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (a, b) = (supply.len(), demand.len());
    let cells = a * b;
    let basis = a + b - 1;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << cells) {
        if mask.count_ones() as usize != basis {
            continue;
        }
        let mut rs = supply.to_vec();
        let mut cs = demand.to_vec();
        let mut open: Vec<(usize, usize)> = (0..cells)
            .filter(|c| mask & (1 << c) != 0)
            .map(|c| (c / b, c % b))
            .collect();
        let mut row_done = vec![false; a];
        let mut col_done = vec![false; b];
        let mut total = 0.0;
        let mut ok = true;
        while !open.is_empty() {
            // a row or column with a single open cell fixes that cell's flow
            let leaf = (0..a)
                .filter(|&i| !row_done[i])
                .find_map(|i| {
                    let hits: Vec<usize> = (0..open.len()).filter(|&k| open[k].0 == i).collect();
                    (hits.len() == 1).then(|| (hits[0], true))
                })
                .or_else(|| {
                    (0..b).filter(|&j| !col_done[j]).find_map(|j| {
                        let hits: Vec<usize> = (0..open.len()).filter(|&k| open[k].1 == j).collect();
                        (hits.len() == 1).then(|| (hits[0], false))
                    })
                });
            let Some((k, by_row)) = leaf else {
                ok = false;
                break;
            };
            let (i, j) = open.swap_remove(k);
            let f = if by_row { rs[i] } else { cs[j] };
            if f < -1e-12 {
                ok = false;
                break;
            }
            rs[i] -= f;
            cs[j] -= f;
            if by_row {
                row_done[i] = true;
            } else {
                col_done[j] = true;
            }
            total += f * cost[i][j];
        }
        if ok && rs.iter().chain(&cs).all(|r| r.abs() < 1e-9) {
            best = best.min(total);
        }
    }
    best
}

pub fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / s).collect();
    // put the rounding remainder on the last weight
    let head: f64 = w[..n - 1].iter().sum();
    w[n - 1] = 1.0 - head;
    w
}

/// Least number of diameter-`< eps` subsets covering at least `target`
/// points. Subsets of sample points are cliques of the graph `d < eps`.
pub fn exact_k(d: &DistanceMatrix, eps: f64, target: usize) -> usize {
    let m = d.size();
    let full = 1usize << m;
    let mut clique = vec![false; full];
    clique[0] = true;
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        clique[mask] = clique[rest] && (0..m).filter(|&j| rest & (1 << j) != 0).all(|j| below(d.get(low, j), eps));
    }
    // fewest cliques whose union is exactly `mask`
    let mut cover = vec![usize::MAX; full];
    cover[0] = 0;
    for mask in 1..full {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut sub = rest;
        loop {
            let part = sub | low;
            if clique[part] {
                let prev = cover[mask ^ part];
                if prev != usize::MAX {
                    cover[mask] = cover[mask].min(prev + 1);
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    (0..full)
        .filter(|mask| mask.count_ones() as usize >= target)
        .map(|mask| cover[mask])
        .min()
        .unwrap()
        .max(1)
}

pub fn random_config(rng: &mut ChaCha8Rng) -> DistanceMatrix {
    let m = rng.gen_range(2..=12);
    match rng.gen_range(0..3) {
        0 => {
            let xs: Vec<f64> = (0..m).map(|_| rng.gen()).collect();
            DistanceMatrix::from_fn(m, |i, j| (xs[i] - xs[j]).abs()).unwrap()
        }
        1 => {
            let ps: Vec<(f64, f64)> = (0..m).map(|_| (rng.gen(), rng.gen())).collect();
            DistanceMatrix::from_fn(m, |i, j| (ps[i].0 - ps[j].0).hypot(ps[i].1 - ps[j].1)).unwrap()
        }
        _ => {
            // a few tight clusters on the circle
            let centres: Vec<f64> = (0..3).map(|_| rng.gen()).collect();
            let xs: Vec<f64> = (0..m)
                .map(|_| (centres[rng.gen_range(0..3)] + rng.gen_range(0.0..0.05)).fract())
                .collect();
            DistanceMatrix::from_fn(m, |i, j| {
                let t = (xs[i] - xs[j]).abs();
                t.min(1.0 - t)
            })
            .unwrap()
        }
    }
}
