//! Exact optimal transport between finitely supported measures.
//!
//! The transportation problem is solved by successive shortest paths on the
//! complete bipartite graph: Dijkstra with node potentials finds a cheapest
//! augmenting path from any source with remaining supply to any sink with
//! remaining demand, and flow is pushed until one side is exhausted. Forward
//! arcs are uncapacitated; only the reverse arcs of positive flows carry
//! capacity.

use serde::{Deserialize, Serialize};

use crate::dynsys::Point;
use crate::error::{Error, Result};
use crate::semimetric::{DistanceMatrix, Semimetric};

/// Largest combined support accepted by [`kantorovich_distance`].
pub const MAX_SUPPORT: usize = 4096;

const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Residual mass below this is treated as exhausted.
const MASS_EPS: f64 = 1e-15;

/// A finitely supported probability measure on indexed atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<usize>,
    weights: Vec<f64>,
}

impl AtomicMeasure {
    /// Sorts atoms and merges duplicates; weights must be positive and sum to 1.
    pub fn new(atoms: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::Parameter("atoms and weights differ in length".into()));
        }
        if atoms.is_empty() {
            return Err(Error::Parameter("atomic measure needs at least one atom".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Parameter(format!("atom weight {w} is not positive")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Parameter(format!("atom weights sum to {sum}")));
        }
        let mut pairs: Vec<(usize, f64)> = atoms.into_iter().zip(weights).collect();
        pairs.sort_by_key(|p| p.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (a, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == a => last.1 += w,
                _ => merged.push((a, w)),
            }
        }
        let (atoms, weights) = merged.into_iter().unzip();
        Ok(AtomicMeasure { atoms, weights })
    }

    pub fn uniform(atoms: &[usize]) -> Result<Self> {
        let w = 1.0 / atoms.len().max(1) as f64;
        AtomicMeasure::new(atoms.to_vec(), vec![w; atoms.len()])
    }

    pub fn dirac(atom: usize) -> Self {
        AtomicMeasure {
            atoms: vec![atom],
            weights: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[usize] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Ground cost between atom indices.
pub trait GroundCost {
    fn cost(&self, i: usize, j: usize) -> Result<f64>;
}

impl GroundCost for DistanceMatrix {
    fn cost(&self, i: usize, j: usize) -> Result<f64> {
        if i >= self.size() || j >= self.size() {
            return Err(Error::Size(format!("atom index out of range for a {}-point matrix", self.size())));
        }
        Ok(self.get(i, j))
    }
}

/// A semimetric evaluated on an explicit point list.
pub struct PointCost<'a> {
    pub metric: &'a Semimetric,
    pub points: &'a [Point],
}

impl GroundCost for PointCost<'_> {
    fn cost(&self, i: usize, j: usize) -> Result<f64> {
        match (self.points.get(i), self.points.get(j)) {
            (Some(x), Some(y)) => self.metric.eval(x, y),
            _ => Err(Error::Size("atom index out of range".into())),
        }
    }
}

/// An optimal coupling: `(source position, sink position, mass)` triples.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub cost: f64,
    pub flows: Vec<(usize, usize, f64)>,
}

/// Kantorovich distance: minimal expected ground cost over couplings.
pub fn kantorovich_distance<G: GroundCost + ?Sized>(
    a: &AtomicMeasure,
    b: &AtomicMeasure,
    ground: &G,
) -> Result<f64> {
    Ok(optimal_plan(a, b, ground)?.cost)
}

pub fn optimal_plan<G: GroundCost + ?Sized>(a: &AtomicMeasure, b: &AtomicMeasure, ground: &G) -> Result<TransportPlan> {
    let (ns, nt) = (a.len(), b.len());
    if ns + nt > MAX_SUPPORT {
        return Err(Error::Size(format!(
            "combined support {} exceeds {MAX_SUPPORT} atoms",
            ns + nt
        )));
    }
    let mut cost = vec![0.0; ns * nt];
    for (s, &x) in a.atoms().iter().enumerate() {
        for (t, &y) in b.atoms().iter().enumerate() {
            let c = ground.cost(x, y)?;
            if !c.is_finite() || c < 0.0 {
                return Err(Error::Data(format!("ground cost {c} between atoms {x} and {y}")));
            }
            cost[s * nt + t] = c;
        }
    }
    solve_transport(a.weights(), b.weights(), &cost)
}

/// Successive shortest paths on a dense `ns x nt` transportation instance.
pub(crate) fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportPlan> {
    let (ns, nt) = (supply.len(), demand.len());
    let nodes = ns + nt;
    let mut supply = supply.to_vec();
    let mut demand = demand.to_vec();
    let mut flow = vec![0.0; ns * nt];
    // potentials, reduced cost of s->t is cost + pot[s] - pot[ns + t]
    let mut pot = vec![0.0; nodes];
    let mut dist = vec![f64::INFINITY; nodes];
    let mut parent = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];

    let max_rounds = 4 * nodes * nodes + 16;
    for _ in 0..max_rounds {
        if supply.iter().all(|&s| s <= MASS_EPS) || demand.iter().all(|&d| d <= MASS_EPS) {
            let total = flow.iter().zip(cost).map(|(f, c)| f * c).sum();
            let flows = (0..ns * nt)
                .filter(|&e| flow[e] > 0.0)
                .map(|e| (e / nt, e % nt, flow[e]))
                .collect();
            return Ok(TransportPlan { cost: total, flows });
        }

        dist.fill(f64::INFINITY);
        parent.fill(usize::MAX);
        done.fill(false);
        for s in 0..ns {
            if supply[s] > MASS_EPS {
                dist[s] = 0.0;
            }
        }
        let mut target = None;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u >= ns && demand[u - ns] > MASS_EPS {
                target = Some(u);
                break;
            }
            if u < ns {
                for t in 0..nt {
                    let v = ns + t;
                    if done[v] {
                        continue;
                    }
                    let r = (cost[u * nt + t] + pot[u] - pot[v]).max(0.0);
                    if dist[u] + r < dist[v] {
                        dist[v] = dist[u] + r;
                        parent[v] = u;
                    }
                }
            } else {
                let t = u - ns;
                for s in 0..ns {
                    if done[s] || flow[s * nt + t] <= 0.0 {
                        continue;
                    }
                    let r = (-cost[s * nt + t] + pot[u] - pot[s]).max(0.0);
                    if dist[u] + r < dist[s] {
                        dist[s] = dist[u] + r;
                        parent[s] = u;
                    }
                }
            }
        }
        let Some(target) = target else {
            return Err(Error::Infeasible("no augmenting path with remaining demand".into()));
        };
        let reach = dist[target];
        for v in 0..nodes {
            pot[v] += dist[v].min(reach);
        }

        // bottleneck along the path
        let mut push = demand[target - ns];
        let mut v = target;
        while parent[v] != usize::MAX {
            let u = parent[v];
            if u >= ns {
                // reverse arc sink u -> source v cancels flow on (v, u)
                push = push.min(flow[v * nt + (u - ns)]);
            }
            v = u;
        }
        push = push.min(supply[v]);
        let root = v;

        let mut v = target;
        while parent[v] != usize::MAX {
            let u = parent[v];
            if u < ns {
                flow[u * nt + (v - ns)] += push;
            } else {
                let e = v * nt + (u - ns);
                flow[e] -= push;
                if flow[e] <= MASS_EPS {
                    flow[e] = 0.0;
                }
            }
            v = u;
        }
        supply[root] -= push;
        if supply[root] <= MASS_EPS {
            supply[root] = 0.0;
        }
        demand[target - ns] -= push;
        if demand[target - ns] <= MASS_EPS {
            demand[target - ns] = 0.0;
        }
    }
    Err(Error::Infeasible("transport solver did not terminate".into()))
}
