//! Exact transport against vertex enumeration of the transportation polytope,
//! and metric axioms of the transport distance.

mod common;

use common::{random_weights, vertex_oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scalent::entropy::{kantorovich_distance, AtomicMeasure};
use scalent::semimetric::DistanceMatrix;

#[test]
fn transport_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let a = rng.gen_range(1..=4);
        let b = rng.gen_range(1..=4);
        let pts: Vec<(f64, f64)> = (0..a + b).map(|_| (rng.gen(), rng.gen())).collect();
        let d = DistanceMatrix::from_fn(a + b, |i, j| {
            let (p, q) = (pts[i], pts[j]);
            (p.0 - q.0).hypot(p.1 - q.1)
        })
        .unwrap();
        let wa = random_weights(&mut rng, a);
        let wb = random_weights(&mut rng, b);
        let mu = AtomicMeasure::new((0..a).collect(), wa.clone()).unwrap();
        let nu = AtomicMeasure::new((a..a + b).collect(), wb.clone()).unwrap();
        let cost: Vec<Vec<f64>> = (0..a).map(|i| (0..b).map(|j| d.get(i, a + j)).collect()).collect();
        let got = kantorovich_distance(&mu, &nu, &d).unwrap();
        let want = vertex_oracle(&wa, &wb, &cost);
        worst = worst.max((got - want).abs());
        assert!((got - want).abs() <= 1e-9, "{a}x{b}: solver {got} oracle {want}");
    }
    println!("max |solver - oracle| = {worst:e}");
}

#[test]
fn transport_is_a_metric_on_atomic_measures() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let space = 24;
    for _ in 0..100 {
        let pts: Vec<f64> = (0..space).map(|_| rng.gen()).collect();
        let d = DistanceMatrix::from_fn(space, |i, j| (pts[i] - pts[j]).abs()).unwrap();
        let measure = |rng: &mut ChaCha8Rng| {
            let k = rng.gen_range(1..=16);
            let atoms: Vec<usize> = rand::seq::index::sample(rng, space, k).into_vec();
            AtomicMeasure::new(atoms, random_weights(rng, k)).unwrap()
        };
        let (x, y, z) = (measure(&mut rng), measure(&mut rng), measure(&mut rng));
        let k = |p: &AtomicMeasure, q: &AtomicMeasure| kantorovich_distance(p, q, &d).unwrap();
        assert!(k(&x, &x).abs() <= 1e-9);
        assert!((k(&x, &y) - k(&y, &x)).abs() <= 1e-9);
        assert!(k(&x, &z) <= k(&x, &y) + k(&y, &z) + 1e-9);
        assert!(k(&x, &y) >= -1e-12);
    }
}
