//! Covering estimator against the exact minimal cover on small samples.

mod common;

use common::{exact_k, random_config};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scalent::entropy::cover::cover_target;
use scalent::entropy::eps_entropy_cover;
use scalent::semimetric::DistanceMatrix;

#[test]
fn covering_bracket_contains_exact_cover() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..100 {
        let d = random_config(&mut rng);
        let eps = rng.gen_range(0.05..0.6);
        let est = eps_entropy_cover(&d, eps).unwrap();
        let k = exact_k(&d, eps, cover_target(d.size(), eps));
        let exact_bits = (k as f64).log2();
        assert!(
            est.lower_bound_bits <= exact_bits + 1e-12 && exact_bits <= est.value_bits + 1e-12,
            "case {case}: m={} eps={eps}: {} <= {exact_bits} <= {}",
            d.size(),
            est.lower_bound_bits,
            est.value_bits
        );
    }
}

#[test]
fn oracle_on_a_hand_computed_case() {
    // ten points 0.1 apart; four consecutive points have diameter 0.3 < 0.35
    let d = DistanceMatrix::from_fn(10, |i, j| (i as f64 - j as f64).abs() / 10.0).unwrap();
    assert_eq!(cover_target(10, 0.35), 7);
    assert_eq!(exact_k(&d, 0.35, 7), 2);
    assert_eq!(exact_k(&d, 0.35, 10), 3);
}
