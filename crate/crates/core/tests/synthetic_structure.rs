//! Correlation structure of the synthetic generator, checked by direct
//! enumeration: the mean pairwise raw Pearson within a cluster must exceed
//! the mean across clusters.

use idiorec_core::dataset::generate_synthetic_labeled;
use idiorec_core::similarity::{pearson_amended, SimilarityParams};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn clusters_induce_higher_within_cluster_correlation() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (dataset, labels) =
        generate_synthetic_labeled(500, 200, 5, 0.25, 0.2, &mut rng).unwrap();
    // raw coefficient: penalty 1 never scales, defaults contribute 0
    let raw = SimilarityParams {
        overlap_penalty: 1,
        ..Default::default()
    };
    let users = dataset.users();
    let mut within = (0.0, 0usize);
    let mut across = (0.0, 0usize);
    for i in 0..users.len() {
        for j in (i + 1)..users.len() {
            let r = pearson_amended(&users[i], &users[j], &raw).unwrap();
            let bucket = if labels[i] == labels[j] {
                &mut within
            } else {
                &mut across
            };
            bucket.0 += r;
            bucket.1 += 1;
        }
    }
    let within_mean = within.0 / within.1 as f64;
    let across_mean = across.0 / across.1 as f64;
    assert!(within.1 > 10_000 && across.1 > 10_000);
    assert!(
        within_mean > across_mean,
        "within-cluster mean {within_mean:.4} (n={}) should exceed cross-cluster mean {across_mean:.4} (n={})",
        within.1,
        across.1
    );
    // the gap should be structural, not marginal
    assert!(within_mean - across_mean > 0.1);
}
