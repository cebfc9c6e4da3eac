//! Blossom matching checked against the exhaustive oracle on small graphs.

mod common;

use common::{brute_force_max_matching, random_connected_graph};
use linktomo::matching::{augment, augmenting_path, max_matching, Matching};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn blossom_equals_brute_force_on_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    for case in 0..50 {
        let g = random_connected_graph(8, &mut rng);
        let m = max_matching(&g);
        m.validate(&g).unwrap();
        assert_eq!(
            m.cardinality(),
            brute_force_max_matching(&g),
            "case {case}: n={} m={}",
            g.vertex_count(),
            g.edge_count()
        );
    }
}

#[test]
fn augmenting_path_exists_iff_submaximum() {
    // Berge's characterization against the oracle: strip pairs off a maximum
    // matching and a path must reappear; at the maximum there is none.
    let mut rng = ChaCha8Rng::seed_from_u64(0xBE49E);
    for case in 0..50 {
        let g = random_connected_graph(8, &mut rng);
        let best = brute_force_max_matching(&g);
        let m = max_matching(&g);
        assert!(augmenting_path(&g, &m, None).is_none(), "case {case}: maximum must certify");

        let mut stripped = m.clone();
        let pairs = stripped.pairs();
        if let Some(&(u, v)) = pairs.first() {
            stripped.unmatch_pair(u, v).unwrap();
            let path = augmenting_path(&g, &stripped, None);
            assert!(
                path.is_some() == (stripped.cardinality() < best),
                "case {case}: path presence disagrees with oracle"
            );
        }
    }
}

#[test]
fn repeated_augmentation_reaches_the_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x90DA);
    for case in 0..50 {
        let g = random_connected_graph(8, &mut rng);
        let mut m = Matching::empty(g.vertex_count());
        let mut steps = 0;
        while let Some(path) = augmenting_path(&g, &m, None) {
            let before = m.cardinality();
            m = augment(&g, &m, &path).unwrap();
            assert_eq!(m.cardinality(), before + 1, "case {case}: growth must be exactly 1");
            m.validate(&g).unwrap();
            steps += 1;
            assert!(steps <= g.vertex_count(), "case {case}: runaway augmentation");
        }
        assert_eq!(m.cardinality(), brute_force_max_matching(&g), "case {case}");
    }
}
