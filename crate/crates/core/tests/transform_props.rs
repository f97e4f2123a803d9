mod common;

use vizgen_core::difftree::{expresses, DiffForest};
use vizgen_core::transform::applicable_actions;

#[test]
fn hundred_random_logs_preserve_queries_and_schemas() {
    let mut actions = 0;
    let mut all = Vec::new();
    for seed in 0..100 {
        all.extend(common::expressiveness_violations(seed));
        let (c, l) = common::random_log(seed);
        actions += applicable_actions(&DiffForest::initial(&l, &c).unwrap(), &c).len();
    }
    assert!(all.is_empty(), "{all:#?}");
    assert!(
        actions > 100,
        "suite exercised only {actions} initial actions"
    );
}

#[test]
fn initial_state_expresses_its_log() {
    for seed in 0..100 {
        let (c, l) = common::random_log(seed);
        let f = DiffForest::initial(&l, &c).unwrap();
        for q in &l {
            assert!(
                f.trees.iter().any(|t| expresses(t, q).is_some()),
                "seed {seed}: {q}"
            );
        }
    }
}
