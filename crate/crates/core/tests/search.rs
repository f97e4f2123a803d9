mod common;

use common::{apply_kinds, dataset, log, q};
use vizgen_core::cost::{interface_cost, CostContext, CostParams};
use vizgen_core::difftree::{expresses, DiffForest};
use vizgen_core::mapping::{best_mapping, validate_spec, MappingSpace};
use vizgen_core::search::*;

fn fixture(
    name: &str,
    data: &str,
) -> (
    vizgen_core::relational::Catalog,
    Vec<vizgen_core::sql::QueryAst>,
) {
    (dataset(data), log(name))
}

#[test]
fn single_query_is_static_and_free() {
    let c = dataset("demo");
    let l = vec![q("SELECT a, count(*) FROM T GROUP BY a")];
    let r = search(&l, &c, &CostParams::default(), &SearchConfig::default()).unwrap();
    assert!(r.actions.is_empty());
    assert_eq!(r.cost.total, 0.0);
    assert!(r.spec.widgets.is_empty() && r.spec.vis_interactions.is_empty());
}

#[test]
fn empty_log_is_rejected() {
    let c = dataset("demo");
    let err = search(&[], &c, &CostParams::default(), &SearchConfig::default()).unwrap_err();
    assert_eq!(err, SearchError::EmptyLog);
    assert_eq!(
        exhaustive_search(&[], &c, &CostParams::default(), 1).unwrap_err(),
        SearchError::EmptyLog
    );
}

#[test]
fn mcts_matches_exhaustive_on_fixtures() {
    for (name, data) in [
        ("running_example.sql", "demo"),
        ("multiview.sql", "demo"),
        ("sdss.sql", "sdss"),
    ] {
        let (c, l) = fixture(name, data);
        let p = CostParams::default();
        let oracle = exhaustive_search(&l, &c, &p, 3).unwrap();
        let r = search(&l, &c, &p, &SearchConfig::default()).unwrap();
        assert!(oracle.cost.total <= r.cost.total + 1e-9, "{name}");
        assert!(
            (oracle.cost.total - r.cost.total).abs() < 1e-9,
            "{name}: {} vs {}",
            r.cost.total,
            oracle.cost.total
        );
        validate_spec(&r.spec, &c).unwrap();
        for query in &l {
            assert!(
                r.state.trees.iter().any(|t| expresses(t, query).is_some()),
                "{name}"
            );
        }
    }
}

#[test]
fn returned_cost_is_served_spec_cost() {
    let (c, l) = fixture("running_example.sql", "demo");
    let p = CostParams::default();
    let r = search(&l, &c, &p, &SearchConfig::default()).unwrap();
    assert_eq!(interface_cost(&r.spec, &l, &p).unwrap(), r.cost);
    assert_eq!(r.spec.forest, r.state);
}

#[test]
fn never_worse_than_initial_state() {
    for seed in 0..6 {
        for (name, data) in [("running_example.sql", "demo"), ("multiview.sql", "demo")] {
            let (c, l) = fixture(name, data);
            let p = CostParams::default();
            let initial = DiffForest::initial(&l, &c).unwrap();
            let space = MappingSpace::new(&initial, &c, &l, p.screen()).unwrap();
            let mut ctx = CostContext::new(&l, p.clone());
            let (_, base) = best_mapping(&space, &mut |s| {
                ctx.interface_cost(s)
                    .map(|c| c.total)
                    .unwrap_or(f64::INFINITY)
            });
            let config = SearchConfig {
                iterations: 5,
                seed,
                ..SearchConfig::default()
            };
            let r = search(&l, &c, &p, &config).unwrap();
            assert!(r.cost.total <= base + 1e-9);
        }
    }
}

#[test]
fn zero_iterations_returns_initial_mapping() {
    let (c, l) = fixture("running_example.sql", "demo");
    let p = CostParams::default();
    let r = search(
        &l,
        &c,
        &p,
        &SearchConfig {
            iterations: 0,
            ..SearchConfig::default()
        },
    )
    .unwrap();
    assert!(r.actions.is_empty());
    assert_eq!(r.cost, exhaustive_search(&l, &c, &p, 0).unwrap().cost);
    assert!((r.cost.total - 2.2).abs() < 1e-9);
}

#[test]
fn deterministic_per_seed() {
    let (c, l) = fixture("multiview.sql", "demo");
    let p = CostParams::default();
    let config = SearchConfig {
        iterations: 40,
        seed: 9,
        ..SearchConfig::default()
    };
    let a = search(&l, &c, &p, &config).unwrap();
    let b = search(&l, &c, &p, &config).unwrap();
    assert_eq!(a.spec.to_json(), b.spec.to_json());
    assert_eq!(a.trace, b.trace);
}

#[test]
fn trace_incumbent_never_increases() {
    let (c, l) = fixture("running_example.sql", "demo");
    let r = search(
        &l,
        &c,
        &CostParams::default(),
        &SearchConfig {
            iterations: 60,
            ..SearchConfig::default()
        },
    )
    .unwrap();
    assert_eq!(r.trace.len(), 60);
    let mut best = f64::INFINITY;
    for (i, e) in r.trace.iter().enumerate() {
        assert_eq!(e.iteration, i);
        best = best.min(e.cost);
        assert_eq!(e.best, best);
        assert!(e.actions.len() <= r.config.max_depth);
    }
}

#[test]
fn max_depth_bounds_action_chains() {
    let (c, l) = fixture("running_example.sql", "demo");
    let config = SearchConfig {
        iterations: 50,
        max_depth: 1,
        ..SearchConfig::default()
    };
    let r = search(&l, &c, &CostParams::default(), &config).unwrap();
    assert!(r.trace.iter().all(|e| e.actions.len() <= 1));
    assert!(r.actions.len() <= 1);
}

#[test]
fn complete_all_is_never_worse() {
    let (c, l) = fixture("multiview.sql", "demo");
    let p = CostParams::default();
    let base = SearchConfig {
        iterations: 15,
        ..SearchConfig::default()
    };
    let one = search(&l, &c, &p, &base).unwrap();
    let all = search(
        &l,
        &c,
        &p,
        &SearchConfig {
            complete_all: true,
            ..base
        },
    )
    .unwrap();
    assert!(all.cost.total <= one.cost.total + 1e-9);
}

#[test]
fn exhaustive_reaches_the_pushdown_state() {
    let (c, l) = fixture("running_example.sql", "demo");
    let initial = DiffForest::initial(&l, &c).unwrap();
    let states = reachable_states(&initial, &c, 3, EXHAUSTIVE_STATE_CAP).unwrap();
    let target = apply_kinds(&l, &c, &["cluster", "split", "pushdown"]).canonical_key();
    assert!(states
        .iter()
        .any(|(s, a)| s.canonical_key() == target && a.len() == 3));
    let keys: std::collections::BTreeSet<String> =
        states.iter().map(|s| s.0.canonical_key()).collect();
    assert_eq!(keys.len(), states.len(), "states are deduplicated");
    assert_eq!(states[0].1.len(), 0);
    assert!(
        states.windows(2).all(|w| w[0].1.len() <= w[1].1.len()),
        "breadth-first order"
    );
}

#[test]
fn exhaustive_depth_zero_is_initial() {
    let (c, l) = fixture("running_example.sql", "demo");
    let r = exhaustive_search(&l, &c, &CostParams::default(), 0).unwrap();
    assert_eq!(r.states_visited, 1);
    assert!(r.actions.is_empty());
}

#[test]
fn exhaustive_budget_is_enforced() {
    let (c, l) = fixture("running_example.sql", "demo");
    let initial = DiffForest::initial(&l, &c).unwrap();
    let err = reachable_states(&initial, &c, 3, 2).unwrap_err();
    assert_eq!(err, SearchError::BudgetExceeded { cap: 2, depth: 3 });
}

#[test]
fn result_serializes_config_and_params() {
    let (c, l) = fixture("sdss.sql", "sdss");
    let config = SearchConfig {
        iterations: 10,
        ..SearchConfig::default()
    };
    let r = search(&l, &c, &CostParams::default(), &config).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    assert_eq!(v["config"]["iterations"], 10);
    assert_eq!(v["params"]["pan_zoom"], 2.5);
    assert!(v.get("trace").is_none());
}
