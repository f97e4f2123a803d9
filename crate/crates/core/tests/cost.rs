mod common;

use common::{apply_kinds, dataset, log, q};
use vizgen_core::cost::*;
use vizgen_core::difftree::DiffForest;
use vizgen_core::mapping::*;

const EPS: f64 = 1e-9;

fn best(space: &MappingSpace, ctx: &mut CostContext) -> (InterfaceSpec, f64) {
    best_mapping(space, &mut |s| {
        ctx.interface_cost(s)
            .map(|c| c.total)
            .unwrap_or(f64::INFINITY)
    })
}

fn running() -> (
    vizgen_core::relational::Catalog,
    Vec<vizgen_core::sql::QueryAst>,
) {
    (dataset("demo"), log("running_example.sql"))
}

fn space_of(kinds: &[&str]) -> (MappingSpace, Vec<vizgen_core::sql::QueryAst>) {
    let (c, l) = running();
    let f = apply_kinds(&l, &c, kinds);
    (
        MappingSpace::new(&f, &c, &l, CostParams::default().screen()).unwrap(),
        l,
    )
}

#[test]
fn static_single_query_costs_zero() {
    let c = dataset("demo");
    let l = vec![q("SELECT a, count(*) FROM T GROUP BY a")];
    let f = DiffForest::initial(&l, &c).unwrap();
    let space = MappingSpace::new(&f, &c, &l, CostParams::default().screen()).unwrap();
    let cost = interface_cost(&sample_mapping(&space, 0), &l, &CostParams::default()).unwrap();
    assert_eq!(cost, CostBreakdown::new(0.0, 0.0, 0.0));
}

#[test]
fn button_list_interface_by_hand() {
    let (space, l) = space_of(&[]);
    let mut ctx = CostContext::new(&l, CostParams::default());
    let (spec, _) = best(&space, &mut ctx);
    assert_eq!(spec.widgets.len(), 1);
    assert_eq!(spec.widgets[0].widget, WidgetType::ButtonList);
    let paths = spec.layout.leaf_paths();
    assert_eq!(
        (paths["v0"].clone(), paths["w0"].clone()),
        (vec![0], vec![1])
    );
    // Q1 is the default; Q2 and Q3 are one button press each; the focus
    // walks v0 -> w0 once (two edges) and stays there.
    let cost = ctx.interface_cost(&spec).unwrap();
    assert!((cost.manipulation - 2.0).abs() < EPS);
    assert!((cost.navigation - 0.2).abs() < EPS);
    assert_eq!(cost.layout_penalty, 0.0);
    assert!((cost.total - 2.2).abs() < EPS);
}

#[test]
fn split_interface_by_hand() {
    let (space, l) = space_of(&["split"]);
    let mut ctx = CostContext::new(&l, CostParams::default());
    let (spec, v) = best(&space, &mut ctx);
    assert!(spec.widgets.is_empty() && spec.vis_interactions.is_empty());
    let paths = spec.layout.leaf_paths();
    let order: Vec<Vec<usize>> = spec
        .layout
        .leaves()
        .iter()
        .map(|k| paths[*k].clone())
        .collect();
    assert_eq!(order, vec![vec![0], vec![1, 0], vec![1, 1]]);
    // Queries land on the charts in layout order: three edges, then two.
    let cost = ctx.interface_cost(&spec).unwrap();
    assert_eq!(cost.manipulation, 0.0);
    assert!((cost.navigation - 0.5).abs() < EPS);
    assert!((v - 0.5).abs() < EPS);
}

#[test]
fn pushdown_interface_by_hand() {
    let (space, l) = space_of(&["cluster", "split", "pushdown"]);
    let mut ctx = CostContext::new(&l, CostParams::default());
    let (spec, _) = best(&space, &mut ctx);
    let ids: Vec<String> = spec.layout.leaves().into_iter().map(String::from).collect();
    assert_eq!(ids, vec!["v1", "w2", "w3", "v2"]);
    assert!(spec
        .widgets
        .iter()
        .all(|w| w.widget == WidgetType::ButtonList));
    // Q2 flips both the attribute and the literal buttons (2.0); the focus
    // goes v1 -> w2 (3 edges) -> w3 (3 edges) -> v2 (2 edges).
    let cost = ctx.interface_cost(&spec).unwrap();
    assert!((cost.manipulation - 2.0).abs() < EPS);
    assert!((cost.navigation - 0.8).abs() < EPS);
    assert!((cost.total - 2.8).abs() < EPS);
}

#[test]
fn total_is_sum_and_non_negative() {
    let (space, l) = space_of(&["cluster", "split"]);
    let mut ctx = CostContext::new(&l, CostParams::default());
    for seed in 0..50 {
        let c = ctx.interface_cost(&sample_mapping(&space, seed)).unwrap();
        assert!(c.manipulation >= 0.0 && c.navigation >= 0.0 && c.layout_penalty >= 0.0);
        assert_eq!(c.total, c.manipulation + c.navigation + c.layout_penalty);
        assert_eq!(
            ctx.interface_cost(&sample_mapping(&space, seed)).unwrap(),
            c
        );
    }
}

#[test]
fn layout_change_keeps_manipulation() {
    let (space, l) = space_of(&["cluster", "split", "pushdown"]);
    let mut ctx = CostContext::new(&l, CostParams::default());
    let (spec, _) = best(&space, &mut ctx);
    let base = ctx.interface_cost(&spec).unwrap();
    let comps: Vec<(String, Size)> = spec
        .layout
        .leaves()
        .into_iter()
        .map(|id| {
            let s = spec
                .visualizations
                .iter()
                .find(|v| v.id == id)
                .map(|v| Size::new(v.width, v.height))
                .or_else(|| {
                    spec.widgets
                        .iter()
                        .find(|w| w.id == id)
                        .map(|w| Size::new(w.width, w.height))
                })
                .unwrap();
            (id.to_string(), s)
        })
        .collect();
    let mut navs = Vec::new();
    for layout in layout_candidates(&comps, space.screen) {
        let mut other = spec.clone();
        other.layout = layout;
        let c = ctx.interface_cost(&other).unwrap();
        assert_eq!(c.manipulation, base.manipulation);
        navs.push(c.navigation);
    }
    assert!(
        navs.iter().any(|n| (n - base.navigation).abs() > EPS),
        "layout must matter for navigation"
    );
}

#[test]
fn screen_slack_keeps_manipulation_and_navigation() {
    let (space, l) = space_of(&["cluster", "split"]);
    let p = CostParams::default();
    let big = p.clone().with_screen(Size::new(4000.0, 3000.0));
    for seed in 0..20 {
        let spec = sample_mapping(&space, seed);
        let a = interface_cost(&spec, &l, &p).unwrap();
        let b = interface_cost(&spec, &l, &big).unwrap();
        assert_eq!(
            (a.manipulation, a.navigation),
            (b.manipulation, b.navigation)
        );
        assert!(b.layout_penalty <= a.layout_penalty);
    }
}

#[test]
fn overflow_penalty_by_hand() {
    let (space, l) = space_of(&[]);
    let mut ctx = CostContext::new(&l, CostParams::default());
    let (spec, _) = best(&space, &mut ctx);
    assert_eq!(spec.layout.size(), Size::new(320.0, 312.0));
    // 320x312 over a 320x240 screen is 1.3 screens: 10 * 0.3.
    let tight = CostParams::default().with_screen(Size::new(320.0, 240.0));
    let c = interface_cost(&spec, &l, &tight).unwrap();
    assert!((c.layout_penalty - 3.0).abs() < EPS);
    let fits = CostParams::default().with_screen(Size::new(320.0, 312.0));
    assert_eq!(
        interface_cost(&spec, &l, &fits).unwrap().layout_penalty,
        0.0
    );
}

#[test]
fn argmin_invariant_under_scaling() {
    for kinds in [
        &[][..],
        &["cluster"],
        &["cluster", "split"],
        &["cluster", "split", "pushdown"],
    ] {
        let (space, l) = space_of(kinds);
        let mut a = CostContext::new(&l, CostParams::default());
        let mut b = CostContext::new(&l, CostParams::default().scaled(3.5));
        let (sa, va) = best(&space, &mut a);
        let (sb, vb) = best(&space, &mut b);
        assert_eq!(sa, sb);
        assert!((vb - 3.5 * va).abs() < 1e-6);
    }
}

#[test]
fn unexpressed_query_is_an_error() {
    let (space, mut l) = space_of(&[]);
    let spec = sample_mapping(&space, 0);
    l.push(q("SELECT b, count(*) FROM T GROUP BY b"));
    match interface_cost(&spec, &l, &CostParams::default()) {
        Err(CostError::NotExpressive { index, .. }) => assert_eq!(index, 3),
        other => panic!("expected NotExpressive, got {other:?}"),
    }
}

#[test]
fn k_one_is_the_first_sample() {
    let (space, l) = space_of(&["cluster", "split"]);
    let mut ctx = CostContext::new(&l, CostParams::default());
    for seed in 0..10 {
        let first = sample_seeds(seed, 1)[0];
        let direct = ctx
            .interface_cost(&sample_mapping(&space, first))
            .unwrap()
            .total;
        assert_eq!(space_value(&space, &mut ctx, 1, seed), direct);
    }
}

#[test]
fn more_samples_never_hurt() {
    let (space, l) = space_of(&["cluster", "split", "pushdown"]);
    let mut ctx = CostContext::new(&l, CostParams::default());
    for seed in 0..10 {
        assert_eq!(sample_seeds(seed, 20)[..5], sample_seeds(seed, 5)[..]);
        let v1 = space_value(&space, &mut ctx, 1, seed);
        let v5 = space_value(&space, &mut ctx, 5, seed);
        let v20 = space_value(&space, &mut ctx, 20, seed);
        assert!(v20 <= v5 && v5 <= v1);
    }
}

#[test]
fn state_value_is_deterministic() {
    let (c, l) = running();
    let s = apply_kinds(&l, &c, &["cluster", "split", "pushdown"]);
    let p = CostParams::default();
    let a = state_value(&s, &l, &c, &p, 10, 42).unwrap();
    assert_eq!(a, state_value(&s, &l, &c, &p, 10, 42).unwrap());
}

#[test]
fn split_improves_running_example_state_value() {
    let (c, l) = running();
    let p = CostParams::default();
    let initial = DiffForest::initial(&l, &c).unwrap();
    let split = apply_kinds(&l, &c, &["split"]);
    let clustered_split = apply_kinds(&l, &c, &["cluster", "split"]);
    for seed in 0..5 {
        let v0 = state_value(&initial, &l, &c, &p, 10, seed).unwrap();
        assert!(state_value(&split, &l, &c, &p, 10, seed).unwrap() < v0);
        assert!(state_value(&clustered_split, &l, &c, &p, 10, seed).unwrap() < v0);
    }
}

#[test]
fn config_overrides_and_errors() {
    let p =
        CostParams::from_config("# constants\nclick = 0.5\n  nav_unit=0.2 # per edge\n\n").unwrap();
    assert_eq!(p.click, 0.5);
    assert_eq!(p.nav_unit, 0.2);
    assert_eq!(p.dropdown, 1.5);
    for (text, line) in [
        ("click = 0", 1),
        ("\nbogus = 1", 2),
        ("click 1", 1),
        ("click = x", 1),
        ("slider = -2", 1),
    ] {
        match CostParams::from_config(text) {
            Err(CostError::Config { line: l, .. }) => assert_eq!(l, line, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn params_round_trip_as_json() {
    let p = CostParams::default().scaled(2.0);
    let back: CostParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
    assert_eq!(back, p);
    assert_eq!(back.screen(), Size::new(1280.0, 800.0));
}
