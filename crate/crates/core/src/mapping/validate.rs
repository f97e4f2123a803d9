use std::collections::{BTreeMap, BTreeSet};

use crate::difftree::{bind, ChoiceKind, DiffNode, DiffTree, NodeId, TreeId};
use crate::relational::{Catalog, ColumnType, Value};
use crate::sql::check_query;

use super::analysis::{analyze, stats, ColumnKind, SlotTarget, TreeAnalysis};
use super::candidates::{chart_encodings, chart_events, slider_range};
use super::spec::{ChartType, Domain, InterfaceSpec, LayoutNode, VisEvent, WidgetType};

/// Invariant violations found by [`validate_spec`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid interface: {}", .0.join("; "))]
pub struct Invalid(pub Vec<String>);

fn choice_nodes(tree: &DiffTree) -> Vec<(NodeId, ChoiceKind, &DiffNode)> {
    let mut out = Vec::new();
    tree.root.visit(&mut |n| {
        if let DiffNode::Choice { id, kind, .. } = n {
            out.push((*id, *kind, n));
        }
    });
    out
}

fn range_of(a: &TreeAnalysis, low: NodeId, high: NodeId) -> Option<&super::analysis::SourceColumn> {
    a.slots.iter().find_map(|s| match &s.target {
        SlotTarget::Range {
            low: l,
            high: h,
            column,
        } if *l == low && *h == high => Some(column),
        _ => None,
    })
}

fn literal_children(n: &DiffNode) -> Option<Vec<Value>> {
    n.children()
        .iter()
        .map(|c| match c {
            DiffNode::Static { label, children } if children.is_empty() => label.literal().cloned(),
            _ => None,
        })
        .collect()
}

fn check_layout(n: &LayoutNode, errs: &mut Vec<String>) {
    if let LayoutNode::Split { children, .. } = n {
        if children.len() < 2 {
            errs.push("layout node with fewer than two children".into());
        }
        let rebuilt = LayoutNode::split(
            match n {
                LayoutNode::Split { dir, .. } => *dir,
                LayoutNode::Leaf { .. } => unreachable!(),
            },
            children.clone(),
        );
        if rebuilt.size() != n.size() {
            errs.push("layout bounding box disagrees with its children".into());
        }
        for c in children {
            check_layout(c, errs);
        }
    }
}

/// Re-checks every structural and type invariant of a spec against the
/// catalog: one chart per tree with a legal encoding, interactions
/// compatible with their targets, each choice node covered exactly once,
/// acyclic chart dependencies, a layout over exactly the components, and
/// executable defaults.
pub fn validate_spec(spec: &InterfaceSpec, catalog: &Catalog) -> Result<(), Invalid> {
    let mut errs = Vec::new();
    let mut analyses: BTreeMap<TreeId, TreeAnalysis> = BTreeMap::new();
    for t in &spec.forest.trees {
        match analyze(t, catalog) {
            Ok(a) => {
                analyses.insert(t.id, a);
            }
            Err(e) => errs.push(format!("tree {}: {e}", t.id)),
        }
    }
    if !errs.is_empty() {
        return Err(Invalid(errs));
    }

    let mut components: Vec<String> = Vec::new();
    let mut vis_tree: BTreeMap<&str, (TreeId, ChartType, &crate::mapping::VisSpec)> =
        BTreeMap::new();
    for t in &spec.forest.trees {
        let vs: Vec<_> = spec
            .visualizations
            .iter()
            .filter(|v| v.tree == t.id)
            .collect();
        if vs.len() != 1 {
            errs.push(format!("tree {} has {} visualizations", t.id, vs.len()));
        }
    }
    for v in &spec.visualizations {
        let Some(a) = analyses.get(&v.tree) else {
            errs.push(format!(
                "visualization {} refers to unknown tree {}",
                v.id, v.tree
            ));
            continue;
        };
        match chart_encodings(v.chart, &a.columns) {
            Some(enc) if enc == v.encodings => {}
            _ => errs.push(format!(
                "visualization {} violates {:?} constraints",
                v.id, v.chart
            )),
        }
        if let (Some(x), Some(y)) = (v.encodings.x, v.encodings.y) {
            let (cx, cy) = (&a.columns[x], &a.columns[y]);
            let bad = match v.chart {
                ChartType::Bar => cx.kind != ColumnKind::Categorical || cy.ty != ColumnType::Num,
                ChartType::Line | ChartType::Scatter => {
                    cx.ty != ColumnType::Num || cy.ty != ColumnType::Num
                }
                ChartType::Table => false,
            };
            if bad {
                errs.push(format!(
                    "visualization {} encodes incompatible columns",
                    v.id
                ));
            }
        }
        vis_tree.insert(v.id.as_str(), (v.tree, v.chart, v));
        components.push(v.id.clone());
    }

    let mut covered: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut edges: Vec<(TreeId, TreeId)> = Vec::new();
    for w in &spec.widgets {
        components.push(w.id.clone());
        let Some(tree) = spec.forest.tree(w.tree) else {
            errs.push(format!("widget {} refers to unknown tree {}", w.id, w.tree));
            continue;
        };
        let a = &analyses[&w.tree];
        let nodes: Vec<Option<&DiffNode>> = w.targets.iter().map(|id| tree.find(*id)).collect();
        if nodes.iter().any(Option::is_none) {
            errs.push(format!(
                "widget {} targets a node outside tree {}",
                w.id, w.tree
            ));
            continue;
        }
        let kind = nodes[0].and_then(DiffNode::kind);
        let ok = match w.widget {
            WidgetType::ButtonList | WidgetType::RadioList | WidgetType::Dropdown => {
                w.targets.len() == 1
                    && kind == Some(ChoiceKind::Any)
                    && matches!(&w.domain, Domain::Options { options } if options.len() == nodes[0].map_or(0, |n| n.children().len()))
            }
            WidgetType::Slider => {
                w.targets.len() == 1
                    && kind == Some(ChoiceKind::Any)
                    && a.slots
                        .iter()
                        .find(|s| s.target == SlotTarget::Node(w.targets[0]))
                        .is_some_and(|s| slider_range(s, catalog).is_some())
            }
            WidgetType::Toggle => w.targets.len() == 1 && kind == Some(ChoiceKind::Opt),
            WidgetType::CheckboxList => {
                w.targets.len() == 1 && matches!(kind, Some(ChoiceKind::Subset | ChoiceKind::Multi))
            }
            WidgetType::RangeSlider => {
                w.targets.len() == 2 && range_of(a, w.targets[0], w.targets[1]).is_some()
            }
        };
        if !ok {
            errs.push(format!(
                "widget {} ({:?}) is incompatible with its targets",
                w.id, w.widget
            ));
        }
        for (id, n) in w.targets.iter().zip(&nodes) {
            *covered.entry(*id).or_default() += 1;
            if kind == Some(ChoiceKind::Multi) {
                if let Some(n) = n {
                    for inner in n.choice_ids().into_iter().filter(|i| i != id) {
                        *covered.entry(inner).or_default() += 1;
                    }
                }
            }
        }
    }

    for vi in &spec.vis_interactions {
        let Some(&(src_tree, chart, src)) = vis_tree.get(vi.source.as_str()) else {
            errs.push(format!(
                "interaction {} has unknown source {}",
                vi.id, vi.source
            ));
            continue;
        };
        let Some(tree) = spec.forest.tree(vi.tree) else {
            errs.push(format!(
                "interaction {} refers to unknown tree {}",
                vi.id, vi.tree
            ));
            continue;
        };
        if !chart_events(chart).contains(&vi.event) {
            errs.push(format!("{:?} chart does not support {:?}", chart, vi.event));
        }
        let a = &analyses[&vi.tree];
        let sa = &analyses[&src_tree];
        let src_col = |i: usize| sa.columns.get(i).and_then(|c| c.source.clone());
        let axis_ok = |i: usize| {
            src.encodings.x == Some(i)
                || (chart == ChartType::Scatter && src.encodings.y == Some(i))
        };
        let ok = match vi.event {
            VisEvent::Click | VisEvent::MultiClick => {
                let want = if vi.event == VisEvent::Click {
                    ChoiceKind::Any
                } else {
                    ChoiceKind::Subset
                };
                vi.targets.len() == 1
                    && tree.find(vi.targets[0]).is_some_and(|n| {
                        n.kind() == Some(want)
                            && literal_children(n).is_some_and(|lits| {
                                src_col(vi.column).is_some_and(|c| {
                                    stats(catalog, &c)
                                        .is_some_and(|s| lits.iter().all(|v| s.may_contain(v)))
                                        && a.slots.iter().any(|s| {
                                            s.target == SlotTarget::Node(vi.targets[0])
                                                && s.compared.as_ref() == Some(&c)
                                        })
                                })
                            })
                    })
                    && axis_ok(vi.column)
            }
            VisEvent::BrushX => {
                vi.targets.len() == 2
                    && src.encodings.x == Some(vi.column)
                    && range_of(a, vi.targets[0], vi.targets[1]).cloned() == src_col(vi.column)
                    && src_col(vi.column).is_some()
            }
            VisEvent::PanZoom => {
                vi.targets.len() == 4
                    && src.encodings.x == Some(vi.column)
                    && src.encodings.y == vi.column_y
                    && src_col(vi.column).is_some()
                    && range_of(a, vi.targets[0], vi.targets[1]).cloned() == src_col(vi.column)
                    && vi.column_y.and_then(src_col).is_some()
                    && range_of(a, vi.targets[2], vi.targets[3]).cloned()
                        == vi.column_y.and_then(src_col)
            }
        };
        if !ok {
            errs.push(format!(
                "interaction {} ({:?}) is incompatible with its targets",
                vi.id, vi.event
            ));
        }
        if vi.event != VisEvent::PanZoom {
            let src_tree_nodes = spec
                .forest
                .tree(src_tree)
                .map(|t| t.choice_ids())
                .unwrap_or_default();
            if vi.targets.iter().any(|t| src_tree_nodes.contains(t)) {
                errs.push(format!("interaction {} targets its own source tree", vi.id));
            }
        }
        edges.push((src_tree, vi.tree));
        for id in &vi.targets {
            *covered.entry(*id).or_default() += 1;
        }
    }

    for t in &spec.forest.trees {
        for (id, _, _) in choice_nodes(t) {
            match covered.get(&id).copied().unwrap_or(0) {
                1 => {}
                n => errs.push(format!("choice node {id} is covered by {n} interactions")),
            }
        }
    }
    let all_ids: BTreeSet<NodeId> = spec
        .forest
        .trees
        .iter()
        .flat_map(|t| t.choice_ids())
        .collect();
    for id in covered.keys() {
        if !all_ids.contains(id) {
            errs.push(format!("interaction targets unknown node {id}"));
        }
    }

    let mut adj: BTreeMap<TreeId, BTreeSet<TreeId>> = BTreeMap::new();
    for (a, b) in &edges {
        if a != b {
            adj.entry(*a).or_default().insert(*b);
        }
    }
    let mut stack: Vec<(TreeId, Vec<TreeId>)> = adj.keys().map(|k| (*k, vec![*k])).collect();
    while let Some((n, path)) = stack.pop() {
        for m in adj.get(&n).into_iter().flatten() {
            if path.contains(m) {
                errs.push("chart interactions form a dependency cycle".into());
                stack.clear();
                break;
            }
            let mut p = path.clone();
            p.push(*m);
            stack.push((*m, p));
        }
    }

    let mut leaves: Vec<String> = spec.layout.leaves().into_iter().map(String::from).collect();
    leaves.sort();
    components.sort();
    if leaves != components {
        errs.push("layout leaves differ from the visualizations and widgets".into());
    }
    check_layout(&spec.layout, &mut errs);

    for t in &spec.forest.trees {
        match spec.defaults.get(&t.id) {
            None => errs.push(format!("tree {} has no default binding", t.id)),
            Some(b) => match bind(t, b) {
                Ok(q) => {
                    if let Err(e) = check_query(&q, catalog) {
                        errs.push(format!("default of tree {} does not execute: {e}", t.id));
                    }
                }
                Err(e) => errs.push(format!("default of tree {} does not bind: {e}", t.id)),
            },
        }
    }

    if errs.is_empty() {
        Ok(())
    } else {
        Err(Invalid(errs))
    }
}
