use crate::difftree::{ChoiceKind, TreeId};
use crate::relational::{Catalog, ColumnType, Value};

use super::analysis::{
    stats, ColumnKind, OutputColumn, Slot, SlotTarget, SourceColumn, TreeAnalysis,
};
use super::spec::{
    ChartType, Domain, Encodings, OptionItem, OptionPayload, Size, VisEvent, VisInteractionSpec,
    VisSpec, WidgetSpec, WidgetType, CHART_SIZE, COMPACT_SIZE, CONTINUOUS_SIZE, LIST_ROW_HEIGHT,
    LIST_WIDTH,
};

pub fn vis_id(tree: TreeId) -> String {
    format!("v{}", tree.0)
}

fn is_cat(c: &OutputColumn) -> bool {
    c.kind == ColumnKind::Categorical
}

fn is_quant(c: &OutputColumn) -> bool {
    c.kind == ColumnKind::Quantitative && c.ty == ColumnType::Num
}

/// Encodings of `chart` over `columns`, if the chart accepts the schema.
pub fn chart_encodings(chart: ChartType, columns: &[OutputColumn]) -> Option<Encodings> {
    let enc = |x, y, color| Encodings {
        x: Some(x),
        y: Some(y),
        color,
    };
    match (chart, columns) {
        (ChartType::Bar, [x, y]) if is_cat(x) && is_quant(y) => Some(enc(0, 1, None)),
        (ChartType::Bar, [x, c, y]) if is_cat(x) && is_cat(c) && is_quant(y) => {
            Some(enc(0, 2, Some(1)))
        }
        (ChartType::Line, [x, y]) if is_quant(x) && is_quant(y) => Some(enc(0, 1, None)),
        (ChartType::Line, [x, c, y]) if is_quant(x) && is_cat(c) && is_quant(y) => {
            Some(enc(0, 2, Some(1)))
        }
        (ChartType::Scatter, [x, y]) if is_quant(x) && is_quant(y) => Some(enc(0, 1, None)),
        (ChartType::Scatter, [x, y, c]) if is_quant(x) && is_quant(y) && is_cat(c) => {
            Some(enc(0, 1, Some(2)))
        }
        (ChartType::Table, _) => Some(Encodings::default()),
        _ => None,
    }
}

/// Charts the tree's result schema maps to, in the order bar, line,
/// scatter, table. Table is always present.
pub fn candidate_visualizations(a: &TreeAnalysis) -> Vec<VisSpec> {
    [
        ChartType::Bar,
        ChartType::Line,
        ChartType::Scatter,
        ChartType::Table,
    ]
    .into_iter()
    .filter_map(|chart| {
        chart_encodings(chart, &a.columns).map(|encodings| VisSpec {
            id: vis_id(a.tree),
            chart,
            encodings,
            tree: a.tree,
            columns: a.columns.iter().map(|c| c.name.clone()).collect(),
            width: CHART_SIZE.width,
            height: CHART_SIZE.height,
        })
    })
    .collect()
}

pub fn widget_id(slot: &Slot) -> String {
    format!("w{}", slot.target.nodes()[0].0)
}

pub fn interaction_id(slot: &Slot) -> String {
    format!("i{}", slot.target.nodes()[0].0)
}

fn list_size(n: usize) -> Size {
    Size::new(LIST_WIDTH, LIST_ROW_HEIGHT * n.max(1) as f64)
}

fn index_options(labels: &[String]) -> Domain {
    Domain::Options {
        options: labels
            .iter()
            .enumerate()
            .map(|(i, l)| OptionItem {
                label: l.clone(),
                payload: OptionPayload::Index(i),
            })
            .collect(),
    }
}

fn step_for(min: f64, max: f64, values: &[f64]) -> f64 {
    let integral = |v: f64| v.fract() == 0.0;
    if integral(min) && integral(max) && values.iter().all(|v| integral(*v)) {
        1.0
    } else if max > min {
        (max - min) / 100.0
    } else {
        1.0
    }
}

fn numeric_column_range(catalog: &Catalog, col: &SourceColumn) -> Option<(f64, f64)> {
    let c = catalog.column(&col.table, &col.column)?;
    if c.ty != ColumnType::Num {
        return None;
    }
    Some((c.stats.min?, c.stats.max?))
}

/// Slider-compatible literal values: all numeric and inside the compared
/// column's range.
pub fn slider_range(slot: &Slot, catalog: &Catalog) -> Option<(f64, f64, Vec<f64>)> {
    let lits = slot.literals.as_ref()?;
    let vals: Vec<f64> = lits.iter().map(Value::as_num).collect::<Option<_>>()?;
    let (min, max) = numeric_column_range(catalog, slot.compared.as_ref()?)?;
    vals.iter()
        .all(|v| min <= *v && *v <= max)
        .then_some((min, max, vals))
}

pub fn candidate_widgets(slot: &Slot, catalog: &Catalog) -> Vec<WidgetSpec> {
    let make = |widget, domain, size: Size, column: Option<String>| WidgetSpec {
        id: widget_id(slot),
        widget,
        tree: slot.tree,
        targets: slot.target.nodes(),
        domain,
        column,
        width: size.width,
        height: size.height,
    };
    let compared = slot.compared.as_ref().map(|c| c.column.clone());
    match (&slot.target, slot.kind) {
        (SlotTarget::Range { column, .. }, _) => {
            let Some((min, max)) = numeric_column_range(catalog, column) else {
                return Vec::new();
            };
            vec![make(
                WidgetType::RangeSlider,
                Domain::Range {
                    min,
                    max,
                    step: step_for(min, max, &[]),
                },
                CONTINUOUS_SIZE,
                Some(column.column.clone()),
            )]
        }
        (SlotTarget::Node(_), Some(ChoiceKind::Any)) => {
            let n = slot.labels.len();
            let mut out = vec![
                make(
                    WidgetType::ButtonList,
                    index_options(&slot.labels),
                    list_size(n),
                    compared.clone(),
                ),
                make(
                    WidgetType::RadioList,
                    index_options(&slot.labels),
                    list_size(n),
                    compared.clone(),
                ),
                make(
                    WidgetType::Dropdown,
                    index_options(&slot.labels),
                    COMPACT_SIZE,
                    compared.clone(),
                ),
            ];
            if let Some((min, max, vals)) = slider_range(slot, catalog) {
                out.push(make(
                    WidgetType::Slider,
                    Domain::Range {
                        min,
                        max,
                        step: step_for(min, max, &vals),
                    },
                    CONTINUOUS_SIZE,
                    compared,
                ));
            }
            out
        }
        (SlotTarget::Node(_), Some(ChoiceKind::Opt)) => vec![make(
            WidgetType::Toggle,
            Domain::Toggle {
                label: slot.labels.first().cloned().unwrap_or_default(),
            },
            COMPACT_SIZE,
            None,
        )],
        (SlotTarget::Node(_), Some(ChoiceKind::Subset)) => vec![make(
            WidgetType::CheckboxList,
            index_options(&slot.labels),
            list_size(slot.labels.len()),
            compared,
        )],
        (SlotTarget::Node(_), Some(ChoiceKind::Multi)) => {
            let (template_items, labels) = (slot.items.clone(), &slot.labels);
            let options = template_items
                .into_iter()
                .zip(labels)
                .map(|(b, l)| OptionItem {
                    label: l.clone(),
                    payload: OptionPayload::Template(b),
                })
                .collect::<Vec<_>>();
            let n = options.len();
            vec![make(
                WidgetType::CheckboxList,
                Domain::Options { options },
                list_size(n),
                None,
            )]
        }
        (SlotTarget::Node(_), None) => Vec::new(),
    }
}

/// Event types each chart supports.
pub fn chart_events(chart: ChartType) -> &'static [VisEvent] {
    match chart {
        ChartType::Bar => &[VisEvent::Click, VisEvent::MultiClick, VisEvent::BrushX],
        ChartType::Line => &[VisEvent::BrushX, VisEvent::Click],
        ChartType::Scatter => &[
            VisEvent::Click,
            VisEvent::MultiClick,
            VisEvent::BrushX,
            VisEvent::PanZoom,
        ],
        ChartType::Table => &[],
    }
}

/// A chart interaction together with the visualization candidate it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct VisCandidate {
    pub spec: VisInteractionSpec,
    pub source_tree: TreeId,
    /// Index into the source tree's visualization candidates.
    pub source_vis: usize,
}

/// Whether every literal can be produced by interacting with `col`.
pub fn contains_all(catalog: &Catalog, col: &SourceColumn, literals: &[Value]) -> bool {
    stats(catalog, col).is_some_and(|s| literals.iter().all(|v| s.may_contain(v)))
}

fn source_of<'a>(a: &'a TreeAnalysis, idx: Option<usize>) -> Option<&'a SourceColumn> {
    a.columns.get(idx?)?.source.as_ref()
}

/// Axes of a chart that can drive point events: (column index, is_y).
fn point_axes(v: &VisSpec) -> Vec<usize> {
    let mut out: Vec<usize> = v.encodings.x.into_iter().collect();
    if v.chart == ChartType::Scatter {
        out.extend(v.encodings.y);
    }
    out
}

/// Chart interactions that can drive `slot` given every tree's
/// visualization candidates. Sources must be other trees, except that
/// pan_zoom may come from the tree's own scatter.
pub fn candidate_vis_interactions(
    slot: &Slot,
    trees: &[(TreeAnalysis, Vec<VisSpec>)],
    catalog: &Catalog,
) -> Vec<VisCandidate> {
    let mut out = Vec::new();
    for (a, visses) in trees {
        if a.tree == slot.tree {
            continue;
        }
        for (k, v) in visses.iter().enumerate() {
            let events = chart_events(v.chart);
            let mut push = |event, column: usize| {
                out.push(VisCandidate {
                    spec: VisInteractionSpec {
                        id: interaction_id(slot),
                        event,
                        source: v.id.clone(),
                        tree: slot.tree,
                        targets: slot.target.nodes(),
                        column,
                        column_y: None,
                    },
                    source_tree: a.tree,
                    source_vis: k,
                });
            };
            match (&slot.target, slot.kind) {
                (SlotTarget::Node(_), Some(kind @ (ChoiceKind::Any | ChoiceKind::Subset))) => {
                    let event = if kind == ChoiceKind::Any {
                        VisEvent::Click
                    } else {
                        VisEvent::MultiClick
                    };
                    let (Some(lits), Some(cmp)) = (&slot.literals, &slot.compared) else {
                        continue;
                    };
                    if !events.contains(&event) {
                        continue;
                    }
                    for axis in point_axes(v) {
                        if source_of(a, Some(axis)) == Some(cmp) && contains_all(catalog, cmp, lits)
                        {
                            push(event, axis);
                        }
                    }
                }
                (SlotTarget::Range { column, .. }, _) => {
                    if events.contains(&VisEvent::BrushX)
                        && source_of(a, v.encodings.x) == Some(column)
                    {
                        push(VisEvent::BrushX, v.encodings.x.unwrap_or(0));
                    }
                }
                _ => {}
            }
        }
    }
    out
}

/// pan_zoom candidates binding two range slots to a scatter's x and y.
pub fn pan_zoom_candidates(
    x_slot: &Slot,
    y_slot: &Slot,
    trees: &[(TreeAnalysis, Vec<VisSpec>)],
) -> Vec<VisCandidate> {
    let (SlotTarget::Range { column: cx, .. }, SlotTarget::Range { column: cy, .. }) =
        (&x_slot.target, &y_slot.target)
    else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (a, visses) in trees {
        for (k, v) in visses.iter().enumerate() {
            if !chart_events(v.chart).contains(&VisEvent::PanZoom) {
                continue;
            }
            if source_of(a, v.encodings.x) == Some(cx) && source_of(a, v.encodings.y) == Some(cy) {
                let mut targets = x_slot.target.nodes();
                targets.extend(y_slot.target.nodes());
                out.push(VisCandidate {
                    spec: VisInteractionSpec {
                        id: interaction_id(x_slot),
                        event: VisEvent::PanZoom,
                        source: v.id.clone(),
                        tree: x_slot.tree,
                        targets,
                        column: v.encodings.x.unwrap_or(0),
                        column_y: v.encodings.y,
                    },
                    source_tree: a.tree,
                    source_vis: k,
                });
            }
        }
    }
    out
}
