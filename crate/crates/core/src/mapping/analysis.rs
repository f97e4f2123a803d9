//! Per-tree facts the mapping rules consume: output columns with their
//! source columns, and interaction slots over choice nodes.

use serde::{Deserialize, Serialize};

use crate::difftree::{
    enumerate_queries, result_schema, AstNode, Binding, ChoiceKind, DiffError, DiffNode, DiffTree,
    Label, NodeId, TreeId,
};
use crate::relational::{Catalog, ColumnStats, ColumnType, Value};
use crate::sql::{render_literal, render_sql, CmpOp, SelectExpr};

/// Queries inspected to decide per-column facts.
const ANALYSIS_ENUM_CAP: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceColumn {
    pub table: String,
    pub column: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Quantitative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputColumn {
    pub name: Option<String>,
    pub ty: ColumnType,
    pub kind: ColumnKind,
    /// Set when every query of the tree projects the same table column here.
    pub source: Option<SourceColumn>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SlotTarget {
    Node(NodeId),
    Range {
        low: NodeId,
        high: NodeId,
        column: SourceColumn,
    },
}

impl SlotTarget {
    pub fn nodes(&self) -> Vec<NodeId> {
        match self {
            SlotTarget::Node(id) => vec![*id],
            SlotTarget::Range { low, high, .. } => vec![*low, *high],
        }
    }
}

/// One unit of variation that receives exactly one interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    pub tree: TreeId,
    pub target: SlotTarget,
    /// `None` for ranges.
    pub kind: Option<ChoiceKind>,
    /// Option labels, one per child (ANY/SUBSET) or per template
    /// instantiation (MULTI).
    pub labels: Vec<String>,
    /// Literal values of the children when all of them are literals.
    pub literals: Option<Vec<Value>>,
    /// Table column the literals are compared against.
    pub compared: Option<SourceColumn>,
    /// Template bindings offered for MULTI, aligned with `labels`.
    pub items: Vec<Binding>,
}

#[derive(Debug, Clone)]
pub struct TreeAnalysis {
    pub tree: TreeId,
    pub columns: Vec<OutputColumn>,
    pub slots: Vec<Slot>,
}

pub fn stats<'a>(catalog: &'a Catalog, c: &SourceColumn) -> Option<&'a ColumnStats> {
    catalog.column(&c.table, &c.column).map(|c| &c.stats)
}

fn literal_of(n: &DiffNode) -> Option<&Value> {
    match n {
        DiffNode::Static {
            label: Label::Literal { value },
            children,
        } if children.is_empty() => Some(value),
        _ => None,
    }
}

fn column_of(n: &DiffNode, table: Option<&str>) -> Option<SourceColumn> {
    match n {
        DiffNode::Static {
            label: Label::Column { table: t, name },
            ..
        } => {
            let table = table?;
            if t.as_deref().is_some_and(|t| t != table) {
                return None;
            }
            Some(SourceColumn {
                table: table.to_string(),
                column: name.clone(),
            })
        }
        _ => None,
    }
}

/// ANY node whose children are all numeric literals: (id, values).
fn literal_any(n: &DiffNode) -> Option<(NodeId, Vec<f64>)> {
    match n {
        DiffNode::Choice {
            id,
            kind: ChoiceKind::Any,
            children,
        } => {
            let vals = children
                .iter()
                .map(|c| literal_of(c).and_then(Value::as_num))
                .collect::<Option<Vec<f64>>>()?;
            Some((*id, vals))
        }
        _ => None,
    }
}

fn range_ok(catalog: &Catalog, col: &SourceColumn, vals: &[f64]) -> bool {
    let Some(s) = stats(catalog, col) else {
        return false;
    };
    catalog.column(&col.table, &col.column).map(|c| c.ty) == Some(ColumnType::Num)
        && vals.iter().all(|v| s.range_contains(*v))
}

fn bound_cmp(n: &DiffNode, table: Option<&str>) -> Option<(CmpOp, SourceColumn, NodeId, Vec<f64>)> {
    match n {
        DiffNode::Static {
            label: Label::Cmp { op },
            children,
        } if children.len() == 2 => {
            let col = column_of(&children[0], table)?;
            let (id, vals) = literal_any(&children[1])?;
            Some((*op, col, id, vals))
        }
        _ => None,
    }
}

/// Range predicate over one column with both bounds varying.
fn detect_range(n: &DiffNode, table: Option<&str>, catalog: &Catalog) -> Option<SlotTarget> {
    let DiffNode::Static { label, children } = n else {
        return None;
    };
    let (column, low, lv, high, hv) = match label {
        Label::Between if children.len() == 3 => {
            let col = column_of(&children[0], table)?;
            let (l, lv) = literal_any(&children[1])?;
            let (h, hv) = literal_any(&children[2])?;
            (col, l, lv, h, hv)
        }
        Label::And if children.len() == 2 => {
            let a = bound_cmp(&children[0], table)?;
            let b = bound_cmp(&children[1], table)?;
            let lower = |op: CmpOp| matches!(op, CmpOp::Ge | CmpOp::Gt);
            let upper = |op: CmpOp| matches!(op, CmpOp::Le | CmpOp::Lt);
            let (lo, hi) = if lower(a.0) && upper(b.0) {
                (a, b)
            } else if upper(a.0) && lower(b.0) {
                (b, a)
            } else {
                return None;
            };
            if lo.1 != hi.1 {
                return None;
            }
            (lo.1, lo.2, lo.3, hi.2, hi.3)
        }
        _ => return None,
    };
    (range_ok(catalog, &column, &lv) && range_ok(catalog, &column, &hv))
        .then_some(SlotTarget::Range { low, high, column })
}

pub(crate) fn node_label(n: &DiffNode) -> String {
    if let Some(v) = literal_of(n) {
        return match v {
            Value::Str(s) => s.clone(),
            Value::Num(_) => v.to_string(),
        };
    }
    if let DiffNode::Static {
        label: Label::Column { name, .. },
        ..
    } = n
    {
        return name.clone();
    }
    if let Some(q) = n.to_ast().and_then(|a| crate::difftree::from_ast(&a).ok()) {
        return render_sql(&q);
    }
    n.to_string()
}

fn ast_label(seq: &[AstNode]) -> String {
    let parts: Vec<String> = seq
        .iter()
        .map(|a| match &a.label {
            Label::Literal { value } => render_literal(value),
            Label::Column { name, .. } => name.clone(),
            _ => DiffNode::from_ast(a).to_string(),
        })
        .collect();
    parts.join(", ")
}

struct Walker<'a> {
    catalog: &'a Catalog,
    tree: TreeId,
    slots: Vec<Slot>,
}

impl Walker<'_> {
    fn walk(&mut self, n: &DiffNode, table: Option<&str>, compared: Option<&SourceColumn>) {
        match n {
            DiffNode::Static { label, children } => {
                if let Some(target) = detect_range(n, table, self.catalog) {
                    self.slots.push(Slot {
                        tree: self.tree,
                        target,
                        kind: None,
                        labels: Vec::new(),
                        literals: None,
                        compared: None,
                        items: Vec::new(),
                    });
                    return;
                }
                let table = if *label == Label::Query {
                    match children.get(1) {
                        Some(DiffNode::Static {
                            label: Label::From { table },
                            ..
                        }) => Some(table.as_str()),
                        _ => None,
                    }
                } else {
                    table
                };
                let ctx_column = match label {
                    Label::Cmp { .. } => children.iter().find_map(|c| column_of(c, table)),
                    Label::Between | Label::InList => {
                        children.first().and_then(|c| column_of(c, table))
                    }
                    _ => None,
                };
                for c in children {
                    self.walk(c, table, ctx_column.as_ref());
                }
            }
            DiffNode::Choice { id, kind, children } => {
                let literals: Option<Vec<Value>> =
                    children.iter().map(|c| literal_of(c).cloned()).collect();
                let mut items = Vec::new();
                let labels = match kind {
                    ChoiceKind::Any | ChoiceKind::Subset => {
                        children.iter().map(node_label).collect()
                    }
                    ChoiceKind::Opt => vec![node_label(&children[0])],
                    ChoiceKind::Multi => template_items(&children[0])
                        .into_iter()
                        .map(|(b, seq)| {
                            items.push(b);
                            ast_label(&seq)
                        })
                        .collect(),
                };
                self.slots.push(Slot {
                    tree: self.tree,
                    target: SlotTarget::Node(*id),
                    kind: Some(*kind),
                    labels,
                    literals: literals
                        .filter(|_| matches!(kind, ChoiceKind::Any | ChoiceKind::Subset)),
                    compared: compared.cloned(),
                    items,
                });
                if *kind != ChoiceKind::Multi {
                    for c in children {
                        self.walk(c, table, compared);
                    }
                }
            }
        }
    }
}

/// Instantiations of a MULTI template offered as checkbox items.
pub const MULTI_ITEM_CAP: usize = 64;

/// Bindings of the template's own choice nodes with the sequence each
/// produces, at most [`MULTI_ITEM_CAP`] of them.
pub fn template_items(template: &DiffNode) -> Vec<(Binding, Vec<AstNode>)> {
    let mut out = Vec::new();
    for b in crate::difftree::node_bindings(template, MULTI_ITEM_CAP) {
        if let Ok(seq) = crate::difftree::expand(template, &b) {
            if !out.iter().any(|(_, s)| *s == seq) {
                out.push((b, seq));
            }
        }
    }
    out
}

fn output_columns(tree: &DiffTree, catalog: &Catalog) -> Result<Vec<OutputColumn>, DiffError> {
    let schema = result_schema(tree, catalog)?;
    let queries = enumerate_queries(tree, ANALYSIS_ENUM_CAP)?.queries;
    let mut out = Vec::with_capacity(schema.columns.len());
    for (i, col) in schema.columns.iter().enumerate() {
        let mut source: Option<Option<SourceColumn>> = None;
        let mut kinds = Vec::new();
        for q in &queries {
            let item = &q.select[i];
            let here = match &item.expr {
                SelectExpr::Column(c) => Some(SourceColumn {
                    table: q.from.clone(),
                    column: c.name.clone(),
                }),
                SelectExpr::Agg(_) => None,
            };
            let kind = match &here {
                Some(sc) => {
                    let low = stats(catalog, sc).is_some_and(|s| s.low_cardinality);
                    if col.ty == ColumnType::Str || low {
                        ColumnKind::Categorical
                    } else {
                        ColumnKind::Quantitative
                    }
                }
                None => ColumnKind::Quantitative,
            };
            kinds.push(kind);
            source = Some(match source {
                None => here,
                Some(prev) if prev == here => prev,
                Some(_) => None,
            });
        }
        let kind = if col.ty == ColumnType::Str {
            ColumnKind::Categorical
        } else if !kinds.is_empty() && kinds.iter().all(|k| *k == ColumnKind::Categorical) {
            ColumnKind::Categorical
        } else {
            ColumnKind::Quantitative
        };
        out.push(OutputColumn {
            name: col.name.clone(),
            ty: col.ty,
            kind,
            source: source.flatten(),
        });
    }
    Ok(out)
}

pub fn analyze(tree: &DiffTree, catalog: &Catalog) -> Result<TreeAnalysis, DiffError> {
    let mut w = Walker {
        catalog,
        tree: tree.id,
        slots: Vec::new(),
    };
    w.walk(&tree.root, None, None);
    Ok(TreeAnalysis {
        tree: tree.id,
        columns: output_columns(tree, catalog)?,
        slots: w.slots,
    })
}
