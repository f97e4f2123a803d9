use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::relational::Catalog;
use crate::sql::{check_query, QueryAst};

use super::ast::{to_ast, AstNode, Label};
use super::DiffError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreeId(pub u32);

impl fmt::Display for TreeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChoiceKind {
    Any,
    Opt,
    Multi,
    Subset,
}

impl fmt::Display for ChoiceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChoiceKind::Any => "ANY",
            ChoiceKind::Opt => "OPT",
            ChoiceKind::Multi => "MULTI",
            ChoiceKind::Subset => "SUBSET",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "SerialNode", try_from = "SerialNode")]
pub enum DiffNode {
    Static {
        label: Label,
        children: Vec<DiffNode>,
    },
    Choice {
        id: NodeId,
        kind: ChoiceKind,
        children: Vec<DiffNode>,
    },
}

/// Wire shape: `{"id", "kind", "label", "children"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SerialNode {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<NodeId>,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default)]
    pub children: Vec<SerialNode>,
}

impl From<DiffNode> for SerialNode {
    fn from(n: DiffNode) -> Self {
        match n {
            DiffNode::Static { label, children } => SerialNode {
                id: None,
                kind: "static".into(),
                label: Some(label),
                children: children.into_iter().map(Into::into).collect(),
            },
            DiffNode::Choice { id, kind, children } => SerialNode {
                id: Some(id),
                kind: match kind {
                    ChoiceKind::Any => "any",
                    ChoiceKind::Opt => "opt",
                    ChoiceKind::Multi => "multi",
                    ChoiceKind::Subset => "subset",
                }
                .into(),
                label: None,
                children: children.into_iter().map(Into::into).collect(),
            },
        }
    }
}

impl TryFrom<SerialNode> for DiffNode {
    type Error = String;

    fn try_from(s: SerialNode) -> Result<Self, String> {
        let children = s
            .children
            .into_iter()
            .map(DiffNode::try_from)
            .collect::<Result<Vec<_>, _>>()?;
        let kind = match s.kind.as_str() {
            "static" => {
                let label = s.label.ok_or("static node without label")?;
                return Ok(DiffNode::Static { label, children });
            }
            "any" => ChoiceKind::Any,
            "opt" => ChoiceKind::Opt,
            "multi" => ChoiceKind::Multi,
            "subset" => ChoiceKind::Subset,
            other => return Err(format!("unknown node kind `{other}`")),
        };
        let id = s.id.ok_or("choice node without id")?;
        let node = DiffNode::Choice { id, kind, children };
        node.check_arity().map_err(|e| e.to_string())?;
        Ok(node)
    }
}

impl DiffNode {
    pub fn from_ast(ast: &AstNode) -> Self {
        DiffNode::Static {
            label: ast.label.clone(),
            children: ast.children.iter().map(DiffNode::from_ast).collect(),
        }
    }

    pub fn leaf(label: Label) -> Self {
        DiffNode::Static {
            label,
            children: Vec::new(),
        }
    }

    pub fn children(&self) -> &[DiffNode] {
        match self {
            DiffNode::Static { children, .. } | DiffNode::Choice { children, .. } => children,
        }
    }

    pub fn label(&self) -> Option<&Label> {
        match self {
            DiffNode::Static { label, .. } => Some(label),
            DiffNode::Choice { .. } => None,
        }
    }

    pub fn choice_id(&self) -> Option<NodeId> {
        match self {
            DiffNode::Choice { id, .. } => Some(*id),
            DiffNode::Static { .. } => None,
        }
    }

    pub fn kind(&self) -> Option<ChoiceKind> {
        match self {
            DiffNode::Choice { kind, .. } => Some(*kind),
            DiffNode::Static { .. } => None,
        }
    }

    /// Choice nodes and their ancestors are dynamic.
    pub fn is_dynamic(&self) -> bool {
        match self {
            DiffNode::Choice { .. } => true,
            DiffNode::Static { children, .. } => children.iter().any(DiffNode::is_dynamic),
        }
    }

    /// The concrete AST when the subtree contains no choice node.
    pub fn to_ast(&self) -> Option<AstNode> {
        match self {
            DiffNode::Static { label, children } => Some(AstNode {
                label: label.clone(),
                children: children
                    .iter()
                    .map(DiffNode::to_ast)
                    .collect::<Option<_>>()?,
            }),
            DiffNode::Choice { .. } => None,
        }
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a DiffNode)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Choice node ids in pre-order.
    pub fn choice_ids(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        self.visit(&mut |n| out.extend(n.choice_id()));
        out
    }

    pub fn find(&self, id: NodeId) -> Option<&DiffNode> {
        if self.choice_id() == Some(id) {
            return Some(self);
        }
        self.children().iter().find_map(|c| c.find(id))
    }

    /// Replaces the choice node `id` with the result of `f`. Returns `None`
    /// when `id` does not occur.
    pub fn replace(
        &self,
        id: NodeId,
        f: &mut dyn FnMut(&DiffNode) -> DiffNode,
    ) -> Option<DiffNode> {
        if self.choice_id() == Some(id) {
            return Some(f(self));
        }
        let children = self.children();
        for (i, c) in children.iter().enumerate() {
            if let Some(new) = c.replace(id, f) {
                let mut kids = children.to_vec();
                kids[i] = new;
                return Some(match self {
                    DiffNode::Static { label, .. } => DiffNode::Static {
                        label: label.clone(),
                        children: kids,
                    },
                    DiffNode::Choice { id, kind, .. } => DiffNode::Choice {
                        id: *id,
                        kind: *kind,
                        children: kids,
                    },
                });
            }
        }
        None
    }

    pub fn check_arity(&self) -> Result<(), DiffError> {
        if let DiffNode::Choice { id, kind, children } = self {
            let ok = match kind {
                ChoiceKind::Any | ChoiceKind::Subset => children.len() >= 2,
                ChoiceKind::Opt | ChoiceKind::Multi => children.len() == 1,
            };
            if !ok {
                return Err(DiffError::Malformed(format!(
                    "{kind} node {id} has {} children",
                    children.len()
                )));
            }
        }
        self.children().iter().try_for_each(DiffNode::check_arity)
    }

    /// Structure with every choice id relabeled by pre-order position.
    pub fn canonical(&self) -> DiffNode {
        fn go(n: &DiffNode, next: &mut u32) -> DiffNode {
            match n {
                DiffNode::Static { label, children } => DiffNode::Static {
                    label: label.clone(),
                    children: children.iter().map(|c| go(c, next)).collect(),
                },
                DiffNode::Choice { kind, children, .. } => {
                    let id = NodeId(*next);
                    *next += 1;
                    DiffNode::Choice {
                        id,
                        kind: *kind,
                        children: children.iter().map(|c| go(c, next)).collect(),
                    }
                }
            }
        }
        go(self, &mut 0)
    }

    /// Equality up to choice-node ids.
    pub fn same_shape(&self, other: &DiffNode) -> bool {
        match (self, other) {
            (
                DiffNode::Static {
                    label: a,
                    children: ca,
                },
                DiffNode::Static {
                    label: b,
                    children: cb,
                },
            ) => a == b && ca.len() == cb.len() && ca.iter().zip(cb).all(|(x, y)| x.same_shape(y)),
            (
                DiffNode::Choice {
                    kind: a,
                    children: ca,
                    ..
                },
                DiffNode::Choice {
                    kind: b,
                    children: cb,
                    ..
                },
            ) => a == b && ca.len() == cb.len() && ca.iter().zip(cb).all(|(x, y)| x.same_shape(y)),
            _ => false,
        }
    }
}

impl fmt::Display for DiffNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffNode::Static { label, children } => {
                let name = serde_json::to_value(label)
                    .ok()
                    .and_then(|v| v.get("type").and_then(|t| t.as_str()).map(str::to_string))
                    .unwrap_or_default();
                match label {
                    Label::Column { name: c, .. } => write!(f, "{c}")?,
                    Label::Literal { value } => write!(f, "{value}")?,
                    Label::From { table } => write!(f, "from {table}")?,
                    Label::Cmp { op } => write!(f, "{}", op.symbol())?,
                    _ => f.write_str(&name)?,
                }
                if !children.is_empty() {
                    f.write_str("(")?;
                    for (i, c) in children.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{c}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
            DiffNode::Choice { id, kind, children } => {
                write!(f, "{kind}#{}[", id.0)?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiffTree {
    pub id: TreeId,
    pub root: DiffNode,
}

impl DiffTree {
    pub fn choice_ids(&self) -> Vec<NodeId> {
        self.root.choice_ids()
    }

    pub fn find(&self, id: NodeId) -> Option<&DiffNode> {
        self.root.find(id)
    }

    pub fn is_static(&self) -> bool {
        !self.root.is_dynamic()
    }

    /// Dynamic nodes in pre-order.
    pub fn dynamic_nodes(&self) -> Vec<&DiffNode> {
        let mut out = Vec::new();
        self.root.visit(&mut |n| {
            if n.is_dynamic() {
                out.push(n);
            }
        });
        out
    }
}

/// Monotone id source; ids are never reused within a forest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct IdGen {
    pub next_node: u32,
    pub next_tree: u32,
}

impl IdGen {
    pub fn node(&mut self) -> NodeId {
        let id = NodeId(self.next_node);
        self.next_node += 1;
        id
    }

    pub fn tree(&mut self) -> TreeId {
        let id = TreeId(self.next_tree);
        self.next_tree += 1;
        id
    }
}

/// One search state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiffForest {
    pub trees: Vec<DiffTree>,
    pub ids: IdGen,
}

impl DiffForest {
    /// Partitions the log into union-compatible groups (first-occurrence
    /// order) and merges each group into one tree.
    pub fn initial(queries: &[QueryAst], catalog: &Catalog) -> Result<Self, DiffError> {
        let mut groups: Vec<(Vec<crate::relational::ColumnType>, Vec<QueryAst>)> = Vec::new();
        for q in queries {
            let types = check_query(q, catalog)?.types();
            match groups.iter_mut().find(|(t, _)| *t == types) {
                Some((_, g)) => g.push(q.clone()),
                None => groups.push((types, vec![q.clone()])),
            }
        }
        let mut ids = IdGen::default();
        let trees = groups
            .into_iter()
            .map(|(_, g)| merge_with(&g, catalog, &mut ids))
            .collect::<Result<_, _>>()?;
        Ok(Self { trees, ids })
    }

    pub fn tree(&self, id: TreeId) -> Option<&DiffTree> {
        self.trees.iter().find(|t| t.id == id)
    }

    pub fn choice_count(&self) -> usize {
        self.trees.iter().map(|t| t.choice_ids().len()).sum()
    }

    /// Serialization with tree and node ids relabeled by position, so that
    /// states reached by different action orders compare equal.
    pub fn canonical_key(&self) -> String {
        let trees: Vec<DiffNode> = self.trees.iter().map(|t| t.root.canonical()).collect();
        serde_json::to_string(&trees).unwrap_or_default()
    }
}

fn merge_with(
    asts: &[QueryAst],
    catalog: &Catalog,
    ids: &mut IdGen,
) -> Result<DiffTree, DiffError> {
    let first = asts.first().ok_or(DiffError::EmptyInput)?;
    let types = check_query(first, catalog)?.types();
    let mut distinct: Vec<&QueryAst> = Vec::new();
    let mut seen = BTreeSet::new();
    for q in asts {
        if check_query(q, catalog)?.types() != types {
            return Err(DiffError::SchemaIncompatible(format!(
                "`{q}` is not union compatible with `{first}`"
            )));
        }
        if seen.insert(q) {
            distinct.push(q);
        }
    }
    let tree = ids.tree();
    let root = if distinct.len() == 1 {
        DiffNode::from_ast(&to_ast(distinct[0]))
    } else {
        DiffNode::Choice {
            id: ids.node(),
            kind: ChoiceKind::Any,
            children: distinct
                .iter()
                .map(|q| DiffNode::from_ast(&to_ast(q)))
                .collect(),
        }
    };
    Ok(DiffTree { id: tree, root })
}

/// Merges queries into one tree: the query itself when all are equal, an
/// ANY over the distinct queries otherwise.
pub fn merge_asts(asts: &[QueryAst], catalog: &Catalog) -> Result<DiffTree, DiffError> {
    merge_with(asts, catalog, &mut IdGen::default())
}
