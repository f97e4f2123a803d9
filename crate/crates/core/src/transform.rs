//! Expressiveness-preserving DiffTree rewrites: Cluster, Split, Pushdown.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::difftree::{
    enumerate_queries, result_schema, ChoiceKind, DiffForest, DiffNode, DiffTree, IdGen, Label,
    NodeId, TreeId,
};
use crate::relational::Catalog;
use crate::sql::check_query;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum TransformAction {
    Cluster { tree: TreeId, node: NodeId },
    Split { tree: TreeId },
    Pushdown { tree: TreeId, node: NodeId },
}

impl TransformAction {
    pub fn tree(&self) -> TreeId {
        match self {
            TransformAction::Cluster { tree, .. }
            | TransformAction::Split { tree }
            | TransformAction::Pushdown { tree, .. } => *tree,
        }
    }
}

impl fmt::Display for TransformAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformAction::Cluster { tree, node } => write!(f, "cluster({tree},{node})"),
            TransformAction::Split { tree } => write!(f, "split({tree})"),
            TransformAction::Pushdown { tree, node } => write!(f, "pushdown({tree},{node})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("unknown tree {0}")]
    UnknownTree(TreeId),
    #[error("node {0} is not an ANY node of the tree")]
    NotAny(NodeId),
    #[error("not applicable: {0}")]
    NotApplicable(String),
}

fn any_children(tree: &DiffTree, id: NodeId) -> Result<&[DiffNode], TransformError> {
    match tree.find(id) {
        Some(DiffNode::Choice {
            kind: ChoiceKind::Any,
            children,
            ..
        }) => Ok(children),
        _ => Err(TransformError::NotAny(id)),
    }
}

fn label_key(n: &DiffNode) -> String {
    match n {
        DiffNode::Static { label, .. } => serde_json::to_string(label).unwrap_or_default(),
        DiffNode::Choice { kind, .. } => format!("#{kind}"),
    }
}

/// Grouping key: label, arity and the multiset of child labels. Choice
/// children get `None`, which never groups.
fn signature(n: &DiffNode) -> Option<(String, usize, Vec<String>)> {
    match n {
        DiffNode::Static { children, .. } => {
            let mut kids: Vec<String> = children.iter().map(label_key).collect();
            kids.sort();
            Some((label_key(n), children.len(), kids))
        }
        DiffNode::Choice { .. } => None,
    }
}

fn cluster_groups(children: &[DiffNode]) -> Vec<Vec<usize>> {
    let mut groups: Vec<(Option<(String, usize, Vec<String>)>, Vec<usize>)> = Vec::new();
    for (i, c) in children.iter().enumerate() {
        let sig = signature(c);
        match groups.iter_mut().find(|(s, _)| s.is_some() && *s == sig) {
            Some((_, g)) => g.push(i),
            None => groups.push((sig, vec![i])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// Groups the children of ANY `id` by signature, nesting each group of two
/// or more under a fresh ANY.
pub fn apply_cluster(
    tree: &DiffTree,
    id: NodeId,
    ids: &mut IdGen,
) -> Result<DiffTree, TransformError> {
    let children = any_children(tree, id)?;
    let groups = cluster_groups(children);
    if groups.len() < 2 || groups.iter().all(|g| g.len() < 2) {
        return Err(TransformError::NotApplicable(format!(
            "children of {id} form no proper grouping"
        )));
    }
    let mut fresh = *ids;
    let new_children: Vec<DiffNode> = groups
        .iter()
        .map(|g| {
            if g.len() == 1 {
                children[g[0]].clone()
            } else {
                DiffNode::Choice {
                    id: fresh.node(),
                    kind: ChoiceKind::Any,
                    children: g.iter().map(|&i| children[i].clone()).collect(),
                }
            }
        })
        .collect();
    let root = tree
        .root
        .replace(id, &mut |_| DiffNode::Choice {
            id,
            kind: ChoiceKind::Any,
            children: new_children.clone(),
        })
        .ok_or(TransformError::NotAny(id))?;
    *ids = fresh;
    Ok(DiffTree { id: tree.id, root })
}

fn splittable(tree: &DiffTree) -> bool {
    match &tree.root {
        DiffNode::Choice {
            kind: ChoiceKind::Any,
            children,
            ..
        } => {
            children.len() >= 2
                && children
                    .iter()
                    .all(|c| matches!(c.kind(), None | Some(ChoiceKind::Any)))
        }
        _ => false,
    }
}

/// Replaces the tree by one tree per child of its root ANY.
pub fn apply_split(state: &DiffForest, tree_id: TreeId) -> Result<DiffForest, TransformError> {
    let pos = state
        .trees
        .iter()
        .position(|t| t.id == tree_id)
        .ok_or(TransformError::UnknownTree(tree_id))?;
    let tree = &state.trees[pos];
    if !splittable(tree) {
        return Err(TransformError::NotApplicable(format!(
            "root of {tree_id} is not a splittable ANY"
        )));
    }
    let mut ids = state.ids;
    let parts: Vec<DiffTree> = tree
        .root
        .children()
        .iter()
        .map(|c| DiffTree {
            id: ids.tree(),
            root: c.clone(),
        })
        .collect();
    let mut trees = state.trees.clone();
    trees.splice(pos..=pos, parts);
    Ok(DiffForest { trees, ids })
}

/// Anti-unifies alternatives: shared structure is kept, differing
/// positions become ANY (or OPT when some alternatives are empty).
fn generalize(alts: &[&DiffNode], ids: &mut IdGen) -> DiffNode {
    let mut distinct: Vec<&DiffNode> = Vec::new();
    for a in alts {
        if !distinct.iter().any(|d| d.same_shape(a)) {
            distinct.push(a);
        }
    }
    if distinct.len() == 1 {
        return distinct[0].clone();
    }
    let is_empty = |n: &DiffNode| matches!(n.label(), Some(Label::Empty));
    if distinct.iter().any(|n| is_empty(n)) {
        let present: Vec<&DiffNode> = distinct.iter().copied().filter(|n| !is_empty(n)).collect();
        let id = ids.node();
        let child = generalize(&present, ids);
        return DiffNode::Choice {
            id,
            kind: ChoiceKind::Opt,
            children: vec![child],
        };
    }
    let first = distinct[0];
    let uniform = match first {
        DiffNode::Static { label, children } => distinct.iter().all(|n| match n {
            DiffNode::Static {
                label: l,
                children: c,
            } => l == label && c.len() == children.len(),
            _ => false,
        }),
        _ => false,
    };
    if uniform {
        let arity = first.children().len();
        let children = (0..arity)
            .map(|i| {
                let column: Vec<&DiffNode> = distinct.iter().map(|n| &n.children()[i]).collect();
                generalize(&column, ids)
            })
            .collect();
        return DiffNode::Static {
            label: first.label().cloned().unwrap_or(Label::Empty),
            children,
        };
    }
    DiffNode::Choice {
        id: ids.node(),
        kind: ChoiceKind::Any,
        children: distinct.into_iter().cloned().collect(),
    }
}

/// Enumeration budget for the pushdown validity check.
pub const PUSHDOWN_CHECK_CAP: usize = 4096;

/// Lifts the shared label of ANY `id`'s children above it, recursively
/// anti-unifying their subtrees. Fails unless every resulting query is
/// valid against `catalog` and the result schema is unchanged.
pub fn apply_pushdown(
    tree: &DiffTree,
    id: NodeId,
    ids: &mut IdGen,
    catalog: &Catalog,
) -> Result<DiffTree, TransformError> {
    let children = any_children(tree, id)?;
    let label = children[0].label();
    let same = label.is_some()
        && children
            .iter()
            .all(|c| c.label() == label && c.children().len() == children[0].children().len());
    if !same {
        return Err(TransformError::NotApplicable(format!(
            "children of {id} differ in label or arity"
        )));
    }
    let mut fresh = *ids;
    let alts: Vec<&DiffNode> = children.iter().collect();
    let lifted = generalize(&alts, &mut fresh);
    let root = tree
        .root
        .replace(id, &mut |_| lifted.clone())
        .ok_or(TransformError::NotAny(id))?;
    let out = DiffTree { id: tree.id, root };

    let invalid = |m: String| TransformError::NotApplicable(m);
    let e = enumerate_queries(&out, PUSHDOWN_CHECK_CAP).map_err(|e| invalid(e.to_string()))?;
    for q in &e.queries {
        check_query(q, catalog).map_err(|err| invalid(format!("`{q}`: {err}")))?;
    }
    let before = result_schema(tree, catalog).map_err(|e| invalid(e.to_string()))?;
    let after = result_schema(&out, catalog).map_err(|e| invalid(e.to_string()))?;
    if before != after {
        return Err(invalid(format!(
            "result schema changes from {} to {}",
            before.named(),
            after.named()
        )));
    }
    *ids = fresh;
    Ok(out)
}

/// Applies `action` to a copy of `state`.
pub fn apply(
    state: &DiffForest,
    action: &TransformAction,
    catalog: &Catalog,
) -> Result<DiffForest, TransformError> {
    let tree_id = action.tree();
    let pos = state
        .trees
        .iter()
        .position(|t| t.id == tree_id)
        .ok_or(TransformError::UnknownTree(tree_id))?;
    let mut ids = state.ids;
    let new_tree = match action {
        TransformAction::Split { tree } => return apply_split(state, *tree),
        TransformAction::Cluster { node, .. } => apply_cluster(&state.trees[pos], *node, &mut ids)?,
        TransformAction::Pushdown { node, .. } => {
            apply_pushdown(&state.trees[pos], *node, &mut ids, catalog)?
        }
    };
    let mut trees = state.trees.clone();
    trees[pos] = new_tree;
    Ok(DiffForest { trees, ids })
}

fn any_ids(tree: &DiffTree) -> Vec<NodeId> {
    let mut out = Vec::new();
    tree.root.visit(&mut |n| {
        if let DiffNode::Choice {
            id,
            kind: ChoiceKind::Any,
            ..
        } = n
        {
            out.push(*id);
        }
    });
    out
}

/// Every action that succeeds on `state`, sorted by tree, node, variant.
pub fn applicable_actions(state: &DiffForest, catalog: &Catalog) -> Vec<TransformAction> {
    let mut out: Vec<(TreeId, NodeId, u8, TransformAction)> = Vec::new();
    for tree in &state.trees {
        for id in any_ids(tree) {
            let mut scratch = state.ids;
            if apply_cluster(tree, id, &mut scratch).is_ok() {
                out.push((
                    tree.id,
                    id,
                    0,
                    TransformAction::Cluster {
                        tree: tree.id,
                        node: id,
                    },
                ));
            }
            if tree.root.choice_id() == Some(id) && splittable(tree) {
                out.push((tree.id, id, 1, TransformAction::Split { tree: tree.id }));
            }
            let mut scratch = state.ids;
            if apply_pushdown(tree, id, &mut scratch, catalog).is_ok() {
                out.push((
                    tree.id,
                    id,
                    2,
                    TransformAction::Pushdown {
                        tree: tree.id,
                        node: id,
                    },
                ));
            }
        }
    }
    out.sort();
    out.into_iter().map(|(_, _, _, a)| a).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::difftree::{enumerate_queries, node_schema};
    use crate::relational::Table;
    use crate::sql::{parse_query, QueryAst};

    fn catalog() -> Catalog {
        let mut c = Catalog::new();
        c.insert(Table::from_csv_reader("T", "p,a,b\n1,1,4\n2,1,5\n2,2,5\n".as_bytes()).unwrap());
        c
    }

    fn running() -> Vec<QueryAst> {
        [
            "SELECT p, count(*) FROM T WHERE a = 1 GROUP BY p",
            "SELECT p, count(*) FROM T WHERE b = 2 GROUP BY p",
            "SELECT a, count(*) FROM T GROUP BY a",
        ]
        .iter()
        .map(|s| parse_query(s).unwrap())
        .collect()
    }

    fn queries(f: &DiffForest) -> Vec<QueryAst> {
        let mut out: Vec<QueryAst> = f
            .trees
            .iter()
            .flat_map(|t| enumerate_queries(t, 1000).unwrap().queries)
            .collect();
        out.sort();
        out.dedup();
        out
    }

    #[test]
    fn initial_actions() {
        let c = catalog();
        let s = DiffForest::initial(&running(), &c).unwrap();
        let acts = applicable_actions(&s, &c);
        let root = s.trees[0].root.choice_id().unwrap();
        assert_eq!(
            acts,
            vec![
                TransformAction::Cluster {
                    tree: TreeId(0),
                    node: root
                },
                TransformAction::Split { tree: TreeId(0) },
            ]
        );
    }

    #[test]
    fn cluster_split_pushdown() {
        let c = catalog();
        let s0 = DiffForest::initial(&running(), &c).unwrap();
        let root = s0.trees[0].root.choice_id().unwrap();
        let s1 = apply(
            &s0,
            &TransformAction::Cluster {
                tree: TreeId(0),
                node: root,
            },
            &c,
        )
        .unwrap();
        assert_eq!(queries(&s1), queries(&s0));
        let kids = s1.trees[0].root.children();
        assert_eq!(kids.len(), 2);
        assert_eq!(kids[0].kind(), Some(ChoiceKind::Any));
        assert_eq!(kids[0].children().len(), 2);

        let s2 = apply(&s1, &TransformAction::Split { tree: TreeId(0) }, &c).unwrap();
        assert_eq!(s2.trees.len(), 2);
        assert_eq!(queries(&s2), queries(&s0));

        let acts = applicable_actions(&s2, &c);
        let inner = s2.trees[0].root.choice_id().unwrap();
        assert!(acts.contains(&TransformAction::Pushdown {
            tree: s2.trees[0].id,
            node: inner
        }));
        let s3 = apply(
            &s2,
            &TransformAction::Pushdown {
                tree: s2.trees[0].id,
                node: inner,
            },
            &c,
        )
        .unwrap();
        let e = enumerate_queries(&s3.trees[0], 100).unwrap();
        assert_eq!(e.queries.len(), 4);
        let b1 = parse_query("SELECT p, count(*) FROM T WHERE b = 1 GROUP BY p").unwrap();
        assert!(e.queries.contains(&b1));
        let lit_any = s3.trees[0].choice_ids()[1];
        assert_eq!(
            node_schema(s3.trees[0].find(lit_any).unwrap())
                .unwrap()
                .to_string(),
            "<num>"
        );
        assert!(applicable_actions(&s3, &c).is_empty());
    }

    #[test]
    fn pushdown_makes_opt_for_missing_where() {
        let c = catalog();
        let qs: Vec<QueryAst> = [
            "SELECT p, count(*) FROM T WHERE a = 1 GROUP BY p",
            "SELECT p, count(*) FROM T GROUP BY p",
        ]
        .iter()
        .map(|s| parse_query(s).unwrap())
        .collect();
        let s = DiffForest::initial(&qs, &c).unwrap();
        let root = s.trees[0].root.choice_id().unwrap();
        let out = apply(
            &s,
            &TransformAction::Pushdown {
                tree: TreeId(0),
                node: root,
            },
            &c,
        )
        .unwrap();
        let t = &out.trees[0];
        let ids = t.choice_ids();
        assert_eq!(ids.len(), 1);
        assert_eq!(t.find(ids[0]).unwrap().kind(), Some(ChoiceKind::Opt));
        assert_eq!(queries(&out), queries(&s));
    }

    #[test]
    fn cluster_needs_a_group() {
        let c = catalog();
        let qs: Vec<QueryAst> = ["SELECT p FROM T WHERE a = 1", "SELECT p FROM T"]
            .iter()
            .map(|s| parse_query(s).unwrap())
            .collect();
        let s = DiffForest::initial(&qs, &c).unwrap();
        let root = s.trees[0].root.choice_id().unwrap();
        let mut ids = s.ids;
        assert!(matches!(
            apply_cluster(&s.trees[0], root, &mut ids),
            Err(TransformError::NotApplicable(_))
        ));
        assert_eq!(ids, s.ids);
    }

    #[test]
    fn choice_free_forest_has_no_actions() {
        let c = catalog();
        let s = DiffForest::initial(&running()[..1], &c).unwrap();
        assert!(applicable_actions(&s, &c).is_empty());
    }

    #[test]
    fn actions_do_not_mutate_inputs() {
        let c = catalog();
        let s = DiffForest::initial(&running(), &c).unwrap();
        let copy = s.clone();
        for a in applicable_actions(&s, &c) {
            let x = apply(&s, &a, &c).unwrap();
            let y = apply(&s, &a, &c).unwrap();
            assert_eq!(x, y);
        }
        assert_eq!(s, copy);
    }
}
