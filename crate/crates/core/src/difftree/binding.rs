use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::relational::Value;
use crate::sql::QueryAst;

use super::ast::{from_ast, to_ast, AstNode, Label};
use super::tree::{ChoiceKind, DiffNode, DiffTree, NodeId};
use super::DiffError;

/// Selection for one choice node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Index(usize),
    /// ANY over literals only: a literal outside the listed children, as
    /// produced by continuous widgets and chart interactions.
    Value(Value),
    Present(bool),
    Subset(Vec<usize>),
    Repeat(Vec<Binding>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Binding(pub BTreeMap<NodeId, Selection>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, id: NodeId, s: Selection) -> Self {
        self.0.insert(id, s);
        self
    }

    pub fn get(&self, id: NodeId) -> Option<&Selection> {
        self.0.get(&id)
    }

    pub fn insert(&mut self, id: NodeId, s: Selection) {
        self.0.insert(id, s);
    }

    fn merged(&self, other: &Binding) -> Binding {
        let mut out = self.clone();
        out.0.extend(other.0.iter().map(|(k, v)| (*k, v.clone())));
        out
    }
}

fn all_ids(node: &DiffNode) -> BTreeSet<NodeId> {
    node.choice_ids().into_iter().collect()
}

fn push_expansion(label: &Label, out: &mut Vec<AstNode>, part: Vec<AstNode>) {
    if label.is_list() {
        out.extend(part.into_iter().filter(|n| !n.is_empty()));
    } else {
        out.extend(part);
    }
}

/// Expands `node` under `b` into the sequence of AST nodes it contributes to
/// its parent.
pub(crate) fn expand(node: &DiffNode, b: &Binding) -> Result<Vec<AstNode>, DiffError> {
    match node {
        DiffNode::Static { label, children } => {
            let mut kids = Vec::with_capacity(children.len());
            for c in children {
                push_expansion(label, &mut kids, expand(c, b)?);
            }
            Ok(vec![AstNode::new(label.clone(), kids)])
        }
        DiffNode::Choice { id, kind, children } => {
            let sel = b.get(*id).ok_or(DiffError::IncompleteBinding(*id))?;
            let out_of_range = |index: usize| DiffError::IndexOutOfRange {
                node: *id,
                index,
                len: children.len(),
            };
            let wrong = || DiffError::WrongSelection {
                node: *id,
                kind: *kind,
            };
            match (kind, sel) {
                (ChoiceKind::Any, Selection::Index(i)) => {
                    expand(children.get(*i).ok_or_else(|| out_of_range(*i))?, b)
                }
                (ChoiceKind::Any, Selection::Value(v)) => {
                    let literal_any = children.iter().all(|c| {
                        matches!(c.label(), Some(Label::Literal { .. })) && children_empty(c)
                    });
                    let same_type = children
                        .iter()
                        .filter_map(|c| c.label().and_then(Label::literal))
                        .all(|l| l.column_type() == v.column_type());
                    if !literal_any || !same_type {
                        return Err(wrong());
                    }
                    Ok(vec![AstNode::leaf(Label::Literal { value: v.clone() })])
                }
                (ChoiceKind::Opt, Selection::Present(true)) => expand(&children[0], b),
                (ChoiceKind::Opt, Selection::Present(false)) => Ok(vec![AstNode::empty()]),
                (ChoiceKind::Subset, Selection::Subset(idx)) => {
                    if idx.is_empty() {
                        return Err(DiffError::EmptySubset(*id));
                    }
                    if idx.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(wrong());
                    }
                    let mut out = Vec::new();
                    for i in idx {
                        out.extend(expand(
                            children.get(*i).ok_or_else(|| out_of_range(*i))?,
                            b,
                        )?);
                    }
                    Ok(out)
                }
                (ChoiceKind::Multi, Selection::Repeat(reps)) => {
                    if reps.is_empty() {
                        return Err(DiffError::EmptyRepeat(*id));
                    }
                    let mut out = Vec::new();
                    for r in reps {
                        out.extend(expand(&children[0], &b.merged(r))?);
                    }
                    Ok(out)
                }
                _ => Err(wrong()),
            }
        }
    }
}

fn children_empty(n: &DiffNode) -> bool {
    n.children().is_empty()
}

/// Substitutes the binding and converts the result to a query.
pub fn bind(tree: &DiffTree, b: &Binding) -> Result<QueryAst, DiffError> {
    let ids = all_ids(&tree.root);
    fn check_known(b: &Binding, ids: &BTreeSet<NodeId>) -> Result<(), DiffError> {
        for (k, v) in &b.0 {
            if !ids.contains(k) {
                return Err(DiffError::UnknownNode(*k));
            }
            if let Selection::Repeat(reps) = v {
                for r in reps {
                    check_known(r, ids)?;
                }
            }
        }
        Ok(())
    }
    check_known(b, &ids)?;
    bind_unchecked(&tree.root, b)
}

pub(crate) fn bind_unchecked(root: &DiffNode, b: &Binding) -> Result<QueryAst, DiffError> {
    let mut seq = expand(root, b)?;
    if seq.len() != 1 {
        return Err(DiffError::InvalidAst(format!(
            "tree expands to {} nodes at the root",
            seq.len()
        )));
    }
    from_ast(&seq.remove(0))
}

/// Witness cap for the matcher.
pub const WITNESS_CAP: usize = 64;

struct Matcher {
    cap: usize,
}

impl Matcher {
    /// All ways `nodes` can produce exactly `targets`, as bindings.
    fn seq(&self, nodes: &[DiffNode], targets: &[AstNode], list: bool) -> Vec<Binding> {
        let Some((first, rest)) = nodes.split_first() else {
            return if targets.is_empty() {
                vec![Binding::new()]
            } else {
                Vec::new()
            };
        };
        let mut out = Vec::new();
        for (used, b) in self.prefix(first, targets, list) {
            for b2 in self.seq(rest, &targets[used..], list) {
                out.push(b.merged(&b2));
                if out.len() >= self.cap {
                    return out;
                }
            }
        }
        out
    }

    /// Ways `node` can produce a prefix of `targets`: (consumed, binding).
    fn prefix(&self, node: &DiffNode, targets: &[AstNode], list: bool) -> Vec<(usize, Binding)> {
        match node {
            DiffNode::Static { label, children } => match targets.first() {
                Some(t) if t.label == *label => self
                    .seq(children, &t.children, label.is_list())
                    .into_iter()
                    .map(|b| (1, b))
                    .collect(),
                _ => Vec::new(),
            },
            DiffNode::Choice { id, kind, children } => {
                let mut out = Vec::new();
                match kind {
                    ChoiceKind::Any => {
                        for (i, c) in children.iter().enumerate() {
                            for (used, b) in self.prefix(c, targets, list) {
                                out.push((used, b.with(*id, Selection::Index(i))));
                            }
                        }
                    }
                    ChoiceKind::Opt => {
                        for (used, b) in self.prefix(&children[0], targets, list) {
                            out.push((used, b.with(*id, Selection::Present(true))));
                        }
                        if list {
                            out.push((0, Binding::new().with(*id, Selection::Present(false))));
                        } else if targets.first().is_some_and(AstNode::is_empty) {
                            out.push((1, Binding::new().with(*id, Selection::Present(false))));
                        }
                    }
                    ChoiceKind::Subset => {
                        self.subset(
                            children,
                            0,
                            targets,
                            list,
                            Vec::new(),
                            Binding::new(),
                            0,
                            &mut |used, idx, b| {
                                out.push((used, b.with(*id, Selection::Subset(idx))));
                            },
                        );
                    }
                    ChoiceKind::Multi => {
                        self.repeat(
                            &children[0],
                            targets,
                            list,
                            0,
                            Vec::new(),
                            &mut |used, reps| {
                                out.push((used, Binding::new().with(*id, Selection::Repeat(reps))));
                            },
                        );
                    }
                }
                out
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn subset(
        &self,
        children: &[DiffNode],
        i: usize,
        targets: &[AstNode],
        list: bool,
        chosen: Vec<usize>,
        acc: Binding,
        used: usize,
        emit: &mut dyn FnMut(usize, Vec<usize>, Binding),
    ) {
        if i == children.len() {
            if !chosen.is_empty() {
                emit(used, chosen, acc);
            }
            return;
        }
        for (u, b) in self.prefix(&children[i], &targets[used..], list) {
            let mut c = chosen.clone();
            c.push(i);
            self.subset(
                children,
                i + 1,
                targets,
                list,
                c,
                acc.merged(&b),
                used + u,
                emit,
            );
        }
        self.subset(children, i + 1, targets, list, chosen, acc, used, emit);
    }

    fn repeat(
        &self,
        template: &DiffNode,
        targets: &[AstNode],
        list: bool,
        used: usize,
        reps: Vec<Binding>,
        emit: &mut dyn FnMut(usize, Vec<Binding>),
    ) {
        if !reps.is_empty() {
            emit(used, reps.clone());
        }
        for (u, b) in self.prefix(template, &targets[used..], list) {
            if u == 0 {
                continue;
            }
            let mut r = reps.clone();
            r.push(b);
            self.repeat(template, targets, list, used + u, r, emit);
        }
    }
}

/// Every binding (up to `cap`) under which `tree` yields `q`.
pub fn witnesses(tree: &DiffTree, q: &QueryAst, cap: usize) -> Vec<Binding> {
    let target = to_ast(q);
    let m = Matcher { cap: cap.max(1) };
    let mut out: Vec<Binding> = m
        .seq(
            std::slice::from_ref(&tree.root),
            std::slice::from_ref(&target),
            false,
        )
        .into_iter()
        .filter(|b| bind_unchecked(&tree.root, b).as_ref() == Ok(q))
        .collect();
    out.dedup();
    out
}

/// A witness binding when `tree` can express `q`.
pub fn expresses(tree: &DiffTree, q: &QueryAst) -> Option<Binding> {
    witnesses(tree, q, 1).into_iter().next()
}

fn product(parts: &[Vec<Binding>], cap: usize) -> Vec<Binding> {
    let mut acc = vec![Binding::new()];
    for p in parts {
        let mut next = Vec::new();
        'outer: for a in &acc {
            for b in p {
                next.push(a.merged(b));
                if next.len() >= cap {
                    break 'outer;
                }
            }
        }
        acc = next;
    }
    acc
}

/// Complete bindings for the choice nodes reachable in `node`, at most `cap`.
pub fn node_bindings(node: &DiffNode, cap: usize) -> Vec<Binding> {
    let cap = cap.max(1);
    match node {
        DiffNode::Static { children, .. } => {
            let parts: Vec<Vec<Binding>> = children.iter().map(|c| node_bindings(c, cap)).collect();
            product(&parts, cap)
        }
        DiffNode::Choice { id, kind, children } => {
            let mut out = Vec::new();
            match kind {
                ChoiceKind::Any => {
                    for (i, c) in children.iter().enumerate() {
                        out.extend(
                            node_bindings(c, cap)
                                .into_iter()
                                .map(|b| b.with(*id, Selection::Index(i))),
                        );
                    }
                }
                ChoiceKind::Opt => {
                    out.extend(
                        node_bindings(&children[0], cap)
                            .into_iter()
                            .map(|b| b.with(*id, Selection::Present(true))),
                    );
                    out.push(Binding::new().with(*id, Selection::Present(false)));
                }
                ChoiceKind::Subset => {
                    let n = children.len().min(16);
                    for mask in 1u32..(1 << n) {
                        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
                        let parts: Vec<Vec<Binding>> = idx
                            .iter()
                            .map(|&i| node_bindings(&children[i], cap))
                            .collect();
                        out.extend(
                            product(&parts, cap)
                                .into_iter()
                                .map(|b| b.with(*id, Selection::Subset(idx.clone()))),
                        );
                        if out.len() >= cap {
                            break;
                        }
                    }
                }
                ChoiceKind::Multi => {
                    let one = node_bindings(&children[0], cap);
                    for k in 1..=super::enumerate::MULTI_ENUM_MAX {
                        let mut seqs: Vec<Vec<Binding>> = vec![Vec::new()];
                        for _ in 0..k {
                            let mut next = Vec::new();
                            for s in &seqs {
                                for b in &one {
                                    let mut s2 = s.clone();
                                    s2.push(b.clone());
                                    next.push(s2);
                                }
                            }
                            next.truncate(cap);
                            seqs = next;
                        }
                        out.extend(
                            seqs.into_iter()
                                .map(|s| Binding::new().with(*id, Selection::Repeat(s))),
                        );
                        if out.len() >= cap {
                            break;
                        }
                    }
                }
            }
            out.truncate(cap);
            out
        }
    }
}
