use std::collections::HashSet;

use crate::sql::QueryAst;

use super::ast::{from_ast, AstNode, Label};
use super::tree::{ChoiceKind, DiffNode, DiffTree};
use super::DiffError;

/// Maximum MULTI repetition count explored by enumeration.
pub const MULTI_ENUM_MAX: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    /// Distinct queries in generation order.
    pub queries: Vec<QueryAst>,
    /// More than `cap` queries exist; `queries` holds a prefix.
    pub truncated: bool,
}

struct Acc {
    cap: usize,
    truncated: bool,
}

type Seqs = Vec<Vec<AstNode>>;

impl Acc {
    fn dedup(&mut self, items: Seqs) -> Seqs {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for s in items {
            if seen.insert(s.clone()) {
                out.push(s);
                if out.len() > self.cap {
                    out.pop();
                    self.truncated = true;
                    break;
                }
            }
        }
        out
    }

    fn product(&mut self, parts: &[Seqs], list: bool) -> Seqs {
        let mut acc: Seqs = vec![Vec::new()];
        for part in parts {
            let mut next = Vec::with_capacity(acc.len() * part.len());
            'outer: for a in &acc {
                for p in part {
                    let mut s = a.clone();
                    if list {
                        s.extend(p.iter().filter(|n| !n.is_empty()).cloned());
                    } else {
                        s.extend(p.iter().cloned());
                    }
                    next.push(s);
                    if next.len() > self.cap * 4 {
                        self.truncated = true;
                        break 'outer;
                    }
                }
            }
            acc = self.dedup(next);
        }
        acc
    }

    fn expand(&mut self, node: &DiffNode) -> Seqs {
        match node {
            DiffNode::Static { label, children } => {
                let parts: Vec<Seqs> = children.iter().map(|c| self.expand(c)).collect();
                self.product(&parts, label.is_list())
                    .into_iter()
                    .map(|kids| vec![AstNode::new(label.clone(), kids)])
                    .collect()
            }
            DiffNode::Choice { kind, children, .. } => match kind {
                ChoiceKind::Any => {
                    let all: Seqs = children.iter().flat_map(|c| self.expand(c)).collect();
                    self.dedup(all)
                }
                ChoiceKind::Opt => {
                    let mut all = self.expand(&children[0]);
                    all.push(vec![AstNode::empty()]);
                    self.dedup(all)
                }
                ChoiceKind::Subset => {
                    let parts: Vec<Seqs> = children.iter().map(|c| self.expand(c)).collect();
                    let n = parts.len().min(16);
                    let mut all = Vec::new();
                    for mask in 1u32..(1 << n) {
                        let chosen: Vec<Seqs> = (0..n)
                            .filter(|i| mask & (1 << i) != 0)
                            .map(|i| parts[i].clone())
                            .collect();
                        all.extend(self.product(&chosen, false));
                        if all.len() > self.cap * 4 {
                            self.truncated = true;
                            break;
                        }
                    }
                    self.dedup(all)
                }
                ChoiceKind::Multi => {
                    let one = self.expand(&children[0]);
                    let mut all = Vec::new();
                    for k in 1..=MULTI_ENUM_MAX {
                        let parts = vec![one.clone(); k];
                        all.extend(self.product(&parts, false));
                    }
                    self.dedup(all)
                }
            },
        }
    }
}

/// Distinct concrete queries of `tree`, at most `cap` of them.
pub fn enumerate_queries(tree: &DiffTree, cap: usize) -> Result<Enumeration, DiffError> {
    enumerate_node(&tree.root, cap)
}

pub(crate) fn enumerate_node(root: &DiffNode, cap: usize) -> Result<Enumeration, DiffError> {
    let mut acc = Acc {
        cap: cap.max(1),
        truncated: false,
    };
    let seqs = acc.expand(root);
    let mut queries = Vec::with_capacity(seqs.len());
    let mut seen = HashSet::new();
    for s in seqs {
        if s.len() != 1 || s[0].label != Label::Query {
            return Err(DiffError::InvalidAst(
                "root does not expand to one query".into(),
            ));
        }
        let q = from_ast(&s[0])?;
        if seen.insert(q.clone()) {
            queries.push(q);
        }
    }
    Ok(Enumeration {
        queries,
        truncated: acc.truncated,
    })
}
