use std::fmt;

use serde::{Deserialize, Serialize};

use crate::relational::{Catalog, ColumnType};
use crate::sql::{check_query, ResultSchema};

use super::ast::Label;
use super::enumerate::enumerate_queries;
use super::tree::{ChoiceKind, DiffNode, DiffTree};
use super::DiffError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaseType {
    #[serde(rename = "num")]
    Num,
    #[serde(rename = "str")]
    Str,
    #[serde(rename = "AST")]
    Ast,
}

impl From<ColumnType> for BaseType {
    fn from(t: ColumnType) -> Self {
        match t {
            ColumnType::Num => BaseType::Num,
            ColumnType::Str => BaseType::Str,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaExpr {
    Base(BaseType),
    Alt(Vec<SchemaExpr>),
    Opt(Box<SchemaExpr>),
    Star(Box<SchemaExpr>),
}

impl SchemaExpr {
    /// Flattens nested alternation, removes duplicate alternatives and
    /// collapses single-alternative alternation.
    pub fn normalize(&self) -> SchemaExpr {
        match self {
            SchemaExpr::Base(b) => SchemaExpr::Base(*b),
            SchemaExpr::Opt(e) => SchemaExpr::Opt(Box::new(e.normalize())),
            SchemaExpr::Star(e) => SchemaExpr::Star(Box::new(e.normalize())),
            SchemaExpr::Alt(alts) => {
                let mut flat: Vec<SchemaExpr> = Vec::new();
                for a in alts {
                    match a.normalize() {
                        SchemaExpr::Alt(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                let mut out: Vec<SchemaExpr> = Vec::new();
                for e in flat {
                    if !out.contains(&e) {
                        out.push(e);
                    }
                }
                if out.len() == 1 {
                    out.remove(0)
                } else {
                    SchemaExpr::Alt(out)
                }
            }
        }
    }

    pub fn base(&self) -> Option<BaseType> {
        match self {
            SchemaExpr::Base(b) => Some(*b),
            _ => None,
        }
    }
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaseType::Num => "num",
            BaseType::Str => "str",
            BaseType::Ast => "AST",
        })
    }
}

impl fmt::Display for SchemaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrapped = |e: &SchemaExpr| match e {
            SchemaExpr::Alt(_) => format!("({e})"),
            _ => e.to_string(),
        };
        match self {
            SchemaExpr::Base(b) => write!(f, "{b}"),
            SchemaExpr::Alt(alts) => {
                let parts: Vec<String> = alts.iter().map(|a| a.to_string()).collect();
                f.write_str(&parts.join("|"))
            }
            SchemaExpr::Opt(e) => write!(f, "{}?", wrapped(e)),
            SchemaExpr::Star(e) => write!(f, "{}*", wrapped(e)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeSchema {
    pub exprs: Vec<SchemaExpr>,
}

impl NodeSchema {
    pub fn normalize(&self) -> NodeSchema {
        NodeSchema {
            exprs: self.exprs.iter().map(SchemaExpr::normalize).collect(),
        }
    }
}

impl fmt::Display for NodeSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.exprs.iter().map(|e| e.to_string()).collect();
        write!(f, "<{}>", parts.join(","))
    }
}

/// Element type of a choice alternative: the literal's type for literal
/// leaves, `AST` for any other subtree.
fn element(n: &DiffNode) -> SchemaExpr {
    match n {
        DiffNode::Static {
            label: Label::Literal { value },
            children,
        } if children.is_empty() => SchemaExpr::Base(value.column_type().into()),
        _ => SchemaExpr::Base(BaseType::Ast),
    }
}

/// Structural variation described by a dynamic node.
pub fn node_schema(node: &DiffNode) -> Result<NodeSchema, DiffError> {
    let exprs = match node {
        DiffNode::Choice { kind, children, .. } => match kind {
            ChoiceKind::Any => vec![SchemaExpr::Alt(children.iter().map(element).collect())],
            ChoiceKind::Opt => vec![SchemaExpr::Opt(Box::new(element(&children[0])))],
            ChoiceKind::Subset => children
                .iter()
                .map(|c| SchemaExpr::Opt(Box::new(element(c))))
                .collect(),
            ChoiceKind::Multi => vec![SchemaExpr::Star(Box::new(element(&children[0])))],
        },
        DiffNode::Static { children, .. } => {
            if !node.is_dynamic() {
                return Err(DiffError::NotDynamic);
            }
            let mut out = Vec::new();
            for c in children.iter().filter(|c| c.is_dynamic()) {
                out.extend(node_schema(c)?.exprs);
            }
            out
        }
    };
    Ok(NodeSchema { exprs }.normalize())
}

/// Queries inspected when computing a tree's result schema.
pub const SCHEMA_ENUM_CAP: usize = 1024;

/// Union of the result schemas of the tree's queries.
pub fn result_schema(tree: &DiffTree, catalog: &Catalog) -> Result<ResultSchema, DiffError> {
    let e = enumerate_queries(tree, SCHEMA_ENUM_CAP)?;
    let mut acc: Option<ResultSchema> = None;
    for q in &e.queries {
        let s = check_query(q, catalog)?;
        acc = Some(match acc {
            None => s,
            Some(a) => a.union(&s).ok_or_else(|| {
                DiffError::SchemaIncompatible(format!("`{q}` is not union compatible with {a}"))
            })?,
        });
    }
    acc.ok_or(DiffError::EmptyInput)
}
