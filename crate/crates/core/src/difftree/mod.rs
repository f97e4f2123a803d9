//! DiffTrees: query ASTs generalized with ANY/OPT/MULTI/SUBSET choice nodes.

mod ast;
mod binding;
mod enumerate;
mod schema;
mod tree;

pub use ast::{from_ast, to_ast, AstNode, Label};
pub use binding::{bind, expresses, node_bindings, witnesses, Binding, Selection, WITNESS_CAP};

pub(crate) use binding::expand;
pub use enumerate::{enumerate_queries, Enumeration, MULTI_ENUM_MAX};
pub use schema::{node_schema, result_schema, BaseType, NodeSchema, SchemaExpr, SCHEMA_ENUM_CAP};
pub use tree::{
    merge_asts, ChoiceKind, DiffForest, DiffNode, DiffTree, IdGen, NodeId, SerialNode, TreeId,
};

use crate::relational::QueryError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffError {
    #[error("no queries given")]
    EmptyInput,
    #[error("schema incompatible: {0}")]
    SchemaIncompatible(String),
    #[error("node is not dynamic")]
    NotDynamic,
    #[error("binding has no selection for node {0}")]
    IncompleteBinding(NodeId),
    #[error("selection {index} out of range for node {node} with {len} children")]
    IndexOutOfRange {
        node: NodeId,
        index: usize,
        len: usize,
    },
    #[error("selection does not fit {kind} node {node}")]
    WrongSelection { node: NodeId, kind: ChoiceKind },
    #[error("empty subset selected for node {0}")]
    EmptySubset(NodeId),
    #[error("zero repetitions selected for node {0}")]
    EmptyRepeat(NodeId),
    #[error("binding refers to unknown node {0}")]
    UnknownNode(NodeId),
    #[error("malformed tree: {0}")]
    Malformed(String),
    #[error("invalid query: {0}")]
    InvalidAst(String),
    #[error(transparent)]
    Query(#[from] QueryError),
}
