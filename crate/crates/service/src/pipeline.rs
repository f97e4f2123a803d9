//! Parse, search, re-validate, and serve. Shared by the CLI and the HTTP
//! handlers.

use serde::Serialize;
use vizgen_core::cost::CostParams;
use vizgen_core::difftree::{bind, expresses, Binding, DiffError, TreeId};
use vizgen_core::mapping::{validate_spec, InterfaceSpec, Invalid};
use vizgen_core::relational::{execute, Catalog, ResultColumn, Value};
use vizgen_core::search::{search, SearchConfig, SearchError, SearchResult};
use vizgen_core::sql::{parse_query, render_sql, ParseError, QueryAst};

#[derive(Debug, Clone, thiserror::Error)]
pub enum PipelineError {
    #[error("query {index}: {error}")]
    Parse { index: usize, error: ParseError },
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Invalid(#[from] Invalid),
    #[error("generated interface does not express query {0}")]
    NotExpressed(usize),
}

pub fn parse_queries(texts: &[String]) -> Result<Vec<QueryAst>, PipelineError> {
    texts
        .iter()
        .enumerate()
        .map(|(index, t)| parse_query(t).map_err(|error| PipelineError::Parse { index, error }))
        .collect()
}

/// Runs the search and re-checks the result before it is handed out.
pub fn generate(
    log: &[QueryAst],
    catalog: &Catalog,
    params: &CostParams,
    config: &SearchConfig,
) -> Result<SearchResult, PipelineError> {
    let result = search(log, catalog, params, config)?;
    validate_spec(&result.spec, catalog)?;
    if let Some(i) = log.iter().position(|q| {
        !result
            .spec
            .forest
            .trees
            .iter()
            .any(|t| expresses(t, q).is_some())
    }) {
        return Err(PipelineError::NotExpressed(i));
    }
    Ok(result)
}

#[derive(Debug, Clone, Serialize)]
pub struct Executed {
    pub columns: Vec<ResultColumn>,
    pub rows: Vec<Vec<Value>>,
    pub sql: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BindError {
    #[error("interface has no tree {0}")]
    UnknownTree(TreeId),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

pub fn bound_query(
    spec: &InterfaceSpec,
    tree: TreeId,
    binding: &Binding,
) -> Result<QueryAst, BindError> {
    let t = spec.forest.tree(tree).ok_or(BindError::UnknownTree(tree))?;
    Ok(bind(t, binding)?)
}

pub fn execute_tree(
    spec: &InterfaceSpec,
    tree: TreeId,
    binding: &Binding,
    catalog: &Catalog,
) -> Result<Executed, BindError> {
    let q = bound_query(spec, tree, binding)?;
    let table = execute(&q, catalog).map_err(DiffError::from)?;
    Ok(Executed {
        columns: table.columns,
        rows: table.rows,
        sql: render_sql(&q),
    })
}

/// Current query of every tree, one per line in tree order.
pub fn export_sql(
    spec: &InterfaceSpec,
    bindings: &std::collections::BTreeMap<TreeId, Binding>,
) -> Result<String, BindError> {
    let mut lines = Vec::new();
    for t in &spec.forest.trees {
        let b = bindings
            .get(&t.id)
            .or_else(|| spec.defaults.get(&t.id))
            .cloned()
            .unwrap_or_default();
        lines.push(render_sql(&bound_query(spec, t.id, &b)?));
    }
    Ok(lines.join("\n"))
}
