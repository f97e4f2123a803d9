//! The supported SQL subset: typed AST, parser, canonical renderer, schema
//! inference and query-log reading.

pub mod ast;
mod log;
mod parser;
mod render;
mod schema;

pub use ast::*;
pub use log::{parse_log, LoggedQuery};
pub use parser::parse_query;
pub use render::{ident, render_column, render_expr, render_literal, render_predicate, render_sql};
pub use schema::{check_query, infer_result_schema, ResultSchema, SchemaColumn};

pub(crate) use schema::resolve;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        message: String,
        line: usize,
        column: usize,
    },
    #[error("unsupported feature `{feature}` at {line}:{column}")]
    Unsupported {
        feature: String,
        line: usize,
        column: usize,
    },
    #[error("{0}")]
    Invalid(String),
}

impl ParseError {
    /// Re-bases a position relative to a fragment that starts at
    /// `line:column` of a larger text.
    pub fn shifted(self, line: usize, column: usize) -> Self {
        let shift = |l: usize, c: usize| {
            if l == 1 {
                (line, column + c - 1)
            } else {
                (line + l - 1, c)
            }
        };
        match self {
            ParseError::Syntax {
                message,
                line: l,
                column: c,
            } => {
                let (line, column) = shift(l, c);
                ParseError::Syntax {
                    message,
                    line,
                    column,
                }
            }
            ParseError::Unsupported {
                feature,
                line: l,
                column: c,
            } => {
                let (line, column) = shift(l, c);
                ParseError::Unsupported {
                    feature,
                    line,
                    column,
                }
            }
            other => other,
        }
    }

    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            ParseError::Syntax { line, column, .. }
            | ParseError::Unsupported { line, column, .. } => Some((*line, *column)),
            ParseError::Invalid(_) => None,
        }
    }
}
