//! In-memory tables loaded from CSV, catalog statistics, and execution of
//! concrete queries.

mod catalog;
mod exec;
mod value;

use std::path::PathBuf;

pub use catalog::{
    csv_files, Catalog, Column, ColumnStats, Table, CATEGORICAL_THRESHOLD, DOMAIN_SAMPLE_CAP,
};
pub use exec::{execute, ResultColumn, ResultTable};
pub use value::{parse_decimal, ColumnType, Value};

#[derive(Debug, thiserror::Error)]
pub enum RelationalError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed table `{table}`: {message}")]
    Format { table: String, message: String },
    #[error("table `{0}` has no data rows")]
    EmptyTable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("unknown column `{column}` in table `{table}`")]
    UnknownColumn { table: String, column: String },
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
}
