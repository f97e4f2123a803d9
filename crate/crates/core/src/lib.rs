//! Query-log driven interface generation: relational store, SQL subset,
//! DiffTrees, transformations, interface mapping, cost model and search.

pub mod cost;
pub mod difftree;
pub mod mapping;
pub mod relational;
pub mod search;
pub mod sql;
pub mod transform;
