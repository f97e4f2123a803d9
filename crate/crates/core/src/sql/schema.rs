use std::fmt;

use serde::{Deserialize, Serialize};

use crate::relational::{Catalog, ColumnType, QueryError, Table};

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SchemaColumn {
    pub name: Option<String>,
    pub ty: ColumnType,
}

/// Output columns of a query or DiffTree. `Display` prints the type list
/// only (`<num,num>`); [`ResultSchema::named`] includes names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResultSchema {
    pub columns: Vec<SchemaColumn>,
}

impl ResultSchema {
    pub fn types(&self) -> Vec<ColumnType> {
        self.columns.iter().map(|c| c.ty).collect()
    }

    pub fn union_compatible(&self, other: &ResultSchema) -> bool {
        self.types() == other.types()
    }

    /// Pointwise union: names survive only where both sides agree.
    pub fn union(&self, other: &ResultSchema) -> Option<ResultSchema> {
        if !self.union_compatible(other) {
            return None;
        }
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| SchemaColumn {
                name: if a.name == b.name {
                    a.name.clone()
                } else {
                    None
                },
                ty: a.ty,
            })
            .collect();
        Some(ResultSchema { columns })
    }

    pub fn named(&self) -> String {
        let cols: Vec<String> = self
            .columns
            .iter()
            .map(|c| match &c.name {
                Some(n) => format!("{n}:{}", c.ty),
                None => c.ty.to_string(),
            })
            .collect();
        format!("<{}>", cols.join(","))
    }
}

impl fmt::Display for ResultSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cols: Vec<String> = self.columns.iter().map(|c| c.ty.to_string()).collect();
        write!(f, "<{}>", cols.join(","))
    }
}

pub(crate) fn resolve<'a>(
    table: &'a Table,
    c: &ColumnRef,
) -> Result<(usize, ColumnType), QueryError> {
    if let Some(t) = &c.table {
        if *t != table.name {
            return Err(QueryError::UnknownTable(t.clone()));
        }
    }
    table
        .column_index(&c.name)
        .map(|i| (i, table.columns[i].ty))
        .ok_or_else(|| QueryError::UnknownColumn {
            table: table.name.clone(),
            column: c.name.clone(),
        })
}

fn expr_type(table: &Table, e: &SelectExpr) -> Result<ColumnType, QueryError> {
    match e {
        SelectExpr::Column(c) => Ok(resolve(table, c)?.1),
        SelectExpr::Agg(AggCall { func, arg }) => {
            if let Some(c) = arg {
                let ty = resolve(table, c)?.1;
                if *func != AggFunc::Count && ty != ColumnType::Num {
                    return Err(QueryError::TypeMismatch(format!(
                        "{}() requires a num column, `{}` is {ty}",
                        func.name(),
                        c.name
                    )));
                }
            }
            Ok(ColumnType::Num)
        }
    }
}

fn operand_type(table: &Table, o: &Operand) -> Result<ColumnType, QueryError> {
    match o {
        Operand::Column(c) => Ok(resolve(table, c)?.1),
        Operand::Literal(v) => Ok(v.column_type()),
    }
}

fn check_predicate(table: &Table, p: &Predicate) -> Result<(), QueryError> {
    let mismatch = |m: String| Err(QueryError::TypeMismatch(m));
    match p {
        Predicate::And(a, b) | Predicate::Or(a, b) => {
            check_predicate(table, a)?;
            check_predicate(table, b)
        }
        Predicate::Cmp { op, lhs, rhs } => {
            let (l, r) = (operand_type(table, lhs)?, operand_type(table, rhs)?);
            if op.is_ordering() && (l != ColumnType::Num || r != ColumnType::Num) {
                return mismatch(format!(
                    "`{}` requires num operands, got {l} and {r}",
                    op.symbol()
                ));
            }
            if l != r {
                return mismatch(format!("cannot compare {l} with {r}"));
            }
            Ok(())
        }
        Predicate::Between { column, low, high } => {
            let ty = resolve(table, column)?.1;
            if ty != ColumnType::Num
                || low.column_type() != ColumnType::Num
                || high.column_type() != ColumnType::Num
            {
                return mismatch(format!(
                    "BETWEEN on `{}` requires num operands",
                    column.name
                ));
            }
            Ok(())
        }
        Predicate::InList { column, values } => {
            let ty = resolve(table, column)?.1;
            if let Some(v) = values.iter().find(|v| v.column_type() != ty) {
                return mismatch(format!(
                    "IN list value {v} is {}, column `{}` is {ty}",
                    v.column_type(),
                    column.name
                ));
            }
            Ok(())
        }
    }
}

/// Resolves every reference of `q` against `catalog`, type-checks it and
/// returns its named result schema.
pub fn check_query(q: &QueryAst, catalog: &Catalog) -> Result<ResultSchema, QueryError> {
    let table = catalog
        .table(&q.from)
        .ok_or_else(|| QueryError::UnknownTable(q.from.clone()))?;
    if let Some(p) = &q.filter {
        check_predicate(table, p)?;
    }
    for g in &q.group_by {
        resolve(table, g)?;
    }
    for o in &q.order_by {
        let is_alias = matches!(&o.expr, SelectExpr::Column(c)
            if c.table.is_none() && q.select.iter().any(|s| s.output_name() == c.name));
        if !is_alias {
            expr_type(table, &o.expr)?;
        }
    }
    let columns = q
        .select
        .iter()
        .map(|item| {
            Ok(SchemaColumn {
                name: Some(item.output_name()),
                ty: expr_type(table, &item.expr)?,
            })
        })
        .collect::<Result<_, QueryError>>()?;
    Ok(ResultSchema { columns })
}

pub fn infer_result_schema(q: &QueryAst, catalog: &Catalog) -> Result<ResultSchema, QueryError> {
    check_query(q, catalog)
}

#[cfg(test)]
mod tests {
    use super::super::parse_query;
    use super::*;
    use crate::relational::Table;

    fn catalog() -> Catalog {
        let mut c = Catalog::new();
        c.insert(
            Table::from_csv_reader("T", "p,a,b,name\n1,1,4,x\n2,1,5,y\n2,2,5,z\n".as_bytes())
                .unwrap(),
        );
        c
    }

    fn schema(sql: &str) -> Result<ResultSchema, QueryError> {
        infer_result_schema(&parse_query(sql).unwrap(), &catalog())
    }

    #[test]
    fn running_example_schemas() {
        let s = schema("SELECT p, count(*) FROM T WHERE a=1 GROUP BY p").unwrap();
        assert_eq!(s.named(), "<p:num,count:num>");
        assert_eq!(s.to_string(), "<num,num>");
        let s = schema("SELECT a, count(*) FROM T GROUP BY a").unwrap();
        assert_eq!(s.named(), "<a:num,count:num>");
        assert_eq!(schema("SELECT name FROM T").unwrap().named(), "<name:str>");
    }

    #[test]
    fn errors() {
        assert!(matches!(
            schema("SELECT q FROM T"),
            Err(QueryError::UnknownColumn { .. })
        ));
        assert!(matches!(
            schema("SELECT q FROM U"),
            Err(QueryError::UnknownTable(_))
        ));
        assert!(matches!(
            schema("SELECT sum(name) FROM T"),
            Err(QueryError::TypeMismatch(_))
        ));
        assert!(matches!(
            schema("SELECT p FROM T WHERE name < 'a'"),
            Err(QueryError::TypeMismatch(_))
        ));
        assert!(matches!(
            schema("SELECT p FROM T WHERE name = 1"),
            Err(QueryError::TypeMismatch(_))
        ));
        assert!(matches!(
            schema("SELECT p FROM T WHERE p IN (1, 'x')"),
            Err(QueryError::TypeMismatch(_))
        ));
        assert!(matches!(
            schema("SELECT U.p FROM T"),
            Err(QueryError::UnknownTable(_))
        ));
    }

    #[test]
    fn union_drops_disagreeing_names() {
        let a = schema("SELECT p, count(*) FROM T GROUP BY p").unwrap();
        let b = schema("SELECT a, count(*) FROM T GROUP BY a").unwrap();
        let u = a.union(&b).unwrap();
        assert_eq!(u.named(), "<num,count:num>");
        assert_eq!(u.to_string(), "<num,num>");
        assert!(a.union(&schema("SELECT name FROM T").unwrap()).is_none());
    }
}
