use std::cmp::Ordering;
use std::collections::HashMap;

use serde::Serialize;

use crate::sql::{
    check_query, resolve, AggCall, AggFunc, CmpOp, Operand, Predicate, QueryAst, SelectExpr,
};

use super::catalog::{Catalog, Table};
use super::value::{ColumnType, Value};
use super::QueryError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResultColumn {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub columns: Vec<ResultColumn>,
    pub rows: Vec<Vec<Value>>,
}

fn operand<'a>(table: &Table, row: &'a [Value], o: &'a Operand) -> Result<&'a Value, QueryError> {
    match o {
        Operand::Literal(v) => Ok(v),
        Operand::Column(c) => Ok(&row[resolve(table, c)?.0]),
    }
}

fn compare(op: CmpOp, l: &Value, r: &Value) -> bool {
    match op {
        CmpOp::Eq => l == r,
        CmpOp::Ne => l != r,
        _ => {
            let (Some(a), Some(b)) = (l.as_num(), r.as_num()) else {
                return false;
            };
            match op {
                CmpOp::Lt => a < b,
                CmpOp::Gt => a > b,
                CmpOp::Le => a <= b,
                _ => a >= b,
            }
        }
    }
}

fn eval_predicate(table: &Table, row: &[Value], p: &Predicate) -> Result<bool, QueryError> {
    Ok(match p {
        Predicate::Cmp { op, lhs, rhs } => {
            compare(*op, operand(table, row, lhs)?, operand(table, row, rhs)?)
        }
        Predicate::And(a, b) => eval_predicate(table, row, a)? && eval_predicate(table, row, b)?,
        Predicate::Or(a, b) => eval_predicate(table, row, a)? || eval_predicate(table, row, b)?,
        Predicate::Between { column, low, high } => {
            let v = &row[resolve(table, column)?.0];
            compare(CmpOp::Ge, v, low) && compare(CmpOp::Le, v, high)
        }
        Predicate::InList { column, values } => {
            let v = &row[resolve(table, column)?.0];
            values.contains(v)
        }
    })
}

fn aggregate(table: &Table, rows: &[&[Value]], call: &AggCall) -> Result<Value, QueryError> {
    let col = match &call.arg {
        None => return Ok(Value::num(rows.len() as f64)),
        Some(c) => resolve(table, c)?.0,
    };
    let nums = || rows.iter().filter_map(|r| r[col].as_num());
    Ok(Value::num(match call.func {
        AggFunc::Count => rows.len() as f64,
        AggFunc::Sum => nums().sum(),
        AggFunc::Avg => nums().sum::<f64>() / rows.len() as f64,
        AggFunc::Min => nums().fold(f64::INFINITY, f64::min),
        AggFunc::Max => nums().fold(f64::NEG_INFINITY, f64::max),
    }))
}

fn eval_expr(table: &Table, rows: &[&[Value]], e: &SelectExpr) -> Result<Value, QueryError> {
    match e {
        SelectExpr::Column(c) => Ok(rows[0][resolve(table, c)?.0].clone()),
        SelectExpr::Agg(call) => aggregate(table, rows, call),
    }
}

/// Runs a concrete query. Without ORDER BY, rows come in input order
/// (groups by first occurrence); ORDER BY is a stable sort on top.
pub fn execute(q: &QueryAst, catalog: &Catalog) -> Result<ResultTable, QueryError> {
    let schema = check_query(q, catalog)?;
    let table = catalog
        .table(&q.from)
        .ok_or_else(|| QueryError::UnknownTable(q.from.clone()))?;

    let mut kept: Vec<&[Value]> = Vec::new();
    for row in &table.rows {
        let keep = match &q.filter {
            Some(p) => eval_predicate(table, row, p)?,
            None => true,
        };
        if keep {
            kept.push(row);
        }
    }

    // Each output row keeps the input rows it was computed from so that
    // ORDER BY can refer to expressions outside the select list.
    let contexts: Vec<Vec<&[Value]>> = if q.is_aggregate() {
        let keys = q
            .group_by
            .iter()
            .map(|g| resolve(table, g).map(|(i, _)| i))
            .collect::<Result<Vec<_>, _>>()?;
        let mut index: HashMap<Vec<&Value>, usize> = HashMap::new();
        let mut groups: Vec<Vec<&[Value]>> = Vec::new();
        for row in kept {
            let key: Vec<&Value> = keys.iter().map(|&i| &row[i]).collect();
            let slot = *index.entry(key).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[slot].push(row);
        }
        groups
    } else {
        kept.into_iter().map(|r| vec![r]).collect()
    };

    let mut out: Vec<(Vec<Value>, Vec<Value>)> = Vec::with_capacity(contexts.len());
    for ctx in &contexts {
        let row = q
            .select
            .iter()
            .map(|s| eval_expr(table, ctx, &s.expr))
            .collect::<Result<Vec<_>, _>>()?;
        let mut keys = Vec::with_capacity(q.order_by.len());
        for o in &q.order_by {
            let pos = q.select.iter().position(|s| match &o.expr {
                SelectExpr::Column(c) if c.table.is_none() && s.output_name() == c.name => true,
                e => s.expr == *e,
            });
            keys.push(match pos {
                Some(i) => row[i].clone(),
                None => eval_expr(table, ctx, &o.expr)?,
            });
        }
        out.push((row, keys));
    }

    if !q.order_by.is_empty() {
        out.sort_by(|(_, a), (_, b)| {
            for (i, o) in q.order_by.iter().enumerate() {
                let ord = a[i].cmp(&b[i]);
                let ord = if o.descending { ord.reverse() } else { ord };
                if ord != Ordering::Equal {
                    return ord;
                }
            }
            Ordering::Equal
        });
    }
    let mut rows: Vec<Vec<Value>> = out.into_iter().map(|(r, _)| r).collect();
    if let Some(n) = q.limit {
        rows.truncate(usize::try_from(n).unwrap_or(usize::MAX));
    }

    let columns = schema
        .columns
        .into_iter()
        .map(|c| ResultColumn {
            name: c.name.unwrap_or_default(),
            ty: c.ty,
        })
        .collect();
    Ok(ResultTable { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::parse_query;

    fn catalog() -> Catalog {
        let mut c = Catalog::new();
        c.insert(Table::from_csv_reader("T", "p,a,b\n1,1,4\n2,1,5\n2,2,5\n".as_bytes()).unwrap());
        c
    }

    fn run(sql: &str) -> ResultTable {
        execute(&parse_query(sql).unwrap(), &catalog()).unwrap()
    }

    fn nums(rows: &[Vec<Value>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| r.iter().map(|v| v.as_num().unwrap()).collect())
            .collect()
    }

    #[test]
    fn group_by_with_filter() {
        let r = run("SELECT p, count(*) FROM T WHERE a=1 GROUP BY p");
        assert_eq!(nums(&r.rows), vec![vec![1.0, 1.0], vec![2.0, 1.0]]);
        let r = run("SELECT a, count(*) FROM T GROUP BY a");
        assert_eq!(nums(&r.rows), vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert_eq!(r.columns[1].name, "count");
    }

    #[test]
    fn empty_filter_keeps_schema() {
        let r = run("SELECT p, a FROM T WHERE 1 = 0");
        assert!(r.rows.is_empty());
        assert_eq!(r.columns.len(), 2);
        assert!(run("SELECT count(*) FROM T WHERE 1 = 0").rows.is_empty());
    }

    #[test]
    fn aggregates_order_and_limit() {
        let r = run("SELECT b, sum(p), avg(a), min(p), max(a) FROM T GROUP BY b ORDER BY b DESC");
        assert_eq!(
            nums(&r.rows),
            vec![vec![5.0, 4.0, 1.5, 2.0, 2.0], vec![4.0, 1.0, 1.0, 1.0, 1.0]]
        );
        let r = run("SELECT p FROM T ORDER BY b DESC, a LIMIT 2");
        assert_eq!(nums(&r.rows), vec![vec![2.0], vec![2.0]]);
        let r = run("SELECT a, count(*) AS n FROM T GROUP BY a ORDER BY n DESC");
        assert_eq!(nums(&r.rows), vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        let r = run("SELECT a FROM T GROUP BY a ORDER BY count(*)");
        assert_eq!(nums(&r.rows), vec![vec![2.0], vec![1.0]]);
    }

    #[test]
    fn between_in_and_or() {
        let r = run("SELECT p FROM T WHERE b BETWEEN 5 AND 5 AND (a = 2 OR p IN (9))");
        assert_eq!(nums(&r.rows), vec![vec![2.0]]);
    }

    #[test]
    fn type_errors_surface() {
        let mut c = catalog();
        c.insert(Table::from_csv_reader("S", "s\nx\n".as_bytes()).unwrap());
        let q = parse_query("SELECT s FROM S WHERE s < 'y'").unwrap();
        assert!(matches!(execute(&q, &c), Err(QueryError::TypeMismatch(_))));
        let q = parse_query("SELECT zz FROM T").unwrap();
        assert!(matches!(
            execute(&q, &c),
            Err(QueryError::UnknownColumn { .. })
        ));
    }
}
